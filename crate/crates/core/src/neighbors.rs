//! Spatial index over a sample cloud: fixed-radius queries (closed ball)
//! and k-th neighbor distances, in the ambient Euclidean metric.
//!
//! A median-split k-d tree over the ambient coordinates, built
//! deterministically (widest spread dimension, ties broken by point index).
//! Clouds smaller than 256 points fall back to brute-force scans, where the
//! tree bookkeeping costs more than it saves.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};
use crate::geom::{self, Point};
use crate::sampling::SampleCloud;

const BRUTE_FORCE_BELOW: usize = 256;
const DEFAULT_LEAF_SIZE: usize = 32;

#[derive(Debug, Clone)]
enum Node {
    Split {
        dim: usize,
        value: f64,
        left: u32,
        right: u32,
    },
    Leaf {
        start: u32,
        end: u32,
    },
}

/// Immutable neighbor index over a cloud's points.
#[derive(Debug, Clone)]
pub struct NeighborIndex<'a> {
    points: &'a [Point],
    nodes: Vec<Node>,
    order: Vec<u32>,
    brute_force: bool,
}

impl<'a> NeighborIndex<'a> {
    pub fn build(cloud: &'a SampleCloud) -> Self {
        Self::build_with_leaf_size(cloud, DEFAULT_LEAF_SIZE)
    }

    pub fn build_with_leaf_size(cloud: &'a SampleCloud, leaf_size: usize) -> Self {
        Self::over_points(
            &cloud.points,
            cloud.manifold.ambient_dim(),
            leaf_size.max(1),
        )
    }

    /// Index over a raw point slice (testing and oracle comparisons).
    pub fn over_points(points: &'a [Point], active_dims: usize, leaf_size: usize) -> Self {
        let n = points.len();
        let mut order: Vec<u32> = (0..n as u32).collect();
        let mut index = NeighborIndex {
            points,
            nodes: Vec::new(),
            order: Vec::new(),
            brute_force: n < BRUTE_FORCE_BELOW,
        };
        if !index.brute_force {
            index.nodes.reserve(2 * n / leaf_size + 2);
            build_recursive(points, active_dims, leaf_size, &mut order, 0, &mut index.nodes);
        }
        index.order = order;
        index
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Indices of all points within the closed ball of radius `r` around
    /// `x`, in increasing index order.
    pub fn range_query(&self, x: &Point, r: f64) -> Result<Vec<usize>> {
        if r < 0.0 {
            return Err(Error::domain(format!("radius must be >= 0, got {r}")));
        }
        // compare in distance units so that the k-th neighbor radius
        // returned by `knn_radius` includes its own point exactly
        let mut out = Vec::new();
        if self.brute_force {
            for (i, p) in self.points.iter().enumerate() {
                if geom::dist(x, p) <= r {
                    out.push(i);
                }
            }
            return Ok(out);
        }
        self.range_rec(0, x, r, &mut out);
        out.sort_unstable();
        Ok(out)
    }

    fn range_rec(&self, node: u32, x: &Point, r: f64, out: &mut Vec<usize>) {
        match self.nodes[node as usize] {
            Node::Leaf { start, end } => {
                for &i in &self.order[start as usize..end as usize] {
                    if geom::dist(x, &self.points[i as usize]) <= r {
                        out.push(i as usize);
                    }
                }
            }
            Node::Split {
                dim,
                value,
                left,
                right,
            } => {
                let delta = x[dim] - value;
                if delta <= r {
                    self.range_rec(left, x, r, out);
                }
                if -delta <= r {
                    self.range_rec(right, x, r, out);
                }
            }
        }
    }

    /// Distance from `x` to its k-th nearest sample point (k-th order
    /// statistic of the distances; a coincident sample point counts with
    /// distance zero).
    pub fn knn_radius(&self, x: &Point, k: usize) -> Result<f64> {
        let n = self.len();
        if k == 0 || k > n {
            return Err(Error::domain(format!(
                "k must satisfy 1 <= k <= n = {n}, got {k}"
            )));
        }
        let mut heap: BinaryHeap<OrderedDist> = BinaryHeap::with_capacity(k + 1);
        if self.brute_force {
            for p in self.points {
                push_candidate(&mut heap, k, geom::dist2(x, p));
            }
        } else {
            self.knn_rec(0, x, k, &mut heap);
        }
        Ok(heap.peek().expect("k >= 1").0.sqrt())
    }

    fn knn_rec(&self, node: u32, x: &Point, k: usize, heap: &mut BinaryHeap<OrderedDist>) {
        match self.nodes[node as usize] {
            Node::Leaf { start, end } => {
                for &i in &self.order[start as usize..end as usize] {
                    push_candidate(heap, k, geom::dist2(x, &self.points[i as usize]));
                }
            }
            Node::Split {
                dim,
                value,
                left,
                right,
            } => {
                let delta = x[dim] - value;
                let (near, far) = if delta <= 0.0 { (left, right) } else { (right, left) };
                self.knn_rec(near, x, k, heap);
                let worst = if heap.len() < k {
                    f64::INFINITY
                } else {
                    heap.peek().unwrap().0
                };
                if delta * delta <= worst {
                    self.knn_rec(far, x, k, heap);
                }
            }
        }
    }
}

fn push_candidate(heap: &mut BinaryHeap<OrderedDist>, k: usize, d2: f64) {
    if heap.len() < k {
        heap.push(OrderedDist(d2));
    } else if d2 < heap.peek().unwrap().0 {
        heap.push(OrderedDist(d2));
        heap.pop();
    }
}

fn build_recursive(
    points: &[Point],
    active_dims: usize,
    leaf_size: usize,
    order: &mut [u32],
    offset: u32,
    nodes: &mut Vec<Node>,
) -> u32 {
    let id = nodes.len() as u32;
    if order.len() <= leaf_size {
        nodes.push(Node::Leaf {
            start: offset,
            end: offset + order.len() as u32,
        });
        return id;
    }
    // widest-spread dimension
    let mut best_dim = 0;
    let mut best_spread = -1.0;
    #[allow(clippy::needless_range_loop)]
    for dim in 0..active_dims {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for &i in order.iter() {
            let c = points[i as usize][dim];
            lo = lo.min(c);
            hi = hi.max(c);
        }
        if hi - lo > best_spread {
            best_spread = hi - lo;
            best_dim = dim;
        }
    }
    let mid = order.len() / 2;
    order.select_nth_unstable_by(mid, |&a, &b| {
        points[a as usize][best_dim]
            .total_cmp(&points[b as usize][best_dim])
            .then(a.cmp(&b))
    });
    let split_value = points[order[mid] as usize][best_dim];
    nodes.push(Node::Split {
        dim: best_dim,
        value: split_value,
        left: 0,
        right: 0,
    });
    let (lo_half, hi_half) = order.split_at_mut(mid);
    let left = build_recursive(points, active_dims, leaf_size, lo_half, offset, nodes);
    let right = build_recursive(
        points,
        active_dims,
        leaf_size,
        hi_half,
        offset + mid as u32,
        nodes,
    );
    if let Node::Split {
        left: l, right: r, ..
    } = &mut nodes[id as usize]
    {
        *l = left;
        *r = right;
    }
    id
}

#[derive(PartialEq)]
struct OrderedDist(f64);

impl Eq for OrderedDist {}

impl PartialOrd for OrderedDist {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for OrderedDist {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.total_cmp(&other.0)
    }
}

/// Brute-force reference implementations used as test oracles.
pub mod oracle {
    use super::*;

    pub fn range_query(points: &[Point], x: &Point, r: f64) -> Vec<usize> {
        points
            .iter()
            .enumerate()
            .filter(|(_, p)| geom::dist(x, p) <= r)
            .map(|(i, _)| i)
            .collect()
    }

    pub fn knn_radius(points: &[Point], x: &Point, k: usize) -> f64 {
        let mut d: Vec<f64> = points.iter().map(|p| geom::dist(x, p)).collect();
        d.sort_by(f64::total_cmp);
        d[k - 1]
    }
}
