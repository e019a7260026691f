//! Estimators and their deterministic counterparts.
//!
//! Random estimators over a sample cloud:
//! - [`graph_laplacian`]: the rescaled random-walk generator
//!   `(1/(n h^{d+2})) sum_i K(|x - X_i|/h) (f(X_i) - f(x))`;
//! - [`knn_laplacian`]: the same with the indicator kernel and the per-point
//!   random bandwidth `R_{n,k}(x)`, the k-th neighbor distance.
//!
//! Deterministic kernel averages of the sampling measure:
//! - [`deterministic_operator_chord`] uses the ambient distance in the
//!   kernel argument;
//! - [`deterministic_operator_geodesic`] uses the intrinsic distance.
//!
//! The deterministic integrals are evaluated in normal coordinates around
//! the base point by product quadrature (Gauss-Legendre radially, lattice or
//! product rules angularly), with radial panels split exactly at the kernel
//! jump radii. On the torus the chord variant substitutes the per-factor
//! chord lengths as integration variables, which makes the kernel argument
//! radial again and keeps jumps on spherical shells. Every value is computed
//! at two refinement levels; disagreement beyond tolerance is an error, not
//! a silent inaccuracy.

use rayon::prelude::*;
use serde::Serialize;
use std::io::Write;

use crate::error::{Error, Result};
use crate::geom::{self, KahanSum, Point};
use crate::kernels::Kernel;
use crate::manifolds::{Density, Manifold, TestFunction};
use crate::neighbors::NeighborIndex;
use crate::quad::{panels, GaussLegendre};
use crate::sampling::SampleCloud;

/// Truncation radius, in units of `h`, for graph-Laplacian range queries
/// with the Gaussian kernel: `exp(-64)` is below every tolerance in use.
pub const GAUSSIAN_GRAPH_TRUNCATION: f64 = 8.0;

/// Truncation, in units of `h`, of the deterministic integrals for kernels
/// without compact support (`exp(-144)` tail).
pub const GAUSSIAN_DETERMINISTIC_TRUNCATION: f64 = 12.0;

/// Which distance feeds the kernel argument.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DistanceKind {
    Geodesic,
    Chord,
}

/// Bandwidth provenance of an operator field.
#[derive(Debug, Clone, Copy, Serialize, PartialEq)]
#[serde(untagged)]
pub enum Bandwidth {
    Width(f64),
    Neighbors(usize),
}

impl std::fmt::Display for Bandwidth {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Bandwidth::Width(h) => write!(f, "{h}"),
            Bandwidth::Neighbors(k) => write!(f, "{k}"),
        }
    }
}

/// Evaluated operator values with full provenance.
#[derive(Debug, Clone, Serialize)]
pub struct OperatorField {
    pub points: Vec<Point>,
    pub values: Vec<f64>,
    pub operator: String,
    pub kernel: String,
    pub bandwidth: Bandwidth,
    pub n: usize,
    pub seed: u64,
    pub f_id: String,
    pub density_id: String,
}

impl OperatorField {
    /// CSV rows `(x coordinates, value, operator, h_or_k, n, seed)` with
    /// provenance comments. Floats use the shortest round-trip form.
    pub fn write_csv<W: Write>(&self, ambient_dim: usize, mut w: W) -> Result<()> {
        writeln!(w, "# f: {}", self.f_id)?;
        writeln!(w, "# density: {}", self.density_id)?;
        writeln!(w, "# kernel: {}", self.kernel)?;
        let mut header: Vec<String> = (0..ambient_dim).map(|i| format!("x{i}")).collect();
        header.extend(
            ["value", "operator", "h_or_k", "n", "seed"]
                .iter()
                .map(|s| s.to_string()),
        );
        writeln!(w, "{}", header.join(","))?;
        for (pt, v) in self.points.iter().zip(&self.values) {
            let mut row: Vec<String> = pt.iter().take(ambient_dim).map(|c| format!("{c}")).collect();
            row.push(format!("{v}"));
            row.push(self.operator.clone());
            row.push(self.bandwidth.to_string());
            row.push(self.n.to_string());
            row.push(self.seed.to_string());
            writeln!(w, "{}", row.join(","))?;
        }
        Ok(())
    }
}

/// Graph Laplacian of the cloud at bandwidth `h`, evaluated at `xs`.
///
/// Compact-support kernels query the index at `h * support`; the Gaussian is
/// truncated at [`GAUSSIAN_GRAPH_TRUNCATION`] times `h`. Sums run in index
/// order with compensated accumulation.
pub fn graph_laplacian(
    cloud: &SampleCloud,
    index: &NeighborIndex<'_>,
    kernel: &Kernel,
    h: f64,
    f: &TestFunction,
    xs: &[Point],
) -> Result<OperatorField> {
    if !(h > 0.0) {
        return Err(Error::domain(format!("bandwidth must be positive, got {h}")));
    }
    let d = cloud.manifold.intrinsic_dim();
    let n = cloud.n();
    let query_radius = h * kernel.support_radius().unwrap_or(GAUSSIAN_GRAPH_TRUNCATION);
    let scale = 1.0 / (n as f64 * h.powi(d as i32 + 2));
    let values: Result<Vec<f64>> = xs
        .par_iter()
        .map(|x| {
            let fx = f.value(x);
            let mut sum = KahanSum::new();
            for i in index.range_query(x, query_radius)? {
                let xi = &cloud.points[i];
                let w = kernel.value(geom::dist(x, xi) / h);
                sum.add(w * (f.value(xi) - fx));
            }
            Ok(sum.value() * scale)
        })
        .collect();
    Ok(OperatorField {
        points: xs.to_vec(),
        values: values?,
        operator: "graph_laplacian".into(),
        kernel: kernel.name().into(),
        bandwidth: Bandwidth::Width(h),
        n,
        seed: cloud.seed,
        f_id: f.id(),
        density_id: cloud.density_id.clone(),
    })
}

/// kNN-graph Laplacian at `xs`: the indicator-kernel estimator with the
/// per-point bandwidth `R_{n,k}(x)`, boundary included so the k-th neighbor
/// always contributes.
pub fn knn_laplacian(
    cloud: &SampleCloud,
    index: &NeighborIndex<'_>,
    k: usize,
    f: &TestFunction,
    xs: &[Point],
) -> Result<OperatorField> {
    let n = cloud.n();
    if k == 0 || k > n {
        return Err(Error::domain(format!(
            "neighbor count must satisfy 1 <= k <= n = {n}, got {k}"
        )));
    }
    let d = cloud.manifold.intrinsic_dim();
    let values: Result<Vec<f64>> = xs
        .par_iter()
        .enumerate()
        .map(|(xi_idx, x)| {
            let radius = index.knn_radius(x, k)?;
            if radius == 0.0 {
                return Err(Error::DegeneratePoint { index: xi_idx });
            }
            let fx = f.value(x);
            let mut sum = KahanSum::new();
            for i in index.range_query(x, radius)? {
                sum.add(f.value(&cloud.points[i]) - fx);
            }
            Ok(sum.value() / (n as f64 * radius.powi(d as i32 + 2)))
        })
        .collect();
    Ok(OperatorField {
        points: xs.to_vec(),
        values: values?,
        operator: "knn_laplacian".into(),
        kernel: "indicator".into(),
        bandwidth: Bandwidth::Neighbors(k),
        n,
        seed: cloud.seed,
        f_id: f.id(),
        density_id: cloud.density_id.clone(),
    })
}

/// Node counts for the deterministic quadratures; `refined` doubles both.
#[derive(Debug, Clone, Copy)]
pub struct QuadratureSettings {
    pub radial: usize,
    pub angular: usize,
}

impl Default for QuadratureSettings {
    fn default() -> Self {
        Self {
            radial: 64,
            angular: 128,
        }
    }
}

impl QuadratureSettings {
    fn refined(&self) -> Self {
        Self {
            radial: 2 * self.radial,
            angular: 2 * self.angular,
        }
    }
}

/// Deterministic kernel average with the ambient (chord) distance in the
/// kernel argument.
pub fn deterministic_operator_chord(
    m: &Manifold,
    p: &Density,
    kernel: &Kernel,
    h: f64,
    f: &TestFunction,
    x: &Point,
    settings: QuadratureSettings,
) -> Result<f64> {
    let fx = f.value(x);
    kernel_average(m, kernel, h, x, DistanceKind::Chord, settings, &|y, _, _| {
        (f.value(y) - fx) * p.value(m, y)
    })
}

/// Deterministic kernel average with the geodesic distance in the kernel
/// argument.
pub fn deterministic_operator_geodesic(
    m: &Manifold,
    p: &Density,
    kernel: &Kernel,
    h: f64,
    f: &TestFunction,
    x: &Point,
    settings: QuadratureSettings,
) -> Result<f64> {
    let fx = f.value(x);
    kernel_average(m, kernel, h, x, DistanceKind::Geodesic, settings, &|y, _, _| {
        (f.value(y) - fx) * p.value(m, y)
    })
}

/// Weighted kernel moment
/// `(1/h^{d+2}) int_M K(dist/h) |x - y|^power mu(dy)` against the volume
/// measure.
pub fn weighted_moment_integral(
    m: &Manifold,
    kernel: &Kernel,
    h: f64,
    x: &Point,
    dist: DistanceKind,
    power: i32,
    settings: QuadratureSettings,
) -> Result<f64> {
    kernel_average(m, kernel, h, x, dist, settings, &|_, _, chord| chord.powi(power))
}

/// Far-tail mass `(1/h^{d+2}) int_{rho(x, y) >= c1} K(dist/h) mu(dy)`.
///
/// Exactly zero whenever the kernel support cannot reach the far region;
/// otherwise integrated over the complement region directly.
pub fn far_tail_integral(
    m: &Manifold,
    kernel: &Kernel,
    h: f64,
    // catalog manifolds are homogeneous: the integral is the same at every x
    _x: &Point,
    dist: DistanceKind,
) -> Result<f64> {
    let c1 = m.normal_radius();
    let d = m.intrinsic_dim() as i32;
    if let Some(support) = kernel.support_radius() {
        // smallest distance (in the kernel's argument) to the far region
        let reach = match dist {
            DistanceKind::Geodesic => c1,
            // chord <= rho, but chord >= (2/pi) rho on the catalog
            DistanceKind::Chord => match m.isotropic_chord(c1) {
                Some(ch) => ch,
                None => 2.0 / std::f64::consts::PI * c1,
            },
        };
        if support * h <= reach {
            return Ok(0.0);
        }
    }
    let scale = 1.0 / h.powi(d + 2);
    match *m {
        Manifold::Sphere { dim, radius } => {
            // one-dimensional radial integral over rho in [c1, pi R]
            let s_vol = crate::special::unit_sphere_volume(dim);
            let rule = GaussLegendre::new(256);
            let hi = std::f64::consts::PI * radius;
            let mut breaks: Vec<f64> = Vec::new();
            for a in kernel.jump_radii() {
                match dist {
                    DistanceKind::Geodesic => breaks.push(a * h),
                    DistanceKind::Chord => {
                        if let Some(rho) = m.geodesic_of_chord(a * h) {
                            breaks.push(rho);
                        }
                    }
                }
            }
            let mut acc = 0.0;
            for w in panels(c1, hi, &breaks).windows(2) {
                acc += rule.integrate(w[0], w[1], |rho| {
                    let arg = match dist {
                        DistanceKind::Geodesic => rho,
                        DistanceKind::Chord => m.isotropic_chord(rho).unwrap(),
                    };
                    let ring = if dim == 1 {
                        // two antipodal arcs
                        2.0 / s_vol
                    } else {
                        (radius * (rho / radius).sin()).powi(dim as i32 - 1)
                    };
                    kernel.value(arg / h) * s_vol * ring
                });
            }
            Ok(acc * scale)
        }
        Manifold::FlatTorus { r1, r2 } => {
            // lattice over relative angles; far-tail values are tiny and the
            // indicator boundary needs no special care at this accuracy
            let nlat = 512;
            let step = std::f64::consts::TAU / nlat as f64;
            let mut acc = 0.0;
            for i in 0..nlat {
                let a = -std::f64::consts::PI + step * (i as f64 + 0.5);
                for j in 0..nlat {
                    let b = -std::f64::consts::PI + step * (j as f64 + 0.5);
                    let rho = ((r1 * a).powi(2) + (r2 * b).powi(2)).sqrt();
                    if rho < c1 {
                        continue;
                    }
                    let arg = match dist {
                        DistanceKind::Geodesic => rho,
                        DistanceKind::Chord => {
                            let c1_len = 2.0 * r1 * (a / 2.0).sin();
                            let c2_len = 2.0 * r2 * (b / 2.0).sin();
                            (c1_len * c1_len + c2_len * c2_len).sqrt()
                        }
                    };
                    acc += kernel.value(arg / h);
                }
            }
            Ok(acc * step * step * r1 * r2 * scale)
        }
    }
}

/// Two-level agreement test for the deterministic quadratures: relative
/// 1e-4 with a small absolute floor for values near zero.
fn quadrature_converged(coarse: f64, fine: f64) -> bool {
    let tol = (1e-4 * coarse.abs().max(fine.abs())).max(1e-7);
    (fine - coarse).abs() <= tol
}

/// Core polar quadrature:
/// `(1/h^{d+2}) int K(dist(x,y)/h) factor(y, rho, chord) mu(dy)` over the
/// kernel-supported neighborhood of `x`, truncated at the normal-coordinate
/// radius for the geodesic variants.
fn kernel_average(
    m: &Manifold,
    kernel: &Kernel,
    h: f64,
    x: &Point,
    dist: DistanceKind,
    settings: QuadratureSettings,
    factor: &(dyn Fn(&Point, f64, f64) -> f64 + Sync),
) -> Result<f64> {
    if !(h > 0.0) {
        return Err(Error::domain(format!("bandwidth must be positive, got {h}")));
    }
    m.check_on_manifold(x)?;
    let coarse = kernel_average_level(m, kernel, h, x, dist, settings, factor);
    let fine = kernel_average_level(m, kernel, h, x, dist, settings.refined(), factor);
    if !quadrature_converged(coarse, fine) {
        return Err(Error::QuadratureNonconvergence(format!(
            "levels ({}, {}) radial x ({}, {}) angular gave {coarse} vs {fine} \
             (manifold {}, kernel {}, h = {h}, {dist:?})",
            settings.radial,
            settings.refined().radial,
            settings.angular,
            settings.refined().angular,
            m.name(),
            kernel.name(),
        )));
    }
    Ok(fine)
}

fn kernel_average_level(
    m: &Manifold,
    kernel: &Kernel,
    h: f64,
    x: &Point,
    dist: DistanceKind,
    settings: QuadratureSettings,
    factor: &(dyn Fn(&Point, f64, f64) -> f64 + Sync),
) -> f64 {
    let d = m.intrinsic_dim();
    let trunc = kernel
        .support_radius()
        .unwrap_or(GAUSSIAN_DETERMINISTIC_TRUNCATION);
    let c1 = m.normal_radius();
    let frame = m.tangent_frame(x);
    let rule = GaussLegendre::new(settings.radial);

    // radial domain and breakpoints in the radial variable
    let torus_chord = matches!(m, Manifold::FlatTorus { .. }) && dist == DistanceKind::Chord;
    let (rmax, breaks): (f64, Vec<f64>) = if torus_chord {
        // radial variable is the chord; the u-chart covers the whole torus
        let (r1, r2) = match *m {
            Manifold::FlatTorus { r1, r2 } => (r1, r2),
            _ => unreachable!(),
        };
        let box_radius = 2.0 * (r1 * r1 + r2 * r2).sqrt();
        (
            (trunc * h).min(box_radius),
            kernel.jump_radii().iter().map(|a| a * h).collect(),
        )
    } else {
        match dist {
            DistanceKind::Geodesic => (
                c1.min(trunc * h),
                kernel.jump_radii().iter().map(|a| a * h).collect(),
            ),
            DistanceKind::Chord => {
                // map the chord support back to a geodesic radius
                let chord_cap = (trunc * h).min(m.diameter_chord());
                let rmax = c1.min(m.geodesic_of_chord(chord_cap).unwrap());
                let breaks = kernel
                    .jump_radii()
                    .iter()
                    .filter_map(|a| m.geodesic_of_chord(a * h))
                    .collect();
                (rmax, breaks)
            }
        }
    };
    let edges = panels(0.0, rmax, &breaks);

    let mut total = KahanSum::new();
    for (dir, w_ang) in angular_rule(d, settings.angular) {
        // per-direction radial cap (torus chord chart is a box in u)
        let dir_cap = if torus_chord {
            let (r1, r2) = match *m {
                Manifold::FlatTorus { r1, r2 } => (r1, r2),
                _ => unreachable!(),
            };
            let mut cap = rmax;
            if dir[0].abs() > 1e-300 {
                cap = cap.min(2.0 * r1 / dir[0].abs());
            }
            if dir[1].abs() > 1e-300 {
                cap = cap.min(2.0 * r2 / dir[1].abs());
            }
            cap
        } else {
            rmax
        };
        for win in edges.windows(2) {
            let (lo, hi) = (win[0], win[1].min(dir_cap));
            if hi <= lo {
                break;
            }
            let piece = rule.integrate(lo, hi, |r| {
                let (y, rho, chord, jac) = if torus_chord {
                    torus_chord_chart(m, x, r, &dir)
                } else {
                    let v = [r * dir[0], r * dir[1], r * dir[2]];
                    let y = m.exp_map_unchecked(x, &frame, &v);
                    let chord = match dist {
                        DistanceKind::Chord => m.isotropic_chord(r).unwrap_or_else(|| geom::dist(x, &y)),
                        DistanceKind::Geodesic => geom::dist(x, &y),
                    };
                    (y, r, chord, m.metric_det_normal_unchecked(r))
                };
                let arg = match dist {
                    DistanceKind::Geodesic => rho,
                    DistanceKind::Chord => chord,
                };
                kernel.value(arg / h) * factor(&y, rho, chord) * jac * r.powi(d as i32 - 1)
            });
            total.add(piece * w_ang);
        }
    }
    total.value() / h.powi(d as i32 + 2)
}

/// Point, geodesic distance, chord and chart Jacobian for the torus chord
/// chart: `u_i = 2 r_i sin(dtheta_i / 2)` per factor, radius `r` along `dir`.
fn torus_chord_chart(m: &Manifold, x: &Point, r: f64, dir: &[f64; 3]) -> (Point, f64, f64, f64) {
    let (r1, r2) = match *m {
        Manifold::FlatTorus { r1, r2 } => (r1, r2),
        _ => unreachable!(),
    };
    let u = [r * dir[0], r * dir[1]];
    let s1 = (u[0] / (2.0 * r1)).clamp(-1.0, 1.0);
    let s2 = (u[1] / (2.0 * r2)).clamp(-1.0, 1.0);
    let dt1 = 2.0 * s1.asin();
    let dt2 = 2.0 * s2.asin();
    let (c1a, s1a) = (dt1.cos(), dt1.sin());
    let (c2a, s2a) = (dt2.cos(), dt2.sin());
    let y: Point = [
        x[0] * c1a - x[1] * s1a,
        x[0] * s1a + x[1] * c1a,
        x[2] * c2a - x[3] * s2a,
        x[2] * s2a + x[3] * c2a,
    ];
    let rho = ((r1 * dt1).powi(2) + (r2 * dt2).powi(2)).sqrt();
    let jac = (2.0 * r1 / (4.0 * r1 * r1 - u[0] * u[0]).max(1e-300).sqrt())
        * (2.0 * r2 / (4.0 * r2 * r2 - u[1] * u[1]).max(1e-300).sqrt());
    (y, rho, r, jac)
}

/// Directions (as tangent coefficients) and weights integrating over the
/// unit sphere `S^{d-1}` of the coefficient space.
fn angular_rule(d: usize, angular: usize) -> Vec<([f64; 3], f64)> {
    match d {
        1 => vec![([1.0, 0.0, 0.0], 1.0), ([-1.0, 0.0, 0.0], 1.0)],
        2 => {
            let n = angular.max(4);
            let w = std::f64::consts::TAU / n as f64;
            (0..n)
                .map(|j| {
                    let psi = std::f64::consts::TAU * (j as f64 + 0.5) / n as f64;
                    ([psi.cos(), psi.sin(), 0.0], w)
                })
                .collect()
        }
        3 => {
            let n_polar = (angular / 4).max(4);
            let n_az = (angular / 2).max(8);
            let rule = GaussLegendre::new(n_polar);
            let mut out = Vec::with_capacity(n_polar * n_az);
            let wa = std::f64::consts::TAU / n_az as f64;
            for (z, wz) in rule.mapped_nodes(-1.0, 1.0) {
                let s = (1.0 - z * z).max(0.0).sqrt();
                for j in 0..n_az {
                    let phi = std::f64::consts::TAU * (j as f64 + 0.5) / n_az as f64;
                    out.push(([s * phi.cos(), s * phi.sin(), z], wz * wa));
                }
            }
            out
        }
        _ => unreachable!("intrinsic dimensions are 1..=3"),
    }
}

/// Brute-force reference implementations; independent of the indexed paths
/// and used by the test suites.
pub mod oracle {
    use super::*;

    /// Double-loop graph Laplacian without any spatial index or truncation.
    pub fn graph_laplacian_value(
        cloud: &SampleCloud,
        kernel: &Kernel,
        h: f64,
        f: &TestFunction,
        x: &Point,
    ) -> f64 {
        let d = cloud.manifold.intrinsic_dim();
        let fx = f.value(x);
        let mut sum = KahanSum::new();
        for xi in &cloud.points {
            sum.add(kernel.value(geom::dist(x, xi) / h) * (f.value(xi) - fx));
        }
        sum.value() / (cloud.n() as f64 * h.powi(d as i32 + 2))
    }

    /// Sort-based kNN Laplacian.
    pub fn knn_laplacian_value(
        cloud: &SampleCloud,
        k: usize,
        f: &TestFunction,
        x: &Point,
    ) -> Option<f64> {
        let d = cloud.manifold.intrinsic_dim();
        let dist: Vec<f64> = cloud.points.iter().map(|p| geom::dist(x, p)).collect();
        let mut sorted = dist.clone();
        sorted.sort_by(f64::total_cmp);
        let radius = sorted[k - 1];
        if radius == 0.0 {
            return None;
        }
        let fx = f.value(x);
        let mut sum = KahanSum::new();
        for (i, xi) in cloud.points.iter().enumerate() {
            if dist[i] <= radius {
                sum.add(f.value(xi) - fx);
            }
        }
        Some(sum.value() / (cloud.n() as f64 * radius.powi(d as i32 + 2)))
    }
}
