//! Fixed-size ambient vectors.
//!
//! Every catalog manifold embeds in `R^m` with `m <= 4`, so points and
//! ambient vectors are stored as `[f64; 4]` with unused trailing components
//! kept at zero. Euclidean operations over the full four components then
//! agree with the ones over the active `m` components, which keeps distance
//! code free of runtime dimension branches.

/// An ambient point or vector, zero-padded beyond the active dimension.
pub type Point = [f64; 4];

/// Tangent coefficients relative to a frame frame, zero-padded beyond `d`.
pub type Tangent = [f64; 3];

pub const ZERO_POINT: Point = [0.0; 4];

#[inline]
pub fn dot(a: &Point, b: &Point) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2] + a[3] * b[3]
}

#[inline]
pub fn norm(a: &Point) -> f64 {
    dot(a, a).sqrt()
}

#[inline]
pub fn sub(a: &Point, b: &Point) -> Point {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2], a[3] - b[3]]
}

#[inline]
pub fn add(a: &Point, b: &Point) -> Point {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2], a[3] + b[3]]
}

#[inline]
pub fn scale(a: &Point, s: f64) -> Point {
    [a[0] * s, a[1] * s, a[2] * s, a[3] * s]
}

/// `a + s*b` without intermediate allocation.
#[inline]
pub fn axpy(a: &Point, s: f64, b: &Point) -> Point {
    [
        a[0] + s * b[0],
        a[1] + s * b[1],
        a[2] + s * b[2],
        a[3] + s * b[3],
    ]
}

#[inline]
pub fn dist(a: &Point, b: &Point) -> f64 {
    let d = sub(a, b);
    norm(&d)
}

#[inline]
pub fn dist2(a: &Point, b: &Point) -> f64 {
    let d = sub(a, b);
    dot(&d, &d)
}

#[inline]
pub fn tangent_norm(v: &Tangent) -> f64 {
    (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt()
}

/// Compensated (Neumaier) summation. Graph-Laplacian sums mix positive and
/// negative terms of similar magnitude over up to 10^6 points; plain f64
/// accumulation loses digits the oracle-equivalence tolerances need.
#[derive(Debug, Clone, Copy, Default)]
pub struct KahanSum {
    sum: f64,
    comp: f64,
}

impl KahanSum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    #[inline]
    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}
