//! Closed-form geometry for the manifold catalog.
//!
//! The catalog consists of round spheres `S^d` of radius `R` embedded in
//! `R^{d+1}` for `d` in 1..=3 (the circle is `S^1`) and the flat torus
//! `T^2 = S^1(r1) x S^1(r2)` embedded in `R^4`. For each member every
//! geometric quantity the estimators need is available in closed form:
//! geodesic distances, exponential maps, orthonormal tangent frames, the
//! metric determinant in normal coordinates, and quadrature over the whole
//! manifold.
//!
//! Tangent vectors are given by their coefficients in the deterministic
//! frame returned by [`Manifold::tangent_frame`], so the exponential map has
//! the domain `B_{R^d}(0, c1)` with an explicit injectivity cutoff `c1`
//! (`0.9 pi R` on spheres, `0.9 pi min(r1, r2)` on the torus).

mod density;
mod functions;

pub use density::{Density, DensitySpec};
pub use functions::{TestFunction, TestFunctionSpec};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{self, Point, Tangent, ZERO_POINT};
use crate::quad::GaussLegendre;
use crate::special::unit_sphere_volume;

/// Tolerance for the embedding constraint on user-supplied points.
pub const ON_MANIFOLD_TOL: f64 = 1e-9;

/// A catalog manifold.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Manifold {
    /// Round sphere `S^dim` of the given radius in `R^{dim+1}`.
    Sphere { dim: usize, radius: f64 },
    /// Flat torus, product of two circles of radii `r1`, `r2`, in `R^4`.
    FlatTorus { r1: f64, r2: f64 },
}

/// Serializable manifold selection for configs and CLI flags.
#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
#[serde(tag = "name", deny_unknown_fields)]
pub enum ManifoldSpec {
    #[serde(rename = "s1")]
    S1 {
        #[serde(default = "default_radius")]
        radius: f64,
    },
    #[serde(rename = "s2")]
    S2 {
        #[serde(default = "default_radius")]
        radius: f64,
    },
    #[serde(rename = "s3")]
    S3 {
        #[serde(default = "default_radius")]
        radius: f64,
    },
    #[serde(rename = "torus")]
    Torus {
        #[serde(default = "default_radius")]
        r1: f64,
        #[serde(default = "default_radius")]
        r2: f64,
    },
}

fn default_radius() -> f64 {
    1.0
}

impl ManifoldSpec {
    pub fn build(&self) -> Result<Manifold> {
        let m = match *self {
            ManifoldSpec::S1 { radius } => Manifold::Sphere { dim: 1, radius },
            ManifoldSpec::S2 { radius } => Manifold::Sphere { dim: 2, radius },
            ManifoldSpec::S3 { radius } => Manifold::Sphere { dim: 3, radius },
            ManifoldSpec::Torus { r1, r2 } => Manifold::FlatTorus { r1, r2 },
        };
        m.validate()?;
        Ok(m)
    }
}

impl Manifold {
    pub fn unit_circle() -> Self {
        Manifold::Sphere { dim: 1, radius: 1.0 }
    }

    pub fn unit_sphere2() -> Self {
        Manifold::Sphere { dim: 2, radius: 1.0 }
    }

    pub fn unit_torus() -> Self {
        Manifold::FlatTorus { r1: 1.0, r2: 1.0 }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            Manifold::Sphere { dim, radius } => {
                if !(1..=3).contains(&dim) {
                    return Err(Error::config("sphere dimension must be 1, 2 or 3"));
                }
                if !(radius > 0.0) || !radius.is_finite() {
                    return Err(Error::config("sphere radius must be positive"));
                }
            }
            Manifold::FlatTorus { r1, r2 } => {
                if !(r1 > 0.0 && r2 > 0.0) || !r1.is_finite() || !r2.is_finite() {
                    return Err(Error::config("torus radii must be positive"));
                }
            }
        }
        Ok(())
    }

    pub fn name(&self) -> &'static str {
        match self {
            Manifold::Sphere { dim: 1, .. } => "s1",
            Manifold::Sphere { dim: 2, .. } => "s2",
            Manifold::Sphere { dim: 3, .. } => "s3",
            Manifold::Sphere { .. } => "sphere",
            Manifold::FlatTorus { .. } => "torus",
        }
    }

    pub fn spec(&self) -> ManifoldSpec {
        match *self {
            Manifold::Sphere { dim: 1, radius } => ManifoldSpec::S1 { radius },
            Manifold::Sphere { dim: 2, radius } => ManifoldSpec::S2 { radius },
            Manifold::Sphere { dim: 3, radius } => ManifoldSpec::S3 { radius },
            Manifold::Sphere { .. } => unreachable!("validated dimensions are 1..=3"),
            Manifold::FlatTorus { r1, r2 } => ManifoldSpec::Torus { r1, r2 },
        }
    }

    /// Intrinsic dimension `d`.
    pub fn intrinsic_dim(&self) -> usize {
        match self {
            Manifold::Sphere { dim, .. } => *dim,
            Manifold::FlatTorus { .. } => 2,
        }
    }

    /// Ambient dimension `m` (always `> d`).
    pub fn ambient_dim(&self) -> usize {
        match self {
            Manifold::Sphere { dim, .. } => dim + 1,
            Manifold::FlatTorus { .. } => 4,
        }
    }

    /// Total volume of the manifold.
    pub fn volume(&self) -> f64 {
        match *self {
            Manifold::Sphere { dim, radius } => {
                unit_sphere_volume(dim + 1) * radius.powi(dim as i32)
            }
            Manifold::FlatTorus { r1, r2 } => {
                4.0 * std::f64::consts::PI * std::f64::consts::PI * r1 * r2
            }
        }
    }

    /// Largest Euclidean distance between two points of the manifold.
    pub fn diameter_chord(&self) -> f64 {
        match *self {
            Manifold::Sphere { radius, .. } => 2.0 * radius,
            Manifold::FlatTorus { r1, r2 } => 2.0 * (r1 * r1 + r2 * r2).sqrt(),
        }
    }

    /// Largest geodesic distance between two points of the manifold.
    pub fn diameter_geodesic(&self) -> f64 {
        match *self {
            Manifold::Sphere { radius, .. } => std::f64::consts::PI * radius,
            Manifold::FlatTorus { r1, r2 } => {
                std::f64::consts::PI * (r1 * r1 + r2 * r2).sqrt()
            }
        }
    }

    /// Radius `c1` of the normal-coordinate domain `B(0, c1)`; stays inside
    /// the injectivity radius with a 10% margin.
    pub fn normal_radius(&self) -> f64 {
        match *self {
            Manifold::Sphere { radius, .. } => 0.9 * std::f64::consts::PI * radius,
            Manifold::FlatTorus { r1, r2 } => 0.9 * std::f64::consts::PI * r1.min(r2),
        }
    }

    /// Signed distance of `x` from the embedding constraint.
    pub fn embedding_defect(&self, x: &Point) -> f64 {
        match *self {
            Manifold::Sphere { radius, .. } => (geom::norm(x) - radius).abs(),
            Manifold::FlatTorus { r1, r2 } => {
                let n1 = (x[0] * x[0] + x[1] * x[1]).sqrt();
                let n2 = (x[2] * x[2] + x[3] * x[3]).sqrt();
                (n1 - r1).abs().max((n2 - r2).abs())
            }
        }
    }

    pub fn contains(&self, x: &Point, tol: f64) -> bool {
        self.embedding_defect(x) <= tol
    }

    pub fn check_on_manifold(&self, x: &Point) -> Result<()> {
        let defect = self.embedding_defect(x);
        if defect > ON_MANIFOLD_TOL {
            Err(Error::OffManifold {
                distance: defect,
                tolerance: ON_MANIFOLD_TOL,
            })
        } else {
            Ok(())
        }
    }

    /// Geodesic distance between two on-manifold points.
    pub fn geodesic_distance(&self, x: &Point, y: &Point) -> Result<f64> {
        self.check_on_manifold(x)?;
        self.check_on_manifold(y)?;
        Ok(self.geodesic_distance_unchecked(x, y))
    }

    pub(crate) fn geodesic_distance_unchecked(&self, x: &Point, y: &Point) -> f64 {
        match *self {
            Manifold::Sphere { radius, .. } => {
                let c = (geom::dot(x, y) / (radius * radius)).clamp(-1.0, 1.0);
                radius * c.acos()
            }
            Manifold::FlatTorus { r1, r2 } => {
                let d1 = wrap_angle(x[1].atan2(x[0]) - y[1].atan2(y[0]));
                let d2 = wrap_angle(x[3].atan2(x[2]) - y[3].atan2(y[2]));
                ((r1 * d1).powi(2) + (r2 * d2).powi(2)).sqrt()
            }
        }
    }

    /// Deterministic orthonormal frame of the tangent space at `x`. The
    /// first `d` rows span `T_x M`; unused rows are zero.
    ///
    /// Spheres complete the outward normal with the canonical axes by
    /// Gram-Schmidt, skipping an axis when it is within 0.9 of the normal;
    /// the torus uses the per-factor rotational directions.
    pub fn tangent_frame(&self, x: &Point) -> [Point; 3] {
        let mut frame = [ZERO_POINT; 3];
        match *self {
            Manifold::Sphere { dim, radius } => {
                let normal = geom::scale(x, 1.0 / radius);
                let mut count = 0;
                for axis in 0..=dim {
                    if count == dim {
                        break;
                    }
                    let mut e = ZERO_POINT;
                    e[axis] = 1.0;
                    if geom::dot(&e, &normal).abs() > 0.9 {
                        continue;
                    }
                    // orthogonalize against the normal and accepted vectors
                    let mut v = geom::axpy(&e, -geom::dot(&e, &normal), &normal);
                    for prev in frame.iter().take(count) {
                        v = geom::axpy(&v, -geom::dot(&v, prev), prev);
                    }
                    let n = geom::norm(&v);
                    // an axis can fall into the span of the normal and the
                    // accepted vectors (equator points do this); skip it,
                    // a later axis always completes the frame
                    if n < 0.1 {
                        continue;
                    }
                    frame[count] = geom::scale(&v, 1.0 / n);
                    count += 1;
                }
                debug_assert_eq!(count, dim);
            }
            Manifold::FlatTorus { r1, r2 } => {
                frame[0] = [-x[1] / r1, x[0] / r1, 0.0, 0.0];
                frame[1] = [0.0, 0.0, -x[3] / r2, x[2] / r2];
            }
        }
        frame
    }

    /// Exponential map at `x` applied to the tangent vector with
    /// coefficients `v` in the frame at `x`. Requires `|v| < c1`.
    pub fn exp_map(&self, x: &Point, v: &Tangent) -> Result<Point> {
        let frame = self.tangent_frame(x);
        self.exp_map_with_frame(x, &frame, v)
    }

    /// [`Manifold::exp_map`] with a precomputed frame (hot paths evaluate
    /// many tangent vectors at one base point).
    pub fn exp_map_with_frame(&self, x: &Point, frame: &[Point; 3], v: &Tangent) -> Result<Point> {
        let r = geom::tangent_norm(v);
        if r >= self.normal_radius() {
            return Err(Error::domain(format!(
                "tangent vector norm {r} exceeds the normal-coordinate radius {}",
                self.normal_radius()
            )));
        }
        Ok(self.exp_map_unchecked(x, frame, v))
    }

    #[inline]
    pub(crate) fn exp_map_unchecked(&self, x: &Point, frame: &[Point; 3], v: &Tangent) -> Point {
        match *self {
            Manifold::Sphere { dim, radius } => {
                let r = geom::tangent_norm(v);
                if r == 0.0 {
                    return *x;
                }
                let mut u = ZERO_POINT;
                for i in 0..dim {
                    u = geom::axpy(&u, v[i] / r, &frame[i]);
                }
                let theta = r / radius;
                let mut out = geom::scale(x, theta.cos());
                out = geom::axpy(&out, radius * theta.sin(), &u);
                out
            }
            Manifold::FlatTorus { r1, r2 } => {
                let (c1, s1) = {
                    let a = v[0] / r1;
                    (a.cos(), a.sin())
                };
                let (c2, s2) = {
                    let a = v[1] / r2;
                    (a.cos(), a.sin())
                };
                [
                    x[0] * c1 - x[1] * s1,
                    x[0] * s1 + x[1] * c1,
                    x[2] * c2 - x[3] * s2,
                    x[2] * s2 + x[3] * c2,
                ]
            }
        }
    }

    /// `sqrt(det g)` in normal coordinates as a function of the radius
    /// `r = |v|`; isotropic for the whole catalog.
    pub fn metric_det_normal(&self, r: f64) -> Result<f64> {
        if r < 0.0 || r >= self.normal_radius() {
            return Err(Error::domain(format!(
                "normal-coordinate radius {r} outside [0, {})",
                self.normal_radius()
            )));
        }
        Ok(self.metric_det_normal_unchecked(r))
    }

    #[inline]
    pub(crate) fn metric_det_normal_unchecked(&self, r: f64) -> f64 {
        match *self {
            Manifold::Sphere { dim, radius } => {
                if dim == 1 || r == 0.0 {
                    1.0
                } else {
                    let s = radius * (r / radius).sin() / r;
                    s.powi(dim as i32 - 1)
                }
            }
            Manifold::FlatTorus { .. } => 1.0,
        }
    }

    /// Chord length as a function of geodesic radius, when the relation is
    /// direction independent (spheres). The torus chord depends on the
    /// direction, so it returns `None` there.
    pub fn isotropic_chord(&self, rho: f64) -> Option<f64> {
        match *self {
            Manifold::Sphere { radius, .. } => Some(2.0 * radius * (rho / (2.0 * radius)).sin()),
            Manifold::FlatTorus { .. } => None,
        }
    }

    /// Inverse of [`Manifold::isotropic_chord`].
    pub fn geodesic_of_chord(&self, chord: f64) -> Option<f64> {
        match *self {
            Manifold::Sphere { radius, .. } => {
                Some(2.0 * radius * (chord / (2.0 * radius)).clamp(-1.0, 1.0).asin())
            }
            Manifold::FlatTorus { .. } => None,
        }
    }

    /// Project an ambient gradient onto the tangent space at `x`.
    pub fn project_tangent(&self, x: &Point, g: &Point) -> Point {
        match *self {
            Manifold::Sphere { radius, .. } => {
                let n = geom::scale(x, 1.0 / radius);
                geom::axpy(g, -geom::dot(g, &n), &n)
            }
            Manifold::FlatTorus { .. } => {
                let frame = self.tangent_frame(x);
                let mut out = ZERO_POINT;
                out = geom::axpy(&out, geom::dot(g, &frame[0]), &frame[0]);
                out = geom::axpy(&out, geom::dot(g, &frame[1]), &frame[1]);
                out
            }
        }
    }

    /// Tangential gradient of an ambient function at `x`: the projection of
    /// its ambient gradient onto `T_x M`.
    pub fn manifold_grad(&self, grad_ambient: &Point, x: &Point) -> Point {
        self.project_tangent(x, grad_ambient)
    }

    /// Quadrature of `g` over the whole manifold against the volume measure.
    ///
    /// Product rules: Gauss-Legendre across latitudes, uniform lattices in
    /// the periodic directions. Spectrally accurate for smooth integrands.
    pub fn integrate<F: FnMut(&Point) -> f64>(&self, mut g: F) -> f64 {
        match *self {
            Manifold::Sphere { dim: 1, radius } => {
                let n = 512;
                let mut acc = 0.0;
                for i in 0..n {
                    let t = 2.0 * std::f64::consts::PI * i as f64 / n as f64;
                    acc += g(&[radius * t.cos(), radius * t.sin(), 0.0, 0.0]);
                }
                acc * 2.0 * std::f64::consts::PI * radius / n as f64
            }
            Manifold::Sphere { dim: 2, radius } => {
                let rule = GaussLegendre::new(64);
                let n_az = 128;
                let mut acc = 0.0;
                for (z, wz) in rule_nodes(&rule, -1.0, 1.0) {
                    let s = (1.0 - z * z).max(0.0).sqrt();
                    let mut ring = 0.0;
                    for j in 0..n_az {
                        let phi = 2.0 * std::f64::consts::PI * j as f64 / n_az as f64;
                        ring += g(&[
                            radius * s * phi.cos(),
                            radius * s * phi.sin(),
                            radius * z,
                            0.0,
                        ]);
                    }
                    acc += wz * ring * 2.0 * std::f64::consts::PI / n_az as f64;
                }
                acc * radius * radius
            }
            Manifold::Sphere { dim: 3, radius } => {
                // polar angle psi with weight sin^2, then an S^2 factor
                let rule_psi = GaussLegendre::new(48);
                let rule_z = GaussLegendre::new(32);
                let n_az = 64;
                let mut acc = 0.0;
                for (psi, wp) in rule_nodes(&rule_psi, 0.0, std::f64::consts::PI) {
                    let (sp, cp) = (psi.sin(), psi.cos());
                    let mut shell = 0.0;
                    for (z, wz) in rule_nodes(&rule_z, -1.0, 1.0) {
                        let s = (1.0 - z * z).max(0.0).sqrt();
                        let mut ring = 0.0;
                        for j in 0..n_az {
                            let phi = 2.0 * std::f64::consts::PI * j as f64 / n_az as f64;
                            ring += g(&[
                                radius * cp,
                                radius * sp * s * phi.cos(),
                                radius * sp * s * phi.sin(),
                                radius * sp * z,
                            ]);
                        }
                        shell += wz * ring * 2.0 * std::f64::consts::PI / n_az as f64;
                    }
                    acc += wp * sp * sp * shell;
                }
                acc * radius.powi(3)
            }
            Manifold::Sphere { .. } => unreachable!("validated dimensions are 1..=3"),
            Manifold::FlatTorus { r1, r2 } => {
                let n = 256;
                let mut acc = 0.0;
                for i in 0..n {
                    let a = 2.0 * std::f64::consts::PI * i as f64 / n as f64;
                    for j in 0..n {
                        let b = 2.0 * std::f64::consts::PI * j as f64 / n as f64;
                        acc += g(&[
                            r1 * a.cos(),
                            r1 * a.sin(),
                            r2 * b.cos(),
                            r2 * b.sin(),
                        ]);
                    }
                }
                let cell = (2.0 * std::f64::consts::PI / n as f64).powi(2);
                acc * cell * r1 * r2
            }
        }
    }

    /// Metric coefficients `g_ij(v)` of the normal parameterization at `x`,
    /// by central differences of the exponential map. Geometry diagnostics
    /// only; not a hot path.
    pub fn metric_in_normal_coords(&self, x: &Point, v: &Tangent) -> Result<[[f64; 3]; 3]> {
        let d = self.intrinsic_dim();
        let frame = self.tangent_frame(x);
        let step = 1e-6 * self.normal_radius().max(1.0);
        let mut partials = [ZERO_POINT; 3];
        for (i, partial) in partials.iter_mut().enumerate().take(d) {
            let mut vp = *v;
            let mut vm = *v;
            vp[i] += step;
            vm[i] -= step;
            let yp = self.exp_map_with_frame(x, &frame, &vp)?;
            let ym = self.exp_map_with_frame(x, &frame, &vm)?;
            *partial = geom::scale(&geom::sub(&yp, &ym), 0.5 / step);
        }
        let mut g = [[0.0; 3]; 3];
        for i in 0..d {
            for j in 0..d {
                g[i][j] = geom::dot(&partials[i], &partials[j]);
            }
        }
        Ok(g)
    }

    /// Second derivative `E_x''(0)(v, v)` of the normal parameterization by
    /// central differences.
    pub fn exp_map_second_derivative(&self, x: &Point, v: &Tangent) -> Result<Point> {
        let frame = self.tangent_frame(x);
        let eps = 1e-4;
        let vp = [eps * v[0], eps * v[1], eps * v[2]];
        let vm = [-eps * v[0], -eps * v[1], -eps * v[2]];
        let yp = self.exp_map_with_frame(x, &frame, &vp)?;
        let ym = self.exp_map_with_frame(x, &frame, &vm)?;
        let mut out = geom::add(&yp, &ym);
        out = geom::axpy(&out, -2.0, x);
        Ok(geom::scale(&out, 1.0 / (eps * eps)))
    }
}

/// Euclidean distance between two ambient points.
pub fn chord_distance(x: &Point, y: &Point) -> f64 {
    geom::dist(x, y)
}

/// The limiting diffusion operator applied to `f` at `x`:
/// `c0 ( <grad p, grad f> + p lap f / 2 )`, with `c0` the kernel's
/// diffusion constant in the intrinsic dimension and the pairing taken in
/// the ambient inner product of tangential gradients.
pub fn limit_operator(
    m: &Manifold,
    p: &Density,
    f: &TestFunction,
    kernel: &crate::kernels::Kernel,
    x: &Point,
) -> Result<f64> {
    let c0 = kernel.diffusion_constant(m.intrinsic_dim())?;
    let drift = geom::dot(&p.grad_manifold(m, x), &f.grad_manifold(m, x));
    Ok(c0 * (drift + 0.5 * p.value(m, x) * f.laplace_beltrami(m, x)))
}

fn wrap_angle(a: f64) -> f64 {
    // wrap into (-pi, pi]
    let two_pi = 2.0 * std::f64::consts::PI;
    let mut a = a % two_pi;
    if a <= -std::f64::consts::PI {
        a += two_pi;
    } else if a > std::f64::consts::PI {
        a -= two_pi;
    }
    a
}

fn rule_nodes(rule: &GaussLegendre, a: f64, b: f64) -> Vec<(f64, f64)> {
    // materialized nodes for nested loops
    let mut out = Vec::with_capacity(rule.degree());
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    rule.for_each_node(|x, w| out.push((mid + half * x, w * half)));
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    pub(crate) fn random_sphere_point(m: &Manifold, rng: &mut ChaCha8Rng) -> Point {
        let (dim, radius) = match *m {
            Manifold::Sphere { dim, radius } => (dim, radius),
            _ => panic!("sphere only"),
        };
        loop {
            let mut x = ZERO_POINT;
            let mut n2 = 0.0;
            for c in x.iter_mut().take(dim + 1) {
                *c = rng.gen::<f64>() * 2.0 - 1.0;
                n2 += *c * *c;
            }
            if n2 > 1e-4 && n2 < 1.0 {
                return geom::scale(&x, radius / n2.sqrt());
            }
        }
    }

    fn random_torus_point(r1: f64, r2: f64, rng: &mut ChaCha8Rng) -> Point {
        let a = rng.gen::<f64>() * 2.0 * PI;
        let b = rng.gen::<f64>() * 2.0 * PI;
        [r1 * a.cos(), r1 * a.sin(), r2 * b.cos(), r2 * b.sin()]
    }

    #[test]
    fn chord_distance_examples() {
        let north: Point = [0.0, 0.0, 1.0, 0.0];
        let south: Point = [0.0, 0.0, -1.0, 0.0];
        let equator: Point = [1.0, 0.0, 0.0, 0.0];
        assert_eq!(chord_distance(&north, &south), 2.0);
        assert_eq!(chord_distance(&north, &north), 0.0);
        assert_relative_eq!(chord_distance(&north, &equator), 2.0f64.sqrt(), epsilon = 1e-15);
    }

    #[test]
    fn geodesic_distance_sphere() {
        let m = Manifold::unit_sphere2();
        let north: Point = [0.0, 0.0, 1.0, 0.0];
        let south: Point = [0.0, 0.0, -1.0, 0.0];
        assert_relative_eq!(m.geodesic_distance(&north, &south).unwrap(), PI, epsilon = 1e-15);
        assert_eq!(m.geodesic_distance(&north, &north).unwrap(), 0.0);
        // chord-angle identity: rho = 2 asin(l/2)
        let equator: Point = [1.0, 0.0, 0.0, 0.0];
        let rho = m.geodesic_distance(&north, &equator).unwrap();
        assert_relative_eq!(rho, PI / 2.0, epsilon = 1e-15);
        let l = chord_distance(&north, &equator);
        assert_relative_eq!(rho, 2.0 * (l / 2.0).asin(), epsilon = 1e-14);

        let off: Point = [0.0, 0.0, 1.1, 0.0];
        assert!(matches!(
            m.geodesic_distance(&off, &north),
            Err(Error::OffManifold { .. })
        ));
    }

    #[test]
    fn geodesic_distance_torus_wraps() {
        let m = Manifold::unit_torus();
        // points at angles (0.1, 0) and (2pi - 0.1, 0): wrapped distance 0.2
        let a: Point = [0.1f64.cos(), 0.1f64.sin(), 1.0, 0.0];
        let b: Point = [0.1f64.cos(), -(0.1f64.sin()), 1.0, 0.0];
        assert_relative_eq!(m.geodesic_distance(&a, &b).unwrap(), 0.2, epsilon = 1e-12);
    }

    #[test]
    fn tangent_frame_north_pole() {
        let m = Manifold::unit_sphere2();
        let north: Point = [0.0, 0.0, 1.0, 0.0];
        let f = m.tangent_frame(&north);
        assert_eq!(f[0], [1.0, 0.0, 0.0, 0.0]);
        assert_eq!(f[1], [0.0, 1.0, 0.0, 0.0]);
    }

    #[test]
    fn tangent_frame_orthonormal_and_tangent() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for m in [
            Manifold::unit_sphere2(),
            Manifold::Sphere { dim: 1, radius: 2.0 },
            Manifold::Sphere { dim: 3, radius: 0.5 },
        ] {
            let d = m.intrinsic_dim();
            for _ in 0..100 {
                let x = random_sphere_point(&m, &mut rng);
                let f = m.tangent_frame(&x);
                for i in 0..d {
                    for j in 0..d {
                        let expect = if i == j { 1.0 } else { 0.0 };
                        assert!((geom::dot(&f[i], &f[j]) - expect).abs() < 1e-12);
                    }
                    // tangency: orthogonal to the radial normal
                    assert!(geom::dot(&f[i], &x).abs() < 1e-12 * 2.0);
                }
            }
        }
        let m = Manifold::unit_torus();
        for _ in 0..100 {
            let x = random_torus_point(1.0, 1.0, &mut rng);
            let f = m.tangent_frame(&x);
            assert!((geom::dot(&f[0], &f[0]) - 1.0).abs() < 1e-12);
            assert!((geom::dot(&f[1], &f[1]) - 1.0).abs() < 1e-12);
            assert!(geom::dot(&f[0], &f[1]).abs() < 1e-12);
        }
    }

    #[test]
    fn tangent_frame_survives_coplanar_axes() {
        // equator points put two canonical axes in the span of the normal
        // and the first frame vector; the frame must still come out
        // orthonormal
        for m in [
            Manifold::unit_sphere2(),
            Manifold::Sphere { dim: 3, radius: 1.0 },
        ] {
            let d = m.intrinsic_dim();
            for t in [0.2f64, 0.7, 2.0, 4.1] {
                let mut x = ZERO_POINT;
                x[0] = t.cos();
                x[1] = t.sin();
                let f = m.tangent_frame(&x);
                for i in 0..d {
                    assert!(
                        (geom::dot(&f[i], &f[i]) - 1.0).abs() < 1e-12,
                        "{} t={t}: frame row {i} not unit: {:?}",
                        m.name(),
                        f[i]
                    );
                    assert!(geom::dot(&f[i], &x).abs() < 1e-12);
                    for j in 0..i {
                        assert!(geom::dot(&f[i], &f[j]).abs() < 1e-12);
                    }
                }
            }
        }
    }

    #[test]
    fn exp_map_examples() {
        let m = Manifold::unit_sphere2();
        let north: Point = [0.0, 0.0, 1.0, 0.0];
        assert_eq!(m.exp_map(&north, &[0.0, 0.0, 0.0]).unwrap(), north);
        let y = m.exp_map(&north, &[PI / 2.0, 0.0, 0.0]).unwrap();
        assert_relative_eq!(y[0], 1.0, epsilon = 1e-15);
        assert!(y[1].abs() < 1e-15 && y[2].abs() < 1e-15);
        // domain boundary
        assert!(m.exp_map(&north, &[0.9 * PI, 0.0, 0.0]).is_err());
    }

    #[test]
    fn exp_map_preserves_radius_as_geodesic_distance() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for m in [
            Manifold::unit_sphere2(),
            Manifold::Sphere { dim: 1, radius: 1.5 },
            Manifold::Sphere { dim: 3, radius: 1.0 },
            Manifold::unit_torus(),
            Manifold::FlatTorus { r1: 1.0, r2: 0.5 },
        ] {
            let d = m.intrinsic_dim();
            for _ in 0..100 {
                let x = match m {
                    Manifold::Sphere { .. } => random_sphere_point(&m, &mut rng),
                    Manifold::FlatTorus { r1, r2 } => random_torus_point(r1, r2, &mut rng),
                };
                let mut v = [0.0f64; 3];
                for c in v.iter_mut().take(d) {
                    *c = rng.gen::<f64>() - 0.5;
                }
                let scale = rng.gen::<f64>() * 0.95 * m.normal_radius() / geom::tangent_norm(&v);
                for c in v.iter_mut() {
                    *c *= scale;
                }
                let y = m.exp_map(&x, &v).unwrap();
                assert!(m.contains(&y, 1e-12));
                let rho = m.geodesic_distance_unchecked(&x, &y);
                assert_relative_eq!(rho, geom::tangent_norm(&v), epsilon = 1e-9, max_relative = 1e-9);
                // chord never exceeds the geodesic length
                assert!(chord_distance(&x, &y) <= rho + 1e-12);
            }
        }
    }

    #[test]
    fn metric_det_values() {
        let m = Manifold::unit_sphere2();
        assert_eq!(m.metric_det_normal(0.0).unwrap(), 1.0);
        assert_relative_eq!(
            m.metric_det_normal(0.3).unwrap(),
            (0.3f64).sin() / 0.3,
            epsilon = 1e-15
        );
        assert_eq!(Manifold::unit_torus().metric_det_normal(1.0).unwrap(), 1.0);
        assert_eq!(Manifold::unit_circle().metric_det_normal(0.5).unwrap(), 1.0);
        assert!(m.metric_det_normal(0.9 * PI).is_err());
    }

    #[test]
    fn volume_by_quadrature() {
        for m in [
            Manifold::unit_circle(),
            Manifold::unit_sphere2(),
            Manifold::Sphere { dim: 2, radius: 2.0 },
            Manifold::Sphere { dim: 3, radius: 1.0 },
            Manifold::unit_torus(),
            Manifold::FlatTorus { r1: 2.0, r2: 0.5 },
        ] {
            let got = m.integrate(|_| 1.0);
            assert_relative_eq!(got, m.volume(), max_relative = 1e-10);
        }
    }

    #[test]
    fn manifold_grad_examples() {
        let m = Manifold::unit_sphere2();
        let north: Point = [0.0, 0.0, 1.0, 0.0];
        let e1: Point = [1.0, 0.0, 0.0, 0.0];
        let e3: Point = [0.0, 0.0, 1.0, 0.0];
        assert_eq!(m.manifold_grad(&e1, &north), [1.0, 0.0, 0.0, 0.0]);
        assert_eq!(m.manifold_grad(&e3, &north), [0.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn limit_operator_examples() {
        use crate::kernels::Kernel;
        let m = Manifold::unit_sphere2();
        let uniform = Density::Uniform;
        let ind = Kernel::indicator();

        // constants are annihilated
        let c = TestFunction::Constant(2.0);
        let x: Point = [0.6, 0.0, 0.8, 0.0];
        assert_eq!(limit_operator(&m, &uniform, &c, &ind, &x).unwrap(), 0.0);

        // uniform p on unit S^2, f = x^0, indicator: A f = -x^0/16
        let f = TestFunction::coordinate(0);
        for x in [
            [0.0, 0.0, 1.0, 0.0],
            [1.0, 0.0, 0.0, 0.0],
            [0.6, 0.0, 0.8, 0.0],
            [0.36, 0.48, 0.8, 0.0],
        ] {
            assert_relative_eq!(
                limit_operator(&m, &uniform, &f, &ind, &x).unwrap(),
                -x[0] / 16.0,
                epsilon = 1e-14
            );
        }

        // flat torus, uniform p, f = cos(theta_1): A f = -c0 p cos(theta_1)/2
        let t = Manifold::unit_torus();
        let ft = TestFunction::coordinate(0);
        let theta = 0.7f64;
        let xt: Point = [theta.cos(), theta.sin(), 1.0, 0.0];
        let c0 = ind.diffusion_constant(2).unwrap();
        let expect = c0 * 0.5 * (1.0 / t.volume()) * (-theta.cos());
        assert_relative_eq!(
            limit_operator(&t, &Density::Uniform, &ft, &ind, &xt).unwrap(),
            expect,
            epsilon = 1e-14
        );
    }

    #[test]
    #[allow(clippy::needless_range_loop)]
    fn normal_metric_is_identity_at_origin() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for m in [Manifold::unit_sphere2(), Manifold::unit_torus()] {
            let d = m.intrinsic_dim();
            for _ in 0..20 {
                let x = match m {
                    Manifold::Sphere { .. } => random_sphere_point(&m, &mut rng),
                    Manifold::FlatTorus { .. } => random_torus_point(1.0, 1.0, &mut rng),
                };
                let g = m.metric_in_normal_coords(&x, &[0.0; 3]).unwrap();
                for i in 0..d {
                    for j in 0..d {
                        let expect = if i == j { 1.0 } else { 0.0 };
                        assert!(
                            (g[i][j] - expect).abs() < 1e-10,
                            "{} g[{i}][{j}] = {}",
                            m.name(),
                            g[i][j]
                        );
                    }
                }
            }
        }
    }
}
