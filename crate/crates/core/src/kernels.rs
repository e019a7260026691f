//! Bounded-variation kernel profiles.
//!
//! A kernel is a nonnegative profile `K(a)` of the dimensionless radius
//! `a >= 0`, vanishing at infinity, together with an exact representation of
//! its variation measure `dH`: a finite list of jumps plus an absolutely
//! continuous density for the smooth part. The cumulative variation
//! `H(a) = dH([0, a])` is nondecreasing and right-continuous with `H(0) = 0`.
//!
//! Conventions:
//! - at a jump radius, `K` takes its left-limit value, so the indicator
//!   profile satisfies `K(1) = 1` while `K(a) = 0` for `a > 1`;
//! - profiles are not normalized to unit mass; all normalization of the
//!   limiting diffusion sits in [`Kernel::diffusion_constant`].
//!
//! All moment integrals of the catalog shapes are closed forms (polynomial
//! pieces or gamma functions); the adaptive quadrature in [`crate::quad`]
//! serves as an independent cross-check in the test suite.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::special::{gamma, gamma_upper, unit_sphere_volume};

/// Exact variation data for a profile: jump locations with absolute sizes,
/// plus an optional absolutely continuous density.
#[derive(Debug, Clone, Copy, PartialEq)]
enum Shape {
    /// `1` on `[0, 1]`.
    Indicator,
    /// `exp(-a^2)`.
    Gaussian,
    /// `(1 - a)_+` on `[0, 1]`.
    Triangular,
    /// `1` on `(1/2, 1]`; discontinuous and non-monotone.
    Annulus,
    /// Piecewise constant with user breakpoints, stored out of line.
    Piecewise,
}

/// A bounded-variation kernel from the catalog or a custom piecewise-constant
/// profile.
#[derive(Debug, Clone, PartialEq)]
pub struct Kernel {
    name: String,
    shape: Shape,
    /// For `Shape::Piecewise`: `K = values[i]` on `(breaks[i-1], breaks[i]]`
    /// (with an implicit left edge at 0) and `K = 0` beyond the last break.
    breaks: Vec<f64>,
    values: Vec<f64>,
}

/// Serializable kernel selection for configs: a catalog name or an explicit
/// piecewise-constant profile.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(tag = "name", rename_all = "snake_case", deny_unknown_fields)]
pub enum KernelSpec {
    Indicator,
    Gaussian,
    Triangular,
    Annulus,
    Piecewise { breaks: Vec<f64>, values: Vec<f64> },
}

impl KernelSpec {
    pub fn build(&self) -> Result<Kernel> {
        match self {
            KernelSpec::Indicator => Ok(Kernel::indicator()),
            KernelSpec::Gaussian => Ok(Kernel::gaussian()),
            KernelSpec::Triangular => Ok(Kernel::triangular()),
            KernelSpec::Annulus => Ok(Kernel::annulus()),
            KernelSpec::Piecewise { breaks, values } => {
                Kernel::piecewise_constant(breaks.clone(), values.clone())
            }
        }
    }
}

impl Kernel {
    pub fn indicator() -> Self {
        Self {
            name: "indicator".into(),
            shape: Shape::Indicator,
            breaks: Vec::new(),
            values: Vec::new(),
        }
    }

    pub fn gaussian() -> Self {
        Self {
            name: "gaussian".into(),
            shape: Shape::Gaussian,
            breaks: Vec::new(),
            values: Vec::new(),
        }
    }

    pub fn triangular() -> Self {
        Self {
            name: "triangular".into(),
            shape: Shape::Triangular,
            breaks: Vec::new(),
            values: Vec::new(),
        }
    }

    pub fn annulus() -> Self {
        Self {
            name: "annulus".into(),
            shape: Shape::Annulus,
            breaks: Vec::new(),
            values: Vec::new(),
        }
    }

    /// Custom profile: `K = values[i]` on `(breaks[i-1], breaks[i]]`, zero
    /// past the last breakpoint.
    pub fn piecewise_constant(breaks: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if breaks.is_empty() || breaks.len() != values.len() {
            return Err(Error::config(
                "piecewise kernel needs equally many breaks and values (at least one)",
            ));
        }
        let mut prev = 0.0;
        for &b in &breaks {
            if !(b > prev) || !b.is_finite() {
                return Err(Error::config(
                    "piecewise kernel breaks must be finite, positive and strictly increasing",
                ));
            }
            prev = b;
        }
        if values.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::config(
                "piecewise kernel values must be finite and nonnegative",
            ));
        }
        Ok(Self {
            name: "piecewise".into(),
            shape: Shape::Piecewise,
            breaks,
            values,
        })
    }

    /// Catalog lookup for CLI flags.
    pub fn by_name(name: &str) -> Result<Self> {
        match name {
            "indicator" => Ok(Self::indicator()),
            "gaussian" => Ok(Self::gaussian()),
            "triangular" => Ok(Self::triangular()),
            "annulus" => Ok(Self::annulus()),
            other => Err(Error::config(format!(
                "unknown kernel {other:?} (catalog: indicator, gaussian, triangular, annulus)"
            ))),
        }
    }

    pub fn catalog() -> Vec<Kernel> {
        vec![
            Self::indicator(),
            Self::gaussian(),
            Self::triangular(),
            Self::annulus(),
        ]
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    /// `K(a)`, with the left-limit convention at jump radii.
    pub fn eval(&self, a: f64) -> Result<f64> {
        if a < 0.0 {
            return Err(Error::domain(format!("kernel argument must be >= 0, got {a}")));
        }
        Ok(self.value(a))
    }

    /// Unchecked `K(a)` for hot loops; the argument is a distance ratio and
    /// is nonnegative by construction there.
    #[inline]
    pub fn value(&self, a: f64) -> f64 {
        debug_assert!(a >= 0.0);
        match self.shape {
            Shape::Indicator => {
                if a <= 1.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Shape::Gaussian => (-a * a).exp(),
            Shape::Triangular => (1.0 - a).max(0.0),
            Shape::Annulus => {
                if a > 0.5 && a <= 1.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Shape::Piecewise => {
                if a == 0.0 {
                    return self.values[0];
                }
                for (b, v) in self.breaks.iter().zip(&self.values) {
                    if a <= *b {
                        return *v;
                    }
                }
                0.0
            }
        }
    }

    /// Jump part of `dH` as `(location, absolute size)` pairs in increasing
    /// location order.
    pub fn jumps(&self) -> Vec<(f64, f64)> {
        match self.shape {
            Shape::Indicator => vec![(1.0, 1.0)],
            Shape::Gaussian | Shape::Triangular => Vec::new(),
            Shape::Annulus => vec![(0.5, 1.0), (1.0, 1.0)],
            Shape::Piecewise => {
                let mut out = Vec::with_capacity(self.breaks.len());
                for i in 0..self.breaks.len() {
                    let next = if i + 1 < self.values.len() {
                        self.values[i + 1]
                    } else {
                        0.0
                    };
                    let size = (next - self.values[i]).abs();
                    if size > 0.0 {
                        out.push((self.breaks[i], size));
                    }
                }
                out
            }
        }
    }

    /// Radii at which the profile is discontinuous; quadrature panels split
    /// here.
    pub fn jump_radii(&self) -> Vec<f64> {
        self.jumps().into_iter().map(|(a, _)| a).collect()
    }

    /// Cumulative variation `H(a) = dH([0, a])`.
    pub fn total_variation(&self, a: f64) -> Result<f64> {
        if a < 0.0 {
            return Err(Error::domain(format!("total_variation requires a >= 0, got {a}")));
        }
        let jump_part: f64 = self
            .jumps()
            .iter()
            .filter(|(loc, _)| *loc <= a)
            .map(|(_, s)| s)
            .sum();
        let ac_part = match self.shape {
            Shape::Gaussian => 1.0 - (-a * a).exp(),
            Shape::Triangular => a.min(1.0),
            _ => 0.0,
        };
        Ok(jump_part + ac_part)
    }

    /// Total variation of the whole profile, `H(infinity)`.
    pub fn total_variation_full(&self) -> f64 {
        let jump_part: f64 = self.jumps().iter().map(|(_, s)| s).sum();
        let ac_part = match self.shape {
            Shape::Gaussian | Shape::Triangular => 1.0,
            _ => 0.0,
        };
        jump_part + ac_part
    }

    /// Smallest radius beyond which `K` vanishes, if any.
    pub fn support_radius(&self) -> Option<f64> {
        match self.shape {
            Shape::Indicator | Shape::Triangular | Shape::Annulus => Some(1.0),
            Shape::Gaussian => None,
            Shape::Piecewise => Some(*self.breaks.last().unwrap()),
        }
    }

    pub fn sup_norm(&self) -> f64 {
        match self.shape {
            Shape::Indicator | Shape::Gaussian | Shape::Triangular | Shape::Annulus => 1.0,
            Shape::Piecewise => self.values.iter().cloned().fold(0.0, f64::max),
        }
    }

    /// `int_0^inf K(a) a^q da`, in closed form.
    pub fn moment(&self, q: f64) -> Result<f64> {
        if q < 0.0 {
            return Err(Error::domain(format!("moment order must be >= 0, got {q}")));
        }
        let value = match self.shape {
            Shape::Indicator => 1.0 / (q + 1.0),
            Shape::Gaussian => gamma((q + 1.0) / 2.0) / 2.0,
            Shape::Triangular => 1.0 / (q + 1.0) - 1.0 / (q + 2.0),
            Shape::Annulus => (1.0 - 0.5f64.powf(q + 1.0)) / (q + 1.0),
            Shape::Piecewise => {
                let mut acc = 0.0;
                let mut lo = 0.0f64;
                for (b, v) in self.breaks.iter().zip(&self.values) {
                    acc += v * (b.powf(q + 1.0) - lo.powf(q + 1.0)) / (q + 1.0);
                    lo = *b;
                }
                acc
            }
        };
        if !value.is_finite() {
            return Err(Error::domain(format!("divergent kernel moment of order {q}")));
        }
        Ok(value)
    }

    /// Tail moment `int_b^inf K(a) a^q da`.
    pub fn moment_tail(&self, q: f64, b: f64) -> Result<f64> {
        if q < 0.0 || b < 0.0 {
            return Err(Error::domain("moment_tail requires q >= 0 and b >= 0"));
        }
        let clip = |lo: f64, hi: f64| -> f64 {
            // int_lo^hi a^q da restricted to lo <= hi
            if hi <= lo {
                0.0
            } else {
                (hi.powf(q + 1.0) - lo.powf(q + 1.0)) / (q + 1.0)
            }
        };
        let value = match self.shape {
            Shape::Indicator => clip(b, 1.0),
            Shape::Gaussian => gamma_upper((q + 1.0) / 2.0, b * b) / 2.0,
            Shape::Triangular => {
                if b >= 1.0 {
                    0.0
                } else {
                    clip(b, 1.0)
                        - ((1.0f64.powf(q + 2.0) - b.powf(q + 2.0)) / (q + 2.0))
                }
            }
            Shape::Annulus => clip(b.max(0.5), 1.0),
            Shape::Piecewise => {
                let mut acc = 0.0;
                let mut lo = 0.0f64;
                for (brk, v) in self.breaks.iter().zip(&self.values) {
                    acc += v * clip(lo.max(b), *brk);
                    lo = *brk;
                }
                acc
            }
        };
        Ok(value)
    }

    /// `int_0^inf a^r dH(a)`: exact jump contributions plus the absolutely
    /// continuous part.
    pub fn bv_moment(&self, r: f64) -> Result<f64> {
        if r < 0.0 {
            return Err(Error::domain(format!("bv moment order must be >= 0, got {r}")));
        }
        let jump_part: f64 = self.jumps().iter().map(|(loc, s)| s * loc.powf(r)).sum();
        let ac_part = match self.shape {
            // dH = 2 a e^{-a^2} da
            Shape::Gaussian => gamma((r + 2.0) / 2.0),
            // dH = da on [0, 1]
            Shape::Triangular => 1.0 / (r + 1.0),
            _ => 0.0,
        };
        let value = jump_part + ac_part;
        if !value.is_finite() {
            return Err(Error::domain(format!("divergent variation moment of order {r}")));
        }
        Ok(value)
    }

    /// Diffusion constant `(1/d) S_{d-1} int_0^inf K(a) a^{d+1} da`
    /// multiplying the limiting operator.
    pub fn diffusion_constant(&self, d: usize) -> Result<f64> {
        if d == 0 {
            return Err(Error::domain("dimension must be >= 1"));
        }
        let s = unit_sphere_volume(d);
        Ok(s / d as f64 * self.moment(d as f64 + 1.0)?)
    }

    /// Tail decay diagnostics: for each grid radius `b`, the quantities
    /// `K(b) b^{d+3}` and `b * int_b^inf K(a) a^{d+1} da`, both of which must
    /// tend to zero for an admissible kernel.
    pub fn tail_decay_check(&self, d: usize, b_grid: &[f64]) -> Result<TailDecayReport> {
        if d == 0 {
            return Err(Error::domain("dimension must be >= 1"));
        }
        let mut prev = 0.0;
        for &b in b_grid {
            if !(b > prev) {
                return Err(Error::domain(
                    "tail grid must be positive and strictly increasing",
                ));
            }
            prev = b;
        }
        let mut rows = Vec::with_capacity(b_grid.len());
        for &b in b_grid {
            let pointwise = self.value(b) * b.powi(d as i32 + 3);
            let integral = b * self.moment_tail(d as f64 + 1.0, b)?;
            rows.push(TailDecayRow {
                b,
                pointwise,
                tail_integral: integral,
            });
        }
        let nonincreasing = |get: fn(&TailDecayRow) -> f64| {
            rows.windows(2).all(|w| get(&w[1]) <= get(&w[0]) + 1e-15)
        };
        Ok(TailDecayReport {
            pointwise_nonincreasing: nonincreasing(|r| r.pointwise),
            integral_nonincreasing: nonincreasing(|r| r.tail_integral),
            rows,
        })
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct TailDecayRow {
    pub b: f64,
    /// `K(b) b^{d+3}`
    pub pointwise: f64,
    /// `b * int_b^inf K(a) a^{d+1} da`
    pub tail_integral: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct TailDecayReport {
    pub rows: Vec<TailDecayRow>,
    pub pointwise_nonincreasing: bool,
    pub integral_nonincreasing: bool,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quad::integrate_adaptive;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    fn sqrt_pi() -> f64 {
        PI.sqrt()
    }

    #[test]
    fn eval_catalog_values() {
        let ind = Kernel::indicator();
        assert_eq!(ind.eval(0.5).unwrap(), 1.0);
        assert_eq!(ind.eval(2.0).unwrap(), 0.0);
        // left-limit convention at the jump
        assert_eq!(ind.eval(1.0).unwrap(), 1.0);
        assert_eq!(ind.eval(1.0 + 1e-15).unwrap(), 0.0);

        let g = Kernel::gaussian();
        assert_relative_eq!(g.eval(1.0).unwrap(), (-1.0f64).exp(), epsilon = 1e-15);

        let ann = Kernel::annulus();
        assert_eq!(ann.eval(0.5).unwrap(), 0.0); // left limit at the up-jump
        assert_eq!(ann.eval(0.75).unwrap(), 1.0);
        assert_eq!(ann.eval(1.0).unwrap(), 1.0);

        assert!(ind.eval(-0.1).is_err());
    }

    #[test]
    fn kernel_vanishes_far_out() {
        for k in Kernel::catalog() {
            let scale = k.support_radius().unwrap_or(1.0);
            let v = k.value(10.0 * scale);
            assert!(v == 0.0 || v < 1e-8, "{}: K(10 scale) = {v}", k.name());
        }
    }

    #[test]
    fn total_variation_values() {
        let g = Kernel::gaussian();
        for a in [0.1, 0.5, 1.0, 3.0] {
            assert_relative_eq!(
                g.total_variation(a).unwrap(),
                1.0 - (-a * a).exp(),
                epsilon = 1e-15
            );
        }
        assert_eq!(Kernel::indicator().total_variation(0.5).unwrap(), 0.0);
        assert_eq!(Kernel::annulus().total_variation(2.0).unwrap(), 2.0);
        assert_eq!(Kernel::triangular().total_variation(0.25).unwrap(), 0.25);
    }

    #[test]
    fn variation_is_nondecreasing_from_zero() {
        for k in Kernel::catalog() {
            assert_eq!(k.total_variation(0.0).unwrap(), 0.0);
            let mut prev = 0.0;
            for i in 1..400 {
                let a = i as f64 * 0.005 + 0.0025;
                let h = k.total_variation(a).unwrap();
                assert!(h >= prev - 1e-15, "{} H not monotone at {a}", k.name());
                prev = h;
            }
        }
    }

    #[test]
    fn variation_dominates_increments() {
        // |K(b) - K(a)| <= H(b) - H(a) for every pair of a 1000-point
        // midpoint grid (grid points sit strictly between the catalog jump
        // radii 1/2 and 1)
        for k in Kernel::catalog() {
            let grid: Vec<f64> = (0..1000).map(|i| (i as f64 + 0.5) * 2.0e-3).collect();
            let kv: Vec<f64> = grid.iter().map(|&a| k.value(a)).collect();
            let hv: Vec<f64> = grid.iter().map(|&a| k.total_variation(a).unwrap()).collect();
            for i in 0..grid.len() {
                for j in i..grid.len() {
                    let lhs = (kv[j] - kv[i]).abs();
                    let rhs = hv[j] - hv[i];
                    assert!(
                        lhs <= rhs + 1e-12,
                        "{}: |K({})-K({})| = {lhs} > {rhs}",
                        k.name(),
                        grid[j],
                        grid[i]
                    );
                }
            }
        }
    }

    proptest::proptest! {
        #![proptest_config(proptest::prelude::ProptestConfig::with_cases(256))]

        #[test]
        fn variation_dominates_increments_at_random_radii(
            which in 0usize..4,
            a in 0.0f64..3.0,
            b in 0.0f64..3.0,
        ) {
            let k = &Kernel::catalog()[which];
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            let lhs = (k.value(hi) - k.value(lo)).abs();
            let rhs = k.total_variation(hi).unwrap() - k.total_variation(lo).unwrap();
            proptest::prop_assert!(lhs <= rhs + 1e-12);
        }
    }

    #[test]
    fn monotone_kernels_have_variation_k0_minus_k() {
        for k in [Kernel::indicator(), Kernel::gaussian(), Kernel::triangular()] {
            for i in 0..500 {
                let a = (i as f64 + 0.5) * 4.0e-3;
                let expect = k.value(0.0) - k.value(a);
                assert_relative_eq!(
                    k.total_variation(a).unwrap(),
                    expect,
                    epsilon = 1e-14,
                    max_relative = 1e-14
                );
            }
        }
    }

    #[test]
    fn moment_closed_forms() {
        assert_relative_eq!(Kernel::indicator().moment(3.0).unwrap(), 0.25, epsilon = 1e-15);
        assert_relative_eq!(Kernel::annulus().moment(0.0).unwrap(), 0.5, epsilon = 1e-15);
        assert_relative_eq!(Kernel::gaussian().moment(1.0).unwrap(), 0.5, epsilon = 1e-14);
    }

    #[test]
    fn moments_match_quadrature_oracle() {
        // independent route: adaptive quadrature with panels split at jumps
        for k in Kernel::catalog() {
            let hi = k.support_radius().unwrap_or(12.0);
            for q in 0..=6 {
                let qf = q as f64;
                let oracle = integrate_adaptive(
                    |a| k.value(a) * a.powi(q),
                    0.0,
                    hi,
                    &k.jump_radii(),
                    1e-12,
                );
                assert_relative_eq!(
                    k.moment(qf).unwrap(),
                    oracle,
                    max_relative = 1e-9,
                    epsilon = 1e-12
                );
            }
        }
    }

    #[test]
    fn moment_tail_matches_quadrature_oracle() {
        for k in Kernel::catalog() {
            let hi = k.support_radius().unwrap_or(12.0);
            for b in [0.0, 0.3, 0.7, 1.5, 2.0] {
                for q in [0.0, 2.0, 3.0] {
                    let oracle = if b >= hi {
                        0.0
                    } else {
                        integrate_adaptive(
                            |a| k.value(a) * a.powf(q),
                            b,
                            hi,
                            &k.jump_radii(),
                            1e-12,
                        )
                    };
                    assert_relative_eq!(
                        k.moment_tail(q, b).unwrap(),
                        oracle,
                        max_relative = 1e-9,
                        epsilon = 1e-12
                    );
                }
            }
        }
    }

    #[test]
    fn diffusion_constant_indicator_closed_form() {
        // S_{d-1} / (d (d+2)) for the indicator
        for d in 1..=3usize {
            let expect = unit_sphere_volume(d) / (d as f64 * (d as f64 + 2.0));
            assert_relative_eq!(
                Kernel::indicator().diffusion_constant(d).unwrap(),
                expect,
                epsilon = 1e-12
            );
        }
        assert_relative_eq!(
            Kernel::indicator().diffusion_constant(2).unwrap(),
            PI / 4.0,
            epsilon = 1e-12
        );
        assert_relative_eq!(
            Kernel::indicator().diffusion_constant(1).unwrap(),
            2.0 / 3.0,
            epsilon = 1e-12
        );
        assert_relative_eq!(
            Kernel::gaussian().diffusion_constant(1).unwrap(),
            sqrt_pi() / 2.0,
            epsilon = 1e-12
        );
        assert!(Kernel::indicator().diffusion_constant(0).is_err());
    }

    #[test]
    fn bv_moment_values() {
        assert_relative_eq!(Kernel::indicator().bv_moment(5.0).unwrap(), 1.0, epsilon = 1e-15);
        assert_relative_eq!(Kernel::annulus().bv_moment(0.0).unwrap(), 2.0, epsilon = 1e-15);
        // gaussian, r = d+3 with d=2: int a^5 2a e^{-a^2} da = Gamma(7/2)
        let oracle = integrate_adaptive(
            |a| a.powi(5) * 2.0 * a * (-a * a).exp(),
            0.0,
            14.0,
            &[],
            1e-12,
        );
        let got = Kernel::gaussian().bv_moment(5.0).unwrap();
        assert_relative_eq!(got, oracle, max_relative = 1e-9);
        assert_relative_eq!(got, 15.0 * sqrt_pi() / 8.0, epsilon = 1e-12);
    }

    #[test]
    fn bv_moment_finite_for_catalog() {
        for k in Kernel::catalog() {
            for d in 1..=3 {
                let m = k.bv_moment(d as f64 + 3.0).unwrap();
                assert!(m.is_finite() && m >= 0.0);
            }
        }
    }

    #[test]
    fn tail_decay_reports() {
        let r = Kernel::indicator().tail_decay_check(2, &[2.0]).unwrap();
        assert_eq!(r.rows[0].pointwise, 0.0);
        assert_eq!(r.rows[0].tail_integral, 0.0);

        let r = Kernel::gaussian().tail_decay_check(1, &[2.0, 4.0, 8.0]).unwrap();
        assert!(r.pointwise_nonincreasing && r.integral_nonincreasing);
        assert!(r.rows[0].pointwise > r.rows[1].pointwise);
        assert!(r.rows[1].tail_integral > r.rows[2].tail_integral);

        let r = Kernel::annulus().tail_decay_check(3, &[1.5]).unwrap();
        assert_eq!(r.rows[0].pointwise, 0.0);
        assert_eq!(r.rows[0].tail_integral, 0.0);

        assert!(Kernel::indicator().tail_decay_check(2, &[2.0, 1.0]).is_err());
    }

    #[test]
    fn piecewise_constant_profile() {
        // step profile: 2 on [0, 0.5], 1 on (0.5, 1.5]
        let k = Kernel::piecewise_constant(vec![0.5, 1.5], vec![2.0, 1.0]).unwrap();
        assert_eq!(k.value(0.0), 2.0);
        assert_eq!(k.value(0.5), 2.0);
        assert_eq!(k.value(0.6), 1.0);
        assert_eq!(k.value(1.5), 1.0);
        assert_eq!(k.value(1.6), 0.0);
        assert_eq!(k.support_radius(), Some(1.5));
        assert_eq!(k.jumps(), vec![(0.5, 1.0), (1.5, 1.0)]);
        // moment 0: 2*0.5 + 1*1.0 = 2
        assert_relative_eq!(k.moment(0.0).unwrap(), 2.0, epsilon = 1e-15);
        let oracle =
            integrate_adaptive(|a| k.value(a) * a * a, 0.0, 1.5, &k.jump_radii(), 1e-12);
        assert_relative_eq!(k.moment(2.0).unwrap(), oracle, max_relative = 1e-9);

        assert!(Kernel::piecewise_constant(vec![1.0, 0.5], vec![1.0, 1.0]).is_err());
        assert!(Kernel::piecewise_constant(vec![], vec![]).is_err());
    }

    #[test]
    fn kernel_spec_round_trip() {
        let spec: KernelSpec = serde_json::from_str(r#"{"name":"indicator"}"#).unwrap();
        assert_eq!(spec.build().unwrap(), Kernel::indicator());
        let spec: KernelSpec =
            serde_json::from_str(r#"{"name":"piecewise","breaks":[1.0],"values":[0.5]}"#)
                .unwrap();
        assert_eq!(spec.build().unwrap().sup_norm(), 0.5);
        assert!(serde_json::from_str::<KernelSpec>(r#"{"name":"box"}"#).is_err());
    }
}
