//! Sampling densities on catalog manifolds.
//!
//! Two families are shipped: the uniform density and a tilted density
//! `p(x) proportional to 1 + beta x^0 / s` with `s` the first-factor radius
//! (`R` on spheres, `r1` on the torus). The tilt is smooth, has explicit
//! bounds and tangential gradient, and exercises the drift term of the limit
//! operator, which vanishes for uniform sampling.

use serde::{Deserialize, Serialize};

use super::Manifold;
use crate::error::{Error, Result};
use crate::geom::{Point, ZERO_POINT};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Density {
    Uniform,
    /// `p(x) = (1 + beta x^0 / s) / volume`, `beta` in `(0, 1)`.
    Tilted { beta: f64 },
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
#[serde(tag = "name", rename_all = "snake_case", deny_unknown_fields)]
pub enum DensitySpec {
    Uniform,
    Tilted { beta: f64 },
}

impl DensitySpec {
    pub fn build(&self) -> Result<Density> {
        match *self {
            DensitySpec::Uniform => Ok(Density::Uniform),
            DensitySpec::Tilted { beta } => {
                if !(0.0 < beta && beta < 1.0) {
                    return Err(Error::config(format!(
                        "tilt beta must lie in (0, 1), got {beta}"
                    )));
                }
                Ok(Density::Tilted { beta })
            }
        }
    }
}

impl Density {
    pub fn id(&self) -> String {
        match self {
            Density::Uniform => "uniform".into(),
            Density::Tilted { beta } => format!("tilted(beta={beta})"),
        }
    }

    pub fn spec(&self) -> DensitySpec {
        match *self {
            Density::Uniform => DensitySpec::Uniform,
            Density::Tilted { beta } => DensitySpec::Tilted { beta },
        }
    }

    fn first_factor_radius(m: &Manifold) -> f64 {
        match *m {
            Manifold::Sphere { radius, .. } => radius,
            Manifold::FlatTorus { r1, .. } => r1,
        }
    }

    /// Density value at an on-manifold point; integrates to one against the
    /// volume measure.
    #[inline]
    pub fn value(&self, m: &Manifold, x: &Point) -> f64 {
        match *self {
            Density::Uniform => 1.0 / m.volume(),
            Density::Tilted { beta } => {
                (1.0 + beta * x[0] / Self::first_factor_radius(m)) / m.volume()
            }
        }
    }

    pub fn min(&self, m: &Manifold) -> f64 {
        match *self {
            Density::Uniform => 1.0 / m.volume(),
            Density::Tilted { beta } => (1.0 - beta) / m.volume(),
        }
    }

    pub fn max(&self, m: &Manifold) -> f64 {
        match *self {
            Density::Uniform => 1.0 / m.volume(),
            Density::Tilted { beta } => (1.0 + beta) / m.volume(),
        }
    }

    /// Tangential gradient of the density at `x`.
    pub fn grad_manifold(&self, m: &Manifold, x: &Point) -> Point {
        match *self {
            Density::Uniform => ZERO_POINT,
            Density::Tilted { beta } => {
                let mut g = ZERO_POINT;
                g[0] = beta / (Self::first_factor_radius(m) * m.volume());
                m.project_tangent(x, &g)
            }
        }
    }

    /// Acceptance probability of the rejection sampler at `x`.
    #[inline]
    pub fn acceptance_ratio(&self, m: &Manifold, x: &Point) -> f64 {
        self.value(m, x) / self.max(m)
    }

    /// Expected acceptance rate of the rejection sampler under uniform
    /// proposals, in closed form.
    pub fn expected_acceptance_rate(&self, _m: &Manifold) -> f64 {
        match *self {
            Density::Uniform => 1.0,
            // E[1 + beta x^0/s] = 1 under the uniform base measure
            Density::Tilted { beta } => 1.0 / (1.0 + beta),
        }
    }
}
