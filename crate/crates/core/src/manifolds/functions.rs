//! Catalog test functions with closed-form tangential gradients and
//! Laplacians.
//!
//! Every entry is the restriction of an ambient polynomial, so ambient
//! derivatives are trivial while the manifold Laplacian follows from the
//! harmonic eigenvalue structure of the catalog:
//! - on `S^d(R)`, a coordinate is a degree-1 harmonic with eigenvalue
//!   `-d/R^2` and a product `x^i x^j` (`i != j`) a degree-2 harmonic with
//!   eigenvalue `-2(d+1)/R^2`;
//! - on the flat torus, a coordinate is a frequency-1 wave of its factor and
//!   same-factor products are frequency-2 waves.
//!
//! Linear combinations (`Combo`) support the operator-linearity tests and
//! the bounded families used by the deviation experiment.

use serde::{Deserialize, Serialize};

use super::Manifold;
use crate::error::{Error, Result};
use crate::geom::{self, Point, ZERO_POINT};

#[derive(Debug, Clone, PartialEq)]
pub enum TestFunction {
    /// Constant function.
    Constant(f64),
    /// `scale * x^axis`.
    Coordinate { axis: usize, scale: f64 },
    /// `scale * x^i x^j` with `i < j`.
    CrossQuadratic { i: usize, j: usize, scale: f64 },
    /// Linear combination of other catalog functions.
    Combo(Vec<(f64, TestFunction)>),
}

/// Serializable test-function selection.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(tag = "name", rename_all = "snake_case", deny_unknown_fields)]
pub enum TestFunctionSpec {
    Constant {
        #[serde(default = "default_one")]
        value: f64,
    },
    Coordinate {
        axis: usize,
        #[serde(default = "default_one")]
        scale: f64,
    },
    Cross {
        i: usize,
        j: usize,
        #[serde(default = "default_one")]
        scale: f64,
    },
}

fn default_one() -> f64 {
    1.0
}

impl TestFunctionSpec {
    pub fn build(&self, m: &Manifold) -> Result<TestFunction> {
        let f = match *self {
            TestFunctionSpec::Constant { value } => TestFunction::Constant(value),
            TestFunctionSpec::Coordinate { axis, scale } => {
                TestFunction::Coordinate { axis, scale }
            }
            TestFunctionSpec::Cross { i, j, scale } => {
                TestFunction::CrossQuadratic { i, j, scale }
            }
        };
        f.validate(m)?;
        Ok(f)
    }
}

impl TestFunction {
    pub fn coordinate(axis: usize) -> Self {
        TestFunction::Coordinate { axis, scale: 1.0 }
    }

    pub fn cross(i: usize, j: usize) -> Self {
        TestFunction::CrossQuadratic { i, j, scale: 1.0 }
    }

    pub fn validate(&self, m: &Manifold) -> Result<()> {
        let amb = m.ambient_dim();
        match self {
            TestFunction::Constant(v) => {
                if !v.is_finite() {
                    return Err(Error::config("constant test function must be finite"));
                }
            }
            TestFunction::Coordinate { axis, scale } => {
                if *axis >= amb {
                    return Err(Error::config(format!(
                        "coordinate axis {axis} out of range for ambient dimension {amb}"
                    )));
                }
                if !scale.is_finite() {
                    return Err(Error::config("test function scale must be finite"));
                }
            }
            TestFunction::CrossQuadratic { i, j, scale } => {
                if *i >= *j || *j >= amb {
                    return Err(Error::config(format!(
                        "cross indices ({i}, {j}) must satisfy i < j < {amb}"
                    )));
                }
                if !scale.is_finite() {
                    return Err(Error::config("test function scale must be finite"));
                }
            }
            TestFunction::Combo(terms) => {
                for (c, f) in terms {
                    if !c.is_finite() {
                        return Err(Error::config("combo coefficient must be finite"));
                    }
                    f.validate(m)?;
                }
            }
        }
        Ok(())
    }

    pub fn id(&self) -> String {
        match self {
            TestFunction::Constant(v) => format!("const({v})"),
            TestFunction::Coordinate { axis, scale } => {
                if *scale == 1.0 {
                    format!("coord{axis}")
                } else {
                    format!("{scale}*coord{axis}")
                }
            }
            TestFunction::CrossQuadratic { i, j, scale } => {
                if *scale == 1.0 {
                    format!("cross{i}{j}")
                } else {
                    format!("{scale}*cross{i}{j}")
                }
            }
            TestFunction::Combo(terms) => {
                let parts: Vec<String> =
                    terms.iter().map(|(c, f)| format!("{c}*({})", f.id())).collect();
                format!("combo[{}]", parts.join("+"))
            }
        }
    }

    #[inline]
    pub fn value(&self, x: &Point) -> f64 {
        match self {
            TestFunction::Constant(v) => *v,
            TestFunction::Coordinate { axis, scale } => scale * x[*axis],
            TestFunction::CrossQuadratic { i, j, scale } => scale * x[*i] * x[*j],
            TestFunction::Combo(terms) => {
                terms.iter().map(|(c, f)| c * f.value(x)).sum()
            }
        }
    }

    pub fn grad_ambient(&self, x: &Point) -> Point {
        match self {
            TestFunction::Constant(_) => ZERO_POINT,
            TestFunction::Coordinate { axis, scale } => {
                let mut g = ZERO_POINT;
                g[*axis] = *scale;
                g
            }
            TestFunction::CrossQuadratic { i, j, scale } => {
                let mut g = ZERO_POINT;
                g[*i] = scale * x[*j];
                g[*j] = scale * x[*i];
                g
            }
            TestFunction::Combo(terms) => {
                let mut g = ZERO_POINT;
                for (c, f) in terms {
                    g = geom::axpy(&g, *c, &f.grad_ambient(x));
                }
                g
            }
        }
    }

    /// Ambient Hessian applied to a pair of vectors, `f''(x)(u, w)`.
    pub fn hess_apply(&self, _x: &Point, u: &Point, w: &Point) -> f64 {
        match self {
            TestFunction::Constant(_) | TestFunction::Coordinate { .. } => 0.0,
            TestFunction::CrossQuadratic { i, j, scale } => {
                scale * (u[*i] * w[*j] + u[*j] * w[*i])
            }
            TestFunction::Combo(terms) => terms
                .iter()
                .map(|(c, f)| c * f.hess_apply(_x, u, w))
                .sum(),
        }
    }

    /// Tangential gradient as an ambient vector.
    pub fn grad_manifold(&self, m: &Manifold, x: &Point) -> Point {
        m.project_tangent(x, &self.grad_ambient(x))
    }

    /// Closed-form Laplace-Beltrami value.
    pub fn laplace_beltrami(&self, m: &Manifold, x: &Point) -> f64 {
        match self {
            TestFunction::Constant(_) => 0.0,
            TestFunction::Coordinate { axis, scale } => match *m {
                Manifold::Sphere { dim, radius } => {
                    -(dim as f64) * scale * x[*axis] / (radius * radius)
                }
                Manifold::FlatTorus { r1, r2 } => {
                    let r = if *axis < 2 { r1 } else { r2 };
                    -scale * x[*axis] / (r * r)
                }
            },
            TestFunction::CrossQuadratic { i, j, scale } => {
                let f = scale * x[*i] * x[*j];
                match *m {
                    Manifold::Sphere { dim, radius } => {
                        -2.0 * (dim as f64 + 1.0) * f / (radius * radius)
                    }
                    Manifold::FlatTorus { r1, r2 } => {
                        match (*i < 2, *j < 2) {
                            // both coordinates in the first factor: frequency 2
                            (true, true) => -4.0 * f / (r1 * r1),
                            (false, false) => -4.0 * f / (r2 * r2),
                            // one wave per factor
                            _ => -(1.0 / (r1 * r1) + 1.0 / (r2 * r2)) * f,
                        }
                    }
                }
            }
            TestFunction::Combo(terms) => terms
                .iter()
                .map(|(c, f)| c * f.laplace_beltrami(m, x))
                .sum(),
        }
    }

    /// Bounds `(sup |f|, sup |f'|, sup |f''|, sup |f'''|)` over the manifold.
    pub fn bounds(&self, m: &Manifold) -> [f64; 4] {
        match self {
            TestFunction::Constant(v) => [v.abs(), 0.0, 0.0, 0.0],
            TestFunction::Coordinate { axis, scale } => {
                let reach = coordinate_reach(m, *axis);
                [scale.abs() * reach, scale.abs(), 0.0, 0.0]
            }
            TestFunction::CrossQuadratic { i, j, scale } => {
                let ri = coordinate_reach(m, *i);
                let rj = coordinate_reach(m, *j);
                let sup = match *m {
                    // |x^i x^j| <= R^2/2 on a sphere when i != j
                    Manifold::Sphere { radius, .. } => radius * radius / 2.0,
                    _ => ri * rj,
                };
                [
                    scale.abs() * sup,
                    scale.abs() * (ri * ri + rj * rj).sqrt(),
                    scale.abs(),
                    0.0,
                ]
            }
            TestFunction::Combo(terms) => {
                let mut out = [0.0; 4];
                for (c, f) in terms {
                    let b = f.bounds(m);
                    for k in 0..4 {
                        out[k] += c.abs() * b[k];
                    }
                }
                out
            }
        }
    }

    /// The family of catalog functions with unit-bounded value and
    /// derivatives up to third order, used by the deviation experiment.
    pub fn bounded_family(m: &Manifold) -> Vec<TestFunction> {
        let mut family = Vec::new();
        let amb = m.ambient_dim();
        for axis in 0..amb {
            let f = TestFunction::coordinate(axis);
            let b = f.bounds(m);
            let scale = 1.0 / b.iter().cloned().fold(1.0, f64::max);
            family.push(TestFunction::Coordinate { axis, scale });
        }
        let crosses: &[(usize, usize)] = match m {
            Manifold::Sphere { dim: 1, .. } => &[(0, 1)],
            Manifold::Sphere { .. } => &[(0, 1), (0, 2)],
            Manifold::FlatTorus { .. } => &[(0, 2), (1, 3)],
        };
        for &(i, j) in crosses {
            let f = TestFunction::cross(i, j);
            let b = f.bounds(m);
            let scale = 1.0 / b.iter().cloned().fold(1.0, f64::max);
            family.push(TestFunction::CrossQuadratic { i, j, scale });
        }
        family
    }
}

fn coordinate_reach(m: &Manifold, axis: usize) -> f64 {
    match *m {
        Manifold::Sphere { radius, .. } => radius,
        Manifold::FlatTorus { r1, r2 } => {
            if axis < 2 {
                r1
            } else {
                r2
            }
        }
    }
}
