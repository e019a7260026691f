//! One-dimensional quadrature: Gauss-Legendre rules and an adaptive
//! breakpoint-aware integrator.
//!
//! Kernel profiles may jump; naive adaptive rules stall on discontinuities.
//! Integrals are therefore always split at declared breakpoints first, so
//! every panel sees a smooth integrand.

use std::f64::consts::PI;

/// Gauss-Legendre nodes and weights on `[-1, 1]`.
///
/// Computed by Newton iteration on the Legendre polynomial with the usual
/// Chebyshev-like initial guess; accurate to machine precision for the
/// moderate degrees used here.
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussLegendre {
    pub fn new(degree: usize) -> Self {
        assert!(degree >= 1);
        let n = degree;
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        for i in 0..n.div_ceil(2) {
            let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre_with_derivative(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            weights[i] = w;
            nodes[n - 1 - i] = x;
            weights[n - 1 - i] = w;
        }
        Self { nodes, weights }
    }

    pub fn degree(&self) -> usize {
        self.nodes.len()
    }

    /// Visit the raw nodes and weights on `[-1, 1]`.
    pub fn for_each_node<F: FnMut(f64, f64)>(&self, mut f: F) {
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            f(*x, *w);
        }
    }

    /// Nodes and weights mapped onto `[a, b]`.
    pub fn mapped_nodes(&self, a: f64, b: f64) -> Vec<(f64, f64)> {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(x, w)| (mid + half * x, w * half))
            .collect()
    }

    /// Integrate `f` over `[a, b]`.
    pub fn integrate<F: FnMut(f64) -> f64>(&self, a: f64, b: f64, mut f: F) -> f64 {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        let mut acc = 0.0;
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            acc += w * f(mid + half * x);
        }
        acc * half
    }
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Splits `[a, b]` at the breakpoints lying strictly inside it and returns
/// the sorted panel boundaries.
pub fn panels(a: f64, b: f64, breakpoints: &[f64]) -> Vec<f64> {
    let mut edges = vec![a];
    let mut inner: Vec<f64> = breakpoints
        .iter()
        .copied()
        .filter(|&t| t > a && t < b)
        .collect();
    inner.sort_by(|x, y| x.partial_cmp(y).unwrap());
    inner.dedup();
    edges.extend(inner);
    edges.push(b);
    edges
}

/// Integrate `f` over `[a, b]`, splitting at `breakpoints` and refining each
/// panel by interval halving until the Gauss-Legendre estimate stabilizes to
/// the requested relative tolerance.
pub fn integrate_adaptive<F: FnMut(f64) -> f64>(
    mut f: F,
    a: f64,
    b: f64,
    breakpoints: &[f64],
    rel_tol: f64,
) -> f64 {
    let rule = GaussLegendre::new(16);
    let edges = panels(a, b, breakpoints);
    let mut total = 0.0;
    for w in edges.windows(2) {
        total += adaptive_panel(&mut f, w[0], w[1], &rule, rel_tol, 0);
    }
    total
}

fn adaptive_panel<F: FnMut(f64) -> f64>(
    f: &mut F,
    a: f64,
    b: f64,
    rule: &GaussLegendre,
    rel_tol: f64,
    depth: usize,
) -> f64 {
    let whole = rule.integrate(a, b, &mut *f);
    let mid = 0.5 * (a + b);
    let left = rule.integrate(a, mid, &mut *f);
    let right = rule.integrate(mid, b, &mut *f);
    let refined = left + right;
    let scale = refined.abs().max(1e-300);
    if (refined - whole).abs() <= rel_tol * scale || depth >= 40 {
        refined
    } else {
        adaptive_panel(f, a, mid, rule, rel_tol, depth + 1)
            + adaptive_panel(f, mid, b, rule, rel_tol, depth + 1)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn gauss_legendre_exact_on_polynomials() {
        // degree-n rule integrates polynomials up to degree 2n-1 exactly
        let rule = GaussLegendre::new(8);
        for k in 0..16 {
            let exact = if k % 2 == 0 { 2.0 / (k as f64 + 1.0) } else { 0.0 };
            let got = rule.integrate(-1.0, 1.0, |x| x.powi(k));
            assert!((got - exact).abs() < 1e-14, "k={k}: {got} vs {exact}");
        }
    }

    #[test]
    fn gauss_legendre_weights_sum_to_interval() {
        for n in [1, 2, 3, 16, 64, 128] {
            let rule = GaussLegendre::new(n);
            let s: f64 = rule.weights.iter().sum();
            assert_relative_eq!(s, 2.0, epsilon = 1e-13);
        }
    }

    #[test]
    fn adaptive_handles_jump_via_breakpoints() {
        // piecewise integrand with a jump at 1: int_0^2 = 1*1 + 0.25*1
        let f = |x: f64| if x <= 1.0 { 1.0 } else { 0.25 };
        let got = integrate_adaptive(f, 0.0, 2.0, &[1.0], 1e-12);
        assert_relative_eq!(got, 1.25, epsilon = 1e-12);
    }

    #[test]
    fn adaptive_smooth_oscillatory() {
        let got = integrate_adaptive(|x| (10.0 * x).sin(), 0.0, PI, &[], 1e-12);
        let exact = (1.0 - (10.0 * PI).cos()) / 10.0;
        assert_relative_eq!(got, exact, epsilon = 1e-11);
    }
}
