//! Measured geometry checks for the manifold catalog: distance
//! comparisons, normal-coordinate identities, exponential-map Taylor
//! bounds, pullback derivative identities, and Monte Carlo verification of
//! the rotational-symmetry integral identities behind the limit operator.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::config::{ExperimentKind, RunConfig};
use crate::error::{Error, Result};
use crate::geom::{self, Point, Tangent};
use crate::manifolds::{chord_distance, Manifold, TestFunction};
use crate::sampling::eval_grid;
use crate::VERSION;

#[derive(Debug, Clone, Serialize)]
pub struct GeometryCheckRow {
    pub name: String,
    pub measured: f64,
    pub bound: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct GeometryReport {
    pub version: String,
    pub experiment: String,
    pub config: RunConfig,
    pub checks: Vec<GeometryCheckRow>,
    pub all_pass: bool,
}

impl GeometryReport {
    pub fn csv(&self) -> String {
        let mut out = String::from("check,measured,bound,pass\n");
        for c in &self.checks {
            out.push_str(&format!("{},{},{},{}\n", c.name, c.measured, c.bound, c.pass));
        }
        out
    }

    pub fn summary_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn check(&self, name: &str) -> Option<&GeometryCheckRow> {
        self.checks.iter().find(|c| c.name == name)
    }
}

fn row(name: &str, measured: f64, bound: f64) -> GeometryCheckRow {
    GeometryCheckRow {
        name: name.into(),
        measured,
        bound,
        pass: measured <= bound,
    }
}

pub fn geometry_check_experiment(config: &RunConfig) -> Result<GeometryReport> {
    if config.experiment != ExperimentKind::Geometry {
        return Err(Error::config("config.experiment must be \"geometry\""));
    }
    config.validate()?;
    let resolved = config.resolve()?;
    let m = resolved.manifold;
    let seed = config.seeds.first().copied().unwrap_or(0);

    let mut checks = Vec::new();
    checks.extend(distance_comparison_checks(&m, seed)?);
    checks.extend(normal_metric_checks(&m, seed)?);
    checks.extend(exp_map_taylor_checks(&m)?);
    checks.extend(pullback_identity_checks(&m)?);
    if matches!(m, Manifold::Sphere { dim: 2, .. }) {
        checks.extend(symmetry_integral_checks(&m, config.mc_draws, seed)?);
    }

    let all_pass = checks.iter().all(|c| c.pass);
    Ok(GeometryReport {
        version: VERSION.into(),
        experiment: ExperimentKind::Geometry.to_string(),
        config: config.clone(),
        checks,
        all_pass,
    })
}

fn random_point(m: &Manifold, rng: &mut ChaCha8Rng) -> Point {
    match *m {
        Manifold::Sphere { dim, radius } => loop {
            let mut x = [0.0f64; 4];
            let mut n2 = 0.0;
            for c in x.iter_mut().take(dim + 1) {
                *c = rng.gen::<f64>() * 2.0 - 1.0;
                n2 += *c * *c;
            }
            if n2 > 1e-3 && n2 <= 1.0 {
                return geom::scale(&x, radius / n2.sqrt());
            }
        },
        Manifold::FlatTorus { r1, r2 } => {
            let a = rng.gen::<f64>() * std::f64::consts::TAU;
            let b = rng.gen::<f64>() * std::f64::consts::TAU;
            [r1 * a.cos(), r1 * a.sin(), r2 * b.cos(), r2 * b.sin()]
        }
    }
}

/// Chord never exceeds geodesic; on spheres the cubic correction ratio
/// `(rho - l)/l^3` stays within its curvature band and matches the Taylor
/// constant `1/(24 R^2)` at small distances.
fn distance_comparison_checks(m: &Manifold, seed: u64) -> Result<Vec<GeometryCheckRow>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x6765_6f6d);
    let mut max_violation: f64 = f64::NEG_INFINITY;
    let mut max_ratio: f64 = 0.0;
    let mut min_ratio: f64 = f64::INFINITY;
    for _ in 0..500 {
        let x = random_point(m, &mut rng);
        let y = random_point(m, &mut rng);
        let chord = chord_distance(&x, &y);
        let rho = m.geodesic_distance(&x, &y)?;
        max_violation = max_violation.max(chord - rho);
        if chord > 1e-8 {
            let ratio = (rho - chord) / chord.powi(3);
            max_ratio = max_ratio.max(ratio);
            min_ratio = min_ratio.min(ratio);
        }
    }
    let mut rows = vec![row("chord_le_geodesic", max_violation, 1e-12)];

    if let Manifold::Sphere { radius, .. } = *m {
        // the curvature band is tightest on geodesic distances up to R
        let mut band_max: f64 = 0.0;
        let mut band_min = f64::INFINITY;
        for i in 1..=100 {
            let rho = radius * i as f64 / 100.0;
            let chord = 2.0 * radius * (rho / (2.0 * radius)).sin();
            let ratio = (rho - chord) / chord.powi(3);
            band_max = band_max.max(ratio);
            band_min = band_min.min(ratio);
        }
        rows.push(row(
            "distance_ratio_upper",
            band_max,
            0.05 / (radius * radius),
        ));
        rows.push(GeometryCheckRow {
            name: "distance_ratio_positive".into(),
            measured: band_min,
            bound: 0.0,
            pass: band_min > 0.0,
        });
        // Taylor constant at rho = 0.01 R: theta - 2 sin(theta/2) ~ theta^3/24
        let rho = 0.01 * radius;
        let chord = 2.0 * radius * (rho / (2.0 * radius)).sin();
        let ratio = (rho - chord) / chord.powi(3);
        let expect = 1.0 / (24.0 * radius * radius);
        rows.push(row(
            "distance_ratio_taylor",
            (ratio - expect).abs() / expect,
            0.05,
        ));
    } else {
        // measured constant of the cubic comparison, informational
        rows.push(GeometryCheckRow {
            name: "distance_ratio_constant".into(),
            measured: max_ratio,
            bound: f64::INFINITY,
            pass: max_ratio.is_finite() && min_ratio >= -1e-12,
        });
    }
    Ok(rows)
}

/// Normal-coordinate metric: identity at the origin to 1e-10 and vanishing
/// centered first differences (step 1e-4) to 1e-6.
#[allow(clippy::needless_range_loop)]
fn normal_metric_checks(m: &Manifold, seed: u64) -> Result<Vec<GeometryCheckRow>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x6d65_7472);
    let d = m.intrinsic_dim();
    let mut max_identity_defect: f64 = 0.0;
    let mut max_first_derivative: f64 = 0.0;
    let step = 1e-4;
    for _ in 0..50 {
        let x = random_point(m, &mut rng);
        let g0 = m.metric_in_normal_coords(&x, &[0.0; 3])?;
        for i in 0..d {
            for j in 0..d {
                let expect = if i == j { 1.0 } else { 0.0 };
                max_identity_defect = max_identity_defect.max((g0[i][j] - expect).abs());
            }
        }
        for k in 0..d {
            let mut vp = [0.0f64; 3];
            vp[k] = step;
            let mut vm = [0.0f64; 3];
            vm[k] = -step;
            let gp = m.metric_in_normal_coords(&x, &vp)?;
            let gm = m.metric_in_normal_coords(&x, &vm)?;
            for i in 0..d {
                for j in 0..d {
                    max_first_derivative = max_first_derivative
                        .max(((gp[i][j] - gm[i][j]) / (2.0 * step)).abs());
                }
            }
        }
    }
    Ok(vec![
        row("normal_metric_identity", max_identity_defect, 1e-10),
        row("normal_metric_first_derivative", max_first_derivative, 1e-6),
    ])
}

/// Exponential-map Taylor structure: contraction `|E_x(v) - x| <= |v|`,
/// the second-order constant `c2`, and the quadratic metric-determinant
/// bound.
fn exp_map_taylor_checks(m: &Manifold) -> Result<Vec<GeometryCheckRow>> {
    let d = m.intrinsic_dim();
    let c1 = m.normal_radius();
    let xs = eval_grid(m, 24)?;
    let mut contraction_excess: f64 = f64::NEG_INFINITY;
    let mut c2_measured: f64 = 0.0;
    let mut det_ratio: f64 = 0.0;
    for x in &xs {
        let frame = m.tangent_frame(x);
        for dir_idx in 0..(2 * d) {
            for step in 1..=8 {
                let r = 0.95 * c1 * step as f64 / 8.0;
                let mut v = [0.0f64; 3];
                let axis = dir_idx / 2;
                v[axis] = if dir_idx % 2 == 0 { r } else { -r };
                if d > 1 {
                    // mix axes so the grid is not axis-aligned only
                    let other = (axis + 1) % d;
                    v[other] = 0.3 * v[axis];
                }
                let norm = geom::tangent_norm(&v);
                if norm >= c1 {
                    continue;
                }
                let y = m.exp_map_with_frame(x, &frame, &v)?;
                contraction_excess = contraction_excess.max(geom::dist(&y, x) - norm);
                // first-order remainder against c2 |v|^2
                let mut linear = *x;
                for i in 0..d {
                    linear = geom::axpy(&linear, v[i], &frame[i]);
                }
                let remainder = geom::dist(&y, &linear);
                c2_measured = c2_measured.max(remainder / (norm * norm));
                let det = m.metric_det_normal_unchecked(norm);
                det_ratio = det_ratio.max(((det - 1.0).abs()) / (norm * norm));
            }
        }
    }
    let c2_bound = match *m {
        Manifold::Sphere { radius, .. } => 1.0 / (2.0 * radius),
        Manifold::FlatTorus { r1, r2 } => 1.0 / (2.0 * r1.min(r2)),
    };
    let det_bound = match *m {
        // (sin t / t)^{d-1} deviates by at most (d-1) t^2 / 6
        Manifold::Sphere { dim, radius } => {
            ((dim as f64 - 1.0) / (6.0 * radius * radius)).max(1e-15)
        }
        Manifold::FlatTorus { .. } => 1e-15,
    };
    Ok(vec![
        row("exp_map_contraction", contraction_excess, 1e-12),
        row("exp_map_second_order_constant", c2_measured, c2_bound * (1.0 + 1e-9)),
        row("metric_det_quadratic_bound", det_ratio, det_bound * (1.0 + 1e-9)),
    ])
}

/// In normal coordinates the tangential gradient pairing and the
/// Laplace-Beltrami operator match the flat ones of the pullbacks at the
/// origin (finite differences, tolerance 1e-5).
fn pullback_identity_checks(m: &Manifold) -> Result<Vec<GeometryCheckRow>> {
    let d = m.intrinsic_dim();
    let amb = m.ambient_dim();
    let f = TestFunction::cross(0, amb - 1);
    let h_fn = TestFunction::coordinate(1);
    let xs = eval_grid(m, 16)?;
    let eps = 1e-4;
    let mut grad_defect: f64 = 0.0;
    let mut lap_defect: f64 = 0.0;
    for x in &xs {
        let frame = m.tangent_frame(x);
        let pullback = |g: &TestFunction, v: &Tangent| -> Result<f64> {
            Ok(g.value(&m.exp_map_with_frame(x, &frame, v)?))
        };
        let mut flat_inner = 0.0;
        let mut flat_lap = 0.0;
        let f0 = f.value(x);
        for i in 0..d {
            let mut vp = [0.0f64; 3];
            vp[i] = eps;
            let mut vm = [0.0f64; 3];
            vm[i] = -eps;
            let df = (pullback(&f, &vp)? - pullback(&f, &vm)?) / (2.0 * eps);
            let dh = (pullback(&h_fn, &vp)? - pullback(&h_fn, &vm)?) / (2.0 * eps);
            flat_inner += df * dh;
            flat_lap += (pullback(&f, &vp)? - 2.0 * f0 + pullback(&f, &vm)?) / (eps * eps);
        }
        let inner = geom::dot(&f.grad_manifold(m, x), &h_fn.grad_manifold(m, x));
        grad_defect = grad_defect.max((inner - flat_inner).abs());
        lap_defect = lap_defect.max((f.laplace_beltrami(m, x) - flat_lap).abs());
    }
    Ok(vec![
        row("pullback_gradient_identity", grad_defect, 1e-5),
        row("pullback_laplacian_identity", lap_defect, 1e-5),
    ])
}

/// Monte Carlo verification of the two rotational-symmetry integral
/// identities (indicator weight, normal parameterization, ball radius 1.3):
/// the gradient-pairing identity and the Laplacian identity. Measured in
/// standard-error units; the bound is 3.
fn symmetry_integral_checks(
    m: &Manifold,
    draws: usize,
    seed: u64,
) -> Result<Vec<GeometryCheckRow>> {
    let d = m.intrinsic_dim();
    assert_eq!(d, 2, "the symmetry checks run on S^2");
    // a generic base point: off the equator and off the coordinate planes
    let x = eval_grid(m, 7)?[2];
    let frame = m.tangent_frame(&x);
    let f = TestFunction::cross(0, 2);
    let h_fn = TestFunction::coordinate(1);
    let ball_radius = 1.3f64;
    let indicator = |r: f64| if r <= 1.0 { 1.0 } else { 0.0 };

    // shared RHS factor: (1/d) int_{B(0,c)} G(|v|) |v|^2 dv, closed form
    let factor = std::f64::consts::PI / 4.0 * ball_radius.min(1.0).powi(4) * 2.0 / d as f64;

    let grad_f = f.grad_ambient(&x);
    let grad_h = h_fn.grad_ambient(&x);
    // pullback gradients at 0 are exact by the chain rule
    let pf = [geom::dot(&grad_f, &frame[0]), geom::dot(&grad_f, &frame[1])];
    let ph = [geom::dot(&grad_h, &frame[0]), geom::dot(&grad_h, &frame[1])];
    let rhs_gradient = (pf[0] * ph[0] + pf[1] * ph[1]) * factor;
    let rhs_laplacian = 0.5 * f.laplace_beltrami(m, &x) * factor;

    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x73796d6d);
    let area = std::f64::consts::PI * ball_radius * ball_radius;
    let mut sum1 = geom::KahanSum::new();
    let mut sq1 = 0.0;
    let mut sum2 = geom::KahanSum::new();
    let mut sq2 = 0.0;
    for _ in 0..draws {
        let r = ball_radius * rng.gen::<f64>().sqrt();
        let phi = rng.gen::<f64>() * std::f64::consts::TAU;
        let v: Tangent = [r * phi.cos(), r * phi.sin(), 0.0];
        let g = indicator(r);
        // k'(0)(v) in the frame
        let mut kv = [0.0f64; 4];
        for i in 0..d {
            kv = geom::axpy(&kv, v[i], &frame[i]);
        }
        let t1 = g * geom::dot(&grad_f, &kv) * geom::dot(&grad_h, &kv);
        sum1.add(t1);
        sq1 += t1 * t1;

        let kvv = m.exp_map_second_derivative(&x, &v)?;
        let t2 = g
            * (geom::dot(&grad_f, &geom::axpy(&kv, 0.5, &kvv))
                + 0.5 * f.hess_apply(&x, &kv, &kv));
        sum2.add(t2);
        sq2 += t2 * t2;
    }
    let n = draws as f64;
    let finish = |sum: f64, sq: f64, rhs: f64| -> (f64, f64) {
        let mean = sum / n;
        let var = (sq / n - mean * mean).max(0.0);
        let se = area * (var / n).sqrt();
        let lhs = area * mean;
        ((lhs - rhs).abs() / se.max(1e-300), se)
    };
    let (dev1, se1) = finish(sum1.value(), sq1, rhs_gradient);
    let (dev2, se2) = finish(sum2.value(), sq2, rhs_laplacian);
    // a zero standard error means the integrand degenerated and the check
    // would be vacuous; treat that as a failure
    let mut row1 = row("symmetry_integral_gradient_se", dev1, 3.0);
    row1.pass = row1.pass && se1 > 0.0;
    let mut row2 = row("symmetry_integral_laplacian_se", dev2, 3.0);
    row2.pass = row2.pass && se2 > 0.0;
    Ok(vec![row1, row2])
}
