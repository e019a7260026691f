//! Weighted kernel-moment bounds.
//!
//! Tabulates, per bandwidth and evaluation point, the four normalized
//! integrals `(1/h^{d+2}) int K(dist/h) |x-y|^q dmu` for `q` in {2, 3} and
//! both distances, plus the far-tail masses beyond the normal-coordinate
//! radius. The third moments must stay below a line `c h` fitted at the
//! largest bandwidth, the second moments must stay bounded, and the far
//! tails must vanish faster than `h`.

use rayon::prelude::*;
use serde::Serialize;

use super::config::{ExperimentKind, RunConfig};
use crate::error::{Error, Result};
use crate::operators::{far_tail_integral, weighted_moment_integral, DistanceKind, QuadratureSettings};
use crate::sampling::eval_grid;
use crate::VERSION;

const EVAL_POINTS: usize = 20;
/// Slack on the fitted constants; the integrals are exact quadratures but
/// the bound is asymptotic.
const FIT_SLACK: f64 = 1.1;

#[derive(Debug, Clone, Serialize)]
pub struct MomentRow {
    pub h: f64,
    pub x_index: usize,
    pub geodesic_third: f64,
    pub geodesic_second: f64,
    pub chord_third: f64,
    pub chord_second: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct TailRow {
    pub h: f64,
    pub tail_geodesic: f64,
    pub tail_chord: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct MomentReport {
    pub version: String,
    pub experiment: String,
    pub config: RunConfig,
    /// `1.1 * max_x I_3(h_max) / h_max` per distance kind.
    pub fitted_third_constant_geodesic: f64,
    pub fitted_third_constant_chord: f64,
    pub third_moment_bounded_by_ch: bool,
    pub second_moment_bounded: bool,
    pub far_tail_is_small_o_of_h: bool,
    pub tails: Vec<TailRow>,
    #[serde(skip)]
    pub rows: Vec<MomentRow>,
}

impl MomentReport {
    pub fn csv(&self) -> String {
        let mut out = String::from(
            "h,x_index,geodesic_third,geodesic_second,chord_third,chord_second\n",
        );
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                r.h, r.x_index, r.geodesic_third, r.geodesic_second, r.chord_third, r.chord_second
            ));
        }
        out
    }

    pub fn summary_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

pub fn moment_bound_experiment(config: &RunConfig) -> Result<MomentReport> {
    if config.experiment != ExperimentKind::Moments {
        return Err(Error::config("config.experiment must be \"moments\""));
    }
    config.validate()?;
    let resolved = config.resolve()?;
    let m = resolved.manifold;
    let kernel = &resolved.kernel;
    let points = eval_grid(&m, EVAL_POINTS)?;
    let settings = QuadratureSettings::default();

    let cells: Vec<(usize, f64)> = config
        .h_grid
        .iter()
        .flat_map(|&h| (0..points.len()).map(move |i| (i, h)))
        .collect();
    let rows: Result<Vec<MomentRow>> = cells
        .par_iter()
        .map(|&(i, h)| {
            let x = &points[i];
            Ok(MomentRow {
                h,
                x_index: i,
                geodesic_third: weighted_moment_integral(
                    &m, kernel, h, x, DistanceKind::Geodesic, 3, settings,
                )?,
                geodesic_second: weighted_moment_integral(
                    &m, kernel, h, x, DistanceKind::Geodesic, 2, settings,
                )?,
                chord_third: weighted_moment_integral(
                    &m, kernel, h, x, DistanceKind::Chord, 3, settings,
                )?,
                chord_second: weighted_moment_integral(
                    &m, kernel, h, x, DistanceKind::Chord, 2, settings,
                )?,
            })
        })
        .collect();
    let mut rows = rows?;
    rows.sort_by(|a, b| b.h.total_cmp(&a.h).then(a.x_index.cmp(&b.x_index)));

    let tails: Result<Vec<TailRow>> = config
        .h_grid
        .iter()
        .map(|&h| {
            Ok(TailRow {
                h,
                tail_geodesic: far_tail_integral(&m, kernel, h, &points[0], DistanceKind::Geodesic)?,
                tail_chord: far_tail_integral(&m, kernel, h, &points[0], DistanceKind::Chord)?,
            })
        })
        .collect();
    let tails = tails?;

    let sup_over_x = |h: f64, get: fn(&MomentRow) -> f64| -> f64 {
        rows.iter()
            .filter(|r| r.h == h)
            .map(get)
            .fold(0.0f64, f64::max)
    };
    let h_max = config.h_grid[0];
    let c_geo = FIT_SLACK * sup_over_x(h_max, |r| r.geodesic_third) / h_max;
    let c_chord = FIT_SLACK * sup_over_x(h_max, |r| r.chord_third) / h_max;
    let third_ok = config.h_grid.iter().all(|&h| {
        sup_over_x(h, |r| r.geodesic_third) <= c_geo * h
            && sup_over_x(h, |r| r.chord_third) <= c_chord * h
    });
    let second_cap_geo = FIT_SLACK * sup_over_x(h_max, |r| r.geodesic_second);
    let second_cap_chord = FIT_SLACK * sup_over_x(h_max, |r| r.chord_second);
    let second_ok = config.h_grid.iter().all(|&h| {
        sup_over_x(h, |r| r.geodesic_second) <= second_cap_geo
            && sup_over_x(h, |r| r.chord_second) <= second_cap_chord
    });

    // o(h): the ratio tail/h must be nonincreasing along the decreasing h
    // grid and end below half its start, unless the tails are identically
    // negligible (compact kernels give exact zeros)
    let tail_ok = |get: fn(&TailRow) -> f64| -> bool {
        let ratios: Vec<f64> = tails.iter().map(|t| get(t) / t.h).collect();
        if ratios.iter().all(|r| *r <= 1e-15) {
            return true;
        }
        let monotone = ratios.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-12));
        monotone && ratios[ratios.len() - 1] <= 0.5 * ratios[0]
    };
    let tails_ok = tail_ok(|t| t.tail_geodesic) && tail_ok(|t| t.tail_chord);

    Ok(MomentReport {
        version: VERSION.into(),
        experiment: ExperimentKind::Moments.to_string(),
        config: config.clone(),
        fitted_third_constant_geodesic: c_geo,
        fitted_third_constant_chord: c_chord,
        third_moment_bounded_by_ch: third_ok,
        second_moment_bounded: second_ok,
        far_tail_is_small_o_of_h: tails_ok,
        tails,
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::KernelSpec;
    use crate::manifolds::{DensitySpec, ManifoldSpec, TestFunctionSpec};

    fn config(kernel: KernelSpec, manifold: ManifoldSpec) -> RunConfig {
        RunConfig {
            experiment: ExperimentKind::Moments,
            manifold,
            density: DensitySpec::Uniform,
            kernel,
            test_functions: vec![TestFunctionSpec::Coordinate { axis: 0, scale: 1.0 }],
            n_grid: vec![],
            h_rule: None,
            k_rule: None,
            h_grid: vec![0.4, 0.2, 0.1],
            seeds: vec![],
            eval_grid: 16,
            fixed_n: None,
            delta_grid: vec![],
            mc_draws: 0,
            out_dir: None,
            parallelism: 1,
            plot_script: false,
        }
    }

    #[test]
    fn indicator_moments_on_sphere() {
        let report =
            moment_bound_experiment(&config(KernelSpec::Indicator, ManifoldSpec::S2 { radius: 1.0 }))
                .unwrap();
        assert!(report.third_moment_bounded_by_ch);
        assert!(report.second_moment_bounded);
        assert!(report.far_tail_is_small_o_of_h);
        // compact support within the normal radius: exact zeros
        assert!(report.tails.iter().all(|t| t.tail_geodesic == 0.0));
        assert!(report.tails.iter().all(|t| t.tail_chord == 0.0));
        // third-moment/h ratio approximately constant across the grid
        let ratio_at = |h: f64| {
            report
                .rows
                .iter()
                .filter(|r| r.h == h)
                .map(|r| r.geodesic_third)
                .fold(0.0f64, f64::max)
                / h
        };
        let (r1, r2) = (ratio_at(0.4), ratio_at(0.1));
        assert!((r1 - r2).abs() < 0.15 * r1, "{r1} vs {r2}");
    }

    #[test]
    fn gaussian_moments_on_torus() {
        let report =
            moment_bound_experiment(&config(KernelSpec::Gaussian, ManifoldSpec::Torus {
                r1: 1.0,
                r2: 1.0,
            }))
            .unwrap();
        assert!(report.third_moment_bounded_by_ch);
        assert!(report.second_moment_bounded);
        assert!(report.far_tail_is_small_o_of_h);
    }
}
