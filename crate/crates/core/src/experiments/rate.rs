//! Convergence-rate experiments for the graph Laplacian and the kNN
//! Laplacian.
//!
//! For each `(n, seed)` cell a cloud is sampled, the estimator is evaluated
//! over the evaluation grid plus the sample points themselves, and the
//! supremum of the distance to the closed-form limit operator is recorded.
//! Rates are fitted on medians across seeds: the convergence statements are
//! almost-sure, and medians resist rare heavy draws.

use rayon::prelude::*;
use serde::Serialize;

use super::config::{fit_log_log_slope, median, ExperimentKind, Resolved, RunConfig, SlopeFit};
use crate::error::{Error, Result};
use crate::geom::Point;
use crate::manifolds::{limit_operator, TestFunction};
use crate::neighbors::NeighborIndex;
use crate::operators::{graph_laplacian, knn_laplacian};
use crate::sampling::{eval_grid, sample};
use crate::VERSION;

#[derive(Debug, Clone, Serialize)]
pub struct RateRow {
    pub n: usize,
    /// Bandwidth `h` (rate) or neighbor count `k` (kNN rate).
    pub h_or_k: f64,
    pub seed: u64,
    pub sup_error: f64,
    /// kNN rate only: max over a log-spaced bandwidth window of the graph
    /// Laplacian sup error on the evaluation grid.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub window_sup_error: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct MedianRow {
    pub n: usize,
    pub h_or_k: f64,
    pub median_sup_error: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct RateReport {
    pub version: String,
    pub experiment: String,
    pub config: RunConfig,
    pub medians: Vec<MedianRow>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub slope: Option<SlopeFit>,
    pub medians_strictly_decreasing: bool,
    #[serde(skip)]
    pub rows: Vec<RateRow>,
}

impl RateReport {
    pub fn csv(&self) -> String {
        let mut out = String::from("n,h_or_k,seed,sup_error");
        let with_window = self.rows.iter().any(|r| r.window_sup_error.is_some());
        if with_window {
            out.push_str(",window_sup_error");
        }
        out.push('\n');
        for r in &self.rows {
            out.push_str(&format!("{},{},{},{}", r.n, r.h_or_k, r.seed, r.sup_error));
            if with_window {
                out.push_str(&format!(",{}", r.window_sup_error.unwrap_or(f64::NAN)));
            }
            out.push('\n');
        }
        out
    }

    pub fn summary_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn plot_script(&self, csv_name: &str) -> String {
        format!(
            "set logscale xy\n\
             set xlabel 'n'\n\
             set ylabel 'sup error'\n\
             set datafile separator ','\n\
             plot '{csv_name}' every ::1 using 1:4 with points title 'sup error'\n"
        )
    }
}

/// Supremum locations: the deterministic grid plus all sample points.
fn sup_points(resolved: &Resolved, grid_size: usize, samples: &[Point]) -> Result<Vec<Point>> {
    let mut pts = eval_grid(&resolved.manifold, grid_size)?;
    pts.extend_from_slice(samples);
    Ok(pts)
}

fn sup_error_of_field(
    resolved: &Resolved,
    f: &TestFunction,
    points: &[Point],
    values: &[f64],
) -> Result<f64> {
    let mut sup: f64 = 0.0;
    for (x, v) in points.iter().zip(values) {
        let limit = limit_operator(
            &resolved.manifold,
            &resolved.density,
            f,
            &resolved.kernel,
            x,
        )?;
        sup = sup.max((v - limit).abs());
    }
    Ok(sup)
}

fn finish_report(
    kind: ExperimentKind,
    config: &RunConfig,
    mut rows: Vec<RateRow>,
) -> RateReport {
    rows.sort_by_key(|r| (r.n, r.seed));
    let mut medians: Vec<MedianRow> = Vec::new();
    for &n in &config.n_grid {
        let sup: Vec<f64> = rows
            .iter()
            .filter(|r| r.n == n)
            .map(|r| r.sup_error)
            .collect();
        if sup.is_empty() {
            continue;
        }
        let h_or_k = rows.iter().find(|r| r.n == n).unwrap().h_or_k;
        medians.push(MedianRow {
            n,
            h_or_k,
            median_sup_error: median(&sup),
        });
    }
    let slope = fit_log_log_slope(
        &medians
            .iter()
            .map(|m| (m.n as f64, m.median_sup_error))
            .collect::<Vec<_>>(),
    );
    let decreasing = medians
        .windows(2)
        .all(|w| w[1].median_sup_error < w[0].median_sup_error);
    RateReport {
        version: VERSION.into(),
        experiment: kind.to_string(),
        config: config.clone(),
        medians,
        slope,
        medians_strictly_decreasing: decreasing,
        rows,
    }
}

/// Uniform-convergence rate of the graph Laplacian along the configured
/// bandwidth rule.
pub fn rate_experiment(config: &RunConfig) -> Result<RateReport> {
    if config.experiment != ExperimentKind::Rate {
        return Err(Error::config("config.experiment must be \"rate\""));
    }
    config.validate()?;
    let resolved = config.resolve()?;
    let d = resolved.manifold.intrinsic_dim();
    let rule = config.h_rule.expect("validated");

    let cells: Vec<(usize, u64)> = config
        .n_grid
        .iter()
        .flat_map(|&n| config.seeds.iter().map(move |&s| (n, s)))
        .collect();
    let rows: Result<Vec<RateRow>> = cells
        .par_iter()
        .map(|&(n, seed)| {
            let h = rule.bandwidth(n, d);
            let cloud = sample(&resolved.manifold, &resolved.density, n, seed)?;
            let index = NeighborIndex::build(&cloud);
            let points = sup_points(&resolved, config.eval_grid, &cloud.points)?;
            let mut sup: f64 = 0.0;
            for f in &resolved.functions {
                let field = graph_laplacian(&cloud, &index, &resolved.kernel, h, f, &points)?;
                sup = sup.max(sup_error_of_field(&resolved, f, &points, &field.values)?);
            }
            Ok(RateRow {
                n,
                h_or_k: h,
                seed,
                sup_error: sup,
                window_sup_error: None,
            })
        })
        .collect();
    Ok(finish_report(ExperimentKind::Rate, config, rows?))
}

/// Consistency rate of the kNN Laplacian along the configured neighbor
/// rule, with the window-uniform diagnostic of the bandwidth interval that
/// contains the random radii.
pub fn knn_rate_experiment(config: &RunConfig) -> Result<RateReport> {
    if config.experiment != ExperimentKind::KnnRate {
        return Err(Error::config("config.experiment must be \"knn-rate\""));
    }
    config.validate()?;
    let resolved = config.resolve()?;
    let d = resolved.manifold.intrinsic_dim();
    let rule = config.k_rule.expect("validated");
    let v_d = crate::special::unit_ball_volume(d);
    let p_min = resolved.density.min(&resolved.manifold);
    let p_max = resolved.density.max(&resolved.manifold);
    // the random radii concentrate inside [kappa^{-1} h*, kappa h*]
    let kappa = (p_max / p_min).powf(1.0 / d as f64) + 1.0;

    let cells: Vec<(usize, u64)> = config
        .n_grid
        .iter()
        .flat_map(|&n| config.seeds.iter().map(move |&s| (n, s)))
        .collect();
    let rows: Result<Vec<RateRow>> = cells
        .par_iter()
        .map(|&(n, seed)| {
            let k = rule.neighbors(n, d);
            let cloud = sample(&resolved.manifold, &resolved.density, n, seed)?;
            let index = NeighborIndex::build(&cloud);
            let points = sup_points(&resolved, config.eval_grid, &cloud.points)?;
            let mut sup: f64 = 0.0;
            for f in &resolved.functions {
                let field = knn_laplacian(&cloud, &index, k, f, &points)?;
                sup = sup.max(sup_error_of_field(&resolved, f, &points, &field.values)?);
            }

            // window-uniform diagnostic on the grid alone (5 log-spaced
            // bandwidths spanning the concentration window)
            let grid = eval_grid(&resolved.manifold, config.eval_grid)?;
            let ratio = k as f64 / n as f64;
            let h_lo = (ratio / (p_max * v_d)).powf(1.0 / d as f64);
            let h_hi = (ratio / (p_min * v_d)).powf(1.0 / d as f64);
            let h_star = (h_lo * h_hi).sqrt();
            let mut window_sup: f64 = 0.0;
            for j in 0..5 {
                let r = h_star / kappa * kappa.powf(2.0 * j as f64 / 4.0);
                for f in &resolved.functions {
                    let field =
                        graph_laplacian(&cloud, &index, &resolved.kernel, r, f, &grid)?;
                    window_sup =
                        window_sup.max(sup_error_of_field(&resolved, f, &grid, &field.values)?);
                }
            }
            Ok(RateRow {
                n,
                h_or_k: k as f64,
                seed,
                sup_error: sup,
                window_sup_error: Some(window_sup),
            })
        })
        .collect();
    Ok(finish_report(ExperimentKind::KnnRate, config, rows?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiments::config::{BandwidthRule, NeighborRule};
    use crate::kernels::KernelSpec;
    use crate::manifolds::{DensitySpec, ManifoldSpec, TestFunctionSpec};

    fn small_rate_config() -> RunConfig {
        RunConfig {
            experiment: ExperimentKind::Rate,
            manifold: ManifoldSpec::S2 { radius: 1.0 },
            density: DensitySpec::Uniform,
            kernel: KernelSpec::Indicator,
            test_functions: vec![TestFunctionSpec::Coordinate { axis: 0, scale: 1.0 }],
            n_grid: vec![256, 512],
            h_rule: Some(BandwidthRule {
                constant: 1.0,
                exponent: Some(-1.0 / 6.0),
            }),
            k_rule: None,
            h_grid: vec![],
            seeds: vec![1, 2, 3],
            eval_grid: 32,
            fixed_n: None,
            delta_grid: vec![],
            mc_draws: 0,
            out_dir: None,
            parallelism: 1,
            plot_script: false,
        }
    }

    #[test]
    fn rate_experiment_is_deterministic() {
        let cfg = small_rate_config();
        let a = rate_experiment(&cfg).unwrap();
        let b = rate_experiment(&cfg).unwrap();
        assert_eq!(a.csv(), b.csv());
        assert_eq!(a.summary_json().unwrap(), b.summary_json().unwrap());
        assert!(a.rows.iter().all(|r| r.sup_error >= 0.0));
        // fewer than 4 distinct n: no slope
        assert!(a.slope.is_none());
    }

    #[test]
    fn constant_function_gives_zero_errors() {
        let mut cfg = small_rate_config();
        cfg.test_functions = vec![TestFunctionSpec::Constant { value: 1.0 }];
        let report = rate_experiment(&cfg).unwrap();
        assert!(report.rows.iter().all(|r| r.sup_error == 0.0));
    }

    #[test]
    fn knn_rate_smoke() {
        let mut cfg = small_rate_config();
        cfg.experiment = ExperimentKind::KnnRate;
        cfg.n_grid = vec![512, 1024];
        cfg.seeds = vec![1, 2];
        cfg.k_rule = Some(NeighborRule {
            constant: 1.0,
            exponent: None,
        });
        let report = knn_rate_experiment(&cfg).unwrap();
        assert_eq!(report.rows.len(), 4);
        assert!(report.rows.iter().all(|r| r.window_sup_error.is_some()));
        let csv = report.csv();
        assert!(csv.starts_with("n,h_or_k,seed,sup_error,window_sup_error\n"));
        // degenerate k = n rejected
        cfg.k_rule = Some(NeighborRule {
            constant: 1.0,
            exponent: Some(1.0),
        });
        assert!(knn_rate_experiment(&cfg).is_err());
    }
}
