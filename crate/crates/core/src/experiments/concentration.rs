//! Concentration of the kNN radius around its deterministic profile.
//!
//! For each `(n, seed)` cell the relative deviation
//! `| R_{n,k}(x) / (k / (n p(x) V_d))^{1/d} - 1 |` is maximized over the
//! evaluation grid and the sample points; medians and 95th percentiles over
//! seeds are reported per sample size.

use rayon::prelude::*;
use serde::Serialize;

use super::config::{median, percentile, ExperimentKind, RunConfig};
use crate::error::{Error, Result};
use crate::neighbors::NeighborIndex;
use crate::sampling::{eval_grid, sample};
use crate::special::unit_ball_volume;
use crate::VERSION;

#[derive(Debug, Clone, Serialize)]
pub struct ConcentrationRow {
    pub n: usize,
    pub k: usize,
    pub seed: u64,
    pub sup_rel_deviation: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ConcentrationSummaryRow {
    pub n: usize,
    pub k: usize,
    pub median_deviation: f64,
    pub p95_deviation: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ConcentrationReport {
    pub version: String,
    pub experiment: String,
    pub config: RunConfig,
    pub per_n: Vec<ConcentrationSummaryRow>,
    pub medians_decreasing: bool,
    #[serde(skip)]
    pub rows: Vec<ConcentrationRow>,
}

impl ConcentrationReport {
    pub fn csv(&self) -> String {
        let mut out = String::from("n,k,seed,sup_rel_deviation\n");
        for r in &self.rows {
            out.push_str(&format!("{},{},{},{}\n", r.n, r.k, r.seed, r.sup_rel_deviation));
        }
        out
    }

    pub fn summary_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

pub fn radius_concentration_experiment(config: &RunConfig) -> Result<ConcentrationReport> {
    if config.experiment != ExperimentKind::Concentration {
        return Err(Error::config("config.experiment must be \"concentration\""));
    }
    config.validate()?;
    let resolved = config.resolve()?;
    let m = resolved.manifold;
    let d = m.intrinsic_dim();
    let rule = config.k_rule.expect("validated");
    let v_d = unit_ball_volume(d);

    let cells: Vec<(usize, u64)> = config
        .n_grid
        .iter()
        .flat_map(|&n| config.seeds.iter().map(move |&s| (n, s)))
        .collect();
    let rows: Result<Vec<ConcentrationRow>> = cells
        .par_iter()
        .map(|&(n, seed)| {
            let k = rule.neighbors(n, d);
            let cloud = sample(&m, &resolved.density, n, seed)?;
            let index = NeighborIndex::build(&cloud);
            let mut points = eval_grid(&m, config.eval_grid)?;
            points.extend_from_slice(&cloud.points);
            let ratio = k as f64 / n as f64;
            let sup = points
                .par_iter()
                .map(|x| -> Result<f64> {
                    let radius = index.knn_radius(x, k)?;
                    let profile =
                        (ratio / (resolved.density.value(&m, x) * v_d)).powf(1.0 / d as f64);
                    Ok((radius / profile - 1.0).abs())
                })
                .try_reduce(|| 0.0f64, |a, b| Ok(a.max(b)))?;
            Ok(ConcentrationRow {
                n,
                k,
                seed,
                sup_rel_deviation: sup,
            })
        })
        .collect();
    let mut rows = rows?;
    rows.sort_by_key(|r| (r.n, r.seed));

    let mut per_n = Vec::new();
    for &n in &config.n_grid {
        let sups: Vec<f64> = rows
            .iter()
            .filter(|r| r.n == n)
            .map(|r| r.sup_rel_deviation)
            .collect();
        if sups.is_empty() {
            continue;
        }
        let k = rows.iter().find(|r| r.n == n).unwrap().k;
        per_n.push(ConcentrationSummaryRow {
            n,
            k,
            median_deviation: median(&sups),
            p95_deviation: percentile(&sups, 0.95),
        });
    }
    let decreasing = per_n
        .windows(2)
        .all(|w| w[1].median_deviation < w[0].median_deviation);
    Ok(ConcentrationReport {
        version: VERSION.into(),
        experiment: ExperimentKind::Concentration.to_string(),
        config: config.clone(),
        per_n,
        medians_decreasing: decreasing,
        rows,
    })
}
