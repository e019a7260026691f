//! Run configuration: a single JSON-serializable struct covering every
//! experiment, with per-experiment validation.
//!
//! All quantities are dimensionless; the manifold radii set the scale.
//! Unknown fields are rejected so that a config echoed into a report is
//! exactly the config that ran.

use serde::{Deserialize, Serialize};
use std::path::PathBuf;

use crate::error::{Error, Result};
use crate::kernels::{Kernel, KernelSpec};
use crate::manifolds::{
    Density, DensitySpec, Manifold, ManifoldSpec, TestFunction, TestFunctionSpec,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    Rate,
    KnnRate,
    Concentration,
    Deviation,
    Moments,
    Geometry,
    OperatorGap,
}

impl std::fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            ExperimentKind::Rate => "rate",
            ExperimentKind::KnnRate => "knn-rate",
            ExperimentKind::Concentration => "concentration",
            ExperimentKind::Deviation => "deviation",
            ExperimentKind::Moments => "moments",
            ExperimentKind::Geometry => "geometry",
            ExperimentKind::OperatorGap => "operator-gap",
        };
        f.write_str(s)
    }
}

/// Bandwidth rule `h_n = constant * n^exponent`; the exponent defaults to
/// the rate-optimal `-1/(d+4)`.
#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct BandwidthRule {
    pub constant: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub exponent: Option<f64>,
}

impl BandwidthRule {
    pub fn bandwidth(&self, n: usize, d: usize) -> f64 {
        let e = self.exponent.unwrap_or(-1.0 / (d as f64 + 4.0));
        self.constant * (n as f64).powf(e)
    }
}

/// Neighbor rule `k_n = ceil(constant * n^exponent)`; the exponent defaults
/// to the rate-optimal `4/(d+4)`.
#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct NeighborRule {
    pub constant: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub exponent: Option<f64>,
}

impl NeighborRule {
    pub fn neighbors(&self, n: usize, d: usize) -> usize {
        let e = self.exponent.unwrap_or(4.0 / (d as f64 + 4.0));
        (self.constant * (n as f64).powf(e)).ceil().max(1.0) as usize
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub experiment: ExperimentKind,
    pub manifold: ManifoldSpec,
    #[serde(default = "default_density")]
    pub density: DensitySpec,
    #[serde(default = "default_kernel")]
    pub kernel: KernelSpec,
    /// Test functions; the bounded catalog family is used by the deviation
    /// experiment regardless of this field.
    #[serde(default = "default_functions")]
    pub test_functions: Vec<TestFunctionSpec>,
    /// Sample sizes for rate, kNN-rate and concentration experiments.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub n_grid: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub h_rule: Option<BandwidthRule>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k_rule: Option<NeighborRule>,
    /// Explicit bandwidth grid for the moment and operator-gap experiments.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub h_grid: Vec<f64>,
    /// One independent run per seed.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub seeds: Vec<u64>,
    /// Size of the deterministic evaluation grid.
    #[serde(default = "default_eval_grid")]
    pub eval_grid: usize,
    /// Sample size of the deviation experiment.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fixed_n: Option<usize>,
    /// Deviation thresholds; empty selects an automatic geometric grid
    /// inside the admissible interval.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub delta_grid: Vec<f64>,
    /// Monte Carlo draws for the geometry identities.
    #[serde(default = "default_mc_draws")]
    pub mc_draws: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out_dir: Option<PathBuf>,
    /// Worker threads; any degree produces identical outputs.
    #[serde(default = "default_parallelism")]
    pub parallelism: usize,
    /// Also emit a gnuplot script next to the CSV.
    #[serde(default)]
    pub plot_script: bool,
}

fn default_density() -> DensitySpec {
    DensitySpec::Uniform
}

fn default_kernel() -> KernelSpec {
    KernelSpec::Indicator
}

fn default_functions() -> Vec<TestFunctionSpec> {
    vec![TestFunctionSpec::Coordinate { axis: 0, scale: 1.0 }]
}

fn default_eval_grid() -> usize {
    512
}

fn default_mc_draws() -> usize {
    1_000_000
}

fn default_parallelism() -> usize {
    1
}

/// Config with all named pieces constructed.
#[derive(Debug, Clone)]
pub struct Resolved {
    pub manifold: Manifold,
    pub density: Density,
    pub kernel: Kernel,
    pub functions: Vec<TestFunction>,
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: RunConfig = serde_json::from_str(text)
            .map_err(|e| Error::config(format!("config parse error: {e}")))?;
        Ok(cfg)
    }

    pub fn resolve(&self) -> Result<Resolved> {
        let manifold = self.manifold.build()?;
        let density = self.density.build()?;
        let kernel = self.kernel.build()?;
        if self.test_functions.is_empty() {
            return Err(Error::config("at least one test function is required"));
        }
        let functions = self
            .test_functions
            .iter()
            .map(|s| s.build(&manifold))
            .collect::<Result<Vec<_>>>()?;
        if self.parallelism == 0 {
            return Err(Error::config("parallelism degree must be >= 1"));
        }
        if self.eval_grid == 0 {
            return Err(Error::config("eval_grid must be >= 1"));
        }
        Ok(Resolved {
            manifold,
            density,
            kernel,
            functions,
        })
    }

    /// Validation without computation; what `--dry-run` executes.
    pub fn validate(&self) -> Result<()> {
        let resolved = self.resolve()?;
        let d = resolved.manifold.intrinsic_dim();
        match self.experiment {
            ExperimentKind::Rate => {
                self.require_seeds()?;
                self.require_n_grid()?;
                let rule = self
                    .h_rule
                    .ok_or_else(|| Error::config("rate experiment requires h_rule"))?;
                for &n in &self.n_grid {
                    check_window_condition(rule.bandwidth(n, d), n, d)?;
                }
            }
            ExperimentKind::KnnRate => {
                self.require_seeds()?;
                self.require_n_grid()?;
                let rule = self
                    .k_rule
                    .ok_or_else(|| Error::config("kNN rate experiment requires k_rule"))?;
                for &n in &self.n_grid {
                    check_knn_conditions(rule.neighbors(n, d), n, d)?;
                }
            }
            ExperimentKind::Concentration => {
                self.require_seeds()?;
                self.require_n_grid()?;
                let rule = self
                    .k_rule
                    .ok_or_else(|| Error::config("concentration experiment requires k_rule"))?;
                for &n in &self.n_grid {
                    check_knn_conditions(rule.neighbors(n, d), n, d)?;
                }
            }
            ExperimentKind::Deviation => {
                self.require_seeds()?;
                let n = self
                    .fixed_n
                    .ok_or_else(|| Error::config("deviation experiment requires fixed_n"))?;
                let rule = self
                    .h_rule
                    .ok_or_else(|| Error::config("deviation experiment requires h_rule"))?;
                let h = rule.bandwidth(n, d);
                check_window_condition(h, n, d)?;
                let lo = delta_lower_bound(h, n, d);
                if lo >= 1.0 {
                    return Err(Error::config(format!(
                        "admissible deviation interval [{lo}, 1] is empty; increase n"
                    )));
                }
                for &delta in &self.delta_grid {
                    if !(delta >= lo && delta <= 1.0) {
                        return Err(Error::config(format!(
                            "delta {delta} outside the admissible interval [{lo}, 1]"
                        )));
                    }
                }
            }
            ExperimentKind::Moments | ExperimentKind::OperatorGap => {
                if self.h_grid.is_empty() {
                    return Err(Error::config("h_grid is required"));
                }
                let mut prev = f64::INFINITY;
                for &h in &self.h_grid {
                    if !(h > 0.0) {
                        return Err(Error::config("bandwidths must be positive"));
                    }
                    if h >= prev {
                        return Err(Error::config("h_grid must be strictly decreasing"));
                    }
                    prev = h;
                }
                if self.experiment == ExperimentKind::OperatorGap {
                    for w in self.h_grid.windows(2) {
                        let ratio = w[0] / w[1];
                        if (ratio - 2.0).abs() > 1e-9 {
                            return Err(Error::config(
                                "operator-gap needs an h_grid decreasing by factor 2",
                            ));
                        }
                    }
                }
            }
            ExperimentKind::Geometry => {
                if self.mc_draws == 0 {
                    return Err(Error::config("mc_draws must be >= 1"));
                }
            }
        }
        Ok(())
    }

    fn require_seeds(&self) -> Result<()> {
        if self.seeds.is_empty() {
            return Err(Error::config("at least one seed is required"));
        }
        Ok(())
    }

    fn require_n_grid(&self) -> Result<()> {
        if self.n_grid.is_empty() {
            return Err(Error::config("n_grid must not be empty"));
        }
        let mut prev = 0usize;
        for &n in &self.n_grid {
            if n <= prev {
                return Err(Error::config("n_grid must be strictly increasing"));
            }
            prev = n;
        }
        Ok(())
    }
}

/// The bandwidth window condition at finite scale:
/// `log(1/h) / (n h^{d+2}) <= 1` and `h > 0`.
pub fn check_window_condition(h: f64, n: usize, d: usize) -> Result<()> {
    if !(h > 0.0) {
        return Err(Error::config(format!("bandwidth must be positive, got {h}")));
    }
    let w = (1.0 / h).ln() / (n as f64 * h.powi(d as i32 + 2));
    if w > 1.0 {
        return Err(Error::config(format!(
            "window condition violated at n = {n}: log(1/h)/(n h^(d+2)) = {w:.3} > 1 \
             (h = {h:.4})"
        )));
    }
    Ok(())
}

/// Finite-n versions of the admissibility conditions on the neighbor count:
/// `k <= n/2`, `k >= log n`, and the scaled window
/// `(1/n) (k/n)^(-1-2/d) log(n/k) <= 1`.
pub fn check_knn_conditions(k: usize, n: usize, d: usize) -> Result<()> {
    if k == 0 || k > n {
        return Err(Error::config(format!("k must satisfy 1 <= k <= n, got k = {k}, n = {n}")));
    }
    let (kf, nf) = (k as f64, n as f64);
    if kf > nf / 2.0 {
        return Err(Error::config(format!(
            "k = {k} is too large for n = {n}: the ratio k/n must stay small"
        )));
    }
    if kf < nf.ln() {
        return Err(Error::config(format!(
            "k = {k} is below log n = {:.1}: the radius concentration hypotheses fail",
            nf.ln()
        )));
    }
    let ratio = kf / nf;
    let w = (1.0 / nf) * ratio.powf(-1.0 - 2.0 / d as f64) * (nf / kf).ln();
    if w > 1.0 {
        return Err(Error::config(format!(
            "kNN window condition violated at n = {n}, k = {k}: value {w:.3} > 1"
        )));
    }
    Ok(())
}

/// Lower end of the admissible deviation interval,
/// `h or sqrt(log(1/h) / (n h^{d+2}))`, whichever is larger.
pub fn delta_lower_bound(h: f64, n: usize, d: usize) -> f64 {
    let stat = ((1.0 / h).ln() / (n as f64 * h.powi(d as i32 + 2))).sqrt();
    h.max(stat)
}

/// Ordinary least-squares slope of `y` against `x` with its standard error.
#[derive(Debug, Clone, Copy, Serialize, PartialEq)]
pub struct SlopeFit {
    pub slope: f64,
    pub stderr: f64,
    pub intercept: f64,
}

/// Least-squares log-log slope fit; `None` unless at least 4 points with
/// positive ordinates are available.
pub fn fit_log_log_slope(points: &[(f64, f64)]) -> Option<SlopeFit> {
    let data: Vec<(f64, f64)> = points
        .iter()
        .filter(|(x, y)| *x > 0.0 && *y > 0.0)
        .map(|(x, y)| (x.ln(), y.ln()))
        .collect();
    let n = data.len();
    if n < 4 {
        return None;
    }
    let nf = n as f64;
    let mx = data.iter().map(|p| p.0).sum::<f64>() / nf;
    let my = data.iter().map(|p| p.1).sum::<f64>() / nf;
    let sxx: f64 = data.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = data.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 = data
        .iter()
        .map(|p| (p.1 - intercept - slope * p.0).powi(2))
        .sum();
    let stderr = if n > 2 {
        (ss_res / (nf - 2.0) / sxx).sqrt()
    } else {
        f64::NAN
    };
    Some(SlopeFit {
        slope,
        stderr,
        intercept,
    })
}

/// Median of a sample (averaging the middle pair for even sizes).
pub fn median(values: &[f64]) -> f64 {
    assert!(!values.is_empty());
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Upper percentile (nearest-rank) of a sample.
pub fn percentile(values: &[f64], q: f64) -> f64 {
    assert!(!values.is_empty());
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let rank = ((q * v.len() as f64).ceil() as usize).clamp(1, v.len());
    v[rank - 1]
}

/// Spearman rank correlation with average ranks for ties.
pub fn spearman(xs: &[f64], ys: &[f64]) -> Option<f64> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return None;
    }
    let rx = average_ranks(xs);
    let ry = average_ranks(ys);
    let n = rx.len() as f64;
    let mx = rx.iter().sum::<f64>() / n;
    let my = ry.iter().sum::<f64>() / n;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for i in 0..rx.len() {
        sxy += (rx[i] - mx) * (ry[i] - my);
        sxx += (rx[i] - mx).powi(2);
        syy += (ry[i] - my).powi(2);
    }
    if sxx == 0.0 || syy == 0.0 {
        return None;
    }
    Some(sxy / (sxx * syy).sqrt())
}

fn average_ranks(xs: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..xs.len()).collect();
    idx.sort_by(|&a, &b| xs[a].total_cmp(&xs[b]));
    let mut ranks = vec![0.0; xs.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && xs[idx[j + 1]] == xs[idx[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            ranks[k] = avg;
        }
        i = j + 1;
    }
    ranks
}
