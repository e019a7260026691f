//! Command-line front-end: kernel inspection, cloud generation, operator
//! evaluation and the experiment suite, all driven by flags or JSON
//! configs.
//!
//! Exit codes: 0 on success, 1 on configuration or input errors, 2 on
//! numerical failures (quadrature nonconvergence, degenerate evaluation
//! points). All outputs land inside the selected output directory
//! (`--out-dir`, then the config, then `BELTRAMI_OUT_DIR`, then
//! `./beltrami-out`).

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use beltrami::error::Error;
use beltrami::experiments::{
    self, ExperimentKind, RunConfig,
};
use beltrami::kernels::Kernel;
use beltrami::manifolds::{Density, Manifold, TestFunction};
use beltrami::neighbors::NeighborIndex;
use beltrami::operators::{graph_laplacian, knn_laplacian};
use beltrami::sampling::{eval_grid, read_cloud_csv, sample, write_cloud_csv, SampleCloud};

const OUT_DIR_ENV: &str = "BELTRAMI_OUT_DIR";

#[derive(Parser)]
#[command(
    name = "beltrami",
    version,
    about = "Graph Laplacians on compact manifolds: estimators and experiments"
)]
struct Cli {
    /// Output directory; overrides the config file and BELTRAMI_OUT_DIR.
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Print the diffusion constant and moment diagnostics of a kernel.
    KernelInfo {
        /// Catalog kernel name (indicator, gaussian, triangular, annulus).
        #[arg(long)]
        kernel: String,
        /// Intrinsic dimension the constants refer to.
        #[arg(long)]
        dim: usize,
    },
    /// Sample a reproducible cloud and write it as CSV.
    Sample {
        #[command(flatten)]
        cloud: CloudArgs,
    },
    /// Evaluate the graph Laplacian on an evaluation grid.
    Laplacian {
        #[command(flatten)]
        cloud: CloudArgs,
        /// Read the cloud from a CSV instead of sampling.
        #[arg(long, conflicts_with_all = ["n", "seed"])]
        cloud_file: Option<PathBuf>,
        #[arg(long, default_value = "indicator")]
        kernel: String,
        #[arg(long)]
        h: f64,
        /// Test function (constant:V, coordinate:AXIS or cross:I,J).
        #[arg(long, default_value = "coordinate:0")]
        function: String,
        /// Evaluation grid size.
        #[arg(long, default_value_t = 64)]
        grid: usize,
    },
    /// Evaluate the kNN Laplacian on an evaluation grid.
    KnnLaplacian {
        #[command(flatten)]
        cloud: CloudArgs,
        #[arg(long, conflicts_with_all = ["n", "seed"])]
        cloud_file: Option<PathBuf>,
        #[arg(long)]
        k: usize,
        #[arg(long, default_value = "coordinate:0")]
        function: String,
        #[arg(long, default_value_t = 64)]
        grid: usize,
    },
    /// Graph-Laplacian convergence-rate experiment.
    Rate(ConfigArgs),
    /// kNN-Laplacian convergence-rate experiment.
    KnnRate(ConfigArgs),
    /// kNN-radius concentration experiment.
    Concentration(ConfigArgs),
    /// Deviation-probability shape experiment.
    Deviation(ConfigArgs),
    /// Weighted kernel-moment bound experiment.
    Moments(ConfigArgs),
    /// Geometry checks for the manifold catalog.
    Geometry(ConfigArgs),
    /// Deterministic-operator convergence experiment.
    OperatorGap(ConfigArgs),
}

#[derive(Args)]
struct CloudArgs {
    /// Manifold name: s1, s2, s3 or torus.
    #[arg(long, default_value = "s2")]
    manifold: String,
    /// Sphere radius.
    #[arg(long, default_value_t = 1.0)]
    radius: f64,
    /// Torus factor radii.
    #[arg(long, default_value_t = 1.0)]
    r1: f64,
    #[arg(long, default_value_t = 1.0)]
    r2: f64,
    /// Density: uniform or tilted (with --beta).
    #[arg(long, default_value = "uniform")]
    density: String,
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long, default_value_t = 1000)]
    n: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct ConfigArgs {
    /// JSON run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Validate the configuration (including the bandwidth window
    /// condition) without computing anything.
    #[arg(long)]
    dry_run: bool,
}

fn main() -> ExitCode {
    // die quietly when the downstream pipe closes (e.g. `| head`)
    #[cfg(unix)]
    unsafe {
        libc::signal(libc::SIGPIPE, libc::SIG_DFL);
    }
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // help/version requests are successful exits
            if e.use_stderr() {
                eprint!("{e}");
                return ExitCode::from(1);
            }
            print!("{e}");
            return ExitCode::SUCCESS;
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::QuadratureNonconvergence(_) | Error::DegeneratePoint { .. } => 2,
        _ => 1,
    }
}


fn run(cli: Cli) -> Result<(), Error> {
    match cli.cmd {
        Cmd::KernelInfo { kernel, dim } => kernel_info(&kernel, dim),
        Cmd::Sample { cloud } => {
            let out = resolve_out_dir(cli.out_dir.as_deref(), None);
            let (m, p) = cloud.build()?;
            let c = sample(&m, &p, cloud.n, cloud.seed)?;
            let path = write_into(&out, &cloud_file_name(&c), |w| write_cloud_csv(&c, w))?;
            println!("wrote {}", path.display());
            Ok(())
        }
        Cmd::Laplacian {
            cloud,
            cloud_file,
            kernel,
            h,
            function,
            grid,
        } => {
            let out = resolve_out_dir(cli.out_dir.as_deref(), None);
            let c = load_or_sample(&cloud, cloud_file.as_deref())?;
            let kernel = Kernel::by_name(&kernel)?;
            let f = parse_function(&function, &c.manifold)?;
            let xs = eval_grid(&c.manifold, grid)?;
            let index = NeighborIndex::build(&c);
            let field = graph_laplacian(&c, &index, &kernel, h, &f, &xs)?;
            let m = c.manifold.ambient_dim();
            let path = write_into(&out, "laplacian.csv", |w| field.write_csv(m, w))?;
            println!("wrote {}", path.display());
            Ok(())
        }
        Cmd::KnnLaplacian {
            cloud,
            cloud_file,
            k,
            function,
            grid,
        } => {
            let out = resolve_out_dir(cli.out_dir.as_deref(), None);
            let c = load_or_sample(&cloud, cloud_file.as_deref())?;
            let f = parse_function(&function, &c.manifold)?;
            let xs = eval_grid(&c.manifold, grid)?;
            let index = NeighborIndex::build(&c);
            let field = knn_laplacian(&c, &index, k, &f, &xs)?;
            let m = c.manifold.ambient_dim();
            let path = write_into(&out, "knn_laplacian.csv", |w| field.write_csv(m, w))?;
            println!("wrote {}", path.display());
            Ok(())
        }
        Cmd::Rate(args) => experiment(ExperimentKind::Rate, &args, cli.out_dir.as_deref()),
        Cmd::KnnRate(args) => experiment(ExperimentKind::KnnRate, &args, cli.out_dir.as_deref()),
        Cmd::Concentration(args) => {
            experiment(ExperimentKind::Concentration, &args, cli.out_dir.as_deref())
        }
        Cmd::Deviation(args) => {
            experiment(ExperimentKind::Deviation, &args, cli.out_dir.as_deref())
        }
        Cmd::Moments(args) => experiment(ExperimentKind::Moments, &args, cli.out_dir.as_deref()),
        Cmd::Geometry(args) => experiment(ExperimentKind::Geometry, &args, cli.out_dir.as_deref()),
        Cmd::OperatorGap(args) => {
            experiment(ExperimentKind::OperatorGap, &args, cli.out_dir.as_deref())
        }
    }
}

fn kernel_info(name: &str, dim: usize) -> Result<(), Error> {
    let kernel = Kernel::by_name(name)?;
    println!("kernel: {}", kernel.name());
    println!("dim: {dim}");
    println!("c0 = {}", kernel.diffusion_constant(dim)?);
    let r = dim as f64 + 3.0;
    println!("bv_moment(d+3) = {}", kernel.bv_moment(r)?);
    println!("moment(d+1) = {}", kernel.moment(dim as f64 + 1.0)?);
    println!(
        "support_radius = {}",
        kernel
            .support_radius()
            .map(|s| s.to_string())
            .unwrap_or_else(|| "unbounded".into())
    );
    let grid = [2.0, 4.0, 8.0];
    let tail = kernel.tail_decay_check(dim, &grid)?;
    for row in &tail.rows {
        println!(
            "tail b={}: K(b) b^(d+3) = {}, b * tail_moment = {}",
            row.b, row.pointwise, row.tail_integral
        );
    }
    Ok(())
}

impl CloudArgs {
    fn build(&self) -> Result<(Manifold, Density), Error> {
        let m = match self.manifold.as_str() {
            "s1" => Manifold::Sphere { dim: 1, radius: self.radius },
            "s2" => Manifold::Sphere { dim: 2, radius: self.radius },
            "s3" => Manifold::Sphere { dim: 3, radius: self.radius },
            "torus" => Manifold::FlatTorus { r1: self.r1, r2: self.r2 },
            other => {
                return Err(Error::config(format!(
                    "unknown manifold {other:?} (catalog: s1, s2, s3, torus)"
                )))
            }
        };
        m.validate()?;
        let p = match self.density.as_str() {
            "uniform" => Density::Uniform,
            "tilted" => {
                let beta = self.beta.ok_or_else(|| {
                    Error::config("tilted density requires --beta in (0, 1)")
                })?;
                if !(0.0 < beta && beta < 1.0) {
                    return Err(Error::config("tilt beta must lie in (0, 1)"));
                }
                Density::Tilted { beta }
            }
            other => Err(Error::config(format!(
                "unknown density {other:?} (catalog: uniform, tilted)"
            )))?,
        };
        Ok((m, p))
    }
}

fn load_or_sample(args: &CloudArgs, file: Option<&Path>) -> Result<SampleCloud, Error> {
    match file {
        Some(path) => {
            let reader = std::io::BufReader::new(fs::File::open(path)?);
            read_cloud_csv(reader)
        }
        None => {
            let (m, p) = args.build()?;
            sample(&m, &p, args.n, args.seed)
        }
    }
}

/// Test-function flag syntax: `constant:V`, `coordinate:AXIS`, `cross:I,J`.
fn parse_function(spec: &str, m: &Manifold) -> Result<TestFunction, Error> {
    let (kind, params) = spec.split_once(':').unwrap_or((spec, ""));
    let f = match kind {
        "constant" => TestFunction::Constant(
            params
                .parse()
                .map_err(|e| Error::config(format!("bad constant value: {e}")))?,
        ),
        "coordinate" => TestFunction::coordinate(
            params
                .parse()
                .map_err(|e| Error::config(format!("bad coordinate axis: {e}")))?,
        ),
        "cross" => {
            let (i, j) = params
                .split_once(',')
                .ok_or_else(|| Error::config("cross needs two indices, e.g. cross:0,1"))?;
            TestFunction::cross(
                i.trim().parse().map_err(|e| Error::config(format!("bad index: {e}")))?,
                j.trim().parse().map_err(|e| Error::config(format!("bad index: {e}")))?,
            )
        }
        other => {
            return Err(Error::config(format!(
                "unknown test function {other:?} (constant:V, coordinate:AXIS, cross:I,J)"
            )))
        }
    };
    f.validate(m)?;
    Ok(f)
}

fn cloud_file_name(cloud: &SampleCloud) -> String {
    format!(
        "cloud_{}_n{}_seed{}.csv",
        cloud.manifold.name(),
        cloud.n(),
        cloud.seed
    )
}

fn resolve_out_dir(flag: Option<&Path>, config: Option<&Path>) -> PathBuf {
    if let Some(p) = flag {
        return p.to_path_buf();
    }
    if let Some(p) = config {
        return p.to_path_buf();
    }
    if let Ok(p) = std::env::var(OUT_DIR_ENV) {
        if !p.is_empty() {
            return PathBuf::from(p);
        }
    }
    PathBuf::from("beltrami-out")
}

fn write_into<F>(dir: &Path, name: &str, writer: F) -> Result<PathBuf, Error>
where
    F: FnOnce(&mut Vec<u8>) -> Result<(), Error>,
{
    fs::create_dir_all(dir)?;
    let mut buf = Vec::new();
    writer(&mut buf)?;
    let path = dir.join(name);
    fs::write(&path, buf)?;
    Ok(path)
}

fn write_text(dir: &Path, name: &str, text: &str) -> Result<PathBuf, Error> {
    fs::create_dir_all(dir)?;
    let path = dir.join(name);
    fs::write(&path, text)?;
    Ok(path)
}

fn experiment(kind: ExperimentKind, args: &ConfigArgs, out_flag: Option<&Path>) -> Result<(), Error> {
    let text = fs::read_to_string(&args.config)?;
    let config = RunConfig::from_json(&text)?;
    if config.experiment != kind {
        return Err(Error::config(format!(
            "config is for experiment {:?} but the subcommand is {kind}",
            config.experiment
        )));
    }
    if args.dry_run {
        config.validate()?;
        println!("config ok: {kind}");
        return Ok(());
    }
    let out = resolve_out_dir(out_flag, config.out_dir.as_deref());
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.parallelism)
        .build()
        .map_err(|e| Error::config(format!("cannot build thread pool: {e}")))?;

    let mut written: Vec<PathBuf> = Vec::new();
    match kind {
        ExperimentKind::Rate => {
            let report = pool.install(|| experiments::rate_experiment(&config))?;
            written.push(write_text(&out, "rate.csv", &report.csv())?);
            written.push(write_text(&out, "rate_summary.json", &report.summary_json()?)?);
            if config.plot_script {
                written.push(write_text(&out, "rate.plt", &report.plot_script("rate.csv"))?);
            }
        }
        ExperimentKind::KnnRate => {
            let report = pool.install(|| experiments::knn_rate_experiment(&config))?;
            written.push(write_text(&out, "knn_rate.csv", &report.csv())?);
            written.push(write_text(&out, "knn_rate_summary.json", &report.summary_json()?)?);
            if config.plot_script {
                written.push(write_text(&out, "knn_rate.plt", &report.plot_script("knn_rate.csv"))?);
            }
        }
        ExperimentKind::Concentration => {
            let report = pool.install(|| experiments::radius_concentration_experiment(&config))?;
            written.push(write_text(&out, "concentration.csv", &report.csv())?);
            written.push(write_text(
                &out,
                "concentration_summary.json",
                &report.summary_json()?,
            )?);
        }
        ExperimentKind::Deviation => {
            let report = pool.install(|| experiments::deviation_experiment(&config))?;
            written.push(write_text(&out, "deviation.csv", &report.csv())?);
            written.push(write_text(&out, "deviation_freq.csv", &report.frequencies_csv())?);
            written.push(write_text(&out, "deviation_summary.json", &report.summary_json()?)?);
        }
        ExperimentKind::Moments => {
            let report = pool.install(|| experiments::moment_bound_experiment(&config))?;
            written.push(write_text(&out, "moments.csv", &report.csv())?);
            written.push(write_text(&out, "moments_summary.json", &report.summary_json()?)?);
        }
        ExperimentKind::Geometry => {
            let report = pool.install(|| experiments::geometry_check_experiment(&config))?;
            written.push(write_text(&out, "geometry.csv", &report.csv())?);
            written.push(write_text(&out, "geometry_summary.json", &report.summary_json()?)?);
        }
        ExperimentKind::OperatorGap => {
            let report = pool.install(|| experiments::operator_gap_experiment(&config))?;
            written.push(write_text(&out, "operator_gap.csv", &report.csv())?);
            written.push(write_text(&out, "operator_gap_summary.json", &report.summary_json()?)?);
        }
    }
    for path in written {
        println!("wrote {}", path.display());
    }
    Ok(())
}
#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numerical_failures_map_to_exit_two() {
        assert_eq!(exit_code(&Error::QuadratureNonconvergence("q".into())), 2);
        assert_eq!(exit_code(&Error::DegeneratePoint { index: 3 }), 2);
        assert_eq!(exit_code(&Error::config("bad")), 1);
        assert_eq!(exit_code(&Error::domain("bad")), 1);
    }

    #[test]
    fn function_flag_parsing() {
        let m = Manifold::unit_sphere2();
        assert!(parse_function("coordinate:1", &m).is_ok());
        assert!(parse_function("cross:0,2", &m).is_ok());
        assert!(parse_function("constant:2.5", &m).is_ok());
        assert!(parse_function("coordinate:9", &m).is_err());
        assert!(parse_function("wavelet:3", &m).is_err());
    }
}
