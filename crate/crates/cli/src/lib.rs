//! Command implementations behind the `lcmq` binary: adaptive solves, shape
//! parameter sweeps and the kernel Laplacian self-check.

pub mod config;

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use lcmq::adaptivity::run_adaptive_observed;
use lcmq::geometry::uniform_probe_set;
use lcmq::kernels::laplacian_discrepancy;
use lcmq::problems::probe_values;
use lcmq::{AdaptiveRun, FieldEvaluator, KernelFamily, KernelSpec, SparseSystem, SweepRow};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

pub use config::{parse_config, parse_family_list, parse_shape_list, Problem, RunConfig};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("i/o error on {path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Solver(#[from] lcmq::Error),
}

/// Process exit codes.
pub mod exit {
    pub const OK: i32 = 0;
    pub const ERROR: i32 = 1;
    pub const BUDGET_EXHAUSTED: i32 = 2;
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> CliError + '_ {
    move |source| CliError::Io { path: path.to_path_buf(), source }
}

pub fn load_config(path: &Path) -> Result<RunConfig, CliError> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    parse_config(&text)
}

/// Fixed-width float formatting with 17 significant digits.
pub fn fmt_f64(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        v.to_string()
    }
}

fn csv_writer(path: &Path) -> Result<csv::Writer<fs::File>, CliError> {
    let file = fs::File::create(path).map_err(io_err(path))?;
    Ok(csv::Writer::from_writer(file))
}

/// Outcome of [`cmd_solve`].
#[derive(Debug)]
pub struct SolveOutput {
    pub run: AdaptiveRun,
    pub exit_code: i32,
    pub cycles_csv: PathBuf,
}

/// Runs the adaptive solver and writes `cycles.csv`, `solution.csv` and
/// `covers.csv` (plus `matrix.txt` when `dump_matrix` is set) to `out_dir`.
pub fn cmd_solve(config: &RunConfig, out_dir: &Path, dump_matrix: bool) -> Result<SolveOutput, CliError> {
    config.validate()?;
    fs::create_dir_all(out_dir).map_err(io_err(out_dir))?;
    let problem = config.problem.spec();
    let cloud = config.initial_cloud()?;

    let mut last_system: Option<SparseSystem> = None;
    let run = run_adaptive_observed(&problem, &cloud, config.kernel, &config.adaptive, |snap| {
        if dump_matrix {
            last_system = Some(snap.system.clone());
        }
    })?;

    let cycles_csv = out_dir.join("cycles.csv");
    let mut w = csv_writer(&cycles_csv)?;
    w.write_record([
        "cycle",
        "nodes",
        "max_cover",
        "rmse",
        "max_abs_error",
        "max_indicator",
        "action",
        "solve_s",
        "adapt_s",
    ])?;
    for r in &run.records {
        w.write_record([
            r.cycle.to_string(),
            r.node_count.to_string(),
            r.max_cover.to_string(),
            fmt_f64(r.rmse),
            fmt_f64(r.max_abs_error),
            fmt_f64(r.max_indicator),
            r.action.to_string(),
            format!("{:.6}", r.solve_seconds),
            format!("{:.6}", r.adapt_seconds),
        ])?;
    }
    w.flush().map_err(io_err(&cycles_csv))?;

    let probes = uniform_probe_set(&problem.domain, config.adaptive.probe_per_axis)?;
    let evaluator = FieldEvaluator::new(&run.cloud, config.kernel);
    let values = probe_values(&problem, &evaluator, &run.solution, &probes)?;
    let dim = problem.dim();
    let axes = ["x", "y"];

    let path = out_dir.join("solution.csv");
    let mut w = csv_writer(&path)?;
    let mut header: Vec<&str> = axes[..dim].to_vec();
    header.extend(["u_h", "u_exact", "abs_error"]);
    w.write_record(&header)?;
    for (z, (uh, u)) in probes.points.iter().zip(&values) {
        let mut rec: Vec<String> = z.coords().iter().map(|&c| fmt_f64(c)).collect();
        rec.extend([fmt_f64(*uh), fmt_f64(*u), fmt_f64((uh - u).abs())]);
        w.write_record(&rec)?;
    }
    w.flush().map_err(io_err(&path))?;

    let path = out_dir.join("covers.csv");
    let mut w = csv_writer(&path)?;
    let mut header: Vec<&str> = axes[..dim].to_vec();
    header.extend(["cover_size", "boundary"]);
    w.write_record(&header)?;
    for i in 0..run.cloud.len() {
        let mut rec: Vec<String> = run.cloud.point(i).coords().iter().map(|&c| fmt_f64(c)).collect();
        rec.push(run.cloud.cover_size(i).to_string());
        rec.push(u8::from(run.cloud.is_boundary(i)).to_string());
        w.write_record(&rec)?;
    }
    w.flush().map_err(io_err(&path))?;

    if let Some(system) = last_system {
        let path = out_dir.join("matrix.txt");
        let file = fs::File::create(&path).map_err(io_err(&path))?;
        system.write_coordinate(io::BufWriter::new(file)).map_err(io_err(&path))?;
    }

    let exit_code = if run.termination.converged() { exit::OK } else { exit::BUDGET_EXHAUSTED };
    Ok(SolveOutput { run, exit_code, cycles_csv })
}

/// Fixed-cloud solves over shape parameters and kernel families; writes
/// `sweep.csv`. Failed solves are written with infinite errors.
pub fn cmd_sweep(
    config: &RunConfig,
    out_dir: &Path,
    shapes: &[f64],
    families: &[KernelFamily],
) -> Result<Vec<SweepRow>, CliError> {
    config.validate()?;
    if shapes.is_empty() || families.is_empty() {
        return Err(CliError::Config("sweep needs at least one shape value and one family".into()));
    }
    fs::create_dir_all(out_dir).map_err(io_err(out_dir))?;
    let problem = config.problem.spec();
    let cloud = config.initial_cloud()?;
    let probes = uniform_probe_set(&problem.domain, config.adaptive.probe_per_axis)?;
    let rows = lcmq::shape_sweep(&problem, &cloud, shapes, families, &probes)?;

    let path = out_dir.join("sweep.csv");
    let mut w = csv_writer(&path)?;
    w.write_record(["family", "c", "rmse", "max_abs_error"])?;
    for r in &rows {
        w.write_record([r.family.to_string(), fmt_f64(r.shape), fmt_f64(r.rmse()), fmt_f64(r.max_abs())])?;
    }
    w.flush().map_err(io_err(&path))?;
    Ok(rows)
}

/// Largest relative discrepancy the kernel check tolerates.
pub const KERNEL_CHECK_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct KernelCheckReport {
    pub per_family: Vec<(KernelFamily, f64)>,
    pub max_discrepancy: f64,
}

impl KernelCheckReport {
    pub fn passed(&self) -> bool {
        self.max_discrepancy <= KERNEL_CHECK_TOLERANCE
    }
}

/// Compares `laplacian` with central finite differences on `samples` random
/// `(r, c, d)` draws per family.
pub fn kernel_check_with<L>(families: &[KernelFamily], samples: usize, seed: u64, laplacian: L) -> KernelCheckReport
where
    L: Fn(KernelSpec, f64, usize) -> f64,
{
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let per_family: Vec<(KernelFamily, f64)> = families
        .iter()
        .map(|&f| (f, laplacian_discrepancy(f, samples, || rng.random::<f64>(), &laplacian)))
        .collect();
    let max_discrepancy = per_family.iter().map(|(_, d)| *d).fold(0.0, f64::max);
    KernelCheckReport { per_family, max_discrepancy }
}

pub fn cmd_kernel_check(families: &[KernelFamily], samples: usize, seed: u64) -> KernelCheckReport {
    kernel_check_with(families, samples, seed, lcmq::kernel_laplacian)
}
