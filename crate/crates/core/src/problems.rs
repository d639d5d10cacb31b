//! Benchmark Poisson problems with manufactured solutions, and the probe
//! error metrics (RMSE and maximum absolute error).

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;

use crate::assembly::{assemble_with, solve, Solution};
use crate::error::{Error, Result};
use crate::geometry::{BoxDomain, NodeCloud, Point, ProbeSet};
use crate::kernels::{KernelFamily, KernelSpec, Operator};
use crate::local_system::FieldEvaluator;

pub type ScalarField = Arc<dyn Fn(&Point) -> f64 + Send + Sync>;

/// `Laplacian u = rhs` in the domain, `u = boundary` on its faces.
#[derive(Clone)]
pub struct ProblemSpec {
    pub name: String,
    pub domain: BoxDomain,
    pub rhs: ScalarField,
    pub boundary: ScalarField,
    pub exact: Option<ScalarField>,
}

impl fmt::Debug for ProblemSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ProblemSpec")
            .field("name", &self.name)
            .field("domain", &self.domain)
            .field("has_exact", &self.exact.is_some())
            .finish()
    }
}

impl ProblemSpec {
    pub fn dim(&self) -> usize {
        self.domain.dim()
    }
}

/// `u'' = 105/2 x^2 - 15/2` on `[-1, 1]`, `u(+-1) = 1`.
pub fn example1() -> ProblemSpec {
    let exact = |p: &Point| {
        let x = p.coord(0);
        let x2 = x * x;
        35.0 / 8.0 * x2 * x2 - 15.0 / 4.0 * x2 + 3.0 / 8.0
    };
    ProblemSpec {
        name: "example1".into(),
        domain: BoxDomain::interval(-1.0, 1.0).expect("valid interval"),
        rhs: Arc::new(|p: &Point| {
            let x = p.coord(0);
            52.5 * x * x - 7.5
        }),
        boundary: Arc::new(exact),
        exact: Some(Arc::new(exact)),
    }
}

/// `Laplacian u = sin(pi x) sin(pi y)` on the unit square with `u = 0` on the
/// boundary.
pub fn example2() -> ProblemSpec {
    let source = |p: &Point| (PI * p.coord(0)).sin() * (PI * p.coord(1)).sin();
    ProblemSpec {
        name: "example2".into(),
        domain: BoxDomain::rectangle((0.0, 1.0), (0.0, 1.0)).expect("valid square"),
        rhs: Arc::new(source),
        boundary: Arc::new(|_: &Point| 0.0),
        exact: Some(Arc::new(move |p: &Point| -source(p) / (2.0 * PI * PI))),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorReport {
    pub rmse: f64,
    pub max_abs: f64,
    pub probe_count: usize,
}

/// Pointwise `(u_h(z), u*(z))` at every probe.
pub fn probe_values(
    problem: &ProblemSpec,
    evaluator: &FieldEvaluator<'_>,
    solution: &Solution,
    probes: &ProbeSet,
) -> Result<Vec<(f64, f64)>> {
    let exact = problem
        .exact
        .as_ref()
        .ok_or_else(|| Error::Unsupported(format!("{} has no exact solution", problem.name)))?;
    probes
        .points
        .par_iter()
        .map(|z| Ok((evaluator.evaluate(&solution.nodal_values, Operator::Identity, z, None)?, exact(z))))
        .collect()
}

pub fn error_report_with(
    problem: &ProblemSpec,
    evaluator: &FieldEvaluator<'_>,
    solution: &Solution,
    probes: &ProbeSet,
) -> Result<ErrorReport> {
    let values = probe_values(problem, evaluator, solution, probes)?;
    Ok(summarize(values.iter().map(|(uh, u)| (uh - u).abs())))
}

/// RMSE and maximum absolute error of the solution over `probes`.
pub fn error_report(
    problem: &ProblemSpec,
    cloud: &NodeCloud,
    solution: &Solution,
    kernel: KernelSpec,
    probes: &ProbeSet,
) -> Result<ErrorReport> {
    error_report_with(problem, &FieldEvaluator::new(cloud, kernel), solution, probes)
}

/// Summarizes absolute errors into an [`ErrorReport`].
pub fn summarize(errors: impl IntoIterator<Item = f64>) -> ErrorReport {
    let mut sum_sq = 0.0;
    let mut max_abs = 0.0f64;
    let mut n = 0usize;
    for e in errors {
        sum_sq += e * e;
        max_abs = max_abs.max(e);
        n += 1;
    }
    let rmse = if n == 0 { 0.0 } else { (sum_sq / n as f64).sqrt() };
    ErrorReport { rmse, max_abs, probe_count: n }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub family: KernelFamily,
    pub shape: f64,
    /// `None` when the solve failed (e.g. a numerically singular gramian).
    pub report: Option<ErrorReport>,
    pub failure: Option<String>,
}

impl SweepRow {
    /// RMSE, with failed solves reported as `+inf`.
    pub fn rmse(&self) -> f64 {
        self.report.map_or(f64::INFINITY, |r| r.rmse)
    }

    pub fn max_abs(&self) -> f64 {
        self.report.map_or(f64::INFINITY, |r| r.max_abs)
    }
}

/// One non-adaptive solve on `cloud` with the given kernel, measured on `probes`.
pub fn solve_and_measure(
    problem: &ProblemSpec,
    cloud: &NodeCloud,
    kernel: KernelSpec,
    probes: &ProbeSet,
) -> Result<(Solution, ErrorReport)> {
    let evaluator = FieldEvaluator::new(cloud, kernel);
    let system = assemble_with(&evaluator, problem)?;
    let solution = solve(&system)?;
    let report = error_report_with(problem, &evaluator, &solution, probes)?;
    Ok((solution, report))
}

/// Fixed-cloud solves for every `(family, c)` pair, families outermost.
pub fn shape_sweep(
    problem: &ProblemSpec,
    cloud: &NodeCloud,
    shapes: &[f64],
    families: &[KernelFamily],
    probes: &ProbeSet,
) -> Result<Vec<SweepRow>> {
    let mut rows = Vec::with_capacity(shapes.len() * families.len());
    for &family in families {
        for &shape in shapes {
            let kernel = KernelSpec::new(family, shape)?;
            let row = match solve_and_measure(problem, cloud, kernel, probes) {
                Ok((_, report)) => SweepRow { family, shape, report: Some(report), failure: None },
                Err(e @ (Error::SingularGramian { .. } | Error::SolveFailure(_))) => {
                    SweepRow { family, shape, report: None, failure: Some(e.to_string()) }
                }
                Err(e) => return Err(e),
            };
            rows.push(row);
        }
    }
    Ok(rows)
}

/// `max(rmse) / min(rmse)` over a row set; infinite if any solve failed.
pub fn sensitivity_ratio<'a>(rows: impl IntoIterator<Item = &'a SweepRow>) -> f64 {
    let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
    for r in rows {
        let v = r.rmse();
        lo = lo.min(v);
        hi = hi.max(v);
    }
    hi / lo
}
