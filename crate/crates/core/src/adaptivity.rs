//! The adaptive cover-size / node-spacing controller.
//!
//! Each cycle solves on the current cloud, evaluates a residual indicator and
//! an enrichment classifier at every marker-cell center, then either enlarges
//! local covers (when a large fraction of cells fails and covers still have
//! headroom) or inserts cell centers as new nodes.

use std::fmt;
use std::time::Instant;

use rayon::prelude::*;

use crate::assembly::{assemble_with, solve, Solution, SparseSystem};
use crate::error::{Error, Result};
use crate::geometry::{build_marker_grid, uniform_probe_set, MarkerCell, NodeCloud};
use crate::kernels::{KernelSpec, Operator};
use crate::local_system::FieldEvaluator;
use crate::problems::{error_report_with, ProblemSpec};

#[derive(Debug, Clone, PartialEq)]
pub struct AdaptiveConfig {
    pub c_min: usize,
    pub c_max: usize,
    pub tau: f64,
    /// Maximum number of nodes inserted per cycle.
    pub max_splits: usize,
    /// Fraction of marked cells that triggers the enrichment branch.
    pub theta: f64,
    pub delta_p: usize,
    /// Classifier threshold: enrich a marked cell when `s_g >= rho (E_g + epsilon)`.
    pub rho: f64,
    pub epsilon: f64,
    pub max_cycles: usize,
    pub node_cap: usize,
    /// Minimum distance between an inserted node and any existing node.
    /// `None` means a quarter of the initial cloud's fill distance.
    pub min_insert_spacing: Option<f64>,
    pub cells_per_axis: Vec<usize>,
    pub probe_per_axis: usize,
}

impl AdaptiveConfig {
    /// Defaults for a `dim`-dimensional cloud of `nodes` nodes.
    pub fn defaults(dim: usize, nodes: usize) -> Self {
        Self {
            c_min: 7.min(nodes),
            c_max: nodes.min(60),
            tau: 1e-5,
            max_splits: 20,
            theta: 0.3,
            delta_p: 2,
            rho: 0.1,
            epsilon: 1e-14,
            max_cycles: 30,
            node_cap: 5000,
            min_insert_spacing: None,
            cells_per_axis: if dim == 1 { vec![100] } else { vec![30; dim] },
            probe_per_axis: if dim == 1 { 1001 } else { 101 },
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidArgument(msg.into()));
        if self.c_min == 0 || self.c_min > self.c_max {
            return bad("cover bounds must satisfy 1 <= c_min <= c_max");
        }
        if self.tau.is_nan() || self.tau <= 0.0 {
            return bad("tau must be positive");
        }
        if !(self.theta > 0.0 && self.theta < 1.0) {
            return bad("theta must lie in (0, 1)");
        }
        if !(self.rho > 0.0 && self.rho < 1.0) {
            return bad("rho must lie in (0, 1)");
        }
        if self.epsilon.is_nan() || self.epsilon <= 0.0 {
            return bad("epsilon must be positive");
        }
        if self.max_splits == 0 || self.delta_p == 0 || self.max_cycles == 0 || self.node_cap == 0 {
            return bad("max_splits, delta_p, max_cycles and node_cap must be positive");
        }
        if let Some(s) = self.min_insert_spacing {
            if !(s > 0.0 && s.is_finite()) {
                return bad("min_insert_spacing must be positive");
            }
        }
        if self.cells_per_axis.is_empty() || self.cells_per_axis.contains(&0) {
            return bad("cells_per_axis must be positive");
        }
        if self.probe_per_axis < 2 {
            return bad("probe_per_axis must be at least 2");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CellReport {
    pub cell_index: usize,
    /// `E_g = h_g^2 |(L u_enr)(center) - f(center)|`
    pub indicator: f64,
    /// `s_g = h_g^2 |(L u_enr - L u_base)(center)|`
    pub classifier: f64,
    pub marked: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Action {
    CEnrich,
    HRefine,
    Mixed,
    Converged,
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Action::CEnrich => "c-enrich",
            Action::HRefine => "h-refine",
            Action::Mixed => "mixed",
            Action::Converged => "converged",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CycleRecord {
    pub cycle: usize,
    pub node_count: usize,
    pub max_cover: usize,
    pub rmse: f64,
    pub max_abs_error: f64,
    pub max_indicator: f64,
    pub action: Action,
    pub solve_seconds: f64,
    pub adapt_seconds: f64,
}

/// Indicator and classifier for one marker cell. Both evaluations reuse the
/// same nodal values; only the evaluation cover grows by `delta_p`.
pub fn cell_indicator(
    cell_index: usize,
    cell: &MarkerCell,
    evaluator: &FieldEvaluator<'_>,
    solution: &Solution,
    problem: &ProblemSpec,
    delta_p: usize,
    tau: f64,
) -> Result<CellReport> {
    let cloud = evaluator.cloud();
    let nearest = cloud.nearest(&cell.center);
    let base_size = cloud.cover_size(nearest);
    let enriched_size = (base_size + delta_p).min(cloud.len());
    let values = &solution.nodal_values;
    let base = evaluator.evaluate(values, Operator::Laplacian, &cell.center, Some(base_size))?;
    let enriched = evaluator.evaluate(values, Operator::Laplacian, &cell.center, Some(enriched_size))?;
    let h2 = cell.diameter * cell.diameter;
    let indicator = h2 * (enriched - (problem.rhs)(&cell.center)).abs();
    let classifier = h2 * (enriched - base).abs();
    Ok(CellReport { cell_index, indicator, classifier, marked: indicator > tau })
}

pub fn cell_indicators(
    cells: &[MarkerCell],
    evaluator: &FieldEvaluator<'_>,
    solution: &Solution,
    problem: &ProblemSpec,
    delta_p: usize,
    tau: f64,
) -> Result<Vec<CellReport>> {
    cells
        .par_iter()
        .enumerate()
        .map(|(g, cell)| cell_indicator(g, cell, evaluator, solution, problem, delta_p, tau))
        .collect()
}

/// What one call to [`adapt_cycle`] did to the cloud.
#[derive(Debug, Clone, PartialEq)]
pub struct AdaptOutcome {
    pub action: Action,
    /// Cells whose nodes had their covers enlarged.
    pub enriched_cells: Vec<usize>,
    /// Cells selected for insertion, worst first (before spacing/cap checks).
    pub selected_cells: Vec<usize>,
    /// Indices of the nodes actually inserted.
    pub inserted_nodes: Vec<usize>,
    /// Whether any cover size or node changed.
    pub changed: bool,
    /// Whether an insertion was refused because of the node cap.
    pub cap_reached: bool,
}

/// Applies one enrichment / refinement decision to `cloud`.
///
/// `reports` must hold one entry per cell of `cells`, in order.
pub fn adapt_cycle(
    cloud: &mut NodeCloud,
    cells: &[MarkerCell],
    reports: &[CellReport],
    config: &AdaptiveConfig,
    min_spacing: f64,
) -> Result<AdaptOutcome> {
    if reports.len() != cells.len() {
        return Err(Error::InvalidArgument("one report per marker cell is required".into()));
    }
    let marked: Vec<&CellReport> = reports.iter().filter(|r| r.marked).collect();
    if marked.is_empty() {
        return Ok(AdaptOutcome {
            action: Action::Converged,
            enriched_cells: vec![],
            selected_cells: vec![],
            inserted_nodes: vec![],
            changed: false,
            cap_reached: false,
        });
    }

    let before = cloud.cover_sizes().to_vec();
    let cap = config.c_max.min(cloud.len());
    let fraction = marked.len() as f64 / cells.len() as f64;
    let headroom = cloud.cover_sizes().iter().any(|&c| c < cap);

    let mut enriched_cells = Vec::new();
    let mut candidates: Vec<&CellReport> = Vec::new();
    let action = if fraction >= config.theta && headroom {
        for r in &marked {
            let cell = &cells[r.cell_index];
            let members: Vec<usize> = (0..cloud.len()).filter(|&i| cell.contains(&cloud.point(i))).collect();
            if r.classifier >= config.rho * (r.indicator + config.epsilon) && !members.is_empty() {
                for i in members {
                    let c = (cloud.cover_size(i) + config.delta_p).min(cap);
                    cloud.set_cover_size(i, c.max(cloud.cover_size(i)))?;
                }
                enriched_cells.push(r.cell_index);
            } else {
                // classifier favors new samples, or there is no node to enrich
                candidates.push(r);
            }
        }
        match (enriched_cells.is_empty(), candidates.is_empty()) {
            (false, true) => Action::CEnrich,
            (true, false) => Action::HRefine,
            _ => Action::Mixed,
        }
    } else {
        candidates = marked;
        Action::HRefine
    };

    candidates.sort_by(|a, b| b.indicator.total_cmp(&a.indicator).then(a.cell_index.cmp(&b.cell_index)));
    let selected_cells: Vec<usize> = candidates.iter().take(config.max_splits).map(|r| r.cell_index).collect();

    let mut inserted_nodes = Vec::new();
    let mut cap_reached = false;
    for &g in &selected_cells {
        let center = cells[g].center;
        if cloud.min_distance_to(&center) < min_spacing {
            continue;
        }
        if cloud.len() >= config.node_cap {
            cap_reached = true;
            break;
        }
        let c = config.c_min.min(cloud.len() + 1);
        inserted_nodes.push(cloud.push(center, c, false)?);
    }

    // enrichment already respects c_max; only the lower bound needs lifting
    let floor = config.c_min.min(cloud.len());
    for i in 0..cloud.len() {
        if cloud.cover_size(i) < floor {
            cloud.set_cover_size(i, floor)?;
        }
    }

    let changed = !inserted_nodes.is_empty() || cloud.cover_sizes()[..before.len()] != before[..];
    Ok(AdaptOutcome { action, enriched_cells, selected_cells, inserted_nodes, changed, cap_reached })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    /// Every indicator fell to or below the tolerance.
    Converged,
    /// The cycle budget ran out first.
    CycleBudget,
    /// The node cap blocked further refinement.
    NodeCap,
    /// A cycle left the cloud unchanged, so every later cycle would repeat it.
    Stalled,
}

impl Termination {
    pub fn converged(&self) -> bool {
        matches!(self, Termination::Converged)
    }
}

impl fmt::Display for Termination {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Termination::Converged => "converged",
            Termination::CycleBudget => "cycle budget exhausted",
            Termination::NodeCap => "node cap reached",
            Termination::Stalled => "stalled",
        })
    }
}

/// Per-cycle state handed to an observer right after the cycle's solve and
/// indicator evaluation, before the cloud is adapted.
pub struct CycleSnapshot<'a> {
    pub record: &'a CycleRecord,
    pub cloud: &'a NodeCloud,
    pub system: &'a SparseSystem,
    pub solution: &'a Solution,
    pub reports: &'a [CellReport],
}

#[derive(Debug, Clone)]
pub struct AdaptiveRun {
    pub records: Vec<CycleRecord>,
    /// Cloud and solution of the last solve.
    pub cloud: NodeCloud,
    pub solution: Solution,
    pub reports: Vec<CellReport>,
    pub termination: Termination,
}

pub fn run_adaptive(
    problem: &ProblemSpec,
    initial: &NodeCloud,
    kernel: KernelSpec,
    config: &AdaptiveConfig,
) -> Result<AdaptiveRun> {
    run_adaptive_observed(problem, initial, kernel, config, |_| {})
}

/// Runs solve / estimate / adapt cycles until every indicator is within
/// tolerance or a budget is exhausted, calling `observe` once per cycle.
pub fn run_adaptive_observed<F>(
    problem: &ProblemSpec,
    initial: &NodeCloud,
    kernel: KernelSpec,
    config: &AdaptiveConfig,
    mut observe: F,
) -> Result<AdaptiveRun>
where
    F: FnMut(&CycleSnapshot<'_>),
{
    config.validate()?;
    if initial.dim() != problem.dim() || config.cells_per_axis.len() != problem.dim() {
        return Err(Error::InvalidArgument("cloud, problem and marker grid dimensions differ".into()));
    }
    if config.c_min > initial.len() {
        return Err(Error::InvalidArgument(format!(
            "c_min = {} exceeds the {} initial nodes",
            config.c_min,
            initial.len()
        )));
    }
    let cells = build_marker_grid(&problem.domain, &config.cells_per_axis)?;
    let probes = uniform_probe_set(&problem.domain, config.probe_per_axis)?;
    let min_spacing = match config.min_insert_spacing {
        Some(s) => s,
        None => 0.25 * initial.fill_distance(&problem.domain, config.probe_per_axis)?,
    };

    let mut cloud = initial.clone();
    for i in 0..cloud.len() {
        cloud.set_cover_size(i, config.c_min)?;
    }

    let mut records = Vec::new();
    for cycle in 1..=config.max_cycles {
        let evaluator = FieldEvaluator::new(&cloud, kernel);
        let t_solve = Instant::now();
        let system = assemble_with(&evaluator, problem)?;
        let solution = solve(&system)?;
        let solve_seconds = t_solve.elapsed().as_secs_f64();

        let t_adapt = Instant::now();
        let reports = cell_indicators(&cells, &evaluator, &solution, problem, config.delta_p, config.tau)?;
        let estimate_seconds = t_adapt.elapsed().as_secs_f64();
        let max_indicator = reports.iter().map(|r| r.indicator).fold(0.0, f64::max);

        let (rmse, max_abs_error) = match problem.exact {
            Some(_) => {
                let e = error_report_with(problem, &evaluator, &solution, &probes)?;
                (e.rmse, e.max_abs)
            }
            None => (f64::NAN, f64::NAN),
        };
        drop(evaluator);

        let mut record = CycleRecord {
            cycle,
            node_count: cloud.len(),
            max_cover: cloud.max_cover_size(),
            rmse,
            max_abs_error,
            max_indicator,
            action: Action::Converged,
            solve_seconds,
            adapt_seconds: estimate_seconds,
        };

        if max_indicator <= config.tau {
            observe(&CycleSnapshot { record: &record, cloud: &cloud, system: &system, solution: &solution, reports: &reports });
            records.push(record);
            return Ok(AdaptiveRun { records, cloud, solution, reports, termination: Termination::Converged });
        }

        let snapshot_cloud = cloud.clone();
        let t_update = Instant::now();
        let outcome = adapt_cycle(&mut cloud, &cells, &reports, config, min_spacing)?;
        record.action = outcome.action;
        record.adapt_seconds = estimate_seconds + t_update.elapsed().as_secs_f64();
        observe(&CycleSnapshot {
            record: &record,
            cloud: &snapshot_cloud,
            system: &system,
            solution: &solution,
            reports: &reports,
        });
        records.push(record);

        let termination = if outcome.cap_reached && outcome.inserted_nodes.is_empty() {
            Some(Termination::NodeCap)
        } else if !outcome.changed {
            Some(Termination::Stalled)
        } else if cycle == config.max_cycles {
            Some(Termination::CycleBudget)
        } else {
            None
        };
        if let Some(termination) = termination {
            return Ok(AdaptiveRun { records, cloud: snapshot_cloud, solution, reports, termination });
        }
    }
    unreachable!("the final cycle always terminates")
}
