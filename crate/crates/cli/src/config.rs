//! Flat `key = value` run configuration.
//!
//! Blank lines and `#` comments are ignored. Keys are dotted
//! (`adaptive.tau = 1e-5`); lists are comma separated. Every key has a
//! default, and the defaults depend on `problem`, so an empty file describes
//! the Example 1 benchmark.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use lcmq::{AdaptiveConfig, BoxDomain, KernelFamily, KernelSpec, NodeCloud, ProblemSpec};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Problem {
    Example1,
    Example2,
}

impl Problem {
    pub fn spec(&self) -> ProblemSpec {
        match self {
            Problem::Example1 => lcmq::example1(),
            Problem::Example2 => lcmq::example2(),
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            Problem::Example1 => 1,
            Problem::Example2 => 2,
        }
    }
}

impl fmt::Display for Problem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Problem::Example1 => "example1",
            Problem::Example2 => "example2",
        })
    }
}

impl FromStr for Problem {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "example1" => Ok(Problem::Example1),
            "example2" => Ok(Problem::Example2),
            other => Err(format!("unknown problem {other:?} (expected example1 or example2)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub problem: Problem,
    pub kernel: KernelSpec,
    /// Initial lattice nodes per axis.
    pub initial_nodes: Vec<usize>,
    pub adaptive: AdaptiveConfig,
    pub output_dir: PathBuf,
    pub seed: u64,
}

impl RunConfig {
    /// Benchmark settings: 50 nodes with covers of 7 in 1D, a 20x20 lattice
    /// with covers of 50 in 2D, `c = 0.8`, and tolerances `1e-5` / `8e-5`.
    pub fn benchmark(problem: Problem) -> Self {
        let kernel = KernelSpec::cmq(0.8).expect("positive shape");
        match problem {
            Problem::Example1 => {
                let mut adaptive = AdaptiveConfig::defaults(1, 50);
                adaptive.c_min = 7;
                adaptive.c_max = 50;
                adaptive.tau = 1e-5;
                // one enrichment step takes the minimum cover to the maximum
                adaptive.delta_p = 43;
                adaptive.cells_per_axis = vec![25];
                Self { problem, kernel, initial_nodes: vec![50], adaptive, output_dir: "out".into(), seed: 0 }
            }
            Problem::Example2 => {
                let mut adaptive = AdaptiveConfig::defaults(2, 400);
                adaptive.c_min = 50;
                adaptive.c_max = 59;
                adaptive.tau = 8e-5;
                adaptive.delta_p = 2;
                adaptive.cells_per_axis = vec![10, 10];
                Self { problem, kernel, initial_nodes: vec![20, 20], adaptive, output_dir: "out".into(), seed: 0 }
            }
        }
    }

    pub fn initial_cloud(&self) -> Result<NodeCloud, CliError> {
        let domain: BoxDomain = self.problem.spec().domain;
        Ok(NodeCloud::lattice(&domain, &self.initial_nodes, self.adaptive.c_min)?)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let dim = self.problem.dim();
        if self.initial_nodes.len() != dim || self.adaptive.cells_per_axis.len() != dim {
            return Err(CliError::Config(format!(
                "{} needs {dim} entries for nodes and adaptive.cells_per_axis",
                self.problem
            )));
        }
        if self.initial_nodes.iter().any(|&n| n < 2) {
            return Err(CliError::Config("nodes must be at least 2 per axis".into()));
        }
        let n: usize = self.initial_nodes.iter().product();
        if self.adaptive.c_min > n {
            return Err(CliError::Config(format!("adaptive.c_min = {} exceeds the {n} initial nodes", self.adaptive.c_min)));
        }
        self.adaptive.validate().map_err(|e| CliError::Config(e.to_string()))
    }
}

fn parse_value<T: FromStr>(key: &str, value: &str, line: usize) -> Result<T, CliError>
where
    T::Err: fmt::Display,
{
    value
        .parse()
        .map_err(|e: T::Err| CliError::Config(format!("line {line}: bad value {value:?} for {key}: {e}")))
}

fn parse_list<T: FromStr>(key: &str, value: &str, line: usize) -> Result<Vec<T>, CliError>
where
    T::Err: fmt::Display,
{
    value.split(',').map(|v| parse_value(key, v.trim(), line)).collect()
}

fn entries(text: &str) -> Result<Vec<(usize, String, String)>, CliError> {
    let mut out = Vec::new();
    for (k, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| CliError::Config(format!("line {}: expected `key = value`", k + 1)))?;
        out.push((k + 1, key.trim().to_string(), value.trim().to_string()));
    }
    Ok(out)
}

/// Parses a configuration file body.
pub fn parse_config(text: &str) -> Result<RunConfig, CliError> {
    let entries = entries(text)?;
    let problem = match entries.iter().rev().find(|(_, k, _)| k == "problem") {
        Some((line, _, v)) => v.parse::<Problem>().map_err(|e| CliError::Config(format!("line {line}: {e}")))?,
        None => Problem::Example1,
    };
    let mut cfg = RunConfig::benchmark(problem);
    let mut family = cfg.kernel.family();
    let mut shape = cfg.kernel.shape();
    let (mut c_min_set, mut c_max_set) = (false, false);

    for (line, key, value) in &entries {
        let (line, key, value) = (*line, key.as_str(), value.as_str());
        let a = &mut cfg.adaptive;
        match key {
            "problem" => {}
            "kernel.family" => family = parse_value(key, value, line)?,
            "kernel.shape" => shape = parse_value(key, value, line)?,
            "nodes" => cfg.initial_nodes = parse_list(key, value, line)?,
            "probe_per_axis" => a.probe_per_axis = parse_value(key, value, line)?,
            "output_dir" => cfg.output_dir = PathBuf::from(value),
            "seed" => cfg.seed = parse_value(key, value, line)?,
            "adaptive.c_min" => {
                a.c_min = parse_value(key, value, line)?;
                c_min_set = true;
            }
            "adaptive.c_max" => {
                a.c_max = parse_value(key, value, line)?;
                c_max_set = true;
            }
            "adaptive.tau" => a.tau = parse_value(key, value, line)?,
            "adaptive.max_splits" => a.max_splits = parse_value(key, value, line)?,
            "adaptive.theta" => a.theta = parse_value(key, value, line)?,
            "adaptive.delta_p" => a.delta_p = parse_value(key, value, line)?,
            "adaptive.rho" => a.rho = parse_value(key, value, line)?,
            "adaptive.epsilon" => a.epsilon = parse_value(key, value, line)?,
            "adaptive.max_cycles" => a.max_cycles = parse_value(key, value, line)?,
            "adaptive.node_cap" => a.node_cap = parse_value(key, value, line)?,
            "adaptive.min_insert_spacing" => a.min_insert_spacing = Some(parse_value(key, value, line)?),
            "adaptive.cells_per_axis" => a.cells_per_axis = parse_list(key, value, line)?,
            other => return Err(CliError::Config(format!("line {line}: unknown key {other:?}"))),
        }
    }

    // cover bounds follow a changed node count unless set explicitly
    let n: usize = cfg.initial_nodes.iter().product();
    if !c_max_set {
        cfg.adaptive.c_max = cfg.adaptive.c_max.min(n);
    }
    if !c_min_set {
        cfg.adaptive.c_min = cfg.adaptive.c_min.min(cfg.adaptive.c_max);
    }
    cfg.kernel = KernelSpec::new(family, shape).map_err(|e| CliError::Config(e.to_string()))?;
    cfg.validate()?;
    Ok(cfg)
}

/// Parses `0.2,0.4` or `0.2:3.0:0.2` (inclusive start:stop:step).
pub fn parse_shape_list(text: &str) -> Result<Vec<f64>, CliError> {
    let bad = || CliError::Config(format!("bad shape list {text:?}"));
    if let [start, stop, step] = text.split(':').collect::<Vec<_>>()[..] {
        let (start, stop, step): (f64, f64, f64) = (
            start.trim().parse().map_err(|_| bad())?,
            stop.trim().parse().map_err(|_| bad())?,
            step.trim().parse().map_err(|_| bad())?,
        );
        if step.is_nan() || step <= 0.0 || stop < start {
            return Err(bad());
        }
        let n = ((stop - start) / step + 1e-9).floor() as usize;
        return Ok((0..=n).map(|k| start + k as f64 * step).collect());
    }
    let values: Vec<f64> = text.split(',').map(|v| v.trim().parse().map_err(|_| bad())).collect::<Result<_, _>>()?;
    if values.is_empty() {
        return Err(bad());
    }
    Ok(values)
}

pub fn parse_family_list(text: &str) -> Result<Vec<KernelFamily>, CliError> {
    text.split(',')
        .map(|f| f.parse::<KernelFamily>().map_err(|e| CliError::Config(e.to_string())))
        .collect()
}
