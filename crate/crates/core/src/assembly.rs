//! Global collocation system: one Laplacian row per interior node built from
//! that node's cover, a unit row per Dirichlet node, solved by sparse LU.

use std::io::{self, Write};

use faer::prelude::*;
use faer::sparse::{SparseColMat, Triplet};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::NodeCloud;
use crate::kernels::{KernelSpec, Operator};
use crate::local_system::FieldEvaluator;
use crate::problems::ProblemSpec;

/// Row-compressed square matrix with its right-hand side.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseSystem {
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
    pub rhs: Vec<f64>,
}

impl SparseSystem {
    pub fn from_rows(rows: Vec<(Vec<(usize, f64)>, f64)>) -> Result<Self> {
        let n = rows.len();
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut col_idx = Vec::new();
        let mut values = Vec::new();
        let mut rhs = Vec::with_capacity(n);
        row_ptr.push(0);
        for (entries, b) in rows {
            for (j, v) in entries {
                if j >= n {
                    return Err(Error::InvalidArgument(format!("column {j} out of range for {n} rows")));
                }
                if !v.is_finite() {
                    return Err(Error::InvalidArgument("matrix entries must be finite".into()));
                }
                col_idx.push(j);
                values.push(v);
            }
            row_ptr.push(col_idx.len());
            rhs.push(b);
        }
        Ok(Self { row_ptr, col_idx, values, rhs })
    }

    pub fn identity(rhs: Vec<f64>) -> Self {
        let n = rhs.len();
        Self { row_ptr: (0..=n).collect(), col_idx: (0..n).collect(), values: vec![1.0; n], rhs }
    }

    pub fn dim(&self) -> usize {
        self.rhs.len()
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row_nnz(&self, i: usize) -> usize {
        self.row_ptr[i + 1] - self.row_ptr[i]
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        self.col_idx[r.clone()].iter().copied().zip(self.values[r].iter().copied())
    }

    /// `A x`.
    pub fn multiply(&self, x: &[f64]) -> Vec<f64> {
        (0..self.dim()).map(|i| self.row(i).map(|(j, v)| v * x[j]).sum()).collect()
    }

    /// `||A x - b||_inf`.
    pub fn residual_norm(&self, x: &[f64]) -> f64 {
        self.multiply(x).iter().zip(&self.rhs).map(|(ax, b)| (ax - b).abs()).fold(0.0, f64::max)
    }

    /// Coordinate dump, one `row col value` triple per line (0-based indices).
    pub fn write_coordinate<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "% {} {} {}", self.dim(), self.dim(), self.nnz())?;
        for i in 0..self.dim() {
            for (j, v) in self.row(i) {
                writeln!(out, "{i} {j} {v:.17e}")?;
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    pub nodal_values: Vec<f64>,
    pub residual_norm: f64,
}

/// Assembles the collocation system with covers drawn from `evaluator`.
pub fn assemble_with(evaluator: &FieldEvaluator<'_>, problem: &ProblemSpec) -> Result<SparseSystem> {
    let cloud = evaluator.cloud();
    if cloud.dim() != problem.dim() {
        return Err(Error::InvalidArgument("cloud and problem dimensions differ".into()));
    }
    let rows = (0..cloud.len())
        .into_par_iter()
        .map(|i| {
            let x = cloud.point(i);
            if cloud.is_boundary(i) {
                return Ok((vec![(i, 1.0)], (problem.boundary)(&x)));
            }
            let cover = evaluator.node_cover(i)?;
            let w = cover.operator_weights(Operator::Laplacian, &x);
            Ok((cover.members().iter().copied().zip(w.0).collect(), (problem.rhs)(&x)))
        })
        .collect::<Result<Vec<_>>>()?;
    SparseSystem::from_rows(rows)
}

pub fn assemble(cloud: &NodeCloud, kernel: KernelSpec, problem: &ProblemSpec) -> Result<SparseSystem> {
    assemble_with(&FieldEvaluator::new(cloud, kernel), problem)
}

/// Solves the system by sparse LU with partial pivoting.
pub fn solve(system: &SparseSystem) -> Result<Solution> {
    let n = system.dim();
    if n == 0 {
        return Err(Error::SolveFailure("empty system".into()));
    }
    let triplets: Vec<Triplet<usize, usize, f64>> = (0..n)
        .flat_map(|i| system.row(i).map(move |(j, v)| Triplet::new(i, j, v)))
        .collect();
    let matrix = SparseColMat::<usize, f64>::try_new_from_triplets(n, n, &triplets)
        .map_err(|e| Error::SolveFailure(format!("{e:?}")))?;
    let lu = matrix.sp_lu().map_err(|e| Error::SolveFailure(format!("{e:?}")))?;
    let b = Mat::from_fn(n, 1, |i, _| system.rhs[i]);
    let x = lu.solve(&b);
    let nodal_values: Vec<f64> = (0..n).map(|i| x[(i, 0)]).collect();
    if nodal_values.iter().any(|v| !v.is_finite()) {
        return Err(Error::SolveFailure("matrix is singular".into()));
    }
    let residual_norm = system.residual_norm(&nodal_values);
    let b_max = system.rhs.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if residual_norm > 1e-8 * (1.0 + b_max) {
        return Err(Error::SolveFailure(format!("residual {residual_norm:e} exceeds tolerance")));
    }
    Ok(Solution { nodal_values, residual_norm })
}
