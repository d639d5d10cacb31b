//! Local covers: the `C_i` nearest nodes of a center node, the factorized
//! local gramian `U_i`, and the weight vectors `U_i^{-1} (L psi_i)(x)` that
//! turn nodal values into local approximations of `u` or `Lu`.

use std::collections::HashMap;
use std::sync::{Arc, RwLock};

use faer::linalg::solvers::{DenseSolveCore, PartialPivLu, Solve};
use faer::Mat;

use crate::error::{Error, Result};
use crate::geometry::{knn, NodeCloud, Point};
use crate::kernels::{apply_operator, kernel_value, KernelSpec, Operator};

/// Gramians whose 1-norm condition estimate exceeds this are rejected.
pub const MAX_GRAMIAN_CONDITION: f64 = 1e14;

/// Weights aligned with a cover's member ordering.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightVector(pub Vec<f64>);

impl WeightVector {
    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// `sum_j w_j values[members[j]]`.
    pub fn apply(&self, members: &[usize], values: &[f64]) -> f64 {
        self.0.iter().zip(members).map(|(w, &j)| w * values[j]).sum()
    }
}

/// A node's local stencil with its factorized gramian.
#[derive(Debug, Clone)]
pub struct Cover {
    center: usize,
    members: Vec<usize>,
    member_points: Vec<Point>,
    radius: f64,
    kernel: KernelSpec,
    dim: usize,
    gramian: Mat<f64>,
    lu: PartialPivLu<f64>,
    condition: f64,
}

impl Cover {
    pub fn center(&self) -> usize {
        self.center
    }

    pub fn members(&self) -> &[usize] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn kernel(&self) -> KernelSpec {
        self.kernel
    }

    /// 1-norm condition number of the local gramian.
    pub fn condition(&self) -> f64 {
        self.condition
    }

    pub fn gramian(&self, row: usize, col: usize) -> f64 {
        self.gramian[(row, col)]
    }

    fn solve(&self, rhs: Vec<f64>) -> WeightVector {
        let mut b = Mat::from_fn(rhs.len(), 1, |i, _| rhs[i]);
        self.lu.solve_in_place(b.as_mut());
        WeightVector((0..rhs.len()).map(|i| b[(i, 0)]).collect())
    }

    /// `W_i(x) = U_i^{-1} psi_i(x)`.
    pub fn shape_weights(&self, target: &Point) -> WeightVector {
        self.operator_weights(Operator::Identity, target)
    }

    /// `(L W_i)(x) = U_i^{-1} (L psi_i)(x)`.
    pub fn operator_weights(&self, op: Operator, target: &Point) -> WeightVector {
        let rhs = self
            .member_points
            .iter()
            .map(|p| apply_operator(self.kernel, op, target.distance(p), self.dim))
            .collect();
        self.solve(rhs)
    }

    /// Local approximation of `op u` at `target` from nodal values.
    pub fn evaluate(&self, values: &[f64], op: Operator, target: &Point) -> f64 {
        self.operator_weights(op, target).apply(&self.members, values)
    }
}

/// Builds the cover of `center` with `size` members (nearest nodes, ties by
/// index) and factorizes its gramian with partial pivoting.
pub fn build_cover_with_size(cloud: &NodeCloud, kernel: KernelSpec, center: usize, size: usize) -> Result<Cover> {
    if center >= cloud.len() {
        return Err(Error::InvalidArgument(format!("node index {center} out of range")));
    }
    let x_center = cloud.point(center);
    let members = knn(cloud, &x_center, size)?;
    let member_points: Vec<Point> = members.iter().map(|&j| cloud.point(j)).collect();
    let radius = member_points.iter().map(|p| p.distance(&x_center)).fold(0.0, f64::max);

    let n = members.len();
    let mut gramian = Mat::<f64>::zeros(n, n);
    for j in 0..n {
        gramian[(j, j)] = kernel_value(kernel, 0.0);
        for l in j + 1..n {
            let v = kernel_value(kernel, member_points[j].distance(&member_points[l]));
            gramian[(j, l)] = v;
            gramian[(l, j)] = v;
        }
    }
    let lu = gramian.partial_piv_lu();
    let inverse = lu.inverse();
    let condition = one_norm(&gramian) * one_norm(&inverse);
    if !condition.is_finite() || condition > MAX_GRAMIAN_CONDITION {
        return Err(Error::SingularGramian { center, condition });
    }
    Ok(Cover { center, members, member_points, radius, kernel, dim: cloud.dim(), gramian, lu, condition })
}

/// Cover of `center` at the node's own cover size.
pub fn build_cover(cloud: &NodeCloud, kernel: KernelSpec, center: usize) -> Result<Cover> {
    if center >= cloud.len() {
        return Err(Error::InvalidArgument(format!("node index {center} out of range")));
    }
    build_cover_with_size(cloud, kernel, center, cloud.cover_size(center))
}

fn one_norm(m: &Mat<f64>) -> f64 {
    (0..m.ncols())
        .map(|j| (0..m.nrows()).map(|i| m[(i, j)].abs()).sum::<f64>())
        .fold(0.0, |a, b| if b.is_nan() { f64::NAN } else { a.max(b) })
}

/// Evaluates `op u_h` at an arbitrary point from nodal values, using the cover
/// of the node nearest to `target`. The cover holds `cover_size_override`
/// members when given, otherwise the nearest node's own `C_i`.
pub fn evaluate_field(
    cloud: &NodeCloud,
    values: &[f64],
    kernel: KernelSpec,
    op: Operator,
    target: &Point,
    cover_size_override: Option<usize>,
) -> Result<f64> {
    FieldEvaluator::new(cloud, kernel).evaluate(values, op, target, cover_size_override)
}

/// Memoizes covers by `(center, size)` for a fixed cloud geometry.
///
/// Covers depend only on node positions and the kernel, so one evaluator can
/// serve assembly, indicator evaluation and probing for as long as no node is
/// inserted. Safe to share across threads.
pub struct FieldEvaluator<'a> {
    cloud: &'a NodeCloud,
    kernel: KernelSpec,
    cache: RwLock<HashMap<(usize, usize), Arc<Cover>>>,
}

impl<'a> FieldEvaluator<'a> {
    pub fn new(cloud: &'a NodeCloud, kernel: KernelSpec) -> Self {
        Self { cloud, kernel, cache: RwLock::new(HashMap::new()) }
    }

    pub fn cloud(&self) -> &NodeCloud {
        self.cloud
    }

    pub fn kernel(&self) -> KernelSpec {
        self.kernel
    }

    pub fn cover(&self, center: usize, size: usize) -> Result<Arc<Cover>> {
        if let Some(c) = self.cache.read().expect("cover cache poisoned").get(&(center, size)) {
            return Ok(Arc::clone(c));
        }
        let cover = Arc::new(build_cover_with_size(self.cloud, self.kernel, center, size)?);
        let mut cache = self.cache.write().expect("cover cache poisoned");
        Ok(Arc::clone(cache.entry((center, size)).or_insert(cover)))
    }

    pub fn node_cover(&self, center: usize) -> Result<Arc<Cover>> {
        self.cover(center, self.cloud.cover_size(center))
    }

    /// Nearest node to `target` and the cover size an evaluation there uses.
    pub fn evaluation_cover(&self, target: &Point, cover_size_override: Option<usize>) -> Result<Arc<Cover>> {
        let i = self.cloud.nearest(target);
        let size = cover_size_override.unwrap_or_else(|| self.cloud.cover_size(i));
        if size == 0 || size > self.cloud.len() {
            return Err(Error::InvalidArgument(format!(
                "cover size {size} must lie in [1, {}]",
                self.cloud.len()
            )));
        }
        self.cover(i, size)
    }

    pub fn evaluate(
        &self,
        values: &[f64],
        op: Operator,
        target: &Point,
        cover_size_override: Option<usize>,
    ) -> Result<f64> {
        if values.len() != self.cloud.len() {
            return Err(Error::InvalidArgument(format!(
                "expected {} nodal values, got {}",
                self.cloud.len(),
                values.len()
            )));
        }
        Ok(self.evaluation_cover(target, cover_size_override)?.evaluate(values, op, target))
    }
}
