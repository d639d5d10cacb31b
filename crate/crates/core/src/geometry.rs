//! Points, box domains, node clouds and the auxiliary lattices (marker cells,
//! probe sets) used for error estimation in one and two dimensions.

use crate::error::{Error, Result};

/// A point in R^d for d in {1, 2}.
///
/// Coordinates are stored in a fixed two-slot array; the unused slot of a 1D
/// point is always zero, so Euclidean distances work without branching on the
/// dimension.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point {
    coords: [f64; 2],
    dim: usize,
}

impl Point {
    pub fn new_1d(x: f64) -> Self {
        Self { coords: [x, 0.0], dim: 1 }
    }

    pub fn new_2d(x: f64, y: f64) -> Self {
        Self { coords: [x, y], dim: 2 }
    }

    pub fn from_slice(coords: &[f64]) -> Result<Self> {
        let p = match coords {
            [x] => Self::new_1d(*x),
            [x, y] => Self::new_2d(*x, *y),
            _ => {
                return Err(Error::InvalidArgument(format!(
                    "points must have 1 or 2 coordinates, got {}",
                    coords.len()
                )))
            }
        };
        if !p.is_finite() {
            return Err(Error::InvalidArgument("point coordinates must be finite".into()));
        }
        Ok(p)
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn coords(&self) -> &[f64] {
        &self.coords[..self.dim]
    }

    #[inline]
    pub fn coord(&self, axis: usize) -> f64 {
        self.coords[axis]
    }

    pub fn is_finite(&self) -> bool {
        self.coords.iter().all(|c| c.is_finite())
    }

    #[inline]
    pub fn distance_squared(&self, other: &Point) -> f64 {
        let dx = self.coords[0] - other.coords[0];
        let dy = self.coords[1] - other.coords[1];
        dx * dx + dy * dy
    }

    #[inline]
    pub fn distance(&self, other: &Point) -> f64 {
        self.distance_squared(other).sqrt()
    }
}

/// Axis-aligned box `[lower, upper]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoxDomain {
    lower: Point,
    upper: Point,
}

impl BoxDomain {
    pub fn new(lower: Point, upper: Point) -> Result<Self> {
        if lower.dim() != upper.dim() {
            return Err(Error::InvalidArgument("domain corners differ in dimension".into()));
        }
        if !lower.is_finite() || !upper.is_finite() {
            return Err(Error::InvalidArgument("domain corners must be finite".into()));
        }
        for k in 0..lower.dim() {
            if lower.coord(k) >= upper.coord(k) {
                return Err(Error::InvalidArgument(format!(
                    "domain lower bound must be below upper bound on axis {k}"
                )));
            }
        }
        Ok(Self { lower, upper })
    }

    pub fn interval(a: f64, b: f64) -> Result<Self> {
        Self::new(Point::new_1d(a), Point::new_1d(b))
    }

    pub fn rectangle(x: (f64, f64), y: (f64, f64)) -> Result<Self> {
        Self::new(Point::new_2d(x.0, y.0), Point::new_2d(x.1, y.1))
    }

    pub fn dim(&self) -> usize {
        self.lower.dim()
    }

    pub fn lower(&self) -> Point {
        self.lower
    }

    pub fn upper(&self) -> Point {
        self.upper
    }

    pub fn extent(&self, axis: usize) -> f64 {
        self.upper.coord(axis) - self.lower.coord(axis)
    }

    /// Largest side length.
    pub fn max_extent(&self) -> f64 {
        (0..self.dim()).map(|k| self.extent(k)).fold(0.0, f64::max)
    }

    pub fn volume(&self) -> f64 {
        (0..self.dim()).map(|k| self.extent(k)).product()
    }

    pub fn contains(&self, p: &Point) -> bool {
        (0..self.dim()).all(|k| p.coord(k) >= self.lower.coord(k) && p.coord(k) <= self.upper.coord(k))
    }

    /// Default face tolerance used when flagging boundary nodes.
    pub fn default_boundary_tol(&self) -> f64 {
        1e-12 * self.max_extent()
    }

    /// Tensor-product lattice with `per_axis[k]` points on axis `k`, both
    /// endpoints included. Points are ordered with the last axis varying
    /// fastest.
    pub fn lattice(&self, per_axis: &[usize]) -> Result<Vec<Point>> {
        if per_axis.len() != self.dim() {
            return Err(Error::InvalidArgument(format!(
                "expected {} lattice counts, got {}",
                self.dim(),
                per_axis.len()
            )));
        }
        if per_axis.iter().any(|&n| n < 2) {
            return Err(Error::InvalidArgument("lattices need at least 2 points per axis".into()));
        }
        let axis_values: Vec<Vec<f64>> = per_axis
            .iter()
            .enumerate()
            .map(|(k, &n)| {
                let (a, b) = (self.lower.coord(k), self.upper.coord(k));
                (0..n)
                    .map(|j| {
                        // pin the endpoints exactly so they land on the faces
                        if j == n - 1 {
                            b
                        } else {
                            a + (b - a) * j as f64 / (n - 1) as f64
                        }
                    })
                    .collect()
            })
            .collect();
        Ok(match self.dim() {
            1 => axis_values[0].iter().map(|&x| Point::new_1d(x)).collect(),
            _ => axis_values[0]
                .iter()
                .flat_map(|&x| axis_values[1].iter().map(move |&y| Point::new_2d(x, y)))
                .collect(),
        })
    }
}

/// Scattered nodes with their per-node cover cardinalities and boundary flags.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeCloud {
    points: Vec<Point>,
    cover_size: Vec<usize>,
    is_boundary: Vec<bool>,
}

impl NodeCloud {
    /// Builds a cloud with every node's cover size set to `cover_size` and
    /// boundary flags taken from `domain` at its default tolerance.
    pub fn new(domain: &BoxDomain, points: Vec<Point>, cover_size: usize) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::InvalidArgument("node cloud must not be empty".into()));
        }
        if points.iter().any(|p| p.dim() != domain.dim() || !p.is_finite()) {
            return Err(Error::InvalidArgument(
                "node coordinates must be finite and match the domain dimension".into(),
            ));
        }
        if cover_size == 0 || cover_size > points.len() {
            return Err(Error::InvalidArgument(format!(
                "cover size {cover_size} must lie in [1, {}]",
                points.len()
            )));
        }
        let n = points.len();
        let mut cloud = Self { points, cover_size: vec![cover_size; n], is_boundary: vec![false; n] };
        cloud.is_boundary = boundary_flags(domain, &cloud, domain.default_boundary_tol())?;
        Ok(cloud)
    }

    /// Uniform lattice cloud over `domain` with `per_axis` nodes per axis.
    pub fn lattice(domain: &BoxDomain, per_axis: &[usize], cover_size: usize) -> Result<Self> {
        Self::new(domain, domain.lattice(per_axis)?, cover_size)
    }

    pub fn from_parts(points: Vec<Point>, cover_size: Vec<usize>, is_boundary: Vec<bool>) -> Result<Self> {
        let n = points.len();
        if n == 0 || cover_size.len() != n || is_boundary.len() != n {
            return Err(Error::InvalidArgument("node cloud parts must be nonempty and equally long".into()));
        }
        let dim = points[0].dim();
        if points.iter().any(|p| p.dim() != dim || !p.is_finite()) {
            return Err(Error::InvalidArgument("node coordinates must be finite and share a dimension".into()));
        }
        if cover_size.iter().any(|&c| c == 0 || c > n) {
            return Err(Error::InvalidArgument(format!("cover sizes must lie in [1, {n}]")));
        }
        Ok(Self { points, cover_size, is_boundary })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.points[0].dim()
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn point(&self, i: usize) -> Point {
        self.points[i]
    }

    pub fn cover_sizes(&self) -> &[usize] {
        &self.cover_size
    }

    pub fn cover_size(&self, i: usize) -> usize {
        self.cover_size[i]
    }

    pub fn boundary_flags(&self) -> &[bool] {
        &self.is_boundary
    }

    pub fn is_boundary(&self, i: usize) -> bool {
        self.is_boundary[i]
    }

    pub fn boundary_count(&self) -> usize {
        self.is_boundary.iter().filter(|&&b| b).count()
    }

    pub fn max_cover_size(&self) -> usize {
        self.cover_size.iter().copied().max().unwrap_or(0)
    }

    pub fn set_cover_size(&mut self, i: usize, size: usize) -> Result<()> {
        if size == 0 || size > self.len() {
            return Err(Error::InvalidArgument(format!("cover size {size} must lie in [1, {}]", self.len())));
        }
        self.cover_size[i] = size;
        Ok(())
    }

    pub fn set_boundary_flags(&mut self, flags: Vec<bool>) -> Result<()> {
        if flags.len() != self.len() {
            return Err(Error::InvalidArgument("boundary flag count must match node count".into()));
        }
        self.is_boundary = flags;
        Ok(())
    }

    /// Appends a node; callers are responsible for spacing checks.
    pub fn push(&mut self, point: Point, cover_size: usize, is_boundary: bool) -> Result<usize> {
        if point.dim() != self.dim() || !point.is_finite() {
            return Err(Error::InvalidArgument("inserted node must be finite and match the cloud dimension".into()));
        }
        if cover_size == 0 || cover_size > self.len() + 1 {
            return Err(Error::InvalidArgument(format!("cover size {cover_size} out of range")));
        }
        self.points.push(point);
        self.cover_size.push(cover_size);
        self.is_boundary.push(is_boundary);
        Ok(self.points.len() - 1)
    }

    /// Index of the node closest to `target` (lowest index on ties).
    pub fn nearest(&self, target: &Point) -> usize {
        let mut best = 0;
        let mut best_d = f64::INFINITY;
        for (i, p) in self.points.iter().enumerate() {
            let d = p.distance_squared(target);
            if d < best_d {
                best_d = d;
                best = i;
            }
        }
        best
    }

    pub fn min_distance_to(&self, target: &Point) -> f64 {
        self.points[self.nearest(target)].distance(target)
    }

    /// Smallest pairwise node distance (infinite for a single node).
    pub fn min_pairwise_distance(&self) -> f64 {
        let mut best = f64::INFINITY;
        for (i, p) in self.points.iter().enumerate() {
            for q in &self.points[i + 1..] {
                best = best.min(p.distance_squared(q));
            }
        }
        best.sqrt()
    }

    /// Fill distance measured on a lattice over `domain` with `per_axis`
    /// samples per axis: the largest distance from a sample to its nearest node.
    pub fn fill_distance(&self, domain: &BoxDomain, per_axis: usize) -> Result<f64> {
        let samples = domain.lattice(&vec![per_axis.max(2); domain.dim()])?;
        Ok(samples.iter().map(|s| self.min_distance_to(s)).fold(0.0, f64::max))
    }
}

/// The `k` nodes closest to `target`, nearest first. Ties are broken by
/// ascending node index.
pub fn knn(cloud: &NodeCloud, target: &Point, k: usize) -> Result<Vec<usize>> {
    if k == 0 || k > cloud.len() {
        return Err(Error::InvalidArgument(format!(
            "k = {k} must lie in [1, {}]",
            cloud.len()
        )));
    }
    let mut keyed: Vec<(f64, usize)> =
        cloud.points().iter().enumerate().map(|(i, p)| (p.distance_squared(target), i)).collect();
    let cmp = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
    if k < keyed.len() {
        keyed.select_nth_unstable_by(k - 1, cmp);
        keyed.truncate(k);
    }
    keyed.sort_unstable_by(cmp);
    Ok(keyed.into_iter().map(|(_, i)| i).collect())
}

/// Auxiliary error-estimation cell.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MarkerCell {
    pub lower: Point,
    pub upper: Point,
    pub center: Point,
    pub diameter: f64,
    /// Whether the upper face on each axis lies on the domain boundary; such
    /// faces are treated as closed so that every domain point belongs to
    /// exactly one cell.
    closed_upper: [bool; 2],
}

impl MarkerCell {
    fn new(lower: Point, upper: Point, closed_upper: [bool; 2]) -> Self {
        let center = match lower.dim() {
            1 => Point::new_1d(0.5 * (lower.coord(0) + upper.coord(0))),
            _ => Point::new_2d(0.5 * (lower.coord(0) + upper.coord(0)), 0.5 * (lower.coord(1) + upper.coord(1))),
        };
        let diameter = lower.distance(&upper);
        Self { lower, upper, center, diameter, closed_upper }
    }

    pub fn volume(&self) -> f64 {
        (0..self.lower.dim()).map(|k| self.upper.coord(k) - self.lower.coord(k)).product()
    }

    /// Half-open membership test `[lower, upper)`, closed on upper faces that
    /// coincide with the domain boundary.
    pub fn contains(&self, p: &Point) -> bool {
        (0..self.lower.dim()).all(|k| {
            let x = p.coord(k);
            x >= self.lower.coord(k)
                && (x < self.upper.coord(k) || (self.closed_upper[k] && x <= self.upper.coord(k)))
        })
    }
}

/// Uniform tiling of `domain` into `cells_per_axis[0] x ...` marker cells.
pub fn build_marker_grid(domain: &BoxDomain, cells_per_axis: &[usize]) -> Result<Vec<MarkerCell>> {
    if cells_per_axis.len() != domain.dim() {
        return Err(Error::InvalidArgument(format!(
            "expected {} cell counts, got {}",
            domain.dim(),
            cells_per_axis.len()
        )));
    }
    if cells_per_axis.contains(&0) {
        return Err(Error::InvalidArgument("cells_per_axis must be positive".into()));
    }
    let edges: Vec<Vec<f64>> = cells_per_axis
        .iter()
        .enumerate()
        .map(|(k, &n)| {
            let (a, b) = (domain.lower().coord(k), domain.upper().coord(k));
            (0..=n).map(|j| if j == n { b } else { a + (b - a) * j as f64 / n as f64 }).collect()
        })
        .collect();
    let cells = match domain.dim() {
        1 => {
            let n = cells_per_axis[0];
            (0..n)
                .map(|i| {
                    MarkerCell::new(
                        Point::new_1d(edges[0][i]),
                        Point::new_1d(edges[0][i + 1]),
                        [i + 1 == n, false],
                    )
                })
                .collect()
        }
        _ => {
            let (nx, ny) = (cells_per_axis[0], cells_per_axis[1]);
            let mut cells = Vec::with_capacity(nx * ny);
            for i in 0..nx {
                for j in 0..ny {
                    cells.push(MarkerCell::new(
                        Point::new_2d(edges[0][i], edges[1][j]),
                        Point::new_2d(edges[0][i + 1], edges[1][j + 1]),
                        [i + 1 == nx, j + 1 == ny],
                    ));
                }
            }
            cells
        }
    };
    Ok(cells)
}

/// Uniform lattice used to measure errors away from the nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbeSet {
    pub points: Vec<Point>,
}

impl ProbeSet {
    pub fn count(&self) -> usize {
        self.points.len()
    }
}

pub fn uniform_probe_set(domain: &BoxDomain, per_axis: usize) -> Result<ProbeSet> {
    Ok(ProbeSet { points: domain.lattice(&vec![per_axis; domain.dim()])? })
}

/// Flags nodes lying within `tol` of any face of `domain`.
pub fn boundary_flags(domain: &BoxDomain, cloud: &NodeCloud, tol: f64) -> Result<Vec<bool>> {
    if tol.is_nan() || tol < 0.0 {
        return Err(Error::InvalidArgument("boundary tolerance must be nonnegative".into()));
    }
    Ok(cloud
        .points()
        .iter()
        .map(|p| {
            (0..domain.dim()).any(|k| {
                (p.coord(k) - domain.lower().coord(k)).abs() <= tol
                    || (p.coord(k) - domain.upper().coord(k)).abs() <= tol
            })
        })
        .collect())
}
