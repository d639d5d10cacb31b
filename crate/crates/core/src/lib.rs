//! Adaptive local coupled-multiquadric (LCMQ) collocation for Poisson-type
//! problems on box domains in one and two dimensions.
//!
//! Every node carries a cover: its `C_i` nearest neighbours. Interior rows of
//! the global system collocate the Laplacian through the cover's local kernel
//! interpolant, boundary rows impose Dirichlet data directly. The adaptive
//! driver in [`adaptivity`] first enlarges covers where a residual indicator
//! says the operator is under-resolved, and inserts nodes where enlarging
//! covers does not help.

pub mod adaptivity;
pub mod assembly;
pub mod error;
pub mod geometry;
pub mod kernels;
pub mod local_system;
pub mod problems;

pub use adaptivity::{
    adapt_cycle, cell_indicator, cell_indicators, run_adaptive, run_adaptive_observed, Action, AdaptOutcome,
    AdaptiveConfig, AdaptiveRun, CellReport, CycleRecord, CycleSnapshot, Termination,
};
pub use assembly::{assemble, assemble_with, solve, Solution, SparseSystem};
pub use error::{Error, Result};
pub use geometry::{
    boundary_flags, build_marker_grid, knn, uniform_probe_set, BoxDomain, MarkerCell, NodeCloud, Point, ProbeSet,
};
pub use kernels::{apply_operator, kernel_laplacian, kernel_value, KernelFamily, KernelSpec, Operator};
pub use local_system::{build_cover, build_cover_with_size, evaluate_field, Cover, FieldEvaluator, WeightVector};
pub use problems::{error_report, example1, example2, shape_sweep, ErrorReport, ProblemSpec, SweepRow};
