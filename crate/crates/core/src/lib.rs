//! Discrete optimal transport: exact, entropic, and accelerated solvers,
//! plus unbalanced OT, barycenters, multimarginal OT, and OT-based
//! time-series distances.

// `!(x > 0.0)` deliberately rejects NaN; index loops mirror the matrix formulas.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod duality;
pub mod entropic;
pub mod entropy;
pub mod error;
pub mod exact;
pub mod extensions;
pub mod io;
pub mod measure;
pub mod otw;
pub mod primal_dual;
pub mod problem;
pub mod solver;
pub mod trace;

pub use duality::{c_transform, cbar_transform, dual_objective, duality_gap, epsilon_suboptimality, slackness_residual};
pub use entropic::{EntropicOptions, EntropicSolution, LogDomain};
pub use entropy::plan_entropy;
pub use error::{OtError, Result};
pub use measure::{
    marginals, transport_cost, validate_pair, CostMatrix, DiscreteMeasure, DualPotentials, MongeMap, TransportPlan,
    ValidationReport,
};
pub use problem::{generate, Family, Problem, ProblemSpec};
pub use solver::{run_solver, Algo, SolverConfig, SolverRun};
pub use trace::{ConvergenceTrace, TraceRow};
