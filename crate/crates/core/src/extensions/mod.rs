//! Unbalanced OT, fixed-support barycenters, φ-divergences, and
//! multimarginal OT.

pub mod barycenter;
pub mod lp;
pub mod multimarginal;
pub mod phi;
pub mod unbalanced;

pub use barycenter::{
    barycenter_entropic, barycenter_entropic_objective, barycenter_exact, barycenter_objective, BarycenterOptions,
    BarycenterProblem, ExactBarycenter,
};
pub use lp::{solve_lp, LpSolution};
pub use multimarginal::{
    multimarginal_entropic, multimarginal_exact, CostTensor, MultimarginalOptions, TensorPlan, MULTIMARGINAL_CAP,
};
pub use phi::{phi_divergence, PhiDivergenceSpec, PhiKind};
pub use unbalanced::{unbalanced_sinkhorn, UnbalancedOptions};
