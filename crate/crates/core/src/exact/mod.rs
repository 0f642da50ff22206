//! Exact solvers: min-cost flow, vertex enumeration, auction, and rounding.

mod auction;
mod flow;
mod rounding;
mod vertices;

pub use auction::{auction_solve, default_auction_epsilon, AuctionResult, AuctionState};
pub use flow::{solve_exact, solve_exact_capped, ExactSolution, DEFAULT_CAP_CELLS};
pub use rounding::{round_to_feasible, ROUNDING_IDENTITY_TOL};
pub use vertices::{enumerate_vertices_oracle, MAX_ORACLE_SIDE};

pub(crate) use flow::check_weights;
