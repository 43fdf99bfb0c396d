//! Step 1: exact topology, routing, and assignment under the fixed
//! equal-share bandwidth assumption.
//!
//! [`build_p1`] lowers an instance into the linearized model; [`solve_p1`]
//! runs an LP-relaxation branch-and-bound over an exact symmetry-reduced
//! transcription and lifts the winner back to interface-level links;
//! [`brute_force_plan`] certifies results on tiny instances by exhaustive
//! enumeration; [`solve_lp_relaxation`] exposes the plain relaxation of the
//! full model; [`export_lp`] writes the model in the LP interchange format.

mod branch_bound;
mod brute;
mod lp_format;
mod model;
mod reduced;
mod relax;
pub(crate) mod simplex;

pub use branch_bound::{
    solve_p1, solve_p1_with_progress, Progress, SolveError, SolveLimits, SolveOutcome,
    SolveStatus,
};
pub use brute::{brute_force_plan, BruteForceError};
pub use lp_format::export_lp;
pub use model::{
    build_p1, ConstraintTag, MilpModel, ModelContext, Row, RowSense, VarDef, VarKind, VarRef,
};
pub use relax::{solve_lp_relaxation, Fixings, RelaxError, RelaxOutcome};
pub use simplex::SimplexError;

/// Default enumeration budget for the brute-force oracle.
pub const DEFAULT_BRUTE_FORCE_BUDGET: u128 = 20_000_000;
