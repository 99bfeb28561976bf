//! Frank-Wolfe and generalized Frank-Wolfe methods with curvature constants
//! of order σ.
//!
//! The numeric core is generic over [`Scalar`] (`f32`, `f64`); the aliases
//! below fix it to `f64`, which is what the experiment harness uses.

pub mod analysis;
pub mod error;
pub mod experiment;
pub mod geometry;
pub mod objectives;
pub mod scalar;
pub mod solver;
pub mod stepsize;

pub use analysis::{
    beta_recursion, check_beta_bound, curvature_bound_holder, curvature_bound_modulus, curvature_refinement,
    default_gamma_grid, estimate_curvature, fit_power_law, fit_rate, polyak_recursion, polyak_sequence_bound,
    rate_bound_harmonic, rate_bound_line_search, rate_bound_open_loop, xu_recursion_check, CurvatureEstimate,
    RateBound, RateFit, RateKind,
};
pub use error::{Error, Result};
pub use geometry::FeasibleSet;
pub use objectives::{CompositePart, Convexity, Objective, ObjectiveKind, Optimum};
pub use scalar::Scalar;
pub use solver::{
    composite_lmo, fw_gap, solve, solve_gpa, Problem, ProblemSpec, SolveTrace, StopRule, Termination,
    TerminationReason,
};
pub use stepsize::{line_search, validate_open_loop, StepsizeRule};

pub type FeasibleSet64 = FeasibleSet<f64>;
pub type FeasibleSet32 = FeasibleSet<f32>;
pub type Objective64 = Objective<f64>;
pub type Objective32 = Objective<f32>;
pub type Problem64 = Problem<f64>;
pub type Problem32 = Problem<f32>;
pub type StepsizeRule64 = StepsizeRule<f64>;
pub type SolveTrace64 = SolveTrace<f64>;
pub type SolveTrace32 = SolveTrace<f32>;
