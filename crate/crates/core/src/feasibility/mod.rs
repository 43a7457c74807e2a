//! Existence questions: noncontextual 0/1 value assignments and linear
//! feasibility of one side of a model given the other.

pub mod coloring;
pub mod lp;
pub mod simplex;

pub use coloring::{
    count_colorings_naive, ks_colorable, rays_from_contexts, solve_hypergraph, ColoringAssignment, ColoringCertificate,
    Hypergraph, RaySet,
};
pub use lp::{born_targets, lp_feasible, replay_residual, solution_model, BornTarget, FeasibilityProblem, LpCertificate, LpMode, TOL_LP};
pub use simplex::{LinearSystem, Rational, Sense, SimplexOutcome};
