//! Discrete ontological models of finite-dimensional quantum systems.
//!
//! The crate represents hidden-variable models as finite ontic spaces with
//! epistemic distributions `ρ(λ|ψ,P)` and response functions `ξ_E(λ,M)`,
//! ships a small zoo of concrete models, and machine-checks structural
//! properties of them: support lemmas, deficiency, the cross-context
//! constraint, λ-sufficiency and Born agreement. The [`feasibility`] module
//! decides Kochen–Specker colorability of ray sets and linear feasibility of
//! one side of the model given the other.
//!
//! See the `examples/` directory for one runnable program per capability.

pub mod cli;
pub mod error;
pub mod feasibility;
pub mod ontic;
pub mod quantum;
pub mod rng;
pub mod support;
pub mod verify;
pub mod zoo;

pub use error::{Error, Result};
pub use ontic::{
    is_outcome_deterministic, predicted_probability, validate_model, EpistemicState, ModelMeta,
    OnticSpace, OntologicalModel, ResponseFunction, DEFAULT_PREP,
};
pub use quantum::{
    born_probability, complete_basis, random_completion, random_ket, random_ket_seeded,
    validate_context, Effect, Ket, Measurement, Povm, ProjectiveContext, C64, EPS_NORM,
};
pub use support::{support, Support, DELTA_SUPP};
