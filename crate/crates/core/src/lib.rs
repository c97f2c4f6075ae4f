//! Consistent histories for finite-dimensional quantum systems.
//!
//! Projective decompositions and their event algebras, history families on
//! a time grid, chain operators and the decoherence functional, and a few
//! worked models (measurement, preparation, POVMs, locality, singlet).

pub mod dynamics;
pub mod error;
pub mod framework;
pub mod histories;
pub mod models;
pub mod operator;
pub mod random;
pub mod states;
pub mod tolerance;

pub use dynamics::{
    born_weight, born_weight_backward, born_weight_kets, born_weight_kets_backward, chain_operator,
    conditional_probability, decoherence_functional, probability, sample_counts, sample_history, ChainOperator,
    ConsistencyReport, Dynamics, FamilyProbabilities, HistoryEvent, HistorySampler, Verdict,
};
pub use error::{Error, Result};
pub use framework::{common_refinement, compatible, event_probability, refines, Event, ProjectiveDecomposition};
pub use histories::{family_compatible, refine_families, FamilyKind, History, HistoryFamily, TimeGrid};
pub use operator::{
    commutes, complete_unitary, embed, partial_trace, unitary_from_hamiltonian, CMatrix, CVector, CompositeSpace,
    Flavor, Ket, Operator, C64,
};
pub use states::{interval_projector, singlet, spin_ket, spin_projectors, Axis};
pub use tolerance::Tolerances;
