//! Worked physical models built on the history machinery.

pub mod locality;
pub mod measurement;
pub mod povm;
pub mod singlet;

pub use locality::{einstein_locality_check, product_split, LocalityExperiment, LocalityReport, LOCALITY_TOL};
pub use measurement::{
    build_measurement, contextual_analysis, contextual_preparation, measurement_analysis, preparation_analysis,
    ContextualAnalysis, ContextualPreparation, MeasurementAnalysis, MeasurementMode, MeasurementModel,
    PreparationAnalysis,
};
pub use povm::{ancilla_probabilities, povm_from_ancilla, PovmElementSet};
pub use singlet::{singlet_correlation, SingletTable};
