//! Scenario documents (TOML). Every definition has a `name`; definitions may
//! only refer to names declared earlier in the same section or in an
//! earlier section (systems, states, operators, pds, dynamics, families).

use serde::{Deserialize, Serialize};

use crate::complex::CNum;
use crate::error::CliError;
use crate::workspace::Workspace;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub name: String,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub description: String,
    #[serde(default, skip_serializing_if = "ToleranceOverrides::is_empty")]
    pub tolerances: ToleranceOverrides,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub systems: Vec<SystemDef>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub states: Vec<StateDef>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub operators: Vec<OperatorDef>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub pds: Vec<PdDef>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub dynamics: Vec<DynamicsDef>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub families: Vec<FamilyDef>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub queries: Vec<QueryDef>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ToleranceOverrides {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alg: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub norm: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub consistency: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub floor: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prob: Option<f64>,
}

impl ToleranceOverrides {
    pub fn is_empty(&self) -> bool {
        *self == Self::default()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemDef {
    pub name: String,
    /// Factor dimensions in tensor order; a single entry is a simple system.
    pub factors: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateDef {
    pub name: String,
    #[serde(flatten)]
    pub kind: StateKind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum StateKind {
    Amplitudes {
        amplitudes: Vec<CNum>,
        #[serde(default, skip_serializing_if = "std::ops::Not::not")]
        normalize: bool,
    },
    /// `direction` is one of "x+", "x-", "y+", "y-", "z+", "z-".
    Spin {
        direction: String,
    },
    Singlet,
    Basis {
        system: String,
        index: usize,
    },
    Tensor {
        parts: Vec<String>,
    },
    Random {
        system: String,
        seed: u64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OperatorDef {
    pub name: String,
    #[serde(flatten)]
    pub kind: OperatorKind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum OperatorKind {
    Matrix {
        rows: Vec<Vec<CNum>>,
    },
    Dyad {
        state: String,
    },
    Spin {
        direction: String,
    },
    Interval {
        positions: Vec<f64>,
        lo: f64,
        hi: f64,
    },
    Identity {
        system: String,
    },
    Tensor {
        parts: Vec<String>,
    },
    /// I − A
    Complement {
        of: String,
    },
    /// Matrix product, leftmost factor first.
    Product {
        factors: Vec<String>,
    },
    RandomUnitary {
        system: String,
        seed: u64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PdDef {
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels: Option<Vec<String>>,
    #[serde(flatten)]
    pub kind: PdKind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PdKind {
    Projectors {
        projectors: Vec<String>,
    },
    Spin {
        axis: String,
    },
    Standard {
        system: String,
    },
    Basis {
        states: Vec<String>,
    },
    Tensor {
        parts: Vec<String>,
    },
    Trivial {
        system: String,
    },
    Refinement {
        of: Vec<String>,
    },
    Random {
        system: String,
        seed: u64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        parts: Option<usize>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DynamicsDef {
    pub name: String,
    pub system: String,
    pub times: Vec<f64>,
    #[serde(flatten)]
    pub kind: DynamicsKind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DynamicsKind {
    Trivial,
    /// One step per consecutive pair of times.
    Steps {
        steps: Vec<StepDef>,
    },
    /// The same unitary for every step.
    Constant {
        unitary: String,
    },
    /// exp(−i Δt H) with Δt taken from the times.
    Hamiltonian {
        hamiltonian: String,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum StepDef {
    Unitary {
        unitary: String,
    },
    /// Unitary fixed on span(inputs) by inputs[k] → outputs[k] and
    /// completed on the orthogonal complement.
    Map {
        inputs: Vec<String>,
        outputs: Vec<String>,
    },
    /// exp(−i Δt H) for this step's Δt.
    Hamiltonian {
        hamiltonian: String,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FamilyDef {
    pub name: String,
    pub dynamics: String,
    #[serde(flatten)]
    pub kind: FamilyKindDef,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FamilyKindDef {
    Product {
        pds: Vec<String>,
    },
    /// `initial` names a state (its dyad is used) or a projector.
    FixedInitial {
        initial: String,
        pds: Vec<String>,
    },
    Unitary {
        state: String,
    },
    Raw {
        histories: Vec<RawHistoryDef>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawHistoryDef {
    pub label: String,
    pub factors: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Expect {
    /// The query must fail; the failure is reported but is not an error.
    Refused,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueryDef {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expect: Option<Expect>,
    #[serde(flatten)]
    pub kind: QueryKind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClauseDef {
    pub time: usize,
    pub operator: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModeDef {
    Destructive,
    VonNeumann,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum QueryKind {
    Consistency {
        family: String,
    },
    Weights {
        family: String,
    },
    Probability {
        family: String,
        event: Vec<ClauseDef>,
    },
    Conditional {
        family: String,
        target: Vec<ClauseDef>,
        given: Vec<ClauseDef>,
    },
    Born {
        dynamics: String,
        initial: String,
        #[serde(rename = "final")]
        final_state: String,
    },
    CompatiblePds {
        a: String,
        b: String,
    },
    CompatibleFamilies {
        a: String,
        b: String,
        #[serde(default, skip_serializing_if = "std::ops::Not::not")]
        check_consistency: bool,
    },
    Refinement {
        fine: String,
        coarse: String,
    },
    Sample {
        family: String,
        draws: usize,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        seed: Option<u64>,
    },
    Measurement {
        system_dim: usize,
        mode: ModeDef,
        amplitudes: Vec<CNum>,
    },
    Preparation {
        system_dim: usize,
        amplitudes: Vec<CNum>,
    },
    ContextualPreparation {
        targets: Vec<String>,
        amplitudes: Vec<CNum>,
    },
    Povm {
        pd: String,
        system: String,
        ancilla: String,
        probes: Vec<String>,
    },
    Locality {
        system: String,
        pair_state: String,
        dynamics: String,
        pds: Vec<String>,
        distant_states: Vec<String>,
    },
    Singlet {
        axis_a: String,
        axis_b: String,
    },
}

impl QueryKind {
    pub fn name(&self) -> &'static str {
        match self {
            QueryKind::Consistency { .. } => "consistency",
            QueryKind::Weights { .. } => "weights",
            QueryKind::Probability { .. } => "probability",
            QueryKind::Conditional { .. } => "conditional",
            QueryKind::Born { .. } => "born",
            QueryKind::CompatiblePds { .. } => "compatible_pds",
            QueryKind::CompatibleFamilies { .. } => "compatible_families",
            QueryKind::Refinement { .. } => "refinement",
            QueryKind::Sample { .. } => "sample",
            QueryKind::Measurement { .. } => "measurement",
            QueryKind::Preparation { .. } => "preparation",
            QueryKind::ContextualPreparation { .. } => "contextual_preparation",
            QueryKind::Povm { .. } => "povm",
            QueryKind::Locality { .. } => "locality",
            QueryKind::Singlet { .. } => "singlet",
        }
    }
}

impl Scenario {
    /// TOML text that parses back to an equal scenario.
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("scenario values are always representable")
    }
}

/// Syntax only; no names are resolved.
pub fn parse_syntax(text: &str) -> Result<Scenario, CliError> {
    toml::from_str(text).map_err(|e| CliError::Parse(e.to_string()))
}

/// Parses and validates: every reference resolves, dimensions agree and
/// every declared decomposition satisfies orthogonality and completeness.
pub fn parse_scenario(text: &str) -> Result<Scenario, CliError> {
    let scenario = parse_syntax(text)?;
    Workspace::build(&scenario, &Default::default())?;
    Ok(scenario)
}
