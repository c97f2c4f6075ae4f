use conhist::models::{
    ancilla_probabilities, contextual_analysis, contextual_preparation, einstein_locality_check, measurement_analysis,
    povm_from_ancilla, preparation_analysis, singlet_correlation, LocalityExperiment, MeasurementMode,
    MeasurementModel,
};
use conhist::{
    born_weight_kets, born_weight_kets_backward, common_refinement, compatible, decoherence_functional,
    family_compatible, refines, sample_counts, CMatrix, ConsistencyReport, FamilyProbabilities, Operator, Tolerances,
    Verdict,
};
use serde_json::{json, Value};

use crate::error::CliError;
use crate::report::{QueryRecord, Report, Status};
use crate::scenario::{Expect, Scenario, ToleranceOverrides};
use crate::workspace::{Prepared, Workspace};

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub tolerances: ToleranceOverrides,
    /// Seed for sample queries that do not set their own.
    pub seed: Option<u64>,
}

/// Validates the scenario, then runs its queries in order. A failing query
/// is recorded and the remaining queries still run.
pub fn run(scenario: &Scenario, options: &RunOptions) -> Result<Report, CliError> {
    let ws = Workspace::build(scenario, &options.tolerances)?;
    let records = ws
        .queries
        .iter()
        .enumerate()
        .map(|(index, q)| {
            let outcome = execute(&ws, &q.query, options);
            let (status, message, result) = match (outcome, q.expect) {
                (Ok(v), None) => (Status::Ok, None, Some(v)),
                (Err(e), None) => (Status::Error, Some(e.to_string()), None),
                (Err(e), Some(Expect::Refused)) => (Status::Refused, Some(e.to_string()), None),
                (Ok(v), Some(Expect::Refused)) => (
                    Status::Error,
                    Some("query was expected to be refused but succeeded".to_string()),
                    Some(v),
                ),
            };
            QueryRecord {
                index,
                label: q.label.clone(),
                kind: q.kind,
                status,
                message,
                result,
            }
        })
        .collect();
    Ok(Report {
        scenario: scenario.name.clone(),
        records,
    })
}

fn verdict(v: Verdict) -> &'static str {
    match v {
        Verdict::Consistent => "consistent",
        Verdict::Inconsistent => "inconsistent",
    }
}

fn real_rows(m: &CMatrix, part: fn(&conhist::C64) -> f64) -> Vec<Vec<f64>> {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| part(&m[(i, j)])).collect())
        .collect()
}

fn report_json(r: &ConsistencyReport) -> Value {
    json!({
        "labels": r.labels,
        "throwaway": r.throwaway,
        "weights": r.weights,
        "d_real": real_rows(&r.d, |z| z.re),
        "d_imag": real_rows(&r.d, |z| z.im),
        "max_offdiag": r.max_offdiag,
        "worst_ratio": r.worst_ratio,
        "verdict": verdict(r.verdict),
        "tolerance": r.tolerance,
        "floor": r.floor,
    })
}

fn operator_rows(op: &Operator) -> Value {
    json!({
        "real": real_rows(op.matrix(), |z| z.re),
        "imag": real_rows(op.matrix(), |z| z.im),
    })
}

fn execute(ws: &Workspace, query: &Prepared, options: &RunOptions) -> conhist::Result<Value> {
    let tols: &Tolerances = &ws.tolerances;
    let family = |name: &str| {
        let entry = &ws.families[name];
        (&entry.family, &ws.dynamics[&entry.dynamics])
    };
    let value = match query {
        Prepared::Consistency { family: name } => {
            let (f, d) = family(name);
            report_json(&decoherence_functional(f, d, tols)?)
        }
        Prepared::Weights { family: name } => {
            let (f, d) = family(name);
            let report = decoherence_functional(f, d, tols)?;
            let probabilities = report.probabilities().ok();
            json!({
                "labels": report.labels,
                "weights": report.weights,
                "verdict": verdict(report.verdict),
                "probabilities": probabilities,
            })
        }
        Prepared::Probability { family: name, event } => {
            let (f, d) = family(name);
            let p = FamilyProbabilities::compute(f, d, tols)?.probability(event)?;
            json!({ "probability": p })
        }
        Prepared::Conditional {
            family: name,
            target,
            given,
        } => {
            let (f, d) = family(name);
            let p = FamilyProbabilities::compute(f, d, tols)?.conditional(target, given)?;
            json!({ "probability": p })
        }
        Prepared::Born {
            dynamics,
            initial,
            final_state,
        } => {
            let d = &ws.dynamics[dynamics];
            json!({
                "forward": born_weight_kets(initial, final_state, d)?,
                "backward": born_weight_kets_backward(initial, final_state, d)?,
            })
        }
        Prepared::CompatiblePds { a, b } => {
            let (pa, pb) = (&ws.pds[a], &ws.pds[b]);
            if compatible(pa, pb, tols.alg)? {
                let refined = common_refinement(pa, pb, tols.alg)?;
                json!({ "compatible": true, "refinement": refined.labels() })
            } else {
                json!({ "compatible": false })
            }
        }
        Prepared::CompatibleFamilies {
            a,
            b,
            check_consistency,
        } => {
            let (fa, da) = family(a);
            let (fb, _) = family(b);
            let dynamics = check_consistency.then_some(da);
            json!({ "compatible": family_compatible(fa, fb, dynamics, tols)? })
        }
        Prepared::Refinement { fine, coarse } => {
            json!({ "refines": refines(&ws.pds[fine], &ws.pds[coarse], tols.alg)? })
        }
        Prepared::Sample {
            family: name,
            draws,
            seed,
        } => {
            let (f, d) = family(name);
            let seed = seed.or(options.seed).unwrap_or(0);
            let counts = sample_counts(f, d, *draws, seed, tols)?;
            let probabilities = decoherence_functional(f, d, tols)?.probabilities()?;
            json!({
                "labels": f.labels(),
                "counts": counts,
                "probabilities": probabilities,
                "draws": draws,
                "seed": seed,
            })
        }
        Prepared::Measurement {
            system_dim,
            mode,
            amplitudes,
        } => {
            let model = MeasurementModel::standard(*system_dim, *mode, tols.alg.max(1e-12))?;
            let a = measurement_analysis(&model, amplitudes, tols)?;
            json!({
                "mode": match mode {
                    MeasurementMode::Destructive => "destructive",
                    MeasurementMode::VonNeumann => "von_neumann",
                },
                "verdict": verdict(a.report.verdict),
                "max_offdiag": a.report.max_offdiag,
                "pointer": a.outcome,
                "joint": a.joint,
                "conditional": a.conditional,
            })
        }
        Prepared::Preparation { system_dim, amplitudes } => {
            let model = MeasurementModel::standard(*system_dim, MeasurementMode::VonNeumann, tols.alg.max(1e-12))?;
            let a = preparation_analysis(&model, amplitudes, tols)?;
            json!({
                "verdict": verdict(a.report.verdict),
                "joint": a.joint,
                "conditional": a.conditional,
            })
        }
        Prepared::ContextualPreparation { targets, amplitudes } => {
            let prep = contextual_preparation(targets, tols.norm.max(1e-12))?;
            let a = contextual_analysis(&prep, amplitudes, tols)?;
            let overlaps: Vec<Vec<f64>> = targets
                .iter()
                .map(|r| targets.iter().map(|s| r.inner(s).norm()).collect())
                .collect();
            json!({
                "target_overlaps": overlaps,
                "pointer": a.pointer,
                "conditional": a.conditional,
            })
        }
        Prepared::Povm {
            pd,
            system_dim,
            ancilla,
            probes,
        } => {
            let pd = &ws.pds[pd];
            let povm = povm_from_ancilla(pd, *system_dim, ancilla, tols.alg)?;
            let mut total = Operator::zero(*system_dim);
            for r in povm.elements() {
                total = &total + r;
            }
            let completeness = (total.matrix() - Operator::identity(*system_dim).matrix()).norm();
            let probes = probes
                .iter()
                .map(|(name, psi)| {
                    Ok(json!({
                        "state": name,
                        "povm": povm.probabilities(psi)?,
                        "direct": ancilla_probabilities(pd, psi, ancilla)?,
                    }))
                })
                .collect::<conhist::Result<Vec<_>>>()?;
            json!({
                "labels": povm.labels(),
                "elements": povm.elements().iter().map(operator_rows).collect::<Vec<_>>(),
                "min_eigenvalues": povm.elements().iter().map(Operator::min_eigenvalue).collect::<Vec<_>>(),
                "completeness_residual": completeness,
                "probes": probes,
            })
        }
        Prepared::Locality {
            dims,
            pair_state,
            dynamics,
            pds,
            distant_states,
        } => {
            let a_pds = pds.iter().map(|p| ws.pds[p].clone()).collect();
            let exp = LocalityExperiment::new(
                *dims,
                pair_state.clone(),
                ws.dynamics[dynamics].clone(),
                a_pds,
                tols.alg,
            )?;
            let rep = einstein_locality_check(&exp, distant_states, tols)?;
            json!({
                "distant_states": distant_states.len(),
                "verdict": verdict(rep.verdict()),
                "verdicts_agree": rep.verdicts_agree,
                "max_weight_deviation": rep.max_weight_deviation,
                "max_offdiag_deviation": rep.max_offdiag_deviation,
                "passed": rep.passed,
            })
        }
        Prepared::Singlet { axis_a, axis_b } => {
            let t = singlet_correlation(*axis_a, *axis_b, tols)?;
            json!({
                "axis_a": axis_a.to_string(),
                "axis_b": axis_b.to_string(),
                "joint": t.joint,
                "conditional_b_given_a": t.conditional,
            })
        }
    };
    Ok(value)
}
