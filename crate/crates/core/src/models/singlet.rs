//! Spin-singlet correlations between two spin-half particles a and b.

use crate::dynamics::{decoherence_functional, ConsistencyReport, Dynamics, FamilyProbabilities, HistoryEvent};
use crate::error::{Error, Result};
use crate::framework::ProjectiveDecomposition;
use crate::histories::{HistoryFamily, TimeGrid};
use crate::operator::Operator;
use crate::states::{singlet, spin_projectors, Axis};
use crate::tolerance::Tolerances;

#[derive(Debug, Clone)]
pub struct SingletTable {
    pub axis_a: Axis,
    pub axis_b: Axis,
    pub report: ConsistencyReport,
    /// joint[s][t] = Pr(a along +/- axis_a AND b along +/- axis_b), index 0 = up.
    pub joint: [[f64; 2]; 2],
    /// conditional[s][t] = Pr(b = t | a = s).
    pub conditional: [[f64; 2]; 2],
}

/// Uses the singlet at t_0, trivial dynamics and the product
/// decomposition {[a_s] ⊗ [b_t]} at t_1.
pub fn singlet_correlation(axis_a: Axis, axis_b: Axis, tols: &Tolerances) -> Result<SingletTable> {
    let grid = TimeGrid::steps(2)?;
    let dynamics = Dynamics::trivial(grid.clone(), 4);
    let p0 = Operator::dyad(&singlet(), 1e-12)?;
    let pd = ProjectiveDecomposition::spin(axis_a).kron(&ProjectiveDecomposition::spin(axis_b));
    let family = HistoryFamily::fixed_initial(grid, &p0, &[pd], tols.alg)?;
    let report = decoherence_functional(&family, &dynamics, tols)?;
    let probs = FamilyProbabilities::new(&family, &report, tols)?;
    let (a_up, a_down) = spin_projectors(axis_a);
    let (b_up, b_down) = spin_projectors(axis_b);
    let id = Operator::identity(2);
    let a_ev = [a_up.kron(&id), a_down.kron(&id)];
    let b_ev = [id.kron(&b_up), id.kron(&b_down)];
    let mut joint = [[0.0; 2]; 2];
    let mut conditional = [[0.0; 2]; 2];
    for s in 0..2 {
        let given = HistoryEvent::at(1, a_ev[s].clone());
        for t in 0..2 {
            let target = HistoryEvent::at(1, b_ev[t].clone());
            joint[s][t] = probs.probability(&given.conjoin(&target))?;
            conditional[s][t] = probs.conditional(&target, &given).map_err(|e| match e {
                Error::ZeroCondition => Error::InvalidModel("singlet marginal vanished".into()),
                e => e,
            })?;
        }
    }
    Ok(SingletTable {
        axis_a,
        axis_b,
        report,
        joint,
        conditional,
    })
}
