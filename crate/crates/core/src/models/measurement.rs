//! Particle-plus-apparatus measurement and preparation models.
//!
//! The apparatus space holds two "ready" kets |M_0⟩, |M_1⟩ and one pointer
//! ket |M^j⟩ per system basis state, all standard basis vectors of H_M:
//! |M_0⟩ = e_0, |M_1⟩ = e_1, |M^j⟩ = e_{j+1} (pointers are 1-based).
//!
//! Time runs t_0 → t_1 → t_2. The first step takes |s^j⟩⊗|M_0⟩ to
//! |s^j⟩⊗|M_1⟩. The second step is either destructive,
//! |s^j⟩⊗|M_1⟩ → |s^1⟩⊗|M^j⟩, or von Neumann (nondestructive),
//! |s^j⟩⊗|M_1⟩ → |s^j⟩⊗|M^j⟩. Both maps are only specified on a subspace
//! and are completed to unitaries with [`complete_unitary`].

use crate::dynamics::{decoherence_functional, ConsistencyReport, Dynamics, FamilyProbabilities, HistoryEvent};
use crate::error::{Error, Result};
use crate::framework::ProjectiveDecomposition;
use crate::histories::{HistoryFamily, TimeGrid};
use crate::operator::{complete_unitary, CompositeSpace, Ket, Operator, C64};
use crate::tolerance::Tolerances;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MeasurementMode {
    /// The particle always ends in |s^1⟩.
    Destructive,
    /// The particle state is left unchanged.
    VonNeumann,
}

#[derive(Debug, Clone)]
pub struct MeasurementModel {
    mode: MeasurementMode,
    space: CompositeSpace,
    system_basis: Vec<Ket>,
    ready: [Ket; 2],
    pointers: Vec<Ket>,
    dynamics: Dynamics,
    pointer_pd: ProjectiveDecomposition,
}

impl MeasurementModel {
    /// Model with the standard system basis and the smallest apparatus.
    pub fn standard(system_dim: usize, mode: MeasurementMode, tol: f64) -> Result<Self> {
        let basis: Vec<Ket> = (0..system_dim).map(|j| Ket::basis(system_dim, j)).collect();
        build_measurement(&basis, system_dim + 2, mode, tol)
    }

    pub fn mode(&self) -> MeasurementMode {
        self.mode
    }

    pub fn space(&self) -> &CompositeSpace {
        &self.space
    }

    pub fn system_dim(&self) -> usize {
        self.space.factors()[0]
    }

    pub fn apparatus_dim(&self) -> usize {
        self.space.factors()[1]
    }

    pub fn system_basis(&self) -> &[Ket] {
        &self.system_basis
    }

    pub fn ready_states(&self) -> &[Ket; 2] {
        &self.ready
    }

    pub fn pointers(&self) -> &[Ket] {
        &self.pointers
    }

    /// Two-step dynamics on the grid (0, 1, 2).
    pub fn dynamics(&self) -> &Dynamics {
        &self.dynamics
    }

    /// {[M^1], …, [M^n], remainder} on H_M.
    pub fn pointer_pd(&self) -> &ProjectiveDecomposition {
        &self.pointer_pd
    }

    /// Checks unitarity, the orthonormality of the apparatus kets and
    /// P^j|M^j⟩ = |M^j⟩.
    pub fn verify(&self, tol: f64) -> Result<()> {
        for u in self.dynamics.steps() {
            let residual = u.unitary_residual();
            if residual > tol {
                return Err(Error::NotUnitary { residual });
            }
        }
        let app: Vec<&Ket> = self.ready.iter().chain(&self.pointers).collect();
        for (i, a) in app.iter().enumerate() {
            for (j, b) in app.iter().enumerate() {
                let expect = if i == j { 1.0 } else { 0.0 };
                if (a.inner(b) - C64::new(expect, 0.0)).norm() > tol {
                    return Err(Error::InvalidModel(format!(
                        "apparatus kets {i} and {j} not orthonormal"
                    )));
                }
            }
        }
        for (j, m) in self.pointers.iter().enumerate() {
            let moved = self.pointer_pd.projectors()[j].apply(m);
            if (moved.amplitudes() - m.amplitudes()).norm() > tol {
                return Err(Error::InvalidModel(format!(
                    "pointer projector {j} does not fix its pointer ket"
                )));
            }
        }
        Ok(())
    }

    /// |Ψ_0⟩ = (Σ_j c_j |s^j⟩) ⊗ |M_0⟩.
    pub fn initial_state(&self, c: &[C64], tol: f64) -> Result<Ket> {
        let psi = superpose(&self.system_basis, c, tol)?;
        Ok(psi.kron(&self.ready[0]))
    }

    /// {[s^j] ⊗ I_M}
    pub fn system_pd(&self) -> ProjectiveDecomposition {
        let labels = (1..=self.system_dim()).map(|j| format!("s{j}")).collect();
        ProjectiveDecomposition::from_basis(&self.system_basis, labels, 1e-9)
            .expect("validated basis")
            .kron(&ProjectiveDecomposition::trivial(self.apparatus_dim()))
    }

    /// {I_s ⊗ P^k}
    pub fn lifted_pointer_pd(&self) -> ProjectiveDecomposition {
        ProjectiveDecomposition::trivial(self.system_dim()).kron(&self.pointer_pd)
    }

    fn system_projector(&self, j: usize) -> Operator {
        Operator::dyad(&self.system_basis[j], 1e-9)
            .expect("validated basis")
            .kron(&Operator::identity(self.apparatus_dim()))
    }

    fn pointer_projector(&self, k: usize) -> Operator {
        Operator::identity(self.system_dim()).kron(&self.pointer_pd.projectors()[k])
    }
}

fn superpose(basis: &[Ket], c: &[C64], tol: f64) -> Result<Ket> {
    if c.len() != basis.len() {
        return Err(Error::Dim(format!(
            "{} amplitudes for a {}-dimensional system",
            c.len(),
            basis.len()
        )));
    }
    let norm = c.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    if (norm - 1.0).abs() > tol {
        return Err(Error::Normalization { norm });
    }
    let mut psi = basis[0].scale(c[0]);
    for (k, &cj) in basis.iter().zip(c).skip(1) {
        psi = psi.add(&k.scale(cj))?;
    }
    Ok(psi)
}

fn check_basis(basis: &[Ket], tol: f64) -> Result<usize> {
    let d = basis
        .first()
        .map(Ket::dim)
        .ok_or_else(|| Error::Dim("system basis is empty".into()))?;
    if basis.len() != d {
        return Err(Error::Dim(format!(
            "{} basis kets for a {d}-dimensional system",
            basis.len()
        )));
    }
    ProjectiveDecomposition::from_basis(basis, (0..d).map(|i| i.to_string()).collect(), tol)?;
    Ok(d)
}

/// Assembles the two-step measurement unitaries on H_s ⊗ H_M.
pub fn build_measurement(
    system_basis: &[Ket],
    apparatus_dim: usize,
    mode: MeasurementMode,
    tol: f64,
) -> Result<MeasurementModel> {
    let ds = check_basis(system_basis, tol)?;
    if apparatus_dim < ds + 2 {
        return Err(Error::Dim(format!(
            "apparatus dimension {apparatus_dim} cannot hold two ready states and {ds} pointer states"
        )));
    }
    let dm = apparatus_dim;
    let m0 = Ket::basis(dm, 0);
    let m1 = Ket::basis(dm, 1);
    let pointers: Vec<Ket> = (0..ds).map(|j| Ket::basis(dm, j + 2)).collect();

    let step1_in: Vec<Ket> = system_basis.iter().map(|s| s.kron(&m0)).collect();
    let step1_out: Vec<Ket> = system_basis.iter().map(|s| s.kron(&m1)).collect();
    let step2_in = step1_out.clone();
    let step2_out: Vec<Ket> = system_basis
        .iter()
        .zip(&pointers)
        .map(|(s, m)| match mode {
            MeasurementMode::Destructive => system_basis[0].kron(m),
            MeasurementMode::VonNeumann => s.kron(m),
        })
        .collect();
    let u1 = complete_unitary(&step1_in, &step1_out, tol)?;
    let u2 = complete_unitary(&step2_in, &step2_out, tol)?;
    let dynamics = Dynamics::from_unitaries(TimeGrid::steps(3)?, vec![u1, u2], tol)?;

    let mut projectors: Vec<Operator> = pointers.iter().map(|m| Operator::dyad(m, tol)).collect::<Result<_>>()?;
    let mut rest = Operator::identity(dm);
    for p in &projectors {
        rest = &rest - p;
    }
    projectors.push(rest);
    let mut labels: Vec<String> = (1..=ds).map(|j| format!("P{j}")).collect();
    labels.push("Prest".into());
    let pointer_pd = ProjectiveDecomposition::with_labels(projectors, labels, tol)?;

    let model = MeasurementModel {
        mode,
        space: CompositeSpace::new(vec![ds, dm])?,
        system_basis: system_basis.to_vec(),
        ready: [m0, m1],
        pointers,
        dynamics,
        pointer_pd,
    };
    model.verify(tol.max(1e-12))?;
    Ok(model)
}

/// Outcome, joint and conditional tables for the family
/// [Ψ_0] ⊙ {[s^j]} ⊙ {P^k}.
#[derive(Debug, Clone)]
pub struct MeasurementAnalysis {
    pub family: HistoryFamily,
    pub report: ConsistencyReport,
    /// Pr(P^k at t_2), pointer outcomes only.
    pub outcome: Vec<f64>,
    /// joint[j][k] = Pr(s^j at t_1 AND P^k at t_2).
    pub joint: Vec<Vec<f64>>,
    /// conditional[j][k] = Pr(s^j at t_1 | P^k at t_2); `None` when Pr(P^k) = 0.
    pub conditional: Vec<Vec<Option<f64>>>,
}

pub fn measurement_analysis(model: &MeasurementModel, c: &[C64], tols: &Tolerances) -> Result<MeasurementAnalysis> {
    let psi0 = model.initial_state(c, tols.norm.max(1e-12))?;
    let p0 = Operator::dyad(&psi0, 1e-9)?;
    let family = HistoryFamily::fixed_initial(
        model.dynamics.grid().clone(),
        &p0,
        &[model.system_pd(), model.lifted_pointer_pd()],
        tols.alg,
    )?;
    let report = decoherence_functional(&family, &model.dynamics, tols)?;
    let probs = FamilyProbabilities::new(&family, &report, tols)?;
    let n = model.system_dim();
    let mut outcome = Vec::with_capacity(n);
    let mut joint = vec![vec![0.0; n]; n];
    let mut conditional = vec![vec![None; n]; n];
    for k in 0..n {
        let pointer = HistoryEvent::at(2, model.pointer_projector(k));
        outcome.push(probs.probability(&pointer)?);
        for j in 0..n {
            let particle = HistoryEvent::at(1, model.system_projector(j));
            joint[j][k] = probs.probability(&particle.conjoin(&pointer))?;
            conditional[j][k] = match probs.conditional(&particle, &pointer) {
                Ok(p) => Some(p),
                Err(Error::ZeroCondition) => None,
                Err(e) => return Err(e),
            };
        }
    }
    Ok(MeasurementAnalysis {
        family,
        report,
        outcome,
        joint,
        conditional,
    })
}

/// Final-time tables for the von Neumann model read as a preparation.
#[derive(Debug, Clone)]
pub struct PreparationAnalysis {
    pub report: ConsistencyReport,
    /// joint[i][j] = Pr([s^i] AND P^j at t_2).
    pub joint: Vec<Vec<f64>>,
    /// conditional[i][j] = Pr([s^i] at t_2 | P^j at t_2); `None` when Pr(P^j) = 0.
    pub conditional: Vec<Vec<Option<f64>>>,
}

/// Uses the single-time decomposition {[s^i] ⊗ P^j} at t_2 with the
/// initial state at t_0. Reading off the particle state given the pointer
/// is an ordinary conditional probability; no collapse is involved.
pub fn preparation_analysis(model: &MeasurementModel, c: &[C64], tols: &Tolerances) -> Result<PreparationAnalysis> {
    if model.mode != MeasurementMode::VonNeumann {
        return Err(Error::InvalidModel(
            "preparation analysis needs a von Neumann model".into(),
        ));
    }
    let psi0 = model.initial_state(c, tols.norm.max(1e-12))?;
    let p0 = Operator::dyad(&psi0, 1e-9)?;
    let grid = TimeGrid::new(vec![0.0, 2.0])?;
    let dynamics = Dynamics::from_unitaries(grid.clone(), vec![model.dynamics.propagator(2, 0)], tols.alg.max(1e-9))?;
    let n = model.system_dim();
    let labels = (1..=n).map(|j| format!("s{j}")).collect();
    let sys = ProjectiveDecomposition::from_basis(&model.system_basis, labels, 1e-9)?;
    let final_pd = sys.kron(&model.pointer_pd);
    let family = HistoryFamily::fixed_initial(grid, &p0, &[final_pd], tols.alg)?;
    let report = decoherence_functional(&family, &dynamics, tols)?;
    let probs = FamilyProbabilities::new(&family, &report, tols)?;

    let mut joint = vec![vec![0.0; n]; n];
    let mut conditional = vec![vec![None; n]; n];
    for j in 0..n {
        let pointer = HistoryEvent::at(1, model.pointer_projector(j));
        for i in 0..n {
            let particle = HistoryEvent::at(1, model.system_projector(i));
            joint[i][j] = probs.probability(&particle.conjoin(&pointer))?;
            conditional[i][j] = match probs.conditional(&particle, &pointer) {
                Ok(p) => Some(p),
                Err(Error::ZeroCondition) => None,
                Err(e) => return Err(e),
            };
        }
    }
    Ok(PreparationAnalysis {
        report,
        joint,
        conditional,
    })
}

/// Preparation whose system states {|r_j⟩} need not be orthogonal:
/// |s^j⟩⊗|M_0⟩ → |r_j⟩⊗|M^j⟩ with M_0 = e_0 and M^j = e_j on an
/// (n+1)-dimensional apparatus.
#[derive(Debug, Clone)]
pub struct ContextualPreparation {
    pub system_dim: usize,
    pub apparatus_dim: usize,
    pub dynamics: Dynamics,
    pub targets: Vec<Ket>,
}

#[derive(Debug, Clone)]
pub struct ContextualAnalysis {
    /// Pr(P^j at t_1).
    pub pointer: Vec<f64>,
    /// Pr([r_j] at t_1 | P^j at t_1); `None` when Pr(P^j) = 0.
    pub conditional: Vec<Option<f64>>,
    /// The evolved state Σ_j c_j |r_j⟩⊗|M^j⟩.
    pub final_state: Ket,
}

pub fn contextual_preparation(targets: &[Ket], tol: f64) -> Result<ContextualPreparation> {
    let ds = targets
        .first()
        .map(Ket::dim)
        .ok_or_else(|| Error::Dim("no target states".into()))?;
    let n = targets.len();
    if n > ds {
        return Err(Error::Dim(format!(
            "{n} target states need a system of dimension >= {n}, got {ds}"
        )));
    }
    for r in targets {
        if r.dim() != ds {
            return Err(Error::Dim("target states must share one dimension".into()));
        }
        r.check_normalized(tol)?;
    }
    let dm = n + 1;
    let m0 = Ket::basis(dm, 0);
    let inputs: Vec<Ket> = (0..n).map(|j| Ket::basis(ds, j).kron(&m0)).collect();
    let outputs: Vec<Ket> = targets
        .iter()
        .enumerate()
        .map(|(j, r)| r.kron(&Ket::basis(dm, j + 1)))
        .collect();
    let u = complete_unitary(&inputs, &outputs, tol)?;
    let dynamics = Dynamics::from_unitaries(TimeGrid::steps(2)?, vec![u], tol)?;
    Ok(ContextualPreparation {
        system_dim: ds,
        apparatus_dim: dm,
        dynamics,
        targets: targets.to_vec(),
    })
}

/// For each j, uses the decomposition {[r_j]⊗P^j, (I−[r_j])⊗P^j, I⊗(I−P^j)}
/// at t_1: the property [r_j] is only defined in the context of P^j.
pub fn contextual_analysis(prep: &ContextualPreparation, c: &[C64], tols: &Tolerances) -> Result<ContextualAnalysis> {
    let n = prep.targets.len();
    let basis: Vec<Ket> = (0..n).map(|j| Ket::basis(prep.system_dim, j)).collect();
    let psi = superpose(&basis, c, tols.norm.max(1e-12))?;
    let psi0 = psi.kron(&Ket::basis(prep.apparatus_dim, 0));
    let final_state = prep.dynamics.propagator(1, 0).apply(&psi0);
    let p0 = Operator::dyad(&psi0, 1e-9)?;
    let id_s = Operator::identity(prep.system_dim);

    let mut pointer = Vec::with_capacity(n);
    let mut conditional = Vec::with_capacity(n);
    for (j, r) in prep.targets.iter().enumerate() {
        let pj = Operator::dyad(&Ket::basis(prep.apparatus_dim, j + 1), 1e-12)?;
        let rj = Operator::dyad(r, 1e-9)?;
        let target = rj.kron(&pj);
        let given = id_s.kron(&pj);
        let pd = ProjectiveDecomposition::with_labels(
            vec![target.clone(), rj.complement().kron(&pj), id_s.kron(&pj.complement())],
            vec![
                format!("r{}&P{}", j + 1, j + 1),
                format!("~r{}&P{}", j + 1, j + 1),
                format!("~P{}", j + 1),
            ],
            tols.alg.max(1e-9),
        )?;
        let family = HistoryFamily::fixed_initial(prep.dynamics.grid().clone(), &p0, &[pd], tols.alg)?;
        let probs = FamilyProbabilities::compute(&family, &prep.dynamics, tols)?;
        let given = HistoryEvent::at(1, given);
        pointer.push(probs.probability(&given)?);
        conditional.push(match probs.conditional(&HistoryEvent::at(1, target), &given) {
            Ok(p) => Some(p),
            Err(Error::ZeroCondition) => None,
            Err(e) => return Err(e),
        });
    }
    Ok(ContextualAnalysis {
        pointer,
        conditional,
        final_state,
    })
}
