//! Time development, chain operators and the decoherence functional.
//!
//! For a history Y^α = F_0 ⊙ … ⊙ F_f the chain operator is
//!
//! ```text
//! K(Y^α) = F_f T(t_f, t_{f-1}) F_{f-1} ⋯ F_1 T(t_1, t_0) F_0
//! ```
//!
//! and the decoherence functional is D(α, β) = Tr[K(Y^α)† K(Y^β)]. A family
//! is consistent when every off-diagonal entry vanishes; its history
//! weights are then the diagonal, W(α) = D(α, α).
//!
//! Weights are reported raw. Probabilities are always normalized at query
//! time, over the histories that are not the throwaway history of a
//! fixed-initial family. Inconsistent families get a full report but every
//! probability query on them fails with [`Error::InconsistentFamily`].

use nalgebra::DMatrix;
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::framework::ProjectiveDecomposition;
use crate::histories::{History, HistoryFamily, TimeGrid};
use crate::operator::{check_dims, unitary_from_hamiltonian, CMatrix, Ket, Operator};
use crate::tolerance::Tolerances;

/// Step unitaries T(t_{m+1}, t_m) on a time grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Dynamics {
    grid: TimeGrid,
    dim: usize,
    steps: Vec<Operator>,
}

impl Dynamics {
    pub fn from_unitaries(grid: TimeGrid, steps: Vec<Operator>, tol: f64) -> Result<Self> {
        if steps.len() + 1 != grid.len() {
            return Err(Error::GridMismatch(format!(
                "{} step unitaries for a grid of {} times",
                steps.len(),
                grid.len()
            )));
        }
        let dim = steps
            .first()
            .map(Operator::dim)
            .ok_or_else(|| Error::GridMismatch("use Dynamics::trivial for a single-time grid".into()))?;
        let mut checked = Vec::with_capacity(steps.len());
        for u in steps {
            check_dims(dim, u.dim())?;
            checked.push(Operator::unitary(u.into_matrix(), tol)?);
        }
        Ok(Self {
            grid,
            dim,
            steps: checked,
        })
    }

    /// T = I at every step.
    pub fn trivial(grid: TimeGrid, dim: usize) -> Self {
        let steps = (1..grid.len())
            .map(|_| Operator::unitary(CMatrix::identity(dim, dim), 0.0).expect("identity"))
            .collect();
        Self { grid, dim, steps }
    }

    /// The same unitary for every step.
    pub fn constant(grid: TimeGrid, step: Operator, tol: f64) -> Result<Self> {
        let steps = (1..grid.len()).map(|_| step.clone()).collect::<Vec<_>>();
        if steps.is_empty() {
            return Ok(Self::trivial(grid, step.dim()));
        }
        Self::from_unitaries(grid, steps, tol)
    }

    /// T(t_{m+1}, t_m) = exp(−i (t_{m+1} − t_m) H) with ħ = 1.
    pub fn from_hamiltonian(grid: TimeGrid, h: &Operator, tol: f64) -> Result<Self> {
        if grid.len() == 1 {
            return Ok(Self::trivial(grid, h.dim()));
        }
        let steps = grid
            .times()
            .windows(2)
            .map(|w| unitary_from_hamiltonian(h, w[1] - w[0], tol))
            .collect::<Result<Vec<_>>>()?;
        Self::from_unitaries(grid, steps, tol.max(1e-9))
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn steps(&self) -> &[Operator] {
        &self.steps
    }

    /// T(t_to, t_from) for grid indices; backward propagation is the adjoint.
    pub fn propagator(&self, to: usize, from: usize) -> Operator {
        assert!(
            to < self.grid.len() && from < self.grid.len(),
            "grid index out of range"
        );
        if to < from {
            return self.propagator(from, to).adjoint();
        }
        let mut t = Operator::identity(self.dim);
        for step in &self.steps[from..to] {
            t = step * &t;
        }
        t
    }

    /// Largest violation of T(t,t) = I, T(t',t) = T(t,t')† and
    /// T(t'',t) = T(t'',t')T(t',t) over all grid index triples.
    pub fn composition_residual(&self) -> f64 {
        let n = self.grid.len();
        let mut worst: f64 = 0.0;
        for a in 0..n {
            worst = worst.max((&self.propagator(a, a) - &Operator::identity(self.dim)).frobenius_norm());
            for b in 0..n {
                let back = self.propagator(b, a).adjoint();
                worst = worst.max((&self.propagator(a, b) - &back).frobenius_norm());
                for c in 0..n {
                    let via = &self.propagator(c, b) * &self.propagator(b, a);
                    worst = worst.max((&self.propagator(c, a) - &via).frobenius_norm());
                }
            }
        }
        worst
    }

    /// Dynamics on the mirrored grid with adjoint steps in reverse order.
    pub fn reversed(&self) -> Dynamics {
        Dynamics {
            grid: self.grid.reversed(),
            dim: self.dim,
            steps: self.steps.iter().rev().map(Operator::adjoint).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChainOperator {
    pub label: String,
    pub value: Operator,
}

/// K(Y) = F_f T_f ⋯ F_1 T_1 F_0 for one history.
pub fn chain_operator(history: &History, dynamics: &Dynamics) -> Result<ChainOperator> {
    let factors = history.factors();
    if factors.len() != dynamics.grid().len() {
        return Err(Error::GridMismatch(format!(
            "history {:?} has {} factors but dynamics cover {} times",
            history.label(),
            factors.len(),
            dynamics.grid().len()
        )));
    }
    check_dims(dynamics.dim(), factors[0].dim())?;
    let mut k = factors[0].matrix().clone();
    for (f, t) in factors[1..].iter().zip(dynamics.steps()) {
        k = f.matrix() * (t.matrix() * k);
    }
    Ok(ChainOperator {
        label: history.label().to_string(),
        value: Operator::new(k)?,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Consistent,
    Inconsistent,
}

/// The decoherence-functional matrix of a family together with the
/// consistency verdict and raw weights.
#[derive(Debug, Clone, PartialEq)]
pub struct ConsistencyReport {
    pub labels: Vec<String>,
    pub throwaway: Vec<bool>,
    pub d: CMatrix,
    pub weights: Vec<f64>,
    /// max_{α≠β} |D(α, β)|
    pub max_offdiag: f64,
    /// max_{α≠β} |D(α, β)| / bound(α, β); the family is consistent iff ≤ 1.
    pub worst_ratio: f64,
    pub verdict: Verdict,
    pub tolerance: f64,
    pub floor: f64,
}

impl ConsistencyReport {
    pub fn is_consistent(&self) -> bool {
        self.verdict == Verdict::Consistent
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// |D(α, β)| for α ≠ β, zero on the diagonal.
    pub fn offdiag_magnitudes(&self) -> DMatrix<f64> {
        DMatrix::from_fn(
            self.len(),
            self.len(),
            |a, b| if a == b { 0.0 } else { self.d[(a, b)].norm() },
        )
    }

    pub fn require_consistent(&self) -> Result<()> {
        if self.is_consistent() {
            Ok(())
        } else {
            Err(Error::InconsistentFamily {
                residual: self.max_offdiag,
            })
        }
    }

    /// Normalized history probabilities; throwaway histories get zero.
    pub fn probabilities(&self) -> Result<Vec<f64>> {
        self.require_consistent()?;
        let total: f64 = self
            .weights
            .iter()
            .zip(&self.throwaway)
            .filter(|(_, &t)| !t)
            .map(|(w, _)| w.max(0.0))
            .sum();
        if total <= 0.0 {
            return Err(Error::ZeroCondition);
        }
        Ok(self
            .weights
            .iter()
            .zip(&self.throwaway)
            .map(|(w, &t)| if t { 0.0 } else { w.max(0.0) / total })
            .collect())
    }
}

/// Builds the full decoherence functional and decides consistency with
/// |D(α, β)| ≤ max(tol_consistency · √(D(α,α) D(β,β)), floor).
pub fn decoherence_functional(
    family: &HistoryFamily,
    dynamics: &Dynamics,
    tols: &Tolerances,
) -> Result<ConsistencyReport> {
    family.grid().check_same(dynamics.grid())?;
    check_dims(dynamics.dim(), family.dim())?;
    let chains = family
        .histories()
        .iter()
        .map(|h| chain_operator(h, dynamics))
        .collect::<Result<Vec<_>>>()?;
    let n = chains.len();
    let mut d = CMatrix::zeros(n, n);
    for a in 0..n {
        for b in a..n {
            let v = chains[a].value.matrix().dotc(chains[b].value.matrix());
            d[(a, b)] = v;
            d[(b, a)] = v.conj();
        }
    }
    let weights: Vec<f64> = (0..n).map(|a| d[(a, a)].re).collect();
    let mut max_offdiag: f64 = 0.0;
    let mut worst_ratio: f64 = 0.0;
    for a in 0..n {
        for b in (a + 1)..n {
            let mag = d[(a, b)].norm();
            let scale = (weights[a].max(0.0) * weights[b].max(0.0)).sqrt();
            let bound = (tols.consistency * scale).max(tols.consistency_floor);
            max_offdiag = max_offdiag.max(mag);
            worst_ratio = worst_ratio.max(mag / bound);
        }
    }
    let verdict = if worst_ratio <= 1.0 {
        Verdict::Consistent
    } else {
        Verdict::Inconsistent
    };
    Ok(ConsistencyReport {
        labels: family.labels().into_iter().map(String::from).collect(),
        throwaway: family.histories().iter().map(History::is_throwaway).collect(),
        d,
        weights,
        max_offdiag,
        worst_ratio,
        verdict,
        tolerance: tols.consistency,
        floor: tols.consistency_floor,
    })
}

fn check_two_time(
    pd0: &ProjectiveDecomposition,
    pd1: &ProjectiveDecomposition,
    dynamics: &Dynamics,
    j: usize,
    k: usize,
) -> Result<()> {
    if dynamics.grid().len() != 2 {
        return Err(Error::GridMismatch(format!(
            "Born weights need a two-time grid, got {} times",
            dynamics.grid().len()
        )));
    }
    check_dims(dynamics.dim(), pd0.dim())?;
    check_dims(dynamics.dim(), pd1.dim())?;
    if j >= pd0.len() || k >= pd1.len() {
        return Err(Error::Dim(format!("element index ({j}, {k}) out of range")));
    }
    Ok(())
}

/// Tr(Q^k T(t1,t0) P^j T(t0,t1)).
pub fn born_weight(
    pd0: &ProjectiveDecomposition,
    pd1: &ProjectiveDecomposition,
    dynamics: &Dynamics,
    j: usize,
    k: usize,
) -> Result<f64> {
    check_two_time(pd0, pd1, dynamics, j, k)?;
    let t = dynamics.propagator(1, 0);
    let p = &pd0.projectors()[j];
    let q = &pd1.projectors()[k];
    Ok((&(&(q * &t) * p) * &t.adjoint()).trace().re)
}

/// Tr(P^j T(t0,t1) Q^k T(t1,t0)): the same weight read backwards in time.
pub fn born_weight_backward(
    pd0: &ProjectiveDecomposition,
    pd1: &ProjectiveDecomposition,
    dynamics: &Dynamics,
    j: usize,
    k: usize,
) -> Result<f64> {
    check_two_time(pd0, pd1, dynamics, j, k)?;
    let back = dynamics.propagator(0, 1);
    let p = &pd0.projectors()[j];
    let q = &pd1.projectors()[k];
    Ok((&(&(p * &back) * q) * &back.adjoint()).trace().re)
}

/// |⟨φ|T(t1,t0)|ψ⟩|², evolving ψ forward.
pub fn born_weight_kets(psi0: &Ket, phi1: &Ket, dynamics: &Dynamics) -> Result<f64> {
    check_dims(dynamics.dim(), psi0.dim())?;
    check_dims(dynamics.dim(), phi1.dim())?;
    let last = dynamics.grid().last_index();
    let psi_t = dynamics.propagator(last, 0).apply(psi0);
    Ok(phi1.inner(&psi_t).norm_sqr())
}

/// |⟨ψ|φ_0⟩|² with φ_0 = T(t0,t1) φ evolved backward; no use of the
/// forward-evolved ψ.
pub fn born_weight_kets_backward(psi0: &Ket, phi1: &Ket, dynamics: &Dynamics) -> Result<f64> {
    check_dims(dynamics.dim(), psi0.dim())?;
    check_dims(dynamics.dim(), phi1.dim())?;
    let last = dynamics.grid().last_index();
    let phi0 = dynamics.propagator(0, last).apply(phi1);
    Ok(psi0.inner(&phi0).norm_sqr())
}

/// A conjunction of single-time properties: "E_m at time t_m" for each clause.
#[derive(Debug, Clone, PartialEq)]
pub struct HistoryEvent {
    clauses: Vec<(usize, Operator)>,
}

impl HistoryEvent {
    pub fn new() -> Self {
        Self { clauses: Vec::new() }
    }

    pub fn at(time: usize, projector: Operator) -> Self {
        Self::new().and(time, projector)
    }

    pub fn and(mut self, time: usize, projector: Operator) -> Self {
        self.clauses.push((time, projector));
        self
    }

    pub fn clauses(&self) -> &[(usize, Operator)] {
        &self.clauses
    }

    pub fn conjoin(&self, other: &HistoryEvent) -> HistoryEvent {
        let mut clauses = self.clauses.clone();
        clauses.extend(other.clauses.iter().cloned());
        HistoryEvent { clauses }
    }

    /// Whether history `h` lies inside this event. A factor that neither
    /// lies under nor is orthogonal to a clause's projector means the event
    /// is not in the family's algebra.
    pub fn contains(&self, h: &History, tol: f64) -> Result<bool> {
        let mut inside = true;
        for (time, e) in &self.clauses {
            let f = h
                .factors()
                .get(*time)
                .ok_or_else(|| Error::GridMismatch(format!("event refers to time index {time} beyond the grid")))?;
            check_dims(f.dim(), e.dim())?;
            let ef = e * f;
            if (&ef - f).frobenius_norm() <= tol {
                continue;
            }
            if ef.frobenius_norm() <= tol {
                inside = false;
                continue;
            }
            return Err(Error::EventNotInFamily {
                time: *time,
                history: h.label().to_string(),
            });
        }
        Ok(inside)
    }
}

impl Default for HistoryEvent {
    fn default() -> Self {
        Self::new()
    }
}

/// Normalized probabilities over a consistent family, for repeated queries.
#[derive(Debug, Clone)]
pub struct FamilyProbabilities<'a> {
    family: &'a HistoryFamily,
    probs: Vec<f64>,
    tols: Tolerances,
}

impl<'a> FamilyProbabilities<'a> {
    pub fn new(family: &'a HistoryFamily, report: &ConsistencyReport, tols: &Tolerances) -> Result<Self> {
        if report.len() != family.len() {
            return Err(Error::Dim("report does not belong to this family".into()));
        }
        Ok(Self {
            family,
            probs: report.probabilities()?,
            tols: *tols,
        })
    }

    pub fn compute(family: &'a HistoryFamily, dynamics: &Dynamics, tols: &Tolerances) -> Result<Self> {
        let report = decoherence_functional(family, dynamics, tols)?;
        Self::new(family, &report, tols)
    }

    pub fn history_probabilities(&self) -> &[f64] {
        &self.probs
    }

    pub fn probability(&self, event: &HistoryEvent) -> Result<f64> {
        let mut total = 0.0;
        for (h, p) in self.family.histories().iter().zip(&self.probs) {
            if h.is_throwaway() {
                continue;
            }
            if event.contains(h, self.tols.alg)? {
                total += p;
            }
        }
        Ok(total)
    }

    pub fn conditional(&self, target: &HistoryEvent, given: &HistoryEvent) -> Result<f64> {
        let denom = self.probability(given)?;
        if denom <= self.tols.consistency_floor {
            return Err(Error::ZeroCondition);
        }
        Ok(self.probability(&target.conjoin(given))? / denom)
    }
}

/// Pr(event), normalized over the non-throwaway histories of a consistent family.
pub fn probability(
    family: &HistoryFamily,
    dynamics: &Dynamics,
    event: &HistoryEvent,
    tols: &Tolerances,
) -> Result<f64> {
    FamilyProbabilities::compute(family, dynamics, tols)?.probability(event)
}

/// Pr(target | given). Refused on inconsistent families.
pub fn conditional_probability(
    family: &HistoryFamily,
    dynamics: &Dynamics,
    target: &HistoryEvent,
    given: &HistoryEvent,
    tols: &Tolerances,
) -> Result<f64> {
    FamilyProbabilities::compute(family, dynamics, tols)?.conditional(target, given)
}

/// Draws histories with probability W(α)/ΣW.
#[derive(Debug, Clone)]
pub struct HistorySampler {
    dist: WeightedIndex<f64>,
}

impl HistorySampler {
    pub fn new(report: &ConsistencyReport) -> Result<Self> {
        let probs = report.probabilities()?;
        let dist = WeightedIndex::new(&probs).map_err(|e| Error::Weight(e.to_string()))?;
        Ok(Self { dist })
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        self.dist.sample(rng)
    }
}

/// One seeded draw; returns the history index.
pub fn sample_history(family: &HistoryFamily, dynamics: &Dynamics, seed: u64, tols: &Tolerances) -> Result<usize> {
    let report = decoherence_functional(family, dynamics, tols)?;
    let sampler = HistorySampler::new(&report)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(sampler.sample(&mut rng))
}

/// Seeded counts over `draws` samples, indexed like the family.
pub fn sample_counts(
    family: &HistoryFamily,
    dynamics: &Dynamics,
    draws: usize,
    seed: u64,
    tols: &Tolerances,
) -> Result<Vec<u64>> {
    let report = decoherence_functional(family, dynamics, tols)?;
    let sampler = HistorySampler::new(&report)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut counts = vec![0u64; family.len()];
    for _ in 0..draws {
        counts[sampler.sample(&mut rng)] += 1;
    }
    Ok(counts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operator::C64;
    use crate::random::{random_basis_pd, random_ket, random_pd, random_unitary};
    use crate::states::{spin_ket, spin_projectors, Axis};
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn tols() -> Tolerances {
        Tolerances::default()
    }

    fn z() -> ProjectiveDecomposition {
        ProjectiveDecomposition::spin(Axis::Z)
    }

    fn x() -> ProjectiveDecomposition {
        ProjectiveDecomposition::spin(Axis::X)
    }

    /// Hand-multiplied 2x2 products for the [x+] → {z±} → {x±} family with
    /// T = I: K(z±, x+) = [x+][z±][x+] = ½[x+], K(z±, x−) = [x−][z±][x+].
    /// Tr(½[x+] · ½[x+]) = ¼.
    const INCONSISTENT_OFFDIAG: f64 = 0.25;

    #[test]
    fn chain_with_identity_factors_is_the_propagator() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let grid = TimeGrid::steps(4).unwrap();
        let steps = (0..3).map(|_| random_unitary(3, &mut rng)).collect();
        let dynamics = Dynamics::from_unitaries(grid, steps, 1e-10).unwrap();
        let h = History::new("I", (0..4).map(|_| Operator::identity(3)).collect());
        let k = chain_operator(&h, &dynamics).unwrap();
        assert!(k.value.approx_eq(&dynamics.propagator(3, 0), 1e-12));
    }

    #[test]
    fn chain_x_z_x_is_half_x() {
        let (xp, _) = spin_projectors(Axis::X);
        let (zp, _) = spin_projectors(Axis::Z);
        let h = History::new("x+,z+,x+", vec![xp.clone(), zp, xp.clone()]);
        let dynamics = Dynamics::trivial(TimeGrid::steps(3).unwrap(), 2);
        let k = chain_operator(&h, &dynamics).unwrap();
        assert!(k.value.approx_eq(&xp.scale(0.5.into()), 1e-15));
    }

    #[test]
    fn chain_grid_mismatch() {
        let h = History::new("I", vec![Operator::identity(2)]);
        let dynamics = Dynamics::trivial(TimeGrid::steps(2).unwrap(), 2);
        assert!(matches!(chain_operator(&h, &dynamics), Err(Error::GridMismatch(_))));
    }

    #[test]
    fn two_time_chain_norm_is_born_weight() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let pd0 = random_pd(4, &mut rng);
        let pd1 = random_pd(4, &mut rng);
        let dynamics =
            Dynamics::from_unitaries(TimeGrid::steps(2).unwrap(), vec![random_unitary(4, &mut rng)], 1e-10).unwrap();
        let fam = HistoryFamily::product(dynamics.grid().clone(), &[pd0.clone(), pd1.clone()]).unwrap();
        let report = decoherence_functional(&fam, &dynamics, &tols()).unwrap();
        assert!(report.is_consistent());
        for j in 0..pd0.len() {
            for k in 0..pd1.len() {
                let alpha = j * pd1.len() + k;
                let w = born_weight(&pd0, &pd1, &dynamics, j, k).unwrap();
                assert_abs_diff_eq!(report.weights[alpha], w, epsilon = 1e-12);
                let chain = chain_operator(&fam.histories()[alpha], &dynamics).unwrap();
                assert_abs_diff_eq!(chain.value.frobenius_norm().powi(2), w, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn inconsistent_triple() {
        let (xp, _) = spin_projectors(Axis::X);
        let grid = TimeGrid::steps(3).unwrap();
        let fam = HistoryFamily::fixed_initial(grid.clone(), &xp, &[z(), x()], 1e-10).unwrap();
        let dynamics = Dynamics::trivial(grid, 2);
        let report = decoherence_functional(&fam, &dynamics, &tols()).unwrap();
        assert_eq!(report.verdict, Verdict::Inconsistent);
        let a = fam.index_of("z+,x+").unwrap();
        let b = fam.index_of("z-,x+").unwrap();
        assert_abs_diff_eq!(report.d[(a, b)].norm(), INCONSISTENT_OFFDIAG, epsilon = 1e-12);
        assert_abs_diff_eq!(report.max_offdiag, INCONSISTENT_OFFDIAG, epsilon = 1e-12);
        let event = HistoryEvent::at(1, spin_projectors(Axis::Z).0);
        assert!(matches!(
            probability(&fam, &dynamics, &event, &tols()),
            Err(Error::InconsistentFamily { .. })
        ));
        assert!(matches!(
            sample_history(&fam, &dynamics, 0, &tols()),
            Err(Error::InconsistentFamily { .. })
        ));
    }

    #[test]
    fn born_weight_examples() {
        let dynamics = Dynamics::trivial(TimeGrid::steps(2).unwrap(), 2);
        for j in 0..2 {
            for k in 0..2 {
                let w = born_weight(&z(), &z(), &dynamics, j, k).unwrap();
                assert_abs_diff_eq!(w, if j == k { 1.0 } else { 0.0 }, epsilon = 1e-15);
            }
        }
        assert_abs_diff_eq!(born_weight(&z(), &x(), &dynamics, 0, 0).unwrap(), 0.5, epsilon = 1e-15);
        let w = born_weight_kets(&spin_ket(Axis::Z, true), &spin_ket(Axis::X, true), &dynamics).unwrap();
        assert_abs_diff_eq!(w, 0.5, epsilon = 1e-15);
        let three = Dynamics::trivial(TimeGrid::steps(3).unwrap(), 2);
        assert!(matches!(
            born_weight(&z(), &z(), &three, 0, 0),
            Err(Error::GridMismatch(_))
        ));
    }

    #[test]
    fn conditional_two_time_same_basis() {
        let dynamics = Dynamics::trivial(TimeGrid::steps(2).unwrap(), 3);
        let pd = ProjectiveDecomposition::standard_basis(3);
        let fam = HistoryFamily::product(dynamics.grid().clone(), &[pd.clone(), pd.clone()]).unwrap();
        for j in 0..3 {
            for k in 0..3 {
                let target = HistoryEvent::at(1, pd.projectors()[k].clone());
                let given = HistoryEvent::at(0, pd.projectors()[j].clone());
                let p = conditional_probability(&fam, &dynamics, &target, &given, &tols()).unwrap();
                assert_abs_diff_eq!(p, if j == k { 1.0 } else { 0.0 }, epsilon = 1e-14);
            }
        }
    }

    #[test]
    fn conditional_matches_trace_formula_for_coarse_pds() {
        // Pr(Q^k | P^j) = Tr(Q T P T†) / Tr(P)
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let pd0 = crate::random::random_pd_with_parts(4, 2, &mut rng);
        let pd1 = crate::random::random_pd_with_parts(4, 3, &mut rng);
        let dynamics =
            Dynamics::from_unitaries(TimeGrid::steps(2).unwrap(), vec![random_unitary(4, &mut rng)], 1e-10).unwrap();
        let fam = HistoryFamily::product(dynamics.grid().clone(), &[pd0.clone(), pd1.clone()]).unwrap();
        let probs = FamilyProbabilities::compute(&fam, &dynamics, &tols()).unwrap();
        for j in 0..pd0.len() {
            for k in 0..pd1.len() {
                let expect = born_weight(&pd0, &pd1, &dynamics, j, k).unwrap() / pd0.projectors()[j].trace().re;
                let got = probs
                    .conditional(
                        &HistoryEvent::at(1, pd1.projectors()[k].clone()),
                        &HistoryEvent::at(0, pd0.projectors()[j].clone()),
                    )
                    .unwrap();
                assert_abs_diff_eq!(got, expect, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn event_outside_algebra_is_rejected() {
        let dynamics = Dynamics::trivial(TimeGrid::steps(2).unwrap(), 2);
        let fam = HistoryFamily::product(dynamics.grid().clone(), &[z(), z()]).unwrap();
        let event = HistoryEvent::at(1, spin_projectors(Axis::X).0);
        assert!(matches!(
            probability(&fam, &dynamics, &event, &tols()),
            Err(Error::EventNotInFamily { .. })
        ));
    }

    #[test]
    fn zero_condition() {
        let (zp, zm) = spin_projectors(Axis::Z);
        let grid = TimeGrid::steps(2).unwrap();
        let fam = HistoryFamily::fixed_initial(grid.clone(), &zp, &[z()], 1e-10).unwrap();
        let dynamics = Dynamics::trivial(grid, 2);
        let r = conditional_probability(
            &fam,
            &dynamics,
            &HistoryEvent::at(1, zp),
            &HistoryEvent::at(1, zm),
            &tols(),
        );
        assert!(matches!(r, Err(Error::ZeroCondition)));
    }

    #[test]
    fn three_toss_from_z_plus_always_up() {
        let (zp, _) = spin_projectors(Axis::Z);
        let grid = TimeGrid::steps(4).unwrap();
        let fam = HistoryFamily::fixed_initial(grid.clone(), &zp, &[z(), z(), z()], 1e-10).unwrap();
        let dynamics = Dynamics::trivial(grid, 2);
        let up = fam.index_of("z+,z+,z+").unwrap();
        for seed in 0..50 {
            assert_eq!(sample_history(&fam, &dynamics, seed, &tols()).unwrap(), up);
        }
    }

    #[test]
    fn unitary_family_samples_its_unitary_history() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let grid = TimeGrid::steps(4).unwrap();
        let steps = (0..3).map(|_| random_unitary(3, &mut rng)).collect();
        let dynamics = Dynamics::from_unitaries(grid, steps, 1e-10).unwrap();
        let psi = random_ket(3, &mut rng);
        let fam = HistoryFamily::unitary(&psi, &dynamics, 1e-10).unwrap();
        // without a fixed initial state, condition on [ψ0] at t0
        let given = HistoryEvent::at(0, Operator::dyad(&psi, 1e-10).unwrap());
        let probs = FamilyProbabilities::compute(&fam, &dynamics, &tols()).unwrap();
        let report = decoherence_functional(&fam, &dynamics, &tols()).unwrap();
        assert!(report.is_consistent());
        assert_abs_diff_eq!(report.weights[0], 1.0, epsilon = 1e-10);
        let mut only_first = HistoryEvent::new();
        for (m, f) in fam.histories()[0].factors().iter().enumerate() {
            only_first = only_first.and(m, f.clone());
        }
        assert_abs_diff_eq!(probs.conditional(&only_first, &given).unwrap(), 1.0, epsilon = 1e-10);
    }

    #[test]
    fn hamiltonian_dynamics_compose() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let h = crate::random::random_hermitian(3, &mut rng);
        let grid = TimeGrid::new(vec![0.0, 0.4, 1.0, 1.3]).unwrap();
        let dynamics = Dynamics::from_hamiltonian(grid, &h, 1e-10).unwrap();
        assert!(dynamics.composition_residual() < 1e-12);
        let whole = crate::operator::unitary_from_hamiltonian(&h, 1.3, 1e-10).unwrap();
        assert!(dynamics.propagator(3, 0).approx_eq(&whole, 1e-12));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn two_time_families_are_consistent(seed in any::<u64>(), d in 1usize..=4) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let grid = TimeGrid::steps(2).unwrap();
            let dynamics = Dynamics::from_unitaries(grid.clone(), vec![random_unitary(d, &mut rng)], 1e-10).unwrap();
            let fam = HistoryFamily::product(grid, &[random_pd(d, &mut rng), random_pd(d, &mut rng)]).unwrap();
            let report = decoherence_functional(&fam, &dynamics, &tols()).unwrap();
            prop_assert!(report.max_offdiag <= 1e-10);
            prop_assert!(report.is_consistent());
        }

        #[test]
        fn d_is_hermitian_with_nonnegative_diagonal(seed in any::<u64>(), d in 1usize..=3, times in 2usize..=4) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let grid = TimeGrid::steps(times).unwrap();
            let steps = (1..times).map(|_| random_unitary(d, &mut rng)).collect();
            let dynamics = Dynamics::from_unitaries(grid.clone(), steps, 1e-10).unwrap();
            let pds: Vec<_> = (0..times).map(|_| random_pd(d, &mut rng)).collect();
            let fam = HistoryFamily::product(grid, &pds).unwrap();
            let report = decoherence_functional(&fam, &dynamics, &tols()).unwrap();
            prop_assert!((&report.d - report.d.adjoint()).norm() <= 1e-12);
            for w in &report.weights {
                prop_assert!(*w >= -1e-10);
            }
            // Σ_{α,β} D(α,β) = Tr(T†T) = d whatever the family
            let total: C64 = report.d.iter().sum();
            prop_assert!((total - C64::new(d as f64, 0.0)).norm() < 1e-9);
        }

        #[test]
        fn time_reversal_transposes_d(seed in any::<u64>(), d in 2usize..=3) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let grid = TimeGrid::steps(3).unwrap();
            let steps = (0..2).map(|_| random_unitary(d, &mut rng)).collect();
            let dynamics = Dynamics::from_unitaries(grid.clone(), steps, 1e-10).unwrap();
            let pds: Vec<_> = (0..3).map(|_| random_pd(d, &mut rng)).collect();
            let fam = HistoryFamily::product(grid, &pds).unwrap();
            let fwd = decoherence_functional(&fam, &dynamics, &tols()).unwrap();
            let rev = decoherence_functional(&fam.reversed(), &dynamics.reversed(), &tols()).unwrap();
            prop_assert!((&rev.d - fwd.d.transpose()).norm() <= 1e-12);
            prop_assert_eq!(rev.verdict, fwd.verdict);
        }

        #[test]
        fn forward_and_backward_born_weights_agree(seed in any::<u64>(), d in 1usize..=4) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let grid = TimeGrid::steps(2).unwrap();
            let dynamics = Dynamics::from_unitaries(grid, vec![random_unitary(d, &mut rng)], 1e-10).unwrap();
            let psi = random_ket(d, &mut rng);
            let phi = random_ket(d, &mut rng);
            let fwd = born_weight_kets(&psi, &phi, &dynamics).unwrap();
            let bwd = born_weight_kets_backward(&psi, &phi, &dynamics).unwrap();
            prop_assert!((fwd - bwd).abs() <= 1e-10);
            let pd0 = random_basis_pd(d, &mut rng);
            let pd1 = random_basis_pd(d, &mut rng);
            for j in 0..d {
                for k in 0..d {
                    let a = born_weight(&pd0, &pd1, &dynamics, j, k).unwrap();
                    let b = born_weight_backward(&pd0, &pd1, &dynamics, j, k).unwrap();
                    prop_assert!((a - b).abs() <= 1e-10);
                }
            }
        }

        #[test]
        fn fixed_initial_weights_normalize(seed in any::<u64>(), d in 2usize..=4) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let grid = TimeGrid::steps(2).unwrap();
            let dynamics = Dynamics::from_unitaries(grid.clone(), vec![random_unitary(d, &mut rng)], 1e-10).unwrap();
            let psi = random_ket(d, &mut rng);
            let p0 = Operator::dyad(&psi, 1e-10).unwrap();
            let fam = HistoryFamily::fixed_initial(grid, &p0, &[random_pd(d, &mut rng)], 1e-10).unwrap();
            let report = decoherence_functional(&fam, &dynamics, &tols()).unwrap();
            prop_assert!(report.is_consistent());
            let total: f64 = report.weights.iter().zip(&report.throwaway)
                .filter(|(_, t)| !**t).map(|(w, _)| *w).sum();
            prop_assert!((total / p0.trace().re - 1.0).abs() <= 1e-9);
        }
    }
}
