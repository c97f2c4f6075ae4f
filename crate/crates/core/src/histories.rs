//! Histories and families of histories on the history space
//! H_0 ⊙ H_1 ⊙ … ⊙ H_f.
//!
//! A history projector is the tensor product of one single-time projector
//! per grid time. It is always stored factored: checks that would naively
//! need the d^(f+1)-dimensional matrix are done factor by factor, using
//!
//! * ‖A ⊗ B‖ = ‖A‖·‖B‖, so Y^α Y^β = 0 iff some factor product vanishes;
//! * for mutually orthogonal projectors, Σ_α Y^α = Ĭ iff Σ_α Tr Y^α = d^(f+1);
//! * two product projectors commute iff some factor product vanishes or
//!   every factor pair commutes.

use crate::dynamics::Dynamics;
use crate::error::{Error, Result};
use crate::framework::ProjectiveDecomposition;
use crate::operator::{check_dims, kron_all, Ket, Operator};

/// Strictly increasing times t_0 < t_1 < … < t_f.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeGrid {
    times: Vec<f64>,
}

impl TimeGrid {
    pub fn new(times: Vec<f64>) -> Result<Self> {
        if times.is_empty() {
            return Err(Error::InvalidGrid("a time grid needs at least one time".into()));
        }
        if times.iter().any(|t| !t.is_finite()) {
            return Err(Error::InvalidGrid("times must be finite".into()));
        }
        if let Some(w) = times.windows(2).find(|w| w[0] >= w[1]) {
            return Err(Error::InvalidGrid(format!(
                "times must be strictly increasing, found {} then {}",
                w[0], w[1]
            )));
        }
        Ok(Self { times })
    }

    /// Grid 0, 1, …, n−1.
    pub fn steps(n: usize) -> Result<Self> {
        Self::new((0..n).map(|i| i as f64).collect())
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Index of the last time; a grid has f + 1 times.
    pub fn last_index(&self) -> usize {
        self.times.len() - 1
    }

    /// The grid −t_f < … < −t_0, used to describe time-reversed families.
    pub fn reversed(&self) -> TimeGrid {
        TimeGrid {
            times: self.times.iter().rev().map(|t| -t).collect(),
        }
    }

    pub(crate) fn check_same(&self, other: &TimeGrid) -> Result<()> {
        if self != other {
            return Err(Error::GridMismatch(format!(
                "grids {:?} and {:?} differ",
                self.times, other.times
            )));
        }
        Ok(())
    }
}

/// Y^α = F_0 ⊙ F_1 ⊙ … ⊙ F_f, stored as its factors.
#[derive(Debug, Clone, PartialEq)]
pub struct History {
    label: String,
    factors: Vec<Operator>,
    throwaway: bool,
}

impl History {
    pub fn new(label: impl Into<String>, factors: Vec<Operator>) -> Self {
        Self {
            label: label.into(),
            factors,
            throwaway: false,
        }
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn factors(&self) -> &[Operator] {
        &self.factors
    }

    /// Whether this is the complement-of-initial-state history of a
    /// fixed-initial family. It belongs to the sample space but is given
    /// probability zero and is excluded from conditioning.
    pub fn is_throwaway(&self) -> bool {
        self.throwaway
    }

    /// Π_m Tr F_m, the trace of the history projector.
    pub fn trace(&self) -> f64 {
        self.factors.iter().map(|f| f.trace().re).product()
    }

    /// The dense history projector on the full history space. Exponential
    /// in the number of times; meant for checks on small problems.
    pub fn dense_projector(&self) -> Operator {
        let refs: Vec<&Operator> = self.factors.iter().collect();
        kron_all(&refs).expect("histories have at least one factor")
    }

    /// ‖Y^α Y^β‖ computed factor by factor.
    pub fn overlap_norm(&self, other: &History) -> f64 {
        self.factors
            .iter()
            .zip(&other.factors)
            .map(|(a, b)| (a * b).frobenius_norm())
            .product()
    }

    /// Whether the two history projectors commute.
    pub fn commutes_with(&self, other: &History, tol: f64) -> bool {
        let any_zero = self
            .factors
            .iter()
            .zip(&other.factors)
            .any(|(a, b)| (a * b).frobenius_norm() <= tol);
        any_zero
            || self
                .factors
                .iter()
                .zip(&other.factors)
                .all(|(a, b)| a.commutator(b).frobenius_norm() <= tol)
    }
}

/// How a family was built; determines which history (if any) is distinguished.
#[derive(Debug, Clone, PartialEq)]
pub enum FamilyKind {
    Product,
    FixedInitial {
        initial: Operator,
    },
    /// `history` indexes the history that follows the unitarily evolved ket.
    Unitary {
        history: usize,
    },
    Raw,
}

/// A sample space of mutually exclusive histories summing to the identity.
#[derive(Debug, Clone, PartialEq)]
pub struct HistoryFamily {
    grid: TimeGrid,
    dim: usize,
    histories: Vec<History>,
    kind: FamilyKind,
}

impl HistoryFamily {
    /// Validates an arbitrary list of product histories.
    pub fn raw(grid: TimeGrid, histories: Vec<History>, tol: f64) -> Result<Self> {
        Self::validated(grid, histories, FamilyKind::Raw, tol)
    }

    fn validated(grid: TimeGrid, histories: Vec<History>, kind: FamilyKind, tol: f64) -> Result<Self> {
        let first = histories.first().ok_or(Error::EmptyDecomposition)?;
        let dim = first
            .factors
            .first()
            .ok_or_else(|| Error::GridMismatch("history has no factors".into()))?
            .dim();
        let mut checked = Vec::with_capacity(histories.len());
        for (index, h) in histories.into_iter().enumerate() {
            if h.factors.len() != grid.len() {
                return Err(Error::GridMismatch(format!(
                    "history {:?} has {} factors for a grid of {} times",
                    h.label,
                    h.factors.len(),
                    grid.len()
                )));
            }
            let mut factors = Vec::with_capacity(h.factors.len());
            for f in h.factors {
                check_dims(dim, f.dim())?;
                let residual = f.projector_residual();
                if residual > tol {
                    return Err(Error::NotProjector { index, residual });
                }
                factors.push(f.into_projector(f64::INFINITY)?);
            }
            checked.push(History { factors, ..h });
        }
        for a in 0..checked.len() {
            for b in (a + 1)..checked.len() {
                let residual = checked[a].overlap_norm(&checked[b]);
                if residual > tol {
                    return Err(Error::Orthogonality {
                        first: a,
                        second: b,
                        residual,
                    });
                }
            }
        }
        let full = (dim as f64).powi(grid.len() as i32);
        let total: f64 = checked.iter().map(History::trace).sum();
        // ranks are integers; ‖Ĭ − ΣY‖² = d^(f+1) − Σ Tr Y once orthogonality holds
        if (full - total).abs() > tol {
            return Err(Error::Completeness {
                residual: (full - total).abs().sqrt(),
            });
        }
        Ok(Self {
            grid,
            dim,
            histories: checked,
            kind,
        })
    }

    /// Cartesian product of one decomposition per time, first time
    /// varying slowest. Labels join the element labels with commas.
    pub fn product(grid: TimeGrid, pds: &[ProjectiveDecomposition]) -> Result<Self> {
        if pds.len() != grid.len() {
            return Err(Error::GridMismatch(format!(
                "{} decompositions for a grid of {} times",
                pds.len(),
                grid.len()
            )));
        }
        let dim = pds[0].dim();
        for pd in pds {
            check_dims(dim, pd.dim())?;
        }
        let histories = cartesian(pds)
            .into_iter()
            .map(|idx| {
                let label = join_labels(pds, &idx);
                let factors = idx.iter().zip(pds).map(|(&i, pd)| pd.projectors()[i].clone()).collect();
                History::new(label, factors)
            })
            .collect();
        Ok(Self {
            grid,
            dim,
            histories,
            kind: FamilyKind::Product,
        })
    }

    /// {P0 ⊙ (product of `later`)} plus the throwaway history
    /// (I − P0) ⊙ I ⊙ … ⊙ I, which is dropped when P0 = I.
    pub fn fixed_initial(
        grid: TimeGrid,
        initial: &Operator,
        later: &[ProjectiveDecomposition],
        tol: f64,
    ) -> Result<Self> {
        let residual = initial.projector_residual();
        if residual > tol {
            return Err(Error::NotProjector { index: 0, residual });
        }
        let initial = initial.clone().into_projector(f64::INFINITY)?;
        if later.len() + 1 != grid.len() {
            return Err(Error::GridMismatch(format!(
                "{} later decompositions for a grid of {} times",
                later.len(),
                grid.len()
            )));
        }
        let dim = initial.dim();
        for pd in later {
            check_dims(dim, pd.dim())?;
        }
        let mut histories: Vec<History> = cartesian(later)
            .into_iter()
            .map(|idx| {
                let mut factors = Vec::with_capacity(grid.len());
                factors.push(initial.clone());
                factors.extend(idx.iter().zip(later).map(|(&i, pd)| pd.projectors()[i].clone()));
                History::new(join_labels(later, &idx), factors)
            })
            .collect();
        let rest = initial.complement();
        if !rest.is_zero(tol) {
            let mut factors = vec![rest];
            factors.extend((0..later.len()).map(|_| Operator::identity(dim)));
            histories.push(History {
                label: "throwaway".into(),
                factors,
                throwaway: true,
            });
        }
        Ok(Self {
            grid,
            dim,
            histories,
            kind: FamilyKind::FixedInitial { initial },
        })
    }

    /// Family built from {[ψ(t_m)], I − [ψ(t_m)]} at each time, with ψ
    /// evolved by `dynamics`. The all-[ψ] history comes first. Histories that
    /// start in I − [ψ0] are flagged throwaway: the system starts in ψ0, so
    /// they carry no probability.
    pub fn unitary(psi0: &Ket, dynamics: &Dynamics, tol: f64) -> Result<Self> {
        psi0.check_normalized(tol)?;
        check_dims(dynamics.dim(), psi0.dim())?;
        let grid = dynamics.grid().clone();
        let mut pds = Vec::with_capacity(grid.len());
        for m in 0..grid.len() {
            let psi_m = dynamics.propagator(m, 0).apply(psi0);
            let p = Operator::dyad(&psi_m.normalize()?, f64::INFINITY)?;
            let rest = p.complement();
            let pd = if rest.is_zero(tol) {
                ProjectiveDecomposition::with_labels(vec![p], vec!["psi".into()], tol.max(1e-9))?
            } else {
                ProjectiveDecomposition::with_labels(vec![p, rest], vec!["psi".into(), "~psi".into()], tol.max(1e-9))?
            };
            pds.push(pd);
        }
        let start = pds[0].projectors()[0].clone();
        let mut fam = Self::product(grid, &pds)?;
        for h in &mut fam.histories {
            h.throwaway = !h.factors[0].approx_eq(&start, 0.0);
        }
        fam.kind = FamilyKind::Unitary { history: 0 };
        Ok(fam)
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn histories(&self) -> &[History] {
        &self.histories
    }

    pub fn len(&self) -> usize {
        self.histories.len()
    }

    pub fn is_empty(&self) -> bool {
        self.histories.is_empty()
    }

    pub fn kind(&self) -> &FamilyKind {
        &self.kind
    }

    pub fn labels(&self) -> Vec<&str> {
        self.histories.iter().map(|h| h.label.as_str()).collect()
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.histories.iter().position(|h| h.label == label)
    }

    /// The initial projector of a fixed-initial family.
    pub fn initial(&self) -> Option<&Operator> {
        match &self.kind {
            FamilyKind::FixedInitial { initial } => Some(initial),
            _ => None,
        }
    }

    /// Index of the history following the evolved ket, for unitary families.
    pub fn unitary_history(&self) -> Option<usize> {
        match self.kind {
            FamilyKind::Unitary { history } => Some(history),
            _ => None,
        }
    }

    /// Dimension of the history space, d^(f+1).
    pub fn history_space_dim(&self) -> Option<usize> {
        self.dim.checked_pow(self.grid.len() as u32)
    }

    /// Re-checks Σ_α Y^α = Ĭ and pairwise orthogonality.
    pub fn verify(&self, tol: f64) -> Result<()> {
        Self::validated(self.grid.clone(), self.histories.clone(), self.kind.clone(), tol).map(|_| ())
    }

    /// The same histories read with time running backwards: factor order
    /// reversed and the grid mirrored.
    pub fn reversed(&self) -> HistoryFamily {
        let histories = self
            .histories
            .iter()
            .map(|h| History {
                label: h.label.clone(),
                factors: h.factors.iter().rev().cloned().collect(),
                throwaway: h.throwaway,
            })
            .collect();
        HistoryFamily {
            grid: self.grid.reversed(),
            dim: self.dim,
            histories,
            kind: FamilyKind::Raw,
        }
    }
}

fn cartesian(pds: &[ProjectiveDecomposition]) -> Vec<Vec<usize>> {
    pds.iter().fold(vec![Vec::new()], |acc, pd| {
        acc.into_iter()
            .flat_map(|prefix| {
                (0..pd.len()).map(move |i| {
                    let mut next = prefix.clone();
                    next.push(i);
                    next
                })
            })
            .collect()
    })
}

fn join_labels(pds: &[ProjectiveDecomposition], idx: &[usize]) -> String {
    idx.iter()
        .zip(pds)
        .map(|(&i, pd)| pd.labels()[i].as_str())
        .collect::<Vec<_>>()
        .join(",")
}

/// All nonzero products Y^α Y^β of two commuting families, labelled `"a&b"`.
pub fn refine_families(f1: &HistoryFamily, f2: &HistoryFamily, tol: f64) -> Result<HistoryFamily> {
    f1.grid.check_same(&f2.grid)?;
    check_dims(f1.dim, f2.dim)?;
    let mut histories = Vec::new();
    for a in &f1.histories {
        for b in &f2.histories {
            if !a.commutes_with(b, tol) {
                return Err(Error::IncompatibleFrameworks(format!(
                    "histories {:?} and {:?} do not commute",
                    a.label, b.label
                )));
            }
            if a.overlap_norm(b) <= tol {
                continue;
            }
            let factors = a
                .factors
                .iter()
                .zip(&b.factors)
                .map(|(p, q)| (&(p * q) + &(q * p)).scale(0.5.into()))
                .collect();
            histories.push(History {
                label: format!("{}&{}", a.label, b.label),
                factors,
                throwaway: a.throwaway || b.throwaway,
            });
        }
    }
    HistoryFamily::raw(f1.grid.clone(), histories, tol.max(1e-9))
}

/// Whether two families can be combined: every pair of history projectors
/// commutes and, when dynamics are supplied, the common refinement is
/// itself consistent.
pub fn family_compatible(
    f1: &HistoryFamily,
    f2: &HistoryFamily,
    dynamics: Option<&Dynamics>,
    tols: &crate::Tolerances,
) -> Result<bool> {
    f1.grid.check_same(&f2.grid)?;
    check_dims(f1.dim, f2.dim)?;
    let commuting = f1
        .histories
        .iter()
        .all(|a| f2.histories.iter().all(|b| a.commutes_with(b, tols.alg)));
    if !commuting {
        return Ok(false);
    }
    match dynamics {
        None => Ok(true),
        Some(dyn_) => {
            let refined = refine_families(f1, f2, tols.alg)?;
            let report = crate::dynamics::decoherence_functional(&refined, dyn_, tols)?;
            Ok(report.is_consistent())
        }
    }
}
