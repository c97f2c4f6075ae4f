//! Projective decompositions of the identity, their event algebras, and the
//! compatibility / refinement relations between them.
//!
//! A [`ProjectiveDecomposition`] is the quantum sample space at one time.
//! Its event algebra consists of all sums of subsets of its elements. The
//! word "framework" is used for either; [`ProjectiveDecomposition::events`]
//! exposes the algebra explicitly when needed.
//!
//! Combining two decompositions into one description is only possible when
//! they are compatible. [`common_refinement`] refuses incompatible pairs.

use crate::error::{Error, Result};
use crate::operator::{check_dims, commutes, Ket, Operator};
use crate::states::{spin_projectors, Axis};

#[derive(Debug, Clone, PartialEq)]
pub struct ProjectiveDecomposition {
    projectors: Vec<Operator>,
    labels: Vec<String>,
    dim: usize,
}

impl ProjectiveDecomposition {
    /// Validates and builds a decomposition with labels `"0"`, `"1"`, ….
    pub fn new(projectors: Vec<Operator>, tol: f64) -> Result<Self> {
        let labels = (0..projectors.len()).map(|i| i.to_string()).collect();
        Self::with_labels(projectors, labels, tol)
    }

    pub fn with_labels(projectors: Vec<Operator>, labels: Vec<String>, tol: f64) -> Result<Self> {
        let first = projectors.first().ok_or(Error::EmptyDecomposition)?;
        let dim = first.dim();
        if labels.len() != projectors.len() {
            return Err(Error::Dim(format!(
                "{} labels for {} projectors",
                labels.len(),
                projectors.len()
            )));
        }
        for p in &projectors {
            check_dims(dim, p.dim())?;
        }
        let mut tagged = Vec::with_capacity(projectors.len());
        for (index, p) in projectors.into_iter().enumerate() {
            let residual = p.projector_residual();
            if residual > tol {
                return Err(Error::NotProjector { index, residual });
            }
            if p.is_zero(tol) {
                return Err(Error::ZeroProjector { index });
            }
            tagged.push(p.into_projector(f64::INFINITY)?);
        }
        for j in 0..tagged.len() {
            for k in (j + 1)..tagged.len() {
                let residual = (&tagged[j] * &tagged[k]).frobenius_norm();
                if residual > tol {
                    return Err(Error::Orthogonality {
                        first: j,
                        second: k,
                        residual,
                    });
                }
            }
        }
        let mut sum = Operator::zero(dim);
        for p in &tagged {
            sum = &sum + p;
        }
        let residual = (&sum - &Operator::identity(dim)).frobenius_norm();
        if residual > tol {
            return Err(Error::Completeness { residual });
        }
        Ok(Self {
            projectors: tagged,
            labels,
            dim,
        })
    }

    /// The one-element decomposition {I}.
    pub fn trivial(dim: usize) -> Self {
        Self {
            projectors: vec![Operator::identity(dim)],
            labels: vec!["I".into()],
            dim,
        }
    }

    /// Rank-one decomposition from an orthonormal basis.
    pub fn from_basis(kets: &[Ket], labels: Vec<String>, tol: f64) -> Result<Self> {
        let projectors = kets
            .iter()
            .map(|k| Operator::dyad(k, tol))
            .collect::<Result<Vec<_>>>()?;
        Self::with_labels(projectors, labels, tol)
    }

    /// The standard basis {[0], [1], …}.
    pub fn standard_basis(dim: usize) -> Self {
        let projectors = (0..dim)
            .map(|i| Operator::dyad(&Ket::basis(dim, i), 1e-12).expect("basis kets are normalized"))
            .collect();
        Self {
            projectors,
            labels: (0..dim).map(|i| i.to_string()).collect(),
            dim,
        }
    }

    /// {[axis+], [axis−]} with labels like `"z+"`, `"z-"`.
    pub fn spin(axis: Axis) -> Self {
        let (p, m) = spin_projectors(axis);
        Self {
            projectors: vec![p, m],
            labels: vec![format!("{axis}+"), format!("{axis}-")],
            dim: 2,
        }
    }

    pub fn len(&self) -> usize {
        self.projectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.projectors.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn projectors(&self) -> &[Operator] {
        &self.projectors
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn get(&self, index: usize) -> Option<&Operator> {
        self.projectors.get(index)
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }

    pub fn relabel(mut self, labels: Vec<String>) -> Result<Self> {
        if labels.len() != self.projectors.len() {
            return Err(Error::Dim(format!(
                "{} labels for {} projectors",
                labels.len(),
                self.projectors.len()
            )));
        }
        self.labels = labels;
        Ok(self)
    }

    /// Product decomposition {P^j ⊗ Q^k} on the tensor-product space,
    /// ordered with `self`'s index varying slowest. Labels are `"j*k"`.
    pub fn kron(&self, other: &ProjectiveDecomposition) -> ProjectiveDecomposition {
        let mut projectors = Vec::with_capacity(self.len() * other.len());
        let mut labels = Vec::with_capacity(self.len() * other.len());
        for (p, lp) in self.projectors.iter().zip(&self.labels) {
            for (q, lq) in other.projectors.iter().zip(&other.labels) {
                projectors.push(p.kron(q));
                labels.push(format!("{lp}*{lq}"));
            }
        }
        ProjectiveDecomposition {
            projectors,
            labels,
            dim: self.dim * other.dim,
        }
    }

    /// The event (sum of elements) for a subset of element indices.
    pub fn event(&self, subset: &[usize]) -> Result<Event> {
        let mut subset = subset.to_vec();
        subset.sort_unstable();
        subset.dedup();
        if let Some(&bad) = subset.iter().find(|&&i| i >= self.len()) {
            return Err(Error::Dim(format!(
                "event index {bad} out of range for {} elements",
                self.len()
            )));
        }
        let mut projector = Operator::zero(self.dim);
        for &i in &subset {
            projector = &projector + &self.projectors[i];
        }
        let projector = projector.into_projector(f64::INFINITY)?;
        Ok(Event { subset, projector })
    }

    /// All 2^n events of the Boolean algebra, enumerated by bitmask.
    pub fn events(&self) -> Vec<Event> {
        let n = self.len();
        assert!(n < usize::BITS as usize, "too many elements to enumerate");
        (0..(1usize << n))
            .map(|mask| {
                let subset: Vec<usize> = (0..n).filter(|i| mask & (1 << i) != 0).collect();
                self.event(&subset).expect("indices in range")
            })
            .collect()
    }
}

/// An element of a decomposition's Boolean event algebra.
#[derive(Debug, Clone, PartialEq)]
pub struct Event {
    subset: Vec<usize>,
    projector: Operator,
}

impl Event {
    pub fn subset(&self) -> &[usize] {
        &self.subset
    }

    pub fn projector(&self) -> &Operator {
        &self.projector
    }
}

/// True iff every element of `f` commutes with every element of `g`.
pub fn compatible(f: &ProjectiveDecomposition, g: &ProjectiveDecomposition, tol: f64) -> Result<bool> {
    check_dims(f.dim, g.dim)?;
    for p in &f.projectors {
        for q in &g.projectors {
            if !commutes(p, q, tol)? {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// The decomposition of all nonzero products P^j Q^k, labelled `"j&k"`.
///
/// Fails with [`Error::IncompatibleFrameworks`] unless the inputs are
/// compatible: incompatible frameworks cannot be combined.
pub fn common_refinement(
    f: &ProjectiveDecomposition,
    g: &ProjectiveDecomposition,
    tol: f64,
) -> Result<ProjectiveDecomposition> {
    check_dims(f.dim, g.dim)?;
    for (j, p) in f.projectors.iter().enumerate() {
        for (k, q) in g.projectors.iter().enumerate() {
            let residual = p.commutator(q).frobenius_norm();
            if residual > tol {
                return Err(Error::IncompatibleFrameworks(format!(
                    "element {:?} does not commute with element {:?} (residual {residual:.3e})",
                    f.labels[j], g.labels[k]
                )));
            }
        }
    }
    let mut projectors = Vec::new();
    let mut labels = Vec::new();
    for (p, lp) in f.projectors.iter().zip(&f.labels) {
        for (q, lq) in g.projectors.iter().zip(&g.labels) {
            // symmetrized product: equal to PQ when they commute, exactly Hermitian
            let prod = (&(p * q) + &(q * p)).scale(0.5.into());
            if prod.frobenius_norm() <= tol {
                continue;
            }
            projectors.push(prod);
            labels.push(format!("{lp}&{lq}"));
        }
    }
    ProjectiveDecomposition::with_labels(projectors, labels, tol.max(1e-9))
}

/// True iff every element of `coarse` is a sum of elements of `fine`.
pub fn refines(fine: &ProjectiveDecomposition, coarse: &ProjectiveDecomposition, tol: f64) -> Result<bool> {
    check_dims(fine.dim, coarse.dim)?;
    for q in &coarse.projectors {
        let mut sum = Operator::zero(fine.dim);
        for p in &fine.projectors {
            // P ≤ Q iff QP = P
            if (&(q * p) - p).frobenius_norm() <= tol {
                sum = &sum + p;
            }
        }
        if (&sum - q).frobenius_norm() > tol {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Σ_{j ∈ event} p_j for a probability distribution on the elements.
pub fn event_probability(pd: &ProjectiveDecomposition, weights: &[f64], event: &Event, tol_prob: f64) -> Result<f64> {
    if weights.len() != pd.len() {
        return Err(Error::Weight(format!(
            "{} weights for {} elements",
            weights.len(),
            pd.len()
        )));
    }
    if let Some(w) = weights.iter().find(|w| !w.is_finite() || **w < -tol_prob) {
        return Err(Error::Weight(format!("negative or non-finite weight {w}")));
    }
    let total: f64 = weights.iter().sum();
    if (total - 1.0).abs() > tol_prob {
        return Err(Error::Weight(format!("weights sum to {total}, not 1")));
    }
    if let Some(&bad) = event.subset.iter().find(|&&i| i >= pd.len()) {
        return Err(Error::Dim(format!("event index {bad} out of range")));
    }
    Ok(event.subset.iter().map(|&i| weights[i]).sum())
}
