//! POVMs induced on a system by a projective decomposition of
//! system ⊗ ancilla with the ancilla in a fixed state.

use crate::error::{Error, Result};
use crate::framework::ProjectiveDecomposition;
use crate::operator::{check_dims, partial_trace, CompositeSpace, Ket, Operator};

/// Positive operators summing to the identity.
#[derive(Debug, Clone)]
pub struct PovmElementSet {
    elements: Vec<Operator>,
    labels: Vec<String>,
}

impl PovmElementSet {
    pub fn new(elements: Vec<Operator>, labels: Vec<String>, tol: f64) -> Result<Self> {
        let first = elements.first().ok_or(Error::EmptyDecomposition)?;
        if labels.len() != elements.len() {
            return Err(Error::Dim(format!(
                "{} labels for {} elements",
                labels.len(),
                elements.len()
            )));
        }
        let dim = first.dim();
        let mut total = Operator::zero(dim);
        let mut checked = Vec::with_capacity(elements.len());
        for e in elements {
            check_dims(dim, e.dim())?;
            let e = Operator::positive(e.into_matrix(), tol)?;
            total = &total + &e;
            checked.push(e);
        }
        let residual = (total.matrix() - Operator::identity(dim).matrix()).norm();
        if residual > tol {
            return Err(Error::Completeness { residual });
        }
        Ok(Self {
            elements: checked,
            labels,
        })
    }

    pub fn elements(&self) -> &[Operator] {
        &self.elements
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.elements[0].dim()
    }

    /// Tr(R_j [ψ]) for each element.
    pub fn probabilities(&self, psi: &Ket) -> Result<Vec<f64>> {
        check_dims(self.dim(), psi.dim())?;
        Ok(self.elements.iter().map(|r| r.expectation(psi).re).collect())
    }
}

/// R_j = Tr_A(P^j (I_s ⊗ [A_0])) for a decomposition {P^j} of H_s ⊗ H_A.
pub fn povm_from_ancilla(
    pd: &ProjectiveDecomposition,
    system_dim: usize,
    a0: &Ket,
    tol: f64,
) -> Result<PovmElementSet> {
    a0.check_normalized(tol)?;
    let space = CompositeSpace::new(vec![system_dim, a0.dim()])?;
    check_dims(space.total_dim(), pd.dim())?;
    let lift = Operator::identity(system_dim).kron(&Operator::dyad(a0, tol)?);
    let elements = pd
        .projectors()
        .iter()
        .map(|p| partial_trace(&(p * &lift), &space, &[0]))
        .collect::<Result<Vec<_>>>()?;
    PovmElementSet::new(elements, pd.labels().to_vec(), tol)
}

/// Tr(P^j [ψ ⊗ A_0]) computed on the full space, without the reduced
/// elements.
pub fn ancilla_probabilities(pd: &ProjectiveDecomposition, psi: &Ket, a0: &Ket) -> Result<Vec<f64>> {
    let joint = psi.kron(a0);
    check_dims(pd.dim(), joint.dim())?;
    Ok(pd.projectors().iter().map(|p| p.expectation(&joint).re).collect())
}
