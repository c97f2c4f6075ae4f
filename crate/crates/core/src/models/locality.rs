//! Einstein locality: with dynamics T = T_A ⊗ T_BC, nothing done to the
//! distant system C changes the weights or consistency of histories of A.

use nalgebra::DMatrix;

use crate::dynamics::{decoherence_functional, ConsistencyReport, Dynamics, Verdict};
use crate::error::{Error, Result};
use crate::framework::ProjectiveDecomposition;
use crate::histories::HistoryFamily;
use crate::operator::{check_dims, CMatrix, CompositeSpace, Ket, Operator};
use crate::tolerance::Tolerances;

/// Deviations above this fail the locality check.
pub const LOCALITY_TOL: f64 = 1e-10;

/// Best product approximation of an operator on H_1 ⊗ H_2.
#[derive(Debug, Clone)]
pub struct ProductSplit {
    pub first: CMatrix,
    pub second: CMatrix,
    /// ‖T − first ⊗ second‖_F
    pub residual: f64,
}

/// Splits T on H_1 ⊗ H_2 via the singular value decomposition of its
/// realignment R[(i1 j1), (i2 j2)] = T[(i1 i2), (j1 j2)]; T is a product
/// iff R has rank one.
pub fn product_split(t: &Operator, d1: usize, d2: usize) -> Result<ProductSplit> {
    check_dims(d1 * d2, t.dim())?;
    let m = t.matrix();
    let r = CMatrix::from_fn(d1 * d1, d2 * d2, |row, col| {
        let (i1, j1) = (row / d1, row % d1);
        let (i2, j2) = (col / d2, col % d2);
        m[(i1 * d2 + i2, j1 * d2 + j2)]
    });
    let svd = r.svd(true, true);
    let (u, vt) = (svd.u.expect("requested"), svd.v_t.expect("requested"));
    let (k, &s0) = svd
        .singular_values
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .expect("nonempty");
    let residual = svd
        .singular_values
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != k)
        .map(|(_, s)| s * s)
        .sum::<f64>()
        .sqrt();
    let first = CMatrix::from_fn(d1, d1, |i, j| u[(i * d1 + j, k)] * s0);
    let second = CMatrix::from_fn(d2, d2, |i, j| vt[(k, i * d2 + j)]);
    Ok(ProductSplit {
        first,
        second,
        residual,
    })
}

#[derive(Debug, Clone)]
pub struct LocalityExperiment {
    space: CompositeSpace,
    phi_ab: Ket,
    dynamics: Dynamics,
    a_pds: Vec<ProjectiveDecomposition>,
}

impl LocalityExperiment {
    /// `dims` = [d_A, d_B, d_C]; `a_pds[m]` acts on A at grid time m + 1.
    /// Every step must factor as T_A ⊗ T_BC.
    pub fn new(
        dims: [usize; 3],
        phi_ab: Ket,
        dynamics: Dynamics,
        a_pds: Vec<ProjectiveDecomposition>,
        tol: f64,
    ) -> Result<Self> {
        let exp = Self::without_factorization_check(dims, phi_ab, dynamics, a_pds, tol)?;
        for step in exp.dynamics.steps() {
            let split = product_split(step, dims[0], dims[1] * dims[2])?;
            if split.residual > tol {
                return Err(Error::Factorization {
                    residual: split.residual,
                });
            }
        }
        Ok(exp)
    }

    /// Same validation minus the factorization requirement, so coupled
    /// dynamics can be examined.
    pub fn without_factorization_check(
        dims: [usize; 3],
        phi_ab: Ket,
        dynamics: Dynamics,
        a_pds: Vec<ProjectiveDecomposition>,
        tol: f64,
    ) -> Result<Self> {
        let space = CompositeSpace::new(dims.to_vec())?;
        check_dims(dims[0] * dims[1], phi_ab.dim())?;
        phi_ab.check_normalized(tol)?;
        check_dims(space.total_dim(), dynamics.dim())?;
        if a_pds.len() + 1 != dynamics.grid().len() {
            return Err(Error::GridMismatch(format!(
                "{} decompositions of A for a grid of {} times",
                a_pds.len(),
                dynamics.grid().len()
            )));
        }
        for pd in &a_pds {
            check_dims(dims[0], pd.dim())?;
        }
        Ok(Self {
            space,
            phi_ab,
            dynamics,
            a_pds,
        })
    }

    pub fn space(&self) -> &CompositeSpace {
        &self.space
    }

    pub fn dynamics(&self) -> &Dynamics {
        &self.dynamics
    }

    /// Fixed-initial family for |Φ_AB⟩ ⊗ |φ_C⟩ with A-only events.
    pub fn family(&self, phi_c: &Ket, tol: f64) -> Result<HistoryFamily> {
        let dims = self.space.factors();
        check_dims(dims[2], phi_c.dim())?;
        phi_c.check_normalized(tol)?;
        let p0 = Operator::dyad(&self.phi_ab.kron(phi_c), tol)?;
        let rest = ProjectiveDecomposition::trivial(dims[1] * dims[2]);
        let lifted: Vec<_> = self.a_pds.iter().map(|pd| pd.kron(&rest)).collect();
        HistoryFamily::fixed_initial(self.dynamics.grid().clone(), &p0, &lifted, tol)
    }
}

#[derive(Debug, Clone)]
pub struct LocalityReport {
    pub reports: Vec<ConsistencyReport>,
    /// max over C states of max_α |W_k(α) − W_0(α)|, throwaway excluded.
    pub max_weight_deviation: f64,
    /// Same for |D(α, β)|, α ≠ β.
    pub max_offdiag_deviation: f64,
    pub verdicts_agree: bool,
    pub passed: bool,
}

/// Runs the A-family once per C state and compares the results.
pub fn einstein_locality_check(
    exp: &LocalityExperiment,
    c_states: &[Ket],
    tols: &Tolerances,
) -> Result<LocalityReport> {
    if c_states.is_empty() {
        return Err(Error::Dim("no states of C supplied".into()));
    }
    let reports = c_states
        .iter()
        .map(|c| {
            let family = exp.family(c, tols.norm.max(1e-9))?;
            decoherence_functional(&family, &exp.dynamics, tols)
        })
        .collect::<Result<Vec<_>>>()?;
    let base = &reports[0];
    let keep: Vec<usize> = (0..base.len()).filter(|&i| !base.throwaway[i]).collect();
    let offdiag = |r: &ConsistencyReport| -> DMatrix<f64> {
        DMatrix::from_fn(keep.len(), keep.len(), |a, b| {
            if a == b {
                0.0
            } else {
                r.d[(keep[a], keep[b])].norm()
            }
        })
    };
    let base_off = offdiag(base);
    let mut max_weight_deviation: f64 = 0.0;
    let mut max_offdiag_deviation: f64 = 0.0;
    let mut verdicts_agree = true;
    for r in &reports[1..] {
        for &i in &keep {
            max_weight_deviation = max_weight_deviation.max((r.weights[i] - base.weights[i]).abs());
        }
        max_offdiag_deviation = max_offdiag_deviation.max((offdiag(r) - &base_off).amax());
        verdicts_agree &= r.verdict == base.verdict;
    }
    let passed = verdicts_agree && max_weight_deviation <= LOCALITY_TOL && max_offdiag_deviation <= LOCALITY_TOL;
    Ok(LocalityReport {
        reports,
        max_weight_deviation,
        max_offdiag_deviation,
        verdicts_agree,
        passed,
    })
}

impl LocalityReport {
    pub fn verdict(&self) -> Verdict {
        self.reports[0].verdict
    }
}
