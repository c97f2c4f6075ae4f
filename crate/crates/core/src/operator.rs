//! Dense complex operator algebra on finite-dimensional Hilbert spaces.
//!
//! Kets and operators are thin wrappers over `nalgebra` dense storage. An
//! [`Operator`] may carry a [`Flavor`] tag (projector, unitary, ...) that is
//! checked once at construction and trusted afterwards.
//!
//! Composite spaces use row-major index arithmetic over the declared factor
//! order: for factors `[d0, d1, d2]` the basis index of `|i0, i1, i2⟩` is
//! `(i0 * d1 + i1) * d2 + i2`, which is what the Kronecker product produces.

use std::ops::{Add, Mul, Sub};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

pub(crate) const ZERO: C64 = C64::new(0.0, 0.0);
pub(crate) const ONE: C64 = C64::new(1.0, 0.0);

/// Ordered tensor-product factor dimensions.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct CompositeSpace {
    factors: Vec<usize>,
}

impl CompositeSpace {
    pub fn new(factors: Vec<usize>) -> Result<Self> {
        if factors.is_empty() || factors.contains(&0) {
            return Err(Error::Dim(format!(
                "composite space needs at least one factor, all of dimension >= 1; got {factors:?}"
            )));
        }
        Ok(Self { factors })
    }

    pub fn single(dim: usize) -> Result<Self> {
        Self::new(vec![dim])
    }

    pub fn factors(&self) -> &[usize] {
        &self.factors
    }

    pub fn total_dim(&self) -> usize {
        self.factors.iter().product()
    }

    /// Splits a flat basis index into per-factor indices.
    pub fn split_index(&self, mut index: usize) -> Vec<usize> {
        let mut out = vec![0; self.factors.len()];
        for (slot, &d) in out.iter_mut().zip(&self.factors).rev() {
            *slot = index % d;
            index /= d;
        }
        out
    }

    pub fn join_index(&self, parts: &[usize]) -> usize {
        parts.iter().zip(&self.factors).fold(0, |acc, (&i, &d)| acc * d + i)
    }
}

/// A vector in a finite-dimensional Hilbert space.
#[derive(Debug, Clone, PartialEq)]
pub struct Ket {
    amps: CVector,
}

impl Ket {
    pub fn new(amplitudes: Vec<C64>) -> Result<Self> {
        if amplitudes.is_empty() {
            return Err(Error::Dim("ket must have at least one amplitude".into()));
        }
        Ok(Self {
            amps: CVector::from_vec(amplitudes),
        })
    }

    /// Builds a ket and checks that its norm is 1 within `tol`.
    pub fn normalized(amplitudes: Vec<C64>, tol: f64) -> Result<Self> {
        let ket = Self::new(amplitudes)?;
        ket.check_normalized(tol)?;
        Ok(ket)
    }

    pub fn from_vector(amps: CVector) -> Self {
        assert!(!amps.is_empty(), "ket must have at least one amplitude");
        Self { amps }
    }

    pub fn from_real(amplitudes: &[f64]) -> Result<Self> {
        Self::new(amplitudes.iter().map(|&x| C64::new(x, 0.0)).collect())
    }

    pub fn basis(dim: usize, index: usize) -> Self {
        assert!(index < dim, "basis index {index} out of range for dim {dim}");
        let mut amps = CVector::zeros(dim);
        amps[index] = ONE;
        Self { amps }
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitudes(&self) -> &CVector {
        &self.amps
    }

    pub fn norm(&self) -> f64 {
        self.amps.norm()
    }

    pub fn is_normalized(&self, tol: f64) -> bool {
        (self.norm() - 1.0).abs() <= tol
    }

    pub fn check_normalized(&self, tol: f64) -> Result<()> {
        if self.is_normalized(tol) {
            Ok(())
        } else {
            Err(Error::Normalization { norm: self.norm() })
        }
    }

    /// Rescales to unit norm. Fails on the zero vector.
    pub fn normalize(self) -> Result<Self> {
        let n = self.norm();
        if n == 0.0 || !n.is_finite() {
            return Err(Error::Normalization { norm: n });
        }
        Ok(Self {
            amps: self.amps.unscale(n),
        })
    }

    /// ⟨self|other⟩
    pub fn inner(&self, other: &Ket) -> C64 {
        self.amps.dotc(&other.amps)
    }

    pub fn scale(&self, c: C64) -> Ket {
        Ket { amps: &self.amps * c }
    }

    pub fn kron(&self, other: &Ket) -> Ket {
        Ket {
            amps: self.amps.kronecker(&other.amps),
        }
    }

    pub fn add(&self, other: &Ket) -> Result<Ket> {
        check_dims(self.dim(), other.dim())?;
        Ok(Ket {
            amps: &self.amps + &other.amps,
        })
    }
}

/// Tensor product of a list of kets in order.
pub fn kron_kets(kets: &[&Ket]) -> Option<Ket> {
    let (first, rest) = kets.split_first()?;
    Some(rest.iter().fold((*first).clone(), |acc, k| acc.kron(k)))
}

/// Semantic tag validated at construction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Flavor {
    Hermitian,
    Projector,
    Unitary,
    Positive,
}

/// A linear operator on a `d`-dimensional space, stored densely.
#[derive(Debug, Clone, PartialEq)]
pub struct Operator {
    m: CMatrix,
    flavor: Option<Flavor>,
}

impl Operator {
    pub fn new(m: CMatrix) -> Result<Self> {
        if m.nrows() != m.ncols() || m.nrows() == 0 {
            return Err(Error::Dim(format!(
                "operator must be a non-empty square matrix, got {}x{}",
                m.nrows(),
                m.ncols()
            )));
        }
        Ok(Self { m, flavor: None })
    }

    pub fn from_rows(rows: &[Vec<C64>]) -> Result<Self> {
        let d = rows.len();
        if rows.iter().any(|r| r.len() != d) {
            return Err(Error::Dim(format!("matrix rows must all have length {d}")));
        }
        Self::new(CMatrix::from_fn(d, d, |i, j| rows[i][j]))
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            m: CMatrix::identity(dim, dim),
            flavor: Some(Flavor::Projector),
        }
    }

    pub fn zero(dim: usize) -> Self {
        Self {
            m: CMatrix::zeros(dim, dim),
            flavor: Some(Flavor::Projector),
        }
    }

    /// Diagonal 0/1 projector from a mask.
    pub fn diagonal_projector(mask: &[bool]) -> Self {
        let d = mask.len();
        Self {
            m: CMatrix::from_fn(d, d, |i, j| if i == j && mask[i] { ONE } else { ZERO }),
            flavor: Some(Flavor::Projector),
        }
    }

    pub fn projector(m: CMatrix, tol: f64) -> Result<Self> {
        let op = Self::new(m)?;
        let residual = op.projector_residual();
        if residual > tol {
            return Err(Error::NotProjector { index: 0, residual });
        }
        Ok(op.tagged(Flavor::Projector))
    }

    pub fn unitary(m: CMatrix, tol: f64) -> Result<Self> {
        let op = Self::new(m)?;
        let residual = op.unitary_residual();
        if residual > tol {
            return Err(Error::NotUnitary { residual });
        }
        Ok(op.tagged(Flavor::Unitary))
    }

    pub fn hermitian(m: CMatrix, tol: f64) -> Result<Self> {
        let op = Self::new(m)?;
        let residual = op.hermitian_residual();
        if residual > tol {
            return Err(Error::NotHermitian { residual });
        }
        Ok(op.tagged(Flavor::Hermitian))
    }

    pub fn positive(m: CMatrix, tol: f64) -> Result<Self> {
        let op = Self::hermitian(m, tol)?;
        let min_eigenvalue = op.min_eigenvalue();
        if min_eigenvalue < -tol {
            return Err(Error::NotPositive { min_eigenvalue });
        }
        Ok(op.tagged(Flavor::Positive))
    }

    /// Rank-one projector |k⟩⟨k| onto a normalized ket.
    pub fn dyad(k: &Ket, tol: f64) -> Result<Self> {
        k.check_normalized(tol)?;
        Ok(Self {
            m: k.amps.kronecker(&k.amps.adjoint()),
            flavor: Some(Flavor::Projector),
        })
    }

    /// |a⟩⟨b|
    pub fn outer(a: &Ket, b: &Ket) -> Self {
        Self {
            m: a.amps.kronecker(&b.amps.adjoint()),
            flavor: None,
        }
    }

    /// Re-validates and retags; use when arithmetic has dropped the flavor.
    pub fn into_projector(self, tol: f64) -> Result<Self> {
        Self::projector(self.m, tol)
    }

    fn tagged(mut self, flavor: Flavor) -> Self {
        self.flavor = Some(flavor);
        self
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.m
    }

    pub fn into_matrix(self) -> CMatrix {
        self.m
    }

    pub fn flavor(&self) -> Option<Flavor> {
        self.flavor
    }

    pub fn is_flavor(&self, flavor: Flavor) -> bool {
        self.flavor == Some(flavor)
    }

    pub fn adjoint(&self) -> Operator {
        Operator {
            m: self.m.adjoint(),
            flavor: self.flavor,
        }
    }

    pub fn trace(&self) -> C64 {
        self.m.trace()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.m.norm()
    }

    pub fn scale(&self, c: C64) -> Operator {
        Operator {
            m: &self.m * c,
            flavor: None,
        }
    }

    pub fn apply(&self, k: &Ket) -> Ket {
        assert_eq!(self.dim(), k.dim(), "operator/ket dimension mismatch");
        Ket {
            amps: &self.m * &k.amps,
        }
    }

    /// ⟨k|A|k⟩
    pub fn expectation(&self, k: &Ket) -> C64 {
        k.inner(&self.apply(k))
    }

    /// Identity minus self; the complement of a projector is a projector.
    pub fn complement(&self) -> Operator {
        let flavor = match self.flavor {
            Some(Flavor::Projector) => Some(Flavor::Projector),
            Some(Flavor::Hermitian) | Some(Flavor::Positive) => Some(Flavor::Hermitian),
            _ => None,
        };
        Operator {
            m: CMatrix::identity(self.dim(), self.dim()) - &self.m,
            flavor,
        }
    }

    pub fn projector_residual(&self) -> f64 {
        let sq = &self.m * &self.m;
        (&sq - &self.m).norm().max(self.hermitian_residual())
    }

    pub fn unitary_residual(&self) -> f64 {
        let d = self.dim();
        (self.m.adjoint() * &self.m - CMatrix::identity(d, d)).norm()
    }

    pub fn hermitian_residual(&self) -> f64 {
        (&self.m - self.m.adjoint()).norm()
    }

    pub fn is_projector(&self, tol: f64) -> bool {
        self.projector_residual() <= tol
    }

    pub fn is_unitary(&self, tol: f64) -> bool {
        self.unitary_residual() <= tol
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermitian_residual() <= tol
    }

    /// Smallest eigenvalue of the Hermitian part (A + A†)/2.
    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues_hermitian().into_iter().fold(f64::INFINITY, f64::min)
    }

    /// Eigenvalues of the Hermitian part, ascending.
    pub fn eigenvalues_hermitian(&self) -> Vec<f64> {
        let h = (&self.m + self.m.adjoint()).scale(0.5);
        let mut ev: Vec<f64> = h.symmetric_eigenvalues().iter().copied().collect();
        ev.sort_by(f64::total_cmp);
        ev
    }

    pub fn commutator(&self, other: &Operator) -> Operator {
        Operator {
            m: &self.m * &other.m - &other.m * &self.m,
            flavor: None,
        }
    }

    pub fn kron(&self, other: &Operator) -> Operator {
        let flavor = match (self.flavor, other.flavor) {
            (Some(a), Some(b)) if a == b && a != Flavor::Hermitian => Some(a),
            _ => None,
        };
        Operator {
            m: self.m.kronecker(&other.m),
            flavor,
        }
    }

    pub fn approx_eq(&self, other: &Operator, tol: f64) -> bool {
        self.dim() == other.dim() && (&self.m - &other.m).norm() <= tol
    }

    pub fn is_zero(&self, tol: f64) -> bool {
        self.m.norm() <= tol
    }
}

impl Mul for &Operator {
    type Output = Operator;

    fn mul(self, rhs: &Operator) -> Operator {
        assert_eq!(self.dim(), rhs.dim(), "operator dimension mismatch");
        let flavor = match (self.flavor, rhs.flavor) {
            (Some(Flavor::Unitary), Some(Flavor::Unitary)) => Some(Flavor::Unitary),
            _ => None,
        };
        Operator {
            m: &self.m * &rhs.m,
            flavor,
        }
    }
}

impl Add for &Operator {
    type Output = Operator;

    fn add(self, rhs: &Operator) -> Operator {
        assert_eq!(self.dim(), rhs.dim(), "operator dimension mismatch");
        Operator {
            m: &self.m + &rhs.m,
            flavor: None,
        }
    }
}

impl Sub for &Operator {
    type Output = Operator;

    fn sub(self, rhs: &Operator) -> Operator {
        assert_eq!(self.dim(), rhs.dim(), "operator dimension mismatch");
        Operator {
            m: &self.m - &rhs.m,
            flavor: None,
        }
    }
}

pub(crate) fn check_dims(a: usize, b: usize) -> Result<()> {
    if a != b {
        return Err(Error::Dim(format!("expected dimension {a}, found {b}")));
    }
    Ok(())
}

/// True iff ‖AB − BA‖ ≤ tol.
pub fn commutes(a: &Operator, b: &Operator, tol: f64) -> Result<bool> {
    check_dims(a.dim(), b.dim())?;
    Ok(a.commutator(b).frobenius_norm() <= tol)
}

/// Kronecker product of a list of operators in order.
pub fn kron_all(ops: &[&Operator]) -> Option<Operator> {
    let (first, rest) = ops.split_first()?;
    Some(rest.iter().fold((*first).clone(), |acc, op| acc.kron(op)))
}

/// Embeds an operator acting on factor `index` of `space` as I ⊗ … ⊗ A ⊗ … ⊗ I.
pub fn embed(op: &Operator, space: &CompositeSpace, index: usize) -> Result<Operator> {
    let factors = space.factors();
    if index >= factors.len() {
        return Err(Error::Dim(format!(
            "factor index {index} out of range for {} factors",
            factors.len()
        )));
    }
    check_dims(factors[index], op.dim())?;
    let parts: Vec<Operator> = factors
        .iter()
        .enumerate()
        .map(|(i, &d)| if i == index { op.clone() } else { Operator::identity(d) })
        .collect();
    let refs: Vec<&Operator> = parts.iter().collect();
    Ok(kron_all(&refs).expect("space has at least one factor"))
}

/// Traces out every factor not listed in `keep`.
///
/// The kept factors appear in the result in their original order.
pub fn partial_trace(op: &Operator, space: &CompositeSpace, keep: &[usize]) -> Result<Operator> {
    check_dims(space.total_dim(), op.dim())?;
    let n = space.factors().len();
    let mut keep_sorted: Vec<usize> = keep.to_vec();
    keep_sorted.sort_unstable();
    keep_sorted.dedup();
    if let Some(&bad) = keep_sorted.iter().find(|&&k| k >= n) {
        return Err(Error::Dim(format!("factor index {bad} out of range for {n} factors")));
    }
    let traced: Vec<usize> = (0..n).filter(|i| !keep_sorted.contains(i)).collect();
    let f = space.factors();
    let kept_space: Vec<usize> = keep_sorted.iter().map(|&i| f[i]).collect();
    let traced_space: Vec<usize> = traced.iter().map(|&i| f[i]).collect();
    let kept_dim: usize = kept_space.iter().product();
    let traced_dim: usize = traced_space.iter().product();

    let kept_cs = CompositeSpace {
        factors: if kept_space.is_empty() { vec![1] } else { kept_space },
    };
    let traced_cs = CompositeSpace {
        factors: if traced_space.is_empty() { vec![1] } else { traced_space },
    };

    let full_index = |kept: usize, tr: usize| -> usize {
        let kp = kept_cs.split_index(kept);
        let tp = traced_cs.split_index(tr);
        let mut parts = vec![0; n];
        for (slot, &fi) in keep_sorted.iter().enumerate() {
            parts[fi] = kp[slot];
        }
        for (slot, &fi) in traced.iter().enumerate() {
            parts[fi] = tp[slot];
        }
        space.join_index(&parts)
    };

    let m = op.matrix();
    let mut out = CMatrix::zeros(kept_dim, kept_dim);
    for r in 0..kept_dim {
        for c in 0..kept_dim {
            let mut acc = ZERO;
            for t in 0..traced_dim {
                acc += m[(full_index(r, t), full_index(c, t))];
            }
            out[(r, c)] = acc;
        }
    }
    Operator::new(out)
}

/// Orthonormal basis of the orthogonal complement of span(`vectors`),
/// built by Gram-Schmidt over the standard basis in index order.
pub fn orthonormal_complement(vectors: &[CVector], dim: usize) -> Vec<CVector> {
    let mut basis: Vec<CVector> = Vec::with_capacity(dim);
    for v in vectors {
        let mut w = v.clone();
        for _ in 0..2 {
            for b in &basis {
                let c = b.dotc(&w);
                w -= b * c;
            }
        }
        let n = w.norm();
        if n > 1e-8 {
            basis.push(w.unscale(n));
        }
    }
    let start = basis.len();
    for i in 0..dim {
        if basis.len() == dim {
            break;
        }
        let mut w = CVector::zeros(dim);
        w[i] = ONE;
        for _ in 0..2 {
            for b in &basis {
                let c = b.dotc(&w);
                w -= b * c;
            }
        }
        let n = w.norm();
        if n > 1e-8 {
            basis.push(w.unscale(n));
        }
    }
    basis.split_off(start)
}

/// Extends the partial isometry |inputs[i]⟩ ↦ |outputs[i]⟩ to a unitary on
/// the whole space, mapping the complement of the inputs onto the
/// complement of the outputs in a deterministic order.
pub fn complete_unitary(inputs: &[Ket], outputs: &[Ket], tol: f64) -> Result<Operator> {
    if inputs.len() != outputs.len() {
        return Err(Error::Dim(format!(
            "{} inputs but {} outputs",
            inputs.len(),
            outputs.len()
        )));
    }
    let dim = match inputs.first() {
        Some(k) => k.dim(),
        None => return Err(Error::Dim("unitary map needs at least one input".into())),
    };
    if inputs.iter().chain(outputs).any(|k| k.dim() != dim) {
        return Err(Error::Dim("all kets in a unitary map must share one dimension".into()));
    }
    check_orthonormal(inputs, tol)?;
    check_orthonormal(outputs, tol)?;

    let in_vecs: Vec<CVector> = inputs.iter().map(|k| k.amps.clone()).collect();
    let out_vecs: Vec<CVector> = outputs.iter().map(|k| k.amps.clone()).collect();
    let in_c = orthonormal_complement(&in_vecs, dim);
    let out_c = orthonormal_complement(&out_vecs, dim);

    let mut m = CMatrix::zeros(dim, dim);
    for (v, u) in out_vecs.iter().chain(&out_c).zip(in_vecs.iter().chain(&in_c)) {
        m += v * u.adjoint();
    }
    Operator::unitary(m, tol)
}

fn check_orthonormal(kets: &[Ket], tol: f64) -> Result<()> {
    for (i, a) in kets.iter().enumerate() {
        a.check_normalized(tol)?;
        for (j, b) in kets.iter().enumerate().skip(i + 1) {
            let overlap = a.inner(b).norm();
            if overlap > tol {
                return Err(Error::Orthogonality {
                    first: i,
                    second: j,
                    residual: overlap,
                });
            }
        }
    }
    Ok(())
}

/// exp(−i·dt·H) for Hermitian H, via eigendecomposition (ħ = 1).
pub fn unitary_from_hamiltonian(h: &Operator, dt: f64, tol: f64) -> Result<Operator> {
    let residual = h.hermitian_residual();
    if residual > tol {
        return Err(Error::NotHermitian { residual });
    }
    let herm = (h.matrix() + h.matrix().adjoint()).scale(0.5);
    let eig = herm.symmetric_eigen();
    let phases = CVector::from_iterator(
        eig.eigenvalues.len(),
        eig.eigenvalues.iter().map(|&l| C64::from_polar(1.0, -l * dt)),
    );
    let v = &eig.eigenvectors;
    let m = v * CMatrix::from_diagonal(&phases) * v.adjoint();
    Operator::unitary(m, tol.max(1e-9))
}
