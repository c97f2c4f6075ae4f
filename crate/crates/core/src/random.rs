//! Seeded random generators for kets, unitaries and projective
//! decompositions. Used by property tests, sweeps and scenario files.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::framework::ProjectiveDecomposition;
use crate::operator::{CMatrix, CVector, Ket, Operator, C64};

fn gaussian_c64<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    C64::new(re, im)
}

/// Uniformly distributed normalized ket.
pub fn random_ket<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Ket {
    loop {
        let v = CVector::from_fn(dim, |_, _| gaussian_c64(rng));
        if let Ok(k) = Ket::from_vector(v).normalize() {
            return k;
        }
    }
}

/// Haar-random unitary (QR of a complex Ginibre matrix with the phase of
/// R's diagonal folded back into Q).
pub fn random_unitary<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Operator {
    let g = CMatrix::from_fn(dim, dim, |_, _| gaussian_c64(rng));
    let qr = g.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..dim {
        let d = r[(j, j)];
        let phase = if d.norm() > 0.0 {
            d / d.norm()
        } else {
            C64::new(1.0, 0.0)
        };
        for i in 0..dim {
            q[(i, j)] *= phase;
        }
    }
    Operator::unitary(q, 1e-9).expect("QR factor is unitary")
}

/// Random Hermitian matrix with Gaussian entries.
pub fn random_hermitian<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Operator {
    let g = CMatrix::from_fn(dim, dim, |_, _| gaussian_c64(rng));
    Operator::hermitian((&g + g.adjoint()).scale(0.5), 1e-12).expect("symmetrized")
}

/// Random projective decomposition: the columns of a Haar unitary split
/// into `parts` nonempty consecutive groups.
pub fn random_pd_with_parts<R: Rng + ?Sized>(dim: usize, parts: usize, rng: &mut R) -> ProjectiveDecomposition {
    assert!(parts >= 1 && parts <= dim, "need 1 <= parts <= dim");
    let u = random_unitary(dim, rng);
    // choose parts-1 distinct cut points in 1..dim
    let mut cuts: Vec<usize> = rand::seq::index::sample(rng, dim - 1, parts - 1)
        .into_iter()
        .map(|c| c + 1)
        .collect();
    cuts.sort_unstable();
    cuts.push(dim);
    let mut start = 0;
    let mut projectors = Vec::with_capacity(parts);
    for end in cuts {
        let cols = u.matrix().columns(start, end - start);
        let p = cols * cols.adjoint();
        projectors.push(Operator::projector(p, 1e-9).expect("column span projector"));
        start = end;
    }
    ProjectiveDecomposition::new(projectors, 1e-9).expect("orthogonal columns")
}

/// Random PD with a random number of elements.
pub fn random_pd<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> ProjectiveDecomposition {
    let parts = rng.random_range(1..=dim);
    random_pd_with_parts(dim, parts, rng)
}

/// Random orthonormal basis as a rank-one PD.
pub fn random_basis_pd<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> ProjectiveDecomposition {
    random_pd_with_parts(dim, dim, rng)
}
