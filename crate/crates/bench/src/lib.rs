//! Fixtures shared by the benchmarks.

use conhist::random::{random_ket, random_pd, random_unitary};
use conhist::{Dynamics, HistoryFamily, Operator, TimeGrid};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Fixed-initial family of `times` random decompositions on a
/// `dim`-dimensional space, with random unitary steps.
pub fn random_family(dim: usize, times: usize, seed: u64) -> (HistoryFamily, Dynamics) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let grid = TimeGrid::steps(times + 1).expect("grid");
    let steps = (0..times).map(|_| random_unitary(dim, &mut rng)).collect();
    let dynamics = Dynamics::from_unitaries(grid.clone(), steps, 1e-9).expect("unitary steps");
    let p0 = Operator::dyad(&random_ket(dim, &mut rng), 1e-9).expect("normalized");
    let pds: Vec<_> = (0..times).map(|_| random_pd(dim, &mut rng)).collect();
    let family = HistoryFamily::fixed_initial(grid, &p0, &pds, 1e-10).expect("family");
    (family, dynamics)
}
