use conhist::random::random_hermitian;
use conhist::{
    common_refinement, decoherence_functional, partial_trace, Axis, CompositeSpace, ProjectiveDecomposition, Tolerances,
};
use conhist_bench::random_family;
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::hint::black_box;

fn decoherence(c: &mut Criterion) {
    let tols = Tolerances::default();
    let mut group = c.benchmark_group("decoherence_functional");
    for (dim, times) in [(2, 3), (3, 3), (4, 2), (4, 4)] {
        let (family, dynamics) = random_family(dim, times, 7);
        group.bench_with_input(
            BenchmarkId::from_parameter(format!("d{dim}_f{times}_n{}", family.len())),
            &(family, dynamics),
            |b, (f, d)| b.iter(|| decoherence_functional(black_box(f), d, &tols).unwrap()),
        );
    }
    group.finish();
}

fn reduce(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut group = c.benchmark_group("partial_trace");
    for factors in [vec![2, 2, 2], vec![3, 3, 2], vec![4, 4, 4]] {
        let space = CompositeSpace::new(factors.clone()).unwrap();
        let op = random_hermitian(space.total_dim(), &mut rng);
        group.bench_with_input(BenchmarkId::from_parameter(format!("{factors:?}")), &op, |b, op| {
            b.iter(|| partial_trace(black_box(op), &space, &[0]).unwrap())
        });
    }
    group.finish();
}

fn refinement(c: &mut Criterion) {
    let mut group = c.benchmark_group("common_refinement");
    for k in [2, 4, 8] {
        let a = ProjectiveDecomposition::spin(Axis::Z).kron(&ProjectiveDecomposition::trivial(k));
        let b = ProjectiveDecomposition::trivial(2).kron(&ProjectiveDecomposition::standard_basis(k));
        group.bench_with_input(BenchmarkId::from_parameter(2 * k), &(a, b), |bench, (a, b)| {
            bench.iter(|| common_refinement(black_box(a), b, 1e-10).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, decoherence, reduce, refinement);
criterion_main!(benches);
