use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

use fock1d::circle::{assemble_with, default_ratio_grid, eigenfunction_ratio_test};
use fock1d::identities::{chebyshev_points, evaluate_identity_with, ChebKind, IdentityVariant};
use fock1d::{Parity, QuadratureSpec, QuantumNumber, Strategy};

const STRATEGIES: [(&str, Strategy); 2] = [("sequential", Strategy::Sequential), ("parallel", Strategy::Parallel)];

fn nystrom_assembly(c: &mut Criterion) {
    let mut group = c.benchmark_group("nystrom_assembly");
    for nodes in [128usize, 256, 512] {
        for (name, strategy) in STRATEGIES {
            group.bench_with_input(BenchmarkId::new(name, nodes), &nodes, |b, &n| {
                b.iter(|| assemble_with(black_box(n), 1.0, strategy).unwrap())
            });
        }
    }
    group.finish();
}

fn ratio_test(c: &mut Criterion) {
    let mut group = c.benchmark_group("ratio_test");
    group.sample_size(20);
    let spec = QuadratureSpec::default();
    let grid = default_ratio_grid(1.0);
    let n = QuantumNumber::new(3).unwrap();
    for (name, strategy) in STRATEGIES {
        group.bench_function(name, |b| {
            b.iter(|| eigenfunction_ratio_test(n, Parity::Odd, 1.0, black_box(&grid), &spec, strategy).unwrap())
        });
    }
    group.finish();
}

fn chebyshev_identity(c: &mut Criterion) {
    let mut group = c.benchmark_group("chebyshev_identity");
    group.sample_size(20);
    let spec = QuadratureSpec::default();
    let grid = chebyshev_points(33);
    for (name, strategy) in STRATEGIES {
        group.bench_function(name, |b| {
            b.iter(|| {
                evaluate_identity_with(ChebKind::U, IdentityVariant::FullCircleGroundTruth, 3, 1.0, black_box(&grid), &spec, strategy)
                    .unwrap()
            })
        });
    }
    group.finish();
}

criterion_group!(benches, nystrom_assembly, ratio_test, chebyshev_identity);
criterion_main!(benches);
