use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use infogap_core::homology::{geodesic_distances, rips_persistence};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_graph(n: usize, p: f64, seed: u64) -> Vec<(usize, usize, f64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut edges: Vec<(usize, usize, f64)> = (1..n).map(|i| (i - 1, i, rng.random_range(0.1..1.0))).collect();
    for i in 0..n {
        for j in i + 2..n {
            if rng.random_bool(p) {
                edges.push((i, j, rng.random_range(0.1..1.0)));
            }
        }
    }
    edges
}

fn bench(c: &mut Criterion) {
    let mut g = c.benchmark_group("rips_h2_on_geodesics");
    for n in [12, 24, 40] {
        let dm = geodesic_distances(n, &random_graph(n, 0.25, n as u64)).unwrap();
        g.bench_with_input(BenchmarkId::from_parameter(n), &dm, |b, dm| b.iter(|| rips_persistence(dm, 2).unwrap()));
    }
    g.finish();
}

criterion_group!(benches, bench);
criterion_main!(benches);
