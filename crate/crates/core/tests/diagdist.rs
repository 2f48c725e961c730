mod common;

use common::{brute_force_matching, random_diagram, random_matrix};
use infogap_core::diagdist::{bottleneck, bottleneck_points, wasserstein, wasserstein_points, DiagramDistanceConfig};
use infogap_core::homology::{rips_persistence, DistanceMatrix, PersistenceDiagram};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn diagram(points: Vec<(f64, f64)>) -> PersistenceDiagram {
    PersistenceDiagram::new(1, points)
}

#[test]
fn exact_against_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for case in 0..150 {
        let a = random_diagram(&mut rng, 6);
        let b = random_diagram(&mut rng, 6);
        let w1 = wasserstein_points(&a, &b, 1.0);
        let w2 = wasserstein_points(&a, &b, 2.0);
        let bn = bottleneck_points(&a, &b);
        assert!((w1 - brute_force_matching(&a, &b, Some(1.0))).abs() < 1e-9, "case {case} W1");
        assert!((w2 - brute_force_matching(&a, &b, Some(2.0))).abs() < 1e-9, "case {case} W2");
        assert!((bn - brute_force_matching(&a, &b, None)).abs() < 1e-12, "case {case} bottleneck");
        assert!(bn <= w1 + 1e-12);
    }
}

#[test]
fn metric_axioms() {
    let mut rng = ChaCha8Rng::seed_from_u64(22);
    let cfg = DiagramDistanceConfig::default();
    for _ in 0..100 {
        let [a, b, c] = [0; 3].map(|_| diagram(random_diagram(&mut rng, 8)));
        for f in [
            &|x: &PersistenceDiagram, y: &PersistenceDiagram| bottleneck(x, y).unwrap(),
            &|x: &PersistenceDiagram, y: &PersistenceDiagram| wasserstein(x, y, &cfg).unwrap(),
        ] as [&dyn Fn(&PersistenceDiagram, &PersistenceDiagram) -> f64; 2]
        {
            assert_eq!(f(&a, &a), 0.0);
            assert!((f(&a, &b) - f(&b, &a)).abs() < 1e-12);
            assert!(f(&a, &c) <= f(&a, &b) + f(&b, &c) + 1e-9);
            if !a.points.is_empty() {
                assert!(f(&a, &diagram(vec![])) > 0.0);
            }
        }
    }
}

#[test]
fn diagonal_points_and_translation() {
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    let cfg = DiagramDistanceConfig::default();
    for _ in 0..50 {
        let a = random_diagram(&mut rng, 7);
        let b = random_diagram(&mut rng, 7);
        let (bn, w) = (bottleneck_points(&a, &b), wasserstein_points(&a, &b, 1.0));

        let mut a2 = a.clone();
        let z = rng.random_range(0.0..3.0);
        a2.push((z, z));
        assert_eq!(bottleneck_points(&a2, &b), bn);
        assert!((wasserstein_points(&a2, &b, 1.0) - w).abs() < 1e-12);

        let t = rng.random_range(-2.0..2.0);
        let shift = |d: &[(f64, f64)]| diagram(d.iter().map(|&(x, y)| (x + t, y + t)).collect());
        assert!((bottleneck(&shift(&a), &shift(&b)).unwrap() - bn).abs() < 1e-9);
        assert!((wasserstein(&shift(&a), &shift(&b), &cfg).unwrap() - w).abs() < 1e-9);
    }
}

fn perturbed(dm: &DistanceMatrix, delta: f64, rng: &mut ChaCha8Rng) -> DistanceMatrix {
    let n = dm.len();
    let mut d = vec![0.0; n * n];
    for i in 0..n {
        for j in i + 1..n {
            let v = (dm.get(i, j) + rng.random_range(-delta..=delta)).max(0.0);
            d[i * n + j] = v;
            d[j * n + i] = v;
        }
    }
    DistanceMatrix::new(n, d).unwrap()
}

#[test]
fn bottleneck_stability_under_perturbation() {
    let mut rng = ChaCha8Rng::seed_from_u64(24);
    for _ in 0..50 {
        let n = rng.random_range(4..=11);
        let dm = random_matrix(&mut rng, n);
        let base = rips_persistence(&dm, 2).unwrap();
        for delta in [1e-3, 1e-2] {
            let other = rips_persistence(&perturbed(&dm, delta, &mut rng), 2).unwrap();
            for k in 0..=2 {
                let shift = bottleneck(&base[k], &other[k]).unwrap();
                assert!(shift <= delta + 1e-9, "dim {k}: shift {shift} > {delta}");
            }
        }
    }
}

#[test]
fn larger_diagrams_are_consistent() {
    let mut rng = ChaCha8Rng::seed_from_u64(25);
    let a: Vec<(f64, f64)> = random_diagram(&mut rng, 0).into_iter().chain((0..300).map(|_| {
        let b = rng.random_range(0.0..2.0);
        (b, b + rng.random_range(0.0..1.0))
    })).collect();
    let b: Vec<(f64, f64)> = a.iter().map(|&(x, y)| (x + 0.01, y)).collect();
    let bn = bottleneck_points(&a, &b);
    assert!(bn <= 0.01 + 1e-12);
    assert!(wasserstein_points(&a, &b, 1.0) <= 300.0 * 0.01 + 1e-9);
}
