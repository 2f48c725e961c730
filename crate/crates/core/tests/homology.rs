mod common;

use common::{diagrams_match, naive_rips, random_graph, random_matrix};
use infogap_core::homology::{betti_counts, geodesic_distances, rips_persistence, DistanceMatrix};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn engine_matches_naive_reduction_on_graph_geodesics() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for case in 0..120 {
        let n = rng.random_range(1..=10);
        let p = rng.random_range(0.15..0.7);
        let edges = random_graph(&mut rng, n, p);
        let dm = geodesic_distances(n, &edges).unwrap();
        let fast = rips_persistence(&dm, 2).unwrap();
        let slow = naive_rips(&dm, 2);
        for k in 0..=2 {
            assert!(diagrams_match(&fast[k], &slow[k], 1e-9), "case {case} dim {k}: {:?} vs {:?}", fast[k], slow[k]);
        }
        assert_eq!(fast[0].essential_excluded, 1);
        assert_eq!(fast[1].essential_excluded + fast[2].essential_excluded, 0);
    }
}

#[test]
fn engine_matches_naive_reduction_on_random_matrices() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for case in 0..60 {
        let n = rng.random_range(2..=9);
        let dm = random_matrix(&mut rng, n);
        let fast = rips_persistence(&dm, 2).unwrap();
        let slow = naive_rips(&dm, 2);
        for k in 0..=2 {
            assert!(diagrams_match(&fast[k], &slow[k], 1e-12), "case {case} dim {k}");
        }
    }
}

#[test]
fn trees_have_only_components() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for n in 2..=8 {
        for _ in 0..5 {
            let edges: Vec<_> = (1..n).map(|v| (rng.random_range(0..v), v, 1.0)).collect();
            let dm = geodesic_distances(n, &edges).unwrap();
            let b = betti_counts(&rips_persistence(&dm, 2).unwrap());
            let oracle = betti_counts(&naive_rips(&dm, 2));
            assert_eq!(b, oracle);
            assert_eq!((b.beta0, b.beta1, b.beta2), (n - 1, 0, 0));
        }
    }
}

#[test]
fn scale_equivariance() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..20 {
        let n = rng.random_range(3..10);
        let dm = random_matrix(&mut rng, n);
        let c = rng.random_range(0.1..10.0);
        let a = rips_persistence(&dm, 2).unwrap();
        let b = rips_persistence(&dm.scaled(c), 2).unwrap();
        for k in 0..=2 {
            let scaled = infogap_core::homology::PersistenceDiagram::new(
                k,
                a[k].points.iter().map(|&(x, y)| (x * c, y * c)).collect(),
            );
            assert!(diagrams_match(&scaled, &b[k], 1e-9));
        }
    }
}

#[test]
fn connected_snapshot_has_n_minus_one_components() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for _ in 0..10 {
        let n = rng.random_range(5..40);
        let mut edges: Vec<_> = (1..n).map(|v| (rng.random_range(0..v), v, rng.random_range(0.05..1.0))).collect();
        edges.extend(random_graph(&mut rng, n, 0.05));
        let dm = geodesic_distances(n, &edges).unwrap();
        let d = rips_persistence(&dm, 2).unwrap();
        // Distinct positive distances: every merge has positive persistence.
        if (0..n).all(|i| (0..n).all(|j| i == j || dm.get(i, j) > 0.0)) {
            assert_eq!(betti_counts(&d).beta0, n - 1);
        }
    }
}

#[test]
fn rejects_asymmetric_input() {
    assert!(DistanceMatrix::new(2, vec![0.0, 1.0, 0.5, 0.0]).is_err());
}
