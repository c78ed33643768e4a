mod common;

use common::{brute_knn, lattice_points, random_points, rng, sq_dist};
use pcqa_core::NeighborIndex;
use proptest::prelude::*;

#[test]
fn every_k_matches_exhaustive_scan() {
    let mut r = rng(7);
    for case in 0..100 {
        let n = 1 + (case * 37) % 500;
        // Alternate continuous and lattice clouds so ties are exercised.
        let pts = if case % 2 == 0 { random_points(&mut r, n, 10.0) } else { lattice_points(&mut r, n, 6) };
        let index = NeighborIndex::new(&pts);
        let queries = random_points(&mut r, 3, 10.0);
        for q in queries.iter().chain(pts.iter().take(2)) {
            let order = brute_knn(&pts, q, n);
            for k in 1..=n {
                let got: Vec<usize> = index.k_nearest(q, k).unwrap().iter().map(|nb| nb.index).collect();
                assert_eq!(got, order[..k], "case {case}, n {n}, k {k}");
            }
        }
    }
}

#[test]
fn k_out_of_range() {
    let index = NeighborIndex::new(&[[0.0; 3], [1.0; 3]]);
    assert!(index.k_nearest(&[0.0; 3], 0).is_err());
    assert!(index.k_nearest(&[0.0; 3], 3).is_err());
}

proptest! {
    #[test]
    fn knn_is_exact(seed in 0u64..10_000, n in 1usize..200, k in 1usize..40) {
        let mut r = rng(seed);
        let pts = lattice_points(&mut r, n, 5);
        let k = k.min(n);
        let index = NeighborIndex::new(&pts);
        let q = random_points(&mut r, 1, 5.0)[0];
        let got = index.k_nearest(&q, k).unwrap();
        let want = brute_knn(&pts, &q, k);
        prop_assert_eq!(got.iter().map(|nb| nb.index).collect::<Vec<_>>(), want);
        for nb in &got {
            prop_assert!((nb.distance - sq_dist(&pts[nb.index], &q).sqrt()).abs() == 0.0);
        }
    }

    #[test]
    fn radius_query_is_exact(seed in 0u64..10_000, n in 1usize..300, radius in 0.0f64..4.0) {
        let mut r = rng(seed);
        let pts = lattice_points(&mut r, n, 6);
        let index = NeighborIndex::new(&pts);
        let q = pts[0];
        let mut got: Vec<usize> = index.within_radius(&q, radius).iter().map(|nb| nb.index).collect();
        got.sort_unstable();
        let want: Vec<usize> = (0..n).filter(|&i| sq_dist(&pts[i], &q).sqrt() <= radius).collect();
        prop_assert_eq!(got, want);
    }
}
