mod oracles;

use clues::{nn_chain_linkage, LinkageMethod};
use rand::{Rng, SeedableRng};

#[test]
fn nn_chain_heights_match_naive_agglomeration() {
    let mut rng = rand::rngs::StdRng::seed_from_u64(11);
    for case in 0..200u64 {
        let n = rng.random_range(3..=40);
        let d = oracles::random_euclidean(n, 4, 1000 + case);
        for method in LinkageMethod::ALL {
            let dd = nn_chain_linkage(&d, method);
            dd.check().unwrap();
            let mut expected = oracles::naive_linkage_heights(&d, method);
            expected.sort_by(f64::total_cmp);
            let got = dd.heights();
            assert_eq!(got.len(), n - 1);
            for (g, e) in got.iter().zip(&expected) {
                assert!((g - e).abs() <= 1e-12, "case {case} {method} n={n}: {g} vs {e}");
            }
        }
    }
}

#[test]
fn ward_oracle_reduces_to_distance_for_singletons() {
    let d = oracles::random_euclidean(2, 3, 5);
    let h = oracles::naive_linkage_heights(&d, LinkageMethod::Ward);
    assert!((h[0] - d.get(0, 1)).abs() < 1e-15);
}
