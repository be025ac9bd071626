mod oracles;

use clues::cuts::{cut_objective, optimal_cut, CutInterval};
use rand::{Rng, SeedableRng};

const STEP: f64 = 1e-4;

fn random_intervals(rng: &mut impl Rng) -> Vec<CutInterval> {
    let k = rng.random_range(1..=20);
    (0..k)
        .map(|_| {
            let a: f64 = rng.random();
            let b: f64 = rng.random();
            CutInterval {
                low: a.min(b),
                high: a.max(b),
            }
        })
        .collect()
}

#[test]
fn optimal_cut_matches_grid_search() {
    let mut rng = rand::rngs::StdRng::seed_from_u64(3);
    for case in 0..100 {
        let iv = random_intervals(&mut rng);
        let pairs: Vec<(f64, f64)> = iv.iter().map(|i| (i.low, i.high)).collect();
        let (arg, best) = oracles::grid_cut(&pairs, 1.0, STEP);
        let res = optimal_cut(&iv).unwrap();
        assert!(
            res.objective <= best + 1e-12,
            "case {case}: {} > grid {best}",
            res.objective
        );
        assert!(
            arg >= res.solution_low - STEP && arg <= res.solution_high + STEP,
            "case {case}: grid argmin {arg} outside [{}, {}]",
            res.solution_low,
            res.solution_high
        );
        // flat across the solution set
        for t in [0.0, 0.25, 0.5, 0.75, 1.0] {
            let h = res.solution_low + t * (res.solution_high - res.solution_low);
            assert!((cut_objective(&iv, h) - res.objective).abs() <= 1e-12);
        }
    }
}
