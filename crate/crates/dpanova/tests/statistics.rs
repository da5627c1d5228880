mod oracle;

use dpanova::core::anova::p_value_public_f_mc;
use dpanova::core::scenario::{synth_dataset, ScenarioSpec};
use dpanova::core::stats::{f1_statistic, f_statistic};
use dpanova::core::{Dataset, StreamKey};
use dpanova::public::p_value_public_f;
use rand::Rng;

/// Random grid-valued datasets with `N ≤ 8` and a nonzero within-group term.
pub fn random_datasets(count: usize, seed: u64) -> Vec<(usize, Vec<(usize, f64)>)> {
    let mut rng = StreamKey::root(seed).rng();
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let k = rng.random_range(2..=3);
        let n = rng.random_range(k + 1..=8);
        let rows: Vec<_> = (0..n)
            .map(|_| (rng.random_range(0..k), oracle::GRID[rng.random_range(0..5)]))
            .collect();
        if oracle::brute_terms(k, &rows, 1.0).1 > 0.0 {
            out.push((k, rows));
        }
    }
    out
}

#[test]
fn exact_statistics_match_brute_force() {
    for (k, rows) in random_datasets(200, 7) {
        oracle::check_exact(k, &rows).unwrap();
    }
}

#[test]
fn four_row_example_is_exact() {
    let d = Dataset::new(2, [(0, 0.0), (0, 1.0), (1, 1.0), (1, 1.0)]).unwrap();
    assert_eq!(f_statistic(&d).unwrap().statistic, 1.0);
    assert_eq!(f1_statistic(&d).unwrap().statistic, 2.0);
}

#[test]
fn public_p_value_agrees_with_monte_carlo() {
    let spec = ScenarioSpec::spaced(90, 3, 0.15, 0.3).unwrap();
    for t in 0..5 {
        let d = synth_dataset(&spec, StreamKey::root(40).child(t)).unwrap().data;
        let exact = p_value_public_f(&d).unwrap();
        let mc = p_value_public_f_mc(&d, 20_000, StreamKey::root(41).child(t)).unwrap();
        let stderr = (exact * (1.0 - exact) / 20_000.0).sqrt().max(1e-4);
        assert!((exact - mc).abs() < 4.0 * stderr, "exact {exact} vs Monte Carlo {mc}");
    }
}
