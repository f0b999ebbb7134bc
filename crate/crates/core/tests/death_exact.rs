#[path = "support/death_oracle.rs"]
mod death_oracle;

use std::sync::OnceLock;

use obsdesign::models::{DeathModel, DeathModelSpec};
use obsdesign::optim::powering_correspondence;
use obsdesign::{load_checkpoint, run_new_algorithm, save_checkpoint, NewAlgConfig, TimeGrid};
use proptest::prelude::*;

use death_oracle::DeathOracle;

fn grid() -> TimeGrid {
    TimeGrid::new(0.01, 10.0, 0.01, 1).unwrap()
}

/// Exact expected utility at every grid point.
fn utilities() -> &'static Vec<f64> {
    static U: OnceLock<Vec<f64>> = OnceLock::new();
    U.get_or_init(|| {
        let model = DeathModel::new(DeathModelSpec::default()).unwrap();
        let g = grid();
        (0..g.points() as u32)
            .map(|i| model.exact_expected_utility(&[g.time(i)]).unwrap())
            .collect()
    })
}

fn argmax(u: &[f64]) -> usize {
    (0..u.len()).fold(0, |best, i| if u[i] > u[best] { i } else { best })
}

#[test]
fn enumeration_matches_independent_quadrature() {
    let model = DeathModel::new(DeathModelSpec::default()).unwrap();
    let oracle = DeathOracle::standard();
    for t in [0.05, 0.5, 1.0, 1.6, 1.61, 3.0, 8.0] {
        let lib = model.exact_expected_utility(&[t]).unwrap();
        let ora = oracle.expected_utility(t);
        assert!((lib - ora).abs() <= 1e-9 * ora, "t = {t}: {lib} vs {ora}");
    }
}

#[test]
fn grid_argmax_agrees_with_oracle() {
    let g = grid();
    let u = utilities();
    let best = argmax(u);
    // the oracle's argmax over the same grid, checked around the library's pick
    let oracle = DeathOracle::standard();
    let local: Vec<f64> = (best.saturating_sub(20)..(best + 21).min(u.len()))
        .map(|i| oracle.expected_utility(g.time(i as u32)))
        .collect();
    let oracle_best = best.saturating_sub(20) + argmax(&local);
    assert_eq!(best, oracle_best);
    // unimodal: increasing before the peak, decreasing after it
    assert!(u[..=best].windows(2).all(|w| w[1] > w[0]));
    assert!(u[best..].windows(2).all(|w| w[1] < w[0]));
    println!("argmax t = {} (u = {:.9})", g.time(best as u32), u[best]);
}

#[test]
fn powering_retains_454_designs_at_half() {
    assert_eq!(powering_correspondence(utilities(), 1, 0.5).unwrap(), 454);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn powering_monotone_in_power(j in 1u32..100, alpha in 0.01f64..0.99) {
        let u = utilities();
        let k = powering_correspondence(u, j, alpha).unwrap();
        let k_next = powering_correspondence(u, j + 1, alpha).unwrap();
        prop_assert!(k_next <= k);
    }

    #[test]
    fn powering_monotone_in_threshold(j in 1u32..100, a in 0.01f64..0.99, b in 0.01f64..0.99) {
        let u = utilities();
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        prop_assert!(
            powering_correspondence(u, j, lo).unwrap() <= powering_correspondence(u, j, hi).unwrap()
        );
    }
}

#[test]
fn checkpoint_after_search_round_trips() {
    let model = DeathModel::new(DeathModelSpec::default()).unwrap();
    let cfg = NewAlgConfig::uniform(4, 1200, 4.0).with_batch(4);
    let res = run_new_algorithm(&model, grid(), &cfg, 3).unwrap();
    let text = save_checkpoint(&res.system);
    let back = load_checkpoint(&text).unwrap();
    assert_eq!(back.top_designs(50), res.system.top_designs(50));
    assert_eq!(save_checkpoint(&back), text);
    assert_eq!(back.total_evaluations(), 6000);
}
