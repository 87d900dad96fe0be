mod support;

use proptest::prelude::*;
use support::oracles::*;
use support::properties::{datasets, subjects};
use wkmsurv::{
    censoring_km, gehan_wilcoxon, km_estimate, sigma2_estimate, theta_statistic, Dataset,
    Observation, Population,
};

#[test]
fn km_matches_hand_computation() {
    let km = km_estimate(&worked_example()).unwrap();
    let hand = [
        (0.5, 1.0),
        (1.0, 0.8),
        (2.0, 0.8),
        (3.0, 0.8 * 2.0 / 3.0),
        (4.0, 0.8 * 2.0 / 3.0),
        (5.0, 0.0),
    ];
    for (t, s) in hand {
        assert!((km.eval(t).unwrap() - s).abs() < 1e-12, "t = {t}");
    }
}

#[test]
fn censoring_km_matches_hand_computation() {
    let c = censoring_km(&worked_example()).unwrap();
    let hand = [
        (1.0, 1.0),
        (2.0, 0.75),
        (3.0, 0.75),
        (4.0, 0.375),
        (5.0, 0.375),
    ];
    for (t, s) in hand {
        assert!((c.eval(t).unwrap() - s).abs() < 1e-12, "t = {t}");
    }
}

fn uncensored_single_cohort(g1: &[f64], g2: &[f64]) -> Dataset {
    let raw = g1
        .iter()
        .map(|&t| Observation::new(t, true, "all", 1))
        .chain(g2.iter().map(|&t| Observation::new(t, true, "all", 2)))
        .collect();
    Dataset::validate(raw).unwrap()
}

#[test]
fn sigma2_matches_jump_sum_on_ten_subjects() {
    let g1 = [2.0, 3.5, 5.0, 7.25, 11.0];
    let g2 = [1.0, 3.5, 4.0, 6.0, 9.5];
    let ds = uncensored_single_cohort(&g1, &g2);
    let expected = uncensored_single_cohort_sigma2(&g1, &g2);
    let got = sigma2_estimate(&ds).unwrap();
    assert!(
        ((got - expected) / expected).abs() < 1e-10,
        "{got} vs {expected}"
    );
}

#[test]
fn theta_matches_grid_integral_on_lung_data() {
    let ds = wkmsurv::io::lung_fixture().unwrap();
    let got = theta_statistic(&ds).unwrap();
    let expected = grid_theta(&ds);
    assert!(
        (got - expected).abs() <= 1e-9 * expected.abs(),
        "{got} vs {expected}"
    );
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 256, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn km_matches_brute_force(sample in subjects(12)) {
        let km = km_estimate(&sample).unwrap();
        let c = censoring_km(&sample).unwrap();
        for k in 0..=22 {
            let t = k as f64 * 0.5;
            prop_assert!((km.eval(t).unwrap() - brute_km(&sample, t)).abs() < 1e-12);
            prop_assert!((c.eval(t).unwrap() - brute_censoring_km(&sample, t)).abs() < 1e-12);
        }
    }

    #[test]
    fn theta_matches_grid_integral(ds in datasets()) {
        let got = theta_statistic(&ds).unwrap();
        let expected = grid_theta(&ds);
        prop_assert!((got - expected).abs() <= 1e-12 * (1.0 + expected.abs()), "{} vs {}", got, expected);
    }

    #[test]
    fn sigma2_matches_jump_sum(
        g1 in prop::collection::vec(1u32..40, 2..10),
        g2 in prop::collection::vec(1u32..40, 2..10),
    ) {
        let g1: Vec<f64> = g1.into_iter().map(|t| t as f64 * 0.25).collect();
        let g2: Vec<f64> = g2.into_iter().map(|t| t as f64 * 0.25).collect();
        let ds = uncensored_single_cohort(&g1, &g2);
        let expected = uncensored_single_cohort_sigma2(&g1, &g2);
        match sigma2_estimate(&ds) {
            Ok(got) => prop_assert!(((got - expected) / expected).abs() < 1e-10, "{} vs {}", got, expected),
            Err(e) => prop_assert!(expected <= 0.0, "{:?} but oracle gives {}", e, expected),
        }
    }

    #[test]
    fn gehan_matches_pairwise_score(
        g1 in prop::collection::vec(1u32..12, 1..=8),
        g2 in prop::collection::vec(1u32..12, 1..=8),
    ) {
        let g1: Vec<f64> = g1.into_iter().map(f64::from).collect();
        let g2: Vec<f64> = g2.into_iter().map(f64::from).collect();
        let to_subjects = |g: &[f64]| g.iter().map(|&t| wkmsurv::Subject::event(t)).collect::<Vec<_>>();
        let report = gehan_wilcoxon(&to_subjects(&g1), &to_subjects(&g2)).unwrap();
        let u = mann_whitney_score(&g1, &g2);
        let v = gehan_variance(&g1, &g2);
        if v > 0.0 {
            prop_assert!((report.statistic - u / v.sqrt()).abs() < 1e-12);
        } else {
            prop_assert_eq!(report.statistic, 0.0);
        }
    }
}

#[test]
fn single_cohort_weighted_curve_is_pooled_km() {
    let ds = uncensored_single_cohort(&[1.0, 2.0, 4.0], &[3.0]);
    let theta = wkmsurv::weighted_survival(&ds, Population::One).unwrap();
    for t in [0.0, 1.0, 1.5, 2.0, 4.0] {
        assert_eq!(
            theta.eval(t).unwrap(),
            brute_km(&ds.population_subjects(Population::One), t)
        );
    }
}
