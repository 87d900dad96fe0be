//! Randomized invariants, runnable from ordinary tests and from the
//! acceptance report. Each check returns `Err` with the shrunk
//! counterexample on failure.

use proptest::prelude::*;
use proptest::test_runner::{Config, TestRunner};
use wkmsurv::simulate::{
    replicate_rng, run_power_experiment, sample_exponential, Experiment, MixtureSpec,
    SimulationSpec,
};
use wkmsurv::{
    censoring_km, gehan_wilcoxon, km_estimate, log_rank, theta_statistic, theta_test,
    weighted_survival, Dataset, Error, Observation, Population, StepFunction, Subject,
};

pub const CASES: u32 = 256;

fn runner() -> TestRunner {
    TestRunner::new(Config {
        cases: CASES,
        failure_persistence: None,
        ..Config::default()
    })
}

fn check<S: Strategy>(
    strategy: S,
    test: impl Fn(S::Value) -> Result<(), TestCaseError>,
) -> Result<(), String> {
    runner().run(&strategy, test).map_err(|e| e.to_string())
}

/// Subjects on a half-unit grid in (0, 10], so ties are common.
pub fn subjects(max: usize) -> impl Strategy<Value = Vec<Subject>> {
    prop::collection::vec((1u32..=20, prop::bool::weighted(0.7)), 1..=max).prop_map(|v| {
        v.into_iter()
            .map(|(t, event)| Subject {
                time: t as f64 * 0.5,
                event,
            })
            .collect()
    })
}

fn build(cells: Vec<(Vec<Subject>, Vec<Subject>)>) -> Dataset {
    let mut raw = Vec::new();
    for (z, (a, b)) in cells.iter().enumerate() {
        for (pop, group) in [(1, a), (2, b)] {
            raw.extend(
                group
                    .iter()
                    .map(|s| Observation::new(s.time, s.event, format!("c{z}"), pop)),
            );
        }
    }
    Dataset::validate(raw).expect("every cohort has members in both populations")
}

/// Two-population data sets with one to three cohorts.
pub fn datasets() -> impl Strategy<Value = Dataset> {
    prop::collection::vec((subjects(8), subjects(8)), 1..=3).prop_map(build)
}

/// As `datasets`, but every cell opens with an event at 0.25, before any
/// other observation.
pub fn datasets_with_early_events() -> impl Strategy<Value = Dataset> {
    prop::collection::vec((subjects(8), subjects(8)), 1..=3).prop_map(|cells| {
        build(
            cells
                .into_iter()
                .map(|(mut a, mut b)| {
                    a.push(Subject::event(0.25));
                    b.push(Subject::event(0.25));
                    (a, b)
                })
                .collect(),
        )
    })
}

fn assert_survival_shape(f: &StepFunction) -> Result<(), TestCaseError> {
    // Weighted curves start at the rounded sum of the prevalences.
    let start = f.eval(0.0).unwrap();
    prop_assert!((start - 1.0).abs() <= 1e-12, "starts at {}", start);
    let mut last = start;
    for &v in f.values() {
        prop_assert!((0.0..=start).contains(&v), "value {} out of range", v);
        prop_assert!(v <= last, "increase from {} to {}", last, v);
        last = v;
    }
    Ok(())
}

/// Kaplan-Meier, censoring and weighted curves start at one, stay in
/// [0, 1] and never increase.
pub fn curves_are_survival_functions() -> Result<(), String> {
    check(datasets(), |ds| {
        for pop in Population::BOTH {
            let members = ds.population_subjects(pop);
            assert_survival_shape(&km_estimate(&members).unwrap().surv)?;
            assert_survival_shape(&censoring_km(&members).unwrap().surv)?;
            assert_survival_shape(&weighted_survival(&ds, pop).unwrap())?;
        }
        Ok(())
    })
}

/// Swapping the population labels negates Θ̂.
pub fn theta_is_antisymmetric() -> Result<(), String> {
    check(datasets(), |ds| {
        let fwd = theta_statistic(&ds).unwrap();
        let rev = theta_statistic(&ds.swap_populations()).unwrap();
        prop_assert!(
            (fwd + rev).abs() <= 1e-12 * (1.0 + fwd.abs()),
            "{} vs {}",
            fwd,
            rev
        );
        Ok(())
    })
}

/// With an event before every other observation in each cell, the variance
/// estimate exists and is strictly positive.
pub fn sigma2_is_positive() -> Result<(), String> {
    check(datasets_with_early_events(), |ds| {
        let report = theta_test(&ds, 0.05);
        prop_assert!(report.is_ok(), "{:?}", report.err());
        let sigma2 = report.unwrap().sigma2;
        prop_assert!(sigma2 > 0.0 && sigma2.is_finite(), "sigma2 = {}", sigma2);
        Ok(())
    })
}

/// Rescaling every time by a positive factor leaves every p-value unchanged.
pub fn p_values_ignore_time_units() -> Result<(), String> {
    check((datasets(), 0.01f64..100.0), |(ds, factor)| {
        let scaled = ds.scale_times(factor).unwrap();
        match (theta_test(&ds, 0.05), theta_test(&scaled, 0.05)) {
            (Ok(a), Ok(b)) => {
                prop_assert!(
                    (a.p_value - b.p_value).abs() <= 1e-12,
                    "{} vs {}",
                    a.p_value,
                    b.p_value
                );
                prop_assert!((a.theta * factor - b.theta).abs() <= 1e-9 * (1.0 + b.theta.abs()));
            }
            (Err(a), Err(b)) => {
                prop_assert_eq!(std::mem::discriminant(&a), std::mem::discriminant(&b))
            }
            (a, b) => prop_assert!(false, "outcome changed: {:?} / {:?}", a, b),
        }
        let (g1, g2) = (
            ds.population_subjects(Population::One),
            ds.population_subjects(Population::Two),
        );
        let (s1, s2) = (
            scaled.population_subjects(Population::One),
            scaled.population_subjects(Population::Two),
        );
        for (a, b) in [
            (log_rank(&g1, &g2), log_rank(&s1, &s2)),
            (gehan_wilcoxon(&g1, &g2), gehan_wilcoxon(&s1, &s2)),
        ] {
            match (a, b) {
                (Ok(a), Ok(b)) => prop_assert_eq!(a.p_value, b.p_value),
                (Err(Error::Degenerate(_)), Err(Error::Degenerate(_))) => {}
                (a, b) => prop_assert!(false, "outcome changed: {:?} / {:?}", a, b),
            }
        }
        Ok(())
    })
}

/// Equal seeds give identical draws and identical simulation output,
/// regardless of parallel scheduling.
pub fn rng_is_deterministic() -> Result<(), String> {
    check(
        (any::<u64>(), 0usize..4, 0usize..1000),
        |(seed, size_index, replicate)| {
            let a = sample_exponential(0.25, 16, &mut replicate_rng(seed, size_index, replicate))
                .unwrap();
            let b = sample_exponential(0.25, 16, &mut replicate_rng(seed, size_index, replicate))
                .unwrap();
            prop_assert_eq!(&a, &b);
            let c = sample_exponential(
                0.25,
                16,
                &mut replicate_rng(seed, size_index, replicate + 1),
            )
            .unwrap();
            prop_assert_ne!(&a, &c);

            let spec = SimulationSpec {
                experiment: Experiment::Power,
                sizes: vec![8],
                replicates: 4,
                alpha: 0.05,
                seed,
            };
            let mix = MixtureSpec::default();
            let first = serde_json::to_string(&run_power_experiment(&spec, &mix).unwrap()).unwrap();
            let second =
                serde_json::to_string(&run_power_experiment(&spec, &mix).unwrap()).unwrap();
            prop_assert_eq!(first, second);
            Ok(())
        },
    )
}
