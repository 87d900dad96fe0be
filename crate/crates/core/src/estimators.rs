//! Product-limit estimators: Kaplan-Meier, reverse (censoring) Kaplan-Meier,
//! and the prevalence-weighted population curve.

use serde::Serialize;

use crate::dataset::{Dataset, Population, Subject};
use crate::error::{Error, Result};
use crate::stepfn::StepFunction;

/// A product-limit curve with its risk-set bookkeeping.
///
/// `jump_times[k]` is the k-th time at which the counted event occurs,
/// `at_risk[k]` the size of the risk set just before it and `events[k]` the
/// number of counted events there.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SurvivalCurve {
    pub surv: StepFunction,
    pub jump_times: Vec<f64>,
    pub at_risk: Vec<usize>,
    pub events: Vec<usize>,
}

impl SurvivalCurve {
    pub fn eval(&self, t: f64) -> Result<f64> {
        self.surv.eval(t)
    }

    pub fn eval_left(&self, t: f64) -> Result<f64> {
        self.surv.eval_left(t)
    }
}

#[derive(Clone, Copy)]
enum Counted {
    Events,
    Censorings,
}

/// Shared product-limit pass. Events leave the risk set before censorings
/// recorded at the same time, whichever of the two is being counted.
fn product_limit(subjects: &[Subject], counted: Counted) -> Result<SurvivalCurve> {
    if subjects.is_empty() {
        return Err(Error::domain("product-limit estimate of an empty sample"));
    }
    if let Some(bad) = subjects
        .iter()
        .find(|s| !(s.time > 0.0) || !s.time.is_finite())
    {
        return Err(Error::domain(format!(
            "observation time {} is not positive",
            bad.time
        )));
    }
    let mut sorted = subjects.to_vec();
    sorted.sort_by(|a, b| a.time.total_cmp(&b.time));

    let mut remaining = sorted.len();
    let mut surv = 1.0;
    let mut curve = SurvivalCurve {
        surv: StepFunction::constant(1.0),
        jump_times: Vec::new(),
        at_risk: Vec::new(),
        events: Vec::new(),
    };
    let mut values = Vec::new();

    for group in sorted.chunk_by(|a, b| a.time == b.time) {
        let t = group[0].time;
        let deaths = group.iter().filter(|s| s.event).count();
        let censored = group.len() - deaths;
        let (count, risk) = match counted {
            Counted::Events => (deaths, remaining),
            Counted::Censorings => (censored, remaining - deaths),
        };
        if count > 0 {
            surv *= 1.0 - count as f64 / risk as f64;
            curve.jump_times.push(t);
            curve.at_risk.push(risk);
            curve.events.push(count);
            values.push(surv);
        }
        remaining -= group.len();
    }
    curve.surv = StepFunction::new(1.0, curve.jump_times.clone(), values)?;
    Ok(curve)
}

/// Kaplan-Meier estimate of the event-time survival function.
pub fn km_estimate(subjects: &[Subject]) -> Result<SurvivalCurve> {
    product_limit(subjects, Counted::Events)
}

/// Product-limit estimate of the censoring-time survival function: censorings
/// are counted as events. Subjects whose event falls at the same instant as a
/// censoring are removed from that censoring's risk set.
pub fn censoring_km(subjects: &[Subject]) -> Result<SurvivalCurve> {
    product_limit(subjects, Counted::Censorings)
}

/// `Σ_z w_z Ŝ_z` over cohort samples, with `w_z = n_z / n`.
pub fn prevalence_weighted_km(cohorts: &[&[Subject]]) -> Result<StepFunction> {
    let n: usize = cohorts.iter().map(|c| c.len()).sum();
    if n == 0 {
        return Err(Error::domain("weighted estimate of an empty sample"));
    }
    let mut weights = Vec::new();
    let mut curves = Vec::new();
    for cohort in cohorts.iter().filter(|c| !c.is_empty()) {
        weights.push(cohort.len() as f64 / n as f64);
        curves.push(km_estimate(cohort)?.surv);
    }
    let refs: Vec<&StepFunction> = curves.iter().collect();
    StepFunction::linear_combine(&weights, &refs)
}

/// Population survival `θ̂^(i)_t = Σ_z q̂_z^(i) Ŝ_z^(i)(t)`.
pub fn weighted_survival(ds: &Dataset, pop: Population) -> Result<StepFunction> {
    let q = ds.prevalence(pop)?;
    let curves = (0..ds.num_cohorts())
        .map(|z| Ok(km_estimate(ds.cell(pop, z)?)?.surv))
        .collect::<Result<Vec<_>>>()?;
    let refs: Vec<&StepFunction> = curves.iter().collect();
    StepFunction::linear_combine(&q, &refs)
}

/// Kaplan-Meier estimate on both populations' members of cohort `z`.
pub fn pooled_cohort_km(ds: &Dataset, cohort: usize) -> Result<SurvivalCurve> {
    km_estimate(&ds.pooled_cohort(cohort)?)
}

/// Tail area `φ̂(t) = ∫_t^{τ_z} Ŝ(s) ds`.
pub fn phi_integral(curve: &SurvivalCurve, t: f64, tau_z: f64) -> Result<f64> {
    if t > tau_z {
        return Err(Error::domain(format!(
            "t = {t} lies beyond the horizon {tau_z}"
        )));
    }
    curve.surv.integrate(t, tau_z)
}
