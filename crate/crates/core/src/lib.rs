//! Prevalence-weighted Kaplan-Meier estimation and the Θ̂ two-population test.
//!
//! A population is split into cohorts (for example by a prognostic score).
//! Its survival curve is estimated as the cohort Kaplan-Meier curves averaged
//! with the observed cohort prevalences. Θ̂ is the scaled area between two
//! such curves, with a plug-in variance, giving a normal-theory test and
//! confidence interval for the difference in restricted mean survival.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod comparators;
pub mod dataset;
pub mod error;
pub mod estimators;
pub mod io;
pub mod simulate;
pub mod stats;
pub mod stepfn;
pub mod theta;

pub use comparators::{gehan_wilcoxon, log_rank, RankTest, RankTestReport};
pub use dataset::{Dataset, Observation, Population, Subject};
pub use error::{Error, Result};
pub use estimators::{
    censoring_km, km_estimate, pooled_cohort_km, prevalence_weighted_km, weighted_survival,
    SurvivalCurve,
};
pub use stepfn::{Knot, StepFunction};
pub use theta::{
    sigma2_estimate, theta_statistic, theta_test, theta_test_with, Horizon, ThetaAnalysis,
    ThetaReport,
};
