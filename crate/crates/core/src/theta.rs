//! The area-between-curves statistic Θ̂, its variance estimate and the
//! resulting asymptotic test.
//!
//! With `θ̂^(i)` the prevalence-weighted curve of population `i`,
//!
//! ```text
//! Θ̂ = sqrt(n1 n2 / (n1 + n2)) · Σ_z ∫_0^{τ_z} (q̂1_z Ŝ1_z(t) − q̂2_z Ŝ2_z(t)) dt
//! ```
//!
//! which is asymptotically `N(0, σ²)` when both populations share the same
//! marginal survival. [`Horizon::Common`] replaces every `τ_z` by `min_z τ_z`.
//!
//! The variance estimate combines a multinomial term for the prevalence
//! weights with a Stieltjes sum over the jumps of each pooled cohort curve:
//!
//! ```text
//! σ̂² = Σ_i (1 − p_i) [Σ_z q̂i_z φ̂_z² − (Σ_z q̂i_z φ̂_z)²]
//!      − Σ_z Σ_{t ≤ τ_z} ΔŜ_z(t) Ŵ_z(t) (φ̂_z(t) / Ŝ_z(t))²
//! ```

use serde::{Deserialize, Serialize};

use crate::dataset::{Dataset, Population};
use crate::error::{Error, Result};
use crate::estimators::{censoring_km, km_estimate, pooled_cohort_km, SurvivalCurve};
use crate::stats::{normal_quantile, two_sided_p};
use crate::stepfn::StepFunction;

/// Upper integration limit used for each cohort.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Horizon {
    /// Cohort `z` contributes on `[0, τ_z]`.
    #[default]
    PerCohort,
    /// Every cohort contributes on `[0, min_z τ_z]`.
    Common,
}

#[derive(Debug, Clone, Serialize)]
pub struct CohortDiagnostics {
    pub label: String,
    /// Support horizon `τ_z`.
    pub tau: f64,
    /// Upper limit actually used for this cohort.
    pub horizon: f64,
    pub q1: f64,
    pub q2: f64,
    pub phi: f64,
    pub n1: usize,
    pub n2: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct ThetaReport {
    pub theta: f64,
    pub sigma2: f64,
    pub ci_lower: f64,
    pub ci_upper: f64,
    pub alpha: f64,
    pub p_value: f64,
    /// `min_z τ_z`.
    pub tau: f64,
    pub horizon: Horizon,
    pub n1: usize,
    pub n2: usize,
    pub p1: f64,
    pub p2: f64,
    pub cohorts: Vec<CohortDiagnostics>,
}

impl ThetaReport {
    pub fn z_score(&self) -> f64 {
        self.theta / self.sigma2.sqrt()
    }

    pub fn rejects(&self) -> bool {
        self.p_value < self.alpha
    }
}

/// Per-dataset cache of every curve the statistic and its variance need.
#[derive(Debug, Clone)]
pub struct ThetaAnalysis<'a> {
    ds: &'a Dataset,
    horizon: Horizon,
    n: [usize; 2],
    p: [f64; 2],
    q: [Vec<f64>; 2],
    tau_z: Vec<f64>,
    tau: f64,
    cell_km: [Vec<SurvivalCurve>; 2],
    cell_censoring: [Vec<SurvivalCurve>; 2],
    pooled: Vec<SurvivalCurve>,
}

impl<'a> ThetaAnalysis<'a> {
    pub fn new(ds: &'a Dataset, horizon: Horizon) -> Result<Self> {
        let d = ds.num_cohorts();
        let n = [ds.n(Population::One), ds.n(Population::Two)];
        let total = (n[0] + n[1]) as f64;
        let p = [n[0] as f64 / total, n[1] as f64 / total];
        let q = [
            ds.prevalence(Population::One)?,
            ds.prevalence(Population::Two)?,
        ];
        let tau_z = (0..d).map(|z| ds.tau_z(z)).collect::<Result<Vec<_>>>()?;
        let tau = tau_z.iter().copied().fold(f64::INFINITY, f64::min);

        let per_cell = |pop: Population, f: fn(&[crate::Subject]) -> Result<SurvivalCurve>| {
            (0..d)
                .map(|z| f(ds.cell(pop, z)?))
                .collect::<Result<Vec<_>>>()
        };
        let cell_km = [
            per_cell(Population::One, km_estimate)?,
            per_cell(Population::Two, km_estimate)?,
        ];
        let cell_censoring = [
            per_cell(Population::One, censoring_km)?,
            per_cell(Population::Two, censoring_km)?,
        ];
        let pooled = (0..d)
            .map(|z| pooled_cohort_km(ds, z))
            .collect::<Result<Vec<_>>>()?;

        Ok(ThetaAnalysis {
            ds,
            horizon,
            n,
            p,
            q,
            tau_z,
            tau,
            cell_km,
            cell_censoring,
            pooled,
        })
    }

    pub fn dataset(&self) -> &Dataset {
        self.ds
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn tau_z(&self, cohort: usize) -> f64 {
        self.tau_z[cohort]
    }

    /// Upper limit used for cohort `z` under the configured horizon.
    pub fn limit(&self, cohort: usize) -> f64 {
        match self.horizon {
            Horizon::PerCohort => self.tau_z[cohort],
            Horizon::Common => self.tau,
        }
    }

    fn max_limit(&self) -> f64 {
        (0..self.tau_z.len())
            .map(|z| self.limit(z))
            .fold(0.0, f64::max)
    }

    pub fn population_fraction(&self, pop: Population) -> f64 {
        self.p[pop.index()]
    }

    pub fn prevalence(&self, pop: Population) -> &[f64] {
        &self.q[pop.index()]
    }

    pub fn cohort_curve(&self, pop: Population, cohort: usize) -> &SurvivalCurve {
        &self.cell_km[pop.index()][cohort]
    }

    pub fn censoring_curve(&self, pop: Population, cohort: usize) -> &SurvivalCurve {
        &self.cell_censoring[pop.index()][cohort]
    }

    pub fn pooled_curve(&self, cohort: usize) -> &SurvivalCurve {
        &self.pooled[cohort]
    }

    /// `θ̂^(i)` with each cohort term set to zero past its integration limit.
    pub fn truncated_population_curve(&self, pop: Population) -> Result<StepFunction> {
        let curves = (0..self.tau_z.len())
            .map(|z| self.cell_km[pop.index()][z].surv.truncate(self.limit(z)))
            .collect::<Result<Vec<_>>>()?;
        let refs: Vec<&StepFunction> = curves.iter().collect();
        StepFunction::linear_combine(&self.q[pop.index()], &refs)
    }

    /// `sqrt(n1 n2 / (n1 + n2))`.
    pub fn scale(&self) -> f64 {
        let (n1, n2) = (self.n[0] as f64, self.n[1] as f64);
        (n1 * n2 / (n1 + n2)).sqrt()
    }

    pub fn statistic(&self) -> Result<f64> {
        let diff = self
            .truncated_population_curve(Population::One)?
            .difference(&self.truncated_population_curve(Population::Two)?);
        Ok(self.scale() * diff.integrate(0.0, self.max_limit())?)
    }

    /// `φ̂_z(t)` on the pooled curve of cohort `z`, up to the cohort's limit.
    pub fn phi(&self, cohort: usize, t: f64) -> Result<f64> {
        crate::estimators::phi_integral(&self.pooled[cohort], t, self.limit(cohort))
    }

    /// Censoring and prevalence weight `Ŵ_z(t)`, using left limits of the two
    /// censoring curves.
    pub fn weight(&self, cohort: usize, t: f64) -> Result<f64> {
        let limit = self.limit(cohort);
        if !(t > 0.0) || t > limit {
            return Err(Error::domain(format!(
                "weight for cohort {} requested at t = {t}, outside (0, {limit}]",
                self.ds.cohorts()[cohort]
            )));
        }
        let c1 = self.cell_censoring[0][cohort].eval_left(t)?;
        let c2 = self.cell_censoring[1][cohort].eval_left(t)?;
        if !(c1 > 0.0 && c2 > 0.0) {
            return Err(Error::invariant(format!(
                "censoring curve of cohort {} vanishes before t = {t}",
                self.ds.cohorts()[cohort]
            )));
        }
        let (p1, p2) = (self.p[0], self.p[1]);
        let (q1, q2) = (self.q[0][cohort], self.q[1][cohort]);
        Ok((p1 * c1 * q2 + p2 * c2 * q1) / (c1 * c2))
    }

    /// Multinomial part of `σ̂²` (the prevalence-weight variance).
    pub fn prevalence_term(&self) -> Result<f64> {
        let d = self.tau_z.len();
        let phis = (0..d)
            .map(|z| self.phi(z, 0.0))
            .collect::<Result<Vec<_>>>()?;
        let mut total = 0.0;
        for pop in Population::BOTH {
            let q = &self.q[pop.index()];
            let second: f64 = q.iter().zip(&phis).map(|(q, f)| q * f * f).sum();
            let first: f64 = q.iter().zip(&phis).map(|(q, f)| q * f).sum();
            total += (1.0 - self.p[pop.index()]) * (second - first * first);
        }
        Ok(total)
    }

    /// `∫_(0, limit] dŜ_z Ŵ_z (φ̂_z / Ŝ_z)²` for one cohort. Non-positive.
    pub fn stieltjes_term(&self, cohort: usize) -> Result<f64> {
        let curve = &self.pooled[cohort];
        let limit = self.limit(cohort);
        curve.surv.stieltjes_sum_until(limit, |t| {
            let s = curve.eval(t)?;
            let phi = self.phi(cohort, t)?;
            let ratio = if s > 0.0 {
                phi / s
            } else if phi == 0.0 {
                0.0
            } else {
                return Err(Error::invariant(format!(
                    "pooled curve of cohort {} reaches zero at t = {t} with remaining area {phi}",
                    self.ds.cohorts()[cohort]
                )));
            };
            Ok(self.weight(cohort, t)? * ratio * ratio)
        })
    }

    pub fn sigma2(&self) -> Result<f64> {
        let mut total = self.prevalence_term()?;
        // fixed cohort order keeps the sum reproducible
        for z in 0..self.tau_z.len() {
            total -= self.stieltjes_term(z)?;
        }
        if !(total > 0.0) {
            return Err(Error::degenerate(format!(
                "variance estimate is {total}; the data carry no events inside the horizon"
            )));
        }
        Ok(total)
    }

    pub fn report(&self, alpha: f64) -> Result<ThetaReport> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::domain(format!(
                "alpha must lie in (0, 1), got {alpha}"
            )));
        }
        let theta = self.statistic()?;
        let sigma2 = self.sigma2()?;
        let sigma = sigma2.sqrt();
        let z_crit = normal_quantile(1.0 - alpha / 2.0)?;
        let cohorts = (0..self.tau_z.len())
            .map(|z| {
                Ok(CohortDiagnostics {
                    label: self.ds.cohorts()[z].clone(),
                    tau: self.tau_z[z],
                    horizon: self.limit(z),
                    q1: self.q[0][z],
                    q2: self.q[1][z],
                    phi: self.phi(z, 0.0)?,
                    n1: self.ds.n_cell(Population::One, z),
                    n2: self.ds.n_cell(Population::Two, z),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(ThetaReport {
            theta,
            sigma2,
            ci_lower: theta - z_crit * sigma,
            ci_upper: theta + z_crit * sigma,
            alpha,
            p_value: two_sided_p(theta / sigma),
            tau: self.tau,
            horizon: self.horizon,
            n1: self.n[0],
            n2: self.n[1],
            p1: self.p[0],
            p2: self.p[1],
            cohorts,
        })
    }
}

/// Θ̂ with the default per-cohort horizon.
pub fn theta_statistic(ds: &Dataset) -> Result<f64> {
    ThetaAnalysis::new(ds, Horizon::default())?.statistic()
}

/// `Ŵ_z(t)` with the default per-cohort horizon.
pub fn weight_w(ds: &Dataset, cohort: usize, t: f64) -> Result<f64> {
    ThetaAnalysis::new(ds, Horizon::default())?.weight(cohort, t)
}

/// `σ̂²` with the default per-cohort horizon.
pub fn sigma2_estimate(ds: &Dataset) -> Result<f64> {
    ThetaAnalysis::new(ds, Horizon::default())?.sigma2()
}

/// Full two-sided test of `θ^(1) = θ^(2)` at level `alpha`.
pub fn theta_test(ds: &Dataset, alpha: f64) -> Result<ThetaReport> {
    theta_test_with(ds, alpha, Horizon::default())
}

pub fn theta_test_with(ds: &Dataset, alpha: f64, horizon: Horizon) -> Result<ThetaReport> {
    ThetaAnalysis::new(ds, horizon)?.report(alpha)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Observation;

    fn sample_a() -> Vec<(f64, bool, &'static str)> {
        vec![
            (2.0, true, "x"),
            (3.0, false, "x"),
            (5.0, true, "x"),
            (8.0, true, "y"),
            (9.0, false, "y"),
            (4.0, true, "y"),
            (6.5, true, "x"),
        ]
    }

    fn build(pop1: &[(f64, bool, &str)], pop2: &[(f64, bool, &str)]) -> Dataset {
        let mut raw = Vec::new();
        for &(t, e, z) in pop1 {
            raw.push(Observation::new(t, e, z, 1));
        }
        for &(t, e, z) in pop2 {
            raw.push(Observation::new(t, e, z, 2));
        }
        Dataset::validate(raw).unwrap()
    }

    #[test]
    fn identical_populations_give_zero() {
        let a = sample_a();
        let ds = build(&a, &a);
        assert_eq!(theta_statistic(&ds).unwrap(), 0.0);
        let report = theta_test(&ds, 0.05).unwrap();
        assert_eq!(report.p_value, 1.0);
        assert!(report.ci_lower < 0.0 && report.ci_upper > 0.0);
    }

    #[test]
    fn weight_without_censoring() {
        let pop1 = [(1.0, true, "x"), (2.0, true, "x"), (3.0, true, "y")];
        let pop2 = [
            (1.5, true, "x"),
            (2.5, true, "y"),
            (3.5, true, "y"),
            (0.5, true, "y"),
        ];
        let ds = build(&pop1, &pop2);
        let (p1, p2) = (3.0 / 7.0, 4.0 / 7.0);
        let (q1x, q2x) = (2.0 / 3.0, 1.0 / 4.0);
        let w = weight_w(&ds, 0, 1.0).unwrap();
        assert!((w - (p1 * q2x + p2 * q1x)).abs() < 1e-15);

        let single = build(&[(1.0, true, "x"), (2.0, true, "x")], &[(1.5, true, "x")]);
        assert!((weight_w(&single, 0, 1.5).unwrap() - 1.0).abs() < 1e-15);
        assert!(weight_w(&single, 0, 0.0).is_err());
        assert!(weight_w(&single, 0, 1.6).is_err());
    }

    #[test]
    fn weight_with_symmetric_censoring() {
        // Both populations censor at 1 out of 3 at risk, so C(t-) = 2/3 for t > 1.
        let pop = [(1.0, false, "x"), (2.0, true, "x"), (3.0, true, "x")];
        let ds = build(&pop, &pop);
        let w = weight_w(&ds, 0, 2.0).unwrap();
        assert!((w - (0.5 + 0.5) / (2.0 / 3.0)).abs() < 1e-14);
    }

    #[test]
    fn single_cohort_prevalence_term_vanishes() {
        let pop1 = [(1.0, true, "x"), (2.0, false, "x"), (4.0, true, "x")];
        let pop2 = [(1.5, true, "x"), (3.0, true, "x")];
        let ds = build(&pop1, &pop2);
        let analysis = ThetaAnalysis::new(&ds, Horizon::PerCohort).unwrap();
        assert_eq!(analysis.prevalence_term().unwrap(), 0.0);
        let s2 = analysis.sigma2().unwrap();
        assert!((s2 + analysis.stieltjes_term(0).unwrap()).abs() < 1e-15);
    }

    #[test]
    fn no_events_is_degenerate() {
        let ds = build(&[(1.0, false, "x")], &[(2.0, false, "x")]);
        assert!(matches!(sigma2_estimate(&ds), Err(Error::Degenerate(_))));
    }

    #[test]
    fn swap_negates_theta() {
        let a = sample_a();
        let b = [
            (1.0, true, "x"),
            (4.0, false, "x"),
            (6.0, true, "y"),
            (7.0, true, "y"),
            (3.0, true, "x"),
        ];
        let ds = build(&a, &b);
        let fwd = theta_test(&ds, 0.05).unwrap();
        let rev = theta_test(&ds.swap_populations(), 0.05).unwrap();
        assert!((fwd.theta + rev.theta).abs() < 1e-12);
        assert!((fwd.sigma2 - rev.sigma2).abs() <= 1e-10 * fwd.sigma2);
    }

    #[test]
    fn alpha_controls_interval_width() {
        let a = sample_a();
        let b = [
            (1.0, true, "x"),
            (4.0, false, "x"),
            (6.0, true, "y"),
            (7.0, true, "y"),
        ];
        let ds = build(&a, &b);
        let r05 = theta_test(&ds, 0.05).unwrap();
        let r01 = theta_test(&ds, 0.01).unwrap();
        let sigma = r05.sigma2.sqrt();
        assert!((r01.ci_upper - r01.theta - 2.575_829_303_548_901 * sigma).abs() < 1e-8 * sigma);
        assert!((r05.ci_upper - r05.theta - 1.959_963_984_540_054 * sigma).abs() < 1e-8 * sigma);
        assert!(theta_test(&ds, 0.0).is_err());
        assert!(theta_test(&ds, 1.0).is_err());
    }

    #[test]
    fn common_horizon_uses_min_tau() {
        let a = sample_a();
        let b = [
            (1.0, true, "x"),
            (4.0, false, "x"),
            (6.0, true, "y"),
            (7.0, true, "y"),
        ];
        let ds = build(&a, &b);
        let per = ThetaAnalysis::new(&ds, Horizon::PerCohort).unwrap();
        let common = ThetaAnalysis::new(&ds, Horizon::Common).unwrap();
        assert_eq!(common.tau(), 4.0);
        assert_eq!(per.limit(1), 7.0);
        assert_eq!(common.limit(1), 4.0);
        let th1 = common.truncated_population_curve(Population::One).unwrap();
        let th2 = common.truncated_population_curve(Population::Two).unwrap();
        let direct = common.scale() * th1.difference(&th2).integrate(0.0, 4.0).unwrap();
        assert!((common.statistic().unwrap() - direct).abs() < 1e-12);
    }
}
