//! Seedable Monte-Carlo experiments: power against an exponential/Weibull
//! admixture, Type-I calibration by resampling a real population, the
//! sampling distribution of Θ̂, and the variance/MSE of the weighted
//! estimator against plain Kaplan-Meier.
//!
//! Every replicate draws from its own ChaCha8 stream (`seed_from_u64(seed)`
//! followed by `set_stream(id)`), so results do not depend on how rayon
//! schedules the work. Aggregation happens after collection, in replicate
//! order.

use rand::seq::index;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma;

use crate::comparators::{gehan_wilcoxon, log_rank};
use crate::dataset::{Dataset, Observation, Population, Subject};
use crate::error::{Error, Result};
use crate::estimators::{km_estimate, prevalence_weighted_km};
use crate::stats::{ks_statistic, mean_var, normal_cdf};
use crate::theta::{theta_test, theta_test_with, Horizon};

pub const RNG_IDENTITY: &str =
    "ChaCha8Rng (rand_chacha 0.9): seed_from_u64(seed), set_stream((size_index << 32) | replicate)";

/// RNG for replicate `replicate` of the `size_index`-th sample size.
pub fn replicate_rng(seed: u64, size_index: usize, replicate: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((size_index as u64) << 32) | replicate as u64);
    rng
}

// Uniform on (0, 1].
fn open_unit<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    1.0 - rng.random::<f64>()
}

pub fn draw_exponential<R: Rng + ?Sized>(rate: f64, rng: &mut R) -> f64 {
    -open_unit(rng).ln() / rate
}

pub fn draw_weibull<R: Rng + ?Sized>(shape: f64, scale: f64, rng: &mut R) -> f64 {
    scale * (-open_unit(rng).ln()).powf(1.0 / shape)
}

/// `n` exponential lifetimes by inversion, `-ln(U) / rate`.
pub fn sample_exponential<R: Rng + ?Sized>(rate: f64, n: usize, rng: &mut R) -> Result<Vec<f64>> {
    if !(rate > 0.0) || !rate.is_finite() {
        return Err(Error::domain(format!("exponential rate {rate}")));
    }
    Ok((0..n).map(|_| draw_exponential(rate, rng)).collect())
}

/// `n` Weibull lifetimes by inversion, `scale · (-ln U)^(1/shape)`.
pub fn sample_weibull<R: Rng + ?Sized>(
    shape: f64,
    scale: f64,
    n: usize,
    rng: &mut R,
) -> Result<Vec<f64>> {
    if !(shape > 0.0 && scale > 0.0) || !shape.is_finite() || !scale.is_finite() {
        return Err(Error::domain(format!(
            "Weibull shape {shape}, scale {scale}"
        )));
    }
    Ok((0..n).map(|_| draw_weibull(shape, scale, rng)).collect())
}

pub fn weibull_mean(shape: f64, scale: f64) -> f64 {
    scale * gamma(1.0 + 1.0 / shape)
}

/// Admixture weight `q2` for which `(1 - q2)·exp2_mean + q2·weibull_mean`
/// equals `exp1_mean`.
pub fn equal_mean_q2(exp1_mean: f64, exp2_mean: f64, weibull_mean: f64) -> Result<f64> {
    let denom = weibull_mean - exp2_mean;
    if denom == 0.0 || !denom.is_finite() {
        return Err(Error::domain("component means must differ"));
    }
    Ok((exp1_mean - exp2_mean) / denom)
}

/// How cohort membership is drawn for a sample of size `n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Membership {
    /// Each subject independently belongs to cohort 2 with probability `q2`.
    #[default]
    Binomial,
    /// Exactly `round(n · q2)` subjects belong to cohort 2.
    Fixed,
}

/// Population 1 is exponential with `reference_rate`. Population 2 mixes an
/// exponential (`exp_rate`, cohort 1) with a Weibull (cohort 2) in
/// proportions `1 - q2 : q2`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixtureSpec {
    pub q2: f64,
    pub reference_rate: f64,
    pub exp_rate: f64,
    pub weibull_shape: f64,
    pub weibull_scale: f64,
    pub censor_time: Option<f64>,
    pub membership: Membership,
}

impl Default for MixtureSpec {
    fn default() -> Self {
        MixtureSpec {
            q2: 0.25,
            reference_rate: 0.25,
            exp_rate: 0.2,
            weibull_shape: 5.0,
            weibull_scale: 1.0,
            censor_time: None,
            membership: Membership::Binomial,
        }
    }
}

impl MixtureSpec {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.q2) {
            return Err(Error::domain(format!(
                "q2 must lie in [0, 1), got {}",
                self.q2
            )));
        }
        let positive = [
            ("reference_rate", self.reference_rate),
            ("exp_rate", self.exp_rate),
            ("weibull_shape", self.weibull_shape),
            ("weibull_scale", self.weibull_scale),
        ];
        for (name, v) in positive {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::domain(format!("{name} must be positive, got {v}")));
            }
        }
        if let Some(c) = self.censor_time {
            if !(c > 0.0) {
                return Err(Error::domain(format!(
                    "censor_time must be positive, got {c}"
                )));
            }
        }
        Ok(())
    }

    /// Survival function of the admixed population 2.
    pub fn true_survival(&self, t: f64) -> f64 {
        let exp = (-self.exp_rate * t).exp();
        let weib = (-(t / self.weibull_scale).powf(self.weibull_shape)).exp();
        (1.0 - self.q2) * exp + self.q2 * weib
    }

    fn cohort2_flags<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Vec<bool> {
        match self.membership {
            Membership::Binomial => (0..n).map(|_| rng.random::<f64>() < self.q2).collect(),
            Membership::Fixed => {
                let n2 = (n as f64 * self.q2).round() as usize;
                (0..n).map(|i| i >= n - n2).collect()
            }
        }
    }

    fn censor(&self, time: f64) -> Subject {
        match self.censor_time {
            Some(c) if time > c => Subject::censored(c),
            _ => Subject::event(time),
        }
    }

    /// `n` subjects of the admixed population, with component membership as
    /// the cohort (`false` = exponential, `true` = Weibull).
    pub fn draw_admixed<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Vec<(Subject, bool)> {
        self.cohort2_flags(n, rng)
            .into_iter()
            .map(|weibull| {
                let t = if weibull {
                    draw_weibull(self.weibull_shape, self.weibull_scale, rng)
                } else {
                    draw_exponential(self.exp_rate, rng)
                };
                (self.censor(t), weibull)
            })
            .collect()
    }

    /// `n` subjects of the homogeneous reference population. Cohort labels are
    /// drawn with the same membership rule; they carry no survival information.
    pub fn draw_reference<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Vec<(Subject, bool)> {
        self.cohort2_flags(n, rng)
            .into_iter()
            .map(|flag| {
                (
                    self.censor(draw_exponential(self.reference_rate, rng)),
                    flag,
                )
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Experiment {
    Power,
    Type1Resample,
    SamplingDistribution,
    EstimatorMse,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationSpec {
    pub experiment: Experiment,
    pub sizes: Vec<usize>,
    pub replicates: usize,
    pub alpha: f64,
    pub seed: u64,
}

impl SimulationSpec {
    pub fn validate(&self) -> Result<()> {
        if self.replicates == 0 {
            return Err(Error::domain("replicates must be at least 1"));
        }
        if self.sizes.is_empty() || self.sizes.contains(&0) {
            return Err(Error::domain("sample sizes must be non-empty and positive"));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::domain(format!(
                "alpha must lie in (0, 1), got {}",
                self.alpha
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Theta,
    LogRank,
    GehanWilcoxon,
}

pub const METHODS: [Method; 3] = [Method::Theta, Method::LogRank, Method::GehanWilcoxon];

#[derive(Debug, Clone, Serialize)]
pub struct MethodRate {
    pub method: Method,
    pub rejections: usize,
    pub rate: f64,
    /// Binomial Monte-Carlo standard error of `rate`.
    pub se: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SizeRates {
    pub n: usize,
    pub successes: usize,
    pub failures: usize,
    pub rates: Vec<MethodRate>,
    /// Per-replicate p-values `[theta, log_rank, gehan_wilcoxon]`, successful
    /// replicates only. Empty unless requested.
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub p_values: Vec<[f64; 3]>,
}

impl SizeRates {
    pub fn rate(&self, method: Method) -> &MethodRate {
        self.rates
            .iter()
            .find(|r| r.method == method)
            .expect("every method is reported")
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RunMetadata {
    pub rng: String,
    pub seed: u64,
    pub replicates: usize,
    pub alpha: f64,
    pub sizes: Vec<usize>,
}

impl RunMetadata {
    fn new(spec: &SimulationSpec) -> Self {
        RunMetadata {
            rng: RNG_IDENTITY.to_string(),
            seed: spec.seed,
            replicates: spec.replicates,
            alpha: spec.alpha,
            sizes: spec.sizes.clone(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct PowerResult {
    pub metadata: RunMetadata,
    pub mixture: MixtureSpec,
    pub sizes: Vec<SizeRates>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Type1Result {
    pub metadata: RunMetadata,
    pub population: u8,
    pub sizes: Vec<SizeRates>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SamplingResult {
    pub metadata: RunMetadata,
    pub population: u8,
    pub n: usize,
    pub failures: usize,
    pub thetas: Vec<f64>,
    /// `σ̂²` of the first successful replicate.
    pub reference_sigma2: f64,
    pub mean: f64,
    pub variance: f64,
    /// KS distance between `thetas` and `N(0, reference_sigma2)`.
    pub ks_statistic: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct PointwiseStats {
    pub mean: Vec<f64>,
    pub variance: Vec<f64>,
    pub mse: Vec<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct MseBySize {
    pub n: usize,
    pub weighted: PointwiseStats,
    pub kaplan_meier: PointwiseStats,
}

#[derive(Debug, Clone, Serialize)]
pub struct MseResult {
    pub metadata: RunMetadata,
    pub mixture: MixtureSpec,
    pub grid: Vec<f64>,
    pub truth: Vec<f64>,
    pub sizes: Vec<MseBySize>,
}

#[derive(Debug, Clone, Serialize)]
#[serde(tag = "experiment", rename_all = "snake_case")]
pub enum SimulationResult {
    Power(PowerResult),
    Type1Resample(Type1Result),
    SamplingDistribution(SamplingResult),
    EstimatorMse(MseResult),
}

// p-values of the three tests on one data set.
fn all_tests(ds: &Dataset) -> Result<[f64; 3]> {
    let theta = theta_test(ds, 0.05)?;
    let g1 = ds.population_subjects(Population::One);
    let g2 = ds.population_subjects(Population::Two);
    let lr = log_rank(&g1, &g2)?;
    let gw = gehan_wilcoxon(&g1, &g2)?;
    Ok([theta.p_value, lr.p_value, gw.p_value])
}

fn summarize(n: usize, outcomes: Vec<Result<[f64; 3]>>, alpha: f64, keep: bool) -> SizeRates {
    let p_values: Vec<[f64; 3]> = outcomes.into_iter().filter_map(|o| o.ok()).collect();
    let successes = p_values.len();
    let rates = METHODS
        .iter()
        .enumerate()
        .map(|(k, &method)| {
            let rejections = p_values.iter().filter(|p| p[k] < alpha).count();
            let rate = if successes > 0 {
                rejections as f64 / successes as f64
            } else {
                f64::NAN
            };
            MethodRate {
                method,
                rejections,
                rate,
                se: (rate * (1.0 - rate) / successes as f64).sqrt(),
            }
        })
        .collect();
    SizeRates {
        n,
        successes,
        failures: 0,
        rates,
        p_values: if keep { p_values } else { Vec::new() },
    }
}

fn with_failures(mut rates: SizeRates, total: usize) -> SizeRates {
    rates.failures = total - rates.successes;
    rates
}

fn labelled(pop: u8, members: &[(Subject, bool)]) -> impl Iterator<Item = Observation> + '_ {
    members
        .iter()
        .map(move |(s, flag)| Observation::new(s.time, s.event, if *flag { "2" } else { "1" }, pop))
}

/// Rejection rates of Θ̂, log-rank and Gehan-Wilcoxon for population 1
/// against the admixed population 2, `n` subjects each.
pub fn run_power_experiment(spec: &SimulationSpec, mix: &MixtureSpec) -> Result<PowerResult> {
    spec.validate()?;
    mix.validate()?;
    let sizes = spec
        .sizes
        .iter()
        .enumerate()
        .map(|(si, &n)| {
            let outcomes: Vec<Result<[f64; 3]>> = (0..spec.replicates)
                .into_par_iter()
                .map(|r| {
                    let mut rng = replicate_rng(spec.seed, si, r);
                    let pop1 = mix.draw_reference(n, &mut rng);
                    let pop2 = mix.draw_admixed(n, &mut rng);
                    let raw = labelled(1, &pop1).chain(labelled(2, &pop2)).collect();
                    all_tests(&Dataset::validate(raw)?)
                })
                .collect();
            with_failures(summarize(n, outcomes, spec.alpha, false), spec.replicates)
        })
        .collect();
    Ok(PowerResult {
        metadata: RunMetadata::new(spec),
        mixture: mix.clone(),
        sizes,
    })
}

// Random subset of `n` members; the first `n / 2` drawn are relabelled as
// population 2 and the rest as population 1.
fn resample_split<R: Rng + ?Sized>(
    members: &[Observation],
    n: usize,
    rng: &mut R,
) -> Result<Dataset> {
    let picked = index::sample(rng, members.len(), n).into_vec();
    let raw = picked
        .iter()
        .enumerate()
        .map(|(k, &i)| Observation {
            population: if k < n / 2 { 2 } else { 1 },
            ..members[i].clone()
        })
        .collect();
    Dataset::validate(raw)
}

fn members_of(ds: &Dataset, population: Population, sizes: &[usize]) -> Result<Vec<Observation>> {
    let members: Vec<Observation> = ds
        .observations()
        .iter()
        .filter(|o| o.population == population.label())
        .cloned()
        .collect();
    if let Some(&n) = sizes.iter().find(|&&n| n > members.len() || n < 2) {
        return Err(Error::domain(format!(
            "cannot split {n} of the {} members of population {} into two groups",
            members.len(),
            population.label()
        )));
    }
    Ok(members)
}

/// Type-I error by splitting random subsets of a single population in half.
pub fn run_type1_resample(
    ds: &Dataset,
    population: Population,
    spec: &SimulationSpec,
) -> Result<Type1Result> {
    spec.validate()?;
    let members = members_of(ds, population, &spec.sizes)?;
    let sizes = spec
        .sizes
        .iter()
        .enumerate()
        .map(|(si, &n)| {
            let outcomes: Vec<Result<[f64; 3]>> = (0..spec.replicates)
                .into_par_iter()
                .map(|r| {
                    let mut rng = replicate_rng(spec.seed, si, r);
                    all_tests(&resample_split(&members, n, &mut rng)?)
                })
                .collect();
            with_failures(summarize(n, outcomes, spec.alpha, true), spec.replicates)
        })
        .collect();
    Ok(Type1Result {
        metadata: RunMetadata::new(spec),
        population: population.label(),
        sizes,
    })
}

/// Null sampling distribution of Θ̂ at one subset size, compared with the
/// normal law implied by the first replicate's variance estimate.
pub fn run_sampling_distribution(
    ds: &Dataset,
    population: Population,
    spec: &SimulationSpec,
) -> Result<SamplingResult> {
    spec.validate()?;
    let &[n] = spec.sizes.as_slice() else {
        return Err(Error::domain(
            "the sampling-distribution experiment takes one size",
        ));
    };
    let members = members_of(ds, population, &spec.sizes)?;
    let outcomes: Vec<Result<(f64, f64)>> = (0..spec.replicates)
        .into_par_iter()
        .map(|r| {
            let mut rng = replicate_rng(spec.seed, 0, r);
            let split = resample_split(&members, n, &mut rng)?;
            let report = theta_test_with(&split, spec.alpha, Horizon::default())?;
            Ok((report.theta, report.sigma2))
        })
        .collect();
    let ok: Vec<(f64, f64)> = outcomes.into_iter().filter_map(|o| o.ok()).collect();
    let Some(&(_, reference_sigma2)) = ok.first() else {
        return Err(Error::degenerate("every replicate failed"));
    };
    let thetas: Vec<f64> = ok.iter().map(|(t, _)| *t).collect();
    let (mean, variance) = mean_var(&thetas);
    let sd = reference_sigma2.sqrt();
    let ks = ks_statistic(&thetas, |x| normal_cdf(x / sd));
    Ok(SamplingResult {
        metadata: RunMetadata::new(spec),
        population: population.label(),
        n,
        failures: spec.replicates - thetas.len(),
        thetas,
        reference_sigma2,
        mean,
        variance,
        ks_statistic: ks,
    })
}

fn pointwise(estimates: &[Vec<f64>], truth: &[f64]) -> PointwiseStats {
    let m = truth.len();
    let mut stats = PointwiseStats {
        mean: Vec::with_capacity(m),
        variance: Vec::with_capacity(m),
        mse: Vec::with_capacity(m),
    };
    for (g, &true_value) in truth.iter().enumerate() {
        let column: Vec<f64> = estimates.iter().map(|e| e[g]).collect();
        let (mean, var) = mean_var(&column);
        let mse =
            column.iter().map(|x| (x - true_value).powi(2)).sum::<f64>() / column.len() as f64;
        stats.mean.push(mean);
        stats.variance.push(var);
        stats.mse.push(mse);
    }
    stats
}

/// Pointwise variance and MSE of the prevalence-weighted estimator and of
/// plain Kaplan-Meier on samples of the admixed population.
pub fn run_estimator_mse(
    spec: &SimulationSpec,
    mix: &MixtureSpec,
    grid: &[f64],
) -> Result<MseResult> {
    spec.validate()?;
    mix.validate()?;
    if grid.iter().any(|t| !(*t >= 0.0) || !t.is_finite()) {
        return Err(Error::domain("time grid must be finite and non-negative"));
    }
    let truth: Vec<f64> = grid.iter().map(|&t| mix.true_survival(t)).collect();
    let sizes = spec
        .sizes
        .iter()
        .enumerate()
        .map(|(si, &n)| {
            let draws: Vec<(Vec<f64>, Vec<f64>)> = (0..spec.replicates)
                .into_par_iter()
                .map(|r| {
                    let mut rng = replicate_rng(spec.seed, si, r);
                    let sample = mix.draw_admixed(n, &mut rng);
                    let cohort = |flag: bool| -> Vec<Subject> {
                        sample
                            .iter()
                            .filter(|(_, f)| *f == flag)
                            .map(|(s, _)| *s)
                            .collect()
                    };
                    let (c1, c2) = (cohort(false), cohort(true));
                    let all: Vec<Subject> = sample.iter().map(|(s, _)| *s).collect();
                    let weighted = prevalence_weighted_km(&[&c1, &c2])?;
                    let km = km_estimate(&all)?.surv;
                    let eval = |f: &crate::StepFunction| {
                        grid.iter()
                            .map(|&t| f.eval(t))
                            .collect::<Result<Vec<f64>>>()
                    };
                    Ok((eval(&weighted)?, eval(&km)?))
                })
                .collect::<Result<Vec<_>>>()?;
            let (weighted, km): (Vec<Vec<f64>>, Vec<Vec<f64>>) = draws.into_iter().unzip();
            Ok(MseBySize {
                n,
                weighted: pointwise(&weighted, &truth),
                kaplan_meier: pointwise(&km, &truth),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(MseResult {
        metadata: RunMetadata::new(spec),
        mixture: mix.clone(),
        grid: grid.to_vec(),
        truth,
        sizes,
    })
}
