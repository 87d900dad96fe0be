//! Brute-force reference computations that share no code with the library.

use wkmsurv::{Dataset, Population, Subject};

/// Product-limit value at `t`, counting risk sets directly.
pub fn brute_km(subjects: &[Subject], t: f64) -> f64 {
    let mut times: Vec<f64> = subjects
        .iter()
        .filter(|s| s.event && s.time <= t)
        .map(|s| s.time)
        .collect();
    times.sort_by(f64::total_cmp);
    times.dedup();
    times
        .iter()
        .map(|&u| {
            let at_risk = subjects.iter().filter(|s| s.time >= u).count() as f64;
            let deaths = subjects.iter().filter(|s| s.event && s.time == u).count() as f64;
            1.0 - deaths / at_risk
        })
        .product()
}

/// Censoring-survival value at `t`; an event tied with a censoring leaves
/// the risk set first.
pub fn brute_censoring_km(subjects: &[Subject], t: f64) -> f64 {
    let mut times: Vec<f64> = subjects
        .iter()
        .filter(|s| !s.event && s.time <= t)
        .map(|s| s.time)
        .collect();
    times.sort_by(f64::total_cmp);
    times.dedup();
    times
        .iter()
        .map(|&u| {
            let at_risk = subjects
                .iter()
                .filter(|s| s.time > u || (s.time == u && !s.event))
                .count() as f64;
            let censored = subjects.iter().filter(|s| !s.event && s.time == u).count() as f64;
            1.0 - censored / at_risk
        })
        .product()
}

fn cells(ds: &Dataset) -> Vec<[Vec<Subject>; 2]> {
    ds.cohorts()
        .iter()
        .map(|label| {
            let pick = |pop: u8| {
                ds.observations()
                    .iter()
                    .filter(|o| &o.cohort == label && o.population == pop)
                    .map(|o| Subject {
                        time: o.time,
                        event: o.event,
                    })
                    .collect::<Vec<_>>()
            };
            [pick(1), pick(2)]
        })
        .collect()
}

fn cell_horizon(cell: &[Vec<Subject>; 2]) -> f64 {
    cell.iter()
        .map(|c| c.iter().map(|s| s.time).fold(0.0, f64::max))
        .fold(f64::INFINITY, f64::min)
}

/// Θ̂ by exact integration over the merged grid of every observed time,
/// each cohort integrated up to its own horizon.
pub fn grid_theta(ds: &Dataset) -> f64 {
    let cells = cells(ds);
    let n = [ds.n(Population::One) as f64, ds.n(Population::Two) as f64];
    let mut grid: Vec<f64> = ds.observations().iter().map(|o| o.time).collect();
    grid.push(0.0);
    grid.sort_by(f64::total_cmp);
    grid.dedup();
    let mut area = 0.0;
    for cell in &cells {
        let horizon = cell_horizon(cell);
        let q = [cell[0].len() as f64 / n[0], cell[1].len() as f64 / n[1]];
        for w in grid.windows(2) {
            let (a, b) = (w[0], w[1].min(horizon));
            if b <= a {
                continue;
            }
            let diff = q[0] * brute_km(&cell[0], a) - q[1] * brute_km(&cell[1], a);
            area += diff * (b - a);
        }
    }
    (n[0] * n[1] / (n[0] + n[1])).sqrt() * area
}

/// Variance estimate for a single cohort without censoring. The weight is
/// identically one and the prevalence term vanishes, leaving
/// `Σ_t -ΔS(t) (φ(t) / S(t))²` over pooled event times up to the horizon,
/// where `S` is the empirical survival and `φ(t) = ∫_t^τ S`.
pub fn uncensored_single_cohort_sigma2(group1: &[f64], group2: &[f64]) -> f64 {
    let horizon = group1
        .iter()
        .cloned()
        .fold(0.0, f64::max)
        .min(group2.iter().cloned().fold(0.0, f64::max));
    let pooled: Vec<f64> = group1.iter().chain(group2).cloned().collect();
    let total = pooled.len() as f64;
    let surv = |t: f64| pooled.iter().filter(|&&x| x > t).count() as f64 / total;
    let tail = |t: f64| {
        pooled
            .iter()
            .map(|&x| (x.min(horizon) - t).max(0.0))
            .sum::<f64>()
            / total
    };
    let mut times: Vec<f64> = pooled.iter().cloned().filter(|&t| t <= horizon).collect();
    times.sort_by(f64::total_cmp);
    times.dedup();
    times
        .iter()
        .map(|&t| {
            let before = pooled.iter().filter(|&&x| x >= t).count() as f64 / total;
            let after = surv(t);
            if after == 0.0 {
                return 0.0;
            }
            (before - after) * (tail(t) / after).powi(2)
        })
        .sum()
}

/// Gehan score without censoring: `Σ_{i ∈ 1, j ∈ 2} sign(T_j - T_i)`.
pub fn mann_whitney_score(group1: &[f64], group2: &[f64]) -> f64 {
    let mut u = 0.0;
    for &a in group1 {
        for &b in group2 {
            u += if b > a {
                1.0
            } else if b < a {
                -1.0
            } else {
                0.0
            };
        }
    }
    u
}

/// Hypergeometric variance of the Gehan score, from direct risk-set counts.
pub fn gehan_variance(group1: &[f64], group2: &[f64]) -> f64 {
    let mut times: Vec<f64> = group1.iter().chain(group2).cloned().collect();
    times.sort_by(f64::total_cmp);
    times.dedup();
    times
        .iter()
        .map(|&t| {
            let r1 = group1.iter().filter(|&&x| x >= t).count() as f64;
            let r = r1 + group2.iter().filter(|&&x| x >= t).count() as f64;
            let d = group1.iter().chain(group2).filter(|&&x| x == t).count() as f64;
            if r < 2.0 {
                return 0.0;
            }
            r * r * d * (r1 / r) * (1.0 - r1 / r) * (r - d) / (r - 1.0)
        })
        .sum()
}

/// The five-subject sample 1, 2+, 3, 4+, 5 (`+` = censored).
pub fn worked_example() -> Vec<Subject> {
    vec![
        Subject::event(1.0),
        Subject::censored(2.0),
        Subject::event(3.0),
        Subject::censored(4.0),
        Subject::event(5.0),
    ]
}
