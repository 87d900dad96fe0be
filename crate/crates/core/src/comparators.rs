//! Two-sample weighted log-rank tests used as reference methods.

use serde::Serialize;

use crate::dataset::Subject;
use crate::error::{Error, Result};
use crate::stats::two_sided_p;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RankTest {
    LogRank,
    GehanWilcoxon,
}

/// `statistic` is the standardized score `Z = U / sqrt(V)`; positive when
/// group 1 has more events than expected under the null.
#[derive(Debug, Clone, Serialize)]
pub struct RankTestReport {
    pub method: RankTest,
    pub statistic: f64,
    pub p_value: f64,
}

impl RankTestReport {
    pub fn rejects(&self, alpha: f64) -> bool {
        self.p_value < alpha
    }
}

/// Weighted log-rank score and hypergeometric variance with weights
/// `w(at_risk_total)` at each distinct event time.
fn weighted_log_rank<W>(group1: &[Subject], group2: &[Subject], weight: W) -> Result<(f64, f64)>
where
    W: Fn(usize) -> f64,
{
    if group1.is_empty() || group2.is_empty() {
        return Err(Error::domain("both groups must be non-empty"));
    }
    let mut all: Vec<(f64, bool, bool)> = group1
        .iter()
        .map(|s| (s.time, s.event, true))
        .chain(group2.iter().map(|s| (s.time, s.event, false)))
        .collect();
    if all.iter().any(|(t, _, _)| !(*t > 0.0) || !t.is_finite()) {
        return Err(Error::domain("observation times must be positive"));
    }
    if !all.iter().any(|(_, e, _)| *e) {
        return Err(Error::degenerate("no events in either group"));
    }
    all.sort_by(|a, b| a.0.total_cmp(&b.0));

    let mut at_risk = all.len();
    let mut at_risk1 = group1.len();
    let (mut score, mut variance) = (0.0, 0.0);
    for tied in all.chunk_by(|a, b| a.0 == b.0) {
        let deaths = tied.iter().filter(|o| o.1).count();
        let deaths1 = tied.iter().filter(|o| o.1 && o.2).count();
        if deaths > 0 {
            let (r, r1, d) = (at_risk as f64, at_risk1 as f64, deaths as f64);
            let w = weight(at_risk);
            let frac = r1 / r;
            score += w * (deaths1 as f64 - d * frac);
            if at_risk > 1 {
                variance += w * w * d * frac * (1.0 - frac) * (r - d) / (r - 1.0);
            }
        }
        at_risk -= tied.len();
        at_risk1 -= tied.iter().filter(|o| o.2).count();
    }
    Ok((score, variance))
}

fn finish(method: RankTest, (score, variance): (f64, f64)) -> Result<RankTestReport> {
    if !(variance > 0.0) {
        if score == 0.0 {
            return Ok(RankTestReport {
                method,
                statistic: 0.0,
                p_value: 1.0,
            });
        }
        return Err(Error::degenerate("rank test variance is zero"));
    }
    let z = score / variance.sqrt();
    Ok(RankTestReport {
        method,
        statistic: z,
        p_value: two_sided_p(z),
    })
}

/// Two-group log-rank test.
pub fn log_rank(group1: &[Subject], group2: &[Subject]) -> Result<RankTestReport> {
    finish(
        RankTest::LogRank,
        weighted_log_rank(group1, group2, |_| 1.0)?,
    )
}

/// Gehan-Breslow generalized Wilcoxon test: log-rank weighted by the total
/// number at risk.
pub fn gehan_wilcoxon(group1: &[Subject], group2: &[Subject]) -> Result<RankTestReport> {
    finish(
        RankTest::GehanWilcoxon,
        weighted_log_rank(group1, group2, |r| r as f64)?,
    )
}
