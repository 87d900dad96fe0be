//! Right-continuous piecewise-constant functions on `[0, ∞)`.
//!
//! A [`StepFunction`] holds an initial value on `[0, t_1)` and a value on each
//! `[t_i, t_{i+1})`, the last one extending to infinity. Every survival curve in
//! this crate is one of these, which makes the integrals behind the test
//! statistic and its variance finite sums.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "StepFunctionRepr", into = "StepFunctionRepr")]
pub struct StepFunction {
    initial: f64,
    knots: Vec<f64>,
    values: Vec<f64>,
}

/// One `(t, value)` pair of the JSON form.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Knot {
    pub t: f64,
    pub value: f64,
}

#[derive(Serialize, Deserialize)]
struct StepFunctionRepr {
    initial_value: f64,
    knots: Vec<Knot>,
}

impl TryFrom<StepFunctionRepr> for StepFunction {
    type Error = Error;

    fn try_from(repr: StepFunctionRepr) -> Result<Self> {
        let (knots, values) = repr.knots.iter().map(|k| (k.t, k.value)).unzip();
        StepFunction::new(repr.initial_value, knots, values)
    }
}

impl From<StepFunction> for StepFunctionRepr {
    fn from(f: StepFunction) -> Self {
        StepFunctionRepr {
            initial_value: f.initial,
            knots: f.knot_pairs().collect(),
        }
    }
}

impl StepFunction {
    /// Builds a step function, checking that knots are finite, non-negative and
    /// strictly increasing and that there is one value per knot.
    pub fn new(initial: f64, knots: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if knots.len() != values.len() {
            return Err(Error::domain(format!(
                "{} knots but {} values",
                knots.len(),
                values.len()
            )));
        }
        if !initial.is_finite() || values.iter().any(|v| !v.is_finite()) {
            return Err(Error::domain("step function values must be finite"));
        }
        if knots.iter().any(|t| !t.is_finite() || *t < 0.0) {
            return Err(Error::domain("knots must be finite and non-negative"));
        }
        if knots.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::domain("knots must be strictly increasing"));
        }
        Ok(StepFunction {
            initial,
            knots,
            values,
        })
    }

    pub fn constant(value: f64) -> Self {
        StepFunction {
            initial: value,
            knots: Vec::new(),
            values: Vec::new(),
        }
    }

    pub fn initial_value(&self) -> f64 {
        self.initial
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn knot_pairs(&self) -> impl Iterator<Item = Knot> + '_ {
        self.knots
            .iter()
            .zip(&self.values)
            .map(|(&t, &value)| Knot { t, value })
    }

    /// Value at the last knot, or the initial value if there are none.
    pub fn final_value(&self) -> f64 {
        self.values.last().copied().unwrap_or(self.initial)
    }

    // Index of the greatest knot <= t, if any.
    fn index_at(&self, t: f64) -> Option<usize> {
        self.knots.partition_point(|&k| k <= t).checked_sub(1)
    }

    fn value_at_index(&self, idx: Option<usize>) -> f64 {
        idx.map_or(self.initial, |i| self.values[i])
    }

    /// Right-continuous evaluation `f(t)`.
    pub fn eval(&self, t: f64) -> Result<f64> {
        if !(t >= 0.0) {
            return Err(Error::domain(format!("cannot evaluate at t = {t}")));
        }
        Ok(self.value_at_index(self.index_at(t)))
    }

    /// Left limit `f(t-)`.
    pub fn eval_left(&self, t: f64) -> Result<f64> {
        if !(t > 0.0) {
            return Err(Error::domain(format!("left limit undefined at t = {t}")));
        }
        let idx = self.knots.partition_point(|&k| k < t).checked_sub(1);
        Ok(self.value_at_index(idx))
    }

    /// `Σ coeffs[i] · fs[i]` on the union of the input knots. Equal knot times
    /// are merged by exact comparison.
    pub fn linear_combine(coeffs: &[f64], fs: &[&StepFunction]) -> Result<StepFunction> {
        if coeffs.is_empty() || coeffs.len() != fs.len() {
            return Err(Error::domain(format!(
                "linear_combine needs matching non-empty inputs, got {} coefficients and {} functions",
                coeffs.len(),
                fs.len()
            )));
        }
        let mut knots: Vec<f64> = fs.iter().flat_map(|f| f.knots.iter().copied()).collect();
        knots.sort_by(f64::total_cmp);
        knots.dedup();

        let combine = |vals: &mut dyn Iterator<Item = f64>| -> f64 {
            coeffs.iter().zip(vals).map(|(c, v)| c * v).sum()
        };
        let initial = combine(&mut fs.iter().map(|f| f.initial));

        // One cursor per input; knots are visited in increasing order.
        let mut cursors = vec![0usize; fs.len()];
        let mut values = Vec::with_capacity(knots.len());
        for &t in &knots {
            let mut current = fs.iter().zip(cursors.iter_mut()).map(|(f, c)| {
                while *c < f.knots.len() && f.knots[*c] <= t {
                    *c += 1;
                }
                f.value_at_index(c.checked_sub(1))
            });
            values.push(combine(&mut current));
        }
        Ok(StepFunction {
            initial,
            knots,
            values,
        })
    }

    /// `self - other`.
    pub fn difference(&self, other: &StepFunction) -> StepFunction {
        StepFunction::linear_combine(&[1.0, -1.0], &[self, other])
            .expect("two inputs, two coefficients")
    }

    /// Copy of `self` that is zero on `[at, ∞)`.
    pub fn truncate(&self, at: f64) -> Result<StepFunction> {
        if !(at >= 0.0) || !at.is_finite() {
            return Err(Error::domain(format!("cannot truncate at {at}")));
        }
        let keep = self.knots.partition_point(|&k| k < at);
        let mut knots = self.knots[..keep].to_vec();
        let mut values = self.values[..keep].to_vec();
        if at == 0.0 {
            return Ok(StepFunction::constant(0.0));
        }
        knots.push(at);
        values.push(0.0);
        Ok(StepFunction {
            initial: self.initial,
            knots,
            values,
        })
    }

    /// Multiplies every knot time by `factor > 0`.
    pub fn rescale_time(&self, factor: f64) -> Result<StepFunction> {
        if !(factor > 0.0) || !factor.is_finite() {
            return Err(Error::domain(format!("time scale factor {factor}")));
        }
        StepFunction::new(
            self.initial,
            self.knots.iter().map(|t| t * factor).collect(),
            self.values.clone(),
        )
    }

    /// Exact integral over `[a, b]`.
    pub fn integrate(&self, a: f64, b: f64) -> Result<f64> {
        if !(a >= 0.0) || !(b >= a) || !b.is_finite() {
            return Err(Error::domain(format!("cannot integrate over [{a}, {b}]")));
        }
        if a == b {
            return Ok(0.0);
        }
        let mut idx = self.index_at(a);
        let mut left = a;
        let mut total = 0.0;
        loop {
            let next = match idx {
                None => 0,
                Some(i) => i + 1,
            };
            let right = self
                .knots
                .get(next)
                .copied()
                .unwrap_or(f64::INFINITY)
                .min(b);
            total += self.value_at_index(idx) * (right - left);
            if right >= b {
                break;
            }
            left = right;
            idx = Some(next);
        }
        Ok(total)
    }

    /// Jump times with their signed jump sizes `f(t) - f(t-)`.
    pub fn jumps(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.knots.iter().enumerate().map(move |(i, &t)| {
            let before = if i == 0 {
                self.initial
            } else {
                self.values[i - 1]
            };
            (t, self.values[i] - before)
        })
    }

    /// `∫ h df` over the jump measure of `self`.
    pub fn stieltjes_sum<H>(&self, h: H) -> Result<f64>
    where
        H: FnMut(f64) -> Result<f64>,
    {
        self.stieltjes_sum_until(f64::INFINITY, h)
    }

    /// `∫_(0, upper] h df`: like [`stieltjes_sum`](Self::stieltjes_sum) but only
    /// jumps at times `<= upper` contribute. A knot at `t = 0` carries no mass
    /// on `(0, upper]` and is skipped.
    pub fn stieltjes_sum_until<H>(&self, upper: f64, mut h: H) -> Result<f64>
    where
        H: FnMut(f64) -> Result<f64>,
    {
        let mut total = 0.0;
        for (t, jump) in self.jumps() {
            if t > upper {
                break;
            }
            if t == 0.0 || jump == 0.0 {
                continue;
            }
            total += jump * h(t)?;
        }
        Ok(total)
    }
}
