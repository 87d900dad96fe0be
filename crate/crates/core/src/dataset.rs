//! Right-censored, cohort-stratified observations from two populations.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One of the two compared populations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Population {
    #[serde(rename = "1")]
    One,
    #[serde(rename = "2")]
    Two,
}

impl Population {
    pub const BOTH: [Population; 2] = [Population::One, Population::Two];

    pub fn from_label(label: u8) -> Option<Population> {
        match label {
            1 => Some(Population::One),
            2 => Some(Population::Two),
            _ => None,
        }
    }

    pub fn label(self) -> u8 {
        match self {
            Population::One => 1,
            Population::Two => 2,
        }
    }

    pub fn index(self) -> usize {
        self.label() as usize - 1
    }

    pub fn other(self) -> Population {
        match self {
            Population::One => Population::Two,
            Population::Two => Population::One,
        }
    }
}

/// A (time, event) pair; `event == false` means right-censored at `time`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Subject {
    pub time: f64,
    pub event: bool,
}

impl Subject {
    pub fn event(time: f64) -> Self {
        Subject { time, event: true }
    }

    pub fn censored(time: f64) -> Self {
        Subject { time, event: false }
    }
}

/// A raw input record. `population` must be 1 or 2; `cohort` is an opaque label.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    pub time: f64,
    pub event: bool,
    pub cohort: String,
    pub population: u8,
}

impl Observation {
    pub fn new(time: f64, event: bool, cohort: impl Into<String>, population: u8) -> Self {
        Observation {
            time,
            event,
            cohort: cohort.into(),
            population,
        }
    }
}

/// Validated data set. Cohorts are indexed `0..d` in order of first appearance.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    observations: Vec<Observation>,
    cohorts: Vec<String>,
    // cells[population][cohort]
    cells: [Vec<Vec<Subject>>; 2],
}

impl Dataset {
    pub fn validate(raw: Vec<Observation>) -> Result<Dataset> {
        if raw.is_empty() {
            return Err(Error::Validation {
                message: "no observations".into(),
                cohorts: vec![],
            });
        }
        let mut cohorts: Vec<String> = Vec::new();
        let mut index: HashMap<&str, usize> = HashMap::new();
        let mut assignments = Vec::with_capacity(raw.len());
        for (row, obs) in raw.iter().enumerate() {
            if !(obs.time > 0.0) || !obs.time.is_finite() {
                return Err(Error::Validation {
                    message: format!("observation {}: time {} is not positive", row + 1, obs.time),
                    cohorts: vec![],
                });
            }
            let pop = Population::from_label(obs.population).ok_or_else(|| Error::Validation {
                message: format!(
                    "observation {}: unknown population {}",
                    row + 1,
                    obs.population
                ),
                cohorts: vec![],
            })?;
            let z = *index.entry(obs.cohort.as_str()).or_insert_with(|| {
                cohorts.push(obs.cohort.clone());
                cohorts.len() - 1
            });
            assignments.push((pop, z));
        }

        let d = cohorts.len();
        let mut cells = [vec![Vec::new(); d], vec![Vec::new(); d]];
        for (obs, (pop, z)) in raw.iter().zip(assignments) {
            cells[pop.index()][z].push(Subject {
                time: obs.time,
                event: obs.event,
            });
        }

        let unbalanced: Vec<String> = (0..d)
            .filter(|&z| cells[0][z].is_empty() || cells[1][z].is_empty())
            .map(|z| cohorts[z].clone())
            .collect();
        if !unbalanced.is_empty() {
            return Err(Error::Validation {
                message: format!(
                    "cohorts without members in both populations: {}",
                    unbalanced.join(", ")
                ),
                cohorts: unbalanced,
            });
        }

        Ok(Dataset {
            observations: raw,
            cohorts,
            cells,
        })
    }

    pub fn observations(&self) -> &[Observation] {
        &self.observations
    }

    /// Cohort labels in index order.
    pub fn cohorts(&self) -> &[String] {
        &self.cohorts
    }

    /// Number of cohorts `d`.
    pub fn num_cohorts(&self) -> usize {
        self.cohorts.len()
    }

    pub fn cohort_index(&self, label: &str) -> Option<usize> {
        self.cohorts.iter().position(|c| c == label)
    }

    /// `n^(i)`.
    pub fn n(&self, pop: Population) -> usize {
        self.cells[pop.index()].iter().map(Vec::len).sum()
    }

    /// `n_z^(i)`.
    pub fn n_cell(&self, pop: Population, cohort: usize) -> usize {
        self.cells[pop.index()].get(cohort).map_or(0, Vec::len)
    }

    pub fn cell(&self, pop: Population, cohort: usize) -> Result<&[Subject]> {
        self.cells[pop.index()]
            .get(cohort)
            .map(Vec::as_slice)
            .ok_or_else(|| Error::domain(format!("no cohort with index {cohort}")))
    }

    /// Every subject of one population, cohorts ignored.
    pub fn population_subjects(&self, pop: Population) -> Vec<Subject> {
        self.cells[pop.index()].iter().flatten().copied().collect()
    }

    /// Both populations' members of one cohort.
    pub fn pooled_cohort(&self, cohort: usize) -> Result<Vec<Subject>> {
        let mut all = self.cell(Population::One, cohort)?.to_vec();
        all.extend_from_slice(self.cell(Population::Two, cohort)?);
        Ok(all)
    }

    /// Prevalence estimates `q̂_z^(i) = n_z^(i) / n^(i)`, indexed by cohort.
    pub fn prevalence(&self, pop: Population) -> Result<Vec<f64>> {
        let n = self.n(pop);
        if n == 0 {
            return Err(Error::domain(format!(
                "population {} is empty",
                pop.label()
            )));
        }
        Ok(self.cells[pop.index()]
            .iter()
            .map(|cell| cell.len() as f64 / n as f64)
            .collect())
    }

    /// Support horizon of a cohort: the smaller of the two populations' largest
    /// observed times (event or censoring) within the cohort.
    pub fn tau_z(&self, cohort: usize) -> Result<f64> {
        let mut tau = f64::INFINITY;
        for pop in Population::BOTH {
            let cell = self.cell(pop, cohort)?;
            let max = cell
                .iter()
                .map(|s| s.time)
                .fold(f64::NEG_INFINITY, f64::max);
            if cell.is_empty() {
                return Err(Error::domain(format!(
                    "cohort {} is empty in population {}",
                    self.cohorts[cohort],
                    pop.label()
                )));
            }
            tau = tau.min(max);
        }
        Ok(tau)
    }

    /// `min_z τ_z`.
    pub fn tau(&self) -> Result<f64> {
        (0..self.num_cohorts())
            .map(|z| self.tau_z(z))
            .try_fold(f64::INFINITY, |acc, t| t.map(|t| acc.min(t)))
    }

    /// The same data with population labels exchanged.
    pub fn swap_populations(&self) -> Dataset {
        let raw = self
            .observations
            .iter()
            .map(|o| Observation {
                population: 3 - o.population,
                ..o.clone()
            })
            .collect();
        Dataset::validate(raw).expect("swapping labels preserves validity")
    }

    /// The same data with every time multiplied by `factor > 0`.
    pub fn scale_times(&self, factor: f64) -> Result<Dataset> {
        if !(factor > 0.0) || !factor.is_finite() {
            return Err(Error::domain(format!("time scale factor {factor}")));
        }
        let raw = self
            .observations
            .iter()
            .map(|o| Observation {
                time: o.time * factor,
                ..o.clone()
            })
            .collect();
        Dataset::validate(raw)
    }
}
