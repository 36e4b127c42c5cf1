//! Right-censored competing-risks data with several binary treatments.
//!
//! A [`Dataset`] is validated once on construction and is immutable
//! afterwards, so it can be shared freely between worker threads.

mod config;
mod io;
mod strata;

pub use config::{AnalysisConfig, Scale};
pub use io::{load_csv, read_csv, write_csv, Schema};
pub use strata::{stratum_key, ResolvedStrata, StrataTerm, StratumKey};

use crate::error::{Error, Result};

/// Observed event code.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Status {
    Censored = 0,
    Event = 1,
    Competing = 2,
}

impl Status {
    pub fn code(self) -> u8 {
        self as u8
    }

    pub fn from_code(code: u8) -> Option<Status> {
        match code {
            0 => Some(Status::Censored),
            1 => Some(Status::Event),
            2 => Some(Status::Competing),
            _ => None,
        }
    }
}

/// One subject: follow-up time, event code, treatment indicators and
/// baseline covariates.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservedRecord {
    pub id: String,
    pub time: f64,
    pub status: Status,
    pub treatments: Vec<u8>,
    pub covariates: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    records: Vec<ObservedRecord>,
    treatment_names: Vec<String>,
    covariate_names: Vec<String>,
    categorical: Vec<bool>,
}

/// Counts of records per status code.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct EventCounts {
    pub censored: usize,
    pub event: usize,
    pub competing: usize,
}

impl Dataset {
    /// Validates and wraps a set of records.
    ///
    /// Rows are checked in order and the first violation is reported with
    /// its 1-based row number.
    pub fn new(
        records: Vec<ObservedRecord>,
        treatment_names: Vec<String>,
        covariate_names: Vec<String>,
        categorical: Vec<bool>,
    ) -> Result<Self> {
        if records.is_empty() {
            return Err(Error::Schema("dataset has no records".into()));
        }
        if categorical.len() != covariate_names.len() {
            return Err(Error::Schema(format!(
                "{} categorical flags for {} covariates",
                categorical.len(),
                covariate_names.len()
            )));
        }
        check_unique(treatment_names.iter().chain(covariate_names.iter()))?;
        let k = treatment_names.len();
        let p = covariate_names.len();
        for (i, r) in records.iter().enumerate() {
            let row = i + 1;
            let fail = |message: String| Err(Error::Validation { row, message });
            if !r.time.is_finite() {
                return fail(format!("time {} is not a finite number", r.time));
            }
            if r.time < 0.0 {
                return fail(format!("negative time {}", r.time));
            }
            if r.treatments.len() != k {
                return fail(format!("expected {k} treatments, found {}", r.treatments.len()));
            }
            if let Some(a) = r.treatments.iter().find(|&&a| a > 1) {
                return fail(format!("treatment value {a} is not 0 or 1"));
            }
            if r.covariates.len() != p {
                return fail(format!("expected {p} covariates, found {}", r.covariates.len()));
            }
            for (j, &x) in r.covariates.iter().enumerate() {
                if !x.is_finite() {
                    return fail(format!("covariate {} is missing or not finite", covariate_names[j]));
                }
                if categorical[j] && x.fract() != 0.0 {
                    return fail(format!(
                        "categorical covariate {} has non-integer value {x}",
                        covariate_names[j]
                    ));
                }
            }
        }
        Ok(Dataset {
            records,
            treatment_names,
            covariate_names,
            categorical,
        })
    }

    pub fn records(&self) -> &[ObservedRecord] {
        &self.records
    }

    pub fn n(&self) -> usize {
        self.records.len()
    }

    /// Number of treatments.
    pub fn k(&self) -> usize {
        self.treatment_names.len()
    }

    /// Number of covariates.
    pub fn p(&self) -> usize {
        self.covariate_names.len()
    }

    pub fn treatment_names(&self) -> &[String] {
        &self.treatment_names
    }

    pub fn covariate_names(&self) -> &[String] {
        &self.covariate_names
    }

    pub fn categorical_flags(&self) -> &[bool] {
        &self.categorical
    }

    pub fn treatment_index(&self, name: &str) -> Option<usize> {
        self.treatment_names.iter().position(|t| t == name)
    }

    pub fn covariate_index(&self, name: &str) -> Option<usize> {
        self.covariate_names.iter().position(|c| c == name)
    }

    pub fn times(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.time).collect()
    }

    pub fn treatment(&self, k: usize) -> Vec<f64> {
        self.records.iter().map(|r| f64::from(r.treatments[k])).collect()
    }

    pub fn covariate(&self, j: usize) -> Vec<f64> {
        self.records.iter().map(|r| r.covariates[j]).collect()
    }

    /// A treatment column without both arms carries no contrast.
    pub fn is_degenerate(&self, k: usize) -> bool {
        let treated = self.records.iter().filter(|r| r.treatments[k] == 1).count();
        treated == 0 || treated == self.n()
    }

    pub fn event_counts(&self) -> EventCounts {
        let mut counts = EventCounts::default();
        for r in &self.records {
            match r.status {
                Status::Censored => counts.censored += 1,
                Status::Event => counts.event += 1,
                Status::Competing => counts.competing += 1,
            }
        }
        counts
    }

    /// New dataset with the records reordered; `order[i]` is the source row
    /// of row `i`.
    pub fn permuted(&self, order: &[usize]) -> Dataset {
        Dataset {
            records: order.iter().map(|&i| self.records[i].clone()).collect(),
            ..self.clone()
        }
    }
}

fn check_unique<'a>(names: impl Iterator<Item = &'a String>) -> Result<()> {
    let mut seen = std::collections::HashSet::new();
    for name in names {
        if !seen.insert(name.as_str()) {
            return Err(Error::Schema(format!("column {name} is used twice")));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(id: &str, time: f64, status: Status, a: u8) -> ObservedRecord {
        ObservedRecord {
            id: id.into(),
            time,
            status,
            treatments: vec![a],
            covariates: vec![1.0],
        }
    }

    #[test]
    fn counts_statuses() {
        let ds = Dataset::new(
            vec![
                rec("1", 1.0, Status::Event, 0),
                rec("2", 2.0, Status::Censored, 1),
                rec("3", 3.0, Status::Competing, 0),
                rec("4", 4.0, Status::Censored, 1),
            ],
            vec!["a".into()],
            vec!["x".into()],
            vec![true],
        )
        .unwrap();
        assert_eq!(
            ds.event_counts(),
            EventCounts {
                censored: 2,
                event: 1,
                competing: 1
            }
        );
        assert!(!ds.is_degenerate(0));
    }

    #[test]
    fn rejects_negative_time_with_row() {
        let err = Dataset::new(
            vec![
                rec("1", 1.0, Status::Event, 0),
                rec("2", 2.0, Status::Censored, 1),
                rec("3", -1.0, Status::Competing, 0),
            ],
            vec!["a".into()],
            vec!["x".into()],
            vec![false],
        )
        .unwrap_err();
        assert!(matches!(err, Error::Validation { row: 3, .. }), "{err}");
    }

    #[test]
    fn flags_degenerate_treatment() {
        let ds = Dataset::new(
            vec![rec("1", 1.0, Status::Event, 1), rec("2", 2.0, Status::Censored, 1)],
            vec!["a".into()],
            vec!["x".into()],
            vec![false],
        )
        .unwrap();
        assert!(ds.is_degenerate(0));
    }

    #[test]
    fn categorical_must_be_integer() {
        let mut r = rec("1", 1.0, Status::Event, 1);
        r.covariates = vec![0.5];
        let err = Dataset::new(vec![r], vec!["a".into()], vec!["x".into()], vec![true]).unwrap_err();
        assert!(matches!(err, Error::Validation { row: 1, .. }));
    }
}
