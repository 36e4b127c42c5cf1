use serde::{Deserialize, Serialize};

use super::{Dataset, ObservedRecord};
use crate::error::{Error, Result};

/// A column the censoring and competing-event weights are stratified on.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum StrataTerm {
    /// The treatment currently being analysed.
    CurrentTreatment,
    /// A treatment or categorical covariate, by name.
    Column(String),
}

impl StrataTerm {
    /// Parses a CLI token; `treatment` stands for the current treatment.
    pub fn parse(token: &str) -> StrataTerm {
        match token {
            "treatment" | "@treatment" => StrataTerm::CurrentTreatment,
            other => StrataTerm::Column(other.to_string()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Source {
    Treatment(usize),
    Covariate(usize),
}

/// Strata terms bound to column positions of one dataset.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ResolvedStrata {
    sources: Vec<Source>,
    labels: Vec<String>,
}

/// Discrete stratum label; equal keys mean equal values on every strata column.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default, Serialize, Deserialize)]
pub struct StratumKey(pub Vec<i64>);

impl std::fmt::Display for StratumKey {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.0.is_empty() {
            return write!(f, "(all)");
        }
        let parts: Vec<String> = self.0.iter().map(|v| v.to_string()).collect();
        write!(f, "({})", parts.join(","))
    }
}

impl ResolvedStrata {
    /// Binds `terms` to `data`. `current` is the treatment under analysis,
    /// needed only when [`StrataTerm::CurrentTreatment`] appears.
    pub fn resolve(data: &Dataset, terms: &[StrataTerm], current: Option<usize>) -> Result<Self> {
        let mut sources = Vec::with_capacity(terms.len());
        let mut labels = Vec::with_capacity(terms.len());
        for term in terms {
            let source = match term {
                StrataTerm::CurrentTreatment => Source::Treatment(current.ok_or_else(|| {
                    Error::Config("strata use the current treatment but none is selected".into())
                })?),
                StrataTerm::Column(name) => {
                    if let Some(k) = data.treatment_index(name) {
                        Source::Treatment(k)
                    } else if let Some(j) = data.covariate_index(name) {
                        if !data.categorical_flags()[j] {
                            return Err(Error::Config(format!(
                                "strata column {name} is continuous; supply a binned categorical column"
                            )));
                        }
                        Source::Covariate(j)
                    } else {
                        return Err(Error::Config(format!("unknown strata column {name}")));
                    }
                }
            };
            if sources.contains(&source) {
                continue;
            }
            labels.push(match source {
                Source::Treatment(k) => data.treatment_names()[k].clone(),
                Source::Covariate(j) => data.covariate_names()[j].clone(),
            });
            sources.push(source);
        }
        Ok(ResolvedStrata { sources, labels })
    }

    /// No stratification: every record shares one stratum.
    pub fn unstratified() -> Self {
        ResolvedStrata {
            sources: Vec::new(),
            labels: Vec::new(),
        }
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn is_empty(&self) -> bool {
        self.sources.is_empty()
    }
}

pub fn stratum_key(record: &ObservedRecord, strata: &ResolvedStrata) -> StratumKey {
    StratumKey(
        strata
            .sources
            .iter()
            .map(|s| match *s {
                Source::Treatment(k) => i64::from(record.treatments[k]),
                // categorical values are validated to be integral
                Source::Covariate(j) => record.covariates[j] as i64,
            })
            .collect(),
    )
}
