use serde::{Deserialize, Serialize};

use super::StrataTerm;
use crate::error::{Error, Result};

/// Probability scale of the target effect.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scale {
    /// Cumulative incidence in the presence of competing events.
    Crude,
    /// Risk in a world where the competing event cannot occur.
    Net,
}

impl Scale {
    pub fn as_str(self) -> &'static str {
        match self {
            Scale::Crude => "crude",
            Scale::Net => "net",
        }
    }
}

impl std::fmt::Display for Scale {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Scale {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "crude" => Ok(Scale::Crude),
            "net" => Ok(Scale::Net),
            other => Err(Error::Config(format!("unknown scale {other}"))),
        }
    }
}

/// Settings shared by both estimation steps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisConfig {
    /// Time horizon t0 of the risk difference.
    pub horizon: f64,
    /// Weight strata. Defaults to the treatment under analysis.
    pub strata: Vec<StrataTerm>,
    pub trees: usize,
    pub seed: u64,
    pub min_node_size: usize,
    pub subsample_fraction: f64,
    pub honesty: bool,
    /// Lower bound applied to weight denominators.
    pub weight_floor: f64,
    /// Trees per half-sample group used for variance estimation.
    pub group_size: usize,
    /// Covariates tried per split; `None` means ceil(sqrt(p)).
    pub mtry: Option<usize>,
    /// Covariates offered to the forest; `None` means all of them.
    pub forest_covariates: Option<Vec<String>>,
    pub ci_level: f64,
}

impl AnalysisConfig {
    pub fn new(horizon: f64) -> Self {
        AnalysisConfig {
            horizon,
            strata: vec![StrataTerm::CurrentTreatment],
            trees: 200,
            seed: 0,
            min_node_size: 5,
            subsample_fraction: 0.5,
            honesty: true,
            weight_floor: 0.01,
            group_size: 4,
            mtry: None,
            forest_covariates: None,
            ci_level: 0.95,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            return bad(format!("horizon must be positive, got {}", self.horizon));
        }
        if self.trees == 0 {
            return bad("number of trees must be positive".into());
        }
        if self.min_node_size == 0 {
            return bad("min_node_size must be positive".into());
        }
        if !(self.subsample_fraction > 0.0 && self.subsample_fraction <= 1.0) {
            return bad(format!(
                "subsample_fraction must lie in (0, 1], got {}",
                self.subsample_fraction
            ));
        }
        if !(self.weight_floor > 0.0 && self.weight_floor < 0.5) {
            return bad(format!("weight_floor must lie in (0, 0.5), got {}", self.weight_floor));
        }
        if self.group_size == 0 {
            return bad("group_size must be positive".into());
        }
        if self.group_size > 1 && self.subsample_fraction > 0.5 {
            return bad("grouped trees need subsample_fraction <= 0.5".into());
        }
        if self.mtry == Some(0) {
            return bad("mtry must be positive".into());
        }
        if !(self.ci_level > 0.0 && self.ci_level < 1.0) {
            return bad(format!("ci_level must lie in (0, 1), got {}", self.ci_level));
        }
        Ok(())
    }
}
