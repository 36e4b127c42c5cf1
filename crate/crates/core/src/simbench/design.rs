use std::collections::BTreeMap;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::{Dataset, ObservedRecord, Status};
use crate::error::{Error, Result};

/// Covariates of every simulated dataset, in column order. `x2` has three
/// levels, `x3` four, `x1_q5` is the quintile of `x1`; the rest are
/// uniform on (0, 1).
pub const COVARIATES: [&str; 7] = ["x1", "x2", "x3", "x4", "x5", "x6", "x1_q5"];

/// Covariates offered to the forest; the quintile column only serves as a
/// weight stratum.
pub const FOREST_COVARIATES: [&str; 6] = ["x1", "x2", "x3", "x4", "x5", "x6"];

const BUILTIN: &str = include_str!("../../fixtures/default_design.toml");

/// Number of levels of a categorical covariate, `None` for uniform ones.
pub fn covariate_levels(name: &str) -> Option<u32> {
    match name {
        "x2" => Some(3),
        "x3" => Some(4),
        "x1_q5" => Some(5),
        _ => None,
    }
}

/// Proportional-hazards Weibull law with cumulative hazard
/// `(t / scale)^shape * exp(eta)`, `eta` linear in named columns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeibullSpec {
    pub shape: f64,
    pub scale: f64,
    #[serde(default)]
    pub coefficients: BTreeMap<String, f64>,
}

impl WeibullSpec {
    pub fn constant(shape: f64, scale: f64) -> Self {
        WeibullSpec {
            shape,
            scale,
            coefficients: BTreeMap::new(),
        }
    }

    pub fn cumulative_hazard(&self, t: f64, eta: f64) -> f64 {
        (t / self.scale).powf(self.shape) * eta.exp()
    }

    /// Inverse-transform draw from a unit exponential variate.
    pub fn time_from_exponential(&self, e: f64, eta: f64) -> f64 {
        self.scale * (e * (-eta).exp()).powf(1.0 / self.shape)
    }

    pub fn linear_predictor(&self, value: impl Fn(&str) -> f64) -> f64 {
        self.coefficients.iter().map(|(name, b)| b * value(name)).sum()
    }
}

/// Binary treatment with `P(A = 1 | X) = expit(intercept + slope * X[driver])`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TreatmentSpec {
    pub name: String,
    pub intercept: f64,
    pub slope: f64,
    pub driver: String,
}

impl TreatmentSpec {
    pub fn propensity(&self, driver_value: f64) -> f64 {
        1.0 / (1.0 + (-(self.intercept + self.slope * driver_value)).exp())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimDesign {
    pub n: usize,
    pub horizon: f64,
    /// Latent time of the event of interest.
    pub event: WeibullSpec,
    /// Latent competing time; absent means no competing events.
    #[serde(default)]
    pub competing: Option<WeibullSpec>,
    /// Latent censoring time; absent means no censoring.
    #[serde(default)]
    pub censoring: Option<WeibullSpec>,
    pub treatments: Vec<TreatmentSpec>,
}

impl SimDesign {
    /// The calibrated default design.
    pub fn builtin() -> Self {
        SimDesign::from_toml_str(BUILTIN).expect("bundled design parses")
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let design: SimDesign = toml::from_str(text)?;
        design.validate()?;
        Ok(design)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        SimDesign::from_toml_str(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("design serializes")
    }

    pub fn with_n(&self, n: usize) -> Self {
        SimDesign { n, ..self.clone() }
    }

    pub fn treatment_index(&self, name: &str) -> Option<usize> {
        self.treatments.iter().position(|t| t.name == name)
    }

    pub fn treatment_names(&self) -> Vec<String> {
        self.treatments.iter().map(|t| t.name.clone()).collect()
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.n == 0 {
            return bad("design needs n >= 1".into());
        }
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            return bad(format!("design horizon must be positive, got {}", self.horizon));
        }
        if self.treatments.is_empty() {
            return bad("design needs at least one treatment".into());
        }
        let mut names: Vec<&str> = self.treatments.iter().map(|t| t.name.as_str()).collect();
        names.sort_unstable();
        if names.windows(2).any(|w| w[0] == w[1]) {
            return bad("duplicate treatment names in design".into());
        }
        for t in &self.treatments {
            if COVARIATES.contains(&t.name.as_str()) {
                return bad(format!("treatment name {} clashes with a covariate", t.name));
            }
            if !FOREST_COVARIATES.contains(&t.driver.as_str()) {
                return bad(format!("treatment {} has unknown driver {}", t.name, t.driver));
            }
            if !(t.intercept.is_finite() && t.slope.is_finite()) {
                return bad(format!("treatment {} has non-finite coefficients", t.name));
            }
        }
        let laws = [
            ("event", Some(&self.event)),
            ("competing", self.competing.as_ref()),
            ("censoring", self.censoring.as_ref()),
        ];
        for (label, law) in laws {
            let Some(law) = law else { continue };
            if !(law.shape > 0.0 && law.scale > 0.0 && law.shape.is_finite() && law.scale.is_finite()) {
                return bad(format!("{label} shape and scale must be positive"));
            }
            for (name, b) in &law.coefficients {
                if !b.is_finite() {
                    return bad(format!("{label} coefficient {name} is not finite"));
                }
                let known = FOREST_COVARIATES.contains(&name.as_str()) || self.treatment_index(name).is_some();
                if !known {
                    return bad(format!("{label} coefficient refers to unknown column {name}"));
                }
            }
        }
        Ok(())
    }
}

/// The three latent times of one simulated subject.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LatentDraw {
    pub t1: f64,
    pub t2: f64,
    pub c: f64,
}

impl LatentDraw {
    /// Earliest time and its code. Ties go to the event of interest, then
    /// to the competing event.
    pub fn observed(&self) -> (f64, Status) {
        if self.t1 <= self.t2 && self.t1 <= self.c {
            (self.t1, Status::Event)
        } else if self.t2 <= self.c {
            (self.t2, Status::Competing)
        } else {
            (self.c, Status::Censored)
        }
    }
}

/// One simulated subject before observation.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulatedSubject {
    pub covariates: Vec<f64>,
    pub treatments: Vec<u8>,
    pub latent: LatentDraw,
}

fn unit_exponential<R: Rng>(rng: &mut R) -> f64 {
    -(1.0 - rng.gen::<f64>()).ln()
}

/// Draws `design.n` subjects with their latent times.
pub fn simulate_subjects(design: &SimDesign, seed: u64) -> Vec<SimulatedSubject> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let col = |name: &str| COVARIATES.iter().position(|c| *c == name).unwrap();
    (0..design.n)
        .map(|_| {
            let x1: f64 = rng.gen();
            let x2 = f64::from(rng.gen_range(0..3u8));
            let x3 = f64::from(rng.gen_range(0..4u8));
            let x4: f64 = rng.gen();
            let x5: f64 = rng.gen();
            let x6: f64 = rng.gen();
            let q5 = (x1 * 5.0).floor().min(4.0);
            let covariates = vec![x1, x2, x3, x4, x5, x6, q5];
            let treatments: Vec<u8> = design
                .treatments
                .iter()
                .map(|t| u8::from(rng.gen::<f64>() < t.propensity(covariates[col(&t.driver)])))
                .collect();
            let value = |name: &str| match design.treatment_index(name) {
                Some(k) => f64::from(treatments[k]),
                None => covariates[col(name)],
            };
            let mut draw = |law: Option<&WeibullSpec>| match law {
                Some(law) => law.time_from_exponential(unit_exponential(&mut rng), law.linear_predictor(value)),
                None => f64::INFINITY,
            };
            let latent = LatentDraw {
                t1: draw(Some(&design.event)),
                t2: draw(design.competing.as_ref()),
                c: draw(design.censoring.as_ref()),
            };
            SimulatedSubject {
                covariates,
                treatments,
                latent,
            }
        })
        .collect()
}

/// A dataset of `design.n` observed records; identical for identical seeds.
pub fn simulate_dataset(design: &SimDesign, seed: u64) -> Result<Dataset> {
    design.validate()?;
    let records = simulate_subjects(design, seed)
        .into_iter()
        .enumerate()
        .map(|(i, s)| {
            let (time, status) = s.latent.observed();
            ObservedRecord {
                id: format!("s{i}"),
                time,
                status,
                treatments: s.treatments,
                covariates: s.covariates,
            }
        })
        .collect();
    Dataset::new(
        records,
        design.treatment_names(),
        COVARIATES.iter().map(|s| s.to_string()).collect(),
        COVARIATES.iter().map(|c| covariate_levels(c).is_some()).collect(),
    )
}
