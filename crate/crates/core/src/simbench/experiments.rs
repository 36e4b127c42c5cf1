use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::design::{SimDesign, FOREST_COVARIATES};
use super::oracle::oracle_true_ate;
use super::simulate_dataset;
use crate::dataset::{AnalysisConfig, Dataset, Scale, StrataTerm};
use crate::effects::{ranking_fraction, run_two_step, EffectEstimate};
use crate::error::{Error, Result};
use crate::forest::mix;

/// Weight strata used in the experiments.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    /// `a2`, quintiles of `x1`, and `x2`: every column the competing and
    /// censoring laws depend on.
    A,
    /// `a2` only.
    B,
    /// No strata.
    C,
}

impl Scheme {
    pub fn strata(self) -> Vec<StrataTerm> {
        let cols: &[&str] = match self {
            Scheme::A => &["a2", "x1_q5", "x2"],
            Scheme::B => &["a2"],
            Scheme::C => &[],
        };
        cols.iter().map(|c| StrataTerm::Column(c.to_string())).collect()
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Scheme::A => "a",
            Scheme::B => "b",
            Scheme::C => "c",
        }
    }
}

impl std::fmt::Display for Scheme {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "a" => Ok(Scheme::A),
            "b" => Ok(Scheme::B),
            "c" => Ok(Scheme::C),
            other => Err(Error::Config(format!("unknown scheme {other}; expected a, b or c"))),
        }
    }
}

/// Analysis settings for one scheme on a simulated dataset.
pub fn scheme_config(base: &AnalysisConfig, design: &SimDesign, scheme: Scheme, seed: u64) -> AnalysisConfig {
    let mut c = base.clone();
    c.horizon = design.horizon;
    c.strata = scheme.strata();
    c.forest_covariates = Some(FOREST_COVARIATES.iter().map(|s| s.to_string()).collect());
    c.seed = seed;
    c
}

fn treatment_indices(design: &SimDesign, names: &[String]) -> Result<Vec<usize>> {
    names
        .iter()
        .map(|n| {
            design
                .treatment_index(n)
                .ok_or_else(|| Error::Config(format!("design has no treatment {n}")))
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoverageSpec {
    pub replicates: usize,
    pub schemes: Vec<Scheme>,
    pub treatments: Vec<String>,
    pub scales: Vec<Scale>,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReplicateEstimate {
    pub replicate: usize,
    pub scheme: Scheme,
    pub treatment: String,
    pub scale: Scale,
    pub ate: f64,
    pub se: f64,
    pub covered: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoverageRow {
    pub scheme: Scheme,
    pub treatment: String,
    pub scale: Scale,
    pub truth: f64,
    pub mean_estimate: f64,
    pub sd_estimate: f64,
    pub mean_se: f64,
    pub coverage: f64,
    pub replicates: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoverageReport {
    pub n: usize,
    pub horizon: f64,
    pub rows: Vec<CoverageRow>,
    pub estimates: Vec<ReplicateEstimate>,
}

impl CoverageReport {
    pub fn row(&self, scheme: Scheme, treatment: &str, scale: Scale) -> Option<&CoverageRow> {
        self.rows
            .iter()
            .find(|r| r.scheme == scheme && r.treatment == treatment && r.scale == scale)
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record([
            "scheme",
            "treatment",
            "scale",
            "truth",
            "mean_estimate",
            "sd_estimate",
            "mean_se",
            "coverage",
            "replicates",
        ])?;
        for r in &self.rows {
            w.write_record([
                r.scheme.to_string(),
                r.treatment.clone(),
                r.scale.to_string(),
                r.truth.to_string(),
                r.mean_estimate.to_string(),
                r.sd_estimate.to_string(),
                r.mean_se.to_string(),
                r.coverage.to_string(),
                r.replicates.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn write_json<W: Write>(&self, writer: W) -> Result<()> {
        serde_json::to_writer_pretty(writer, self)?;
        Ok(())
    }
}

/// Dataset of replicate `m` of an experiment seeded with `seed`.
pub fn replicate_dataset(design: &SimDesign, seed: u64, m: usize) -> Result<Dataset> {
    simulate_dataset(design, mix(seed, m as u64))
}

/// Repeats estimation on `spec.replicates` simulated datasets and compares
/// the intervals with the quadrature truths.
pub fn run_coverage_experiment(
    design: &SimDesign,
    spec: &CoverageSpec,
    config: &AnalysisConfig,
) -> Result<CoverageReport> {
    if spec.replicates == 0 {
        return Err(Error::Config("at least one replicate is needed".into()));
    }
    let ks = treatment_indices(design, &spec.treatments)?;
    let mut cells = Vec::new();
    for &scheme in &spec.schemes {
        for &k in &ks {
            for &scale in &spec.scales {
                cells.push((scheme, k, scale));
            }
        }
    }
    let truths = cells
        .iter()
        .map(|&(_, k, scale)| oracle_true_ate(design, k, scale, design.horizon))
        .collect::<Result<Vec<_>>>()?;

    let per_replicate: Vec<Vec<EffectEstimate>> = (0..spec.replicates)
        .into_par_iter()
        .map(|m| {
            let data = replicate_dataset(design, spec.seed, m)?;
            cells
                .iter()
                .map(|&(scheme, k, scale)| {
                    let cfg = scheme_config(config, design, scheme, mix(spec.seed, m as u64));
                    run_two_step(&data, k, scale, &cfg)
                })
                .collect()
        })
        .collect::<Result<_>>()?;

    let mut rows = Vec::new();
    let mut estimates = Vec::new();
    let mm = spec.replicates as f64;
    for (c, &(scheme, k, scale)) in cells.iter().enumerate() {
        let truth = truths[c];
        let est: Vec<&EffectEstimate> = per_replicate.iter().map(|r| &r[c]).collect();
        let mean = est.iter().map(|e| e.ate).sum::<f64>() / mm;
        let sd = if spec.replicates > 1 {
            (est.iter().map(|e| (e.ate - mean).powi(2)).sum::<f64>() / (mm - 1.0)).sqrt()
        } else {
            0.0
        };
        let covered = est.iter().filter(|e| e.covers(truth)).count();
        rows.push(CoverageRow {
            scheme,
            treatment: design.treatments[k].name.clone(),
            scale,
            truth,
            mean_estimate: mean,
            sd_estimate: sd,
            mean_se: est.iter().map(|e| e.se).sum::<f64>() / mm,
            coverage: covered as f64 / mm,
            replicates: spec.replicates,
        });
        for (m, e) in est.iter().enumerate() {
            estimates.push(ReplicateEstimate {
                replicate: m,
                scheme,
                treatment: e.treatment.clone(),
                scale,
                ate: e.ate,
                se: e.se,
                covered: e.covers(truth),
            });
        }
    }
    Ok(CoverageReport {
        n: design.n,
        horizon: design.horizon,
        rows,
        estimates,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RankingSpec {
    pub replicates: usize,
    pub n_grid: Vec<usize>,
    pub schemes: Vec<Scheme>,
    pub scales: Vec<Scale>,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RankingRow {
    pub n: usize,
    pub scheme: Scheme,
    pub scale: Scale,
    pub treatment: String,
    /// Share of replicates in which this treatment has the smallest estimate.
    pub fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RankingReport {
    pub replicates: usize,
    pub treatments: Vec<String>,
    pub rows: Vec<RankingRow>,
}

impl RankingReport {
    pub fn fraction(&self, n: usize, scheme: Scheme, scale: Scale, treatment: &str) -> Option<f64> {
        self.rows
            .iter()
            .find(|r| r.n == n && r.scheme == scheme && r.scale == scale && r.treatment == treatment)
            .map(|r| r.fraction)
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["n", "scheme", "scale", "treatment", "fraction"])?;
        for r in &self.rows {
            w.write_record([
                r.n.to_string(),
                r.scheme.to_string(),
                r.scale.to_string(),
                r.treatment.clone(),
                r.fraction.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn write_json<W: Write>(&self, writer: W) -> Result<()> {
        serde_json::to_writer_pretty(writer, self)?;
        Ok(())
    }
}

/// Ranks all treatments of the design on each replicate and reports how
/// often each comes out on top, per sample size, scheme and scale.
pub fn run_ranking_experiment(
    design: &SimDesign,
    spec: &RankingSpec,
    config: &AnalysisConfig,
) -> Result<RankingReport> {
    if spec.replicates == 0 {
        return Err(Error::Config("at least one replicate is needed".into()));
    }
    let names = design.treatment_names();
    let mut rows = Vec::new();
    for &n in &spec.n_grid {
        let sized = design.with_n(n);
        let seed = mix(spec.seed, n as u64);
        // per replicate: one estimate row per (scheme, scale)
        let per_replicate: Vec<Vec<Vec<f64>>> = (0..spec.replicates)
            .into_par_iter()
            .map(|m| {
                let data = replicate_dataset(&sized, seed, m)?;
                let mut out = Vec::new();
                for &scheme in &spec.schemes {
                    let cfg = scheme_config(config, &sized, scheme, mix(seed, m as u64));
                    for &scale in &spec.scales {
                        let row = (0..names.len())
                            .map(|k| run_two_step(&data, k, scale, &cfg).map(|e| e.ate))
                            .collect::<Result<Vec<f64>>>()?;
                        out.push(row);
                    }
                }
                Ok(out)
            })
            .collect::<Result<_>>()?;
        let mut cell = 0;
        for &scheme in &spec.schemes {
            for &scale in &spec.scales {
                let matrix: Vec<Vec<f64>> = per_replicate.iter().map(|r| r[cell].clone()).collect();
                for (k, name) in names.iter().enumerate() {
                    rows.push(RankingRow {
                        n,
                        scheme,
                        scale,
                        treatment: name.clone(),
                        fraction: ranking_fraction(&matrix, k),
                    });
                }
                cell += 1;
            }
        }
    }
    Ok(RankingReport {
        replicates: spec.replicates,
        treatments: names,
        rows,
    })
}
