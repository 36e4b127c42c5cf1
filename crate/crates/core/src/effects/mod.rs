//! The two-step pipeline per treatment, effect aggregation and ranking.

mod report;

use rayon::prelude::*;
use serde::Serialize;
use statrs::distribution::{ContinuousCDF, Normal};

pub use report::{write_plot_data, write_ranking_csv, write_ranking_json};

use crate::dataset::{AnalysisConfig, Dataset, ResolvedStrata, Scale};
use crate::error::{Error, Result};
use crate::forest::{grow_forest, mix, ForestModel};
use crate::ipcw::{
    build_crude_outcomes, build_net_outcomes, fit_competing_km, fit_reverse_km, floored_count,
    CurveSet, WeightedOutcome,
};

/// Average effect of one treatment on one scale.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EffectEstimate {
    pub treatment: String,
    pub scale: Scale,
    pub ate: f64,
    pub se: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub horizon: f64,
}

impl EffectEstimate {
    /// Normal-approximation interval at `level`.
    pub fn new(treatment: String, scale: Scale, ate: f64, se: f64, horizon: f64, level: f64) -> Self {
        let z = normal_quantile(0.5 + level / 2.0);
        EffectEstimate {
            treatment,
            scale,
            ate,
            se,
            ci_low: ate - z * se,
            ci_high: ate + z * se,
            horizon,
        }
    }

    pub fn direction(&self) -> Direction {
        Direction::of(self.ci_low, self.ci_high)
    }

    pub fn covers(&self, truth: f64) -> bool {
        self.ci_low <= truth && truth <= self.ci_high
    }
}

fn normal_quantile(p: f64) -> f64 {
    Normal::new(0.0, 1.0).expect("standard normal").inverse_cdf(p)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    /// Upper confidence limit below zero.
    Protective,
    /// Lower confidence limit above zero.
    Harmful,
    Neutral,
}

impl Direction {
    pub fn of(ci_low: f64, ci_high: f64) -> Direction {
        if ci_high < 0.0 {
            Direction::Protective
        } else if ci_low > 0.0 {
            Direction::Harmful
        } else {
            Direction::Neutral
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Direction::Protective => "protective",
            Direction::Harmful => "harmful",
            Direction::Neutral => "neutral",
        }
    }
}

/// Everything produced while estimating one effect.
#[derive(Debug, Clone)]
pub struct TwoStepFit {
    pub estimate: EffectEstimate,
    pub censoring: CurveSet,
    /// Competing-event curves; only fitted on the net scale.
    pub competing: Option<CurveSet>,
    pub outcomes: Vec<WeightedOutcome>,
    pub floored: usize,
    pub model: ForestModel,
    /// Training rows predicted from all trees for lack of out-of-bag ones.
    pub fallback_points: usize,
}

/// Seed of the forest for treatment `k`. It does not depend on the scale,
/// so both scales share subsamples and split randomness.
pub fn treatment_seed(seed: u64, k: usize) -> u64 {
    mix(seed, k as u64)
}

/// Weights, forest and out-of-bag average effect of treatment `k`.
pub fn fit_two_step(data: &Dataset, k: usize, scale: Scale, config: &AnalysisConfig) -> Result<TwoStepFit> {
    config.validate()?;
    if k >= data.k() {
        return Err(Error::Config(format!("treatment index {k} out of range")));
    }
    if data.is_degenerate(k) {
        return Err(Error::Config(format!(
            "treatment {} is constant",
            data.treatment_names()[k]
        )));
    }
    let strata = ResolvedStrata::resolve(data, &config.strata, Some(k))?;
    let censoring = fit_reverse_km(data, &strata)?;
    let (outcomes, competing) = match scale {
        Scale::Crude => (
            build_crude_outcomes(data, &censoring, config.horizon, config.weight_floor)?,
            None,
        ),
        Scale::Net => {
            let g2 = fit_competing_km(data, &strata)?;
            let y = build_net_outcomes(data, &censoring, &g2, config.horizon, config.weight_floor)?;
            (y, Some(g2))
        }
    };
    let mut forest_config = config.clone();
    forest_config.seed = treatment_seed(config.seed, k);
    let mut model = grow_forest(data, &outcomes, k, &forest_config)?;
    model.scale = Some(scale);
    let ate = model.oob_ate()?;
    let se = ate.se.ok_or_else(|| {
        Error::Config(format!(
            "standard errors need at least two tree groups of two or more trees; got {} trees in groups of {}",
            config.trees, config.group_size
        ))
    })?;
    let estimate = EffectEstimate::new(
        data.treatment_names()[k].clone(),
        scale,
        ate.ate,
        se,
        config.horizon,
        config.ci_level,
    );
    Ok(TwoStepFit {
        estimate,
        censoring,
        competing,
        floored: floored_count(&outcomes),
        outcomes,
        model,
        fallback_points: ate.fallback_points,
    })
}

/// Average effect of treatment `k` on `scale`.
pub fn run_two_step(data: &Dataset, k: usize, scale: Scale, config: &AnalysisConfig) -> Result<EffectEstimate> {
    fit_two_step(data, k, scale, config).map(|f| f.estimate)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RankedEffect {
    #[serde(flatten)]
    pub estimate: EffectEstimate,
    pub direction: Direction,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SkippedTreatment {
    pub treatment: String,
    pub reason: String,
}

/// Effects sorted from most protective to most harmful.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RankingTable {
    pub scale: Scale,
    pub horizon: f64,
    pub entries: Vec<RankedEffect>,
    pub skipped: Vec<SkippedTreatment>,
}

impl RankingTable {
    pub fn from_estimates(scale: Scale, horizon: f64, estimates: Vec<EffectEstimate>) -> Self {
        let mut entries: Vec<RankedEffect> = estimates
            .into_iter()
            .map(|e| RankedEffect {
                direction: e.direction(),
                estimate: e,
            })
            .collect();
        entries.sort_by(|p, q| p.estimate.ate.total_cmp(&q.estimate.ate));
        RankingTable {
            scale,
            horizon,
            entries,
            skipped: Vec::new(),
        }
    }
}

/// One forest per treatment, run concurrently; constant treatments are
/// listed as skipped.
pub fn rank_treatments(
    data: &Dataset,
    treatments: &[usize],
    scale: Scale,
    config: &AnalysisConfig,
) -> Result<RankingTable> {
    rank_treatments_with(data, treatments, scale, config, |_| Ok(()))
}

/// As [`rank_treatments`], handing every intermediate fit to `inspect`.
pub fn rank_treatments_with<F>(
    data: &Dataset,
    treatments: &[usize],
    scale: Scale,
    config: &AnalysisConfig,
    inspect: F,
) -> Result<RankingTable>
where
    F: Fn(&TwoStepFit) -> Result<()> + Sync,
{
    config.validate()?;
    if let Some(&k) = treatments.iter().find(|&&k| k >= data.k()) {
        return Err(Error::Config(format!("treatment index {k} out of range")));
    }
    let (active, degenerate): (Vec<usize>, Vec<usize>) =
        treatments.iter().partition(|&&k| !data.is_degenerate(k));
    if active.is_empty() {
        return Err(Error::Config("every requested treatment is constant".into()));
    }
    let estimates = active
        .par_iter()
        .map(|&k| {
            let fit = fit_two_step(data, k, scale, config)?;
            inspect(&fit)?;
            Ok(fit.estimate)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut table = RankingTable::from_estimates(scale, config.horizon, estimates);
    table.skipped = degenerate
        .into_iter()
        .map(|k| SkippedTreatment {
            treatment: data.treatment_names()[k].clone(),
            reason: "degenerate: treatment takes a single value".into(),
        })
        .collect();
    Ok(table)
}

/// Share of rows in which column `k` is at most every other column.
pub fn ranking_fraction(estimates: &[Vec<f64>], k: usize) -> f64 {
    if estimates.is_empty() {
        return 0.0;
    }
    let wins = estimates
        .iter()
        .filter(|row| row.iter().enumerate().all(|(j, &v)| j == k || row[k] <= v))
        .count();
    wins as f64 / estimates.len() as f64
}
