//! Generalized random forest for a binary treatment effect on a weighted
//! outcome.
//!
//! Trees split on gradient pseudo-outcomes, populate leaves from a disjoint
//! honest half, and are grown in groups that share a half-sample so that the
//! spread between groups yields a variance estimate.

mod influence;
mod node;
mod predict;
mod sampling;
mod split;
mod tree;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

pub use influence::{phi_influence, phi_influence_forms};
pub use node::{label_pseudo_outcomes, node_theta};
pub use predict::{AteEstimate, LocalEstimate};
pub use sampling::{keyed_order, keyed_subsample, mix, record_key};
pub use split::{best_split, SplitCandidate};
pub use tree::{LeafStats, Tree, TreeNode};

use crate::dataset::{AnalysisConfig, Dataset, Scale};
use crate::error::{Error, Result};
use crate::ipcw::WeightedOutcome;
use tree::{grow_tree, GrowParams};

/// Version tag written into model dumps.
pub const FORMAT_VERSION: u32 = 1;

/// Column-major features offered to the forest.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FeatureMatrix {
    pub names: Vec<String>,
    #[serde(skip)]
    pub columns: Vec<Vec<f64>>,
    #[serde(skip)]
    pub row_keys: Vec<u64>,
}

impl FeatureMatrix {
    /// Covariates (all, or the named subset) followed by every treatment
    /// other than `k`.
    pub fn for_treatment(data: &Dataset, k: usize, covariates: Option<&[String]>) -> Result<Self> {
        let cov_idx: Vec<usize> = match covariates {
            None => (0..data.p()).collect(),
            Some(names) => names
                .iter()
                .map(|name| {
                    data.covariate_index(name)
                        .ok_or_else(|| Error::Config(format!("unknown forest covariate {name}")))
                })
                .collect::<Result<_>>()?,
        };
        let mut names = Vec::new();
        let mut columns = Vec::new();
        for j in cov_idx {
            names.push(data.covariate_names()[j].clone());
            columns.push(data.covariate(j));
        }
        for other in (0..data.k()).filter(|&o| o != k) {
            names.push(data.treatment_names()[other].clone());
            columns.push(data.treatment(other));
        }
        let row_keys = data.records().iter().map(|r| record_key(&r.id)).collect();
        Ok(FeatureMatrix {
            names,
            columns,
            row_keys,
        })
    }

    pub fn n(&self) -> usize {
        self.row_keys.len()
    }

    pub fn p(&self) -> usize {
        self.columns.len()
    }

    pub fn row(&self, i: usize) -> Vec<f64> {
        self.columns.iter().map(|c| c[i]).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ForestParams {
    pub trees: usize,
    pub seed: u64,
    pub min_node_size: usize,
    pub subsample_fraction: f64,
    pub honesty: bool,
    pub group_size: usize,
    pub mtry: Option<usize>,
}

impl ForestParams {
    pub fn from_config(config: &AnalysisConfig) -> Self {
        ForestParams {
            trees: config.trees,
            seed: config.seed,
            min_node_size: config.min_node_size,
            subsample_fraction: config.subsample_fraction,
            honesty: config.honesty,
            group_size: config.group_size,
            mtry: config.mtry,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ForestModel {
    pub format_version: u32,
    pub params: ForestParams,
    pub treatment_index: usize,
    pub treatment: String,
    pub scale: Option<Scale>,
    pub features: FeatureMatrix,
    pub trees: Vec<Tree>,
    /// Rows each tree group was drawn from. With `group_size == 1` every
    /// tree is its own group and this is its subsample.
    pub group_samples: Vec<Vec<u32>>,
    #[serde(skip)]
    treatment_values: Vec<f64>,
    #[serde(skip)]
    outcome_values: Vec<f64>,
}

impl ForestModel {
    /// Grows `params.trees` trees of the effect of binary `a` on `y`.
    pub fn fit(features: FeatureMatrix, a: Vec<f64>, y: Vec<f64>, params: &ForestParams) -> Result<Self> {
        let n = features.n();
        if a.len() != n || y.len() != n {
            return Err(Error::Config(format!(
                "{} treatment values and {} outcomes for {n} rows",
                a.len(),
                y.len()
            )));
        }
        if params.trees == 0 || params.min_node_size == 0 {
            return Err(Error::Config("trees and min_node_size must be positive".into()));
        }
        if !(params.subsample_fraction > 0.0 && params.subsample_fraction <= 1.0) {
            return Err(Error::Config("subsample_fraction must lie in (0, 1]".into()));
        }
        let group_size = params.group_size.max(1);
        let groups = params.trees.div_ceil(group_size);
        let all: Vec<u32> = (0..n as u32).collect();
        let keys = &features.row_keys;

        let mut size = ((params.subsample_fraction * n as f64).round() as usize).min(n);
        let group_samples: Vec<Vec<u32>> = if group_size > 1 {
            size = size.min(n / 2);
            (0..groups)
                .map(|g| keyed_subsample(&all, keys, mix(mix(params.seed, g as u64), 1), n / 2))
                .collect()
        } else {
            Vec::new()
        };
        let needed = if params.honesty { 4 } else { 2 };
        if size < needed {
            return Err(Error::Config(format!(
                "{n} records give tree subsamples of {size}; at least {needed} are needed"
            )));
        }

        let p = features.p();
        let grow = GrowParams {
            min_node_size: params.min_node_size,
            mtry: params
                .mtry
                .unwrap_or_else(|| (p as f64).sqrt().ceil() as usize)
                .clamp(1, p.max(1)),
            honesty: params.honesty,
        };
        let trees: Vec<Tree> = (0..params.trees)
            .into_par_iter()
            .map(|b| {
                let tree_seed = mix(params.seed, b as u64);
                let (pool, group) = if group_size > 1 {
                    (&group_samples[b / group_size][..], (b / group_size) as u32)
                } else {
                    (&all[..], b as u32)
                };
                // members stay in keyed order, never row order, so that
                // floating-point sums do not depend on how rows are stored
                let sub = keyed_subsample(pool, keys, mix(tree_seed, 2), size);
                let order = keyed_order(&sub, keys, mix(tree_seed, 3));
                let (split, est) = if params.honesty {
                    let (s, e) = order.split_at(sub.len() / 2);
                    (s.to_vec(), e.to_vec())
                } else {
                    (order.clone(), order)
                };
                let mut rng = ChaCha8Rng::seed_from_u64(tree_seed);
                grow_tree(&features.columns, &a, &y, split, est, group, &grow, &mut rng)
            })
            .collect();
        if !trees.iter().any(|t| t.usable) {
            return Err(Error::Estimation(
                "no tree has both treatment arms in its estimation sample".into(),
            ));
        }
        let group_samples = if group_size > 1 {
            group_samples
        } else {
            trees
                .iter()
                .map(|t| {
                    let mut s: Vec<u32> =
                        t.split_sample.iter().chain(&t.estimation_sample).copied().collect();
                    s.sort_unstable();
                    s.dedup();
                    s
                })
                .collect()
        };
        Ok(ForestModel {
            format_version: FORMAT_VERSION,
            params: params.clone(),
            treatment_index: 0,
            treatment: String::new(),
            scale: None,
            features,
            trees,
            group_samples,
            treatment_values: a,
            outcome_values: y,
        })
    }

    pub fn n(&self) -> usize {
        self.features.n()
    }

    pub fn usable_trees(&self) -> usize {
        self.trees.iter().filter(|t| t.usable).count()
    }

    pub fn treatment_values(&self) -> &[f64] {
        &self.treatment_values
    }

    pub fn outcome_values(&self) -> &[f64] {
        &self.outcome_values
    }

    /// Writes the model as pretty-printed JSON.
    pub fn write_json<W: std::io::Write>(&self, writer: W) -> Result<()> {
        serde_json::to_writer_pretty(writer, self)?;
        Ok(())
    }
}

/// Grows a forest for treatment `k` of `data` on the weighted outcomes.
///
/// Features are the configured covariates plus the other treatments.
pub fn grow_forest(
    data: &Dataset,
    outcomes: &[WeightedOutcome],
    k: usize,
    config: &AnalysisConfig,
) -> Result<ForestModel> {
    if outcomes.len() != data.n() {
        return Err(Error::Config(format!(
            "{} outcomes for {} records",
            outcomes.len(),
            data.n()
        )));
    }
    if k >= data.k() {
        return Err(Error::Config(format!("treatment index {k} out of range")));
    }
    let features = FeatureMatrix::for_treatment(data, k, config.forest_covariates.as_deref())?;
    let y = outcomes.iter().map(|o| o.value).collect();
    let mut model = ForestModel::fit(features, data.treatment(k), y, &ForestParams::from_config(config))?;
    model.treatment_index = k;
    model.treatment = data.treatment_names()[k].clone();
    Ok(model)
}
