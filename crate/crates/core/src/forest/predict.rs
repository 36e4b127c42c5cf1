use std::collections::BTreeMap;

use serde::Serialize;

use super::tree::LeafStats;
use super::ForestModel;
use crate::error::{Error, Result};

/// Forest estimate of the conditional effect at one feature vector.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LocalEstimate {
    pub theta: f64,
    /// Grove standard error; absent when fewer than two groups are usable.
    pub sigma: Option<f64>,
    pub x: Vec<f64>,
}

/// Average of out-of-bag conditional effects over the training rows.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AteEstimate {
    pub ate: f64,
    pub se: Option<f64>,
    /// theta(X_i) for every training row.
    pub predictions: Vec<f64>,
    /// Rows with no out-of-bag tree, predicted from all trees instead.
    pub fallback_points: usize,
}

/// Tree-averaged leaf means of `a`, `y` and `a * y`.
#[derive(Debug, Clone, Copy, Default)]
struct Moments {
    a: f64,
    y: f64,
    ay: f64,
    count: usize,
}

impl Moments {
    fn add(&mut self, s: &LeafStats) {
        self.a += s.mean_a;
        self.y += s.mean_y;
        self.ay += s.mean_ay;
        self.count += 1;
    }

    /// Returns (theta, denominator) of the kernel-weighted slope.
    fn solve(mut self) -> Result<(Self, f64, f64)> {
        if self.count == 0 {
            return Err(Error::DegenerateNeighborhood);
        }
        let c = self.count as f64;
        self.a /= c;
        self.y /= c;
        self.ay /= c;
        let d = self.a - self.a * self.a;
        if d <= 0.0 {
            return Err(Error::DegenerateNeighborhood);
        }
        Ok((self, (self.ay - self.a * self.y) / d, d))
    }

    /// First-order contribution of one tree to the ratio estimate.
    fn psi(&self, s: &LeafStats, theta: f64, d: f64) -> f64 {
        (s.mean_ay - self.a * s.mean_y + (2.0 * self.a * theta - self.y - theta) * s.mean_a) / d
    }
}

/// Between-group minus within-group variance of per-tree values, each
/// tagged with its group. `None` with fewer than two groups holding at
/// least two trees.
fn grove_variance(values: &[(u32, f64)]) -> Option<f64> {
    let mut groups: BTreeMap<u32, Vec<f64>> = BTreeMap::new();
    for &(g, v) in values {
        groups.entry(g).or_default().push(v);
    }
    let stats: Vec<(f64, f64)> = groups
        .values()
        .filter(|v| v.len() >= 2)
        .map(|v| {
            let l = v.len() as f64;
            let m = v.iter().sum::<f64>() / l;
            let s2 = v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (l - 1.0);
            (m, s2 / l)
        })
        .collect();
    if stats.len() < 2 {
        return None;
    }
    let g = stats.len() as f64;
    let grand = stats.iter().map(|s| s.0).sum::<f64>() / g;
    let between = stats.iter().map(|s| (s.0 - grand) * (s.0 - grand)).sum::<f64>() / (g - 1.0);
    let within = stats.iter().map(|s| s.1).sum::<f64>() / g;
    Some((between - within).max(0.0))
}

impl ForestModel {
    fn leaves_at<'a>(&'a self, x: &'a [f64]) -> impl Iterator<Item = (usize, usize)> + 'a {
        self.trees
            .iter()
            .enumerate()
            .filter(|(_, t)| t.usable)
            .map(move |(b, t)| (b, t.leaf_for(|j| x[j])))
    }

    fn check_dim(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.features.p() {
            return Err(Error::Config(format!(
                "feature vector has {} entries, the forest uses {}",
                x.len(),
                self.features.p()
            )));
        }
        Ok(())
    }

    /// alpha_i(x) = (1/B) sum_b 1{i in L_b(x)} / |L_b(x)| over usable trees.
    pub fn kernel_weights(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_dim(x)?;
        let mut alpha = vec![0.0; self.n()];
        let b = self.usable_trees() as f64;
        for (t, leaf) in self.leaves_at(x) {
            let members = &self.trees[t].nodes[leaf].leaf_members;
            let w = 1.0 / (members.len() as f64 * b);
            for &i in members {
                alpha[i as usize] += w;
            }
        }
        Ok(alpha)
    }

    pub fn estimate_theta_at(&self, x: &[f64]) -> Result<LocalEstimate> {
        self.check_dim(x)?;
        let mut m = Moments::default();
        for (t, leaf) in self.leaves_at(x) {
            m.add(self.trees[t].leaf_stats(leaf));
        }
        let (_, theta, _) = m.solve()?;
        Ok(LocalEstimate {
            theta,
            sigma: self.estimate_variance(x)?.map(f64::sqrt),
            x: x.to_vec(),
        })
    }

    /// Grove variance of the estimate at `x`.
    pub fn estimate_variance(&self, x: &[f64]) -> Result<Option<f64>> {
        self.check_dim(x)?;
        if self.params.group_size < 2 {
            return Ok(None);
        }
        let mut m = Moments::default();
        let leaves: Vec<(usize, usize)> = self.leaves_at(x).collect();
        for &(t, leaf) in &leaves {
            m.add(self.trees[t].leaf_stats(leaf));
        }
        let (m, theta, d) = m.solve()?;
        let psi: Vec<(u32, f64)> = leaves
            .iter()
            .map(|&(t, leaf)| (self.trees[t].group, m.psi(self.trees[t].leaf_stats(leaf), theta, d)))
            .collect();
        Ok(grove_variance(&psi))
    }

    /// Out-of-bag average effect over the training rows.
    ///
    /// A tree is out of bag for row i when i lies outside the sample of the
    /// tree's group. Each group gets an average effect over the rows it is
    /// out of bag for, built from its trees' linearized contributions, and
    /// the spread of these grove averages gives the standard error.
    pub fn oob_ate(&self) -> Result<AteEstimate> {
        let n = self.n();
        let cols = &self.features.columns;
        let usable: Vec<usize> = (0..self.trees.len()).filter(|&b| self.trees[b].usable).collect();
        let leaf_of: Vec<Vec<u32>> = {
            use rayon::prelude::*;
            usable
                .par_iter()
                .map(|&b| (0..n).map(|i| self.trees[b].leaf_for(|j| cols[j][i]) as u32).collect())
                .collect()
        };
        let mut in_group = vec![vec![false; n]; self.group_samples.len()];
        for (g, rows) in self.group_samples.iter().enumerate() {
            for &i in rows {
                in_group[g][i as usize] = true;
            }
        }

        let mut predictions = vec![0.0; n];
        let mut fallback_points = 0;
        let mut tree_sum = vec![0.0; usable.len()];
        let mut tree_count = vec![0usize; usable.len()];
        let mut oob: Vec<usize> = Vec::with_capacity(usable.len());
        let mut psi: Vec<f64> = Vec::with_capacity(usable.len());
        for i in 0..n {
            oob.clear();
            oob.extend(
                (0..usable.len()).filter(|&u| !in_group[self.trees[usable[u]].group as usize][i]),
            );
            let fallback = oob.is_empty();
            if fallback {
                fallback_points += 1;
                oob.extend(0..usable.len());
            }
            let stats = |u: usize| self.trees[usable[u]].leaf_stats(leaf_of[u][i] as usize);
            let mut m = Moments::default();
            for &u in &oob {
                m.add(stats(u));
            }
            let (m, theta, d) = m.solve()?;
            predictions[i] = theta;
            if fallback {
                continue;
            }
            psi.clear();
            psi.extend(oob.iter().map(|&u| m.psi(stats(u), theta, d)));
            let psi_bar = psi.iter().sum::<f64>() / psi.len() as f64;
            for (&u, &p) in oob.iter().zip(&psi) {
                tree_sum[u] += theta + p - psi_bar;
                tree_count[u] += 1;
            }
        }
        let ate = predictions.iter().sum::<f64>() / n as f64;
        let se = if self.params.group_size < 2 {
            None
        } else {
            let grove: Vec<(u32, f64)> = (0..usable.len())
                .filter(|&u| tree_count[u] > 0)
                .map(|u| (self.trees[usable[u]].group, tree_sum[u] / tree_count[u] as f64))
                .collect();
            grove_variance(&grove).map(f64::sqrt)
        };
        Ok(AteEstimate {
            ate,
            se,
            predictions,
            fallback_points,
        })
    }
}
