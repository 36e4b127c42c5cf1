#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crgrf::dataset::{Dataset, ObservedRecord, Status};
use crgrf::forest::label_pseudo_outcomes;

pub const STATUSES: [Status; 3] = [Status::Censored, Status::Event, Status::Competing];

/// One-treatment dataset from `(time, status)` pairs, alternating arms.
pub fn dataset_from(obs: &[(f64, Status)]) -> Dataset {
    let records = obs
        .iter()
        .enumerate()
        .map(|(i, &(time, status))| ObservedRecord {
            id: format!("r{i}"),
            time,
            status,
            treatments: vec![(i % 2) as u8],
            covariates: vec![],
        })
        .collect();
    Dataset::new(records, vec!["a".into()], vec![], vec![]).unwrap()
}

/// Product-limit survival at `t` computed straight from the risk sets:
/// for each distinct target time `s <= t`, in increasing order, multiply by
/// `1 - d(s) / (#{T >= s} - #{T = s, not target})`.
pub fn brute_product_limit(obs: &[(f64, Status)], target: Status, t: f64) -> f64 {
    let mut times: Vec<f64> = obs.iter().filter(|o| o.1 == target && o.0 <= t).map(|o| o.0).collect();
    times.sort_by(f64::total_cmp);
    times.dedup();
    let mut s = 1.0;
    for u in times {
        let d = obs.iter().filter(|o| o.0 == u && o.1 == target).count();
        let others = obs.iter().filter(|o| o.0 == u && o.1 != target).count();
        let at_risk = obs.iter().filter(|o| o.0 >= u).count();
        s *= 1.0 - d as f64 / (at_risk - others) as f64;
    }
    s
}

/// Small survival fixtures with heavy ties: every status pattern on a
/// few times for n <= 4, then random draws up to n = 8.
pub fn km_fixtures() -> Vec<Vec<(f64, Status)>> {
    let mut out = Vec::new();
    let choices: Vec<(f64, Status)> = [0.0, 1.0, 2.0]
        .iter()
        .flat_map(|&t| STATUSES.iter().map(move |&s| (t, s)))
        .collect();
    for n in 1..=4u32 {
        let total = choices.len().pow(n);
        for code in 0..total {
            let mut c = code;
            let obs = (0..n)
                .map(|_| {
                    let o = choices[c % choices.len()];
                    c /= choices.len();
                    o
                })
                .collect();
            out.push(obs);
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for _ in 0..3000 {
        let n = rng.gen_range(5..=8);
        out.push(
            (0..n)
                .map(|_| (f64::from(rng.gen_range(0..5u8)) * 0.5, STATUSES[rng.gen_range(0..3)]))
                .collect(),
        );
    }
    out
}

/// A split node: treatment, outcome and covariate columns.
pub struct SplitFixture {
    pub a: Vec<f64>,
    pub y: Vec<f64>,
    pub columns: Vec<Vec<f64>>,
    pub min_node_size: usize,
}

/// Random nodes with n <= 12 and p <= 2, covariates on a coarse grid so
/// ties are common.
pub fn split_fixtures() -> Vec<SplitFixture> {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    (0..2000)
        .map(|case| {
            let n = 2 + case % 11;
            let p = 1 + (case / 11) % 2;
            let a = (0..n).map(|_| f64::from(rng.gen_bool(0.5) as u8)).collect();
            let y = (0..n)
                .map(|_| if rng.gen_bool(0.4) { 0.0 } else { rng.gen_range(0.0..4.0) })
                .collect();
            let columns = (0..p)
                .map(|_| (0..n).map(|_| f64::from(rng.gen_range(0..4u8))).collect())
                .collect();
            SplitFixture {
                a,
                y,
                columns,
                min_node_size: 1 + case % 3,
            }
        })
        .collect()
}

/// Largest criterion over every admissible partition `x_j <= v`, searching
/// all covariates and observed values.
pub fn brute_best_gain(f: &SplitFixture) -> Option<f64> {
    let n = f.a.len();
    let members: Vec<u32> = (0..n as u32).collect();
    let rho = label_pseudo_outcomes(&members, &f.a, &f.y).ok()?;
    let mass: f64 = rho.iter().map(|r| r * r).sum();
    let mut best: Option<f64> = None;
    for col in &f.columns {
        for &v in col {
            let left: Vec<usize> = (0..n).filter(|&i| col[i] <= v).collect();
            let right: Vec<usize> = (0..n).filter(|&i| col[i] > v).collect();
            let ok = |side: &[usize]| {
                let treated = side.iter().filter(|&&i| f.a[i] == 1.0).count();
                side.len() >= f.min_node_size.max(1) && treated > 0 && treated < side.len()
            };
            if !ok(&left) || !ok(&right) {
                continue;
            }
            let sum = |side: &[usize]| side.iter().map(|&i| rho[i]).sum::<f64>();
            let gain = sum(&left).powi(2) / left.len() as f64 + sum(&right).powi(2) / right.len() as f64;
            best = Some(best.map_or(gain, |b: f64| b.max(gain)));
        }
    }
    best.filter(|&g| g > 1e-12 * mass)
}
