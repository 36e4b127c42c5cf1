use super::node::label_into;

/// Splits whose criterion is below this fraction of the total squared
/// pseudo-outcome mass are treated as zero gain.
const ZERO_GAIN: f64 = 1e-12;

/// Axis-aligned split: rows with `x[covariate] <= threshold` go left.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitCandidate {
    pub covariate: usize,
    pub threshold: f64,
    /// Criterion `sum_l (sum_{i in D_l} rho_i)^2 / |D_l|`.
    pub gain: f64,
    pub left_size: usize,
}

#[derive(Default)]
pub(crate) struct SplitScratch {
    rho: Vec<f64>,
    sorted: Vec<(f64, f64, bool)>,
}

/// Best admissible split of a node over the candidate covariates.
///
/// Both daughters need at least `min_node_size` members and both treatment
/// arms. Thresholds are midpoints between consecutive distinct values. Ties
/// in the criterion go to the lowest covariate index, then the lowest
/// threshold. Returns `None` for degenerate or zero-gain nodes.
pub fn best_split(
    members: &[u32],
    a: &[f64],
    y: &[f64],
    columns: &[Vec<f64>],
    candidates: &[usize],
    min_node_size: usize,
) -> Option<SplitCandidate> {
    let mut scratch = SplitScratch::default();
    best_split_with(members, a, y, columns, candidates, min_node_size, &mut scratch)
}

pub(crate) fn best_split_with(
    members: &[u32],
    a: &[f64],
    y: &[f64],
    columns: &[Vec<f64>],
    candidates: &[usize],
    min_node_size: usize,
    scratch: &mut SplitScratch,
) -> Option<SplitCandidate> {
    let m = members.len();
    let min_size = min_node_size.max(1);
    if m < 2 * min_size {
        return None;
    }
    label_into(members, a, y, &mut scratch.rho).ok()?;
    let rho = &scratch.rho;
    let total: f64 = rho.iter().sum();
    let mass: f64 = rho.iter().map(|r| r * r).sum();
    if mass == 0.0 {
        return None;
    }
    // gains closer than this are ties, whatever rounding says
    let tie = ZERO_GAIN * mass;
    let treated_total = members.iter().filter(|&&i| a[i as usize] == 1.0).count();

    let mut best: Option<SplitCandidate> = None;
    let mut sorted_cands = candidates.to_vec();
    sorted_cands.sort_unstable();
    sorted_cands.dedup();
    for &j in &sorted_cands {
        let col = &columns[j];
        let sorted = &mut scratch.sorted;
        sorted.clear();
        sorted.extend(
            members
                .iter()
                .zip(rho)
                .map(|(&i, &r)| (col[i as usize], r, a[i as usize] == 1.0)),
        );
        sorted.sort_by(|p, q| p.0.total_cmp(&q.0));
        if sorted[0].0 == sorted[m - 1].0 {
            continue;
        }
        let (mut left_sum, mut left_treated) = (0.0, 0usize);
        for i in 0..m - 1 {
            left_sum += sorted[i].1;
            left_treated += usize::from(sorted[i].2);
            let left_n = i + 1;
            if sorted[i].0 == sorted[i + 1].0 || left_n < min_size {
                continue;
            }
            let right_n = m - left_n;
            if right_n < min_size {
                break;
            }
            let right_treated = treated_total - left_treated;
            if left_treated == 0
                || left_treated == left_n
                || right_treated == 0
                || right_treated == right_n
            {
                continue;
            }
            let right_sum = total - left_sum;
            let gain = left_sum * left_sum / left_n as f64 + right_sum * right_sum / right_n as f64;
            if best.is_none_or(|b| gain > b.gain + tie) {
                best = Some(SplitCandidate {
                    covariate: j,
                    threshold: midpoint(sorted[i].0, sorted[i + 1].0),
                    gain,
                    left_size: left_n,
                });
            }
        }
    }
    best.filter(|b| b.gain > ZERO_GAIN * mass)
}

/// A threshold `t` with `lo <= t < hi`.
fn midpoint(lo: f64, hi: f64) -> f64 {
    let mid = lo + (hi - lo) / 2.0;
    if mid < hi {
        mid
    } else {
        lo
    }
}
