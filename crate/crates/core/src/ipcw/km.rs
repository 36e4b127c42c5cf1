use std::collections::BTreeMap;
use std::io::Write;

use crate::dataset::{stratum_key, Dataset, ResolvedStrata, Status, StratumKey};
use crate::error::{Error, Result};

/// Right-continuous, non-increasing step function starting at 1.
#[derive(Debug, Clone, PartialEq)]
pub struct SurvivalCurve {
    jump_times: Vec<f64>,
    values: Vec<f64>,
    stratum: StratumKey,
}

impl SurvivalCurve {
    pub fn jump_times(&self) -> &[f64] {
        &self.jump_times
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn stratum(&self) -> &StratumKey {
        &self.stratum
    }

    /// Value at `t`, counting a jump at `t` itself.
    pub fn value_at(&self, t: f64) -> f64 {
        let i = self.jump_times.partition_point(|&s| s <= t);
        if i == 0 {
            1.0
        } else {
            self.values[i - 1]
        }
    }

    /// Left limit at `t`: the product over jumps strictly before `t`.
    pub fn left_limit(&self, t: f64) -> f64 {
        let i = self.jump_times.partition_point(|&s| s < t);
        if i == 0 {
            1.0
        } else {
            self.values[i - 1]
        }
    }
}

pub fn eval_left_limit(curve: &SurvivalCurve, t: f64) -> f64 {
    curve.left_limit(t)
}

/// Per-stratum curves together with the strata they were fitted on.
#[derive(Debug, Clone)]
pub struct CurveSet {
    strata: ResolvedStrata,
    curves: BTreeMap<StratumKey, SurvivalCurve>,
}

impl CurveSet {
    pub fn strata(&self) -> &ResolvedStrata {
        &self.strata
    }

    pub fn curves(&self) -> &BTreeMap<StratumKey, SurvivalCurve> {
        &self.curves
    }

    pub fn get(&self, key: &StratumKey) -> Result<&SurvivalCurve> {
        self.curves
            .get(key)
            .ok_or_else(|| Error::Estimation(format!("no observations in stratum {key}")))
    }

    /// Curve for a constant-one survival in every stratum.
    pub fn constant(strata: ResolvedStrata, keys: impl IntoIterator<Item = StratumKey>) -> Self {
        let curves = keys
            .into_iter()
            .map(|k| {
                (
                    k.clone(),
                    SurvivalCurve {
                        jump_times: Vec::new(),
                        values: Vec::new(),
                        stratum: k,
                    },
                )
            })
            .collect();
        CurveSet { strata, curves }
    }

    /// Writes `stratum,time,value` rows, one per jump.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["stratum", "time", "value"])?;
        for (key, curve) in &self.curves {
            for (t, v) in curve.jump_times.iter().zip(&curve.values) {
                w.write_record([key.to_string(), t.to_string(), v.to_string()])?;
            }
        }
        w.flush()?;
        Ok(())
    }
}

/// Reverse Kaplan-Meier estimate of the censoring survival function.
///
/// At tied times, observed events are removed from the risk set before
/// censorings.
pub fn fit_reverse_km(data: &Dataset, strata: &ResolvedStrata) -> Result<CurveSet> {
    fit_by_stratum(data, strata, Status::Censored)
}

/// Kaplan-Meier estimate of the latent competing-event survival function.
///
/// At tied times, events of interest and censorings are removed from the
/// risk set before competing events.
pub fn fit_competing_km(data: &Dataset, strata: &ResolvedStrata) -> Result<CurveSet> {
    fit_by_stratum(data, strata, Status::Competing)
}

fn fit_by_stratum(data: &Dataset, strata: &ResolvedStrata, target: Status) -> Result<CurveSet> {
    let mut groups: BTreeMap<StratumKey, Vec<(f64, Status)>> = BTreeMap::new();
    for r in data.records() {
        groups
            .entry(stratum_key(r, strata))
            .or_default()
            .push((r.time, r.status));
    }
    let curves = groups
        .into_iter()
        .map(|(key, obs)| {
            let curve = product_limit(obs, target, key.clone())?;
            Ok((key, curve))
        })
        .collect::<Result<_>>()?;
    Ok(CurveSet {
        strata: strata.clone(),
        curves,
    })
}

/// Product-limit curve treating `target` as the event.
///
/// At each distinct time `t` with `d` target observations the factor is
/// `1 - d / (Y(t) - e)`, with `Y(t)` the number still under observation and
/// `e` the non-target observations at exactly `t`.
fn product_limit(
    mut obs: Vec<(f64, Status)>,
    target: Status,
    stratum: StratumKey,
) -> Result<SurvivalCurve> {
    if obs.is_empty() {
        return Err(Error::Estimation(format!("stratum {stratum} is empty")));
    }
    obs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut at_risk = obs.len();
    let mut surv = 1.0;
    let mut jump_times = Vec::new();
    let mut values = Vec::new();
    let mut i = 0;
    while i < obs.len() {
        let t = obs[i].0;
        let mut hits = 0usize;
        let mut others = 0usize;
        let mut j = i;
        while j < obs.len() && obs[j].0 == t {
            if obs[j].1 == target {
                hits += 1;
            } else {
                others += 1;
            }
            j += 1;
        }
        if hits > 0 {
            let denom = (at_risk - others) as f64;
            surv *= 1.0 - hits as f64 / denom;
            jump_times.push(t);
            values.push(surv);
        }
        at_risk -= hits + others;
        i = j;
    }
    Ok(SurvivalCurve {
        jump_times,
        values,
        stratum,
    })
}
