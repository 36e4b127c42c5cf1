use std::collections::HashMap;
use std::f64::consts::PI;

use super::design::{covariate_levels, SimDesign, WeibullSpec};
use crate::dataset::Scale;
use crate::error::{Error, Result};

/// Nodes per continuous covariate.
const COVARIATE_NODES: usize = 32;
/// Nodes for the cumulative incidence integral over time.
const TIME_NODES: usize = 64;

/// Gauss-Legendre nodes and weights on [-1, 1].
pub fn gauss_legendre(m: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; m];
    let mut w = vec![0.0; m];
    for i in 0..m.div_ceil(2) {
        let mut z = (PI * (i as f64 + 0.75) / (m as f64 + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (mut p1, mut p2) = (1.0, 0.0);
            for j in 0..m {
                let p3 = p2;
                p2 = p1;
                p1 = ((2 * j + 1) as f64 * z * p2 - j as f64 * p3) / (j + 1) as f64;
            }
            dp = m as f64 * (z * p1 - p2) / (z * z - 1.0);
            let step = p1 / dp;
            z -= step;
            if step.abs() < 1e-15 {
                break;
            }
        }
        x[i] = -z;
        x[m - 1 - i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
        w[m - 1 - i] = w[i];
    }
    (x, w)
}

/// Gauss-Legendre rule mapped to [a, b] as (node, weight) pairs.
pub fn gauss_legendre_on(m: usize, a: f64, b: f64) -> Vec<(f64, f64)> {
    let (x, w) = gauss_legendre(m);
    let half = (b - a) / 2.0;
    x.iter().zip(&w).map(|(x, w)| (a + half * (x + 1.0), half * w)).collect()
}

/// `P(T^1 <= t0)` with no competing event.
fn net_risk(event: &WeibullSpec, eta1: f64, t0: f64) -> f64 {
    -(-event.cumulative_hazard(t0, eta1)).exp_m1()
}

/// Cumulative incidence `int_0^t0 f1(s) S2(s) ds`, integrated over the
/// event's cumulative hazard `v = H1(s)` so the integrand is smooth.
fn crude_risk(event: &WeibullSpec, eta1: f64, competing: &WeibullSpec, eta2: f64, t0: f64, rule: &[(f64, f64)]) -> f64 {
    let v_max = event.cumulative_hazard(t0, eta1);
    rule.iter()
        .map(|&(u, w)| {
            let v = v_max * (u + 1.0) / 2.0;
            let s = event.time_from_exponential(v, eta1);
            w * v_max / 2.0 * (-v - competing.cumulative_hazard(s, eta2)).exp()
        })
        .sum()
}

/// True average effect of treatment `k` on `scale` at `t0`, integrating the
/// covariate law and the natural distribution of the other treatments.
///
/// Continuous covariates use Gauss-Legendre nodes, categorical ones their
/// equally likely levels. Only columns that enter the relevant hazards, or
/// drive a treatment that does, are integrated.
pub fn oracle_true_ate(design: &SimDesign, k: usize, scale: Scale, t0: f64) -> Result<f64> {
    design.validate()?;
    if k >= design.treatments.len() {
        return Err(Error::Config(format!("treatment index {k} out of range")));
    }
    let target = design.treatments[k].name.as_str();
    let competing = match scale {
        Scale::Crude => design.competing.as_ref(),
        Scale::Net => None,
    };
    let laws: Vec<&WeibullSpec> = std::iter::once(&design.event).chain(competing).collect();
    if laws.iter().all(|l| !l.coefficients.contains_key(target)) {
        return Ok(0.0);
    }

    let mut others: Vec<usize> = Vec::new();
    let mut covs: Vec<&str> = Vec::new();
    for law in &laws {
        for name in law.coefficients.keys() {
            match design.treatment_index(name) {
                Some(j) if j != k => others.push(j),
                Some(_) => {}
                None => covs.push(name),
            }
        }
    }
    others.sort_unstable();
    others.dedup();
    for &j in &others {
        covs.push(design.treatments[j].driver.as_str());
    }
    covs.sort_unstable();
    covs.dedup();

    let dims: Vec<Vec<(f64, f64)>> = covs
        .iter()
        .map(|c| match covariate_levels(c) {
            Some(l) => (0..l).map(|v| (f64::from(v), 1.0 / f64::from(l))).collect(),
            None => gauss_legendre_on(COVARIATE_NODES, 0.0, 1.0),
        })
        .collect();
    let (time_nodes, time_weights) = gauss_legendre(TIME_NODES);
    let time_rule: Vec<(f64, f64)> = time_nodes.into_iter().zip(time_weights).collect();

    let mut values: HashMap<&str, f64> = HashMap::new();
    let mut index = vec![0usize; dims.len()];
    let mut total = 0.0;
    loop {
        let mut wx = 1.0;
        for (d, (&name, &i)) in covs.iter().zip(&index).enumerate() {
            let (v, w) = dims[d][i];
            values.insert(name, v);
            wx *= w;
        }
        for bits in 0..(1usize << others.len()) {
            let mut w = wx;
            for (b, &j) in others.iter().enumerate() {
                let t = &design.treatments[j];
                let a = (bits >> b) & 1;
                let p = t.propensity(values[t.driver.as_str()]);
                w *= if a == 1 { p } else { 1.0 - p };
                values.insert(t.name.as_str(), a as f64);
            }
            let mut risk = |arm: f64| {
                values.insert(target, arm);
                let lookup = |name: &str| values[name];
                let eta1 = design.event.linear_predictor(lookup);
                match competing {
                    None => net_risk(&design.event, eta1, t0),
                    Some(c) => crude_risk(&design.event, eta1, c, c.linear_predictor(lookup), t0, &time_rule),
                }
            };
            total += w * (risk(1.0) - risk(0.0));
        }
        // advance the mixed-radix counter
        let mut d = 0;
        while d < dims.len() {
            index[d] += 1;
            if index[d] < dims[d].len() {
                break;
            }
            index[d] = 0;
            d += 1;
        }
        if d == dims.len() {
            break;
        }
    }
    Ok(total)
}
