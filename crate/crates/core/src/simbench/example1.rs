//! Two treatments with constant cause-specific hazards
//! `lambda1 = exp(-0.2 a1 - 0.2 a2)` and `lambda2 = exp(-0.2 a1)`.

use std::collections::BTreeMap;

use super::design::{SimDesign, TreatmentSpec, WeibullSpec};

fn hazards(a1: u8, a2: u8) -> (f64, f64) {
    let (a1, a2) = (f64::from(a1), f64::from(a2));
    ((-0.2 * a1 - 0.2 * a2).exp(), (-0.2 * a1).exp())
}

/// Cumulative incidence of cause 1 at `t`.
pub fn cif_closed_form(t: f64, a1: u8, a2: u8) -> f64 {
    let (l1, l2) = hazards(a1, a2);
    l1 / (l1 + l2) * -(-(l1 + l2) * t).exp_m1()
}

/// Risk differences for `a1` and for `a2` at `t`, each averaged over the
/// other treatment taking 0 and 1 with probability 1/2.
pub fn example1_contrasts(t: f64) -> (f64, f64) {
    let f = |a1, a2| cif_closed_form(t, a1, a2);
    let d1 = 0.5 * (f(1, 0) - f(0, 0)) + 0.5 * (f(1, 1) - f(0, 1));
    let d2 = 0.5 * (f(0, 1) - f(0, 0)) + 0.5 * (f(1, 1) - f(1, 0));
    (d1, d2)
}

/// Rate of exponential censoring under which a fraction `censored` of
/// subjects is censored before either event, treatments being fair coins.
pub fn example1_censoring_rate(censored: f64) -> f64 {
    let totals: Vec<f64> = [(0, 0), (0, 1), (1, 0), (1, 1)]
        .iter()
        .map(|&(a1, a2)| {
            let (l1, l2) = hazards(a1, a2);
            l1 + l2
        })
        .collect();
    let frac = |r: f64| totals.iter().map(|l| r / (r + l)).sum::<f64>() / 4.0;
    let (mut lo, mut hi) = (0.0, 1.0);
    while frac(hi) < censored {
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = (lo + hi) / 2.0;
        if frac(mid) < censored {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    (lo + hi) / 2.0
}

/// The two-treatment design with independent exponential censoring of the
/// given fraction and horizon 1. The simulator's covariates are pure noise.
pub fn example1_design(n: usize, censored: f64) -> SimDesign {
    let coin = |name: &str| TreatmentSpec {
        name: name.into(),
        intercept: 0.0,
        slope: 0.0,
        driver: "x1".into(),
    };
    let law = |coefs: &[(&str, f64)]| WeibullSpec {
        shape: 1.0,
        scale: 1.0,
        coefficients: coefs.iter().map(|&(k, v)| (k.to_string(), v)).collect::<BTreeMap<_, _>>(),
    };
    let censoring = (censored > 0.0).then(|| WeibullSpec::constant(1.0, 1.0 / example1_censoring_rate(censored)));
    SimDesign {
        n,
        horizon: 1.0,
        event: law(&[("a1", -0.2), ("a2", -0.2)]),
        competing: Some(law(&[("a1", -0.2)])),
        censoring,
        treatments: vec![coin("a1"), coin("a2")],
    }
}
