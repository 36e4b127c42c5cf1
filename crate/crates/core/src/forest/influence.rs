use crate::error::{Error, Result};

/// Both algebraic forms of the influence function of the effect at one
/// observation, given the propensity `pi`, the marginal outcome mean `m_bar`
/// and the effect `theta`:
///
/// * `(a/pi - (1-a)/(1-pi)) (y - m_bar - (a - pi) theta)`
/// * `(a - pi) / (pi (1 - pi)) (y - m_bar - (a - pi) theta)`
pub fn phi_influence_forms(y: f64, a: f64, pi: f64, m_bar: f64, theta: f64) -> Result<(f64, f64)> {
    if !(pi > 0.0 && pi < 1.0) {
        return Err(Error::Domain(format!("propensity {pi} is outside (0, 1)")));
    }
    let residual = y - (m_bar + (a - pi) * theta);
    let ipw = (a / pi - (1.0 - a) / (1.0 - pi)) * residual;
    let centred = (a - pi) / (pi * (1.0 - pi)) * residual;
    Ok((ipw, centred))
}

/// Influence function value, checked against its second form.
pub fn phi_influence(y: f64, a: f64, pi: f64, m_bar: f64, theta: f64) -> Result<f64> {
    let (first, second) = phi_influence_forms(y, a, pi, m_bar, theta)?;
    let tol = 1e-10 * first.abs().max(1.0);
    if (first - second).abs() > tol {
        return Err(Error::Estimation(format!(
            "influence function forms disagree: {first} vs {second}"
        )));
    }
    Ok(first)
}
