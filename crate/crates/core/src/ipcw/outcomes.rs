use std::io::Write;

use super::km::CurveSet;
use crate::dataset::{stratum_key, Dataset, ObservedRecord, Status};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeightedOutcome {
    /// Event indicator divided by `denominator`.
    pub value: f64,
    /// Evaluated survival left limit after flooring.
    pub denominator: f64,
    /// Whether the floor replaced a smaller estimate.
    pub floored: bool,
}

/// Crude-scale outcome `1{T <= t0, status = 1} / max(G(T-), floor)`.
pub fn build_crude_outcomes(
    data: &Dataset,
    censoring: &CurveSet,
    horizon: f64,
    floor: f64,
) -> Result<Vec<WeightedOutcome>> {
    data.records()
        .iter()
        .map(|r| {
            let g = censoring.get(&stratum_key(r, censoring.strata()))?.left_limit(r.time);
            weigh(r, g, horizon, floor)
        })
        .collect()
}

/// Net-scale outcome `1{T <= t0, status = 1} / max(G(T-) * G2(T-), floor)`.
pub fn build_net_outcomes(
    data: &Dataset,
    censoring: &CurveSet,
    competing: &CurveSet,
    horizon: f64,
    floor: f64,
) -> Result<Vec<WeightedOutcome>> {
    data.records()
        .iter()
        .map(|r| {
            let g = censoring.get(&stratum_key(r, censoring.strata()))?.left_limit(r.time);
            let g2 = competing.get(&stratum_key(r, competing.strata()))?.left_limit(r.time);
            weigh(r, g * g2, horizon, floor)
        })
        .collect()
}

fn weigh(r: &ObservedRecord, raw: f64, horizon: f64, floor: f64) -> Result<WeightedOutcome> {
    let observed = r.time <= horizon && r.status == Status::Event;
    let floored = raw < floor;
    let denominator = if floored { floor } else { raw };
    let value = if observed {
        if denominator <= 0.0 {
            return Err(Error::Positivity { id: r.id.clone() });
        }
        1.0 / denominator
    } else {
        0.0
    };
    Ok(WeightedOutcome {
        value,
        denominator,
        floored,
    })
}

pub fn outcome_values(outcomes: &[WeightedOutcome]) -> Vec<f64> {
    outcomes.iter().map(|o| o.value).collect()
}

/// Number of records whose denominator was raised to the floor.
pub fn floored_count(outcomes: &[WeightedOutcome]) -> usize {
    outcomes.iter().filter(|o| o.floored).count()
}

/// Writes `id,value,denominator,floored` rows.
pub fn write_weights_csv<W: Write>(
    data: &Dataset,
    outcomes: &[WeightedOutcome],
    writer: W,
) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["id", "value", "denominator", "floored"])?;
    for (r, o) in data.records().iter().zip(outcomes) {
        w.write_record([
            r.id.clone(),
            o.value.to_string(),
            o.denominator.to_string(),
            u8::from(o.floored).to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::ResolvedStrata;
    use crate::ipcw::{fit_competing_km, fit_reverse_km};

    fn rec(time: f64, status: Status) -> ObservedRecord {
        ObservedRecord {
            id: format!("r{time}"),
            time,
            status,
            treatments: vec![0],
            covariates: vec![],
        }
    }

    #[test]
    fn censored_subjects_get_zero() {
        let o = weigh(&rec(1.0, Status::Censored), 0.3, 5.0, 0.01).unwrap();
        assert_eq!(o.value, 0.0);
        let o = weigh(&rec(1.0, Status::Competing), 0.0, 5.0, 0.0).unwrap();
        assert_eq!(o.value, 0.0);
    }

    #[test]
    fn event_after_horizon_is_zero() {
        let o = weigh(&rec(6.0, Status::Event), 0.5, 5.0, 0.01).unwrap();
        assert_eq!(o.value, 0.0);
    }

    #[test]
    fn reciprocal_of_left_limit() {
        use Status::*;
        let recs = vec![
            rec(1.0, Event),
            rec(2.0, Censored),
            rec(2.5, Event),
            rec(3.0, Competing),
            rec(4.0, Censored),
        ];
        let d = Dataset::new(recs, vec!["a".into()], vec![], vec![]).unwrap();
        let strata = ResolvedStrata::unstratified();
        let g = fit_reverse_km(&d, &strata).unwrap();
        let y = build_crude_outcomes(&d, &g, 3.0, 0.01).unwrap();
        // G jumps to 3/4 at t=2, so G(2.5-) = 3/4
        assert_eq!(y[0].value, 1.0);
        assert_eq!(y[2].value, 1.0 / 0.75);
        assert_eq!(y[2].denominator, 0.75);
        assert!(y.iter().all(|o| !o.floored));
    }

    #[test]
    fn net_uses_product_of_left_limits() {
        let o = weigh(&rec(1.0, Status::Event), 0.8 * 0.5, 5.0, 0.01).unwrap();
        assert!((o.value - 2.5).abs() < 1e-15);
    }

    #[test]
    fn floor_binds_and_is_flagged() {
        let o = weigh(&rec(1.0, Status::Event), 0.001, 5.0, 0.01).unwrap();
        assert!(o.floored);
        assert_eq!(o.denominator, 0.01);
        assert_eq!(o.value, 100.0);
    }

    #[test]
    fn zero_denominator_without_floor_violates_positivity() {
        let err = weigh(&rec(1.0, Status::Event), 0.0, 5.0, 0.0).unwrap_err();
        assert!(matches!(err, Error::Positivity { .. }));
    }

    #[test]
    fn net_matches_crude_without_competing_events() {
        use Status::*;
        let recs = vec![rec(1.0, Event), rec(2.0, Censored), rec(2.5, Event), rec(4.0, Censored)];
        let d = Dataset::new(recs, vec!["a".into()], vec![], vec![]).unwrap();
        let strata = ResolvedStrata::unstratified();
        let g = fit_reverse_km(&d, &strata).unwrap();
        let g2 = fit_competing_km(&d, &strata).unwrap();
        let crude = build_crude_outcomes(&d, &g, 3.0, 0.01).unwrap();
        let net = build_net_outcomes(&d, &g, &g2, 3.0, 0.01).unwrap();
        assert_eq!(crude, net);
    }
}
