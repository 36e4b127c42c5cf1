//! Inverse probability of censoring weighted outcomes.
//!
//! Censoring survival `G` and latent competing-event survival `G2` are
//! estimated by stratified product-limit estimators. The weighted outcomes
//! then divide the event indicator `1{T <= t0, status = 1}` by the left
//! limit of `G` (crude scale) or of `G * G2` (net scale).

mod km;
mod outcomes;

pub use km::{eval_left_limit, fit_competing_km, fit_reverse_km, CurveSet, SurvivalCurve};
pub use outcomes::{
    build_crude_outcomes, build_net_outcomes, floored_count, outcome_values, write_weights_csv,
    WeightedOutcome,
};
