//! Ranking binary treatments by their effect on a competing-risks outcome.
//!
//! The pipeline has two steps. Censoring and competing-event survival are
//! estimated by stratified product-limit curves and turned into
//! inverse-probability-weighted outcomes, and a generalized random forest
//! then estimates the conditional treatment effect on those outcomes. Its
//! average over the sample is the reported effect.

pub mod cli;
pub mod dataset;
pub mod effects;
pub mod error;
pub mod forest;
pub mod ipcw;
pub mod simbench;

pub use error::{Error, Result};
