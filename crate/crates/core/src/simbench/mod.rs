//! Simulation designs with known truths, and the experiments that check
//! the estimator against them.

mod design;
mod example1;
mod experiments;
mod oracle;
mod registry;

pub use design::{
    covariate_levels, simulate_dataset, simulate_subjects, LatentDraw, SimDesign, SimulatedSubject,
    TreatmentSpec, WeibullSpec, COVARIATES, FOREST_COVARIATES,
};
pub use example1::{cif_closed_form, example1_censoring_rate, example1_contrasts, example1_design};
pub use experiments::{
    replicate_dataset, run_coverage_experiment, run_ranking_experiment, scheme_config, CoverageReport,
    CoverageRow, CoverageSpec, RankingReport, RankingRow, RankingSpec, ReplicateEstimate, Scheme,
};
pub use oracle::{gauss_legendre, gauss_legendre_on, oracle_true_ate};
pub use registry::{registry_dataset, AGE_GROUPS, DRUGS, MAX_FOLLOW_UP};
