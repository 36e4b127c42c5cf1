//! Python bindings for the competing-risks causal forest.
//!
//! ```python
//! import pycrgrf
//! data = pycrgrf.Dataset.simulate(n=1000, seed=1)
//! est = pycrgrf.estimate(data, "a1", horizon=0.5, scale="crude")
//! print(est.ate, est.ci_low, est.ci_high)
//! ```

use std::collections::BTreeMap;

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use crgrf::dataset::{self, AnalysisConfig, ResolvedStrata, Scale, Schema, StrataTerm};
use crgrf::effects::{self, EffectEstimate};
use crgrf::ipcw;
use crgrf::simbench::{self, SimDesign};

fn to_py(err: crgrf::Error) -> PyErr {
    if err.is_usage() {
        PyValueError::new_err(err.to_string())
    } else {
        PyRuntimeError::new_err(err.to_string())
    }
}

fn parse_scale(s: &str) -> PyResult<Scale> {
    s.parse().map_err(to_py)
}

fn load_design(design: Option<&str>) -> PyResult<SimDesign> {
    match design {
        None | Some("builtin") => Ok(SimDesign::builtin()),
        Some(path) => SimDesign::load(path).map_err(to_py),
    }
}

/// Right-censored records with binary treatments and numeric covariates.
#[pyclass(frozen)]
struct Dataset {
    inner: dataset::Dataset,
}

#[pymethods]
impl Dataset {
    #[staticmethod]
    #[pyo3(signature = (path, time_col, status_col, treatment_cols, covariate_cols=vec![], categorical_cols=vec![], id_col=None))]
    fn from_csv(
        path: &str,
        time_col: &str,
        status_col: &str,
        treatment_cols: Vec<String>,
        covariate_cols: Vec<String>,
        categorical_cols: Vec<String>,
        id_col: Option<String>,
    ) -> PyResult<Self> {
        let schema = Schema {
            id_col,
            time_col: time_col.into(),
            status_col: status_col.into(),
            treatment_cols,
            covariate_cols,
            categorical_cols,
        };
        let inner = dataset::load_csv(path, &schema).map_err(to_py)?;
        Ok(Dataset { inner })
    }

    /// Draw from a simulation design; `design` is a TOML path or "builtin".
    #[staticmethod]
    #[pyo3(signature = (n, seed=0, design=None))]
    fn simulate(n: usize, seed: u64, design: Option<&str>) -> PyResult<Self> {
        let design = load_design(design)?.with_n(n);
        let inner = simbench::simulate_dataset(&design, seed).map_err(to_py)?;
        Ok(Dataset { inner })
    }

    #[staticmethod]
    #[pyo3(signature = (n, seed=0, censored=0.2))]
    fn example1(n: usize, seed: u64, censored: f64) -> PyResult<Self> {
        let design = simbench::example1_design(n, censored);
        let inner = simbench::simulate_dataset(&design, seed).map_err(to_py)?;
        Ok(Dataset { inner })
    }

    /// Synthetic registry-style cohort with drug-class treatments.
    #[staticmethod]
    #[pyo3(signature = (n, seed=0))]
    fn registry(n: usize, seed: u64) -> PyResult<Self> {
        let inner = simbench::registry_dataset(n, seed).map_err(to_py)?;
        Ok(Dataset { inner })
    }

    fn write_csv(&self, path: &str) -> PyResult<()> {
        let file = std::fs::File::create(path).map_err(|e| to_py(e.into()))?;
        dataset::write_csv(&self.inner, file).map_err(to_py)
    }

    #[getter]
    fn n(&self) -> usize {
        self.inner.n()
    }

    #[getter]
    fn k(&self) -> usize {
        self.inner.k()
    }

    #[getter]
    fn treatment_names(&self) -> Vec<String> {
        self.inner.treatment_names().to_vec()
    }

    #[getter]
    fn covariate_names(&self) -> Vec<String> {
        self.inner.covariate_names().to_vec()
    }

    #[getter]
    fn times(&self) -> Vec<f64> {
        self.inner.times()
    }

    #[getter]
    fn statuses(&self) -> Vec<u8> {
        self.inner.records().iter().map(|r| r.status.code()).collect()
    }

    fn treatment(&self, name: &str) -> PyResult<Vec<f64>> {
        let k = self.treatment_index(name)?;
        Ok(self.inner.treatment(k))
    }

    fn covariate(&self, name: &str) -> PyResult<Vec<f64>> {
        let j = self
            .inner
            .covariate_index(name)
            .ok_or_else(|| PyValueError::new_err(format!("unknown covariate {name}")))?;
        Ok(self.inner.covariate(j))
    }

    /// Counts of censored, event and competing records.
    fn event_counts(&self) -> BTreeMap<&'static str, usize> {
        let c = self.inner.event_counts();
        BTreeMap::from([("censored", c.censored), ("event", c.event), ("competing", c.competing)])
    }

    fn __len__(&self) -> usize {
        self.inner.n()
    }

    fn __repr__(&self) -> String {
        format!(
            "Dataset(n={}, treatments={:?}, covariates={:?})",
            self.inner.n(),
            self.inner.treatment_names(),
            self.inner.covariate_names()
        )
    }
}

impl Dataset {
    fn treatment_index(&self, name: &str) -> PyResult<usize> {
        self.inner
            .treatment_index(name)
            .ok_or_else(|| PyValueError::new_err(format!("unknown treatment {name}")))
    }
}

#[allow(clippy::too_many_arguments)]
fn make_config(
    horizon: f64,
    strata: Option<Vec<String>>,
    trees: usize,
    seed: u64,
    min_node_size: usize,
    subsample_fraction: f64,
    honesty: bool,
    weight_floor: f64,
    group_size: usize,
    forest_covariates: Option<Vec<String>>,
    ci_level: f64,
) -> PyResult<AnalysisConfig> {
    let mut config = AnalysisConfig::new(horizon);
    if let Some(s) = strata {
        config.strata = s.iter().map(|t| StrataTerm::parse(t)).collect();
    }
    config.trees = trees;
    config.seed = seed;
    config.min_node_size = min_node_size;
    config.subsample_fraction = subsample_fraction;
    config.honesty = honesty;
    config.weight_floor = weight_floor;
    config.group_size = group_size;
    config.forest_covariates = forest_covariates;
    config.ci_level = ci_level;
    config.validate().map_err(to_py)?;
    Ok(config)
}

/// One average treatment effect with its confidence interval.
#[pyclass(frozen, get_all)]
struct Effect {
    treatment: String,
    scale: String,
    ate: f64,
    se: f64,
    ci_low: f64,
    ci_high: f64,
    horizon: f64,
    direction: String,
}

impl From<&EffectEstimate> for Effect {
    fn from(e: &EffectEstimate) -> Self {
        Effect {
            treatment: e.treatment.clone(),
            scale: e.scale.as_str().into(),
            ate: e.ate,
            se: e.se,
            ci_low: e.ci_low,
            ci_high: e.ci_high,
            horizon: e.horizon,
            direction: e.direction().as_str().into(),
        }
    }
}

#[pymethods]
impl Effect {
    fn covers(&self, truth: f64) -> bool {
        self.ci_low <= truth && truth <= self.ci_high
    }

    fn __repr__(&self) -> String {
        format!(
            "Effect({} {}: ate={:.4}, ci=[{:.4}, {:.4}], {})",
            self.treatment, self.scale, self.ate, self.ci_low, self.ci_high, self.direction
        )
    }
}

/// Average effect of one treatment on the crude or net risk scale.
#[pyfunction]
#[pyo3(signature = (
    data, treatment, horizon, scale="crude", strata=None, trees=200, seed=0, min_node_size=5,
    subsample_fraction=0.5, honesty=true, weight_floor=0.01, group_size=4, forest_covariates=None,
    ci_level=0.95
))]
#[allow(clippy::too_many_arguments)]
fn estimate(
    py: Python<'_>,
    data: &Dataset,
    treatment: &str,
    horizon: f64,
    scale: &str,
    strata: Option<Vec<String>>,
    trees: usize,
    seed: u64,
    min_node_size: usize,
    subsample_fraction: f64,
    honesty: bool,
    weight_floor: f64,
    group_size: usize,
    forest_covariates: Option<Vec<String>>,
    ci_level: f64,
) -> PyResult<Effect> {
    let k = data.treatment_index(treatment)?;
    let scale = parse_scale(scale)?;
    let config = make_config(
        horizon, strata, trees, seed, min_node_size, subsample_fraction, honesty, weight_floor,
        group_size, forest_covariates, ci_level,
    )?;
    let est = py
        .detach(|| effects::run_two_step(&data.inner, k, scale, &config))
        .map_err(to_py)?;
    Ok(Effect::from(&est))
}

/// Effects of several treatments, most protective first. Constant
/// treatments are dropped; their names come back as the second element.
#[pyfunction]
#[pyo3(signature = (
    data, horizon, treatments=None, scale="crude", strata=None, trees=200, seed=0, min_node_size=5,
    subsample_fraction=0.5, honesty=true, weight_floor=0.01, group_size=4, forest_covariates=None,
    ci_level=0.95
))]
#[allow(clippy::too_many_arguments)]
fn rank(
    py: Python<'_>,
    data: &Dataset,
    horizon: f64,
    treatments: Option<Vec<String>>,
    scale: &str,
    strata: Option<Vec<String>>,
    trees: usize,
    seed: u64,
    min_node_size: usize,
    subsample_fraction: f64,
    honesty: bool,
    weight_floor: f64,
    group_size: usize,
    forest_covariates: Option<Vec<String>>,
    ci_level: f64,
) -> PyResult<(Vec<Effect>, Vec<String>)> {
    let ks = match treatments {
        Some(names) => names.iter().map(|t| data.treatment_index(t)).collect::<PyResult<Vec<_>>>()?,
        None => (0..data.inner.k()).collect(),
    };
    let scale = parse_scale(scale)?;
    let config = make_config(
        horizon, strata, trees, seed, min_node_size, subsample_fraction, honesty, weight_floor,
        group_size, forest_covariates, ci_level,
    )?;
    let table = py
        .detach(|| effects::rank_treatments(&data.inner, &ks, scale, &config))
        .map_err(to_py)?;
    let entries = table.entries.iter().map(|e| Effect::from(&e.estimate)).collect();
    let skipped = table.skipped.into_iter().map(|s| s.treatment).collect();
    Ok((entries, skipped))
}

/// Left limit `G(t-)` of the censoring survival curve at each record's time.
#[pyfunction]
#[pyo3(signature = (data, strata=vec![]))]
fn reverse_km(data: &Dataset, strata: Vec<String>) -> PyResult<Vec<f64>> {
    let terms: Vec<StrataTerm> = strata.iter().map(|t| StrataTerm::parse(t)).collect();
    let resolved = ResolvedStrata::resolve(&data.inner, &terms, None).map_err(to_py)?;
    let curves = ipcw::fit_reverse_km(&data.inner, &resolved).map_err(to_py)?;
    data.inner
        .records()
        .iter()
        .map(|r| {
            let key = dataset::stratum_key(r, &resolved);
            Ok(curves.get(&key).map_err(to_py)?.left_limit(r.time))
        })
        .collect()
}

/// True average effect under a simulation design, by numerical integration.
#[pyfunction]
#[pyo3(signature = (treatment, scale="crude", horizon=None, design=None))]
fn oracle_true_ate(treatment: &str, scale: &str, horizon: Option<f64>, design: Option<&str>) -> PyResult<f64> {
    let design = load_design(design)?;
    let k = design
        .treatment_index(treatment)
        .ok_or_else(|| PyValueError::new_err(format!("unknown treatment {treatment}")))?;
    let t0 = horizon.unwrap_or(design.horizon);
    simbench::oracle_true_ate(&design, k, parse_scale(scale)?, t0).map_err(to_py)
}

/// Closed-form cumulative incidence of the two-treatment exponential example.
#[pyfunction]
fn cif_closed_form(t: f64, a1: u8, a2: u8) -> f64 {
    simbench::cif_closed_form(t, a1, a2)
}

/// Crude risk differences of the two treatments in the exponential example.
#[pyfunction]
fn oracle_example1(t: f64) -> (f64, f64) {
    simbench::example1_contrasts(t)
}

#[pymodule]
fn pycrgrf(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Dataset>()?;
    m.add_class::<Effect>()?;
    m.add_function(wrap_pyfunction!(estimate, m)?)?;
    m.add_function(wrap_pyfunction!(rank, m)?)?;
    m.add_function(wrap_pyfunction!(reverse_km, m)?)?;
    m.add_function(wrap_pyfunction!(oracle_true_ate, m)?)?;
    m.add_function(wrap_pyfunction!(cif_closed_form, m)?)?;
    m.add_function(wrap_pyfunction!(oracle_example1, m)?)?;
    Ok(())
}
