//! JSON run configurations. Every struct rejects unknown keys; missing keys
//! take the defaults shown in `--help`.

use std::path::{Path, PathBuf};

use dfl_core::gibbs::{ChainConfig, ModelConfig};
use dfl_core::harness::{StudySpec, DEFAULT_EVAL_START};
use dfl_core::DgpSpec;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::CliError;

/// Response and predictor files as written by `simulate`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataFiles {
    pub y: PathBuf,
    pub predictors: PathBuf,
}

impl Default for DataFiles {
    fn default() -> Self {
        Self { y: "y.csv".into(), predictors: "F.csv".into() }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FitConfig {
    pub data: DataFiles,
    pub model: ModelConfig,
    pub chain: ChainConfig,
    /// Also write the stored draws, one CSV per parameter block.
    pub draws: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ForecastConfig {
    pub data: DataFiles,
    pub model: ModelConfig,
    pub chain: ChainConfig,
    /// First forecast origin `s`: the first record predicts `y_{s+1}`.
    pub start: usize,
}

impl Default for ForecastConfig {
    fn default() -> Self {
        Self {
            data: DataFiles::default(),
            model: ModelConfig::default(),
            chain: ChainConfig::default(),
            start: DEFAULT_EVAL_START,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvaluateConfig {
    /// Row label in the output table.
    pub name: String,
    pub summary: PathBuf,
    pub truth: PathBuf,
    pub forecasts: Option<PathBuf>,
    /// First 1-based time in the metrics.
    pub start: usize,
}

impl Default for EvaluateConfig {
    fn default() -> Self {
        Self {
            name: "model".into(),
            summary: "summary.csv".into(),
            truth: "truth.csv".into(),
            forecasts: None,
            start: DEFAULT_EVAL_START,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DensityConfig {
    pub alpha: f64,
    pub beta: f64,
    /// Grid of `x` for the transition and stationary densities.
    pub x_min: f64,
    pub x_max: f64,
    pub x_points: usize,
    /// Conditioning values `x'`.
    pub x_prev: Vec<f64>,
    /// Interior grid size on (0, 1) for the shrinkage-coefficient density.
    pub weight_points: usize,
}

impl Default for DensityConfig {
    fn default() -> Self {
        Self {
            alpha: 0.5,
            beta: 1.0,
            x_min: -5.0,
            x_max: 5.0,
            x_points: 201,
            x_prev: vec![-1.0, 0.5, 1.0, 2.0],
            weight_points: 100,
        }
    }
}

pub type SimulateConfig = DgpSpec;
pub type CompareConfig = StudySpec;

/// Reads a config file, or the defaults when no path is given.
pub fn load<T: DeserializeOwned + Default>(path: Option<&Path>) -> Result<T, CliError> {
    let Some(path) = path else {
        return Ok(T::default());
    };
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read config {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

const MODEL_KEYS: &str = "\
  model.variant               \"dfl\" | \"de\" | \"dfhs\" | \"hs\" (dfl)
  model.baseline              {\"mode\": \"fixed\", \"value\"} or {\"mode\": \"estimated\", \"mean\", \"sd\"} (fixed, 0)
  model.hyper.beta_shape      Ga shape of beta for dfl, de (1)
  model.hyper.beta_rate       Ga rate of beta (0.1)
  model.hyper.rho_a           Be prior of rho on its grid, dfl and dfhs (1)
  model.hyper.rho_b           (10)
  model.hyper.alpha_shape     Ga prior of the initial-state weight, de and hs (1)
  model.hyper.alpha_rate      (10)
  model.hyper.grid_n          grid resolution N, step 1/N (1000)
  model.hyper.grid_m          number of grid points M < N (900)
  model.shared_weights        one weight set for all coefficients (false)
  model.variance              {\"mode\": \"unknown\", \"n0\", \"s0\"} or {\"mode\": \"known\", \"value\"} (unknown, 1, 1)
  model.fixed_weights         null, or {\"beta\", \"rho\", \"alpha\"} to hold the weights fixed (null)
  chain.iterations            stored sweeps after burn-in, before thinning (3000)
  chain.burn_in               (300)
  chain.thin                  keep every thin-th sweep (1)";

const DGP_KEYS: &str = "\
  horizon                     number of time points T (200)
  dim                         number of predictors p, the first is an intercept (12)
  variance                    observation variance V (1.5)
  seed                        seed of predictors, noise and the random-walk path (0)
  paths                       {\"kind\": \"zero\"} or {\"kind\": \"standard\", ...} with
    intercept_level, intercept_amplitude   theta_1 = level + amplitude sin(2 pi t / T) (2, 0.5)
    walk_start, walk_sd                    theta_2 random walk (1, 0.02)
    arc3_height, zero3_start, zero3_end    theta_3 arcs, zero on [start, end) (1.2, 50, 150)
    arc4_height, zero4_after               theta_4 arc, zero after t (-0.8, 100)";

pub fn simulate_help() -> String {
    format!("Config keys (JSON object, all optional):\n{DGP_KEYS}\n\n--seed overrides `seed`.\nWrites y.csv, F.csv and truth.csv.")
}

pub fn fit_help() -> String {
    format!(
        "Config keys (JSON object, all optional):\n  \
data.y                      response file with columns t,y (y.csv)\n  \
data.predictors             predictor file with columns t,x1..xp (F.csv)\n\
{MODEL_KEYS}\n  \
draws                       also write draws_*.csv (false)\n\n\
Writes summary.csv and parameters.csv."
    )
}

pub fn forecast_help() -> String {
    format!(
        "Config keys (JSON object, all optional):\n  \
data.y, data.predictors     as for fit\n\
{MODEL_KEYS}\n  \
start                       first origin s; records predict y_(s+1) (25)\n\n\
Writes forecasts.csv."
    )
}

pub fn evaluate_help() -> String {
    "Config keys (JSON object, all optional):\n  \
name                        row label (model)\n  \
summary                     posterior summary from fit (summary.csv)\n  \
truth                       true paths from simulate (truth.csv)\n  \
forecasts                   forecast records from forecast, or null (null)\n  \
start                       first 1-based time in the metrics (25)\n\n\
Writes evaluation.csv and coefficients.csv."
        .into()
}

pub fn compare_help() -> String {
    let models = MODEL_KEYS.replace("  model.", "  models[].model.").replace("  chain.", "  chain.");
    format!(
        "Config keys (JSON object, all optional):\n  \
dgp.*                       data-generating process, keys as for simulate:\n{}\n  \
models                      list of {{\"name\", \"model\"}}; model keys:\n{models}\n  \
eval_start                  first 1-based time in the metrics (25)\n  \
forecast_start              first forecast origin, or null to skip forecasting (25)\n\n\
Writes table.csv, truth.csv, summary_<name>.csv and forecasts_<name>.csv.",
        DGP_KEYS.replace("\n  ", "\n    ")
    )
}

pub fn density_help() -> String {
    "Config keys (JSON object, all optional):\n  \
alpha, beta                 weights, 0 <= alpha <= beta (0.5, 1)\n  \
x_min, x_max, x_points      grid of x ([-5, 5], 201 points)\n  \
x_prev                      conditioning values x' ([-1, 0.5, 1, 2])\n  \
weight_points               midpoint grid size on (0, 1) for q(w | x') (100)\n\n\
Writes transition.csv, stationary.csv, shrinkage_mean.csv and weight_density.csv."
        .into()
}
