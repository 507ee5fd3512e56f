//! Posterior sampling for dynamic regressions with DFL-type coefficient priors.
//!
//! The observation equation is `y_t = F_t' theta_t + N(0, V)`. Each
//! coefficient path `theta_i` is modelled on the scaled coordinate
//! `x_it = (theta_it - mu_i) / sqrt(V)` by one of four priors:
//!
//! | variant | process on `x`                                   | weight prior                         |
//! |---------|--------------------------------------------------|--------------------------------------|
//! | DFL     | dynamic fused LASSO, `alpha = rho beta`          | `beta ~ Ga`, `rho ~` beta grid       |
//! | DE      | `x_1 ~ DE(alpha)`, random walk with `DE(beta)`   | `alpha ~ Ga`, `beta ~ Ga`            |
//! | DFHS    | dynamic fused LASSO                              | `beta^2 ~ Ga(1/2, delta/2)`, grids   |
//! | HS      | as DE                                            | `alpha ~ Ga`, `beta^2 ~ Ga(1/2, delta/2)` |

mod chain;
mod geweke;
mod sampler;
mod state;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use chain::{quantile, run_chain, run_chain_with, ChainOutput, Draw, ScalarSummary, Summary};
pub use geweke::{geweke_test, simulate_observations, simulate_prior, GewekeConfig, GewekeStatistic};
pub use sampler::Sampler;
pub use state::{CoefWeights, GibbsState};

/// Prior family for the coefficient paths.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    Dfl,
    De,
    Dfhs,
    Hs,
}

impl Variant {
    pub const ALL: [Variant; 4] = [Variant::Dfl, Variant::De, Variant::Dfhs, Variant::Hs];

    /// Whether the process shrinks toward the baseline (`rho > 0`), which
    /// brings in latent counts and the terminal synthetic row.
    pub fn shrinks_to_baseline(self) -> bool {
        matches!(self, Variant::Dfl | Variant::Dfhs)
    }

    /// Whether `beta` carries the half-Cauchy-type hierarchy.
    pub fn half_cauchy(self) -> bool {
        matches!(self, Variant::Dfhs | Variant::Hs)
    }

    pub fn name(self) -> &'static str {
        match self {
            Variant::Dfl => "DFL",
            Variant::De => "DE",
            Variant::Dfhs => "DFHS",
            Variant::Hs => "HS",
        }
    }
}

/// Treatment of the baselines `mu_i`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case", deny_unknown_fields)]
pub enum Baseline {
    /// All baselines held at `value`.
    Fixed { value: f64 },
    /// `mu_i ~ N(mean, sd^2)` independently, updated each sweep.
    Estimated { mean: f64, sd: f64 },
}

impl Default for Baseline {
    fn default() -> Self {
        Baseline::Fixed { value: 0.0 }
    }
}

/// Treatment of the observation variance `V`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case", deny_unknown_fields)]
pub enum VarianceMode {
    /// `1/V ~ Ga(n0 / 2, n0 s0 / 2)`, sampled jointly with the states.
    Unknown { n0: f64, s0: f64 },
    Known { value: f64 },
}

impl Default for VarianceMode {
    fn default() -> Self {
        VarianceMode::Unknown { n0: 1.0, s0: 1.0 }
    }
}

/// Hyperparameters of the weight priors. Each field is used only by the
/// variants that need it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Hyper {
    /// `beta ~ Ga(beta_shape, beta_rate)` (DFL, DE).
    pub beta_shape: f64,
    pub beta_rate: f64,
    /// `rho ~ Be(rho_a, rho_b)` on the grid (DFL, DFHS).
    pub rho_a: f64,
    pub rho_b: f64,
    /// `alpha ~ Ga(alpha_shape, alpha_rate)` for the initial state (DE, HS).
    pub alpha_shape: f64,
    pub alpha_rate: f64,
    /// Grid resolution `N` and number of support points `M`.
    pub grid_n: usize,
    pub grid_m: usize,
}

impl Default for Hyper {
    fn default() -> Self {
        Self {
            beta_shape: 1.0,
            beta_rate: 0.1,
            rho_a: 1.0,
            rho_b: 10.0,
            alpha_shape: 1.0,
            alpha_rate: 10.0,
            grid_n: crate::samplers::GridPrior::DEFAULT_N,
            grid_m: crate::samplers::GridPrior::DEFAULT_M,
        }
    }
}

/// Weights held fixed instead of sampled.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FixedWeights {
    pub beta: f64,
    /// Used by DFL and DFHS.
    #[serde(default)]
    pub rho: f64,
    /// Initial-state weight, used by DE and HS.
    #[serde(default = "one")]
    pub alpha: f64,
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConfig {
    pub variant: Variant,
    pub baseline: Baseline,
    pub hyper: Hyper,
    /// One set of weights for all coefficients instead of one per coefficient.
    pub shared_weights: bool,
    pub variance: VarianceMode,
    pub fixed_weights: Option<FixedWeights>,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            variant: Variant::Dfl,
            baseline: Baseline::default(),
            hyper: Hyper::default(),
            shared_weights: false,
            variance: VarianceMode::default(),
            fixed_weights: None,
        }
    }
}

impl ModelConfig {
    pub fn new(variant: Variant) -> Self {
        Self { variant, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        let h = &self.hyper;
        let pos = |v: f64| v > 0.0 && v.is_finite();
        if !(pos(h.beta_shape) && pos(h.beta_rate) && pos(h.rho_a) && pos(h.rho_b)) {
            return Err(Error::Domain("beta and rho hyperparameters must be positive".into()));
        }
        if !(pos(h.alpha_shape) && pos(h.alpha_rate)) {
            return Err(Error::Domain("alpha hyperparameters must be positive".into()));
        }
        if h.grid_m == 0 || h.grid_m >= h.grid_n {
            return Err(Error::Domain(format!("grid needs 0 < M < N, got N={}, M={}", h.grid_n, h.grid_m)));
        }
        if let Baseline::Estimated { mean, sd } = self.baseline {
            if !(mean.is_finite() && pos(sd)) {
                return Err(Error::Domain("baseline prior needs finite mean and sd > 0".into()));
            }
        }
        if let Baseline::Fixed { value } = self.baseline {
            if !value.is_finite() {
                return Err(Error::Domain("fixed baseline must be finite".into()));
            }
        }
        match self.variance {
            VarianceMode::Unknown { n0, s0 } if !(pos(n0) && pos(s0)) => {
                return Err(Error::Domain("variance prior needs n0 > 0 and s0 > 0".into()))
            }
            VarianceMode::Known { value } if !pos(value) => {
                return Err(Error::Domain("known variance must be positive".into()))
            }
            _ => {}
        }
        if let Some(fw) = self.fixed_weights {
            if !pos(fw.beta) {
                return Err(Error::Domain("fixed beta must be positive".into()));
            }
            if self.variant.shrinks_to_baseline() && !(fw.rho > 0.0 && fw.rho < 1.0) {
                return Err(Error::Domain("fixed rho must lie in (0, 1)".into()));
            }
            if !self.variant.shrinks_to_baseline() && !pos(fw.alpha) {
                return Err(Error::Domain("fixed alpha must be positive".into()));
            }
        }
        Ok(())
    }
}

/// Chain length controls. `iterations` counts post burn-in sweeps; every
/// `thin`-th of those is stored.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChainConfig {
    pub iterations: usize,
    pub burn_in: usize,
    pub thin: usize,
}

impl Default for ChainConfig {
    fn default() -> Self {
        Self { iterations: 3000, burn_in: 300, thin: 1 }
    }
}

/// Responses `y_{1:T}` with the `T x p` predictor matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub y: Vec<f64>,
    pub predictors: DMatrix<f64>,
}

impl Dataset {
    pub fn new(y: Vec<f64>, predictors: DMatrix<f64>) -> Result<Self> {
        if y.len() != predictors.nrows() {
            return Err(Error::Dimension(format!(
                "{} responses but {} predictor rows",
                y.len(),
                predictors.nrows()
            )));
        }
        if predictors.ncols() == 0 {
            return Err(Error::Dimension("no predictors".into()));
        }
        if !y.iter().chain(predictors.iter()).all(|v| v.is_finite()) {
            return Err(Error::Domain("data contain non-finite values".into()));
        }
        Ok(Self { y, predictors })
    }

    pub fn horizon(&self) -> usize {
        self.y.len()
    }

    pub fn dim(&self) -> usize {
        self.predictors.ncols()
    }

    /// The first `s` time points.
    pub fn head(&self, s: usize) -> Result<Self> {
        if s > self.horizon() {
            return Err(Error::Dimension(format!("cannot take {s} of {} time points", self.horizon())));
        }
        Ok(Self { y: self.y[..s].to_vec(), predictors: self.predictors.rows(0, s).into_owned() })
    }
}
