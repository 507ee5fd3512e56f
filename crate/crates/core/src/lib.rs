//! Dynamic fused LASSO (DFL) priors for time-varying coefficients.
//!
//! The crate is organised bottom-up:
//!
//! * [`prior`]: closed-form densities, moments and distribution functions of
//!   the DFL process.
//! * [`samplers`]: exact random-variate generators for every non-Gaussian
//!   full conditional, plus the prior transition sampler.
//! * [`cdlm`]: forward filtering / backward sampling for linear Gaussian
//!   state-space models with stacked real and synthetic observation rows.
//! * [`gibbs`]: the posterior sampler for DFL, DE, DFHS and HS dynamic
//!   regressions.
//! * [`harness`]: simulated-data study, evaluation and sequential forecasting.

pub mod cdlm;
pub mod error;
pub mod gibbs;
pub mod harness;
pub mod prior;
pub mod samplers;

#[cfg(test)]
mod testutil;

pub use cdlm::{CdlmSpec, FilterOutput};
pub use error::{Error, Result};
pub use gibbs::{ChainConfig, ChainOutput, Dataset, GibbsState, ModelConfig, Variant};
pub use harness::{DgpSpec, EvalReport, ForecastRecord};
pub use prior::{MixtureConstants, ShrinkagePoint, Weights};
pub use samplers::{GigParams, GridPrior, RngStream};

/// Linear algebra types used in the public API.
pub use nalgebra;
