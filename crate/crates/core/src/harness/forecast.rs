use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gibbs::{run_chain_with, ChainConfig, Dataset, ModelConfig};
use crate::samplers::RngStream;

/// One-step-ahead predictive summary at forecast origin `origin`: the model
/// is fitted to `y_1..y_origin` and predicts `y_{origin+1}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ForecastRecord {
    pub origin: usize,
    pub mean: f64,
    pub lo95: f64,
    pub hi95: f64,
    pub lo90: f64,
    pub hi90: f64,
    pub realized: f64,
}

/// Predictive draws of `y_{s+1}`, one per retained sweep of a chain fitted to
/// the first `s` observations. `next_predictors` is `F_{s+1}`.
pub fn predictive_draws(
    config: &ModelConfig,
    chain: &ChainConfig,
    data: &Dataset,
    next_predictors: &[f64],
    rng: &mut RngStream,
) -> Result<Vec<f64>> {
    if next_predictors.len() != data.dim() {
        return Err(Error::Dimension("next predictor row has the wrong length".into()));
    }
    let mut draws = Vec::with_capacity(chain.iterations / chain.thin.max(1));
    run_chain_with(config, chain, data, rng, false, |sampler, state, rng| {
        let theta = sampler.sample_next_state(state, rng)?;
        let mean: f64 = theta.iter().zip(next_predictors).map(|(a, b)| a * b).sum();
        let e: f64 = rng.sample(StandardNormal);
        draws.push(mean + state.variance.sqrt() * e);
        Ok(())
    })?;
    Ok(draws)
}

fn record(origin: usize, draws: &mut [f64], realized: f64) -> Result<ForecastRecord> {
    if draws.is_empty() {
        return Err(Error::Domain("empty chain".into()));
    }
    let mean = draws.iter().sum::<f64>() / draws.len() as f64;
    draws.sort_by(f64::total_cmp);
    let q = |p| crate::gibbs::quantile(draws, p);
    Ok(ForecastRecord { origin, mean, lo95: q(0.025), hi95: q(0.975), lo90: q(0.05), hi90: q(0.95), realized })
}

/// Refits the model at every origin `s = start, ..., T - 1` and records the
/// predictive distribution of `y_{s+1}`. Origins run in parallel on the
/// current rayon pool; origin `s` always uses stream `stream_base + s`, so the
/// result does not depend on the thread count.
pub fn sequential_forecast(
    config: &ModelConfig,
    chain: &ChainConfig,
    data: &Dataset,
    start: usize,
    seed: u64,
    stream_base: u64,
) -> Result<Vec<ForecastRecord>> {
    let horizon = data.horizon();
    if start < 2 || start >= horizon {
        return Err(Error::Domain(format!("forecast start {start} must lie in [2, T) with T = {horizon}")));
    }
    if start < data.dim() {
        return Err(Error::Domain(format!("forecast start {start} is below the number of predictors {}", data.dim())));
    }
    (start..horizon)
        .into_par_iter()
        .map(|s| {
            let mut rng = RngStream::new(seed, stream_base + s as u64);
            let head = data.head(s)?;
            let f: Vec<f64> = data.predictors.row(s).iter().copied().collect();
            let mut draws = predictive_draws(config, chain, &head, &f, &mut rng)?;
            record(s, &mut draws, data.y[s])
        })
        .collect()
}
