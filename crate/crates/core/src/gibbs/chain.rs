use nalgebra::DMatrix;
use rand::Rng;
use serde::Serialize;

use super::sampler::Sampler;
use super::state::{CoefWeights, GibbsState};
use super::{ChainConfig, Dataset, ModelConfig, Variant};
use crate::error::{Error, Result};

/// One stored sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct Draw {
    pub theta: DMatrix<f64>,
    /// Latent counts; `None` for variants without counts.
    pub counts: Option<DMatrix<u32>>,
    pub weights: Vec<CoefWeights>,
    pub baseline: Vec<f64>,
    pub variance: f64,
}

impl Draw {
    fn from_state(state: &GibbsState, with_counts: bool) -> Self {
        Self {
            theta: state.theta.clone(),
            counts: with_counts.then(|| state.counts.clone()),
            weights: state.weights.clone(),
            baseline: state.baseline.clone(),
            variance: state.variance,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ChainOutput {
    pub variant: Variant,
    /// Configuration the chain started from.
    pub initial: GibbsState,
    /// Configuration after the final sweep.
    pub last: GibbsState,
    /// Stored draws after burn-in and thinning.
    pub draws: Vec<Draw>,
}

/// Posterior mean and central 95% interval of a scalar.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScalarSummary {
    pub mean: f64,
    pub lo: f64,
    pub hi: f64,
}

impl ScalarSummary {
    pub fn from_samples(xs: &[f64]) -> Self {
        let mut sorted = xs.to_vec();
        sorted.sort_by(f64::total_cmp);
        Self {
            mean: xs.iter().sum::<f64>() / xs.len() as f64,
            lo: quantile(&sorted, 0.025),
            hi: quantile(&sorted, 0.975),
        }
    }
}

/// Linear-interpolation quantile of data sorted in ascending order.
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    let n = sorted.len();
    if n == 0 {
        return f64::NAN;
    }
    let pos = q * (n - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = (lo + 1).min(n - 1);
    sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Posterior summaries recomputed from the stored draws.
#[derive(Debug, Clone)]
pub struct Summary {
    pub theta_mean: DMatrix<f64>,
    pub theta_lo: DMatrix<f64>,
    pub theta_hi: DMatrix<f64>,
    /// `P[n_it > 0 | y]`, for variants with counts.
    pub count_positive: Option<DMatrix<f64>>,
    /// `E[n_it | y]`, for variants with counts.
    pub count_mean: Option<DMatrix<f64>>,
    pub variance: ScalarSummary,
    pub beta: Vec<ScalarSummary>,
    /// Shrinkage weight `alpha` (`rho beta`, or the initial-state weight).
    pub alpha: Vec<ScalarSummary>,
    pub rho: Option<Vec<ScalarSummary>>,
    pub baseline: Vec<ScalarSummary>,
}

impl ChainOutput {
    pub fn summary(&self) -> Result<Summary> {
        let n = self.draws.len();
        if n == 0 {
            return Err(Error::Domain("empty chain".into()));
        }
        let (p, horizon) = self.draws[0].theta.shape();
        let mut theta_mean = DMatrix::zeros(p, horizon);
        let mut theta_lo = DMatrix::zeros(p, horizon);
        let mut theta_hi = DMatrix::zeros(p, horizon);
        let mut buf = vec![0.0; n];
        for i in 0..p {
            for t in 0..horizon {
                for (b, d) in buf.iter_mut().zip(&self.draws) {
                    *b = d.theta[(i, t)];
                }
                let s = ScalarSummary::from_samples(&buf);
                theta_mean[(i, t)] = s.mean;
                theta_lo[(i, t)] = s.lo;
                theta_hi[(i, t)] = s.hi;
            }
        }
        let (count_positive, count_mean) = if self.draws[0].counts.is_some() {
            let mut pos = DMatrix::zeros(p, horizon);
            let mut mean = DMatrix::zeros(p, horizon);
            for d in &self.draws {
                let c = d.counts.as_ref().expect("counts stored on every draw");
                for (k, &v) in c.iter().enumerate() {
                    if v > 0 {
                        pos[k] += 1.0;
                        mean[k] += v as f64;
                    }
                }
            }
            (Some(pos / n as f64), Some(mean / n as f64))
        } else {
            (None, None)
        };
        let per = |f: &dyn Fn(&Draw, usize) -> f64| -> Vec<ScalarSummary> {
            (0..p)
                .map(|i| ScalarSummary::from_samples(&self.draws.iter().map(|d| f(d, i)).collect::<Vec<_>>()))
                .collect()
        };
        Ok(Summary {
            theta_mean,
            theta_lo,
            theta_hi,
            count_positive,
            count_mean,
            variance: ScalarSummary::from_samples(&self.draws.iter().map(|d| d.variance).collect::<Vec<_>>()),
            beta: per(&|d, i| d.weights[i].beta),
            alpha: per(&|d, i| d.weights[i].alpha()),
            rho: self.variant.shrinks_to_baseline().then(|| per(&|d, i| d.weights[i].rho)),
            baseline: per(&|d, i| d.baseline[i]),
        })
    }
}

/// Runs `burn_in + iterations` sweeps and stores every `thin`-th post
/// burn-in draw.
pub fn run_chain<R: Rng + ?Sized>(
    config: &ModelConfig,
    chain: &ChainConfig,
    data: &Dataset,
    rng: &mut R,
) -> Result<ChainOutput> {
    run_chain_with(config, chain, data, rng, true, |_, _, _| Ok(()))
}

/// As [`run_chain`], calling `on_draw` on every retained sweep (after thinning)
/// with the sampler, the current state and the chain's random stream.
/// `store` controls whether draws are kept in the output.
pub fn run_chain_with<R, F>(
    config: &ModelConfig,
    chain: &ChainConfig,
    data: &Dataset,
    rng: &mut R,
    store: bool,
    mut on_draw: F,
) -> Result<ChainOutput>
where
    R: Rng + ?Sized,
    F: FnMut(&Sampler, &GibbsState, &mut R) -> Result<()>,
{
    if chain.thin == 0 {
        return Err(Error::Domain("thin must be at least 1".into()));
    }
    let sampler = Sampler::new(*config)?;
    let initial = sampler.initial_state(data)?;
    let mut state = initial.clone();
    let with_counts = config.variant.shrinks_to_baseline();
    let mut draws = Vec::with_capacity(if store { chain.iterations / chain.thin } else { 0 });
    let total = chain.burn_in + chain.iterations;
    for sweep in 0..total {
        let wrap = |e: Error| Error::Sweep { sweep, source: Box::new(e) };
        sampler.sweep(&mut state, data, rng).map_err(wrap)?;
        state.check().map_err(wrap)?;
        if sweep >= chain.burn_in && (sweep - chain.burn_in + 1) % chain.thin == 0 {
            on_draw(&sampler, &state, rng).map_err(wrap)?;
            if store {
                draws.push(Draw::from_state(&state, with_counts));
            }
        }
    }
    Ok(ChainOutput { variant: config.variant, initial, last: state, draws })
}
