//! Joint-distribution ("getting it right") check of the Gibbs sampler.
//!
//! The marginal-conditional simulator draws parameters from the prior
//! directly; the successive-conditional simulator alternates one Gibbs sweep
//! with a fresh draw of `y` given the parameters. Both target the same joint
//! law, so every monitored statistic must have the same mean under both.

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};

use super::sampler::Sampler;
use super::state::{CoefWeights, GibbsState};
use super::{Baseline, Dataset, ModelConfig, VarianceMode};
use crate::error::{Error, Result};
use crate::prior::Weights;
use crate::samplers::{
    sample_de_step, sample_geometric, sample_gig, sample_grid_index, sample_laplace, sample_prior_transition,
    sample_stationary, GigParams, GridPrior,
};

fn gamma<R: Rng + ?Sized>(shape: f64, rate: f64, rng: &mut R) -> Result<f64> {
    Ok(Gamma::new(shape, 1.0 / rate).map_err(|e| Error::Numerical(e.to_string()))?.sample(rng))
}

fn grid_draw<R: Rng + ?Sized>(g: &GridPrior, rng: &mut R) -> Result<f64> {
    let flat = vec![0.0; g.len()];
    Ok(g.values()[sample_grid_index(g, &flat, rng)?])
}

fn prior_weights<R: Rng + ?Sized>(sampler: &Sampler, rng: &mut R) -> Result<CoefWeights> {
    let cfg = sampler.config();
    let h = cfg.hyper;
    let mut w = CoefWeights { beta: 1.0, rho: 0.0, alpha0: 1.0, delta: 0.5 };
    if let Some(fw) = cfg.fixed_weights {
        w.beta = fw.beta;
        if cfg.variant.shrinks_to_baseline() {
            w.rho = fw.rho;
        } else {
            w.alpha0 = fw.alpha;
        }
        return Ok(w);
    }
    if let Some(g) = sampler.rho_prior() {
        w.rho = grid_draw(g, rng)?;
    }
    if !cfg.variant.shrinks_to_baseline() {
        w.alpha0 = gamma(h.alpha_shape, h.alpha_rate, rng)?;
    }
    if let Some(g) = sampler.delta_prior() {
        w.delta = grid_draw(g, rng)?;
        w.beta = gamma(0.5, 0.5 * w.delta, rng)?.sqrt();
    } else {
        w.beta = gamma(h.beta_shape, h.beta_rate, rng)?;
    }
    Ok(w)
}

/// Exact draw of the full latent configuration from the prior.
pub fn simulate_prior<R: Rng + ?Sized>(sampler: &Sampler, dim: usize, horizon: usize, rng: &mut R) -> Result<GibbsState> {
    if horizon < 2 || dim == 0 {
        return Err(Error::Dimension("prior simulation needs p >= 1 and T >= 2".into()));
    }
    let cfg = sampler.config();
    let shrink = cfg.variant.shrinks_to_baseline();
    let weights = if cfg.shared_weights {
        vec![prior_weights(sampler, rng)?; dim]
    } else {
        (0..dim).map(|_| prior_weights(sampler, rng)).collect::<Result<Vec<_>>>()?
    };
    let baseline: Vec<f64> = match cfg.baseline {
        Baseline::Fixed { value } => vec![value; dim],
        Baseline::Estimated { mean, sd } => (0..dim).map(|_| mean + sd * rng.sample::<f64, _>(StandardNormal)).collect(),
    };
    let variance = match cfg.variance {
        VarianceMode::Unknown { n0, s0 } => 1.0 / gamma(0.5 * n0, 0.5 * n0 * s0, rng)?,
        VarianceMode::Known { value } => value,
    };

    let mut x = DMatrix::zeros(dim, horizon);
    for i in 0..dim {
        let w = weights[i];
        if shrink {
            let dfl = Weights::new(w.beta, w.rho)?;
            x[(i, 0)] = sample_stationary(&dfl, rng)?;
            for t in 1..horizon {
                x[(i, t)] = sample_prior_transition(x[(i, t - 1)], &dfl, rng)?;
            }
        } else {
            x[(i, 0)] = sample_laplace(w.alpha0, rng);
            for t in 1..horizon {
                x[(i, t)] = sample_de_step(x[(i, t - 1)], w.beta, rng);
            }
        }
    }

    // Counts and scales from their exact conditionals given the path.
    let mut counts = DMatrix::zeros(dim, horizon);
    let mut lambda_count = vec![vec![None; horizon]; dim];
    let mut lambda_init = vec![0.0; dim];
    let mut lambda_terminal = if shrink { vec![0.0; dim] } else { Vec::new() };
    let mut lambda_evo = DMatrix::from_element(dim, horizon, 1.0);
    for i in 0..dim {
        let w = weights[i];
        let alpha = w.alpha();
        lambda_init[i] = sample_gig(GigParams::half(alpha * alpha, x[(i, 0)] * x[(i, 0)])?, rng);
        if shrink {
            let xt = x[(i, horizon - 1)];
            lambda_terminal[i] = sample_gig(GigParams::half(alpha * alpha, xt * xt)?, rng);
            for t in 1..horizon - 1 {
                let n = sample_geometric(w.rho * (-w.gap() * x[(i, t)].abs()).exp(), rng)? as u32;
                counts[(i, t)] = n;
                if n > 0 {
                    let a = n as f64 * w.gap();
                    lambda_count[i][t] = Some(sample_gig(GigParams::half(a * a, x[(i, t)] * x[(i, t)])?, rng));
                }
            }
        }
        for t in 1..horizon {
            let d = x[(i, t)] - x[(i, t - 1)];
            lambda_evo[(i, t)] = sample_gig(GigParams::half(w.beta * w.beta, d * d)?, rng);
        }
    }
    let sv = variance.sqrt();
    let theta = DMatrix::from_fn(dim, horizon, |i, t| baseline[i] + sv * x[(i, t)]);
    Ok(GibbsState { theta, lambda_init, lambda_terminal, lambda_evo, counts, lambda_count, weights, baseline, variance })
}

/// Draws `y_t ~ N(F_t' theta_t, V)`.
pub fn simulate_observations<R: Rng + ?Sized>(state: &GibbsState, predictors: &DMatrix<f64>, rng: &mut R) -> Vec<f64> {
    let sv = state.variance.sqrt();
    (0..state.horizon())
        .map(|t| {
            let mean = predictors.row(t).transpose().dot(&state.theta.column(t));
            mean + sv * rng.sample::<f64, _>(StandardNormal)
        })
        .collect()
}

#[derive(Debug, Clone)]
pub struct GewekeConfig {
    pub model: ModelConfig,
    pub dim: usize,
    pub horizon: usize,
    /// Draws from each simulator.
    pub draws: usize,
    /// Independent successive-conditional chains sharing the draws. Each
    /// starts from an exact prior draw, so it is stationary from its first
    /// sweep: chain means are unbiased and their spread gives an honest
    /// standard error even when single chains mix slowly.
    pub chains: usize,
    /// Multiplier on the simulated predictors. Values below one make the
    /// regenerated data less informative, which shortens the excursions of
    /// the successive-conditional chains without changing their target.
    pub predictor_scale: f64,
}

/// Comparison of one monitored statistic between the two simulators.
#[derive(Debug, Clone)]
pub struct GewekeStatistic {
    pub name: String,
    pub prior_mean: f64,
    pub prior_se: f64,
    pub chain_mean: f64,
    pub chain_se: f64,
    pub z: f64,
}

/// Bounded or log-transformed functionals, so that all means exist even
/// under heavy-tailed priors.
fn monitored(state: &GibbsState) -> Vec<(String, f64)> {
    let horizon = state.horizon();
    let mut out = vec![("log V".to_string(), state.variance.ln())];
    for i in 0..state.dim() {
        let w = state.weights[i];
        for t in [0, horizon / 2, horizon - 1] {
            out.push((format!("atan theta[{i},{t}]"), state.theta[(i, t)].atan()));
        }
        let mean_abs_diff =
            (1..horizon).map(|t| (state.theta[(i, t)] - state.theta[(i, t - 1)]).abs()).sum::<f64>() / (horizon - 1) as f64;
        out.push((format!("atan mean|dtheta|[{i}]"), mean_abs_diff.atan()));
        out.push((format!("log(1+beta)[{i}]"), w.beta.ln_1p()));
        out.push((format!("rho[{i}]"), w.rho));
        out.push((format!("log alpha[{i}]"), w.alpha().ln()));
        out.push((format!("delta[{i}]"), w.delta));
        out.push((format!("mu[{i}]"), state.baseline[i]));
        let positive = (0..horizon).filter(|&t| state.counts[(i, t)] > 0).count();
        out.push((format!("#n>0[{i}]"), positive as f64));
    }
    out
}

/// Runs both simulators and returns one z-score per monitored statistic.
/// Statistics that are constant under the model (e.g. fixed baselines) are
/// omitted.
pub fn geweke_test<R: Rng + ?Sized>(cfg: &GewekeConfig, rng: &mut R) -> Result<Vec<GewekeStatistic>> {
    let sampler = Sampler::new(cfg.model)?;
    if !(cfg.predictor_scale > 0.0 && cfg.predictor_scale.is_finite()) || cfg.chains < 2 || cfg.draws < cfg.chains {
        return Err(Error::Domain("Geweke test needs predictor_scale > 0 and draws >= chains >= 2".into()));
    }
    let c = cfg.predictor_scale;
    let predictors = DMatrix::from_fn(cfg.horizon, cfg.dim, |_, j| c * if j == 0 { 1.0 } else { 2.0 * rng.random::<f64>() });

    let mut prior_stats: Vec<Vec<f64>> = Vec::new();
    let mut names = Vec::new();
    for _ in 0..cfg.draws {
        let s = simulate_prior(&sampler, cfg.dim, cfg.horizon, rng)?;
        let m = monitored(&s);
        if prior_stats.is_empty() {
            names = m.iter().map(|(n, _)| n.clone()).collect();
            prior_stats = vec![Vec::with_capacity(cfg.draws); m.len()];
        }
        for (k, (_, v)) in m.into_iter().enumerate() {
            prior_stats[k].push(v);
        }
    }

    let length = cfg.draws / cfg.chains;
    let mut chain_means: Vec<Vec<f64>> = vec![Vec::with_capacity(cfg.chains); names.len()];
    for chain in 0..cfg.chains {
        let mut state = simulate_prior(&sampler, cfg.dim, cfg.horizon, rng)?;
        let mut data = Dataset { y: simulate_observations(&state, &predictors, rng), predictors: predictors.clone() };
        let mut sums = vec![0.0; names.len()];
        for sweep in 0..length {
            sampler
                .sweep(&mut state, &data, rng)
                .and_then(|_| state.check())
                .map_err(|e| Error::Sweep { sweep: chain * length + sweep, source: Box::new(e) })?;
            data.y = simulate_observations(&state, &predictors, rng);
            for (k, (_, v)) in monitored(&state).into_iter().enumerate() {
                sums[k] += v;
            }
        }
        for (k, s) in sums.into_iter().enumerate() {
            chain_means[k].push(s / length as f64);
        }
    }

    let mut out = Vec::new();
    for (k, name) in names.into_iter().enumerate() {
        let (pm, pse) = iid_mean_se(&prior_stats[k]);
        let (cm, cse) = iid_mean_se(&chain_means[k]);
        let scale = 1e-12 * (1.0 + pm.abs());
        if pse <= scale && cse <= scale {
            continue;
        }
        let z = (cm - pm) / (pse * pse + cse * cse).sqrt();
        out.push(GewekeStatistic { name, prior_mean: pm, prior_se: pse, chain_mean: cm, chain_se: cse, z });
    }
    Ok(out)
}

fn iid_mean_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1.0);
    (m, (var / n).sqrt())
}
