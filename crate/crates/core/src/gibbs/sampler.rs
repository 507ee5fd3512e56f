use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};

use super::state::{CoefWeights, GibbsState};
use super::{Baseline, Dataset, ModelConfig, VarianceMode};
use crate::cdlm::{self, CdlmSpec, ObsRow};
use crate::error::{Error, Result};
use crate::prior::Weights;
use crate::samplers::{
    sample_de_step, sample_extended_gamma, sample_geometric, sample_gig, sample_grid_index, sample_prior_transition,
    GigParams, GridPrior,
};

/// Beta grid with the per-point terms of the `rho` conditional precomputed.
#[derive(Debug, Clone)]
pub(crate) struct RhoGrid {
    pub(crate) prior: GridPrior,
    ln_rho: Vec<f64>,
    ln_one_minus_sq: Vec<f64>,
    /// `2 log(1 + rho) - log(1 + 2 rho)`, from normalizing the stationary start.
    ln_start: Vec<f64>,
}

impl RhoGrid {
    fn new(prior: GridPrior) -> Self {
        let v = prior.values();
        Self {
            ln_rho: v.iter().map(|r| r.ln()).collect(),
            ln_one_minus_sq: v.iter().map(|r| (-r * r).ln_1p()).collect(),
            ln_start: v.iter().map(|r| 2.0 * r.ln_1p() - (2.0 * r).ln_1p()).collect(),
            prior,
        }
    }
}

/// Sufficient statistics of one scaled path for the weight conditionals.
#[derive(Debug, Clone, Copy, Default)]
struct PathStats {
    /// `|x_1| + |x_T|`.
    ends: f64,
    /// `|x_1|`.
    first: f64,
    /// `sum_t |x_t - x_{t-1}|`.
    diffs: f64,
    /// `sum_t n_t |x_t|`.
    count_abs: f64,
    /// `sum_t n_t`.
    count_sum: f64,
}

impl std::ops::AddAssign for PathStats {
    fn add_assign(&mut self, o: Self) {
        self.ends += o.ends;
        self.first += o.first;
        self.diffs += o.diffs;
        self.count_abs += o.count_abs;
        self.count_sum += o.count_sum;
    }
}

fn gamma<R: Rng + ?Sized>(shape: f64, rate: f64, rng: &mut R) -> Result<f64> {
    let g = Gamma::new(shape, 1.0 / rate).map_err(|e| Error::Numerical(format!("gamma({shape}, {rate}): {e}")))?;
    Ok(g.sample(rng))
}

/// Full-conditional updates for one model configuration.
///
/// One sweep runs, in order: states and `V` jointly (FFBS), latent counts,
/// weights (both with the latent scales integrated out), latent scales and
/// baselines. Drawing the scales after the two collapsed steps keeps the
/// partially collapsed sweep a valid Gibbs scheme.
#[derive(Debug, Clone)]
pub struct Sampler {
    config: ModelConfig,
    rho_grid: Option<RhoGrid>,
    delta_grid: Option<GridPrior>,
}

impl Sampler {
    pub fn new(config: ModelConfig) -> Result<Self> {
        config.validate()?;
        let h = &config.hyper;
        let rho_grid = if config.variant.shrinks_to_baseline() {
            Some(RhoGrid::new(GridPrior::beta(h.rho_a, h.rho_b, h.grid_n, h.grid_m)?))
        } else {
            None
        };
        let delta_grid = if config.variant.half_cauchy() {
            Some(GridPrior::beta(0.5, 0.5, h.grid_n, h.grid_m)?)
        } else {
            None
        };
        Ok(Self { config, rho_grid, delta_grid })
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    pub(crate) fn rho_prior(&self) -> Option<&GridPrior> {
        self.rho_grid.as_ref().map(|g| &g.prior)
    }

    pub(crate) fn delta_prior(&self) -> Option<&GridPrior> {
        self.delta_grid.as_ref()
    }

    fn check_data(&self, state: &GibbsState, data: &Dataset) -> Result<()> {
        if data.horizon() != state.horizon() || data.dim() != state.dim() {
            return Err(Error::Dimension(format!(
                "state is {}x{}, data has p={} and T={}",
                state.dim(),
                state.horizon(),
                data.dim(),
                data.horizon()
            )));
        }
        Ok(())
    }

    /// Starting configuration: states from a rolling ridge fit, scales at
    /// their prior means, no counts, weights at prior-central values.
    pub fn initial_state(&self, data: &Dataset) -> Result<GibbsState> {
        let (horizon, p) = (data.horizon(), data.dim());
        if horizon < 2 {
            return Err(Error::Dimension("at least two time points are required".into()));
        }
        let cfg = &self.config;
        let h = &cfg.hyper;
        let median = |g: &GridPrior| {
            let mut acc = 0.0;
            for (v, lw) in g.values().iter().zip(g.log_weights()) {
                acc += lw.exp();
                if acc >= 0.5 {
                    return *v;
                }
            }
            *g.values().last().unwrap()
        };
        let delta = self.delta_grid.as_ref().map(median).unwrap_or(0.5);
        let mut w = CoefWeights { beta: h.beta_shape / h.beta_rate, rho: 0.0, alpha0: h.alpha_shape / h.alpha_rate, delta };
        if let Some(g) = &self.rho_grid {
            w.rho = median(&g.prior);
        }
        if cfg.variant.half_cauchy() {
            w.beta = (1.0 / delta).sqrt();
        }
        if let Some(fw) = cfg.fixed_weights {
            w.beta = fw.beta;
            if cfg.variant.shrinks_to_baseline() {
                w.rho = fw.rho;
            } else {
                w.alpha0 = fw.alpha;
            }
        }
        let baseline = match cfg.baseline {
            Baseline::Fixed { value } => value,
            Baseline::Estimated { mean, .. } => mean,
        };
        let variance = match cfg.variance {
            VarianceMode::Unknown { s0, .. } => s0,
            VarianceMode::Known { value } => value,
        };
        let alpha = w.alpha();
        Ok(GibbsState {
            theta: rolling_ridge(data),
            lambda_init: vec![2.0 / (alpha * alpha); p],
            lambda_terminal: if cfg.variant.shrinks_to_baseline() { vec![2.0 / (alpha * alpha); p] } else { Vec::new() },
            lambda_evo: DMatrix::from_element(p, horizon, 2.0 / (w.beta * w.beta)),
            counts: DMatrix::zeros(p, horizon),
            lambda_count: vec![vec![None; horizon]; p],
            weights: vec![w; p],
            baseline: vec![baseline; p],
            variance,
        })
    }

    /// The conditionally Gaussian model for the current scales and counts.
    pub fn build_cdlm(&self, state: &GibbsState, data: &Dataset) -> Result<CdlmSpec> {
        self.check_data(state, data)?;
        let (p, horizon) = (state.dim(), state.horizon());
        let mu = DVector::from_column_slice(&state.baseline);
        let mut spec = CdlmSpec::new(horizon, mu, DVector::from_column_slice(&state.lambda_init))?;
        for t in 0..horizon {
            if t > 0 {
                spec.set_evolution(t, state.lambda_evo.column(t).into_owned())?;
            }
            let f = data.predictors.row(t).transpose();
            spec.push_row(t, ObsRow::dense(f, data.y[t], 1.0))?;
            if self.config.variant.shrinks_to_baseline() {
                for i in 0..p {
                    let scale = if t == horizon - 1 { Some(state.lambda_terminal[i]) } else { state.lambda_count[i][t] };
                    if let Some(l) = scale {
                        spec.push_row(t, ObsRow::unit(i, state.baseline[i], l).without_dof())?;
                    }
                }
            }
        }
        Ok(spec)
    }

    /// Step 1: `(V, theta) | scales, counts, weights, baselines, y` by FFBS.
    ///
    /// Synthetic rows carry no degree of freedom for `V`: they enter the
    /// prior of the scaled states, whose Jacobian cancels their scale factor.
    pub fn step_states<R: Rng + ?Sized>(&self, state: &mut GibbsState, data: &Dataset, rng: &mut R) -> Result<()> {
        let spec = self.build_cdlm(state, data)?;
        let filter = cdlm::forward_filter(&spec)?;
        if let VarianceMode::Unknown { n0, s0 } = self.config.variance {
            state.variance = cdlm::sample_scale(&filter, n0, s0, rng)?;
        }
        state.theta = cdlm::backward_sample(&filter, state.variance, rng)?;
        Ok(())
    }

    /// Step 2: latent scales from their GIG(1/2) conditionals.
    pub fn step_scales<R: Rng + ?Sized>(&self, state: &mut GibbsState, rng: &mut R) -> Result<()> {
        let (p, horizon) = (state.dim(), state.horizon());
        let shrink = self.config.variant.shrinks_to_baseline();
        for i in 0..p {
            let w = state.weights[i];
            let alpha = w.alpha();
            let x0 = state.scaled(i, 0);
            state.lambda_init[i] = sample_gig(GigParams::half(alpha * alpha, x0 * x0)?, rng);
            if shrink {
                let xt = state.scaled(i, horizon - 1);
                state.lambda_terminal[i] = sample_gig(GigParams::half(alpha * alpha, xt * xt)?, rng);
            }
            let b2 = w.beta * w.beta;
            for t in 1..horizon {
                let d = (state.theta[(i, t)] - state.theta[(i, t - 1)]) / state.variance.sqrt();
                state.lambda_evo[(i, t)] = sample_gig(GigParams::half(b2, d * d)?, rng);
            }
            if shrink {
                let gap = w.gap();
                for t in 1..horizon - 1 {
                    let n = state.counts[(i, t)];
                    state.lambda_count[i][t] = if n > 0 {
                        let a = n as f64 * gap;
                        let x = state.scaled(i, t);
                        Some(sample_gig(GigParams::half(a * a, x * x)?, rng))
                    } else {
                        None
                    };
                }
            }
        }
        Ok(())
    }

    /// Step 3: counts `n_it ~ Geo(rho e^{-(beta - alpha)|x_it|})` with their
    /// scales integrated out. Scales of counts that become positive are drawn
    /// immediately so the state stays structurally complete.
    pub fn step_counts<R: Rng + ?Sized>(&self, state: &mut GibbsState, rng: &mut R) -> Result<()> {
        if !self.config.variant.shrinks_to_baseline() {
            return Ok(());
        }
        let (p, horizon) = (state.dim(), state.horizon());
        for i in 0..p {
            let w = state.weights[i];
            let gap = w.gap();
            for t in 1..horizon - 1 {
                let x = state.scaled(i, t);
                let q = w.rho * (-gap * x.abs()).exp();
                let n = sample_geometric(q, rng)?;
                let n = u32::try_from(n).map_err(|_| Error::Numerical(format!("count overflow at ({i}, {t})")))?;
                let was = state.counts[(i, t)];
                state.counts[(i, t)] = n;
                if n == 0 {
                    state.lambda_count[i][t] = None;
                } else if was == 0 || state.lambda_count[i][t].is_none() {
                    let a = n as f64 * gap;
                    state.lambda_count[i][t] = Some(sample_gig(GigParams::half(a * a, x * x)?, rng));
                }
            }
        }
        Ok(())
    }

    fn path_stats(&self, state: &GibbsState, i: usize) -> PathStats {
        let horizon = state.horizon();
        let mut s = PathStats::default();
        let mut prev = state.scaled(i, 0);
        s.first = prev.abs();
        s.ends = prev.abs() + state.scaled(i, horizon - 1).abs();
        for t in 1..horizon {
            let x = state.scaled(i, t);
            s.diffs += (x - prev).abs();
            let n = state.counts[(i, t)] as f64;
            if n > 0.0 {
                s.count_abs += n * x.abs();
                s.count_sum += n;
            }
            prev = x;
        }
        s
    }

    fn groups(&self, p: usize) -> Vec<Vec<usize>> {
        if self.config.shared_weights {
            vec![(0..p).collect()]
        } else {
            (0..p).map(|i| vec![i]).collect()
        }
    }

    fn sample_rho<R: Rng + ?Sized>(&self, s: &PathStats, k: f64, horizon: f64, beta: f64, rng: &mut R) -> Result<f64> {
        let g = self.rho_grid.as_ref().expect("rho grid present for shrinking variants");
        let slope = beta * (s.ends - s.count_abs);
        let ll: Vec<f64> = (0..g.prior.len())
            .map(|j| {
                (k + s.count_sum) * g.ln_rho[j] + k * (horizon - 2.0) * g.ln_one_minus_sq[j] + k * g.ln_start[j]
                    - g.prior.values()[j] * slope
            })
            .collect();
        let j = sample_grid_index(&g.prior, &ll, rng)?;
        Ok(g.prior.values()[j])
    }

    fn sample_delta<R: Rng + ?Sized>(&self, beta: f64, rng: &mut R) -> Result<f64> {
        let g = self.delta_grid.as_ref().expect("delta grid present for half-Cauchy variants");
        let b2 = beta * beta;
        let ll: Vec<f64> = g.values().iter().map(|d| 0.5 * d.ln() - 0.5 * d * b2).collect();
        let j = sample_grid_index(g, &ll, rng)?;
        Ok(g.values()[j])
    }

    /// `beta` from the extended-gamma conditional of `g = delta beta^2 / 2`
    /// when the path likelihood is `beta^power exp(-beta * rate)`.
    fn sample_half_cauchy_beta<R: Rng + ?Sized>(&self, power: f64, rate: f64, delta: f64, rng: &mut R) -> Result<f64> {
        let g = sample_extended_gamma(0.5 * (power + 1.0), rate / (2.0 * delta).sqrt(), rng)?;
        let beta = (2.0 * g / delta).sqrt();
        if !(beta > 0.0 && beta.is_finite()) {
            return Err(Error::Numerical(format!("half-Cauchy beta draw {beta}")));
        }
        Ok(beta)
    }

    /// Step 4: weights given scaled states and counts, scales integrated out.
    pub fn step_weights<R: Rng + ?Sized>(&self, state: &mut GibbsState, rng: &mut R) -> Result<()> {
        if self.config.fixed_weights.is_some() {
            return Ok(());
        }
        let h = self.config.hyper;
        let horizon = state.horizon() as f64;
        for group in self.groups(state.dim()) {
            let mut s = PathStats::default();
            for &i in &group {
                s += self.path_stats(state, i);
            }
            let k = group.len() as f64;
            let mut w = state.weights[group[0]];
            use super::Variant::*;
            match self.config.variant {
                Dfl => {
                    let rate = h.beta_rate + w.rho * s.ends + s.diffs + (1.0 - w.rho) * s.count_abs;
                    w.beta = gamma(h.beta_shape + k * horizon, rate, rng)?;
                    w.rho = self.sample_rho(&s, k, horizon, w.beta, rng)?;
                }
                Dfhs => {
                    let rate = w.rho * s.ends + s.diffs + (1.0 - w.rho) * s.count_abs;
                    w.beta = self.sample_half_cauchy_beta(k * horizon, rate, w.delta, rng)?;
                    w.rho = self.sample_rho(&s, k, horizon, w.beta, rng)?;
                    w.delta = self.sample_delta(w.beta, rng)?;
                }
                De => {
                    w.alpha0 = gamma(h.alpha_shape + k, h.alpha_rate + s.first, rng)?;
                    w.beta = gamma(h.beta_shape + k * (horizon - 1.0), h.beta_rate + s.diffs, rng)?;
                }
                Hs => {
                    w.alpha0 = gamma(h.alpha_shape + k, h.alpha_rate + s.first, rng)?;
                    w.beta = self.sample_half_cauchy_beta(k * (horizon - 1.0), s.diffs, w.delta, rng)?;
                    w.delta = self.sample_delta(w.beta, rng)?;
                }
            }
            for &i in &group {
                state.weights[i] = w;
            }
        }
        Ok(())
    }

    /// Step 5: baselines from their normal conditionals.
    pub fn step_baseline<R: Rng + ?Sized>(&self, state: &mut GibbsState, rng: &mut R) -> Result<()> {
        let Baseline::Estimated { mean, sd } = self.config.baseline else {
            return Ok(());
        };
        let (p, horizon) = (state.dim(), state.horizon());
        let v = state.variance;
        for i in 0..p {
            let mut prec_data = 1.0 / state.lambda_init[i];
            let mut num_data = state.theta[(i, 0)] / state.lambda_init[i];
            if self.config.variant.shrinks_to_baseline() {
                prec_data += 1.0 / state.lambda_terminal[i];
                num_data += state.theta[(i, horizon - 1)] / state.lambda_terminal[i];
                for t in 1..horizon - 1 {
                    if let Some(l) = state.lambda_count[i][t] {
                        prec_data += 1.0 / l;
                        num_data += state.theta[(i, t)] / l;
                    }
                }
            }
            let prec = 1.0 / (sd * sd) + prec_data / v;
            let m = (mean / (sd * sd) + num_data / v) / prec;
            let e: f64 = rng.sample(StandardNormal);
            state.baseline[i] = m + e / prec.sqrt();
            if !state.baseline[i].is_finite() {
                return Err(Error::Numerical(format!("non-finite baseline draw for coefficient {i}")));
            }
        }
        Ok(())
    }

    /// One full sweep.
    pub fn sweep<R: Rng + ?Sized>(&self, state: &mut GibbsState, data: &Dataset, rng: &mut R) -> Result<()> {
        self.step_states(state, data, rng)?;
        self.step_counts(state, rng)?;
        self.step_weights(state, rng)?;
        self.step_scales(state, rng)?;
        self.step_baseline(state, rng)?;
        Ok(())
    }

    /// Draws `theta_{T+1}` from the prior transition given the last state.
    pub fn sample_next_state<R: Rng + ?Sized>(&self, state: &GibbsState, rng: &mut R) -> Result<DVector<f64>> {
        let (p, last) = (state.dim(), state.horizon() - 1);
        let sv = state.variance.sqrt();
        let mut out = DVector::zeros(p);
        for i in 0..p {
            let w = state.weights[i];
            let x = state.scaled(i, last);
            let next = if self.config.variant.shrinks_to_baseline() {
                sample_prior_transition(x, &Weights::new(w.beta, w.rho)?, rng)?
            } else {
                sample_de_step(x, w.beta, rng)
            };
            out[i] = state.baseline[i] + sv * next;
        }
        Ok(out)
    }
}

/// Ridge fits over a moving window, used only to start the chain.
fn rolling_ridge(data: &Dataset) -> DMatrix<f64> {
    let (horizon, p) = (data.horizon(), data.dim());
    let half = p.max(10);
    let mut theta = DMatrix::zeros(p, horizon);
    for t in 0..horizon {
        let lo = t.saturating_sub(half);
        let hi = (t + half + 1).min(horizon);
        let x = data.predictors.rows(lo, hi - lo);
        let y = DVector::from_column_slice(&data.y[lo..hi]);
        let mut xtx = x.transpose() * x;
        for j in 0..p {
            xtx[(j, j)] += 1.0;
        }
        let xty = x.transpose() * y;
        let b = xtx.cholesky().map(|c| c.solve(&xty)).unwrap_or_else(|| DVector::zeros(p));
        theta.set_column(t, &b);
    }
    theta
}
