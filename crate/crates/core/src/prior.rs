//! Closed-form layer of the dynamic fused LASSO (DFL) process.
//!
//! The transition density from `x'` to `x` is
//!
//! ```text
//! p(x | x') = f(x) g(x, x') / h(x'),   f = DE(x | alpha),  g = DE(x - x' | beta)
//! ```
//!
//! where `h` is the normalizing function. Everything here is evaluated on the
//! centred coordinate (state minus baseline); [`ShrinkagePoint`] performs the
//! shift when a baseline other than zero is in use. Quantities that can
//! underflow for large `beta * |x|` are assembled in log space.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};

/// Distance from `rho = 1` below which the balanced (`alpha == beta`) closed
/// form of the normalizing function is used.
pub const BALANCED_TOLERANCE: f64 = 1e-12;

/// Penalty weights of the DFL process, stored as `(beta, rho)` with
/// `alpha = rho * beta`.
///
/// `rho = 0` is the pure double-exponential random walk. `rho = 1` (balanced
/// penalties) is accepted for density evaluation only; samplers and the Gibbs
/// machinery require `rho < 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Weights {
    beta: f64,
    rho: f64,
}

impl Weights {
    pub fn new(beta: f64, rho: f64) -> Result<Self> {
        if !(beta.is_finite() && beta > 0.0) {
            return domain(format!("beta must be positive and finite, got {beta}"));
        }
        if !(0.0..=1.0).contains(&rho) {
            return domain(format!("rho must lie in [0, 1], got {rho}"));
        }
        Ok(Self { beta, rho })
    }

    /// Builds weights from the `(alpha, beta)` pair.
    pub fn from_alpha_beta(alpha: f64, beta: f64) -> Result<Self> {
        if !(beta.is_finite() && beta > 0.0) {
            return domain(format!("beta must be positive and finite, got {beta}"));
        }
        if !(alpha >= 0.0 && alpha <= beta) {
            return domain(format!("need 0 <= alpha <= beta, got alpha={alpha}, beta={beta}"));
        }
        Self::new(beta, alpha / beta)
    }

    #[inline]
    pub fn beta(&self) -> f64 {
        self.beta
    }

    #[inline]
    pub fn rho(&self) -> f64 {
        self.rho
    }

    #[inline]
    pub fn alpha(&self) -> f64 {
        self.rho * self.beta
    }

    /// `beta - alpha`, computed without cancellation.
    #[inline]
    pub fn gap(&self) -> f64 {
        self.beta * (1.0 - self.rho)
    }

    pub fn is_balanced(&self) -> bool {
        (1.0 - self.rho).abs() < BALANCED_TOLERANCE
    }

    fn require_alpha(&self) -> Result<()> {
        if self.rho <= 0.0 {
            return domain("alpha = 0 makes the zero-shrinkage density improper");
        }
        Ok(())
    }

    fn require_unbalanced(&self) -> Result<()> {
        if self.rho >= 1.0 {
            return domain("requires alpha < beta");
        }
        Ok(())
    }

    pub fn mixture_constants(&self) -> Result<MixtureConstants> {
        self.require_unbalanced()?;
        Ok(MixtureConstants::new(*self))
    }
}

/// Constants of the log-geometric expansion of `1 / h`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MixtureConstants {
    /// `(beta - alpha) / 2`.
    pub c0: f64,
    /// `log(beta) - log(beta - alpha) = -log(1 - rho)`.
    pub cplus: f64,
    ratio: f64,
}

impl MixtureConstants {
    fn new(w: Weights) -> Self {
        Self {
            c0: 0.5 * w.gap(),
            cplus: -(-w.rho).ln_1p(),
            ratio: w.rho,
        }
    }

    /// `alpha / beta`.
    pub fn ratio(&self) -> f64 {
        self.ratio
    }

    /// Log-geometric weight `w_n = ratio^n / (n * cplus)` for `n >= 1`.
    pub fn weight(&self, n: u64) -> f64 {
        if n == 0 || self.cplus == 0.0 {
            return 0.0;
        }
        (n as f64 * self.ratio.ln() - (n as f64).ln() - self.cplus.ln()).exp()
    }

    /// Lazily evaluated weights `w_1, w_2, ...`.
    pub fn weights(&self) -> impl Iterator<Item = f64> + '_ {
        (1u64..).map(move |n| self.weight(n))
    }

    /// Smallest `N` with `sum_{n > N} w_n < tol`.
    pub fn truncation(&self, tol: f64) -> u64 {
        if self.ratio == 0.0 {
            return 1;
        }
        // tail <= ratio^(N+1) / ((N+1) * cplus * (1 - ratio))
        let mut n = 1u64;
        loop {
            let m = (n + 1) as f64;
            let log_tail = m * self.ratio.ln() - m.ln() - self.cplus.ln() - (-self.ratio).ln_1p();
            if log_tail < tol.ln() {
                return n;
            }
            n += 1;
        }
    }

    /// Probability of a positive latent count, `C+ / (C0 + C+)`.
    pub fn positive_count_prob(&self) -> f64 {
        self.cplus / (self.c0 + self.cplus)
    }
}

/// Previous state and baseline of a transition.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShrinkagePoint {
    pub x_prev: f64,
    pub mu: f64,
}

impl ShrinkagePoint {
    pub fn new(x_prev: f64, mu: f64) -> Self {
        Self { x_prev, mu }
    }

    pub fn transition_density(&self, x: f64, w: &Weights) -> Result<f64> {
        transition_density(x - self.mu, self.x_prev - self.mu, w)
    }

    pub fn conditional_mean(&self, w: &Weights) -> Result<f64> {
        let centred = self.x_prev - self.mu;
        Ok(self.mu + conditional_shrinkage_mean(centred, w)? * centred)
    }
}

/// `-expm1(-d u) / d`, continuous at `d = 0` where it equals `u`.
fn one_minus_exp_over(d: f64, u: f64) -> f64 {
    if d * u < 1e-300 || d == 0.0 {
        u
    } else {
        -(-d * u).exp_m1() / d
    }
}

/// Log of the double-exponential density `DE(x | a) = (a / 2) exp(-a |x|)`.
#[inline]
pub fn log_double_exponential(x: f64, a: f64) -> f64 {
    (0.5 * a).ln() - a * x.abs()
}

/// Log of the normalizing function `h(x)`.
pub fn log_normalizing_constant(x: f64, w: &Weights) -> f64 {
    let (alpha, beta) = (w.alpha(), w.beta());
    let u = x.abs();
    if alpha == 0.0 {
        return f64::NEG_INFINITY;
    }
    if w.is_balanced() {
        return (0.25 * alpha).ln() - alpha * u + (alpha * u).ln_1p();
    }
    // h = alpha beta^2 / (2 (alpha + beta)) e^{-alpha u} (1/beta + rho (1 - e^{-(beta-alpha) u}) / (beta - alpha))
    let bracket = 1.0 / beta + w.rho() * one_minus_exp_over(w.gap(), u);
    (alpha * beta * beta / (2.0 * (alpha + beta))).ln() - alpha * u + bracket.ln()
}

/// Normalizing function `h(x) = integral of f(x') g(x', x) dx'`.
pub fn normalizing_constant(x: f64, w: &Weights) -> f64 {
    log_normalizing_constant(x, w).exp()
}

pub fn log_transition_density(x: f64, x_prev: f64, w: &Weights) -> Result<f64> {
    w.require_alpha()?;
    Ok(log_double_exponential(x, w.alpha()) + log_double_exponential(x - x_prev, w.beta())
        - log_normalizing_constant(x_prev, w))
}

/// Transition density `p(x | x')`.
pub fn transition_density(x: f64, x_prev: f64, w: &Weights) -> Result<f64> {
    log_transition_density(x, x_prev, w).map(f64::exp)
}

/// Total mass `Z = alpha beta (beta + 2 alpha) / (4 (alpha + beta)^2)` of the
/// product `h f`, which solves the stationarity equation only up to scale.
pub fn stationary_mass(w: &Weights) -> f64 {
    let (alpha, beta) = (w.alpha(), w.beta());
    alpha * beta * (beta + 2.0 * alpha) / (4.0 * (alpha + beta) * (alpha + beta))
}

pub fn log_stationary_density(x: f64, w: &Weights) -> Result<f64> {
    w.require_alpha()?;
    Ok(log_normalizing_constant(x, w) + log_double_exponential(x, w.alpha()) - stationary_mass(w).ln())
}

/// Stationary density `pi(x) = h(x) f(x) / Z`, normalized to integrate to one.
pub fn stationary_density(x: f64, w: &Weights) -> Result<f64> {
    log_stationary_density(x, w).map(f64::exp)
}

/// Expected shrinkage coefficient `E[w | x']`; the conditional prior mean of
/// the next state is `E[w | x'] * x'`.
pub fn conditional_shrinkage_mean(x_prev: f64, w: &Weights) -> Result<f64> {
    w.require_alpha()?;
    w.require_unbalanced()?;
    if x_prev == 0.0 || !x_prev.is_finite() {
        return domain(format!("conditional shrinkage mean needs a finite nonzero x', got {x_prev}"));
    }
    let (alpha, beta) = (w.alpha(), w.beta());
    let u = x_prev.abs();
    let gap = w.gap();
    let numerator = 1.0 - 2.0 * alpha / (alpha + beta) * one_minus_exp_over(gap, u) / u;
    let denominator = 1.0 - w.rho() * (-gap * u).exp();
    Ok(numerator / denominator)
}

fn shrinkage_support(x_prev: f64, w: &Weights) -> Result<(f64, f64)> {
    w.require_alpha()?;
    w.require_unbalanced()?;
    if x_prev == 0.0 || !x_prev.is_finite() {
        return domain(format!("shrinkage distribution needs a finite nonzero x', got {x_prev}"));
    }
    let u = x_prev.abs();
    Ok((w.alpha() * u, w.beta() * u))
}

/// Support `[alpha |x'|, beta |x'|]` of the rescaled shrinkage variable
/// `y = |x'| sqrt(w alpha^2 + (1 - w) beta^2)`.
pub fn shrinkage_weight_support(x_prev: f64, w: &Weights) -> Result<(f64, f64)> {
    shrinkage_support(x_prev, w)
}

/// Distribution function `Q(y)` of the rescaled shrinkage variable.
pub fn shrinkage_weight_cdf(y: f64, x_prev: f64, w: &Weights) -> Result<f64> {
    let (lo, hi) = shrinkage_support(x_prev, w)?;
    let slack = 1e-12 * hi;
    if !(y >= lo - slack && y <= hi + slack) {
        return domain(format!("y = {y} outside the support [{lo}, {hi}]"));
    }
    let y = y.clamp(lo, hi);
    Ok(cdf_unchecked(y, x_prev.abs(), w))
}

/// `Q(y)` with both terms scaled by `e^{alpha u}`.
pub(crate) fn cdf_unchecked(y: f64, u: f64, w: &Weights) -> f64 {
    let (alpha, beta) = (w.alpha(), w.beta());
    let lo = alpha * u;
    let denominator = beta - alpha * (-w.gap() * u).exp();
    let numerator = beta - alpha * beta * u / y * (-(y - lo)).exp();
    (numerator / denominator).clamp(0.0, 1.0)
}

/// Density `q(y)` of the rescaled shrinkage variable on its support.
pub fn shrinkage_weight_density(y: f64, x_prev: f64, w: &Weights) -> Result<f64> {
    let (lo, hi) = shrinkage_support(x_prev, w)?;
    if y < lo || y > hi {
        return Ok(0.0);
    }
    let (alpha, beta) = (w.alpha(), w.beta());
    let u = x_prev.abs();
    let denominator = beta - alpha * (-w.gap() * u).exp();
    Ok(alpha * beta * u / denominator * (1.0 / y + 1.0 / (y * y)) * (-(y - lo)).exp())
}

/// Marginal density `q(w | x')` of the shrinkage coefficient `w` on `(0, 1)`.
pub fn shrinkage_coefficient_density(coef: f64, x_prev: f64, w: &Weights) -> Result<f64> {
    w.require_alpha()?;
    if !(0.0..=1.0).contains(&coef) {
        return Ok(0.0);
    }
    let (alpha, beta) = (w.alpha(), w.beta());
    let u = x_prev.abs();
    let c = coef * alpha * alpha + (1.0 - coef) * beta * beta;
    let log_front = (0.25 * alpha * alpha * beta * beta).ln() - log_normalizing_constant(x_prev, w);
    let shape = u / c + c.powf(-1.5);
    Ok((log_front - u * c.sqrt()).exp() * shape)
}

/// Prior probability `P[n > 0] = C+ / (C+ + C0)` of a positive latent count.
pub fn prior_count_positive_prob(w: &Weights) -> Result<f64> {
    if w.rho() == 0.0 {
        return Ok(0.0);
    }
    Ok(w.mixture_constants()?.positive_count_prob())
}

/// Prior mean of the latent count, `E[n] = rho / ((1 - rho) (C0 + C+))`.
pub fn prior_count_mean(w: &Weights) -> Result<f64> {
    if w.rho() == 0.0 {
        return Ok(0.0);
    }
    let mc = w.mixture_constants()?;
    Ok(w.rho() / ((1.0 - w.rho()) * (mc.c0 + mc.cplus)))
}
