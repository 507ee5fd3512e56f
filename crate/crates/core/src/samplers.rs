//! Exact random-variate generators for the non-Gaussian full conditionals.
//!
//! All samplers are free functions that take `&mut R where R: Rng`; use one
//! [`RngStream`] per thread or chain.

use rand::distr::{Distribution, Open01};
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{ChiSquared, Exp1, Gamma, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::prior::Weights;

/// Deterministic random stream identified by `(seed, stream)`.
///
/// Streams with the same seed but different ids are independent; identical
/// `(seed, stream)` pairs reproduce the same draws bit for bit.
#[derive(Debug, Clone)]
pub struct RngStream {
    seed: u64,
    stream: u64,
    inner: ChaCha8Rng,
}

impl RngStream {
    pub fn new(seed: u64, stream: u64) -> Self {
        let mut inner = ChaCha8Rng::seed_from_u64(seed);
        inner.set_stream(stream);
        Self { seed, stream, inner }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream(&self) -> u64 {
        self.stream
    }

    /// A fresh stream sharing this seed, e.g. for a child task.
    pub fn fork(&self, stream: u64) -> Self {
        Self::new(self.seed, stream)
    }
}

impl RngCore for RngStream {
    fn next_u32(&mut self) -> u32 {
        self.inner.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.inner.fill_bytes(dst)
    }
}

/// Smallest `b` parameter handed to the GIG generators; squared residuals can
/// be exactly zero when a state sits on its shrinkage target.
pub const GIG_B_FLOOR: f64 = 1e-300;

/// Index `p` of the generalized inverse Gaussian family supported here.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum GigOrder {
    Half,
    ThreeHalves,
}

impl GigOrder {
    pub fn value(self) -> f64 {
        match self {
            GigOrder::Half => 0.5,
            GigOrder::ThreeHalves => 1.5,
        }
    }
}

/// GIG(p, a, b) with density proportional to `x^{p-1} exp(-(a x + b / x) / 2)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GigParams {
    pub order: GigOrder,
    pub a: f64,
    pub b: f64,
}

impl GigParams {
    pub fn new(order: GigOrder, a: f64, b: f64) -> Result<Self> {
        if !(a > 0.0 && a.is_finite()) || !(b > 0.0 && b.is_finite()) {
            return domain(format!("GIG needs finite a > 0 and b > 0, got a={a}, b={b}"));
        }
        Ok(Self { order, a, b })
    }

    /// `GIG(1/2, a, max(b, GIG_B_FLOOR))`.
    pub fn half(a: f64, b: f64) -> Result<Self> {
        Self::new(GigOrder::Half, a, b.max(GIG_B_FLOOR))
    }

    pub fn mean(&self) -> f64 {
        let (a, b) = (self.a, self.b);
        let k = (b / a).sqrt();
        let w = (a * b).sqrt();
        match self.order {
            // K_{3/2}(w) / K_{1/2}(w) = 1 + 1/w
            GigOrder::Half => k * (1.0 + 1.0 / w),
            // K_{5/2}(w) / K_{3/2}(w) = (w^2 + 3w + 3) / (w (w + 1))
            GigOrder::ThreeHalves => k * (w * w + 3.0 * w + 3.0) / (w * (w + 1.0)),
        }
    }
}

pub fn sample_gig<R: Rng + ?Sized>(params: GigParams, rng: &mut R) -> f64 {
    match params.order {
        GigOrder::Half => gig_half(params.a, params.b, rng),
        GigOrder::ThreeHalves => gig_rou(1.5, params.a, params.b, rng),
    }
}

/// GIG(1/2, a, b) as the reciprocal of an inverse Gaussian draw, using the
/// two-root construction written so that neither `b -> 0` nor `a b -> 0`
/// overflows. At `b = 0` it reduces to `chi^2_1 / a`.
fn gig_half<R: Rng + ?Sized>(a: f64, b: f64, rng: &mut R) -> f64 {
    let k = (b / a).sqrt();
    let y: f64 = ChiSquared::new(1.0).expect("valid dof").sample(rng);
    let m = 0.5 * y / a;
    let big = k + m + (m * (2.0 * k + m)).sqrt();
    if big == 0.0 {
        return f64::MIN_POSITIVE;
    }
    let u: f64 = rng.random();
    if u * (k + big) < big {
        big
    } else {
        k * (k / big)
    }
}

fn gig_mode(lambda: f64, omega: f64) -> f64 {
    if lambda >= 1.0 {
        (((lambda - 1.0) * (lambda - 1.0) + omega * omega).sqrt() + (lambda - 1.0)) / omega
    } else {
        omega / (((1.0 - lambda) * (1.0 - lambda) + omega * omega).sqrt() + (1.0 - lambda))
    }
}

/// Ratio-of-uniforms GIG generator for `lambda >= 1` (Hormann and Leydold),
/// without mode shift for moderate `omega` and with it otherwise.
fn gig_rou<R: Rng + ?Sized>(lambda: f64, a: f64, b: f64, rng: &mut R) -> f64 {
    let omega = (a * b).sqrt();
    let scale = (b / a).sqrt();
    let t = 0.5 * (lambda - 1.0);
    let s = 0.25 * omega;
    let xm = gig_mode(lambda, omega);
    let nc = t * xm.ln() - s * (xm + 1.0 / xm);
    let log_f = |x: f64| t * x.ln() - s * (x + 1.0 / x) - nc;

    if lambda <= 2.0 && omega <= 3.0 {
        let ym = ((lambda + 1.0) + ((lambda + 1.0) * (lambda + 1.0) + omega * omega).sqrt()) / omega;
        let um = (0.5 * (lambda + 1.0) * ym.ln() - s * (ym + 1.0 / ym) - nc).exp();
        loop {
            let u = um * rng.random::<f64>();
            let v: f64 = rng.sample(Open01);
            let x = u / v;
            if x > 0.0 && v.ln() <= log_f(x) {
                return scale * x;
            }
        }
    }

    let ca = -(2.0 * (lambda + 1.0) / omega + xm);
    let cb = 2.0 * (lambda - 1.0) * xm / omega - 1.0;
    let cc = xm;
    let p = cb - ca * ca / 3.0;
    let q = 2.0 * ca * ca * ca / 27.0 - ca * cb / 3.0 + cc;
    let fi = (-q / (2.0 * (-(p * p * p) / 27.0).sqrt())).acos();
    let fak = 2.0 * (-p / 3.0).sqrt();
    let y1 = fak * (fi / 3.0).cos() - ca / 3.0;
    let y2 = fak * (fi / 3.0 + 4.0 / 3.0 * std::f64::consts::PI).cos() - ca / 3.0;
    let uplus = (y1 - xm) * log_f(y1).exp();
    let uminus = (y2 - xm) * log_f(y2).exp();
    loop {
        let u = uminus + rng.random::<f64>() * (uplus - uminus);
        let v: f64 = rng.sample(Open01);
        let x = u / v + xm;
        if x > 0.0 && v.ln() <= log_f(x) {
            return scale * x;
        }
    }
}

/// Geometric variate on `{0, 1, ...}` with `P[N = n] = (1 - q) q^n`.
pub fn sample_geometric<R: Rng + ?Sized>(q: f64, rng: &mut R) -> Result<u64> {
    if !(0.0..1.0).contains(&q) {
        return domain(format!("geometric parameter must lie in [0, 1), got {q}"));
    }
    if q == 0.0 {
        return Ok(0);
    }
    let u: f64 = rng.sample(Open01);
    let n = (u.ln() / q.ln()).floor();
    Ok(if n >= u64::MAX as f64 { u64::MAX } else { n as u64 })
}

/// Log-geometric variate on `{1, 2, ...}` with
/// `P[N = n] = ratio^n / (n * (-log(1 - ratio)))` (Kemp's LK algorithm).
pub fn sample_log_geometric<R: Rng + ?Sized>(ratio: f64, rng: &mut R) -> Result<u64> {
    if !(ratio > 0.0 && ratio < 1.0) {
        return domain(format!("log-geometric ratio must lie in (0, 1), got {ratio}"));
    }
    let v: f64 = rng.sample(Open01);
    if v >= ratio {
        return Ok(1);
    }
    let u: f64 = rng.sample(Open01);
    let q = -((-ratio).ln_1p() * u).exp_m1();
    if v <= q * q {
        let n = (1.0 + v.ln() / q.ln()).floor();
        return Ok(if n >= u64::MAX as f64 { u64::MAX } else { n as u64 });
    }
    Ok(if v > q { 1 } else { 2 })
}

/// Extended gamma variate with density proportional to
/// `g^{r-1} exp(-g - 2 c sqrt(g))`, returned with the number of proposals used.
pub fn sample_extended_gamma_counted<R: Rng + ?Sized>(r: f64, c: f64, rng: &mut R) -> Result<(f64, u64)> {
    if !(r > 0.0 && r.is_finite()) || !(c >= 0.0 && c.is_finite()) {
        return domain(format!("extended gamma needs r > 0 and c >= 0, got r={r}, c={c}"));
    }
    let d = c + (c * c + 4.0 * r).sqrt();
    let proposal = Gamma::new(2.0 * r, 1.0 / d).map_err(|e| Error::Domain(e.to_string()))?;
    let shift = 0.5 * d - c;
    let mut tries = 0;
    loop {
        tries += 1;
        let s: f64 = proposal.sample(rng);
        let e: f64 = rng.sample(Exp1);
        if e >= (s - shift) * (s - shift) {
            return Ok((s * s, tries));
        }
    }
}

pub fn sample_extended_gamma<R: Rng + ?Sized>(r: f64, c: f64, rng: &mut R) -> Result<f64> {
    sample_extended_gamma_counted(r, c, rng).map(|(g, _)| g)
}

/// Discrete prior on the grid `{d, 2d, ..., M d}` with `d = 1 / N`.
#[derive(Debug, Clone, PartialEq)]
pub struct GridPrior {
    n: usize,
    m: usize,
    values: Vec<f64>,
    log_weights: Vec<f64>,
}

impl GridPrior {
    /// Default resolution `N = 1000`, `M = 900`.
    pub const DEFAULT_N: usize = 1000;
    pub const DEFAULT_M: usize = 900;

    /// Grid weights proportional to the `Be(a, b)` density at each point.
    pub fn beta(a: f64, b: f64, n: usize, m: usize) -> Result<Self> {
        if !(a > 0.0 && b > 0.0) {
            return domain(format!("beta grid needs positive shapes, got ({a}, {b})"));
        }
        Self::from_log_density(n, m, |x| (a - 1.0) * x.ln() + (b - 1.0) * (-x).ln_1p())
    }

    pub fn from_log_density<F: Fn(f64) -> f64>(n: usize, m: usize, log_density: F) -> Result<Self> {
        if m == 0 || m >= n {
            return domain(format!("grid needs 0 < M < N, got N={n}, M={m}"));
        }
        let d = 1.0 / n as f64;
        let values: Vec<f64> = (1..=m).map(|k| k as f64 * d).collect();
        let raw: Vec<f64> = values.iter().map(|&x| log_density(x)).collect();
        let lse = log_sum_exp(&raw);
        if !lse.is_finite() {
            return domain("grid prior weights are not normalizable");
        }
        let log_weights = raw.iter().map(|l| l - lse).collect();
        Ok(Self { n, m, values, log_weights })
    }

    pub fn resolution(&self) -> (usize, usize) {
        (self.n, self.m)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Normalized log prior probabilities.
    pub fn log_weights(&self) -> &[f64] {
        &self.log_weights
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Posterior log probabilities (normalized) given log-likelihood values on the grid.
    pub fn posterior_log_weights(&self, log_lik: &[f64]) -> Result<Vec<f64>> {
        if log_lik.len() != self.len() {
            return Err(Error::Dimension(format!(
                "grid log-likelihood has {} entries, grid has {}",
                log_lik.len(),
                self.len()
            )));
        }
        let raw: Vec<f64> = self.log_weights.iter().zip(log_lik).map(|(p, l)| p + l).collect();
        let lse = log_sum_exp(&raw);
        if !lse.is_finite() {
            return Err(Error::Numerical("grid posterior has no finite weight".into()));
        }
        Ok(raw.into_iter().map(|l| l - lse).collect())
    }
}

pub(crate) fn log_sum_exp(xs: &[f64]) -> f64 {
    let max = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return max;
    }
    max + xs.iter().map(|x| (x - max).exp()).sum::<f64>().ln()
}

/// Draws a grid index from the posterior with the given log-likelihood.
pub fn sample_grid_index<R: Rng + ?Sized>(prior: &GridPrior, log_lik: &[f64], rng: &mut R) -> Result<usize> {
    let lw = prior.posterior_log_weights(log_lik)?;
    let max = lw.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let total: f64 = lw.iter().map(|l| (l - max).exp()).sum();
    let target = rng.random::<f64>() * total;
    let mut acc = 0.0;
    for (k, l) in lw.iter().enumerate() {
        acc += (l - max).exp();
        if acc > target {
            return Ok(k);
        }
    }
    Ok(lw.iter().rposition(|l| l.is_finite()).unwrap_or(lw.len() - 1))
}

/// Draws a grid value from the posterior with the given log-likelihood.
pub fn sample_grid<R: Rng + ?Sized>(prior: &GridPrior, log_lik: &[f64], rng: &mut R) -> Result<f64> {
    sample_grid_index(prior, log_lik, rng).map(|k| prior.values[k])
}

/// Controls of the Newton inversion of the shrinkage distribution function.
pub const NEWTON_MAX_ITER: usize = 100;
pub const NEWTON_TOL: f64 = 1e-12;

/// Solves `Q(y) = u` for the rescaled shrinkage variable `y` on
/// `[alpha |x'|, beta |x'|]`.
///
/// In `z = log y` the equation reads `z + e^z = target`, with the right side
/// assembled from scaled terms so it stays finite for large `beta |x'|`.
/// Newton iterations start at the midpoint of the log bracket; steps leaving
/// the bracket are replaced by bisection.
pub fn invert_shrinkage_cdf(u: f64, x_prev: f64, w: &Weights) -> Result<f64> {
    let (lo, hi) = crate::prior::shrinkage_weight_support(x_prev, w)?;
    if !(0.0..=1.0).contains(&u) {
        return domain(format!("probability must lie in [0, 1], got {u}"));
    }
    if u == 0.0 {
        return Ok(lo);
    }
    if u == 1.0 {
        return Ok(hi);
    }
    let (alpha, beta) = (w.alpha(), w.beta());
    let ax = x_prev.abs();
    let tail = alpha * (-w.gap() * ax).exp();
    let rhs = beta * (1.0 - u) + u * tail;
    let target = lo + (alpha * beta * ax).ln() - rhs.ln();

    let (mut zl, mut zh) = (lo.ln(), hi.ln());
    let g = |z: f64| z + z.exp() - target;
    let mut z = 0.5 * (zl + zh);
    for _ in 0..NEWTON_MAX_ITER {
        let gz = g(z);
        if gz > 0.0 {
            zh = z;
        } else {
            zl = z;
        }
        let mut next = z - gz / (1.0 + z.exp());
        if !(next > zl && next < zh) {
            next = 0.5 * (zl + zh);
        }
        let step = (next - z).abs();
        z = next;
        if step < NEWTON_TOL || zh - zl < NEWTON_TOL {
            return Ok(z.exp().clamp(lo, hi));
        }
    }
    Err(Error::Numerical(format!(
        "shrinkage CDF inversion did not converge: u={u}, x'={x_prev}, bracket=[{zl}, {zh}], z={z}"
    )))
}

/// Draws `x ~ p(x | x')` from the DFL transition (location-scale mixture).
///
/// At `x' = 0` the transition is exactly `DE(alpha + beta)` and is drawn
/// directly.
pub fn sample_prior_transition<R: Rng + ?Sized>(x_prev: f64, w: &Weights, rng: &mut R) -> Result<f64> {
    if w.rho() <= 0.0 || w.rho() >= 1.0 {
        return domain(format!("transition sampler needs 0 < rho < 1, got {}", w.rho()));
    }
    if !x_prev.is_finite() {
        return domain(format!("previous state must be finite, got {x_prev}"));
    }
    if x_prev == 0.0 {
        return Ok(sample_laplace(w.alpha() + w.beta(), rng));
    }
    let u: f64 = rng.random();
    let y = invert_shrinkage_cdf(u, x_prev, w)?;
    let ax = x_prev.abs();
    let (alpha, beta) = (w.alpha(), w.beta());
    let coef = ((beta * beta - (y / ax) * (y / ax)) / ((beta - alpha) * (beta + alpha))).clamp(0.0, 1.0);
    let a = (y / ax) * (y / ax);
    let z = sample_gig(GigParams::new(GigOrder::ThreeHalves, a, ax * ax)?, rng);
    let sd = (coef * (1.0 - coef) * z).sqrt();
    let e: f64 = rng.sample(StandardNormal);
    Ok(coef * x_prev + sd * e)
}

/// Double-exponential draw with density `(a / 2) exp(-a |x|)`.
pub fn sample_laplace<R: Rng + ?Sized>(a: f64, rng: &mut R) -> f64 {
    let e: f64 = rng.sample(Exp1);
    if rng.random::<bool>() {
        e / a
    } else {
        -e / a
    }
}

/// One step of the double-exponential random walk, `x' + DE(beta)`.
pub fn sample_de_step<R: Rng + ?Sized>(x_prev: f64, beta: f64, rng: &mut R) -> f64 {
    x_prev + sample_laplace(beta, rng)
}

/// Draws from the stationary density `pi(x)`, which is proportional to
/// `e^{-2 alpha |x|} - rho e^{-(alpha + beta) |x|}`: a `DE(2 alpha)` proposal
/// accepted with probability `1 - rho e^{-(beta - alpha)|x|}`.
pub fn sample_stationary<R: Rng + ?Sized>(w: &Weights, rng: &mut R) -> Result<f64> {
    if w.rho() <= 0.0 || w.rho() >= 1.0 {
        return domain(format!("stationary sampler needs 0 < rho < 1, got {}", w.rho()));
    }
    loop {
        let x = sample_laplace(2.0 * w.alpha(), rng);
        let u: f64 = rng.random();
        if u >= w.rho() * (-w.gap() * x.abs()).exp() {
            return Ok(x);
        }
    }
}

/// Draws `n` from the prior count law: zero with probability
/// `C0 / (C0 + C+)`, otherwise log-geometric with ratio `rho`.
pub fn sample_prior_count<R: Rng + ?Sized>(w: &Weights, rng: &mut R) -> Result<u64> {
    if w.rho() == 0.0 {
        return Ok(0);
    }
    let p = w.mixture_constants()?.positive_count_prob();
    if rng.random::<f64>() < p {
        sample_log_geometric(w.rho(), rng)
    } else {
        Ok(0)
    }
}
