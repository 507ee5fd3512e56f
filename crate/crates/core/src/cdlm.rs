//! Forward filtering and backward sampling for conditionally Gaussian linear
//! state-space models whose observation stack varies over time.
//!
//! The state follows a random walk `theta_t = theta_{t-1} + N(0, V diag(w_t))`
//! started at `N(m_0, V diag(c_0))`. Each time point carries any number of
//! scalar observation rows `value = design' theta_t + N(0, V variance)`; rows
//! are absorbed one at a time by rank-one updates. All variances are relative
//! to a common scale `V`: the filter runs at `V = 1`, which leaves the means
//! unchanged and scales every covariance by `V`.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};

use crate::error::{Error, Result};

/// Floor applied to every relative variance.
pub const VARIANCE_FLOOR: f64 = 1e-300;

#[derive(Debug, Clone, PartialEq)]
pub enum Design {
    /// General regression row `F_t`.
    Dense(DVector<f64>),
    /// Unit row `e_i`, i.e. a direct observation of coordinate `i`.
    Unit(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ObsRow {
    pub design: Design,
    pub value: f64,
    /// Variance relative to the common scale `V`.
    pub variance: f64,
    /// Whether the row adds a degree of freedom to the posterior of `V`.
    pub counts_toward_dof: bool,
}

impl ObsRow {
    pub fn dense(design: DVector<f64>, value: f64, variance: f64) -> Self {
        Self { design: Design::Dense(design), value, variance, counts_toward_dof: true }
    }

    pub fn unit(index: usize, value: f64, variance: f64) -> Self {
        Self { design: Design::Unit(index), value, variance, counts_toward_dof: true }
    }

    pub fn without_dof(mut self) -> Self {
        self.counts_toward_dof = false;
        self
    }
}

/// A random-walk state-space model with stacked observation rows.
#[derive(Debug, Clone, PartialEq)]
pub struct CdlmSpec {
    dim: usize,
    init_mean: DVector<f64>,
    init_var: DVector<f64>,
    /// `evolution[t]` is the variance of `theta_t - theta_{t-1}`; entry 0 unused.
    evolution: Vec<DVector<f64>>,
    rows: Vec<Vec<ObsRow>>,
}

impl CdlmSpec {
    /// Model with `horizon` time points, unit evolution variances and no rows.
    pub fn new(horizon: usize, init_mean: DVector<f64>, init_var: DVector<f64>) -> Result<Self> {
        let dim = init_mean.len();
        if init_var.len() != dim || dim == 0 {
            return Err(Error::Dimension(format!(
                "initial mean has {} entries and variance {}",
                dim,
                init_var.len()
            )));
        }
        Ok(Self {
            dim,
            init_mean,
            init_var,
            evolution: vec![DVector::from_element(dim, 1.0); horizon],
            rows: vec![Vec::new(); horizon],
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn horizon(&self) -> usize {
        self.rows.len()
    }

    pub fn set_evolution(&mut self, t: usize, var: DVector<f64>) -> Result<()> {
        if t == 0 || t >= self.horizon() || var.len() != self.dim {
            return Err(Error::Dimension(format!("evolution variance at t={t} with {} entries", var.len())));
        }
        self.evolution[t] = var;
        Ok(())
    }

    pub fn push_row(&mut self, t: usize, row: ObsRow) -> Result<()> {
        if t >= self.horizon() {
            return Err(Error::Dimension(format!("row at t={t} beyond horizon {}", self.horizon())));
        }
        match &row.design {
            Design::Dense(f) if f.len() != self.dim => {
                return Err(Error::Dimension(format!("design row has {} entries, state has {}", f.len(), self.dim)))
            }
            Design::Unit(i) if *i >= self.dim => {
                return Err(Error::Dimension(format!("unit row index {i} out of range")))
            }
            _ => {}
        }
        self.rows[t].push(row);
        Ok(())
    }

    pub fn rows(&self, t: usize) -> &[ObsRow] {
        &self.rows[t]
    }

    pub fn evolution(&self, t: usize) -> &DVector<f64> {
        &self.evolution[t]
    }

    pub fn init_mean(&self) -> &DVector<f64> {
        &self.init_mean
    }

    pub fn init_var(&self) -> &DVector<f64> {
        &self.init_var
    }

    fn validate(&self) -> Result<()> {
        let finite_pos = |v: &DVector<f64>| v.iter().all(|x| x.is_finite() && *x >= 0.0);
        if !self.init_mean.iter().all(|x| x.is_finite()) || !finite_pos(&self.init_var) {
            return Err(Error::Numerical("non-finite initial moments".into()));
        }
        for t in 1..self.horizon() {
            if !finite_pos(&self.evolution[t]) {
                return Err(Error::Numerical(format!("invalid evolution variance at t={t}")));
            }
        }
        for (t, rows) in self.rows.iter().enumerate() {
            for r in rows {
                if !(r.value.is_finite() && r.variance.is_finite() && r.variance >= 0.0) {
                    return Err(Error::Numerical(format!("invalid observation row at t={t}")));
                }
                if let Design::Dense(f) = &r.design {
                    if !f.iter().all(|x| x.is_finite()) {
                        return Err(Error::Numerical(format!("non-finite design at t={t}")));
                    }
                }
            }
        }
        Ok(())
    }
}

/// Innovation of one scalar row.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Innovation {
    pub error: f64,
    /// Predictive variance relative to `V`.
    pub variance: f64,
    pub counts_toward_dof: bool,
}

/// Filtered moments at unit scale and the sufficient statistics for `V`.
#[derive(Debug, Clone)]
pub struct FilterOutput {
    /// Prior means `a_t` and covariances `R_t` of `theta_t` given rows before `t`.
    pub prior_means: Vec<DVector<f64>>,
    pub prior_covs: Vec<DMatrix<f64>>,
    /// Posterior means `m_t` and covariances `C_t` given rows up to `t`.
    pub means: Vec<DVector<f64>>,
    pub covs: Vec<DMatrix<f64>>,
    /// Row innovations per time point, in processing order.
    pub innovations: Vec<Vec<Innovation>>,
    /// Number of rows flagged as carrying a degree of freedom.
    pub dof: usize,
    /// Sum of standardized squared innovations over all rows.
    pub sum_squares: f64,
    /// Sum of log predictive variances over all rows.
    pub sum_log_var: f64,
    /// Total number of rows.
    pub n_rows: usize,
}

impl FilterOutput {
    /// Posterior `(dof, scale)` of `V`: `1/V ~ Ga(dof / 2, dof * scale / 2)`.
    pub fn scale_posterior(&self, n0: f64, s0: f64) -> (f64, f64) {
        let n = n0 + self.dof as f64;
        (n, (n0 * s0 + self.sum_squares) / n)
    }

    /// Log density of all rows given a fixed scale `V`, from the one-step predictive decomposition.
    pub fn log_likelihood(&self, v: f64) -> f64 {
        let n = self.n_rows as f64;
        -0.5 * (n * (2.0 * std::f64::consts::PI * v).ln() + self.sum_log_var + self.sum_squares / v)
    }
}

fn symmetrize(m: &mut DMatrix<f64>) {
    let n = m.nrows();
    for i in 0..n {
        for j in 0..i {
            let avg = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = avg;
            m[(j, i)] = avg;
        }
    }
}

/// Kalman filter at unit scale, processing stacked rows sequentially.
pub fn forward_filter(spec: &CdlmSpec) -> Result<FilterOutput> {
    spec.validate()?;
    let horizon = spec.horizon();
    let p = spec.dim;
    let mut out = FilterOutput {
        prior_means: Vec::with_capacity(horizon),
        prior_covs: Vec::with_capacity(horizon),
        means: Vec::with_capacity(horizon),
        covs: Vec::with_capacity(horizon),
        innovations: Vec::with_capacity(horizon),
        dof: 0,
        sum_squares: 0.0,
        sum_log_var: 0.0,
        n_rows: 0,
    };
    let mut m = spec.init_mean.clone();
    let mut c = DMatrix::from_diagonal(&spec.init_var.map(|v| v.max(VARIANCE_FLOOR)));
    let mut cf = DVector::zeros(p);
    for t in 0..horizon {
        if t > 0 {
            for i in 0..p {
                c[(i, i)] += spec.evolution[t][i].max(VARIANCE_FLOOR);
            }
        }
        out.prior_means.push(m.clone());
        out.prior_covs.push(c.clone());
        let mut innov = Vec::with_capacity(spec.rows[t].len());
        for row in &spec.rows[t] {
            let fm = match &row.design {
                Design::Dense(f) => {
                    c.mul_to(f, &mut cf);
                    f.dot(&m)
                }
                Design::Unit(i) => {
                    cf.copy_from(&c.column(*i));
                    m[*i]
                }
            };
            let fcf = match &row.design {
                Design::Dense(f) => f.dot(&cf),
                Design::Unit(i) => cf[*i],
            };
            let q = fcf + row.variance.max(VARIANCE_FLOOR);
            let e = row.value - fm;
            if !(q > 0.0 && q.is_finite() && e.is_finite()) {
                return Err(Error::Numerical(format!("degenerate predictive variance {q} at t={t}")));
            }
            m.axpy(e / q, &cf, 1.0);
            c.ger(-1.0 / q, &cf, &cf, 1.0);
            symmetrize(&mut c);
            for i in 0..p {
                if c[(i, i)] < 0.0 {
                    c[(i, i)] = 0.0;
                }
            }
            out.sum_squares += e * e / q;
            out.sum_log_var += q.ln();
            out.n_rows += 1;
            if row.counts_toward_dof {
                out.dof += 1;
            }
            innov.push(Innovation { error: e, variance: q, counts_toward_dof: row.counts_toward_dof });
        }
        if !m.iter().all(|x| x.is_finite()) {
            return Err(Error::Numerical(format!("non-finite filtered mean at t={t}")));
        }
        out.means.push(m.clone());
        out.covs.push(c.clone());
        out.innovations.push(innov);
    }
    Ok(out)
}

/// Draws `V` from `1/V ~ Ga(n/2, n S/2)` with `(n, S)` from [`FilterOutput::scale_posterior`].
pub fn sample_scale<R: Rng + ?Sized>(filter: &FilterOutput, n0: f64, s0: f64, rng: &mut R) -> Result<f64> {
    let (n, s) = filter.scale_posterior(n0, s0);
    if !(n > 0.0 && s > 0.0 && s.is_finite()) {
        return Err(Error::Domain(format!("scale posterior is improper: dof={n}, scale={s}")));
    }
    let precision: f64 = Gamma::new(0.5 * n, 2.0 / (n * s))
        .map_err(|e| Error::Numerical(e.to_string()))?
        .sample(rng);
    if !(precision > 0.0 && precision.is_finite()) {
        return Err(Error::Numerical(format!("scale draw produced precision {precision}")));
    }
    Ok(1.0 / precision)
}

/// Coefficients `B_t = C_t R_{t+1}^{-1}` of the backward recursion.
fn backward_gain(c: &DMatrix<f64>, r_next: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let chol = r_next
        .clone()
        .cholesky()
        .ok_or_else(|| Error::Numerical("one-step prior covariance is not positive definite".into()))?;
    // R is symmetric, so B' = R^{-1} C.
    Ok(chol.solve(c).transpose())
}

/// Square-root factor `L` with `L L' = S`, falling back to an eigen
/// decomposition with clipped eigenvalues when `S` is only semidefinite.
fn sqrt_factor(s: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if let Some(ch) = s.clone().cholesky() {
        return Ok(ch.l());
    }
    let eig = s.clone().symmetric_eigen();
    let max = eig.eigenvalues.iter().cloned().fold(0.0, f64::max);
    if !max.is_finite() {
        return Err(Error::Numerical("non-finite covariance in backward sampling".into()));
    }
    let roots = eig.eigenvalues.map(|l| l.max(0.0).sqrt());
    Ok(eig.eigenvectors * DMatrix::from_diagonal(&roots))
}

fn draw_normal<R: Rng + ?Sized>(mean: &DVector<f64>, cov: &DMatrix<f64>, scale: f64, rng: &mut R) -> Result<DVector<f64>> {
    let l = sqrt_factor(cov)?;
    let z = DVector::from_fn(mean.len(), |_, _| rng.sample::<f64, _>(StandardNormal));
    Ok(mean + (l * z) * scale.sqrt())
}

/// Exact joint draw of `theta_{1:T}` given all rows and the scale `V`.
/// Column `t` of the result is `theta_t`.
pub fn backward_sample<R: Rng + ?Sized>(filter: &FilterOutput, v: f64, rng: &mut R) -> Result<DMatrix<f64>> {
    let horizon = filter.means.len();
    if horizon == 0 {
        return Err(Error::Dimension("cannot sample an empty trajectory".into()));
    }
    if !(v > 0.0 && v.is_finite()) {
        return Err(Error::Domain(format!("scale must be positive, got {v}")));
    }
    let p = filter.means[0].len();
    let mut out = DMatrix::zeros(p, horizon);
    let mut next = draw_normal(&filter.means[horizon - 1], &filter.covs[horizon - 1], v, rng)?;
    out.set_column(horizon - 1, &next);
    for t in (0..horizon - 1).rev() {
        let c = &filter.covs[t];
        let b = backward_gain(c, &filter.prior_covs[t + 1])?;
        let mean = &filter.means[t] + &b * (&next - &filter.prior_means[t + 1]);
        let mut h = c - &b * c;
        symmetrize(&mut h);
        next = draw_normal(&mean, &h, v, rng)?;
        out.set_column(t, &next);
    }
    Ok(out)
}

/// Smoothed moments at unit scale.
#[derive(Debug, Clone)]
pub struct Smoothed {
    pub means: Vec<DVector<f64>>,
    pub covs: Vec<DMatrix<f64>>,
    /// `cross[t] = Cov(theta_t, theta_{t+1})`, for `t < T - 1`.
    pub cross: Vec<DMatrix<f64>>,
}

/// Rauch-Tung-Striebel smoother; its moments are those of the law sampled by
/// [`backward_sample`] (scaled by `V`).
pub fn smooth(filter: &FilterOutput) -> Result<Smoothed> {
    let horizon = filter.means.len();
    let mut means = filter.means.clone();
    let mut covs = filter.covs.clone();
    let mut cross = vec![DMatrix::zeros(0, 0); horizon.saturating_sub(1)];
    for t in (0..horizon.saturating_sub(1)).rev() {
        let b = backward_gain(&filter.covs[t], &filter.prior_covs[t + 1])?;
        means[t] = &filter.means[t] + &b * (&means[t + 1] - &filter.prior_means[t + 1]);
        let mut s = &filter.covs[t] + &b * (&covs[t + 1] - &filter.prior_covs[t + 1]) * b.transpose();
        symmetrize(&mut s);
        cross[t] = &b * &covs[t + 1];
        covs[t] = s;
    }
    Ok(Smoothed { means, covs, cross })
}
