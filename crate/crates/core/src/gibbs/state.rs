use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Weights of one coefficient path.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoefWeights {
    /// Fusion weight `beta`.
    pub beta: f64,
    /// `alpha / beta`; zero for DE and HS.
    pub rho: f64,
    /// Initial-state weight of DE and HS (unused otherwise).
    pub alpha0: f64,
    /// Hyper-scale of the half-Cauchy-type prior (DFHS, HS).
    pub delta: f64,
}

impl CoefWeights {
    /// Weight of the shrinkage toward the baseline: `rho beta`, or `alpha0`
    /// for the random-walk variants.
    pub fn alpha(&self) -> f64 {
        if self.rho > 0.0 {
            self.rho * self.beta
        } else {
            self.alpha0
        }
    }

    /// `beta - alpha` for the DFL process.
    pub fn gap(&self) -> f64 {
        self.beta * (1.0 - self.rho)
    }
}

/// Full latent configuration of one sweep. Time is indexed from zero, so the
/// terminal time is `T - 1` and counts live on `1..T-1`.
#[derive(Debug, Clone, PartialEq)]
pub struct GibbsState {
    /// States, `p x T`.
    pub theta: DMatrix<f64>,
    /// Initial-state scales `lambda_{alpha,i,1}`.
    pub lambda_init: Vec<f64>,
    /// Terminal synthetic-row scales `lambda_{alpha,i,T}`; empty for DE and HS.
    pub lambda_terminal: Vec<f64>,
    /// Evolution scales `lambda_{beta,i,t}`, `p x T`; column 0 unused.
    pub lambda_evo: DMatrix<f64>,
    /// Latent counts `n_{i,t}`, `p x T`; zero outside `1..T-1`.
    pub counts: DMatrix<u32>,
    /// Synthetic-row scales `lambda_{n,i,t}`, present exactly where `n_{i,t} > 0`.
    pub lambda_count: Vec<Vec<Option<f64>>>,
    pub weights: Vec<CoefWeights>,
    pub baseline: Vec<f64>,
    pub variance: f64,
}

impl GibbsState {
    pub fn dim(&self) -> usize {
        self.theta.nrows()
    }

    pub fn horizon(&self) -> usize {
        self.theta.ncols()
    }

    /// Scaled state `(theta_it - mu_i) / sqrt(V)`.
    #[inline]
    pub fn scaled(&self, i: usize, t: usize) -> f64 {
        (self.theta[(i, t)] - self.baseline[i]) / self.variance.sqrt()
    }

    /// Checks positivity of scales and the count/scale coupling.
    pub fn check(&self) -> Result<()> {
        let (p, horizon) = (self.dim(), self.horizon());
        let bad = |what: &str| Err(Error::Numerical(format!("invalid state: {what}")));
        if !(self.variance > 0.0 && self.variance.is_finite()) {
            return bad("variance");
        }
        if !self.theta.iter().all(|x| x.is_finite()) {
            return bad("non-finite states");
        }
        if self.lambda_init.iter().chain(&self.lambda_terminal).any(|l| !(*l > 0.0)) {
            return bad("initial or terminal scale");
        }
        for i in 0..p {
            for t in 1..horizon {
                if !(self.lambda_evo[(i, t)] > 0.0) {
                    return bad("evolution scale");
                }
            }
            for t in 0..horizon {
                let n = self.counts[(i, t)];
                match self.lambda_count[i][t] {
                    Some(l) if n > 0 && l > 0.0 => {}
                    None if n == 0 => {}
                    _ => return bad("count scale present iff count positive"),
                }
            }
        }
        Ok(())
    }
}
