use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gibbs::Dataset;
use crate::samplers::RngStream;

const PREDICTOR_STREAM: u64 = 1;
const NOISE_STREAM: u64 = 2;
const WALK_STREAM: u64 = 3;

/// Shapes of the four active coefficient paths; every other coefficient is
/// identically zero. Times are 1-based.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StandardPaths {
    /// `theta_1 = level + amplitude sin(2 pi t / T)`.
    pub intercept_level: f64,
    pub intercept_amplitude: f64,
    /// `theta_2`: Gaussian random walk started at `walk_start`.
    pub walk_start: f64,
    pub walk_sd: f64,
    /// `theta_3`: arcs of height `arc3_height`, zero on `[zero3_start, zero3_end)`.
    pub arc3_height: f64,
    pub zero3_start: usize,
    pub zero3_end: usize,
    /// `theta_4`: an arc of height `arc4_height`, zero for `t > zero4_after`.
    pub arc4_height: f64,
    pub zero4_after: usize,
}

impl Default for StandardPaths {
    fn default() -> Self {
        Self {
            intercept_level: 2.0,
            intercept_amplitude: 0.5,
            walk_start: 1.0,
            walk_sd: 0.02,
            arc3_height: 1.2,
            zero3_start: 50,
            zero3_end: 150,
            arc4_height: -0.8,
            zero4_after: 100,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Paths {
    Standard(StandardPaths),
    /// All coefficients identically zero.
    Zero,
}

impl Default for Paths {
    fn default() -> Self {
        Paths::Standard(StandardPaths::default())
    }
}

/// Data-generating process of the simulation study.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DgpSpec {
    pub horizon: usize,
    pub dim: usize,
    /// Observation variance `V`.
    pub variance: f64,
    pub paths: Paths,
    pub seed: u64,
}

impl Default for DgpSpec {
    fn default() -> Self {
        Self { horizon: 200, dim: 12, variance: 1.5, paths: Paths::default(), seed: 0 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulatedData {
    pub data: Dataset,
    /// True coefficients, `p x T`.
    pub truth: DMatrix<f64>,
}

fn arc(height: f64, frac: f64) -> f64 {
    height * (0.5 * std::f64::consts::PI * frac.clamp(0.0, 1.0)).sin()
}

/// True coefficient paths, `p x T`.
pub fn true_paths(spec: &DgpSpec) -> DMatrix<f64> {
    let (p, horizon) = (spec.dim, spec.horizon);
    let mut theta = DMatrix::zeros(p, horizon);
    let Paths::Standard(s) = spec.paths else {
        return theta;
    };
    let mut walk_rng = RngStream::new(spec.seed, WALK_STREAM);
    let mut walk = s.walk_start;
    for t0 in 0..horizon {
        let t = (t0 + 1) as f64;
        let tt = t0 + 1;
        if p > 0 {
            theta[(0, t0)] = s.intercept_level + s.intercept_amplitude * (2.0 * std::f64::consts::PI * t / horizon as f64).sin();
        }
        if p > 1 {
            if t0 > 0 {
                walk += s.walk_sd * walk_rng.sample::<f64, _>(StandardNormal);
            }
            theta[(1, t0)] = walk;
        }
        if p > 2 {
            let (a, b) = (s.zero3_start as f64, s.zero3_end as f64);
            theta[(2, t0)] = if tt < s.zero3_start {
                arc(s.arc3_height, (a - t) / a)
            } else if tt < s.zero3_end {
                0.0
            } else {
                arc(s.arc3_height, (t - b) / a)
            };
        }
        if p > 3 {
            let z = s.zero4_after as f64;
            theta[(3, t0)] = if tt <= s.zero4_after { arc(s.arc4_height, (z - t) / z) } else { 0.0 };
        }
    }
    theta
}

/// Draws predictors (intercept plus iid `U(0, 2)` columns) and responses
/// `y_t = F_t' theta_t + N(0, V)`.
pub fn simulate_dataset(spec: &DgpSpec) -> Result<SimulatedData> {
    if spec.horizon == 0 || spec.dim == 0 {
        return Err(Error::Domain("simulation needs T >= 1 and p >= 1".into()));
    }
    if !(spec.variance >= 0.0 && spec.variance.is_finite()) {
        return Err(Error::Domain(format!("variance must be nonnegative, got {}", spec.variance)));
    }
    if let Paths::Standard(s) = spec.paths {
        if s.zero3_start == 0 || s.zero3_end < s.zero3_start || s.zero4_after == 0 {
            return Err(Error::Domain("zero windows must start after t = 0 and be ordered".into()));
        }
    }
    let truth = true_paths(spec);
    let mut prng = RngStream::new(spec.seed, PREDICTOR_STREAM);
    let predictors = DMatrix::from_fn(spec.horizon, spec.dim, |_, j| if j == 0 { 1.0 } else { 2.0 * prng.random::<f64>() });
    let mut nrng = RngStream::new(spec.seed, NOISE_STREAM);
    let sd = spec.variance.sqrt();
    let y = (0..spec.horizon)
        .map(|t| {
            let mean = predictors.row(t).transpose().dot(&truth.column(t));
            mean + sd * nrng.sample::<f64, _>(StandardNormal)
        })
        .collect();
    Ok(SimulatedData { data: Dataset::new(y, predictors)?, truth })
}
