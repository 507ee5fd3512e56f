//! Simulation study: data generation, fit evaluation, sequential
//! forecasting and model comparison tables.

mod dgp;
mod forecast;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gibbs::{run_chain, ChainConfig, ModelConfig, Summary};
use crate::samplers::RngStream;

pub use dgp::{simulate_dataset, true_paths, DgpSpec, Paths, SimulatedData, StandardPaths};
pub use forecast::{predictive_draws, sequential_forecast, ForecastRecord};

/// First 1-based time point entering the error metrics.
pub const DEFAULT_EVAL_START: usize = 25;

/// Number of leading coefficients reported individually; the rest are pooled.
pub const ACTIVE_COEFFICIENTS: usize = 4;

/// Forecast accuracy over a set of origins.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ForecastMetrics {
    pub mse: f64,
    /// Mean length of the 95% predictive intervals.
    pub ci_length: f64,
    /// Fraction of realized values inside their 95% intervals.
    pub coverage: f64,
    pub origins: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    /// Per-coefficient MSE of the posterior means.
    pub coef_mse: Vec<f64>,
    /// Mean MSE over coefficients beyond the first four, if any.
    pub noise_mse: Option<f64>,
    /// Per-coefficient fraction of true values inside the 95% intervals.
    pub coef_coverage: Vec<f64>,
    /// Set when every evaluated interval has zero width, which makes the
    /// coverage figures meaningless.
    pub degenerate: bool,
    pub forecast: Option<ForecastMetrics>,
}

/// Compares posterior means and intervals (`p x T`) with the truth over the
/// 1-based times `start..=T`.
pub fn evaluate_summary(
    mean: &DMatrix<f64>,
    lo: &DMatrix<f64>,
    hi: &DMatrix<f64>,
    truth: &DMatrix<f64>,
    start: usize,
) -> Result<EvalReport> {
    let shape = truth.shape();
    if mean.shape() != shape || lo.shape() != shape || hi.shape() != shape {
        return Err(Error::Dimension(format!(
            "summary is {:?} but truth is {:?}",
            mean.shape(),
            shape
        )));
    }
    let (p, horizon) = shape;
    if start == 0 || start > horizon {
        return Err(Error::Domain(format!("evaluation start {start} outside 1..={horizon}")));
    }
    let times = (start - 1)..horizon;
    let n = times.len() as f64;
    let mut coef_mse = Vec::with_capacity(p);
    let mut coef_coverage = Vec::with_capacity(p);
    let mut degenerate = true;
    for i in 0..p {
        let mut se = 0.0;
        let mut inside = 0.0;
        for t in times.clone() {
            let d = mean[(i, t)] - truth[(i, t)];
            se += d * d;
            if lo[(i, t)] <= truth[(i, t)] && truth[(i, t)] <= hi[(i, t)] {
                inside += 1.0;
            }
            if hi[(i, t)] > lo[(i, t)] {
                degenerate = false;
            }
        }
        coef_mse.push(se / n);
        coef_coverage.push(inside / n);
    }
    let noise_mse = (p > ACTIVE_COEFFICIENTS)
        .then(|| coef_mse[ACTIVE_COEFFICIENTS..].iter().sum::<f64>() / (p - ACTIVE_COEFFICIENTS) as f64);
    Ok(EvalReport { coef_mse, noise_mse, coef_coverage, degenerate, forecast: None })
}

/// [`evaluate_summary`] on the summaries of a chain.
pub fn evaluate_fit(summary: &Summary, truth: &DMatrix<f64>, start: usize) -> Result<EvalReport> {
    evaluate_summary(&summary.theta_mean, &summary.theta_lo, &summary.theta_hi, truth, start)
}

/// Forecast metrics over records whose predicted time `origin + 1` is at
/// least `start`.
pub fn evaluate_forecasts(records: &[ForecastRecord], start: usize) -> Result<ForecastMetrics> {
    let used: Vec<&ForecastRecord> = records.iter().filter(|r| r.origin + 1 >= start).collect();
    if used.is_empty() {
        return Err(Error::Domain("no forecast records to evaluate".into()));
    }
    let n = used.len() as f64;
    let mse = used.iter().map(|r| (r.realized - r.mean).powi(2)).sum::<f64>() / n;
    let ci_length = used.iter().map(|r| r.hi95 - r.lo95).sum::<f64>() / n;
    let coverage = used.iter().filter(|r| r.lo95 <= r.realized && r.realized <= r.hi95).count() as f64 / n;
    Ok(ForecastMetrics { mse, ci_length, coverage, origins: used.len() })
}

/// Rows of a model comparison table.
#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonTable {
    pub header: Vec<String>,
    pub rows: Vec<(String, Vec<f64>)>,
}

impl ComparisonTable {
    /// CSV with a leading `model` column, values at 17 significant digits;
    /// missing values are left empty.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("model");
        for h in &self.header {
            out.push(',');
            out.push_str(h);
        }
        out.push('\n');
        for (name, vals) in &self.rows {
            out.push_str(name);
            for v in vals {
                out.push(',');
                if v.is_finite() {
                    out.push_str(&format!("{v:.16e}"));
                }
            }
            out.push('\n');
        }
        out
    }
}

/// Comparison table with columns `mse_theta1..4`, `mse_theta5_p`, `mse_y`,
/// `ci`, `cr`. All reports must describe the same number of coefficients.
pub fn compare_models(reports: &[(String, EvalReport)]) -> Result<ComparisonTable> {
    let p = reports.first().map(|(_, r)| r.coef_mse.len()).unwrap_or(0);
    if reports.iter().any(|(_, r)| r.coef_mse.len() != p) {
        return Err(Error::Dimension("reports cover different numbers of coefficients".into()));
    }
    let mut header: Vec<String> = (1..=p.min(ACTIVE_COEFFICIENTS)).map(|i| format!("mse_theta{i}")).collect();
    if p > ACTIVE_COEFFICIENTS {
        header.push(format!("mse_theta{}_{}", ACTIVE_COEFFICIENTS + 1, p));
    }
    header.extend(["mse_y", "ci", "cr"].map(String::from));
    let rows = reports
        .iter()
        .map(|(name, r)| {
            let mut v: Vec<f64> = r.coef_mse.iter().take(ACTIVE_COEFFICIENTS).copied().collect();
            if let Some(noise) = r.noise_mse {
                v.push(noise);
            }
            match r.forecast {
                Some(f) => v.extend([f.mse, f.ci_length, f.coverage]),
                None => v.extend([f64::NAN; 3]),
            }
            (name.clone(), v)
        })
        .collect();
    Ok(ComparisonTable { header, rows })
}

/// Mean of `P[n_it > 0 | y]` over the 1-based times `[from, to)` of row `i`.
pub fn mean_count_probability(summary: &Summary, i: usize, from: usize, to: usize) -> Result<f64> {
    let probs = summary
        .count_positive
        .as_ref()
        .ok_or_else(|| Error::Domain("variant has no latent counts".into()))?;
    let to = to.min(probs.ncols() + 1);
    if from == 0 || from >= to || i >= probs.nrows() {
        return Err(Error::Domain(format!("empty window [{from}, {to}) for coefficient {i}")));
    }
    Ok((from - 1..to - 1).map(|t| probs[(i, t)]).sum::<f64>() / (to - from) as f64)
}

/// A named model in a study.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StudyModel {
    pub name: String,
    pub model: ModelConfig,
}

/// Simulated-data comparison of several models on one dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StudySpec {
    pub dgp: DgpSpec,
    pub models: Vec<StudyModel>,
    pub chain: ChainConfig,
    /// First 1-based time in the coefficient metrics.
    pub eval_start: usize,
    /// First forecast origin; `None` skips forecasting.
    pub forecast_start: Option<usize>,
}

impl Default for StudySpec {
    fn default() -> Self {
        Self {
            dgp: DgpSpec::default(),
            models: Vec::new(),
            chain: ChainConfig::default(),
            eval_start: DEFAULT_EVAL_START,
            forecast_start: Some(DEFAULT_EVAL_START),
        }
    }
}

pub struct StudyResult {
    pub simulated: SimulatedData,
    pub summaries: Vec<Summary>,
    pub forecasts: Vec<Vec<ForecastRecord>>,
    pub reports: Vec<(String, EvalReport)>,
    pub table: ComparisonTable,
}

/// Simulates the data once (seed from `spec.dgp.seed`), then fits,
/// forecasts and evaluates every model. Model `k` uses streams derived from
/// `seed` and `k` only, so results are reproducible and thread-count free.
pub fn run_study(spec: &StudySpec, seed: u64) -> Result<StudyResult> {
    if spec.models.is_empty() {
        return Err(Error::Domain("study lists no models".into()));
    }
    let simulated = simulate_dataset(&spec.dgp)?;
    let mut summaries = Vec::new();
    let mut forecasts = Vec::new();
    let mut reports = Vec::new();
    for (k, m) in spec.models.iter().enumerate() {
        let mut rng = RngStream::new(seed, k as u64);
        let chain = run_chain(&m.model, &spec.chain, &simulated.data, &mut rng)?;
        let summary = chain.summary()?;
        let mut report = evaluate_fit(&summary, &simulated.truth, spec.eval_start)?;
        let records = match spec.forecast_start {
            Some(s0) => {
                let recs = sequential_forecast(&m.model, &spec.chain, &simulated.data, s0, seed, (k as u64 + 1) << 32)?;
                report.forecast = Some(evaluate_forecasts(&recs, spec.eval_start)?);
                recs
            }
            None => Vec::new(),
        };
        summaries.push(summary);
        forecasts.push(records);
        reports.push((m.name.clone(), report));
    }
    let table = compare_models(&reports)?;
    Ok(StudyResult { simulated, summaries, forecasts, reports, table })
}
