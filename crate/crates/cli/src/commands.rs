use std::path::Path;

use dfl_core::gibbs::{run_chain, ChainOutput, Summary};
use dfl_core::harness::{
    compare_models, evaluate_forecasts, evaluate_summary, run_study, sequential_forecast, simulate_dataset,
};
use dfl_core::nalgebra::DMatrix;
use dfl_core::prior::{conditional_shrinkage_mean, shrinkage_coefficient_density, stationary_density, transition_density};
use dfl_core::{Dataset, ForecastRecord, RngStream, Weights};

use crate::config::*;
use crate::io::{num, read_long, read_predictors, read_responses, write_csv, Table};
use crate::CliError;

fn idx(k: usize) -> String {
    (k + 1).to_string()
}

fn load_data(files: &DataFiles) -> Result<Dataset, CliError> {
    let y = read_responses(&files.y)?;
    let x = read_predictors(&files.predictors)?;
    Ok(Dataset::new(y, x)?)
}

fn write_trajectories(path: &Path, name: &str, m: &DMatrix<f64>) -> Result<(), CliError> {
    let (p, horizon) = m.shape();
    let rows = (0..horizon).flat_map(|t| (0..p).map(move |i| vec![idx(t), idx(i), num(m[(i, t)])]));
    write_csv(path, &["t", "coefficient", name], rows)
}

pub fn simulate(mut cfg: SimulateConfig, seed: Option<u64>, out: &Path) -> Result<(), CliError> {
    if let Some(s) = seed {
        cfg.seed = s;
    }
    let sim = simulate_dataset(&cfg)?;
    let d = &sim.data;
    write_csv(&out.join("y.csv"), &["t", "y"], d.y.iter().enumerate().map(|(t, y)| vec![idx(t), num(*y)]))?;
    let header: Vec<String> = std::iter::once("t".to_string()).chain((1..=d.dim()).map(|j| format!("x{j}"))).collect();
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    let rows = (0..d.horizon()).map(|t| std::iter::once(idx(t)).chain(d.predictors.row(t).iter().map(|v| num(*v))).collect::<Vec<_>>());
    write_csv(&out.join("F.csv"), &header, rows)?;
    write_trajectories(&out.join("truth.csv"), "value", &sim.truth)
}

fn write_summary(path: &Path, s: &Summary) -> Result<(), CliError> {
    let (p, horizon) = s.theta_mean.shape();
    let counts = s.count_positive.as_ref().zip(s.count_mean.as_ref());
    let mut header = vec!["t", "coefficient", "mean", "lo95", "hi95"];
    if counts.is_some() {
        header.extend(["prob_count_positive", "mean_count"]);
    }
    let rows = (0..horizon).flat_map(|t| {
        (0..p).map(move |i| {
            let mut r = vec![idx(t), idx(i), num(s.theta_mean[(i, t)]), num(s.theta_lo[(i, t)]), num(s.theta_hi[(i, t)])];
            if let Some((pos, mean)) = counts {
                r.extend([num(pos[(i, t)]), num(mean[(i, t)])]);
            }
            r
        })
    });
    write_csv(path, &header, rows)
}

fn write_parameters(path: &Path, s: &Summary) -> Result<(), CliError> {
    let mut rows = vec![vec!["variance".to_string(), String::new(), num(s.variance.mean), num(s.variance.lo), num(s.variance.hi)]];
    let mut block = |name: &str, v: &[dfl_core::gibbs::ScalarSummary]| {
        for (i, x) in v.iter().enumerate() {
            rows.push(vec![name.to_string(), idx(i), num(x.mean), num(x.lo), num(x.hi)]);
        }
    };
    block("beta", &s.beta);
    block("alpha", &s.alpha);
    if let Some(rho) = &s.rho {
        block("rho", rho);
    }
    block("baseline", &s.baseline);
    write_csv(path, &["parameter", "coefficient", "mean", "lo95", "hi95"], rows)
}

fn write_draws(out: &Path, chain: &ChainOutput) -> Result<(), CliError> {
    let draws = &chain.draws;
    let theta = draws.iter().enumerate().flat_map(|(k, d)| {
        let (p, horizon) = d.theta.shape();
        (0..horizon).flat_map(move |t| (0..p).map(move |i| vec![idx(k), idx(t), idx(i), num(d.theta[(i, t)])]))
    });
    write_csv(&out.join("draws_theta.csv"), &["draw", "t", "coefficient", "value"], theta)?;
    let weights = draws.iter().enumerate().flat_map(|(k, d)| {
        d.weights.iter().enumerate().map(move |(i, w)| {
            vec![idx(k), idx(i), num(w.beta), num(w.alpha()), num(w.rho), num(w.delta), num(d.baseline[i])]
        })
    });
    write_csv(&out.join("draws_weights.csv"), &["draw", "coefficient", "beta", "alpha", "rho", "delta", "baseline"], weights)?;
    let variance = draws.iter().enumerate().map(|(k, d)| vec![idx(k), num(d.variance)]);
    write_csv(&out.join("draws_variance.csv"), &["draw", "variance"], variance)?;
    if chain.variant.shrinks_to_baseline() {
        // Only positive counts are listed.
        let counts = draws.iter().enumerate().flat_map(|(k, d)| {
            let c = d.counts.as_ref().expect("counts stored for this variant");
            let (p, horizon) = c.shape();
            (0..horizon).flat_map(move |t| {
                (0..p).filter(move |&i| c[(i, t)] > 0).map(move |i| vec![idx(k), idx(t), idx(i), c[(i, t)].to_string()])
            })
        });
        write_csv(&out.join("draws_counts.csv"), &["draw", "t", "coefficient", "count"], counts)?;
    }
    Ok(())
}

pub fn fit(cfg: FitConfig, seed: u64, out: &Path) -> Result<(), CliError> {
    let data = load_data(&cfg.data)?;
    let chain = run_chain(&cfg.model, &cfg.chain, &data, &mut RngStream::new(seed, 0))?;
    let summary = chain.summary()?;
    write_summary(&out.join("summary.csv"), &summary)?;
    write_parameters(&out.join("parameters.csv"), &summary)?;
    if cfg.draws {
        write_draws(out, &chain)?;
    }
    Ok(())
}

const FORECAST_HEADER: [&str; 8] = ["s", "t", "mean", "lo95", "hi95", "lo90", "hi90", "realized"];

fn write_forecasts(path: &Path, records: &[ForecastRecord]) -> Result<(), CliError> {
    let rows = records.iter().map(|r| {
        vec![r.origin.to_string(), (r.origin + 1).to_string(), num(r.mean), num(r.lo95), num(r.hi95), num(r.lo90), num(r.hi90), num(r.realized)]
    });
    write_csv(path, &FORECAST_HEADER, rows)
}

fn read_forecasts(path: &Path) -> Result<Vec<ForecastRecord>, CliError> {
    let table = Table::read(path)?;
    let c: Vec<usize> = FORECAST_HEADER.iter().map(|h| table.column(h)).collect::<Result<_, _>>()?;
    table
        .rows
        .iter()
        .map(|(line, r)| {
            let s = r[c[0]];
            if !(s.fract() == 0.0 && s >= 1.0) {
                return Err(CliError::Config(format!("{}:{line}: origin {s} is not a positive integer", table.path)));
            }
            if c[2..].iter().any(|&k| !r[k].is_finite()) {
                return Err(CliError::Config(format!("{}:{line}: empty or non-finite value", table.path)));
            }
            Ok(ForecastRecord {
                origin: s as usize,
                mean: r[c[2]],
                lo95: r[c[3]],
                hi95: r[c[4]],
                lo90: r[c[5]],
                hi90: r[c[6]],
                realized: r[c[7]],
            })
        })
        .collect()
}

pub fn forecast(cfg: ForecastConfig, seed: u64, out: &Path) -> Result<(), CliError> {
    let data = load_data(&cfg.data)?;
    let records = sequential_forecast(&cfg.model, &cfg.chain, &data, cfg.start, seed, 0)?;
    write_forecasts(&out.join("forecasts.csv"), &records)
}

pub fn evaluate(cfg: EvaluateConfig, out: &Path) -> Result<(), CliError> {
    let mut summary = read_long(&cfg.summary, &["mean", "lo95", "hi95"])?.into_iter();
    let (mean, lo, hi) = (summary.next().unwrap(), summary.next().unwrap(), summary.next().unwrap());
    let truth = read_long(&cfg.truth, &["value"])?.remove(0);
    let mut report = evaluate_summary(&mean, &lo, &hi, &truth, cfg.start)?;
    if report.degenerate {
        eprintln!("warning: every interval has zero width; coverage is not meaningful");
    }
    if let Some(path) = &cfg.forecasts {
        report.forecast = Some(evaluate_forecasts(&read_forecasts(path)?, cfg.start)?);
    }
    let rows = report.coef_mse.iter().zip(&report.coef_coverage).enumerate().map(|(i, (m, c))| vec![idx(i), num(*m), num(*c)]);
    write_csv(&out.join("coefficients.csv"), &["coefficient", "mse", "coverage"], rows)?;
    let table = compare_models(&[(cfg.name, report)])?;
    std::fs::write(out.join("evaluation.csv"), table.to_csv()).map_err(|e| CliError::Io(format!("evaluation.csv: {e}")))
}

pub fn compare(cfg: CompareConfig, seed: u64, out: &Path) -> Result<(), CliError> {
    let names: std::collections::HashSet<&str> = cfg.models.iter().map(|m| m.name.as_str()).collect();
    if names.len() != cfg.models.len() {
        return Err(CliError::Config("model names must be unique".into()));
    }
    if let Some(bad) = cfg.models.iter().find(|m| m.name.is_empty() || !m.name.chars().all(|c| c.is_ascii_alphanumeric() || "-_.".contains(c))) {
        return Err(CliError::Config(format!("model name '{}' must be non-empty and use only [A-Za-z0-9._-]", bad.name)));
    }
    let res = run_study(&cfg, seed)?;
    std::fs::write(out.join("table.csv"), res.table.to_csv()).map_err(|e| CliError::Io(format!("table.csv: {e}")))?;
    write_trajectories(&out.join("truth.csv"), "value", &res.simulated.truth)?;
    for (k, m) in cfg.models.iter().enumerate() {
        write_summary(&out.join(format!("summary_{}.csv", m.name)), &res.summaries[k])?;
        if cfg.forecast_start.is_some() {
            write_forecasts(&out.join(format!("forecasts_{}.csv", m.name)), &res.forecasts[k])?;
        }
    }
    Ok(())
}

pub fn density(cfg: DensityConfig, out: &Path) -> Result<(), CliError> {
    let w = Weights::from_alpha_beta(cfg.alpha, cfg.beta)?;
    if cfg.x_points < 2 || !(cfg.x_min < cfg.x_max) || !cfg.x_min.is_finite() || !cfg.x_max.is_finite() {
        return Err(CliError::Config("need x_min < x_max, both finite, and x_points >= 2".into()));
    }
    if cfg.weight_points == 0 || cfg.x_prev.iter().any(|x| !x.is_finite()) {
        return Err(CliError::Config("need weight_points >= 1 and finite x_prev".into()));
    }
    let step = (cfg.x_max - cfg.x_min) / (cfg.x_points - 1) as f64;
    let xs: Vec<f64> = (0..cfg.x_points).map(|k| cfg.x_min + k as f64 * step).collect();

    let rows = xs.iter().map(|&x| Ok(vec![num(x), num(stationary_density(x, &w)?)])).collect::<Result<Vec<_>, CliError>>()?;
    write_csv(&out.join("stationary.csv"), &["x", "density"], rows)?;
    let mut rows = Vec::new();
    for &xp in &cfg.x_prev {
        for &x in &xs {
            rows.push(vec![num(xp), num(x), num(transition_density(x, xp, &w)?)]);
        }
    }
    write_csv(&out.join("transition.csv"), &["x_prev", "x", "density"], rows)?;
    // The shrinkage weight is undefined at x' = 0; those cells stay empty.
    let rows = cfg.x_prev.iter().map(|&xp| vec![num(xp), conditional_shrinkage_mean(xp, &w).map(num).unwrap_or_default()]);
    write_csv(&out.join("shrinkage_mean.csv"), &["x_prev", "mean_weight"], rows)?;
    let mut rows = Vec::new();
    for &xp in cfg.x_prev.iter().filter(|x| **x != 0.0) {
        for k in 0..cfg.weight_points {
            let c = (k as f64 + 0.5) / cfg.weight_points as f64;
            rows.push(vec![num(xp), num(c), num(shrinkage_coefficient_density(c, xp, &w)?)]);
        }
    }
    write_csv(&out.join("weight_density.csv"), &["x_prev", "w", "density"], rows)
}
