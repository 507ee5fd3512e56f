use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn dfl(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dfl")).current_dir(dir).args(args).output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn write(dir: &Path, name: &str, text: &str) {
    std::fs::write(dir.join(name), text).unwrap();
}

fn read(dir: &Path, name: &str) -> String {
    std::fs::read_to_string(dir.join(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

/// Parsed CSV: header and rows of raw cells.
fn table(dir: &Path, name: &str) -> (Vec<String>, Vec<Vec<String>>) {
    let text = read(dir, name);
    let mut lines = text.lines();
    let header = lines.next().unwrap().split(',').map(String::from).collect();
    (header, lines.map(|l| l.split(',').map(String::from).collect()).collect())
}

fn col(header: &[String], rows: &[Vec<String>], name: &str) -> Vec<f64> {
    let k = header.iter().position(|h| h == name).unwrap_or_else(|| panic!("column {name}"));
    rows.iter().map(|r| r[k].parse().unwrap()).collect()
}

/// Simulates a small dataset (T=30, p=3) into `dir`.
fn small_data(dir: &Path) {
    write(dir, "sim.json", r#"{"horizon": 30, "dim": 3, "seed": 4}"#);
    let o = dfl(dir, &["simulate", "--config", "sim.json"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
}

#[test]
fn unknown_keys_are_config_errors() {
    let d = TempDir::new().unwrap();
    let cases = [
        ("simulate", r#"{"horizon": 10, "horizn": 3}"#),
        ("fit", r#"{"model": {"variant": "dfl", "shrink": 1}}"#),
        ("forecast", r#"{"chain": {"iterations": 5, "burnin": 1}}"#),
        ("evaluate", r#"{"nme": "x"}"#),
        ("compare", r#"{"dgp": {"horizon": 10}, "extra": true}"#),
        ("density", r#"{"alpha": 0.5, "gamma": 1}"#),
    ];
    for (cmd, cfg) in cases {
        write(d.path(), "c.json", cfg);
        let o = dfl(d.path(), &[cmd, "--config", "c.json"]);
        assert_eq!(code(&o), 2, "{cmd}: {}", stderr(&o));
        assert!(stderr(&o).contains("unknown field"), "{cmd}: {}", stderr(&o));
    }
}

#[test]
fn invalid_values_and_files_are_config_errors() {
    let d = TempDir::new().unwrap();
    for (cmd, cfg) in [
        ("simulate", r#"{"horizon": 0}"#),
        ("simulate", r#"{"variance": -1}"#),
        ("density", r#"{"alpha": 2, "beta": 1}"#),
        ("density", r#"{"x_points": 1}"#),
        ("fit", r#"{"model": {"variant": "dfl", "hyper": {"beta_rate": 0}}}"#),
        ("simulate", "{not json"),
    ] {
        write(d.path(), "c.json", cfg);
        let o = dfl(d.path(), &[cmd, "--config", "c.json"]);
        assert_eq!(code(&o), 2, "{cmd} {cfg}: {}", stderr(&o));
    }
    let o = dfl(d.path(), &["density", "--config", "missing.json"]);
    assert_eq!(code(&o), 2);
    let o = dfl(d.path(), &["density", "--threads", "0"]);
    assert_eq!(code(&o), 2);
    let o = dfl(d.path(), &["density", "--bogus"]);
    assert_eq!(code(&o), 2);
}

#[test]
fn simulate_defaults_and_reproducibility() {
    let d = TempDir::new().unwrap();
    let o = dfl(d.path(), &["simulate", "--out", "a"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let (h, rows) = table(&d.path().join("a"), "y.csv");
    assert_eq!(h, ["t", "y"]);
    assert_eq!(rows.len(), 200);
    assert_eq!(col(&h, &rows, "t"), (1..=200).map(f64::from).collect::<Vec<_>>());
    let (h, rows) = table(&d.path().join("a"), "F.csv");
    assert_eq!(h.len(), 13);
    // First predictor is the intercept.
    assert!(col(&h, &rows, "x1").iter().all(|v| *v == 1.0));
    let (h, rows) = table(&d.path().join("a"), "truth.csv");
    assert_eq!(h, ["t", "coefficient", "value"]);
    assert_eq!(rows.len(), 200 * 12);

    for dir in ["b", "c"] {
        let o = dfl(d.path(), &["simulate", "--seed", "9", "--out", dir]);
        assert_eq!(code(&o), 0);
    }
    for f in ["y.csv", "F.csv", "truth.csv"] {
        assert_eq!(read(&d.path().join("b"), f), read(&d.path().join("c"), f), "{f}");
    }
    assert_ne!(read(&d.path().join("a"), "y.csv"), read(&d.path().join("b"), "y.csv"));

    write(d.path(), "s.json", r#"{"dim": 3, "horizon": 40}"#);
    let o = dfl(d.path(), &["simulate", "--config", "s.json", "--out", "p3"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let (h, rows) = table(&d.path().join("p3"), "F.csv");
    assert_eq!(h, ["t", "x1", "x2", "x3"]);
    assert_eq!(rows.len(), 40);
}

#[test]
fn fit_writes_summaries_per_variant() {
    let d = TempDir::new().unwrap();
    small_data(d.path());
    for (variant, has_counts) in [("dfl", true), ("dfhs", true), ("de", false), ("hs", false)] {
        let cfg = format!(r#"{{"model": {{"variant": "{variant}"}}, "chain": {{"iterations": 60, "burn_in": 20}}, "draws": true}}"#);
        write(d.path(), "f.json", &cfg);
        let o = dfl(d.path(), &["fit", "--config", "f.json", "--seed", "3", "--out", variant]);
        assert_eq!(code(&o), 0, "{variant}: {}", stderr(&o));
        let out = d.path().join(variant);
        let (h, rows) = table(&out, "summary.csv");
        assert_eq!(rows.len(), 30 * 3);
        assert_eq!(h.contains(&"prob_count_positive".to_string()), has_counts, "{variant}");
        let (mean, lo, hi) = (col(&h, &rows, "mean"), col(&h, &rows, "lo95"), col(&h, &rows, "hi95"));
        assert!((0..rows.len()).all(|k| lo[k] <= mean[k] && mean[k] <= hi[k]));
        if has_counts {
            assert!(col(&h, &rows, "prob_count_positive").iter().all(|p| (0.0..=1.0).contains(p)));
        }
        let (h, rows) = table(&out, "parameters.csv");
        assert_eq!(h, ["parameter", "coefficient", "mean", "lo95", "hi95"]);
        assert_eq!(rows.iter().filter(|r| r[0] == "beta").count(), 3);
        assert_eq!(rows.iter().filter(|r| r[0] == "rho").count(), if has_counts { 3 } else { 0 });
        let (_, rows) = table(&out, "draws_theta.csv");
        assert_eq!(rows.len(), 60 * 30 * 3);
        assert_eq!(table(&out, "draws_variance.csv").1.len(), 60);
        assert_eq!(out.join("draws_counts.csv").exists(), has_counts);
    }
    // Same seed, same output.
    let o = dfl(d.path(), &["fit", "--config", "f.json", "--seed", "3", "--out", "again"]);
    assert_eq!(code(&o), 0);
    assert_eq!(read(&d.path().join("hs"), "summary.csv"), read(&d.path().join("again"), "summary.csv"));
}

#[test]
fn fit_rejects_bad_inputs() {
    let d = TempDir::new().unwrap();
    small_data(d.path());
    write(d.path(), "e.json", r#"{"chain": {"iterations": 0, "burn_in": 5}}"#);
    let o = dfl(d.path(), &["fit", "--config", "e.json"]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("empty chain"), "{}", stderr(&o));

    let y = read(d.path(), "y.csv");
    let mut lines: Vec<String> = y.lines().map(String::from).collect();
    lines[4] = "4,abc".into();
    write(d.path(), "bad.csv", &(lines.join("\n") + "\n"));
    write(d.path(), "b.json", r#"{"data": {"y": "bad.csv"}, "chain": {"iterations": 5, "burn_in": 0}}"#);
    let o = dfl(d.path(), &["fit", "--config", "b.json"]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("bad.csv:5: column 'y'"), "{}", stderr(&o));

    // Response and predictor lengths disagree.
    write(d.path(), "short.csv", "t,y\n1,0.5\n2,0.1\n");
    write(d.path(), "s.json", r#"{"data": {"y": "short.csv"}, "chain": {"iterations": 5, "burn_in": 0}}"#);
    assert_eq!(code(&dfl(d.path(), &["fit", "--config", "s.json"])), 2);

    write(d.path(), "dup.csv", "t,y\n1,0.5\n1,0.1\n");
    write(d.path(), "u.json", r#"{"data": {"y": "dup.csv"}}"#);
    let o = dfl(d.path(), &["fit", "--config", "u.json"]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("duplicate"), "{}", stderr(&o));
}

#[test]
fn forecast_and_evaluate_round_trip() {
    let d = TempDir::new().unwrap();
    small_data(d.path());
    write(d.path(), "f.json", r#"{"model": {"variant": "de"}, "chain": {"iterations": 40, "burn_in": 10}, "start": 24}"#);
    let o = dfl(d.path(), &["forecast", "--config", "f.json", "--seed", "1", "--threads", "2"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let (h, rows) = table(d.path(), "forecasts.csv");
    assert_eq!(rows.len(), 30 - 24);
    assert_eq!(col(&h, &rows, "s"), (24..30).map(f64::from).collect::<Vec<_>>());
    let (lo95, lo90, hi90, hi95) = (col(&h, &rows, "lo95"), col(&h, &rows, "lo90"), col(&h, &rows, "hi90"), col(&h, &rows, "hi95"));
    assert!((0..rows.len()).all(|k| lo95[k] <= lo90[k] && lo90[k] < hi90[k] && hi90[k] <= hi95[k]));
    let y = col(&table(d.path(), "y.csv").0, &table(d.path(), "y.csv").1, "y");
    assert_eq!(col(&h, &rows, "realized"), y[24..].to_vec());

    write(d.path(), "late.json", r#"{"start": 30}"#);
    assert_eq!(code(&dfl(d.path(), &["forecast", "--config", "late.json"])), 2);

    write(d.path(), "fit.json", r#"{"model": {"variant": "de"}, "chain": {"iterations": 40, "burn_in": 10}}"#);
    assert_eq!(code(&dfl(d.path(), &["fit", "--config", "fit.json"])), 0);
    write(d.path(), "e.json", r#"{"name": "de", "forecasts": "forecasts.csv", "start": 5}"#);
    let o = dfl(d.path(), &["evaluate", "--config", "e.json"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let text = read(d.path(), "evaluation.csv");
    assert!(text.lines().nth(1).unwrap().starts_with("de,"), "{text}");
    let (h, rows) = table(d.path(), "coefficients.csv");
    assert_eq!(rows.len(), 3);
    assert!(col(&h, &rows, "coverage").iter().all(|c| (0.0..=1.0).contains(c)));

    // Truth against itself: zero error, degenerate intervals warned about.
    let truth = read(d.path(), "truth.csv").replace("t,coefficient,value", "t,coefficient,mean");
    let mut lines = truth.lines();
    let mut out = vec![format!("{},lo95,hi95", lines.next().unwrap())];
    out.extend(lines.map(|l| {
        let v = l.rsplit(',').next().unwrap();
        format!("{l},{v},{v}")
    }));
    write(d.path(), "exact.csv", &(out.join("\n") + "\n"));
    write(d.path(), "x.json", r#"{"summary": "exact.csv", "start": 1}"#);
    let o = dfl(d.path(), &["evaluate", "--config", "x.json", "--out", "x"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(stderr(&o).contains("warning"));
    let (h, rows) = table(&d.path().join("x"), "coefficients.csv");
    assert!(col(&h, &rows, "mse").iter().all(|m| *m == 0.0));
}

#[test]
fn compare_writes_one_file_set_per_model() {
    let d = TempDir::new().unwrap();
    let cfg = r#"{
        "dgp": {"horizon": 30, "dim": 2},
        "models": [{"name": "dfl", "model": {"variant": "dfl"}}, {"name": "de", "model": {"variant": "de"}}],
        "chain": {"iterations": 30, "burn_in": 5},
        "eval_start": 5,
        "forecast_start": 27
    }"#;
    write(d.path(), "c.json", cfg);
    let o = dfl(d.path(), &["compare", "--config", "c.json", "--seed", "2", "--out", "r"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let r = d.path().join("r");
    let table_text = read(&r, "table.csv");
    assert_eq!(table_text.lines().count(), 3, "{table_text}");
    for name in ["dfl", "de"] {
        assert_eq!(table(&r, &format!("summary_{name}.csv")).1.len(), 60);
        assert_eq!(table(&r, &format!("forecasts_{name}.csv")).1.len(), 3);
    }
    assert_eq!(table(&r, "truth.csv").1.len(), 60);

    write(d.path(), "dup.json", r#"{"models": [{"name": "a", "model": {}}, {"name": "a", "model": {}}]}"#);
    assert_eq!(code(&dfl(d.path(), &["compare", "--config", "dup.json"])), 2);
}

#[test]
fn density_tables_are_consistent() {
    let d = TempDir::new().unwrap();
    write(d.path(), "d.json", r#"{"alpha": 0.5, "beta": 1.5, "x_min": -20, "x_max": 20, "x_points": 8001, "x_prev": [-1, 0, 2]}"#);
    let o = dfl(d.path(), &["density", "--config", "d.json"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let (h, rows) = table(d.path(), "stationary.csv");
    let (x, f) = (col(&h, &rows, "x"), col(&h, &rows, "density"));
    let trapezoid: f64 = (1..x.len()).map(|k| 0.5 * (f[k] + f[k - 1]) * (x[k] - x[k - 1])).sum();
    assert!((trapezoid - 1.0).abs() < 1e-3, "{trapezoid}");

    let (h, rows) = table(d.path(), "transition.csv");
    assert_eq!(rows.len(), 3 * 8001);
    let xp = col(&h, &rows, "x_prev");
    let (x, f) = (col(&h, &rows, "x"), col(&h, &rows, "density"));
    for cond in [-1.0, 0.0, 2.0] {
        let k: Vec<usize> = (0..rows.len()).filter(|&k| xp[k] == cond).collect();
        let mass: f64 = k.windows(2).map(|w| 0.5 * (f[w[0]] + f[w[1]]) * (x[w[1]] - x[w[0]])).sum();
        assert!((mass - 1.0).abs() < 1e-3, "x'={cond}: {mass}");
    }

    // Undefined at x' = 0.
    let text = read(d.path(), "shrinkage_mean.csv");
    let zero = text.lines().find(|l| l.starts_with("0.0000000000000000e0,")).unwrap();
    assert!(zero.ends_with(','), "{zero}");
    let (h, rows) = table(d.path(), "weight_density.csv");
    assert!(!col(&h, &rows, "x_prev").contains(&0.0));
    assert_eq!(rows.len(), 2 * 100);

    // With alpha = beta the stationary density is flat near the origin.
    write(d.path(), "eq.json", r#"{"alpha": 1, "beta": 1, "x_min": 0, "x_max": 1, "x_points": 2}"#);
    let o = dfl(d.path(), &["density", "--config", "eq.json", "--out", "eq"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let (h, rows) = table(&d.path().join("eq"), "stationary.csv");
    let f = col(&h, &rows, "density");
    assert!(f[0] > 0.0 && f[1] > 0.0);
}

#[test]
fn help_lists_every_config_key() {
    let d = TempDir::new().unwrap();
    let expect: &[(&str, &[&str])] = &[
        ("simulate", &["horizon", "dim", "variance", "seed", "paths", "walk_sd", "zero4_after"]),
        ("fit", &["data.y", "data.predictors", "model.variant", "model.baseline", "model.hyper.grid_m", "model.fixed_weights", "chain.thin", "draws"]),
        ("forecast", &["model.shared_weights", "chain.iterations", "start"]),
        ("evaluate", &["name", "summary", "truth", "forecasts", "start"]),
        ("compare", &["dgp", "models", "eval_start", "forecast_start", "model.variance"]),
        ("density", &["alpha", "beta", "x_min", "x_max", "x_points", "x_prev", "weight_points"]),
    ];
    for (cmd, keys) in expect {
        let o = dfl(d.path(), &[cmd, "--help"]);
        assert_eq!(code(&o), 0);
        let text = String::from_utf8_lossy(&o.stdout);
        for k in *keys {
            assert!(text.contains(k), "{cmd} --help lacks {k}");
        }
        for flag in ["--config", "--seed", "--threads", "--out"] {
            assert!(text.contains(flag), "{cmd} --help lacks {flag}");
        }
    }
}
