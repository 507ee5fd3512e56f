//! CSV reading and writing. Numbers are written with 17 significant digits,
//! which round-trips every `f64`; missing values are empty cells.

use std::path::Path;

use dfl_core::nalgebra::DMatrix;

use crate::CliError;

pub fn num(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        String::new()
    }
}

/// Single writer for all output files.
pub fn write_csv<I, R>(path: &Path, header: &[&str], rows: I) -> Result<(), CliError>
where
    I: IntoIterator<Item = R>,
    R: IntoIterator<Item = String>,
{
    let io = |e: csv::Error| CliError::Io(format!("{}: {e}", path.display()));
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_path(path).map_err(io)?;
    w.write_record(header).map_err(io)?;
    for row in rows {
        w.write_record(row.into_iter().collect::<Vec<_>>()).map_err(io)?;
    }
    w.flush().map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

/// A numeric CSV with a header row. Empty cells read as NaN.
pub struct Table {
    pub path: String,
    pub header: Vec<String>,
    /// `(line number, values)` per record.
    pub rows: Vec<(u64, Vec<f64>)>,
}

impl Table {
    pub fn read(path: &Path) -> Result<Self, CliError> {
        let name = path.display().to_string();
        let mut r = csv::ReaderBuilder::new()
            .from_path(path)
            .map_err(|e| CliError::Config(format!("cannot read {name}: {e}")))?;
        let header: Vec<String> = r
            .headers()
            .map_err(|e| CliError::Config(format!("{name}: {e}")))?
            .iter()
            .map(|h| h.trim().to_string())
            .collect();
        let mut rows = Vec::new();
        for rec in r.records() {
            let rec = rec.map_err(|e| CliError::Config(format!("{name}: {e}")))?;
            let line = rec.position().map_or(0, |p| p.line());
            let vals = rec
                .iter()
                .zip(&header)
                .map(|(cell, col)| {
                    let cell = cell.trim();
                    if cell.is_empty() {
                        Ok(f64::NAN)
                    } else {
                        cell.parse::<f64>().map_err(|_| {
                            CliError::Config(format!("{name}:{line}: column '{col}': cannot parse '{cell}' as a number"))
                        })
                    }
                })
                .collect::<Result<Vec<f64>, _>>()?;
            rows.push((line, vals));
        }
        Ok(Self { path: name, header, rows })
    }

    pub fn column(&self, name: &str) -> Result<usize, CliError> {
        self.header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| CliError::Config(format!("{}: missing column '{name}'", self.path)))
    }

    /// A 1-based index cell, converted to 0-based and checked against `limit`.
    pub fn index(&self, line: u64, value: f64, what: &str, limit: usize) -> Result<usize, CliError> {
        if value.fract() != 0.0 || value < 1.0 || value > limit as f64 {
            return Err(CliError::Config(format!("{}:{line}: {what} {value} outside 1..={limit}", self.path)));
        }
        Ok(value as usize - 1)
    }

    fn finite(&self, line: u64, v: f64, col: &str) -> Result<f64, CliError> {
        if v.is_finite() {
            Ok(v)
        } else {
            Err(CliError::Config(format!("{}:{line}: column '{col}' is empty or not finite", self.path)))
        }
    }
}

/// Responses from a `t,y` file, in time order.
pub fn read_responses(path: &Path) -> Result<Vec<f64>, CliError> {
    let table = Table::read(path)?;
    let (ct, cy) = (table.column("t")?, table.column("y")?);
    let n = table.rows.len();
    let mut y = vec![f64::NAN; n];
    for (line, row) in &table.rows {
        let t = table.index(*line, row[ct], "t", n)?;
        y[t] = table.finite(*line, row[cy], "y")?;
    }
    if y.iter().any(|v| v.is_nan()) {
        return Err(CliError::Config(format!("{}: duplicate time points", table.path)));
    }
    Ok(y)
}

/// Predictors from a `t,x1..xp` file as a `T x p` matrix.
pub fn read_predictors(path: &Path) -> Result<DMatrix<f64>, CliError> {
    let table = Table::read(path)?;
    let ct = table.column("t")?;
    let p = table.header.len() - 1;
    let cols: Vec<usize> = (1..=p).map(|j| table.column(&format!("x{j}"))).collect::<Result<_, _>>()?;
    let n = table.rows.len();
    let mut x = DMatrix::from_element(n, p, f64::NAN);
    for (line, row) in &table.rows {
        let t = table.index(*line, row[ct], "t", n)?;
        for (j, &c) in cols.iter().enumerate() {
            x[(t, j)] = table.finite(*line, row[c], &format!("x{}", j + 1))?;
        }
    }
    if x.iter().any(|v| v.is_nan()) {
        return Err(CliError::Config(format!("{}: duplicate time points", table.path)));
    }
    Ok(x)
}

/// Long-format trajectories `t,coefficient,<columns...>` as `p x T` matrices,
/// one per requested column.
pub fn read_long(path: &Path, columns: &[&str]) -> Result<Vec<DMatrix<f64>>, CliError> {
    let table = Table::read(path)?;
    let (ct, cc) = (table.column("t")?, table.column("coefficient")?);
    let idx: Vec<usize> = columns.iter().map(|c| table.column(c)).collect::<Result<_, _>>()?;
    let horizon = table.rows.iter().map(|(_, r)| r[ct]).fold(0.0, f64::max) as usize;
    let p = table.rows.iter().map(|(_, r)| r[cc]).fold(0.0, f64::max) as usize;
    if horizon * p != table.rows.len() || horizon == 0 {
        return Err(CliError::Config(format!(
            "{}: expected one row per (t, coefficient), found {} rows for T={horizon}, p={p}",
            table.path,
            table.rows.len()
        )));
    }
    let mut out = vec![DMatrix::from_element(p, horizon, f64::NAN); columns.len()];
    for (line, row) in &table.rows {
        let t = table.index(*line, row[ct], "t", horizon)?;
        let i = table.index(*line, row[cc], "coefficient", p)?;
        for (k, &c) in idx.iter().enumerate() {
            out[k][(i, t)] = table.finite(*line, row[c], columns[k])?;
        }
    }
    if out.iter().any(|m| m.iter().any(|v| v.is_nan())) {
        return Err(CliError::Config(format!("{}: duplicate (t, coefficient) rows", table.path)));
    }
    Ok(out)
}
