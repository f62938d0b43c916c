//! CSV readers and writers.

use std::fs;
use std::path::Path;

use normgeo_core::harness::TrialRecord;
use normgeo_core::Matrix;

use crate::error::CliError;

pub const TRIALS_HEADER: [&str; 8] = ["n", "seed", "lambda", "err_l2", "kappa_hat", "bound", "bound_valid", "iters"];

fn read_err(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::input("E_IO", format!("{}: {e}", path.display()))
}

/// Numeric rows of a headerless CSV. A first row that does not parse as
/// numbers is taken to be a header and skipped.
pub fn read_numeric_rows(path: &Path) -> Result<Vec<Vec<f64>>, CliError> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| read_err(path, e))?;
    let mut rows = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| read_err(path, e))?;
        let parsed: Result<Vec<f64>, _> = rec.iter().map(str::parse::<f64>).collect();
        match parsed {
            Ok(r) => rows.push(r),
            Err(_) if i == 0 => continue,
            Err(e) => return Err(CliError::input("E_PARSE", format!("{} row {}: {e}", path.display(), i + 1))),
        }
    }
    if rows.is_empty() {
        return Err(CliError::input("E_PARSE", format!("{}: no numeric rows", path.display())));
    }
    Ok(rows)
}

/// Row-major matrix from a headerless CSV.
pub fn read_matrix_csv(path: &Path) -> Result<Matrix, CliError> {
    let rows = read_numeric_rows(path)?;
    Matrix::from_rows(&rows).map_err(|e| CliError::input("E_PARSE", format!("{}: {e}", path.display())))
}

/// Data file: first column `y`, remaining columns the row of `X`.
pub fn read_data_csv(path: &Path) -> Result<(Matrix, Vec<f64>), CliError> {
    let rows = read_numeric_rows(path)?;
    if rows[0].len() < 2 {
        return Err(CliError::input("E_PARSE", format!("{}: need y and at least one feature column", path.display())));
    }
    let y = rows.iter().map(|r| r[0]).collect();
    let x: Vec<Vec<f64>> = rows.iter().map(|r| r[1..].to_vec()).collect();
    let x = Matrix::from_rows(&x).map_err(|e| CliError::input("E_PARSE", format!("{}: {e}", path.display())))?;
    Ok((x, y))
}

/// Shortest representation that parses back to the same `f64`.
fn float(x: f64) -> String {
    format!("{x:e}")
}

pub fn trials_csv(records: &[TrialRecord]) -> Result<String, CliError> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
    let wr = |e: csv::Error| CliError::runtime("E_OUTPUT", e.to_string());
    w.write_record(TRIALS_HEADER).map_err(wr)?;
    for r in records {
        w.write_record([
            r.n.to_string(),
            r.seed.to_string(),
            float(r.lambda),
            float(r.err_l2),
            float(r.kappa_hat),
            r.bound.map(float).unwrap_or_default(),
            r.bound_valid.to_string(),
            r.iters.to_string(),
        ])
        .map_err(wr)?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::runtime("E_OUTPUT", e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is ASCII"))
}

pub fn parse_trials_csv(text: &str) -> Result<Vec<TrialRecord>, CliError> {
    let bad = |e: &dyn std::fmt::Display| CliError::input("E_PARSE", format!("trials csv: {e}"));
    let mut rdr = csv::Reader::from_reader(text.as_bytes());
    let header = rdr.headers().map_err(|e| bad(&e))?.clone();
    if header.iter().ne(TRIALS_HEADER) {
        return Err(bad(&"unexpected header"));
    }
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| bad(&e))?;
        let f = |i: usize| rec[i].parse::<f64>().map_err(|e| bad(&e));
        out.push(TrialRecord {
            n: rec[0].parse().map_err(|e| bad(&e))?,
            seed: rec[1].parse().map_err(|e| bad(&e))?,
            lambda: f(2)?,
            err_l2: f(3)?,
            kappa_hat: f(4)?,
            bound: if rec[5].is_empty() { None } else { Some(f(5)?) },
            bound_valid: rec[6].parse().map_err(|e| bad(&e))?,
            iters: rec[7].parse().map_err(|e| bad(&e))?,
        });
    }
    Ok(out)
}

pub fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| CliError::runtime("E_OUTPUT", format!("{}: {e}", dir.display())))?;
    }
    fs::write(path, contents).map_err(|e| CliError::runtime("E_OUTPUT", format!("{}: {e}", path.display())))
}
