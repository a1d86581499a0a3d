//! File formats: empirical initial laws, trajectory dumps, CSV/JSON writers.

use std::fs;
use std::io::Write;
use std::path::Path;

use ergomv_core::InitialLaw;
use serde::Serialize;

use crate::error::{CliError, CliResult};

/// Read atoms for an empirical initial law.
///
/// One atom per line with `dim` values separated by commas or whitespace;
/// blank lines and lines starting with `#` are skipped.
pub fn load_empirical(path: &Path, dim: usize) -> CliResult<InitialLaw> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let mut atoms = Vec::new();
    let mut errors = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|s| !s.is_empty())
            .collect();
        if fields.len() != dim {
            errors.push(format!(
                "{}:{}: expected {dim} values, found {}",
                path.display(),
                lineno + 1,
                fields.len()
            ));
            continue;
        }
        for f in fields {
            match f.parse::<f64>() {
                Ok(v) => atoms.push(v),
                Err(_) => errors.push(format!(
                    "{}:{}: '{f}' is not a number",
                    path.display(),
                    lineno + 1
                )),
            }
        }
    }
    if !errors.is_empty() {
        return Err(CliError::Validation(errors));
    }
    Ok(InitialLaw::empirical(dim, atoms)?)
}

/// Header of the trajectory dump for a `dim`-dimensional state.
pub fn trajectory_header(dim: usize) -> Vec<String> {
    let mut h: Vec<String> = ["replication", "ensemble", "step", "time", "particle"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    h.extend((0..dim).map(|c| format!("x{c}")));
    h
}

/// Serialise rows to a CSV string with a fixed header.
pub fn csv_string<R: Serialize>(header: &[&str], rows: &[R]) -> CliResult<String> {
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_writer(Vec::new());
    w.write_record(header).map_err(csv_err)?;
    for r in rows {
        w.serialize(r).map_err(csv_err)?;
    }
    let bytes = w.into_inner().map_err(|e| csv_err(e.into_error().into()))?;
    Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
}

fn csv_err(e: csv::Error) -> CliError {
    CliError::io("<csv>", std::io::Error::other(e))
}

/// Write `contents` to `path`, or to stdout when `path` is `None`.
pub fn emit(path: Option<&Path>, contents: &str) -> CliResult<()> {
    match path {
        Some(p) => {
            if let Some(dir) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
                fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
            }
            fs::write(p, contents).map_err(|e| CliError::io(p, e))
        }
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(contents.as_bytes())
                .and_then(|_| out.flush())
                .map_err(|e| CliError::io("<stdout>", e))
        }
    }
}

/// Pretty JSON with a trailing newline.
pub fn json_string<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serialisable value");
    s.push('\n');
    s
}
