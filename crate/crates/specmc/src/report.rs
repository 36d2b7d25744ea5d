//! Report formatting and CSV emission.
//!
//! All CSV files use `,` delimiters, `\n` line endings, UTF-8, and a mandatory
//! header row. Floats are serialized with 17 significant digits so values
//! round-trip bit-exactly. Files are staged as `<name>.partial` and renamed on
//! success; an aborted run leaves the partial marker behind.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

/// Formats a float with 17 significant digits (bit-exact round trip).
pub fn fmt_f64(x: f64) -> String {
    if x.is_nan() {
        return "nan".to_string();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf" } else { "-inf" }.to_string();
    }
    format!("{:.16e}", x)
}

/// Parses floats written by [`fmt_f64`].
pub fn parse_f64(s: &str) -> Option<f64> {
    match s {
        "nan" => Some(f64::NAN),
        "inf" => Some(f64::INFINITY),
        "-inf" => Some(f64::NEG_INFINITY),
        _ => s.parse().ok(),
    }
}

/// One CSV table: fixed header, rows of pre-formatted fields.
pub struct CsvTable {
    pub header: String,
    pub rows: Vec<String>,
}

impl CsvTable {
    pub fn new(header: &str) -> Self {
        Self { header: header.to_string(), rows: Vec::new() }
    }

    pub fn push_row<I: IntoIterator<Item = String>>(&mut self, fields: I) {
        self.rows.push(fields.into_iter().collect::<Vec<_>>().join(","));
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = String::with_capacity(16 * self.rows.len() + self.header.len() + 2);
        out.push_str(&self.header);
        out.push('\n');
        for r in &self.rows {
            out.push_str(r);
            out.push('\n');
        }
        out.into_bytes()
    }
}

/// Writes bytes to `<path>.partial`, then renames to `path`.
pub fn write_staged(path: &Path, bytes: &[u8]) -> Result<(), ReportError> {
    let partial = path.with_extension(match path.extension() {
        Some(e) => format!("{}.partial", e.to_string_lossy()),
        None => "partial".to_string(),
    });
    let io = |source| ReportError::Io { path: partial.clone(), source };
    let mut f = fs::File::create(&partial).map_err(io)?;
    f.write_all(bytes).map_err(|e| ReportError::Io { path: partial.clone(), source: e })?;
    f.sync_all().ok();
    drop(f);
    fs::rename(&partial, path).map_err(|e| ReportError::Io { path: path.to_path_buf(), source: e })
}

/// Sample median: midpoint of the two central order statistics.
pub fn median(values: &[f64]) -> f64 {
    assert!(!values.is_empty());
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Empirical quantile by nearest-rank on the sorted sample.
pub fn quantile(values: &[f64], q: f64) -> f64 {
    assert!(!values.is_empty() && (0.0..=1.0).contains(&q));
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    let idx = ((v.len() - 1) as f64 * q).round() as usize;
    v[idx]
}

/// Wilson 95% score interval for a binomial proportion.
pub fn wilson_interval(successes: usize, trials: usize) -> (f64, f64) {
    assert!(trials > 0);
    let z = 1.959_963_984_540_054f64;
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = (z / denom) * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt();
    ((center - half).max(0.0), (center + half).min(1.0))
}
