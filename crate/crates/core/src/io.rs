//! File formats.
//!
//! Features: magic `LNF1`, little-endian `u32` N, `u32` D, then `N·D`
//! little-endian `f32` values, row-major. Labels: magic `LNL1`, `u32` N, then
//! N little-endian `u32`. Both also accept CSV (one row per line; lines
//! starting with `#` are comments), detected by the absence of the magic.
//! Corruption matrices and softmax vectors are CSV only.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use crate::curves::AccuracyCurve;
use crate::dataset::FeatureDataset;
use crate::distribution::{CorruptionMatrix, LabelDistribution};
use crate::error::{Error, Result};
use crate::numeric::format_sig12;

pub const FEATURE_MAGIC: &[u8; 4] = b"LNF1";
pub const LABEL_MAGIC: &[u8; 4] = b"LNL1";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FileFormat {
    Binary,
    Csv,
}

fn format_err(path: &Path, reason: impl Into<String>) -> Error {
    Error::Format {
        path: path.to_path_buf(),
        reason: reason.into(),
    }
}

fn read_bytes(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn write_bytes(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn csv_rows(path: &Path, bytes: &[u8]) -> Result<Vec<(usize, Vec<String>)>> {
    let text = std::str::from_utf8(bytes).map_err(|_| format_err(path, "not UTF-8 text"))?;
    Ok(text
        .lines()
        .enumerate()
        .map(|(i, line)| (i + 1, line.trim()))
        .filter(|(_, line)| !line.is_empty() && !line.starts_with('#'))
        .map(|(n, line)| (n, line.split(',').map(|f| f.trim().to_string()).collect()))
        .collect())
}

fn u32_at(bytes: &[u8], offset: usize) -> u32 {
    u32::from_le_bytes(bytes[offset..offset + 4].try_into().expect("4 bytes"))
}

/// Raw feature matrix: `(values, n, dim, format)`.
pub fn read_features(path: &Path) -> Result<(Vec<f32>, usize, usize, FileFormat)> {
    let bytes = read_bytes(path)?;
    if bytes.starts_with(FEATURE_MAGIC) {
        if bytes.len() < 12 {
            return Err(format_err(path, "truncated feature header"));
        }
        let n = u32_at(&bytes, 4) as usize;
        let d = u32_at(&bytes, 8) as usize;
        let expected = 12 + n * d * 4;
        if bytes.len() != expected {
            return Err(format_err(
                path,
                format!("{} bytes, expected {expected} for N={n}, D={d}", bytes.len()),
            ));
        }
        let values = bytes[12..]
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().expect("4 bytes")))
            .collect();
        return Ok((values, n, d, FileFormat::Binary));
    }
    let rows = csv_rows(path, &bytes)?;
    let dim = rows.first().map_or(0, |(_, r)| r.len());
    let mut values = Vec::with_capacity(rows.len() * dim);
    for (line, row) in &rows {
        if row.len() != dim {
            return Err(format_err(
                path,
                format!("line {line} has {} columns, expected {dim}", row.len()),
            ));
        }
        for field in row {
            let v: f32 = field
                .parse()
                .map_err(|_| format_err(path, format!("line {line}: bad number {field:?}")))?;
            values.push(v);
        }
    }
    Ok((values, rows.len(), dim, FileFormat::Csv))
}

pub fn encode_features(values: &[f32], n: usize, dim: usize) -> Vec<u8> {
    let mut out = Vec::with_capacity(12 + values.len() * 4);
    out.extend_from_slice(FEATURE_MAGIC);
    out.extend_from_slice(&(n as u32).to_le_bytes());
    out.extend_from_slice(&(dim as u32).to_le_bytes());
    for v in values {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

pub fn write_features(path: &Path, data: &FeatureDataset) -> Result<()> {
    write_bytes(path, &encode_features(data.features(), data.len(), data.dim()))
}

pub fn read_labels(path: &Path) -> Result<(Vec<usize>, FileFormat)> {
    let bytes = read_bytes(path)?;
    if bytes.starts_with(LABEL_MAGIC) {
        if bytes.len() < 8 {
            return Err(format_err(path, "truncated label header"));
        }
        let n = u32_at(&bytes, 4) as usize;
        if bytes.len() != 8 + 4 * n {
            return Err(format_err(
                path,
                format!("{} bytes, expected {} for N={n}", bytes.len(), 8 + 4 * n),
            ));
        }
        let labels = bytes[8..]
            .chunks_exact(4)
            .map(|c| u32::from_le_bytes(c.try_into().expect("4 bytes")) as usize)
            .collect();
        return Ok((labels, FileFormat::Binary));
    }
    let mut labels = Vec::new();
    for (line, row) in csv_rows(path, &bytes)? {
        for field in row.iter().filter(|f| !f.is_empty()) {
            labels.push(
                field
                    .parse()
                    .map_err(|_| format_err(path, format!("line {line}: bad label {field:?}")))?,
            );
        }
    }
    Ok((labels, FileFormat::Csv))
}

pub fn encode_labels(labels: &[usize], format: FileFormat) -> Vec<u8> {
    match format {
        FileFormat::Binary => {
            let mut out = Vec::with_capacity(8 + labels.len() * 4);
            out.extend_from_slice(LABEL_MAGIC);
            out.extend_from_slice(&(labels.len() as u32).to_le_bytes());
            for &y in labels {
                out.extend_from_slice(&(y as u32).to_le_bytes());
            }
            out
        }
        FileFormat::Csv => {
            let mut out = String::with_capacity(labels.len() * 3);
            for y in labels {
                out.push_str(&y.to_string());
                out.push('\n');
            }
            out.into_bytes()
        }
    }
}

/// Loads a dataset from a feature file and a label file. `num_labels`
/// defaults to one more than the largest label.
pub fn load_dataset(features: &Path, labels: &Path, num_labels: Option<usize>) -> Result<FeatureDataset> {
    let (values, n, dim, _) = read_features(features)?;
    let (labels_vec, _) = read_labels(labels)?;
    if labels_vec.len() != n {
        return Err(format_err(
            labels,
            format!("{} labels for {n} feature rows", labels_vec.len()),
        ));
    }
    let l = num_labels.unwrap_or_else(|| labels_vec.iter().max().map_or(1, |m| m + 1));
    FeatureDataset::new(values, dim, labels_vec, l).map_err(|e| format_err(features, e.to_string()))
}

fn parse_prob_rows(path: &Path) -> Result<Vec<(usize, Vec<f64>)>> {
    let bytes = read_bytes(path)?;
    csv_rows(path, &bytes)?
        .into_iter()
        .map(|(line, row)| {
            let values = row
                .iter()
                .map(|f| {
                    f.parse::<f64>()
                        .map_err(|_| format_err(path, format!("line {line}: bad number {f:?}")))
                })
                .collect::<Result<Vec<_>>>()?;
            Ok((line, values))
        })
        .collect()
}

/// Corruption matrix CSV: `L` rows of `L` comma-separated decimals.
pub fn read_matrix_csv(path: &Path) -> Result<CorruptionMatrix> {
    let rows = parse_prob_rows(path)?;
    CorruptionMatrix::from_rows(rows.into_iter().map(|(_, r)| r).collect())
        .map_err(|e| format_err(path, e.to_string()))
}

/// Softmax CSV: one row of `L` probabilities per test sample.
pub fn read_softmax_csv(path: &Path) -> Result<Vec<LabelDistribution>> {
    parse_prob_rows(path)?
        .into_iter()
        .map(|(line, row)| {
            LabelDistribution::new(row).map_err(|e| format_err(path, format!("line {line}: {e}")))
        })
        .collect()
}

/// Writes `# key=value` header lines.
pub fn header_lines(entries: &[(String, String)]) -> String {
    entries
        .iter()
        .map(|(k, v)| format!("# {k}={v}\n"))
        .collect()
}

/// Curve CSV: header comment, `gamma,accuracy[,std]`, 12 significant digits.
pub fn curve_csv(curve: &AccuracyCurve, header: &[(String, String)]) -> String {
    let with_std = curve.points().iter().any(|p| p.std.is_some());
    let mut out = header_lines(header);
    out.push_str(if with_std { "gamma,accuracy,std\n" } else { "gamma,accuracy\n" });
    for p in curve.points() {
        out.push_str(&format_sig12(p.gamma));
        out.push(',');
        out.push_str(&format_sig12(p.accuracy));
        if with_std {
            out.push(',');
            out.push_str(&format_sig12(p.std.unwrap_or(0.0)));
        }
        out.push('\n');
    }
    out
}

/// Parses `gamma,accuracy[,std]` rows back, skipping comments and header.
pub fn parse_curve_csv(text: &str) -> Vec<Vec<f64>> {
    text.lines()
        .filter(|l| !l.starts_with('#') && !l.trim().is_empty())
        .filter_map(|l| l.split(',').map(|f| f.trim().parse::<f64>().ok()).collect())
        .collect()
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    let mut f = fs::File::create(path).map_err(|source| Error::Io {
        path: PathBuf::from(path),
        source,
    })?;
    f.write_all(text.as_bytes()).map_err(|source| Error::Io {
        path: PathBuf::from(path),
        source,
    })
}
