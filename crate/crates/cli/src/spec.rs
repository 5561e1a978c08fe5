//! Distribution specs accepted by `measure`, and sample files accepted by
//! `fid`.
//!
//! A spec is one of
//! - `N(mean,variance)`: a 1-D Gaussian,
//! - `[p1,p2,...]`: an inline discrete distribution,
//! - a path to a CSV file. A file whose rows each hold one value is a
//!   discrete distribution; rows of `lo,hi,mass` with contiguous bins form a
//!   histogram density. A non-numeric first row is treated as a header.

use std::path::Path;

use ndarray::Array2;
use renyigan_lab::measures::{ContinuousDensity, Distribution};

use crate::CliError;

fn parse_err(spec: &str, why: impl std::fmt::Display) -> CliError {
    CliError::SpecParse(format!("{spec}: {why}"))
}

fn numbers(spec: &str, body: &str) -> Result<Vec<f64>, CliError> {
    body.split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .map_err(|_| parse_err(spec, format!("'{}' is not a number", t.trim())))
        })
        .collect()
}

pub fn parse_distribution(spec: &str) -> Result<Distribution, CliError> {
    let s = spec.trim();
    if let Some(body) = s.strip_prefix("N(").and_then(|r| r.strip_suffix(')')) {
        let v = numbers(spec, body)?;
        let [mean, variance] = v[..] else {
            return Err(parse_err(spec, "a Gaussian takes N(mean,variance)"));
        };
        return Ok(Distribution::gaussian(mean, variance)?);
    }
    if let Some(body) = s.strip_prefix('[').and_then(|r| r.strip_suffix(']')) {
        return Ok(Distribution::discrete(numbers(spec, body)?)?);
    }
    let path = Path::new(s);
    if !path.is_file() {
        return Err(parse_err(
            spec,
            "not N(mean,variance), [p1,...], or a readable CSV file",
        ));
    }
    let rows = read_numeric_csv(path)?;
    match rows.first().map(Vec::len) {
        Some(1) => Ok(Distribution::discrete(rows.into_iter().map(|r| r[0]).collect())?),
        Some(3) => {
            let mut edges = vec![rows[0][0]];
            let mut masses = Vec::with_capacity(rows.len());
            for r in &rows {
                if r[0] != *edges.last().expect("seeded above") {
                    return Err(parse_err(
                        spec,
                        format!("bin starting at {} does not continue the previous bin", r[0]),
                    ));
                }
                edges.push(r[1]);
                masses.push(r[2]);
            }
            Ok(ContinuousDensity::histogram(edges, masses)?.into())
        }
        Some(n) => Err(parse_err(spec, format!("expected 1 or 3 columns, got {n}"))),
        None => Err(parse_err(spec, "file has no data rows")),
    }
}

/// Rows of a numeric CSV file. The first row is skipped when it does not
/// parse as numbers; every other row must, and all rows need equal width.
pub fn read_numeric_csv(path: &Path) -> Result<Vec<Vec<f64>>, CliError> {
    let name = path.display().to_string();
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| parse_err(&name, e))?;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| parse_err(&name, e))?;
        let parsed: Result<Vec<f64>, _> = rec.iter().map(str::parse::<f64>).collect();
        match parsed {
            Ok(r) => {
                if let Some(first) = rows.first() {
                    if first.len() != r.len() {
                        return Err(parse_err(
                            &name,
                            format!("row {} has {} columns, expected {}", i + 1, r.len(), first.len()),
                        ));
                    }
                }
                rows.push(r);
            }
            Err(_) if i == 0 => continue,
            Err(_) => return Err(parse_err(&name, format!("row {} is not numeric", i + 1))),
        }
    }
    Ok(rows)
}

/// Sample matrix for `fid`: one sample per row.
pub fn read_samples(path: &Path) -> Result<Array2<f64>, CliError> {
    let rows = read_numeric_csv(path)?;
    let d = rows.first().map_or(0, Vec::len);
    let flat: Vec<f64> = rows.iter().flatten().copied().collect();
    Array2::from_shape_vec((rows.len(), d), flat).map_err(|e| parse_err(&path.display().to_string(), e))
}
