//! CSV readers and writers for datasets, chains and reports.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use faer::Mat;

use crate::covariance::Locations;
use crate::mcmc::{Chain, Timings};
use crate::predict::PredictiveSummary;
use crate::simdata::SpatialDataset;
use crate::{Error, Result};

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Error::io(path, e))
}

fn parse(field: &str, path: &Path, row: usize) -> Result<f64> {
    field.trim().parse::<f64>().map_err(|_| {
        Error::usage(format!(
            "{}: row {row}: cannot parse '{field}' as a number",
            path.display()
        ))
    })
}

/// Writes `x, y, x1..xq, value`.
pub fn write_dataset(path: &Path, data: &SpatialDataset) -> Result<()> {
    let mut w = csv::Writer::from_writer(create(path)?);
    let q = data.covariates.ncols();
    let mut header = vec!["x".to_string(), "y".to_string()];
    header.extend((1..=q).map(|k| format!("x{k}")));
    header.push("value".into());
    w.write_record(&header)?;
    for i in 0..data.len() {
        let p = data.locations.point(i);
        let mut rec: Vec<String> = vec![fmt(p[0]), fmt(p[1])];
        rec.extend((0..q).map(|k| fmt(data.covariates[(i, k)])));
        rec.push(fmt(data.y[i]));
        w.write_record(&rec)?;
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

fn fmt(v: f64) -> String {
    // Shortest representation that round-trips.
    format!("{v:?}")
}

/// Reads a dataset written by [`write_dataset`] (or any CSV with columns
/// `x, y`, optional covariates, then `value`).
pub fn read_dataset(path: &Path) -> Result<SpatialDataset> {
    let mut r = csv::Reader::from_path(path).map_err(|e| match e.kind() {
        csv::ErrorKind::Io(_) => Error::usage(format!("cannot open dataset {}: {e}", path.display())),
        _ => Error::Csv(e),
    })?;
    let header: Vec<String> = r.headers()?.iter().map(|h| h.trim().to_string()).collect();
    if header.len() < 3 || header[0] != "x" || header[1] != "y" || header.last().map(String::as_str) != Some("value") {
        return Err(Error::usage(format!(
            "{}: header must be x, y, [covariates...], value; got {header:?}",
            path.display()
        )));
    }
    let q = header.len() - 3;
    let mut coords = Vec::new();
    let mut cov = Vec::new();
    let mut y = Vec::new();
    for (row, rec) in r.records().enumerate() {
        let rec = rec?;
        if rec.len() != header.len() {
            return Err(Error::usage(format!("{}: row {} has {} fields", path.display(), row + 1, rec.len())));
        }
        coords.push(parse(&rec[0], path, row + 1)?);
        coords.push(parse(&rec[1], path, row + 1)?);
        for k in 0..q {
            cov.push(parse(&rec[2 + k], path, row + 1)?);
        }
        y.push(parse(&rec[2 + q], path, row + 1)?);
    }
    let n = y.len();
    if n == 0 {
        return Err(Error::usage(format!("{}: no data rows", path.display())));
    }
    Ok(SpatialDataset {
        locations: Locations::from_flat(2, coords)?,
        covariates: Mat::from_fn(n, q, |i, k| cov[i * q + k]),
        y,
    })
}

/// Reads a numeric table with a header row, one column per regressor.
pub fn read_matrix(path: &Path) -> Result<Mat<f64>> {
    let mut r = csv::Reader::from_path(path)?;
    let k = r.headers()?.len();
    let mut vals = Vec::new();
    let mut rows = 0;
    for (row, rec) in r.records().enumerate() {
        let rec = rec?;
        for f in rec.iter() {
            vals.push(parse(f, path, row + 1)?);
        }
        rows += 1;
    }
    if vals.len() != rows * k {
        return Err(Error::usage(format!("{}: ragged rows", path.display())));
    }
    Ok(Mat::from_fn(rows, k, |i, j| vals[i * k + j]))
}

/// Chain CSV: one column per parameter plus `log_likelihood`.
pub fn write_chain(path: &Path, chain: &Chain) -> Result<()> {
    let mut w = csv::Writer::from_writer(create(path)?);
    let mut header = chain.names.clone();
    header.push("log_likelihood".into());
    w.write_record(&header)?;
    for (row, ll) in chain.draws.iter().zip(&chain.log_likelihood) {
        let mut rec: Vec<String> = row.iter().map(|v| fmt(*v)).collect();
        rec.push(fmt(*ll));
        w.write_record(&rec)?;
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

/// Reads a chain CSV; sampler metadata fields are left at defaults.
pub fn read_chain(path: &Path) -> Result<Chain> {
    let mut r = csv::Reader::from_path(path).map_err(|e| match e.kind() {
        csv::ErrorKind::Io(_) => Error::usage(format!("cannot open chain {}: {e}", path.display())),
        _ => Error::Csv(e),
    })?;
    let mut names: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
    let has_ll = names.last().map(String::as_str) == Some("log_likelihood");
    if has_ll {
        names.pop();
    }
    let p = names.iter().take_while(|c| c.starts_with("beta_")).count();
    if names.len() < p + 3 || names[p] != "tau2" || names[p + 1] != "sigma2" {
        return Err(Error::usage(format!("{}: unexpected chain header {names:?}", path.display())));
    }
    let mut draws = Vec::new();
    let mut lls = Vec::new();
    for (row, rec) in r.records().enumerate() {
        let rec = rec?;
        let mut vals = Vec::with_capacity(rec.len());
        for f in rec.iter() {
            vals.push(parse(f, path, row + 1)?);
        }
        if has_ll {
            lls.push(vals.pop().expect("non-empty row"));
        }
        if vals.len() != names.len() {
            return Err(Error::usage(format!("{}: row {} has wrong width", path.display(), row + 1)));
        }
        draws.push(vals);
    }
    Ok(Chain {
        names,
        draws,
        log_likelihood: lls,
        p,
        acceptance_rates: [None, None],
        proposal_sds: [f64::NAN, f64::NAN],
        seed: 0,
        burnin: 0,
        iterations: 0,
        timings: Timings::default(),
        projector_ranks: Vec::new(),
    })
}

/// Generic CSV table writer.
pub fn write_table(path: &Path, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
    let mut w = csv::Writer::from_writer(create(path)?);
    w.write_record(header)?;
    for r in rows {
        w.write_record(r)?;
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

pub fn write_surface(path: &Path, s: &PredictiveSummary) -> Result<()> {
    let rows: Vec<Vec<String>> = (0..s.points.len())
        .map(|i| {
            let p = s.points.point(i);
            vec![fmt(p[0]), fmt(p[1]), fmt(s.mean[i]), fmt(s.q05[i]), fmt(s.q95[i])]
        })
        .collect();
    write_table(path, &["x", "y", "mean", "q05", "q95"], &rows)
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    let mut f = create(path)?;
    f.write_all(text.as_bytes()).map_err(|e| Error::io(path, e))?;
    f.flush().map_err(|e| Error::io(path, e))
}

pub fn number(v: f64) -> String {
    fmt(v)
}
