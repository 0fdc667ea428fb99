//! Per-gauge correlation of the same series from two sources.

use std::collections::HashMap;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dataset::pearson_correlation;
use crate::{Error, Result};

pub const MEAN_ID: &str = "MEAN";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorrelationRow {
    pub gauge_id: String,
    pub pearson_r: Option<f64>,
    pub n_days: usize,
}

struct SeriesFile {
    gauges: Vec<String>,
    dates: Vec<String>,
    /// `[day][gauge]`
    values: Vec<Vec<f64>>,
}

fn read_series_file(path: &Path) -> Result<SeriesFile> {
    let mut reader = csv::Reader::from_path(path).map_err(|e| Error::ingestion(path, e.to_string()))?;
    let headers = reader.headers()?.clone();
    if headers.get(0) != Some("date") {
        return Err(Error::ingestion(path, "first column must be `date`"));
    }
    let gauges: Vec<String> = headers.iter().skip(1).map(str::to_string).collect();
    let (mut dates, mut values) = (Vec::new(), Vec::new());
    for (line, record) in reader.records().enumerate() {
        let record = record?;
        dates.push(record.get(0).unwrap_or_default().to_string());
        let row = record
            .iter()
            .skip(1)
            .map(|cell| {
                let cell = cell.trim();
                if cell.is_empty() || cell.eq_ignore_ascii_case("nan") {
                    Ok(f64::NAN)
                } else {
                    cell.parse::<f64>()
                        .map_err(|_| Error::ingestion(path, format!("row {}: bad number `{cell}`", line + 2)))
                }
            })
            .collect::<Result<Vec<f64>>>()?;
        values.push(row);
    }
    Ok(SeriesFile { gauges, dates, values })
}

/// Pearson r per gauge present in both files over their shared dates
/// (pairs with a missing side are skipped), followed by a `MEAN` row over
/// the defined coefficients.
pub fn compare_series(a: &Path, b: &Path) -> Result<Vec<CorrelationRow>> {
    let fa = read_series_file(a)?;
    let fb = read_series_file(b)?;
    let b_day: HashMap<&str, usize> = fb.dates.iter().enumerate().map(|(i, d)| (d.as_str(), i)).collect();
    let shared_days: Vec<(usize, usize)> = fa
        .dates
        .iter()
        .enumerate()
        .filter_map(|(i, d)| b_day.get(d.as_str()).map(|&j| (i, j)))
        .collect();
    if shared_days.is_empty() {
        return Err(Error::Alignment("the two files share no dates".into()));
    }
    let mut rows = Vec::new();
    for (ga, id) in fa.gauges.iter().enumerate() {
        let Some(gb) = fb.gauges.iter().position(|g| g == id) else {
            continue;
        };
        let (xs, ys): (Vec<f64>, Vec<f64>) = shared_days
            .iter()
            .map(|&(i, j)| (fa.values[i][ga], fb.values[j][gb]))
            .filter(|(x, y)| x.is_finite() && y.is_finite())
            .unzip();
        let r = match pearson_correlation(&xs, &ys) {
            Ok(r) => Some(r),
            Err(Error::DegenerateInput(msg)) => {
                log::warn!("gauge {id}: {msg}");
                None
            }
            Err(e) => return Err(e),
        };
        rows.push(CorrelationRow {
            gauge_id: id.clone(),
            pearson_r: r,
            n_days: xs.len(),
        });
    }
    if rows.is_empty() {
        return Err(Error::Alignment("the two files share no gauges".into()));
    }
    let defined: Vec<f64> = rows.iter().filter_map(|r| r.pearson_r).collect();
    rows.push(CorrelationRow {
        gauge_id: MEAN_ID.to_string(),
        pearson_r: (!defined.is_empty()).then(|| defined.iter().sum::<f64>() / defined.len() as f64),
        n_days: shared_days.len(),
    });
    Ok(rows)
}

pub fn write_correlations(rows: &[CorrelationRow], out: impl Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}
