use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use super::{encode_month_ordinal, parse_month, Catchment, Dataset, SeriesTensor, StaticTable};
use crate::numerics::Matrix;
use crate::{Error, Result};

const DATE_FORMAT: &str = "%Y-%m-%d";

/// Which parts of an archive directory to load.
///
/// The on-disk layout is `<root>/static.csv` (first column `gauge_id`) and
/// `<root>/series/<feature>.csv` (first column `date`, then one column per
/// gauge id). Missing values are empty cells or a `NaN` literal.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    /// Archive name recorded on every catchment; defaults to the root
    /// directory's name.
    #[serde(default)]
    pub source: Option<String>,
    /// Series features to load, in order; defaults to every `series/*.csv`
    /// sorted by name.
    #[serde(default)]
    pub features: Option<Vec<String>>,
}

impl Manifest {
    pub fn with_features<S: Into<String>>(features: impl IntoIterator<Item = S>) -> Self {
        Manifest {
            source: None,
            features: Some(features.into_iter().map(Into::into).collect()),
        }
    }

    fn resolve_features(&self, root: &Path) -> Result<Vec<String>> {
        if let Some(f) = &self.features {
            return Ok(f.clone());
        }
        let dir = root.join("series");
        let entries = fs::read_dir(&dir).map_err(|e| Error::ingestion(&dir, e.to_string()))?;
        let mut names = Vec::new();
        for entry in entries {
            let path = entry?.path();
            if path.extension().is_some_and(|e| e == "csv") {
                if let Some(stem) = path.file_stem().and_then(|s| s.to_str()) {
                    names.push(stem.to_string());
                }
            }
        }
        names.sort();
        if names.is_empty() {
            return Err(Error::ingestion(dir, "no series files found"));
        }
        Ok(names)
    }
}

fn parse_cell(raw: &str) -> Option<f64> {
    let s = raw.trim();
    if s.is_empty() || s.eq_ignore_ascii_case("nan") {
        return Some(f64::NAN);
    }
    s.parse::<f64>().ok()
}

fn format_cell(v: f64) -> String {
    if v.is_nan() {
        String::new()
    } else {
        format!("{v}")
    }
}

fn open_csv(path: &Path) -> Result<csv::Reader<fs::File>> {
    if !path.is_file() {
        return Err(Error::ingestion(path, "file not found"));
    }
    csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)
        .map_err(|e| Error::ingestion(path, e.to_string()))
}

fn read_static(path: &Path, source: &str) -> Result<(Vec<Catchment>, StaticTable)> {
    let mut reader = open_csv(path)?;
    let headers = reader
        .headers()
        .map_err(|e| Error::ingestion(path, e.to_string()))?
        .clone();
    if headers.get(0) != Some("gauge_id") {
        return Err(Error::Schema(format!(
            "{}: first column must be `gauge_id`",
            path.display()
        )));
    }
    let attribute_names: Vec<String> = headers.iter().skip(1).map(str::to_string).collect();
    let mut catchments = Vec::new();
    let mut values = Vec::new();
    for (line, record) in reader.records().enumerate() {
        let record = record.map_err(|e| Error::ingestion(path, e.to_string()))?;
        let id = record.get(0).unwrap_or_default().trim().to_string();
        if id.is_empty() {
            return Err(Error::Schema(format!("{}: empty gauge_id on row {}", path.display(), line + 2)));
        }
        if catchments.iter().any(|c: &Catchment| c.id == id) {
            return Err(Error::Schema(format!("duplicate catchment id `{id}`")));
        }
        for (col, raw) in record.iter().skip(1).enumerate() {
            let v = match parse_cell(raw) {
                Some(v) => v,
                None => match parse_month(raw) {
                    Some(m) => encode_month_ordinal(m)?,
                    None => {
                        return Err(Error::Schema(format!(
                            "{}: cannot parse `{raw}` for attribute `{}` of `{id}`",
                            path.display(),
                            attribute_names[col]
                        )))
                    }
                },
            };
            values.push(v);
        }
        catchments.push(Catchment {
            id,
            source: source.to_string(),
            index: catchments.len(),
        });
    }
    let matrix = Matrix::new(catchments.len(), attribute_names.len(), values)?;
    Ok((catchments, StaticTable::new(attribute_names, matrix)?))
}

struct SeriesFile {
    start: NaiveDate,
    n_days: usize,
    /// `n_days × n_catchments`, columns in dataset catchment order.
    values: Matrix,
}

fn read_series(path: &Path, catchments: &[Catchment]) -> Result<SeriesFile> {
    let mut reader = open_csv(path)?;
    let headers = reader
        .headers()
        .map_err(|e| Error::ingestion(path, e.to_string()))?
        .clone();
    if headers.get(0) != Some("date") {
        return Err(Error::Schema(format!("{}: first column must be `date`", path.display())));
    }
    let position: HashMap<&str, usize> = catchments
        .iter()
        .map(|c| (c.id.as_str(), c.index))
        .collect();
    let mut column_target = Vec::new();
    let mut seen = vec![false; catchments.len()];
    for name in headers.iter().skip(1) {
        let idx = *position.get(name.trim()).ok_or_else(|| {
            Error::Schema(format!("{}: gauge `{name}` is not in static.csv", path.display()))
        })?;
        if seen[idx] {
            return Err(Error::Schema(format!("{}: duplicate gauge column `{name}`", path.display())));
        }
        seen[idx] = true;
        column_target.push(idx);
    }
    if let Some(missing) = seen.iter().position(|s| !s) {
        return Err(Error::Schema(format!(
            "{}: no column for gauge `{}`",
            path.display(),
            catchments[missing].id
        )));
    }

    let n_catchments = catchments.len();
    let mut start = None;
    let mut prev: Option<NaiveDate> = None;
    let mut values = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| Error::ingestion(path, e.to_string()))?;
        let raw_date = record.get(0).unwrap_or_default().trim();
        let date = NaiveDate::parse_from_str(raw_date, DATE_FORMAT)
            .map_err(|e| Error::ingestion(path, format!("bad date `{raw_date}`: {e}")))?;
        if let Some(p) = prev {
            if date != p.succ_opt().unwrap_or(p) {
                return Err(Error::Alignment(format!(
                    "{}: dates jump from {p} to {date}",
                    path.display()
                )));
            }
        } else {
            start = Some(date);
        }
        prev = Some(date);
        let mut row = vec![f64::NAN; n_catchments];
        for (col, raw) in record.iter().skip(1).enumerate() {
            row[column_target[col]] = parse_cell(raw).ok_or_else(|| {
                Error::ingestion(path, format!("cannot parse `{raw}` on {date}"))
            })?;
        }
        values.extend(row);
    }
    let start = start.ok_or_else(|| Error::ingestion(path, "series file has no rows"))?;
    let n_days = values.len() / n_catchments.max(1);
    Ok(SeriesFile {
        start,
        n_days,
        values: Matrix::new(n_days, n_catchments, values)?,
    })
}

/// Reads an archive directory.
pub fn load_dataset(root: impl AsRef<Path>, manifest: &Manifest) -> Result<Dataset> {
    let root = root.as_ref();
    let source = manifest.source.clone().unwrap_or_else(|| {
        root.file_name()
            .and_then(|n| n.to_str())
            .unwrap_or("dataset")
            .to_string()
    });
    let (catchments, static_table) = read_static(&root.join("static.csv"), &source)?;
    if catchments.is_empty() {
        return Err(Error::ingestion(root.join("static.csv"), "no catchments"));
    }
    let features = manifest.resolve_features(root)?;

    let mut start = None;
    let mut n_days = 0;
    let mut matrices = Vec::with_capacity(features.len());
    for feature in &features {
        let path = series_path(root, feature);
        let file = read_series(&path, &catchments)?;
        match start {
            None => {
                start = Some(file.start);
                n_days = file.n_days;
            }
            Some(s) if s != file.start || n_days != file.n_days => {
                return Err(Error::Alignment(format!(
                    "`{feature}` covers {} + {} days, expected {s} + {n_days} days",
                    file.start, file.n_days
                )));
            }
            Some(_) => {}
        }
        matrices.push(file.values);
    }
    let series = SeriesTensor::new(features, start.expect("at least one feature"), matrices)?;
    Dataset::new(catchments, static_table, series)
}

fn series_path(root: &Path, feature: &str) -> PathBuf {
    root.join("series").join(format!("{feature}.csv"))
}

/// Writes the dataset in the ingestion layout. Values are printed in
/// shortest round-trip form so that re-loading reproduces them bit for bit;
/// missing cells are written empty.
pub fn export(dataset: &Dataset, root: impl AsRef<Path>) -> Result<()> {
    let root = root.as_ref();
    fs::create_dir_all(root.join("series"))?;

    let mut w = csv::Writer::from_path(root.join("static.csv"))?;
    let mut header = vec!["gauge_id".to_string()];
    header.extend(dataset.static_table.attribute_names.iter().cloned());
    w.write_record(&header)?;
    for c in &dataset.catchments {
        let mut row = vec![c.id.clone()];
        row.extend(dataset.static_table.values.row(c.index).iter().map(|v| format_cell(*v)));
        w.write_record(&row)?;
    }
    w.flush()?;

    let series = &dataset.series;
    for (f, name) in series.feature_names.iter().enumerate() {
        let mut w = csv::Writer::from_path(series_path(root, name))?;
        let mut header = vec!["date".to_string()];
        header.extend(dataset.catchments.iter().map(|c| c.id.clone()));
        w.write_record(&header)?;
        for day in 0..series.n_days {
            let mut row = vec![series.date(day).format(DATE_FORMAT).to_string()];
            row.extend(series.values[f].row(day).iter().map(|v| format_cell(*v)));
            w.write_record(&row)?;
        }
        w.flush()?;
    }
    Ok(())
}
