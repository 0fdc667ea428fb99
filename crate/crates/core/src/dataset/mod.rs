//! Catchment data model: static attributes plus calendar-aligned daily
//! series, with ingestion, imputation and cross-source audits.
//!
//! Missing cells are stored as `NaN` in the value matrices and flagged in
//! the accompanying mask; nothing is filled implicitly.

mod io;
mod ops;

use chrono::NaiveDate;

pub use io::{export, load_dataset, Manifest};
pub use ops::{
    encode_month_ordinal, impute_series_mean, impute_static_means, intersect_static,
    parse_month, pearson_correlation,
};

use crate::numerics::Matrix;
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Catchment {
    /// Gauge identifier.
    pub id: String,
    /// Archive the catchment came from.
    pub source: String,
    pub index: usize,
}

/// Per-catchment static attributes (`n_catchments × n_attributes`).
#[derive(Clone, Debug, PartialEq)]
pub struct StaticTable {
    pub attribute_names: Vec<String>,
    pub values: Matrix,
    /// Row-major, same shape as `values`.
    pub missing_mask: Vec<bool>,
}

impl StaticTable {
    pub fn new(attribute_names: Vec<String>, values: Matrix) -> Result<Self> {
        if attribute_names.len() != values.cols() {
            return Err(Error::Schema(format!(
                "{} attribute names for {} columns",
                attribute_names.len(),
                values.cols()
            )));
        }
        let missing_mask = values.values().iter().map(|v| v.is_nan()).collect();
        Ok(StaticTable {
            attribute_names,
            values,
            missing_mask,
        })
    }

    pub fn n_attributes(&self) -> usize {
        self.attribute_names.len()
    }

    pub fn is_missing(&self, row: usize, col: usize) -> bool {
        self.missing_mask[row * self.values.cols() + col]
    }

    pub fn missing_count(&self) -> usize {
        self.missing_mask.iter().filter(|m| **m).count()
    }

    pub fn attribute_index(&self, name: &str) -> Option<usize> {
        self.attribute_names.iter().position(|a| a == name)
    }
}

/// Daily series, one `n_days × n_catchments` matrix per feature.
#[derive(Clone, Debug, PartialEq)]
pub struct SeriesTensor {
    pub feature_names: Vec<String>,
    pub n_days: usize,
    pub start_date: NaiveDate,
    pub values: Vec<Matrix>,
    /// One row-major mask per feature.
    pub missing: Vec<Vec<bool>>,
}

impl SeriesTensor {
    pub fn new(feature_names: Vec<String>, start_date: NaiveDate, values: Vec<Matrix>) -> Result<Self> {
        if feature_names.len() != values.len() {
            return Err(Error::Schema(format!(
                "{} feature names for {} series",
                feature_names.len(),
                values.len()
            )));
        }
        let n_days = values.first().map_or(0, Matrix::rows);
        let n_catchments = values.first().map_or(0, Matrix::cols);
        if values
            .iter()
            .any(|m| m.rows() != n_days || m.cols() != n_catchments)
        {
            return Err(Error::Alignment("series features differ in shape".into()));
        }
        let missing = values
            .iter()
            .map(|m| m.values().iter().map(|v| v.is_nan()).collect())
            .collect();
        Ok(SeriesTensor {
            feature_names,
            n_days,
            start_date,
            values,
            missing,
        })
    }

    pub fn n_catchments(&self) -> usize {
        self.values.first().map_or(0, Matrix::cols)
    }

    pub fn feature_index(&self, name: &str) -> Result<usize> {
        self.feature_names
            .iter()
            .position(|f| f == name)
            .ok_or_else(|| Error::Lookup(name.to_string()))
    }

    pub fn feature(&self, name: &str) -> Result<&Matrix> {
        Ok(&self.values[self.feature_index(name)?])
    }

    pub fn date(&self, day: usize) -> NaiveDate {
        self.start_date + chrono::Days::new(day as u64)
    }

    pub fn end_date(&self) -> NaiveDate {
        self.date(self.n_days.saturating_sub(1))
    }

    pub fn missing_count(&self, feature: usize) -> usize {
        self.missing[feature].iter().filter(|m| **m).count()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    pub catchments: Vec<Catchment>,
    pub static_table: StaticTable,
    pub series: SeriesTensor,
}

impl Dataset {
    /// Checks the cross-component invariants and returns the dataset.
    pub fn new(catchments: Vec<Catchment>, static_table: StaticTable, series: SeriesTensor) -> Result<Self> {
        let n = catchments.len();
        if static_table.values.rows() != n || series.n_catchments() != n {
            return Err(Error::Schema(format!(
                "{n} catchments but static table has {} rows and series have {} columns",
                static_table.values.rows(),
                series.n_catchments()
            )));
        }
        let mut seen = std::collections::HashSet::new();
        for (i, c) in catchments.iter().enumerate() {
            if !seen.insert(c.id.as_str()) {
                return Err(Error::Schema(format!("duplicate catchment id `{}`", c.id)));
            }
            if c.index != i {
                return Err(Error::Schema(format!(
                    "catchment `{}` has index {} at position {i}",
                    c.id, c.index
                )));
            }
        }
        Ok(Dataset {
            catchments,
            static_table,
            series,
        })
    }

    pub fn n_catchments(&self) -> usize {
        self.catchments.len()
    }

    pub fn n_days(&self) -> usize {
        self.series.n_days
    }

    pub fn gauge_ids(&self) -> Vec<String> {
        self.catchments.iter().map(|c| c.id.clone()).collect()
    }
}
