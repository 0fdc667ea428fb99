//! Exogenous spatial and temporal encodings.
//!
//! Five families are available: a linear ramp over catchments, a linear ramp
//! over days, an annual sine/cosine pair, sine/cosine pairs at 8–128 day
//! periods, and Legendre polynomials of degree 2–4 over the day range. They
//! are grouped into four cumulative tiers:
//!
//! | tier | channels |
//! |------|----------|
//! | 1 | none |
//! | 2 | linear space, linear time |
//! | 3 | tier 2 + annual Fourier |
//! | 4 | tier 3 + extra Fourier + Legendre |
//!
//! Time channels depend on the day index from the start of the dataset,
//! not on the calendar date. Space channels follow catchment order.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::numerics::Matrix;
use crate::{Error, Result};

pub const ANNUAL_PERIOD: f64 = 365.25;
pub const EXTRA_PERIODS: [f64; 5] = [8.0, 16.0, 32.0, 64.0, 128.0];
pub const LEGENDRE_DEGREES: [usize; 3] = [2, 3, 4];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EncodingConfig {
    pub tier: u8,
    pub include_static: bool,
}

impl EncodingConfig {
    pub fn new(tier: u8, include_static: bool) -> Result<Self> {
        if !(1..=4).contains(&tier) {
            return Err(Error::config("encoding_tier", format!("must be 1, 2, 3 or 4, got {tier}")));
        }
        Ok(EncodingConfig { tier, include_static })
    }

    /// The eight (tier × static) combinations, tier-major.
    pub fn all() -> Vec<EncodingConfig> {
        (1..=4)
            .flat_map(|tier| {
                [false, true].map(|include_static| EncodingConfig { tier, include_static })
            })
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EncodingSet {
    /// `n_days × n_time_channels`
    pub per_day: Matrix,
    /// `n_catchments × n_space_channels`
    pub per_catchment: Matrix,
    pub time_channel_names: Vec<String>,
    pub space_channel_names: Vec<String>,
}

impl EncodingSet {
    pub fn n_time_channels(&self) -> usize {
        self.per_day.cols()
    }

    pub fn n_space_channels(&self) -> usize {
        self.per_catchment.cols()
    }

    pub fn channel_names(&self) -> Vec<String> {
        self.space_channel_names
            .iter()
            .chain(&self.time_channel_names)
            .cloned()
            .collect()
    }
}

fn ramp(n: usize) -> Vec<f64> {
    if n <= 1 {
        return vec![0.0; n];
    }
    let last = (n - 1) as f64;
    (0..n).map(|i| i as f64 / last).collect()
}

/// `i / (n − 1)` per catchment.
pub fn linear_space(n_catchments: usize) -> Vec<f64> {
    ramp(n_catchments)
}

/// `t / (n − 1)` per day.
pub fn linear_time(n_days: usize) -> Vec<f64> {
    ramp(n_days)
}

/// `(sin(2πt/period), cos(2πt/period))` per day.
pub fn fourier_time(n_days: usize, period: f64) -> Result<(Vec<f64>, Vec<f64>)> {
    if !(period > 0.0) {
        return Err(Error::Domain(format!("Fourier period must be positive, got {period}")));
    }
    Ok((0..n_days)
        .map(|t| (2.0 * PI * t as f64 / period).sin_cos())
        .unzip())
}

/// Legendre polynomial `P_n(u)` by Bonnet's recursion.
pub fn legendre(degree: usize, u: f64) -> f64 {
    let (mut prev, mut cur) = (1.0, u);
    if degree == 0 {
        return prev;
    }
    for n in 1..degree {
        let n = n as f64;
        let next = ((2.0 * n + 1.0) * u * cur - n * prev) / (n + 1.0);
        prev = cur;
        cur = next;
    }
    cur
}

/// `P_degree(u)` with the day range mapped onto `u ∈ [−1, 1]`.
pub fn legendre_time(n_days: usize, degree: usize) -> Result<Vec<f64>> {
    if !LEGENDRE_DEGREES.contains(&degree) {
        return Err(Error::Domain(format!("Legendre degree must be 2, 3 or 4, got {degree}")));
    }
    if n_days < 2 {
        return Err(Error::Domain("Legendre encoding needs at least two days".into()));
    }
    Ok(ramp(n_days)
        .into_iter()
        .map(|x| legendre(degree, 2.0 * x - 1.0))
        .collect())
}

fn columns_to_matrix(rows: usize, columns: &[Vec<f64>]) -> Matrix {
    Matrix::from_fn(rows, columns.len(), |r, c| columns[c][r])
}

/// Channels for one tier, in the order listed in the module docs.
pub fn build_encoding_set(cfg: EncodingConfig, n_days: usize, n_catchments: usize) -> Result<EncodingSet> {
    let cfg = EncodingConfig::new(cfg.tier, cfg.include_static)?;
    let mut time_cols = Vec::new();
    let mut time_names = Vec::new();
    let mut space_cols = Vec::new();
    let mut space_names = Vec::new();

    if cfg.tier >= 2 {
        space_cols.push(linear_space(n_catchments));
        space_names.push("linear_space".to_string());
        time_cols.push(linear_time(n_days));
        time_names.push("linear_time".to_string());
    }
    let mut push_fourier = |period: f64, label: &str| -> Result<()> {
        let (s, c) = fourier_time(n_days, period)?;
        time_cols.push(s);
        time_cols.push(c);
        time_names.push(format!("fourier_{label}_sin"));
        time_names.push(format!("fourier_{label}_cos"));
        Ok(())
    };
    if cfg.tier >= 3 {
        push_fourier(ANNUAL_PERIOD, "annual")?;
    }
    if cfg.tier >= 4 {
        for p in EXTRA_PERIODS {
            push_fourier(p, &format!("{p}d"))?;
        }
        for d in LEGENDRE_DEGREES {
            time_cols.push(legendre_time(n_days, d)?);
            time_names.push(format!("legendre_{d}"));
        }
    }
    Ok(EncodingSet {
        per_day: columns_to_matrix(n_days, &time_cols),
        per_catchment: columns_to_matrix(n_catchments, &space_cols),
        time_channel_names: time_names,
        space_channel_names: space_names,
    })
}
