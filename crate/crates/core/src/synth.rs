//! Seeded synthetic catchments driven by a single-bucket water balance.
//!
//! Each day, with groundwater terms held at zero:
//!
//! ```text
//! P_t  = max(0, rain_mean + rain_amplitude·sin(ωt + phase) + ε_t),  ε_t ~ N(0, noise_scale)
//! ET_t = max(0, et_mean + et_amplitude·sin(ωt + phase − π/4))
//! Q_t  = k·SM_t
//! SM_{t+1} = max(0, SM_t + P_t − ET_t − Q_t)
//! ```
//!
//! with `ω = 2π/365.25`. Whenever the clamps are inactive, the change in
//! soil moisture over any window equals `ΣP − ΣET − ΣQ`.
//!
//! The static table of a generated dataset holds the attributes the
//! catchment parameters are derived from, so static inputs carry real signal.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

use chrono::NaiveDate;

use crate::dataset::{Catchment, Dataset, SeriesTensor, StaticTable};
use crate::numerics::{Matrix, Rng};
use crate::Result;

const OMEGA: f64 = 2.0 * PI / 365.25;

pub const PRECIPITATION: &str = "precipitation";
pub const TEMPERATURE: &str = "temperature";
pub const STREAMFLOW: &str = "streamflow";

/// Static attribute names, each uniform on `[0, 1]`.
pub const STATIC_ATTRIBUTES: [&str; 6] = [
    "wetness",
    "rain_seasonality",
    "drainage",
    "aridity",
    "phase_shift",
    "elevation",
];

#[derive(Clone, Debug, PartialEq)]
pub struct SynthCatchmentParams {
    /// Fraction of soil moisture released as streamflow per day, in (0, 1).
    pub runoff_coefficient: f64,
    pub rain_mean: f64,
    pub rain_amplitude: f64,
    pub rain_phase: f64,
    pub et_mean: f64,
    pub et_amplitude: f64,
    pub noise_scale: f64,
    pub initial_soil_moisture: f64,
    pub temperature_mean: f64,
    pub temperature_amplitude: f64,
    pub temperature_noise: f64,
}

impl SynthCatchmentParams {
    /// Linear map from the attributes in [`STATIC_ATTRIBUTES`] order.
    ///
    /// ```text
    /// rain_mean      = 1.0 + 4.0·wetness          noise_scale = 0.5 + 1.5·wetness
    /// rain_amplitude = 0.2 + 2.0·rain_seasonality
    /// k              = 0.02 + 0.18·drainage
    /// et_mean        = 0.5 + 2.0·aridity          et_amplitude = 0.25 + 1.0·aridity
    /// rain_phase     = 0.6·(phase_shift − 0.5)
    /// temp_mean      = 15 − 10·elevation
    /// ```
    ///
    /// Soil moisture starts at the noise-free equilibrium
    /// `max(0, rain_mean − et_mean) / k`.
    pub fn from_attributes(a: &[f64]) -> Self {
        assert_eq!(a.len(), STATIC_ATTRIBUTES.len(), "attribute vector length");
        let rain_mean = 1.0 + 4.0 * a[0];
        let runoff_coefficient = 0.02 + 0.18 * a[2];
        let et_mean = 0.5 + 2.0 * a[3];
        SynthCatchmentParams {
            runoff_coefficient,
            rain_mean,
            rain_amplitude: 0.2 + 2.0 * a[1],
            rain_phase: 0.6 * (a[4] - 0.5),
            et_mean,
            et_amplitude: 0.25 + 1.0 * a[3],
            noise_scale: 0.5 + 1.5 * a[0],
            initial_soil_moisture: (rain_mean - et_mean).max(0.0) / runoff_coefficient,
            temperature_mean: 15.0 - 10.0 * a[5],
            temperature_amplitude: 8.0,
            temperature_noise: 1.0,
        }
    }

    /// Parameters with every stochastic term switched off.
    pub fn noise_free(mut self) -> Self {
        self.noise_scale = 0.0;
        self.temperature_noise = 0.0;
        self
    }
}

/// Daily output of one catchment. `soil_moisture` has `n_days + 1`
/// entries (state before each day and after the last).
#[derive(Clone, Debug, PartialEq)]
pub struct CatchmentSeries {
    pub precipitation: Vec<f64>,
    pub temperature: Vec<f64>,
    pub streamflow: Vec<f64>,
    pub evapotranspiration: Vec<f64>,
    pub soil_moisture: Vec<f64>,
}

pub fn generate_catchment(p: &SynthCatchmentParams, n_days: usize, seed: u64) -> CatchmentSeries {
    let mut rng = Rng::new(seed);
    let mut out = CatchmentSeries {
        precipitation: Vec::with_capacity(n_days),
        temperature: Vec::with_capacity(n_days),
        streamflow: Vec::with_capacity(n_days),
        evapotranspiration: Vec::with_capacity(n_days),
        soil_moisture: Vec::with_capacity(n_days + 1),
    };
    let mut sm = p.initial_soil_moisture.max(0.0);
    out.soil_moisture.push(sm);
    for t in 0..n_days {
        let angle = OMEGA * t as f64 + p.rain_phase;
        let rain_noise = if p.noise_scale > 0.0 { rng.normal(0.0, p.noise_scale) } else { 0.0 };
        let temp_noise = if p.temperature_noise > 0.0 {
            rng.normal(0.0, p.temperature_noise)
        } else {
            0.0
        };
        let precip = (p.rain_mean + p.rain_amplitude * angle.sin() + rain_noise).max(0.0);
        let et = (p.et_mean + p.et_amplitude * (angle - FRAC_PI_4).sin()).max(0.0);
        let q = p.runoff_coefficient * sm;
        let temp = p.temperature_mean
            + p.temperature_amplitude * (OMEGA * t as f64 - FRAC_PI_2).sin()
            + temp_noise;
        sm = (sm + precip - et - q).max(0.0);

        out.precipitation.push(precip);
        out.evapotranspiration.push(et);
        out.streamflow.push(q);
        out.temperature.push(temp);
        out.soil_moisture.push(sm);
    }
    out
}

/// `n_catchments` catchments with attributes drawn from `seed`, series
/// `precipitation`, `temperature` and `streamflow`, starting 2000-01-01.
pub fn generate_dataset(n_catchments: usize, n_days: usize, seed: u64) -> Result<Dataset> {
    let root = Rng::new(seed);
    let mut attr_rng = root.derive(0);
    let attributes = Matrix::from_fn(n_catchments, STATIC_ATTRIBUTES.len(), |_, _| attr_rng.uniform());

    let mut precip = Matrix::zeros(n_days, n_catchments);
    let mut temp = Matrix::zeros(n_days, n_catchments);
    let mut flow = Matrix::zeros(n_days, n_catchments);
    let mut catchments = Vec::with_capacity(n_catchments);
    for c in 0..n_catchments {
        let params = SynthCatchmentParams::from_attributes(attributes.row(c));
        let series_seed = root.derive(c as u64 + 1).next_u64();
        let s = generate_catchment(&params, n_days, series_seed);
        for t in 0..n_days {
            precip[(t, c)] = s.precipitation[t];
            temp[(t, c)] = s.temperature[t];
            flow[(t, c)] = s.streamflow[t];
        }
        catchments.push(Catchment {
            id: format!("syn{c:04}"),
            source: "synthetic".to_string(),
            index: c,
        });
    }
    let static_table = StaticTable::new(
        STATIC_ATTRIBUTES.iter().map(|s| s.to_string()).collect(),
        attributes,
    )?;
    let start = NaiveDate::from_ymd_opt(2000, 1, 1).expect("valid date");
    let series = SeriesTensor::new(
        vec![PRECIPITATION.into(), TEMPERATURE.into(), STREAMFLOW.into()],
        start,
        vec![precip, temp, flow],
    )?;
    Dataset::new(catchments, static_table, series)
}
