//! RMSE, NSE and normalized NSE, per gauge and aggregated into reports.
//!
//! NNSE is `1 / (2 − NSE)`: it maps NSE's `(−∞, 1]` onto `(0, 1]` with the
//! mean predictor at exactly 0.5.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::model::{Batcher, FeatureStore, Forecaster, WindowView};
use crate::{Error, Result};

pub fn rmse(pred: &[f64], obs: &[f64]) -> Result<f64> {
    if pred.len() != obs.len() || pred.is_empty() {
        return Err(Error::Shape(format!(
            "rmse needs equal nonzero lengths, got {} and {}",
            pred.len(),
            obs.len()
        )));
    }
    let sse: f64 = pred.iter().zip(obs).map(|(p, o)| (p - o) * (p - o)).sum();
    Ok((sse / pred.len() as f64).sqrt())
}

/// Observed and modeled series of one gauge over the same days.
#[derive(Clone, Debug, PartialEq)]
pub struct GaugeSeriesPair {
    pub gauge_id: String,
    pub observed: Vec<f64>,
    pub modeled: Vec<f64>,
}

impl GaugeSeriesPair {
    pub fn new(gauge_id: impl Into<String>, observed: Vec<f64>, modeled: Vec<f64>) -> Result<Self> {
        if observed.len() != modeled.len() || observed.len() < 2 {
            return Err(Error::Shape(format!(
                "gauge series need equal lengths of at least 2, got {} and {}",
                observed.len(),
                modeled.len()
            )));
        }
        Ok(GaugeSeriesPair {
            gauge_id: gauge_id.into(),
            observed,
            modeled,
        })
    }

    pub fn rmse(&self) -> f64 {
        rmse(&self.modeled, &self.observed).expect("lengths checked on construction")
    }
}

pub fn nse(pair: &GaugeSeriesPair) -> Result<f64> {
    let obs = &pair.observed;
    let mean = obs.iter().sum::<f64>() / obs.len() as f64;
    let var: f64 = obs.iter().map(|o| (o - mean) * (o - mean)).sum();
    if var == 0.0 || !var.is_finite() {
        return Err(Error::DegenerateInput(format!(
            "gauge {} has zero observed variance",
            pair.gauge_id
        )));
    }
    let sse: f64 = obs.iter().zip(&pair.modeled).map(|(o, m)| (o - m) * (o - m)).sum();
    Ok(1.0 - sse / var)
}

pub fn nnse_from_nse(nse: f64) -> f64 {
    1.0 / (2.0 - nse)
}

pub fn nnse(pair: &GaugeSeriesPair) -> Result<f64> {
    nse(pair).map(nnse_from_nse)
}

/// One line of `metrics.csv`. Aggregate rows use gauge id `ALL`; their
/// `nse`/`nnse` are means over gauges with nonzero observed variance.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricRow {
    pub target: String,
    pub split: String,
    pub gauge_id: String,
    pub rmse: f64,
    pub nse: Option<f64>,
    pub nnse: Option<f64>,
}

pub const AGGREGATE_ID: &str = "ALL";

#[derive(Clone, Debug, Default, PartialEq)]
pub struct MetricsReport {
    pub rows: Vec<MetricRow>,
}

impl MetricsReport {
    pub fn aggregate(&self, target: &str, split: &str) -> Option<&MetricRow> {
        self.rows
            .iter()
            .find(|r| r.target == target && r.split == split && r.gauge_id == AGGREGATE_ID)
    }

    pub fn gauge_rows<'a>(&'a self, target: &'a str, split: &'a str) -> impl Iterator<Item = &'a MetricRow> + 'a {
        self.rows
            .iter()
            .filter(move |r| r.target == target && r.split == split && r.gauge_id != AGGREGATE_ID)
    }

    /// Gauges left out of the NNSE mean for zero observed variance.
    pub fn excluded_gauges<'a>(&'a self, target: &'a str, split: &'a str) -> Vec<&'a str> {
        self.gauge_rows(target, split)
            .filter(|r| r.nnse.is_none())
            .map(|r| r.gauge_id.as_str())
            .collect()
    }

    pub fn extend(&mut self, other: MetricsReport) {
        self.rows.extend(other.rows);
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        for r in &self.rows {
            w.serialize(r)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv(path: &Path) -> Result<Self> {
        let mut r = csv::Reader::from_path(path)?;
        let rows = r.deserialize().collect::<std::result::Result<Vec<MetricRow>, _>>()?;
        Ok(MetricsReport { rows })
    }
}

/// Horizon-1 predictions and observations for every window of a view,
/// arranged as `[target][gauge][window]`.
#[derive(Clone, Debug, PartialEq)]
pub struct SeriesPredictions {
    pub modeled: Vec<Vec<Vec<f64>>>,
    pub observed: Vec<Vec<Vec<f64>>>,
}

impl SeriesPredictions {
    /// Applies `f(target index, value)` to every modeled and observed value.
    pub fn map(&self, f: impl Fn(usize, f64) -> f64) -> SeriesPredictions {
        let apply = |side: &Vec<Vec<Vec<f64>>>| {
            side.iter()
                .enumerate()
                .map(|(t, gauges)| gauges.iter().map(|g| g.iter().map(|v| f(t, *v)).collect()).collect())
                .collect()
        };
        SeriesPredictions {
            modeled: apply(&self.modeled),
            observed: apply(&self.observed),
        }
    }
}

pub fn predict_view(model: &dyn Forecaster, store: &FeatureStore, view: &WindowView, l_seq: usize) -> Result<SeriesPredictions> {
    if view.gauges.is_empty() {
        return Err(Error::Contract("evaluation split has no gauges".into()));
    }
    let batcher = Batcher::new(store, view.clone(), l_seq)?;
    let (n_t, n_g) = (store.n_targets(), view.gauges.len());
    let mut modeled = vec![vec![Vec::with_capacity(batcher.len()); n_g]; n_t];
    let mut observed = modeled.clone();
    for i in 0..batcher.len() {
        let batch = batcher.batch_at(i)?;
        let pred = model.predict(&batch.inputs)?;
        if pred.shape() != batch.targets.shape() {
            return Err(Error::Shape(format!(
                "model predicts {:?}, targets are {:?}",
                pred.shape(),
                batch.targets.shape()
            )));
        }
        for g in 0..n_g {
            for t in 0..n_t {
                modeled[t][g].push(pred[(g, t)]);
                observed[t][g].push(batch.targets[(g, t)]);
            }
        }
    }
    Ok(SeriesPredictions { modeled, observed })
}

/// Per-gauge and aggregate metrics for each target.
pub fn report_from_predictions(preds: &SeriesPredictions, split: &str, gauge_ids: &[String], target_names: &[String]) -> Result<MetricsReport> {
    if preds.modeled.len() != target_names.len() || preds.modeled.iter().any(|g| g.len() != gauge_ids.len()) {
        return Err(Error::Shape("predictions do not match gauge and target names".into()));
    }
    let mut rows = Vec::new();
    for (t, target) in target_names.iter().enumerate() {
        let mut gauge_rows = Vec::with_capacity(gauge_ids.len());
        let (mut sse, mut count) = (0.0, 0usize);
        for (g, id) in gauge_ids.iter().enumerate() {
            let pair = GaugeSeriesPair::new(id.clone(), preds.observed[t][g].clone(), preds.modeled[t][g].clone())?;
            let e = pair.rmse();
            sse += e * e * pair.observed.len() as f64;
            count += pair.observed.len();
            let nse = match nse(&pair) {
                Ok(v) => Some(v),
                Err(Error::DegenerateInput(_)) => None,
                Err(e) => return Err(e),
            };
            gauge_rows.push(MetricRow {
                target: target.clone(),
                split: split.to_string(),
                gauge_id: id.clone(),
                rmse: e,
                nse,
                nnse: nse.map(nnse_from_nse),
            });
        }
        let included: Vec<&MetricRow> = gauge_rows.iter().filter(|r| r.nse.is_some()).collect();
        let mean = |f: fn(&MetricRow) -> f64| {
            (!included.is_empty()).then(|| included.iter().map(|r| f(r)).sum::<f64>() / included.len() as f64)
        };
        rows.push(MetricRow {
            target: target.clone(),
            split: split.to_string(),
            gauge_id: AGGREGATE_ID.to_string(),
            rmse: (sse / count as f64).sqrt(),
            nse: mean(|r| r.nse.unwrap_or(f64::NAN)),
            nnse: mean(|r| r.nnse.unwrap_or(f64::NAN)),
        });
        rows.extend(gauge_rows);
    }
    Ok(MetricsReport { rows })
}

/// Runs `model` over every window of `view` and reports on scaled values.
pub fn evaluate(
    model: &dyn Forecaster,
    store: &FeatureStore,
    view: &WindowView,
    l_seq: usize,
    split: &str,
    gauge_ids: &[String],
    target_names: &[String],
) -> Result<MetricsReport> {
    let preds = predict_view(model, store, view, l_seq)?;
    report_from_predictions(&preds, split, gauge_ids, target_names)
}
