//! Dataset → scaled feature store → trained model → metrics.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::config::{DataSource, RunConfig, Transform};
use crate::dataset::{impute_series_mean, impute_static_means, load_dataset, Dataset, Manifest};
use crate::encodings::build_encoding_set;
use crate::eval::{predict_view, report_from_predictions, MetricsReport};
use crate::model::{
    load_checkpoint, save_checkpoint, train, CheckpointMeta, FeatureStore, LossHistory, ModelParams, WindowView,
};
use crate::numerics::Matrix;
use crate::preprocess::{
    cube, fit_min_max, fit_pca, signed_cube_root, split_by_location, split_by_time, PcaModel, ScalerParams,
    SplitAssignment, SplitMode,
};
use crate::synth::generate_dataset;
use crate::{Error, Result};

pub const CHECKPOINT_FILE: &str = "model.ckpt";
pub const LOSSES_FILE: &str = "losses.csv";
pub const METRICS_FILE: &str = "metrics.csv";
pub const PHYSICAL_METRICS_FILE: &str = "metrics_physical.csv";
pub const RESOLVED_CONFIG_FILE: &str = "resolved-config.json";
pub const PREPROCESS_FILE: &str = "preprocess.json";

/// Everything fitted during preparation, saved as `preprocess.json`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Preprocessing {
    pub split: SplitAssignment,
    /// One entry per series the run touches.
    pub series_scaler: ScalerParams,
    pub cube_rooted: Vec<String>,
    pub static_scaler: Option<ScalerParams>,
    pub pca: Option<PcaModel>,
    pub input_names: Vec<String>,
    pub target_names: Vec<String>,
}

impl Preprocessing {
    /// Maps a scaled value of target `t` back to physical units.
    pub fn to_physical(&self, t: usize, y: f64) -> f64 {
        let name = &self.target_names[t];
        let idx = self.series_scaler.index_of(name).expect("every target has a scaler");
        let x = self.series_scaler.invert(idx, y);
        if self.cube_rooted.contains(name) {
            cube(x)
        } else {
            x
        }
    }
}

pub struct Prepared {
    pub store: FeatureStore,
    pub train_view: WindowView,
    pub val_view: WindowView,
    pub train_gauge_ids: Vec<String>,
    pub val_gauge_ids: Vec<String>,
    pub preprocessing: Preprocessing,
}

pub fn load_data(cfg: &RunConfig) -> Result<Dataset> {
    match &cfg.data {
        DataSource::Path(p) => load_dataset(p, &Manifest::with_features(cfg.series_names())),
        DataSource::Synth(s) => generate_dataset(s.n_catchments, s.n_days, s.seed),
    }
}

fn partition_values(m: &Matrix, split: &SplitAssignment) -> Vec<f64> {
    match split.mode {
        SplitMode::Location => (0..m.rows())
            .flat_map(|d| split.train_indices.iter().map(move |&c| m[(d, c)]))
            .collect(),
        SplitMode::Time => split.train_indices.iter().flat_map(|&d| m.row(d).to_vec()).collect(),
    }
}

/// Min-max scales each column of `m` with bounds fitted on `fit_rows`.
fn scale_columns(m: &Matrix, fit_rows: &[usize], names: Vec<String>) -> Result<(Matrix, ScalerParams)> {
    let cols: Vec<Vec<f64>> = (0..m.cols())
        .map(|c| fit_rows.iter().map(|&r| m[(r, c)]).collect())
        .collect();
    let refs: Vec<&[f64]> = cols.iter().map(Vec::as_slice).collect();
    let scaler = fit_min_max(&refs)?.with_names(names);
    let scaled = Matrix::from_fn(m.rows(), m.cols(), |r, c| scaler.apply(c, m[(r, c)]));
    Ok((scaled, scaler))
}

pub fn prepare(cfg: &RunConfig, dataset: &Dataset) -> Result<Prepared> {
    cfg.validate()?;
    let series_names = cfg.series_names();
    let mut data = dataset.clone();
    for name in &cfg.impute_series {
        if series_names.contains(name) {
            let idx = data.series.feature_index(name)?;
            if data.series.missing_count(idx) > 0 {
                data = impute_series_mean(&data, name)?;
            }
        }
    }
    for name in &series_names {
        let idx = data.series.feature_index(name)?;
        if data.series.missing_count(idx) > 0 {
            return Err(Error::Imputation(format!(
                "series `{name}` has missing values; list it in impute_series"
            )));
        }
    }
    if cfg.include_static && data.static_table.missing_count() > 0 {
        data = impute_static_means(&data)?;
    }

    let (n_days, n_catch) = (data.n_days(), data.n_catchments());
    let split = match cfg.split.mode {
        SplitMode::Location => split_by_location(n_catch, cfg.split.ratio, cfg.split_seed())?,
        SplitMode::Time => split_by_time(n_days, cfg.split.ratio)?,
    };

    let cube_rooted: Vec<String> = match cfg.transform {
        Transform::MinMax => Vec::new(),
        Transform::MinMaxCubeRoot => series_names
            .iter()
            .filter(|n| cfg.cube_root_features.contains(n))
            .cloned()
            .collect(),
    };
    let transformed: Vec<Matrix> = series_names
        .iter()
        .map(|name| {
            let m = data.series.feature(name)?;
            Ok(if cube_rooted.contains(name) {
                m.map(signed_cube_root)
            } else {
                m.clone()
            })
        })
        .collect::<Result<_>>()?;
    let fit_cols: Vec<Vec<f64>> = transformed.iter().map(|m| partition_values(m, &split)).collect();
    let refs: Vec<&[f64]> = fit_cols.iter().map(Vec::as_slice).collect();
    let series_scaler = fit_min_max(&refs)?.with_names(series_names.clone());
    for f in series_scaler.degenerate_features() {
        log::warn!("series `{}` is constant on the training partition", series_names[f]);
    }
    let scaled: Vec<Matrix> = transformed
        .iter()
        .enumerate()
        .map(|(i, m)| m.map(|x| series_scaler.apply(i, x)))
        .collect();
    let pick = |name: &String| scaled[series_names.iter().position(|n| n == name).expect("known series")].clone();
    let observed: Vec<Matrix> = cfg.features.iter().map(pick).collect();
    let targets: Vec<Matrix> = cfg.targets.iter().map(pick).collect();

    let static_fit_rows: Vec<usize> = match split.mode {
        SplitMode::Location => split.train_indices.clone(),
        SplitMode::Time => (0..n_catch).collect(),
    };
    let (static_features, static_names, static_scaler, pca) = if !cfg.include_static
        || data.static_table.n_attributes() == 0
    {
        (Matrix::zeros(n_catch, 0), Vec::new(), None, None)
    } else if cfg.use_pca {
        let fit = data.static_table.values.select_rows(&static_fit_rows);
        let pca = fit_pca(&fit, cfg.pca_threshold)?;
        let scores = pca.apply(&data.static_table.values)?;
        let names: Vec<String> = (1..=pca.k).map(|i| format!("pca_{i}")).collect();
        let (scaled, scaler) = scale_columns(&scores, &static_fit_rows, names.clone())?;
        (scaled, names, Some(scaler), Some(pca))
    } else {
        let names = data.static_table.attribute_names.clone();
        let (scaled, scaler) = scale_columns(&data.static_table.values, &static_fit_rows, names.clone())?;
        (scaled, names, Some(scaler), None)
    };

    let enc = build_encoding_set(cfg.encoding(), n_days, n_catch)?;
    let mut input_names = cfg.features.clone();
    input_names.extend(static_names);
    input_names.extend(enc.space_channel_names.iter().cloned());
    input_names.extend(enc.time_channel_names.iter().cloned());

    let store = FeatureStore {
        observed,
        static_features,
        space: enc.per_catchment,
        time: enc.per_day,
        targets,
    };
    store.validate()?;

    let ids = data.gauge_ids();
    let (train_view, val_view) = match split.mode {
        SplitMode::Location => (
            WindowView {
                gauges: split.train_indices.clone(),
                first_day: 0,
                n_days,
            },
            WindowView {
                gauges: split.val_indices.clone(),
                first_day: 0,
                n_days,
            },
        ),
        SplitMode::Time => {
            let n_train = split.train_indices.len();
            // validation windows may look back into training days; their
            // targets are validation days only
            let first = n_train.saturating_sub(cfg.l_seq);
            (
                WindowView {
                    gauges: (0..n_catch).collect(),
                    first_day: 0,
                    n_days: n_train,
                },
                WindowView {
                    gauges: (0..n_catch).collect(),
                    first_day: first,
                    n_days: n_days - first,
                },
            )
        }
    };
    let gauge_ids = |v: &WindowView| v.gauges.iter().map(|&g| ids[g].clone()).collect::<Vec<_>>();
    Ok(Prepared {
        train_gauge_ids: gauge_ids(&train_view),
        val_gauge_ids: gauge_ids(&val_view),
        store,
        train_view,
        val_view,
        preprocessing: Preprocessing {
            split,
            series_scaler,
            cube_rooted,
            static_scaler,
            pca,
            input_names,
            target_names: cfg.targets.clone(),
        },
    })
}

/// Scaled metrics for the train and validation splits, plus the same on
/// physical units.
pub fn evaluate_prepared(params: &ModelParams, prep: &Prepared, l_seq: usize) -> Result<(MetricsReport, MetricsReport)> {
    let mut scaled = MetricsReport::default();
    let mut physical = MetricsReport::default();
    let targets = &prep.preprocessing.target_names;
    for (split, view, ids) in [
        ("train", &prep.train_view, &prep.train_gauge_ids),
        ("val", &prep.val_view, &prep.val_gauge_ids),
    ] {
        let preds = predict_view(params, &prep.store, view, l_seq)?;
        scaled.extend(report_from_predictions(&preds, split, ids, targets)?);
        let phys = preds.map(|t, y| prep.preprocessing.to_physical(t, y));
        physical.extend(report_from_predictions(&phys, split, ids, targets)?);
    }
    Ok((scaled, physical))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    std::fs::write(path, serde_json::to_string_pretty(value)? + "\n")?;
    Ok(())
}

pub struct RunOutcome {
    pub out_dir: PathBuf,
    pub params: ModelParams,
    pub history: LossHistory,
    pub metrics: MetricsReport,
    pub physical_metrics: MetricsReport,
}

impl RunOutcome {
    /// Final-epoch validation RMSE over all targets jointly, or the
    /// untrained model's when no epoch ran.
    pub fn final_val_rmse(&self) -> Option<f64> {
        self.history.last().map(|r| r.val_rmse)
    }
}

/// Trains one configuration and writes its run directory.
pub fn run_train(cfg: &RunConfig, out_dir: &Path) -> Result<RunOutcome> {
    let dataset = load_data(cfg)?;
    run_train_on(cfg, &dataset, out_dir)
}

pub fn run_train_on(cfg: &RunConfig, dataset: &Dataset, out_dir: &Path) -> Result<RunOutcome> {
    let prep = prepare(cfg, dataset)?;
    std::fs::create_dir_all(out_dir)?;
    write_json(&out_dir.join(RESOLVED_CONFIG_FILE), &cfg.resolved())?;
    write_json(&out_dir.join(PREPROCESS_FILE), &prep.preprocessing)?;

    let train_cfg = cfg.train_config();
    let (params, history) = train(&train_cfg, &prep.store, &prep.train_view, Some(&prep.val_view))?;
    history.write_csv(&out_dir.join(LOSSES_FILE))?;
    let meta = CheckpointMeta {
        seed: cfg.seed,
        l_seq: cfg.l_seq,
        input_names: prep.preprocessing.input_names.clone(),
        target_names: prep.preprocessing.target_names.clone(),
    };
    save_checkpoint(&out_dir.join(CHECKPOINT_FILE), &params, &meta)?;

    let (metrics, physical_metrics) = evaluate_prepared(&params, &prep, cfg.l_seq)?;
    metrics.write_csv(&out_dir.join(METRICS_FILE))?;
    if cfg.physical_units {
        physical_metrics.write_csv(&out_dir.join(PHYSICAL_METRICS_FILE))?;
    }
    Ok(RunOutcome {
        out_dir: out_dir.to_path_buf(),
        params,
        history,
        metrics,
        physical_metrics,
    })
}

/// Re-evaluates a checkpoint on the configured data and split.
pub fn run_eval(cfg: &RunConfig, checkpoint: &Path, out_dir: &Path) -> Result<MetricsReport> {
    let ckpt = load_checkpoint(checkpoint)?;
    let dataset = load_data(cfg)?;
    let prep = prepare(cfg, &dataset)?;
    let shape = ckpt.params.shape();
    if shape.n_inputs != prep.store.n_inputs() || shape.n_targets != prep.store.n_targets() {
        return Err(Error::Shape(format!(
            "checkpoint expects {} inputs and {} targets, data provides {} and {}",
            shape.n_inputs,
            shape.n_targets,
            prep.store.n_inputs(),
            prep.store.n_targets()
        )));
    }
    if ckpt.meta.input_names != prep.preprocessing.input_names || ckpt.meta.target_names != prep.preprocessing.target_names {
        return Err(Error::Shape(format!(
            "checkpoint inputs {:?} do not match configured inputs {:?}",
            ckpt.meta.input_names, prep.preprocessing.input_names
        )));
    }
    let (metrics, physical) = evaluate_prepared(&ckpt.params, &prep, ckpt.meta.l_seq)?;
    std::fs::create_dir_all(out_dir)?;
    metrics.write_csv(&out_dir.join(METRICS_FILE))?;
    if cfg.physical_units {
        physical.write_csv(&out_dir.join(PHYSICAL_METRICS_FILE))?;
    }
    Ok(metrics)
}
