//! Sequential sweeps over run configurations.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::config::{RunConfig, Transform};
use super::pipeline::{load_data, run_train_on};
use crate::encodings::EncodingConfig;
use crate::preprocess::SplitMode;
use crate::Result;

pub const MATRIX_FILE: &str = "matrix.csv";
pub const MATRIX_SUMMARY_FILE: &str = "matrix_summary.csv";

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum MatrixKind {
    /// Encoding tiers 1–4, each with and without static attributes.
    Encodings,
    /// Min-max scaling with and without the cube-root transform.
    Transforms,
}

/// Validation result of one run for one target; target `ALL` pools every
/// target.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MatrixRow {
    pub run: String,
    pub encoding_tier: u8,
    pub include_static: bool,
    pub transform: String,
    pub split_mode: SplitMode,
    pub seed: u64,
    pub epochs: usize,
    pub target: String,
    pub val_rmse: f64,
    pub val_nnse: Option<f64>,
}

/// Per-configuration means over seeds.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MatrixSummaryRow {
    pub encoding_tier: u8,
    pub include_static: bool,
    pub transform: String,
    pub split_mode: SplitMode,
    pub target: String,
    pub runs: usize,
    pub mean_val_rmse: f64,
    pub mean_val_nnse: Option<f64>,
}

pub fn matrix_variants(base: &RunConfig, kind: MatrixKind, n_seeds: usize) -> Vec<(String, RunConfig)> {
    let seeds: Vec<u64> = (0..n_seeds as u64).map(|i| base.seed + i).collect();
    let mut out = Vec::new();
    let shapes: Vec<(u8, bool, Transform)> = match kind {
        MatrixKind::Encodings => EncodingConfig::all()
            .into_iter()
            .map(|e| (e.tier, e.include_static, base.transform))
            .collect(),
        MatrixKind::Transforms => [Transform::MinMax, Transform::MinMaxCubeRoot]
            .into_iter()
            .map(|t| (base.encoding_tier, base.include_static, t))
            .collect(),
    };
    for (tier, include_static, transform) in shapes {
        for &seed in &seeds {
            let mut cfg = base.clone();
            cfg.encoding_tier = tier;
            cfg.include_static = include_static;
            cfg.transform = transform;
            cfg.seed = seed;
            let name = format!(
                "tier{tier}_{}_{}_seed{seed}",
                if include_static { "static" } else { "nostatic" },
                match transform {
                    Transform::MinMax => "minmax",
                    Transform::MinMaxCubeRoot => "cuberoot",
                }
            );
            out.push((name, cfg));
        }
    }
    out
}

/// Runs every variant into `out_dir/<run>/` and writes `matrix.csv` and
/// `matrix_summary.csv`.
pub fn run_matrix(base: &RunConfig, kind: MatrixKind, n_seeds: usize, out_dir: &Path) -> Result<(Vec<MatrixRow>, Vec<MatrixSummaryRow>)> {
    base.validate()?;
    let dataset = load_data(base)?;
    std::fs::create_dir_all(out_dir)?;
    let mut rows = Vec::new();
    for (name, cfg) in matrix_variants(base, kind, n_seeds.max(1)) {
        log::info!("matrix run {name}");
        let outcome = run_train_on(&cfg, &dataset, &out_dir.join(&name))?;
        let row = |target: &str, val_rmse: f64, val_nnse: Option<f64>| MatrixRow {
            run: name.clone(),
            encoding_tier: cfg.encoding_tier,
            include_static: cfg.include_static,
            transform: cfg.transform.name().to_string(),
            split_mode: cfg.split.mode,
            seed: cfg.seed,
            epochs: outcome.history.len(),
            target: target.to_string(),
            val_rmse,
            val_nnse,
        };
        let (mut sq, mut nnse_sum, mut nnse_n) = (0.0, 0.0, 0usize);
        for target in &cfg.targets {
            let agg = outcome
                .metrics
                .aggregate(target, "val")
                .expect("every target has a val aggregate");
            sq += agg.rmse * agg.rmse;
            if let Some(n) = agg.nnse {
                nnse_sum += n;
                nnse_n += 1;
            }
            rows.push(row(target, agg.rmse, agg.nnse));
        }
        let pooled = (sq / cfg.targets.len() as f64).sqrt();
        rows.push(row("ALL", pooled, (nnse_n > 0).then(|| nnse_sum / nnse_n as f64)));
    }
    let summary = summarize(&rows);
    let mut w = csv::Writer::from_path(out_dir.join(MATRIX_FILE))?;
    for r in &rows {
        w.serialize(r)?;
    }
    w.flush()?;
    let mut w = csv::Writer::from_path(out_dir.join(MATRIX_SUMMARY_FILE))?;
    for r in &summary {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok((rows, summary))
}

pub fn summarize(rows: &[MatrixRow]) -> Vec<MatrixSummaryRow> {
    let mut groups: BTreeMap<(u8, bool, String, String, usize), Vec<&MatrixRow>> = BTreeMap::new();
    let mut target_order: Vec<&str> = Vec::new();
    for r in rows {
        if !target_order.contains(&r.target.as_str()) {
            target_order.push(&r.target);
        }
        let t = target_order.iter().position(|t| *t == r.target).expect("just inserted");
        let mode = format!("{:?}", r.split_mode);
        groups
            .entry((r.encoding_tier, r.include_static, r.transform.clone(), mode, t))
            .or_default()
            .push(r);
    }
    groups
        .into_values()
        .map(|g| {
            let n = g.len() as f64;
            let nnse: Vec<f64> = g.iter().filter_map(|r| r.val_nnse).collect();
            MatrixSummaryRow {
                encoding_tier: g[0].encoding_tier,
                include_static: g[0].include_static,
                transform: g[0].transform.clone(),
                split_mode: g[0].split_mode,
                target: g[0].target.clone(),
                runs: g.len(),
                mean_val_rmse: g.iter().map(|r| r.val_rmse).sum::<f64>() / n,
                mean_val_nnse: (nnse.len() == g.len()).then(|| nnse.iter().sum::<f64>() / n),
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cli::config::{DataSource, SynthSpec};

    fn base() -> RunConfig {
        RunConfig::new(DataSource::Synth(SynthSpec {
            n_catchments: 4,
            n_days: 40,
            seed: 1,
        }))
    }

    #[test]
    fn variant_counts() {
        let b = base();
        let enc = matrix_variants(&b, MatrixKind::Encodings, 1);
        assert_eq!(enc.len(), 8);
        assert_eq!(enc[0].0, "tier1_nostatic_minmax_seed42");
        let tr = matrix_variants(&b, MatrixKind::Transforms, 3);
        assert_eq!(tr.len(), 6);
        assert_eq!(tr[5].0, "tier3_static_cuberoot_seed44");
    }

    #[test]
    fn summary_means() {
        let mk = |seed, rmse| MatrixRow {
            run: String::new(),
            encoding_tier: 3,
            include_static: true,
            transform: "minmax".into(),
            split_mode: SplitMode::Location,
            seed,
            epochs: 1,
            target: "q".into(),
            val_rmse: rmse,
            val_nnse: Some(rmse),
        };
        let s = summarize(&[mk(1, 0.2), mk(2, 0.4)]);
        assert_eq!(s.len(), 1);
        assert_eq!(s[0].runs, 2);
        assert!((s[0].mean_val_rmse - 0.3).abs() < 1e-15);
    }
}
