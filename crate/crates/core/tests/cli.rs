//! End-to-end runs of the `hydroseries` binary.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use chrono::NaiveDate;
use hydroseries::cli::{load_data, prepare, RunConfig, CHECKPOINT_FILE, LOSSES_FILE, METRICS_FILE, RESOLVED_CONFIG_FILE};
use hydroseries::dataset::{export, load_dataset, pearson_correlation, Catchment, Dataset, Manifest, SeriesTensor, StaticTable};
use hydroseries::eval::MetricsReport;
use hydroseries::model::{save_checkpoint, CheckpointMeta, ModelParams, ModelShape};
use hydroseries::numerics::{Matrix, Rng};

fn hydroseries(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hydroseries")).args(args).output().unwrap()
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn write_config(dir: &Path, name: &str, body: &str) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, body).unwrap();
    path
}

const SMALL_SYNTH: &str = r#"{"synth": {"n_catchments": 6, "n_days": 120, "seed": 5}}"#;

fn small_config(extra: &str) -> String {
    format!(r#"{{"data": {SMALL_SYNTH}, "encoder_size": 4, "hidden_size": 4, "l_seq": 10{extra}}}"#)
}

#[test]
fn synth_writes_layout_refuses_overwrite_and_validates() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("archive");
    let args = ["synth", "--out", path_str(&out), "--catchments", "50", "--days", "1460", "--seed", "42"];
    let first = hydroseries(&args);
    assert!(first.status.success(), "{}", String::from_utf8_lossy(&first.stderr));
    assert!(out.join("static.csv").is_file());
    let mut series: Vec<_> = std::fs::read_dir(out.join("series"))
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    series.sort();
    assert_eq!(series, ["precipitation.csv", "streamflow.csv", "temperature.csv"]);

    let again = hydroseries(&args);
    assert_eq!(again.status.code(), Some(2));

    let ingest = hydroseries(&["ingest", path_str(&out), "--validate"]);
    assert!(ingest.status.success());
    let report = String::from_utf8(ingest.stdout).unwrap();
    assert!(report.contains("50 catchments, 1460 days"), "{report}");
}

#[test]
fn null_run_then_eval_reproduces_metrics() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), "run.json", &small_config(r#", "successful_epochs": 0"#));
    let run = dir.path().join("run");
    let train = hydroseries(&["train", "--config", path_str(&config), "--out", path_str(&run)]);
    assert!(train.status.success(), "{}", String::from_utf8_lossy(&train.stderr));
    for f in [CHECKPOINT_FILE, LOSSES_FILE, METRICS_FILE, RESOLVED_CONFIG_FILE] {
        assert!(run.join(f).is_file(), "{f} missing");
    }
    // untrained model: the losses file has only its header
    let losses = std::fs::read_to_string(run.join(LOSSES_FILE)).unwrap();
    assert_eq!(losses.lines().count(), 1);

    let eval_dir = dir.path().join("eval");
    let ckpt = run.join(CHECKPOINT_FILE);
    let eval = hydroseries(&["eval", "--config", path_str(&config), "--checkpoint", path_str(&ckpt), "--out", path_str(&eval_dir)]);
    assert!(eval.status.success(), "{}", String::from_utf8_lossy(&eval.stderr));

    let a = MetricsReport::read_csv(&run.join(METRICS_FILE)).unwrap();
    let b = MetricsReport::read_csv(&eval_dir.join(METRICS_FILE)).unwrap();
    assert_eq!(a.rows.len(), b.rows.len());
    for (x, y) in a.rows.iter().zip(&b.rows) {
        assert_eq!((&x.target, &x.split, &x.gauge_id), (&y.target, &y.split, &y.gauge_id));
        assert!((x.rmse - y.rmse).abs() <= 1e-12);
        match (x.nnse, y.nnse) {
            (Some(p), Some(q)) => assert!((p - q).abs() <= 1e-12),
            (p, q) => assert_eq!(p, q),
        }
    }
}

#[test]
fn trained_checkpoint_reproduces_metrics_and_resolved_config_replays() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), "run.json", &small_config(r#", "successful_epochs": 2"#));
    let run = dir.path().join("run");
    assert!(hydroseries(&["train", "--config", path_str(&config), "--out", path_str(&run)]).status.success());

    let eval_dir = dir.path().join("eval");
    let ckpt = run.join(CHECKPOINT_FILE);
    assert!(hydroseries(&["eval", "--config", path_str(&config), "--checkpoint", path_str(&ckpt), "--out", path_str(&eval_dir)])
        .status
        .success());
    let a = MetricsReport::read_csv(&run.join(METRICS_FILE)).unwrap();
    let b = MetricsReport::read_csv(&eval_dir.join(METRICS_FILE)).unwrap();
    for (x, y) in a.rows.iter().zip(&b.rows) {
        assert!((x.rmse - y.rmse).abs() <= 1e-12);
    }

    // the resolved config alone reproduces the run
    let replay = dir.path().join("replay");
    let resolved = run.join(RESOLVED_CONFIG_FILE);
    assert!(hydroseries(&["train", "--config", path_str(&resolved), "--out", path_str(&replay)]).status.success());
    for f in [LOSSES_FILE, CHECKPOINT_FILE] {
        assert_eq!(std::fs::read(run.join(f)).unwrap(), std::fs::read(replay.join(f)).unwrap(), "{f}");
    }
}

#[test]
fn mismatched_features_is_a_data_error() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), "run.json", &small_config(r#", "successful_epochs": 0"#));
    let run = dir.path().join("run");
    assert!(hydroseries(&["train", "--config", path_str(&config), "--out", path_str(&run)]).status.success());

    let narrow = write_config(dir.path(), "narrow.json", &small_config(r#", "features": ["precipitation"]"#));
    let ckpt = run.join(CHECKPOINT_FILE);
    let out = dir.path().join("eval");
    let eval = hydroseries(&["eval", "--config", path_str(&narrow), "--checkpoint", path_str(&ckpt), "--out", path_str(&out)]);
    assert_eq!(eval.status.code(), Some(3));
}

#[test]
fn config_errors_exit_2_and_name_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    for (body, field) in [
        (small_config(r#", "learning_rate": 0.1"#), "learning_rate"),
        (small_config(r#", "encoding_tier": 7"#), "encoding_tier"),
        (small_config(r#", "features": ["streamflow"]"#), "features"),
    ] {
        let config = write_config(dir.path(), "bad.json", &body);
        let run = hydroseries(&["train", "--config", path_str(&config), "--out", path_str(&out)]);
        assert_eq!(run.status.code(), Some(2), "{body}");
        let stderr = String::from_utf8_lossy(&run.stderr);
        assert!(stderr.contains(field), "{stderr}");
    }
    assert_eq!(hydroseries(&["train"]).status.code(), Some(2));
}

#[test]
fn compare_self_negated_and_pearson_oracle() {
    let dir = tempfile::tempdir().unwrap();
    let a_dir = dir.path().join("a");
    assert!(hydroseries(&["synth", "--out", path_str(&a_dir), "--catchments", "2", "--days", "60"]).status.success());
    let d = load_dataset(&a_dir, &Manifest::default()).unwrap();
    let negated: Vec<Matrix> = d.series.values.iter().map(|m| m.map(|v| -v)).collect();
    let b = Dataset::new(
        d.catchments.clone(),
        d.static_table.clone(),
        SeriesTensor::new(d.series.feature_names.clone(), d.series.start_date, negated).unwrap(),
    )
    .unwrap();
    let b_dir = dir.path().join("b");
    export(&b, &b_dir).unwrap();

    let a_file = a_dir.join("series/precipitation.csv");
    let b_file = b_dir.join("series/precipitation.csv");
    let table = |x: &Path, y: &Path| {
        let out = hydroseries(&["compare", path_str(x), path_str(y)]);
        assert!(out.status.success());
        let text = String::from_utf8(out.stdout).unwrap();
        text.lines()
            .skip(1)
            .map(|l| {
                let cols: Vec<&str> = l.split(',').collect();
                (cols[0].to_string(), cols[1].parse::<f64>().unwrap())
            })
            .collect::<Vec<_>>()
    };
    for (_, r) in table(&a_file, &a_file) {
        assert!((r - 1.0).abs() < 1e-12);
    }
    for (_, r) in table(&a_file, &b_file) {
        assert!((r + 1.0).abs() < 1e-12);
    }

    // against an independent reference series, each gauge matches the
    // dataset's Pearson correlation
    let other = dir.path().join("c");
    assert!(hydroseries(&["synth", "--out", path_str(&other), "--catchments", "2", "--days", "60", "--seed", "9"]).status.success());
    let c = load_dataset(&other, &Manifest::default()).unwrap();
    let rows = table(&a_file, &other.join("series/precipitation.csv"));
    let p = d.series.feature("precipitation").unwrap();
    let q = c.series.feature("precipitation").unwrap();
    for (g, (id, r)) in rows.iter().take(2).enumerate() {
        assert_eq!(id, &d.catchments[g].id);
        let expected = pearson_correlation(&p.column(g), &q.column(g)).unwrap();
        assert!((r - expected).abs() < 1e-12, "{id}: {r} vs {expected}");
    }
}

/// Archive where `y` on day `d` is `x` on day `d − 1` (cyclically), so each
/// gauge's `y` has exactly the values of its `x` and the scalers agree.
fn shifted_archive(root: &Path) -> Dataset {
    let (n_days, n_catch) = (90, 5);
    let mut rng = Rng::new(17);
    let x = Matrix::from_fn(n_days, n_catch, |_, _| rng.uniform_range(0.0, 10.0));
    let y = Matrix::from_fn(n_days, n_catch, |d, c| x[((d + n_days - 1) % n_days, c)]);
    let catchments = (0..n_catch)
        .map(|i| Catchment {
            id: format!("g{i}"),
            source: "fixture".into(),
            index: i,
        })
        .collect();
    let statics = StaticTable::new(vec!["area".into()], Matrix::from_fn(n_catch, 1, |_, _| rng.uniform())).unwrap();
    let start = NaiveDate::from_ymd_opt(2001, 3, 1).unwrap();
    let series = SeriesTensor::new(vec!["x".into(), "y".into()], start, vec![x, y]).unwrap();
    let d = Dataset::new(catchments, statics, series).unwrap();
    export(&d, root).unwrap();
    d
}

#[test]
fn perfect_oracle_checkpoint_scores_nnse_one() {
    let dir = tempfile::tempdir().unwrap();
    let archive = dir.path().join("archive");
    shifted_archive(&archive);
    let config_text = format!(
        r#"{{"data": {{"path": "{}"}}, "features": ["x"], "targets": ["y"], "target_only": ["y"],
            "encoding_tier": 1, "include_static": false, "cube_root_features": [], "impute_series": [],
            "l_seq": 5, "encoder_size": 1, "hidden_size": 1}}"#,
        path_str(&archive)
    );
    let config = write_config(dir.path(), "oracle.json", &config_text);
    let cfg = RunConfig::load(&config).unwrap();
    let prep = prepare(&cfg, &load_data(&cfg).unwrap()).unwrap();
    let n_inputs = prep.store.n_inputs();
    assert_eq!(prep.preprocessing.input_names[0], "x");

    // Forget gate shut, input and output gates open: the cell is the
    // candidate, so h = selu(selu(selu(x))) = λ³x for x ≥ 0 and the
    // decoder undoes the remaining λ factors.
    let lambda = 1.050_700_987_355_480_5_f64;
    let mut params = ModelParams::zeros(ModelShape {
        n_inputs,
        encoder_size: 1,
        hidden_size: 1,
        n_targets: 1,
    });
    params.encoder.weight[(0, 0)] = 1.0;
    params.lstm.forget.bias[0] = -800.0;
    params.lstm.input.bias[0] = 800.0;
    params.lstm.output.bias[0] = 800.0;
    params.lstm.candidate.input_weights[(0, 0)] = 1.0;
    params.decoder.weight[(0, 0)] = 1.0 / lambda.powi(4);
    let meta = CheckpointMeta {
        seed: 0,
        l_seq: cfg.l_seq,
        input_names: prep.preprocessing.input_names.clone(),
        target_names: prep.preprocessing.target_names.clone(),
    };
    let ckpt = dir.path().join("oracle.ckpt");
    save_checkpoint(&ckpt, &params, &meta).unwrap();

    let out = dir.path().join("eval");
    let eval = hydroseries(&["eval", "--config", path_str(&config), "--checkpoint", path_str(&ckpt), "--out", path_str(&out)]);
    assert!(eval.status.success(), "{}", String::from_utf8_lossy(&eval.stderr));
    let report = MetricsReport::read_csv(&out.join(METRICS_FILE)).unwrap();
    assert!(!report.rows.is_empty());
    for row in &report.rows {
        assert!(row.rmse < 1e-12, "{row:?}");
        assert!((row.nnse.unwrap() - 1.0).abs() < 1e-12, "{row:?}");
    }
}
