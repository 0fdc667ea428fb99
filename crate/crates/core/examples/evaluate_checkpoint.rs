//! Train briefly, save a checkpoint, then re-evaluate it from disk.

use hydroseries::cli::{run_eval, run_train, DataSource, RunConfig, SynthSpec, CHECKPOINT_FILE};

fn main() -> hydroseries::Result<()> {
    let mut cfg = RunConfig::new(DataSource::Synth(SynthSpec {
        n_catchments: 30,
        n_days: 365,
        seed: 4,
    }));
    cfg.successful_epochs = 3;
    cfg.encoder_size = 8;
    cfg.hidden_size = 8;
    let dir = std::env::temp_dir().join("hydroseries-evaluate-checkpoint");
    let _ = std::fs::remove_dir_all(&dir);

    let outcome = run_train(&cfg, &dir.join("run"))?;
    let report = run_eval(&cfg, &dir.join("run").join(CHECKPOINT_FILE), &dir.join("eval"))?;
    for t in ["precipitation", "temperature", "streamflow"] {
        let trained = outcome.metrics.aggregate(t, "val").expect("row");
        let reloaded = report.aggregate(t, "val").expect("row");
        println!(
            "{t:<14} val rmse {:.5} (reloaded {:.5}) nnse {:.4}",
            trained.rmse,
            reloaded.rmse,
            reloaded.nnse.unwrap_or(f64::NAN)
        );
    }
    println!("artifacts in {}", dir.display());
    Ok(())
}
