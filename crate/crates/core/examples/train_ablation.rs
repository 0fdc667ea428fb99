//! Encoding/static ablation on synthetic data.
//!
//! ```text
//! cargo run --release --example train_ablation -- [epochs] [width]
//! ```

use std::time::Instant;

use hydroseries::cli::{load_data, prepare, DataSource, RunConfig, SynthSpec};
use hydroseries::model::train;

fn main() -> hydroseries::Result<()> {
    let mut args = std::env::args().skip(1);
    let epochs: usize = args.next().and_then(|a| a.parse().ok()).unwrap_or(5);
    let width: usize = args.next().and_then(|a| a.parse().ok()).unwrap_or(16);

    let mut cfg = RunConfig::new(DataSource::Synth(SynthSpec {
        n_catchments: 50,
        n_days: 1460,
        seed: 42,
    }));
    cfg.successful_epochs = epochs;
    cfg.encoder_size = width;
    cfg.hidden_size = width;
    let data = load_data(&cfg)?;

    for (tier, include_static) in [(1, false), (1, true), (3, false), (3, true)] {
        cfg.encoding_tier = tier;
        cfg.include_static = include_static;
        let prep = prepare(&cfg, &data)?;
        let start = Instant::now();
        let (_, history) = train(&cfg.train_config(), &prep.store, &prep.train_view, Some(&prep.val_view))?;
        let last = history.last().expect("at least one epoch");
        println!(
            "tier {tier} static {include_static:5}: {} epochs, train {:.5}, val {:.5} ({:.1}s)",
            history.len(),
            last.train_rmse,
            last.val_rmse,
            start.elapsed().as_secs_f64()
        );
    }
    Ok(())
}
