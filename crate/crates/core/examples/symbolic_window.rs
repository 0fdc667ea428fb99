//! Walk the lazily assembled training windows of a prepared run.

use hydroseries::cli::{load_data, prepare, DataSource, RunConfig, SynthSpec};
use hydroseries::model::{batch_size, Batcher};

fn main() -> hydroseries::Result<()> {
    let cfg = RunConfig::new(DataSource::Synth(SynthSpec {
        n_catchments: 20,
        n_days: 365,
        seed: 3,
    }));
    let prep = prepare(&cfg, &load_data(&cfg)?)?;
    let batcher = Batcher::new(&prep.store, prep.train_view.clone(), cfg.l_seq)?;
    let plan = batcher.plan();
    println!(
        "{} windows per epoch, {} values per window ({} gauges x {} inputs x {} days)",
        plan.batches_per_epoch(),
        plan.batch_size(),
        prep.train_view.gauges.len(),
        prep.store.n_inputs(),
        cfg.l_seq
    );
    assert_eq!(plan.batch_size(), batch_size(cfg.l_seq, prep.train_view.gauges.len(), prep.store.n_inputs()));
    for i in [0, batcher.len() - 1] {
        let b = batcher.batch_at(i)?;
        println!("window {i}: target day {}, first input row {:?}", b.target_day, &b.inputs[0].row(0)[..3]);
    }
    println!("peak live windows: {}", batcher.peak_live_batches());
    Ok(())
}
