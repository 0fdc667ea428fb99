//! Generate a synthetic archive, write it to disk and read it back.
//!
//! ```text
//! cargo run --example synth_dataset -- /tmp/synth-archive
//! ```

use hydroseries::dataset::{export, load_dataset, Manifest};
use hydroseries::synth::generate_dataset;

fn main() -> hydroseries::Result<()> {
    let out = std::env::args().nth(1).unwrap_or_else(|| "synth-archive".into());
    let dataset = generate_dataset(10, 730, 42)?;
    export(&dataset, &out)?;
    let back = load_dataset(&out, &Manifest::default())?;
    println!("wrote {} catchments x {} days to {out}", back.n_catchments(), back.n_days());
    for name in &back.series.feature_names {
        let m = back.series.feature(name)?;
        let mean = m.values().iter().sum::<f64>() / m.values().len() as f64;
        println!("  {name:<14} mean {mean:8.3}");
    }
    println!("static attributes: {}", back.static_table.attribute_names.join(", "));
    Ok(())
}
