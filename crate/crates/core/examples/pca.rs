//! Reduce the synthetic static attributes with PCA.

use hydroseries::preprocess::fit_pca;
use hydroseries::synth::generate_dataset;

fn main() -> hydroseries::Result<()> {
    let dataset = generate_dataset(40, 10, 1)?;
    let table = &dataset.static_table;
    for threshold in [0.5, 0.9, 1.0] {
        let model = fit_pca(&table.values, threshold)?;
        let ratios: Vec<String> = model.explained_variance_ratio.iter().map(|r| format!("{r:.3}")).collect();
        println!("threshold {threshold:.1}: keep {} of {} [{}]", model.k, table.n_attributes(), ratios.join(" "));
    }
    let model = fit_pca(&table.values, 0.9)?;
    let scores = model.apply(&table.values)?;
    println!("scores: {} x {}", scores.rows(), scores.cols());
    Ok(())
}
