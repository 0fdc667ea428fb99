//! Correlate the precipitation series of two archives gauge by gauge.

use hydroseries::cli::{compare_series, write_correlations};
use hydroseries::dataset::{export, Dataset, SeriesTensor};
use hydroseries::numerics::{Matrix, Rng};
use hydroseries::synth::generate_dataset;

fn main() -> hydroseries::Result<()> {
    let dir = std::env::temp_dir().join("hydroseries-compare-sources");
    let _ = std::fs::remove_dir_all(&dir);
    let a = generate_dataset(4, 365, 8)?;

    // a second "source": the same rain with multiplicative gauge error
    let mut rng = Rng::new(9);
    let noisy: Vec<_> = a
        .series
        .values
        .iter()
        .map(|m| Matrix::from_fn(m.rows(), m.cols(), |r, c| m[(r, c)] * (1.0 + 0.3 * rng.normal(0.0, 1.0))))
        .collect();
    let b = Dataset::new(
        a.catchments.clone(),
        a.static_table.clone(),
        SeriesTensor::new(a.series.feature_names.clone(), a.series.start_date, noisy)?,
    )?;
    export(&a, dir.join("a"))?;
    export(&b, dir.join("b"))?;

    let rows = compare_series(&dir.join("a/series/precipitation.csv"), &dir.join("b/series/precipitation.csv"))?;
    write_correlations(&rows, std::io::stdout())
}
