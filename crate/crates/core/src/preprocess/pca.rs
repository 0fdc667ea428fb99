use log::warn;
use serde::{Deserialize, Serialize};

use crate::numerics::{sym_eigen, Matrix};
use crate::{Error, Result};

/// Slack on the cumulative explained-variance comparison; sums of ratios
/// that should reach 1 can land a few ulps short.
const CUMULATIVE_SLACK: f64 = 1e-12;

/// Principal components of standardized static attributes.
///
/// Columns are centred by `mean` and divided by `std_dev` before
/// projection. Columns that were constant on the fitting rows have
/// `std_dev == 0`, contribute nothing, and carry zero rows in `components`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PcaModel {
    pub mean: Vec<f64>,
    pub std_dev: Vec<f64>,
    /// `n_attributes × k`, orthonormal columns.
    pub components: Matrix,
    /// Descending, length `k`.
    pub explained_variance_ratio: Vec<f64>,
    pub k: usize,
}

/// Fits a PCA keeping the fewest components whose cumulative explained
/// variance reaches `threshold`.
pub fn fit_pca(values: &Matrix, threshold: f64) -> Result<PcaModel> {
    if !(threshold > 0.0 && threshold <= 1.0) {
        return Err(Error::Domain(format!("PCA threshold must be in (0, 1], got {threshold}")));
    }
    let (n, p) = values.shape();
    if n < 2 {
        return Err(Error::DegenerateInput(format!("PCA needs at least two rows, got {n}")));
    }
    if !values.is_finite() {
        return Err(Error::Numeric("PCA input has non-finite values; impute first".into()));
    }
    let mean = values.column_means();
    let mut std_dev = vec![0.0; p];
    for (c, sd) in std_dev.iter_mut().enumerate() {
        let ss: f64 = (0..n).map(|r| (values[(r, c)] - mean[c]).powi(2)).sum();
        *sd = (ss / (n - 1) as f64).sqrt();
    }
    let kept: Vec<usize> = (0..p).filter(|&c| std_dev[c] > 0.0).collect();
    if kept.len() < p {
        warn!("PCA: dropping {} zero-variance column(s)", p - kept.len());
        for c in (0..p).filter(|c| !kept.contains(c)) {
            std_dev[c] = 0.0;
        }
    }
    if kept.is_empty() {
        return Err(Error::DegenerateInput("every static column is constant".into()));
    }

    let z = Matrix::from_fn(n, kept.len(), |r, j| {
        let c = kept[j];
        (values[(r, c)] - mean[c]) / std_dev[c]
    });
    let cov = z.transpose().matmul(&z)?.scale(1.0 / (n - 1) as f64);
    // symmetrize away rounding before the symmetry check
    let cov = cov.add(&cov.transpose())?.scale(0.5);
    let eig = sym_eigen(&cov)?;
    let eigenvalues: Vec<f64> = eig.values.iter().map(|v| v.max(0.0)).collect();
    let total: f64 = eigenvalues.iter().sum();
    let ratios: Vec<f64> = eigenvalues.iter().map(|v| v / total).collect();

    let mut k = 0;
    let mut cumulative = 0.0;
    while k < ratios.len() {
        cumulative += ratios[k];
        k += 1;
        if cumulative >= threshold - CUMULATIVE_SLACK {
            break;
        }
    }

    let mut components = Matrix::zeros(p, k);
    for (j, &c) in kept.iter().enumerate() {
        for i in 0..k {
            components[(c, i)] = eig.vectors[(j, i)];
        }
    }
    Ok(PcaModel {
        mean,
        std_dev,
        components,
        explained_variance_ratio: ratios[..k].to_vec(),
        k,
    })
}

impl PcaModel {
    pub fn n_attributes(&self) -> usize {
        self.mean.len()
    }

    fn standardize(&self, rows: &Matrix) -> Result<Matrix> {
        if rows.cols() != self.n_attributes() {
            return Err(Error::Shape(format!(
                "PCA fitted on {} attributes, got {}",
                self.n_attributes(),
                rows.cols()
            )));
        }
        Ok(Matrix::from_fn(rows.rows(), rows.cols(), |r, c| {
            if self.std_dev[c] == 0.0 {
                0.0
            } else {
                (rows[(r, c)] - self.mean[c]) / self.std_dev[c]
            }
        }))
    }

    /// Component scores, `n_rows × k`.
    pub fn apply(&self, rows: &Matrix) -> Result<Matrix> {
        self.standardize(rows)?.matmul(&self.components)
    }

    /// Maps scores back to attribute space. Exact when `k` spans every
    /// non-constant column.
    pub fn reconstruct(&self, scores: &Matrix) -> Result<Matrix> {
        let z = scores.matmul(&self.components.transpose())?;
        Ok(Matrix::from_fn(z.rows(), z.cols(), |r, c| {
            z[(r, c)] * self.std_dev[c] + self.mean[c]
        }))
    }
}

pub fn apply_pca(model: &PcaModel, rows: &Matrix) -> Result<Matrix> {
    model.apply(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::Rng;

    fn table(seed: u64) -> Matrix {
        let mut rng = Rng::new(seed);
        let base = Matrix::from_fn(10, 3, |_, _| rng.normal(0.0, 1.0));
        // six columns with correlated structure
        Matrix::from_fn(10, 6, |r, c| match c {
            0..=2 => base[(r, c)] * (c + 1) as f64,
            3 => base[(r, 0)] + 0.3 * base[(r, 1)] + 0.05 * rng.normal(0.0, 1.0),
            4 => 10.0 + base[(r, 2)] - base[(r, 1)] + 0.2 * rng.normal(0.0, 1.0),
            _ => rng.uniform_range(-2.0, 2.0),
        })
    }

    #[test]
    fn rank_one() {
        let m = Matrix::from_fn(5, 2, |r, _| r as f64);
        let pca = fit_pca(&m, 0.9).unwrap();
        assert_eq!(pca.k, 1);
        assert!((pca.explained_variance_ratio[0] - 1.0).abs() < 1e-12);

        let one_axis = Matrix::from_fn(5, 3, |r, c| if c == 1 { r as f64 * 2.0 } else { 7.0 });
        let pca = fit_pca(&one_axis, 0.9).unwrap();
        assert_eq!(pca.k, 1);
        assert_eq!(pca.explained_variance_ratio, vec![1.0]);
    }

    #[test]
    fn full_retention() {
        let pca = fit_pca(&table(1), 1.0).unwrap();
        assert_eq!(pca.k, 6);
        let ctc = pca.components.transpose().matmul(&pca.components).unwrap();
        assert!(ctc.max_abs_diff(&Matrix::identity(6)).unwrap() < 1e-8);
    }

    #[test]
    fn centering_and_reconstruction() {
        let m = table(2);
        let pca = fit_pca(&m, 1.0).unwrap();
        let mean_rows = Matrix::from_fn(3, 6, |_, c| pca.mean[c]);
        let scores = pca.apply(&mean_rows).unwrap();
        assert!(scores.values().iter().all(|v| v.abs() < 1e-12));

        let scores = pca.apply(&m).unwrap();
        let back = pca.reconstruct(&scores).unwrap();
        assert!(back.max_abs_diff(&m).unwrap() < 1e-8);
    }

    #[test]
    fn scores_are_decorrelated() {
        let m = table(3);
        let pca = fit_pca(&m, 1.0).unwrap();
        let s = pca.apply(&m).unwrap();
        let cov = s.transpose().matmul(&s).unwrap().scale(1.0 / 9.0);
        let lead = cov[(0, 0)];
        for i in 0..6 {
            for j in 0..6 {
                if i != j {
                    assert!(cov[(i, j)].abs() < 1e-8 * lead);
                }
            }
        }
    }

    #[test]
    fn errors() {
        let m = table(4);
        assert!(matches!(fit_pca(&m, 0.0), Err(Error::Domain(_))));
        assert!(matches!(fit_pca(&m, 1.5), Err(Error::Domain(_))));
        let pca = fit_pca(&m, 0.9).unwrap();
        assert!(matches!(pca.apply(&Matrix::zeros(2, 5)), Err(Error::Shape(_))));
    }

    #[test]
    fn json_round_trip() {
        let pca = fit_pca(&table(5), 0.9).unwrap();
        let text = serde_json::to_string(&pca).unwrap();
        assert!(text.contains("\"explained_variance_ratio\""));
        let back: PcaModel = serde_json::from_str(&text).unwrap();
        assert_eq!(back, pca);
    }
}
