use serde::{Deserialize, Serialize};

use crate::numerics::Rng;
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SplitMode {
    /// Hold out whole catchments.
    Location,
    /// Hold out a contiguous suffix of days.
    Time,
}

/// Partition of one axis (catchments or days) into train and validation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SplitAssignment {
    pub mode: SplitMode,
    pub train_indices: Vec<usize>,
    pub val_indices: Vec<usize>,
    pub seed: u64,
}

/// Training share `⌈ratio·n⌉`, kept within `[1, n−1]` so neither side is
/// empty.
fn train_count(n: usize, ratio: f64) -> Result<usize> {
    if !(ratio > 0.0 && ratio < 1.0) {
        return Err(Error::Domain(format!("split ratio must be in (0, 1), got {ratio}")));
    }
    if n < 2 {
        return Err(Error::Domain(format!("cannot split {n} item(s)")));
    }
    // shave representation error so that exact products (0.8·10) stay exact
    let raw = (ratio * n as f64 - 1e-9).ceil() as usize;
    Ok(raw.clamp(1, n - 1))
}

/// Seeded shuffle of catchment indices; the first `⌈ratio·n⌉` train.
pub fn split_by_location(n_catchments: usize, ratio: f64, seed: u64) -> Result<SplitAssignment> {
    let n_train = train_count(n_catchments, ratio)?;
    let mut order: Vec<usize> = (0..n_catchments).collect();
    Rng::new(seed).shuffle(&mut order);
    let mut train_indices = order[..n_train].to_vec();
    let mut val_indices = order[n_train..].to_vec();
    train_indices.sort_unstable();
    val_indices.sort_unstable();
    Ok(SplitAssignment {
        mode: SplitMode::Location,
        train_indices,
        val_indices,
        seed,
    })
}

/// Contiguous prefix of days trains, the suffix validates.
pub fn split_by_time(n_days: usize, ratio: f64) -> Result<SplitAssignment> {
    let n_train = train_count(n_days, ratio)?;
    Ok(SplitAssignment {
        mode: SplitMode::Time,
        train_indices: (0..n_train).collect(),
        val_indices: (n_train..n_days).collect(),
        seed: 0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn location_sizes() {
        let s = split_by_location(671, 0.8, 42).unwrap();
        assert_eq!((s.train_indices.len(), s.val_indices.len()), (537, 134));
        let s = split_by_location(10, 0.8, 1).unwrap();
        assert_eq!((s.train_indices.len(), s.val_indices.len()), (8, 2));
    }

    #[test]
    fn location_is_deterministic() {
        assert_eq!(
            split_by_location(50, 0.8, 9).unwrap(),
            split_by_location(50, 0.8, 9).unwrap()
        );
        assert_ne!(
            split_by_location(50, 0.8, 9).unwrap().val_indices,
            split_by_location(50, 0.8, 10).unwrap().val_indices
        );
    }

    #[test]
    fn time_prefix() {
        let s = split_by_time(10, 0.8).unwrap();
        assert_eq!(s.train_indices, (0..8).collect::<Vec<_>>());
        assert_eq!(s.val_indices, vec![8, 9]);
        let s = split_by_time(7, 0.5).unwrap();
        assert_eq!((s.train_indices.len(), s.val_indices.len()), (4, 3));
    }

    #[test]
    fn domain_errors() {
        assert!(matches!(split_by_location(10, 1.0, 0), Err(Error::Domain(_))));
        assert!(matches!(split_by_location(10, 0.0, 0), Err(Error::Domain(_))));
        assert!(matches!(split_by_time(1, 0.5), Err(Error::Domain(_))));
    }

    #[test]
    fn neither_side_empty() {
        let s = split_by_location(2, 0.8, 3).unwrap();
        assert_eq!((s.train_indices.len(), s.val_indices.len()), (1, 1));
    }
}
