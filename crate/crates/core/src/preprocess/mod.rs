//! Feature transforms, PCA reduction of static attributes, and
//! location/time splits. Everything here is fitted on the training
//! partition and then applied unchanged to validation data.

mod pca;
mod scaling;
mod split;

pub use pca::{apply_pca, fit_pca, PcaModel};
pub use scaling::{cube, fit_min_max, signed_cube_root, ScalerParams};
pub use split::{split_by_location, split_by_time, SplitAssignment, SplitMode};
