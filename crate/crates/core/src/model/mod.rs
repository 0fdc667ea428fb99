//! Dense-encoder → LSTM → dense-decoder forecaster with BPTT, Adam,
//! symbolic-window batching and the successful-epoch training loop.

mod activations;
mod adam;
mod batch;
mod checkpoint;
mod lstm;
mod network;
mod params;
mod train;

pub use activations::{selu, selu_grad, sigmoid, SELU_ALPHA, SELU_LAMBDA};
pub use adam::{adam_step, AdamState, DEFAULT_LEARNING_RATE};
pub use batch::{batch_size, batches_per_epoch, Batch, BatchPlan, Batcher, FeatureStore, WindowView};
pub use checkpoint::{
    decode_checkpoint, encode_checkpoint, load_checkpoint, save_checkpoint, Checkpoint, CheckpointMeta,
    CHECKPOINT_FORMAT, CHECKPOINT_VERSION,
};
pub use lstm::{lstm_cell_forward, lstm_step, lstm_step_backward, CellCache, StepGrads};
pub use network::{backward, forward, forward_with_masks, mse_loss, DropoutMasks, ForwardCache, Mode};
pub use params::{
    DenseParams, GateParams, Gradients, LstmParams, ModelParams, ModelShape, DEFAULT_DROPOUT, TENSOR_NAMES,
};
pub use train::{train, train_from, window_rmse, EpochRecord, Forecaster, LossHistory, TrainConfig};
