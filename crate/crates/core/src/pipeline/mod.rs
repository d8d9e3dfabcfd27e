//! End-to-end operations: train, sense, reconstruct, evaluate, sweep, time.

mod codec;
mod eval;
mod measurement;
mod train;

pub use codec::{reconstruct, reconstruct_blocks, sense};
pub use eval::{evaluate, sweep, time_reconstruction, SweepAxis, SweepRow, SweepTable, Timing};
pub use measurement::{MeasurementSet, MEASUREMENT_MAGIC, MEASUREMENT_VERSION};
pub use train::{
    dataset_mse, model_checksum, train, train_model, train_on, TrainConfig, TrainHistory,
    DEFAULT_BATCH_SIZE, DEFAULT_EPOCHS, DEFAULT_LEARNING_RATE, DEFAULT_PATCH_COUNT, DEFAULT_SEED,
};
