//! Distributed bottleneck training: annealed β, per-channel KL penalties,
//! checkpointed trajectories.

pub mod config;
pub mod data;
pub mod model;
pub mod rundir;
pub mod schedule;
pub mod train;

pub use config::{Batching, TrainConfig};
pub use data::{Batch, Dataset};
pub use model::{channel_prefix, DibModel, LossGraph, LossValue, PredictiveEstimate, DEFAULT_EVAL_SAMPLES};
pub use rundir::RunDir;
pub use schedule::BetaSchedule;
pub use train::{read_log, train_into, train_sweep, write_log, CheckpointSink, MemorySink, TrainLogRecord, TrainOutcome};
