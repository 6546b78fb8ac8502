//! Post-processing of trained runs: information plane, allocation,
//! relevant channels and distinguishability matrices.

pub mod disting;
pub mod measure;
pub mod plane;

pub use disting::{
    bhattacharyya, block_summary, distinguishability, quantile_probes, similarity_matrix, BlockSummary,
    DistinguishabilityMatrix, Similarity, DEFAULT_PROBES,
};
pub use measure::{
    measure_checkpoint, measure_run, read_measure_csv, write_measure_csv, CheckpointMeasure, MeasureConfig,
    MeasureContext,
};
pub use plane::{
    assemble_plane, channel_allocation, compression_branch, interpolate_predictive, max_monotonicity_violation, nearest_point,
    plane_from_measures, top_k_channels, write_plane_csv, Allocation, InfoPlanePoint, TOP_K_THRESHOLD_BITS,
};
