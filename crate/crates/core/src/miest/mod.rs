//! Mutual-information measurement for channels with Gaussian conditionals.

pub mod bench;
pub mod bounds;
pub mod oracle;
pub mod per_outcome;

pub use bench::{bench_orthogonal, write_bench_csv, BenchConfig, BenchRow, OrthogonalScheme};
pub use bounds::{
    batch_summands, estimate_bounds, infonce_lower, log_density_matrix, loo_upper, BoundsResult,
    EvalBatch, Summands,
};
pub use oracle::{mc_oracle, McEstimate, Mixture, DEFAULT_MC_SAMPLES};
pub use per_outcome::{contributions_by_outcome, per_outcome_contribution, OutcomeContribution};

/// Default evaluation batch size for trained channels.
pub const DEFAULT_K: usize = 1024;
/// Default number of evaluation batches for trained channels.
pub const DEFAULT_B: usize = 8;
