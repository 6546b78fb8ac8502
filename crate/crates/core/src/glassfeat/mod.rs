//! Local-structure measurements for sheared-glass neighborhoods.

pub mod baseline;
pub mod data;
pub mod features;
pub mod rdf;
pub mod synth;

pub use baseline::{fit_hinge, linear_baseline, BaselineConfig, BaselineResult, LinearModel};
pub use data::{load_dataset, pair_negatives, GlassDataset, Neighborhood, Particle, ParticleType, Split};
pub use features::{
    columns, feature_coordinate, feature_name, featurize, featurize_all, radii, radius_step, structure_function,
    window_width, write_feature_csv, NormStats, N_FEATURES, N_RADII, R_MAX, R_MIN, TRUNCATION_RADIUS,
};
pub use rdf::{compute_rdf, Rdf, DEFAULT_RDF_BIN};
pub use synth::{synth_dataset, synth_shell_radius, SYNTH_SHELL_INDEX};
