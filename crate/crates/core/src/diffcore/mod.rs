//! Numerical substrate: tensors, a reverse-mode tape, dense networks, Adam and
//! seeded sampling.

pub mod adam;
pub mod mlp;
pub mod params;
pub mod rng;
pub mod tape;
pub mod tensor;

pub use adam::AdamState;
pub use mlp::{Activation, LayerSpec, Mlp};
pub use params::ParamStore;
pub use rng::{sample_standard_normal, Rng};
pub use tape::{Gradients, Tape, Var};
pub use tensor::{gemm_nt, logsumexp, Tensor};
