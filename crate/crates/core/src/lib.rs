pub mod analysis;
pub mod circuit;
pub mod cli;
pub mod diffcore;
pub mod encoder;
pub mod error;
pub mod glassfeat;
pub mod kv;
pub mod miest;
pub mod objective;

pub use error::{Error, Result};
