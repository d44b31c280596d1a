//! Random-projection and PCA preprocessing for t-SNE, with an exact and a
//! Barnes-Hut engine, neighbour-based scoring and a benchmark harness.

pub mod error;
pub mod rng;

pub mod bench;
pub mod data_io;
pub mod evaluation;
pub mod reducers;
pub mod tsne;

pub use error::{Error, ErrorKind, Result};
