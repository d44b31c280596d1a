//! t-SNE engine: calibrated input affinities, Student-t output kernel and
//! gradient descent on KL(P‖Q), with exact and Barnes-Hut gradients.

mod affinity;
mod barnes_hut;
mod config;
mod distances;
mod kernel;
mod optimizer;

pub use affinity::{
    calibrate, calibrate_row, conditional_rows, joint_affinities, row_entropy_bits,
    sparse_joint_affinities, AffinityMatrix, ConditionalRow, SparseAffinity,
};
pub use barnes_hut::{barnes_hut_gradient, barnes_hut_repulsion, QuadTree};
pub use config::TsneConfig;
pub use distances::{squared_distances, SquareMatrix};
pub use kernel::{
    exact_gradient, exact_repulsion, kl_divergence, kl_for_embedding, low_dim_affinities, Embedding,
};
pub use optimizer::{initial_embedding, run_tsne, OptimizerTrace, TracePoint, OUTPUT_DIMS};
