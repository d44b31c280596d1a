//! Dimension sweeps, their CSV records and SVG figures.

mod config;
mod dims;
mod sweep;
pub mod svg;

pub use config::SweepConfig;
pub use dims::sweep_dimensions;
pub use svg::{emit_ratio_figure, emit_scatter_figure, FigureKind, FigureSpec, Series};
pub use sweep::{
    average_repeats, read_records, run_seed, run_single, run_sweep, run_sweep_on, sweep_plan, tsne_seed,
    RecordWriter, SweepRow, CSV_HEADER, ERROR_MARKER,
};
