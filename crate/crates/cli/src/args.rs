use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(name = "rptsne", version, about = "Random projection ahead of t-SNE: embed, score and benchmark")]
pub struct Cli {
    /// Master seed; every random stream is derived from it.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,

    /// Worker threads (defaults to all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    /// Directory for generated files.
    #[arg(long, global = true, default_value = ".")]
    pub out_dir: PathBuf,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Convert an IDX or CSV dataset to the raw f64 format.
    Convert(ConvertArgs),
    /// Reduce, embed and score one dataset.
    Tsne(TsneArgs),
    /// Run the dimension sweep and write sweep.csv plus ratio figures.
    Sweep(SweepArgs),
    /// Score a stored embedding.
    Score(ScoreArgs),
    /// Draw figures from stored results.
    Plot(PlotArgs),
}

#[derive(Debug, Args)]
pub struct DatasetArgs {
    /// IDX image file (optionally gzipped).
    #[arg(long, requires = "idx_labels", conflicts_with_all = ["raw", "csv"])]
    pub idx_images: Option<PathBuf>,

    /// IDX label file matching --idx-images.
    #[arg(long)]
    pub idx_labels: Option<PathBuf>,

    /// Raw little-endian f64 matrix with a key=value sidecar.
    #[arg(long, conflicts_with = "csv")]
    pub raw: Option<PathBuf>,

    /// Sidecar for --raw (defaults to the matrix path plus `.meta`).
    #[arg(long, requires = "raw")]
    pub sidecar: Option<PathBuf>,

    /// CSV with the label in the last column.
    #[arg(long)]
    pub csv: Option<PathBuf>,

    /// The CSV has a header row.
    #[arg(long, requires = "csv")]
    pub csv_header: bool,

    /// Keep IDX pixel bytes unscaled instead of dividing by 255.
    #[arg(long)]
    pub no_normalize: bool,

    /// Draw this many rows at random (seeded by --data-seed).
    #[arg(long)]
    pub subsample: Option<usize>,

    /// Subsampling seed (defaults to --seed).
    #[arg(long)]
    pub data_seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct TsneOptions {
    #[arg(long)]
    pub perplexity: Option<f64>,
    #[arg(long)]
    pub n_iter: Option<usize>,
    /// Barnes-Hut opening parameter; 0 runs the exact engine.
    #[arg(long)]
    pub theta: Option<f64>,
    #[arg(long)]
    pub learning_rate: Option<f64>,
    #[arg(long)]
    pub early_exaggeration: Option<f64>,
    #[arg(long)]
    pub exaggeration_iters: Option<usize>,
}

#[derive(Debug, Args)]
pub struct ConvertArgs {
    #[command(flatten)]
    pub data: DatasetArgs,

    /// Output matrix file name inside --out-dir.
    #[arg(long, default_value = "data.f64")]
    pub output: PathBuf,
}

#[derive(Debug, Args)]
pub struct TsneArgs {
    #[command(flatten)]
    pub data: DatasetArgs,

    #[command(flatten)]
    pub tsne: TsneOptions,

    /// none, random_projection (rp) or pca.
    #[arg(long, default_value = "none")]
    pub reducer: String,

    /// Target dimension for the reducer.
    #[arg(long)]
    pub dim: Option<usize>,

    /// Neighbours used by the accuracy score.
    #[arg(long, default_value_t = 1)]
    pub k: usize,

    /// Also draw scatter.svg.
    #[arg(long)]
    pub plot: bool,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    /// key=value experiment file; flags below override it.
    #[arg(long)]
    pub config: Option<PathBuf>,

    #[command(flatten)]
    pub data: DatasetArgs,

    #[command(flatten)]
    pub tsne: TsneOptions,

    /// Comma-separated reducers to sweep (empty for baseline only).
    #[arg(long)]
    pub reducers: Option<String>,

    #[arg(long)]
    pub dim_start: Option<usize>,

    #[arg(long)]
    pub dim_base: Option<f64>,

    #[arg(long)]
    pub repeats: Option<usize>,

    #[arg(long)]
    pub k: Option<usize>,

    /// Extra config override, repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
}

#[derive(Debug, Args)]
pub struct ScoreArgs {
    /// Embedding written by `tsne` (raw f64 with labels).
    #[arg(long)]
    pub embedding: PathBuf,

    #[arg(long)]
    pub sidecar: Option<PathBuf>,

    #[arg(long, default_value_t = 1)]
    pub k: usize,
}

#[derive(Debug, Args)]
pub struct PlotArgs {
    #[command(subcommand)]
    pub figure: Figure,
}

#[derive(Debug, Subcommand)]
pub enum Figure {
    /// Time and accuracy ratios from a sweep CSV.
    Ratio {
        #[arg(long)]
        csv: PathBuf,
        /// Reducer whose runs are plotted.
        #[arg(long, default_value = "random_projection")]
        reducer: String,
        #[arg(long, default_value_t = 1.5)]
        log_base: f64,
    },
    /// Labelled scatter plot of a stored embedding.
    Scatter {
        #[arg(long)]
        embedding: PathBuf,
        #[arg(long)]
        sidecar: Option<PathBuf>,
    },
}
