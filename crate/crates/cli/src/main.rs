mod args;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::Parser;
use rptsne::bench::{
    average_repeats, emit_ratio_figure, emit_scatter_figure, read_records, run_seed, run_sweep, tsne_seed,
    SweepConfig, SweepRow,
};
use rptsne::data_io::{default_sidecar_path, load_raw, write_raw, DataSource, DatasetSpec, LabelVector};
use rptsne::evaluation::{accuracy_score, ratio_table, time_stage, RunRecord};
use rptsne::reducers::{reduce, ReducerKind};
use rptsne::tsne::{run_tsne, Embedding, TsneConfig};
use rptsne::{Error, ErrorKind, Result};

use args::{Cli, Command, ConvertArgs, DatasetArgs, Figure, ScoreArgs, SweepArgs, TsneArgs, TsneOptions};

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(match e.kind() {
                ErrorKind::Usage => 1,
                ErrorKind::Data => 2,
                ErrorKind::Numeric => 3,
            })
        }
    }
}

fn usage(msg: impl Into<String>) -> Error {
    Error::Parameter(msg.into())
}

fn run(cli: Cli) -> Result<()> {
    if let Some(threads) = cli.threads {
        if threads == 0 {
            return Err(usage("--threads must be at least 1"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(|e| usage(e.to_string()))?;
    }
    fs::create_dir_all(&cli.out_dir).map_err(|e| Error::io(&cli.out_dir, e))?;
    match &cli.command {
        Command::Convert(a) => convert(&cli, a),
        Command::Tsne(a) => tsne(&cli, a),
        Command::Sweep(a) => sweep(&cli, a),
        Command::Score(a) => score(a),
        Command::Plot(a) => match &a.figure {
            Figure::Ratio { csv, reducer, log_base } => plot_ratio(&cli, csv, reducer, *log_base),
            Figure::Scatter { embedding, sidecar } => plot_scatter(&cli, embedding, sidecar.as_deref()),
        },
    }
}

fn dataset_spec(data: &DatasetArgs, seed: u64) -> Result<DatasetSpec> {
    let source = match (&data.idx_images, &data.raw, &data.csv) {
        (Some(images), None, None) => DataSource::Idx {
            images: images.clone(),
            labels: data.idx_labels.clone().ok_or_else(|| usage("--idx-images needs --idx-labels"))?,
        },
        (None, Some(matrix), None) => DataSource::Raw {
            matrix: matrix.clone(),
            sidecar: data.sidecar.clone().unwrap_or_else(|| default_sidecar_path(matrix)),
        },
        (None, None, Some(path)) => DataSource::Csv {
            path: path.clone(),
            has_header: data.csv_header,
            label_last: true,
        },
        _ => return Err(usage("give exactly one of --idx-images, --raw or --csv")),
    };
    Ok(DatasetSpec {
        source,
        subsample_size: data.subsample,
        normalize: !data.no_normalize,
        seed: data.data_seed.unwrap_or(seed),
    })
}

fn has_dataset(data: &DatasetArgs) -> bool {
    data.idx_images.is_some() || data.raw.is_some() || data.csv.is_some()
}

fn apply_tsne_options(config: &mut TsneConfig, o: &TsneOptions) {
    if let Some(v) = o.perplexity {
        config.perplexity = v;
    }
    if let Some(v) = o.n_iter {
        config.n_iter = v;
    }
    if let Some(v) = o.theta {
        config.theta = v;
    }
    if let Some(v) = o.learning_rate {
        config.learning_rate = v;
    }
    if let Some(v) = o.early_exaggeration {
        config.early_exaggeration_factor = v;
    }
    if let Some(v) = o.exaggeration_iters {
        config.early_exaggeration_iters = v;
    }
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn convert(cli: &Cli, a: &ConvertArgs) -> Result<()> {
    let (x, labels) = dataset_spec(&a.data, cli.seed)?.load()?;
    let path = cli.out_dir.join(&a.output);
    write_raw(&path, &default_sidecar_path(&path), &x, Some(&labels))?;
    println!("wrote {} rows x {} columns to {}", x.n_rows(), x.n_cols(), path.display());
    Ok(())
}

fn tsne(cli: &Cli, a: &TsneArgs) -> Result<()> {
    let (x, labels) = dataset_spec(&a.data, cli.seed)?.load()?;
    let reducer: ReducerKind = a.reducer.parse()?;
    let d_prime = match (reducer, a.dim) {
        (ReducerKind::None, None) => x.n_cols(),
        (_, Some(d)) => d,
        (_, None) => return Err(usage("--dim is required with a reducer")),
    };
    let projection_seed = run_seed(cli.seed, reducer, d_prime, 0);
    let reduced = reduce(&x, reducer, d_prime, projection_seed)?;
    let mut config = TsneConfig {
        seed: tsne_seed(cli.seed, 0),
        ..TsneConfig::default()
    };
    apply_tsne_options(&mut config, &a.tsne);
    let (result, seconds) = time_stage(|| run_tsne(&reduced, &config));
    let (y, trace) = result?;
    let report = accuracy_score(&y, &labels, a.k)?;

    let embedding_path = cli.out_dir.join("embedding.f64");
    write_raw(&embedding_path, &default_sidecar_path(&embedding_path), &y.to_matrix(), Some(&labels))?;
    write_text(&cli.out_dir.join("trace.csv"), &trace.to_csv())?;
    if a.plot {
        write_text(&cli.out_dir.join("scatter.svg"), &emit_scatter_figure(&y, &labels)?)?;
    }
    println!("reducer={reducer} d_prime={d_prime} n={}", x.n_rows());
    println!("tsne_seconds={seconds:.3} affinity_seconds={:.3}", trace.affinity_seconds);
    println!("accuracy(k={})={:.4} ties={}", a.k, report.score, report.tie_count);
    println!("final_kl={:.6}", trace.final_kl().unwrap_or(f64::NAN));
    Ok(())
}

fn sweep(cli: &Cli, a: &SweepArgs) -> Result<()> {
    let mut config = match &a.config {
        Some(path) => SweepConfig::from_file(path)?,
        None if has_dataset(&a.data) => SweepConfig::new(dataset_spec(&a.data, cli.seed)?),
        None => return Err(usage("sweep needs --config or a dataset")),
    };
    if a.config.is_some() && has_dataset(&a.data) {
        config.dataset = dataset_spec(&a.data, cli.seed)?;
    }
    config.master_seed = cli.seed;
    config.out_dir = cli.out_dir.clone();
    apply_tsne_options(&mut config.tsne, &a.tsne);
    if let Some(r) = &a.reducers {
        config.set("reducers", r)?;
    }
    if let Some(v) = a.dim_start {
        config.dim_start = v;
    }
    if let Some(v) = a.dim_base {
        config.dim_base = v;
    }
    if let Some(v) = a.repeats {
        config.repeats = v;
    }
    if let Some(v) = a.k {
        config.k = v;
    }
    for kv in &a.overrides {
        let (key, value) = kv.split_once('=').ok_or_else(|| usage(format!("--set expects KEY=VALUE, got `{kv}`")))?;
        config.set(key.trim(), value.trim())?;
    }

    let (rows, csv_path) = run_sweep(&config)?;
    for row in &rows {
        match row {
            SweepRow::Completed(r) => println!(
                "{:<18} d'={:<5} time={:.3}s accuracy={:.4} kl={:.4}",
                r.reducer, r.d_prime, r.tsne_seconds, r.accuracy, r.final_kl
            ),
            SweepRow::Failed { reducer, d_prime, message, .. } => {
                println!("{reducer:<18} d'={d_prime:<5} failed: {message}")
            }
        }
    }
    println!("wrote {}", csv_path.display());
    for &reducer in &config.reducers {
        let path = write_ratio_figure(&cli.out_dir, &rows, reducer, config.dim_base)?;
        println!("wrote {}", path.display());
    }
    Ok(())
}

fn write_ratio_figure(out_dir: &Path, rows: &[SweepRow], reducer: ReducerKind, log_base: f64) -> Result<PathBuf> {
    let completed: Vec<RunRecord> = rows.iter().filter_map(SweepRow::record).cloned().collect();
    let baseline = completed
        .iter()
        .find(|r| r.reducer == ReducerKind::None)
        .ok_or_else(|| Error::Format("no completed baseline run".into()))?;
    let runs: Vec<RunRecord> = completed.iter().filter(|r| r.reducer == reducer).cloned().collect();
    if runs.is_empty() {
        return Err(Error::Format(format!("no completed {reducer} runs")));
    }
    let table = ratio_table(baseline, &average_repeats(&runs))?;
    let path = out_dir.join(format!("ratio_{reducer}.svg"));
    write_text(&path, &emit_ratio_figure(&table, log_base)?)?;
    Ok(path)
}

fn load_embedding(path: &Path, sidecar: Option<&Path>) -> Result<(Embedding, LabelVector)> {
    let sidecar = sidecar.map_or_else(|| default_sidecar_path(path), Path::to_path_buf);
    let (m, labels) = load_raw(path, &sidecar)?;
    let labels = labels.ok_or_else(|| Error::Format("embedding file carries no labels".into()))?;
    Ok((Embedding::from_matrix(&m)?, labels))
}

fn score(a: &ScoreArgs) -> Result<()> {
    let (y, labels) = load_embedding(&a.embedding, a.sidecar.as_deref())?;
    let report = accuracy_score(&y, &labels, a.k)?;
    println!("accuracy(k={})={:.6}", report.k, report.score);
    println!("ties={}", report.tie_count);
    for (label, s) in &report.per_class_scores {
        println!("class {label}: {s:.6}");
    }
    Ok(())
}

fn plot_ratio(cli: &Cli, csv: &Path, reducer: &str, log_base: f64) -> Result<()> {
    let file = fs::File::open(csv).map_err(|e| Error::io(csv, e))?;
    let rows = read_records(file)?;
    let path = write_ratio_figure(&cli.out_dir, &rows, reducer.parse()?, log_base)?;
    println!("wrote {}", path.display());
    Ok(())
}

fn plot_scatter(cli: &Cli, embedding: &Path, sidecar: Option<&Path>) -> Result<()> {
    let (y, labels) = load_embedding(embedding, sidecar)?;
    let path = cli.out_dir.join("scatter.svg");
    write_text(&path, &emit_scatter_figure(&y, &labels)?)?;
    println!("wrote {}", path.display());
    Ok(())
}
