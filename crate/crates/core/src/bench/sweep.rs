use std::fs;
use std::io::{Read, Write};
use std::path::PathBuf;

use super::config::SweepConfig;
use super::dims::sweep_dimensions;
use crate::data_io::{DataMatrix, LabelVector};
use crate::error::{Error, Result};
use crate::evaluation::{accuracy_score, time_stage, RunRecord};
use crate::reducers::{reduce, ReducerKind};
use crate::rng::derive_seed;
use crate::tsne::{run_tsne, TsneConfig};

pub const CSV_HEADER: [&str; 6] = ["reducer", "d_prime", "seed", "tsne_seconds", "accuracy", "final_kl"];

/// Stream id shared by every run of one repeat, so that all runs start
/// t-SNE from the same random layout.
const TSNE_STREAM: u64 = 0x7453_4E45;

/// Marker written in the `accuracy` column of a failed run; the message
/// goes in `final_kl`.
pub const ERROR_MARKER: &str = "error";

/// One line of sweep output.
#[derive(Debug, Clone, PartialEq)]
pub enum SweepRow {
    Completed(RunRecord),
    Failed {
        reducer: ReducerKind,
        d_prime: usize,
        seed: u64,
        message: String,
    },
}

impl SweepRow {
    pub fn record(&self) -> Option<&RunRecord> {
        match self {
            SweepRow::Completed(r) => Some(r),
            SweepRow::Failed { .. } => None,
        }
    }

    fn fields(&self) -> [String; 6] {
        match self {
            SweepRow::Completed(r) => [
                r.reducer.to_string(),
                r.d_prime.to_string(),
                r.seed.to_string(),
                r.tsne_seconds.to_string(),
                r.accuracy.to_string(),
                r.final_kl.to_string(),
            ],
            SweepRow::Failed {
                reducer,
                d_prime,
                seed,
                message,
            } => [
                reducer.to_string(),
                d_prime.to_string(),
                seed.to_string(),
                String::new(),
                ERROR_MARKER.to_string(),
                message.clone(),
            ],
        }
    }
}

/// Seed naming the stream of one run: `derive_seed(master, [reducer tag, d′, repeat])`.
pub fn run_seed(master: u64, reducer: ReducerKind, d_prime: usize, repeat: usize) -> u64 {
    derive_seed(master, &[reducer.tag(), d_prime as u64, repeat as u64])
}

/// t-SNE initialisation seed for a repeat: `derive_seed(master, [TSNE_STREAM, repeat])`.
pub fn tsne_seed(master: u64, repeat: usize) -> u64 {
    derive_seed(master, &[TSNE_STREAM, repeat as u64])
}

/// Reduces, embeds and scores one configuration. Only the t-SNE stage is
/// timed.
pub fn run_single(
    x: &DataMatrix,
    labels: &LabelVector,
    reducer: ReducerKind,
    d_prime: usize,
    repeat: usize,
    config: &SweepConfig,
) -> Result<RunRecord> {
    let seed = run_seed(config.master_seed, reducer, d_prime, repeat);
    let reduced = reduce(x, reducer, d_prime, seed)?;
    let tsne = TsneConfig {
        seed: tsne_seed(config.master_seed, repeat),
        ..config.tsne.clone()
    };
    let (result, seconds) = time_stage(|| run_tsne(&reduced, &tsne));
    let (y, trace) = result?;
    let report = accuracy_score(&y, labels, config.k)?;
    Ok(RunRecord {
        reducer,
        d_prime,
        seed,
        tsne_seconds: seconds,
        accuracy: report.score,
        final_kl: trace.final_kl().unwrap_or(f64::NAN),
    })
}

/// Incremental CSV sink: every row is flushed as soon as it is written.
pub struct RecordWriter<W: Write> {
    inner: csv::Writer<W>,
}

impl<W: Write> RecordWriter<W> {
    pub fn new(sink: W) -> Result<Self> {
        let mut inner = csv::Writer::from_writer(sink);
        inner.write_record(CSV_HEADER).map_err(csv_error)?;
        inner.flush().map_err(|e| Error::Format(e.to_string()))?;
        Ok(Self { inner })
    }

    pub fn write(&mut self, row: &SweepRow) -> Result<()> {
        self.inner.write_record(row.fields()).map_err(csv_error)?;
        self.inner.flush().map_err(|e| Error::Format(e.to_string()))
    }

    pub fn into_inner(self) -> Result<W> {
        self.inner.into_inner().map_err(|e| Error::Format(e.to_string()))
    }
}

fn csv_error(e: csv::Error) -> Error {
    Error::Format(format!("csv: {e}"))
}

/// Parses sweep CSV back into rows.
pub fn read_records(source: impl Read) -> Result<Vec<SweepRow>> {
    let mut reader = csv::Reader::from_reader(source);
    let header = reader.headers().map_err(csv_error)?;
    if header.iter().ne(CSV_HEADER) {
        return Err(Error::Format(format!("unexpected sweep header {header:?}")));
    }
    let number = |field: &str, what: &str| -> Result<f64> {
        field.parse().map_err(|_| Error::Format(format!("bad {what} `{field}`")))
    };
    let mut rows = Vec::new();
    for rec in reader.records() {
        let rec = rec.map_err(csv_error)?;
        let reducer: ReducerKind = rec[0].parse().map_err(|_| Error::Format(format!("bad reducer `{}`", &rec[0])))?;
        let d_prime = rec[1].parse().map_err(|_| Error::Format(format!("bad d_prime `{}`", &rec[1])))?;
        let seed = rec[2].parse().map_err(|_| Error::Format(format!("bad seed `{}`", &rec[2])))?;
        rows.push(if &rec[4] == ERROR_MARKER {
            SweepRow::Failed {
                reducer,
                d_prime,
                seed,
                message: rec[5].to_string(),
            }
        } else {
            SweepRow::Completed(RunRecord {
                reducer,
                d_prime,
                seed,
                tsne_seconds: number(&rec[3], "tsne_seconds")?,
                accuracy: number(&rec[4], "accuracy")?,
                final_kl: number(&rec[5], "final_kl")?,
            })
        });
    }
    Ok(rows)
}

/// Every run in sweep order: the baseline once, then each reducer at each
/// swept dimension and repeat.
pub fn sweep_plan(d: usize, config: &SweepConfig) -> Result<Vec<(ReducerKind, usize, usize)>> {
    config.validate()?;
    let mut plan = vec![(ReducerKind::None, d, 0)];
    if config.reducers.is_empty() {
        return Ok(plan);
    }
    let dims = sweep_dimensions(d, config.dim_start, config.dim_base)?;
    for &reducer in &config.reducers {
        for &d_prime in &dims {
            for repeat in 0..config.repeats {
                plan.push((reducer, d_prime, repeat));
            }
        }
    }
    Ok(plan)
}

/// Runs the sweep on in-memory data, streaming rows to `out`. A failing
/// reducer run is recorded and the sweep continues; a failing baseline
/// aborts it.
pub fn run_sweep_on<W: Write>(
    x: &DataMatrix,
    labels: &LabelVector,
    config: &SweepConfig,
    out: &mut RecordWriter<W>,
) -> Result<Vec<SweepRow>> {
    let mut rows = Vec::new();
    for (reducer, d_prime, repeat) in sweep_plan(x.n_cols(), config)? {
        let row = match run_single(x, labels, reducer, d_prime, repeat, config) {
            Ok(record) => SweepRow::Completed(record),
            Err(e) if reducer == ReducerKind::None => return Err(e),
            Err(e) => SweepRow::Failed {
                reducer,
                d_prime,
                seed: run_seed(config.master_seed, reducer, d_prime, repeat),
                message: e.to_string(),
            },
        };
        out.write(&row)?;
        rows.push(row);
    }
    Ok(rows)
}

/// Loads the dataset and writes `sweep.csv` under the output directory.
pub fn run_sweep(config: &SweepConfig) -> Result<(Vec<SweepRow>, PathBuf)> {
    config.validate()?;
    let (x, labels) = config.dataset.load()?;
    fs::create_dir_all(&config.out_dir).map_err(|e| Error::io(&config.out_dir, e))?;
    let path = config.out_dir.join("sweep.csv");
    let file = fs::File::create(&path).map_err(|e| Error::io(&path, e))?;
    let mut writer = RecordWriter::new(file)?;
    let rows = run_sweep_on(&x, &labels, config, &mut writer)?;
    Ok((rows, path))
}

/// Averages completed runs sharing a reducer and dimension (time and
/// accuracy), keeping the first repeat's seed and final objective.
pub fn average_repeats(records: &[RunRecord]) -> Vec<RunRecord> {
    let mut out: Vec<(RunRecord, usize)> = Vec::new();
    for r in records {
        match out.iter_mut().find(|(a, _)| a.reducer == r.reducer && a.d_prime == r.d_prime) {
            Some((a, count)) => {
                a.tsne_seconds += r.tsne_seconds;
                a.accuracy += r.accuracy;
                *count += 1;
            }
            None => out.push((r.clone(), 1)),
        }
    }
    out.into_iter()
        .map(|(mut a, count)| {
            a.tsne_seconds /= count as f64;
            a.accuracy /= count as f64;
            a
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data_io::{DataSource, DatasetSpec};

    fn record(reducer: ReducerKind, d_prime: usize, secs: f64, acc: f64) -> RunRecord {
        RunRecord {
            reducer,
            d_prime,
            seed: 17,
            tsne_seconds: secs,
            accuracy: acc,
            final_kl: 0.125,
        }
    }

    fn config() -> SweepConfig {
        SweepConfig::new(DatasetSpec::new(DataSource::Csv {
            path: "unused.csv".into(),
            has_header: false,
            label_last: true,
        }))
    }

    #[test]
    fn csv_round_trip_including_failures() {
        let rows = vec![
            SweepRow::Completed(record(ReducerKind::None, 784, 0.1 + 0.2, 1.0 / 3.0)),
            SweepRow::Failed {
                reducer: ReducerKind::Pca,
                d_prime: 7,
                seed: u64::MAX,
                message: "bad, \"quoted\" input".into(),
            },
        ];
        let mut w = RecordWriter::new(Vec::new()).unwrap();
        for r in &rows {
            w.write(r).unwrap();
        }
        let bytes = w.into_inner().unwrap();
        let text = String::from_utf8(bytes.clone()).unwrap();
        assert!(text.starts_with("reducer,d_prime,seed,tsne_seconds,accuracy,final_kl\n"));
        assert!(text.contains("\"bad, \"\"quoted\"\" input\""));
        assert_eq!(read_records(bytes.as_slice()).unwrap(), rows);
    }

    #[test]
    fn rejects_foreign_csv() {
        assert!(read_records("a,b\n1,2\n".as_bytes()).is_err());
    }

    #[test]
    fn plan_order() {
        let mut c = config();
        c.reducers = vec![ReducerKind::RandomProjection, ReducerKind::Pca];
        c.repeats = 2;
        let plan = sweep_plan(10, &c).unwrap();
        assert_eq!(plan[0], (ReducerKind::None, 10, 0));
        assert_eq!(plan.len(), 1 + 2 * 2 * 2);
        assert_eq!(plan[1..3], [(ReducerKind::RandomProjection, 7, 0), (ReducerKind::RandomProjection, 7, 1)]);
        c.reducers.clear();
        assert_eq!(sweep_plan(10, &c).unwrap().len(), 1);
    }

    #[test]
    fn seeds_are_distinct_per_stream() {
        let mut seen = std::collections::BTreeSet::new();
        for reducer in [ReducerKind::None, ReducerKind::RandomProjection, ReducerKind::Pca] {
            for d in [7, 11, 784] {
                for repeat in 0..3 {
                    assert!(seen.insert(run_seed(5, reducer, d, repeat)));
                }
            }
        }
        assert_ne!(tsne_seed(5, 0), tsne_seed(5, 1));
        assert_ne!(run_seed(5, ReducerKind::Pca, 7, 0), run_seed(6, ReducerKind::Pca, 7, 0));
    }

    #[test]
    fn averaging_groups_repeats() {
        let avg = average_repeats(&[
            record(ReducerKind::RandomProjection, 7, 1.0, 0.5),
            record(ReducerKind::RandomProjection, 7, 3.0, 0.7),
            record(ReducerKind::RandomProjection, 11, 2.0, 0.9),
        ]);
        assert_eq!(avg.len(), 2);
        assert_eq!((avg[0].tsne_seconds, avg[0].accuracy), (2.0, 0.6));
        assert_eq!(avg[1].d_prime, 11);
    }
}
