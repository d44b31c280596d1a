use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::data_io::raw::parse_key_values;
use crate::data_io::{default_sidecar_path, DataSource, DatasetSpec};
use crate::error::{param, Error, Result};
use crate::reducers::ReducerKind;
use crate::tsne::TsneConfig;

/// A full dimension-sweep experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub dataset: DatasetSpec,
    /// Reducers swept after the baseline; empty means baseline only.
    pub reducers: Vec<ReducerKind>,
    pub dim_base: f64,
    pub dim_start: usize,
    pub tsne: TsneConfig,
    pub repeats: usize,
    /// Neighbour count for the accuracy score.
    pub k: usize,
    /// Root of every per-run seed.
    pub master_seed: u64,
    pub out_dir: PathBuf,
}

impl SweepConfig {
    pub fn new(dataset: DatasetSpec) -> Self {
        Self {
            dataset,
            reducers: vec![ReducerKind::RandomProjection],
            dim_base: 1.5,
            dim_start: 7,
            tsne: TsneConfig::default(),
            repeats: 1,
            k: 1,
            master_seed: 0,
            out_dir: PathBuf::from("."),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dim_base > 1.0) {
            return Err(param(format!("dim_base must exceed 1, got {}", self.dim_base)));
        }
        if self.dim_start == 0 || self.repeats == 0 || self.k == 0 {
            return Err(param("dim_start, repeats and k must be at least 1"));
        }
        if self.reducers.contains(&ReducerKind::None) {
            return Err(param("the unreduced baseline always runs; list only reducers"));
        }
        Ok(())
    }

    /// Reads a flat `key=value` file. Relative data paths resolve against
    /// the file's directory.
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let base = path.parent().unwrap_or(Path::new(""));
        Self::from_key_values(&parse_key_values(&text)?, base)
    }

    /// Builds a config from parsed keys. Exactly one of `idx_images`,
    /// `raw_matrix` or `csv` names the dataset.
    pub fn from_key_values(map: &BTreeMap<String, String>, base: &Path) -> Result<Self> {
        let resolve = |key: &str| map.get(key).map(|v| base.join(v));
        let source = match (resolve("idx_images"), resolve("raw_matrix"), resolve("csv")) {
            (Some(images), None, None) => DataSource::Idx {
                images,
                labels: resolve("idx_labels").ok_or_else(|| param("idx_images needs idx_labels"))?,
            },
            (None, Some(matrix), None) => DataSource::Raw {
                sidecar: resolve("raw_sidecar").unwrap_or_else(|| default_sidecar_path(&matrix)),
                matrix,
            },
            (None, None, Some(path)) => DataSource::Csv {
                path,
                has_header: map.get("csv_header").map(|v| parse_value("csv_header", v)).transpose()?.unwrap_or(false),
                label_last: true,
            },
            _ => return Err(param("config must name exactly one of idx_images, raw_matrix, csv")),
        };
        let mut config = SweepConfig::new(DatasetSpec::new(source));
        for (key, value) in map {
            if matches!(
                key.as_str(),
                "idx_images" | "idx_labels" | "raw_matrix" | "raw_sidecar" | "csv" | "csv_header"
            ) {
                continue;
            }
            config.set(key, value)?;
        }
        if let Some(out) = map.get("out_dir") {
            config.out_dir = base.join(out);
        }
        Ok(config)
    }

    /// Applies one `key=value` setting; the CLI uses this for overrides.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let t = &mut self.tsne;
        match key {
            "subsample" => self.dataset.subsample_size = Some(parse_value(key, value)?),
            "normalize" => self.dataset.normalize = parse_value(key, value)?,
            "data_seed" => self.dataset.seed = parse_value(key, value)?,
            "reducers" => {
                self.reducers = value
                    .split(',')
                    .map(str::trim)
                    .filter(|s| !s.is_empty())
                    .map(ReducerKind::from_str)
                    .collect::<Result<_>>()?
            }
            "dim_base" => self.dim_base = parse_value(key, value)?,
            "dim_start" => self.dim_start = parse_value(key, value)?,
            "repeats" => self.repeats = parse_value(key, value)?,
            "k" => self.k = parse_value(key, value)?,
            "seed" => self.master_seed = parse_value(key, value)?,
            "out_dir" => self.out_dir = PathBuf::from(value),
            "perplexity" => t.perplexity = parse_value(key, value)?,
            "n_iter" => t.n_iter = parse_value(key, value)?,
            "early_exaggeration_factor" => t.early_exaggeration_factor = parse_value(key, value)?,
            "early_exaggeration_iters" => t.early_exaggeration_iters = parse_value(key, value)?,
            "learning_rate" => t.learning_rate = parse_value(key, value)?,
            "momentum_initial" => t.momentum_initial = parse_value(key, value)?,
            "momentum_final" => t.momentum_final = parse_value(key, value)?,
            "momentum_switch_iter" => t.momentum_switch_iter = parse_value(key, value)?,
            "init_scale" => t.init_scale = parse_value(key, value)?,
            "theta" => t.theta = parse_value(key, value)?,
            "min_prob_floor" => t.min_prob_floor = parse_value(key, value)?,
            "calibration_tol" => t.calibration_tol = parse_value(key, value)?,
            "calibration_max_iter" => t.calibration_max_iter = parse_value(key, value)?,
            "min_grad_norm" => t.min_grad_norm = parse_value(key, value)?,
            _ => return Err(param(format!("unknown config key `{key}`"))),
        }
        Ok(())
    }
}

fn parse_value<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .trim()
        .parse()
        .map_err(|_| param(format!("invalid value `{value}` for `{key}`")))
}
