use std::time::Instant;

use super::affinity::{joint_affinities, sparse_joint_affinities, AffinityMatrix, SparseAffinity};
use super::barnes_hut::{barnes_hut_gradient_scaled, sparse_kl};
use super::config::TsneConfig;
use super::kernel::{exact_gradient_scaled, kl_for_embedding, Embedding};
use crate::data_io::DataMatrix;
use crate::error::{param, Error, Result};
use crate::rng::SeededRng;

pub const OUTPUT_DIMS: usize = 2;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TracePoint {
    pub iteration: usize,
    pub kl: f64,
    pub grad_norm: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct OptimizerTrace {
    pub points: Vec<TracePoint>,
    /// Wall-clock seconds spent on affinities plus optimisation.
    pub seconds: f64,
    pub affinity_seconds: f64,
    pub duplicate_rows: usize,
    pub unconverged_rows: usize,
}

impl OptimizerTrace {
    pub fn initial_kl(&self) -> Option<f64> {
        self.points.first().map(|p| p.kl)
    }

    pub fn final_kl(&self) -> Option<f64> {
        self.points.last().map(|p| p.kl)
    }

    /// `iteration,kl,grad_norm` with a header row.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("iteration,kl,grad_norm\n");
        for p in &self.points {
            out.push_str(&format!("{},{},{}\n", p.iteration, p.kl, p.grad_norm));
        }
        out
    }
}

enum Affinities {
    Dense(AffinityMatrix),
    Sparse(SparseAffinity),
}

impl Affinities {
    /// Gradient (with exaggeration) and the objective at exaggeration 1.
    fn gradient(&self, y: &Embedding, theta: f64, exaggeration: f64) -> Vec<f64> {
        match self {
            Affinities::Dense(p) => exact_gradient_scaled(p, y, exaggeration).0,
            Affinities::Sparse(p) => barnes_hut_gradient_scaled(p, y, theta, exaggeration).0,
        }
    }

    fn kl(&self, y: &Embedding, theta: f64) -> Result<f64> {
        match self {
            Affinities::Dense(p) => kl_for_embedding(p, y),
            Affinities::Sparse(p) => {
                let (_, z) = barnes_hut_gradient_scaled(p, y, theta, 1.0);
                Ok(sparse_kl(p, y, z))
            }
        }
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|g| g * g).sum::<f64>().sqrt()
}

/// Random initial layout: i.i.d. `N(0, init_scale²)` coordinates, row-major.
pub fn initial_embedding(n: usize, config: &TsneConfig) -> Result<Embedding> {
    let mut rng = SeededRng::new(config.seed);
    let coords = (0..n * OUTPUT_DIMS)
        .map(|_| config.init_scale * rng.standard_normal())
        .collect();
    Embedding::new(n, OUTPUT_DIMS, coords)
}

/// Embeds `x` in two dimensions.
///
/// Attractive forces are multiplied by the exaggeration factor for the first
/// `early_exaggeration_iters` iterations. Each coordinate has an adaptive
/// gain (+0.2 when its gradient and velocity have opposite signs, ×0.8
/// otherwise, floored at 0.01); the velocity update is
/// `v ← momentum·v − learning_rate·gain·grad`, after which the layout is
/// re-centred. The objective is recorded at iteration 0, every
/// `trace_every` iterations, and on exit.
pub fn run_tsne(x: &DataMatrix, config: &TsneConfig) -> Result<(Embedding, OptimizerTrace)> {
    let n = x.n_rows();
    if n < 4 {
        return Err(param(format!("t-SNE needs at least 4 points, got {n}")));
    }
    config.validate(n)?;
    let start = Instant::now();

    let mut trace = OptimizerTrace::default();
    let affinities = if config.is_exact() {
        let p = joint_affinities(x, config)?;
        trace.duplicate_rows = p.duplicate_rows;
        trace.unconverged_rows = p.unconverged_rows;
        Affinities::Dense(p)
    } else {
        let p = sparse_joint_affinities(x, config)?;
        trace.duplicate_rows = p.duplicate_rows;
        trace.unconverged_rows = p.unconverged_rows;
        Affinities::Sparse(p)
    };
    trace.affinity_seconds = start.elapsed().as_secs_f64();

    let mut y = initial_embedding(n, config)?;
    let len = n * OUTPUT_DIMS;
    let mut velocity = vec![0.0; len];
    let mut gains = vec![1.0f64; len];
    let mut coords = y.coords().to_vec();
    let mut stopped_at = config.n_iter;

    for iter in 0..config.n_iter {
        let exaggerating = iter < config.early_exaggeration_iters;
        let exaggeration = if exaggerating { config.early_exaggeration_factor } else { 1.0 };
        let momentum = if iter < config.momentum_switch_iter {
            config.momentum_initial
        } else {
            config.momentum_final
        };
        let grad = affinities.gradient(&y, config.theta, exaggeration);
        let grad_norm = norm(&grad);
        if iter % config.trace_every == 0 {
            trace.points.push(TracePoint {
                iteration: iter,
                kl: affinities.kl(&y, config.theta)?,
                grad_norm,
            });
        }
        if !exaggerating && config.min_grad_norm > 0.0 && grad_norm < config.min_grad_norm {
            stopped_at = iter;
            break;
        }

        for k in 0..len {
            let same_sign = (grad[k] > 0.0) == (velocity[k] > 0.0);
            gains[k] = if same_sign { gains[k] * 0.8 } else { gains[k] + 0.2 }.max(0.01);
            velocity[k] = momentum * velocity[k] - config.learning_rate * gains[k] * grad[k];
            coords[k] += velocity[k];
        }
        for d in 0..OUTPUT_DIMS {
            let mean = coords.iter().skip(d).step_by(OUTPUT_DIMS).sum::<f64>() / n as f64;
            coords.iter_mut().skip(d).step_by(OUTPUT_DIMS).for_each(|c| *c -= mean);
        }
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(Error::Diverged { iteration: iter });
        }
        y = Embedding::new(n, OUTPUT_DIMS, coords.clone())?;
    }

    if trace.points.last().map(|p| p.iteration) != Some(stopped_at) {
        let grad = affinities.gradient(&y, config.theta, 1.0);
        trace.points.push(TracePoint {
            iteration: stopped_at,
            kl: affinities.kl(&y, config.theta)?,
            grad_norm: norm(&grad),
        });
    }
    trace.seconds = start.elapsed().as_secs_f64();
    Ok((y, trace))
}
