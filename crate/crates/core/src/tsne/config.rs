use crate::error::{param, Result};

/// Optimisation and calibration settings for [`run_tsne`](super::run_tsne).
#[derive(Debug, Clone, PartialEq)]
pub struct TsneConfig {
    pub perplexity: f64,
    pub n_iter: usize,
    pub early_exaggeration_factor: f64,
    pub early_exaggeration_iters: usize,
    pub learning_rate: f64,
    pub momentum_initial: f64,
    pub momentum_final: f64,
    pub momentum_switch_iter: usize,
    /// Standard deviation of the random initial coordinates.
    pub init_scale: f64,
    /// Barnes-Hut opening parameter; `0` selects the exact O(N²) engine.
    pub theta: f64,
    pub seed: u64,
    pub min_prob_floor: f64,
    /// Tolerance on `|log2(perplexity achieved) − log2(target)|`.
    pub calibration_tol: f64,
    pub calibration_max_iter: usize,
    /// Stop once the gradient norm drops below this after exaggeration ends.
    /// `0` disables early stopping.
    pub min_grad_norm: f64,
    /// Record the objective every this many iterations.
    pub trace_every: usize,
}

impl Default for TsneConfig {
    fn default() -> Self {
        Self {
            perplexity: 30.0,
            n_iter: 1000,
            early_exaggeration_factor: 12.0,
            early_exaggeration_iters: 250,
            learning_rate: 200.0,
            momentum_initial: 0.5,
            momentum_final: 0.8,
            momentum_switch_iter: 250,
            init_scale: 1e-4,
            theta: 0.0,
            seed: 0,
            min_prob_floor: 1e-12,
            calibration_tol: 1e-5,
            calibration_max_iter: 50,
            min_grad_norm: 0.0,
            trace_every: 50,
        }
    }
}

impl TsneConfig {
    pub fn is_exact(&self) -> bool {
        self.theta == 0.0
    }

    /// Neighbours kept per point in Barnes-Hut mode: `⌈3·perplexity⌉`, capped at `n − 1`.
    pub fn neighbor_count(&self, n: usize) -> usize {
        ((3.0 * self.perplexity).ceil() as usize).min(n - 1)
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        if !(self.perplexity >= 1.0) {
            return Err(param(format!("perplexity must be at least 1, got {}", self.perplexity)));
        }
        if self.perplexity >= n as f64 {
            return Err(param(format!(
                "perplexity {} must be below the number of points {n}",
                self.perplexity
            )));
        }
        if !(0.0..=1.0).contains(&self.theta) {
            return Err(param(format!("theta must lie in [0, 1], got {}", self.theta)));
        }
        if !(self.learning_rate > 0.0) || !(self.init_scale > 0.0) {
            return Err(param("learning rate and init scale must be positive"));
        }
        if !(self.min_prob_floor >= 0.0) || !(self.calibration_tol > 0.0) {
            return Err(param("probability floor must be non-negative and tolerance positive"));
        }
        if self.trace_every == 0 {
            return Err(param("trace interval must be at least 1"));
        }
        if !(self.early_exaggeration_factor > 0.0) {
            return Err(param("early exaggeration factor must be positive"));
        }
        Ok(())
    }
}
