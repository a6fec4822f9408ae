pub mod alr;
pub mod bias;
pub mod clt;
pub mod equicont;
pub mod estimate;
pub mod rates;

use condist_core::grid::box_grid;
use condist_core::{Bandwidths, ConditionalLaw, DgpSpec, FitOptions, KernelSpec};

use crate::config::ExperimentConfig;
use crate::error::SimError;
use crate::seeds::replication_seed;

/// Everything an experiment needs that does not depend on `n`.
pub(crate) struct Setup {
    pub law: DgpSpec,
    pub spec: KernelSpec,
    pub opts: FitOptions,
    pub x_grid: Vec<Vec<f64>>,
}

impl Setup {
    pub fn new(cfg: &ExperimentConfig) -> Result<Self, SimError> {
        let law = cfg.law()?;
        let spec = cfg.kernel_spec(law.dim())?;
        let x_grid = box_grid(law.support(), cfg.grid.m_x);
        Ok(Self {
            law,
            spec,
            opts: cfg.fit_options(),
            x_grid,
        })
    }
}

pub(crate) fn bandwidths(cfg: &ExperimentConfig, n: usize) -> Result<Bandwidths, SimError> {
    let (h1, h2) = cfg.bandwidths(n);
    Ok(Bandwidths::new(h1, h2)?)
}

/// Seed of replication `r` at schedule position `k`.
pub(crate) fn seed_for(cfg: &ExperimentConfig, k: usize, r: usize) -> u64 {
    replication_seed(cfg.seed, (k * cfg.replications + r) as u64)
}

/// `|log h₁| / (n h₁^d)`.
pub(crate) fn log_rate(n: usize, h1: f64, d: usize) -> f64 {
    h1.ln().abs() / (n as f64 * h1.powi(d as i32))
}

/// Trapezoid weights on a sorted grid.
pub(crate) fn trapezoid_weights(grid: &[f64]) -> Vec<f64> {
    let m = grid.len();
    let mut w = vec![0.0; m];
    for i in 0..m - 1 {
        let half = 0.5 * (grid[i + 1] - grid[i]);
        w[i] += half;
        w[i + 1] += half;
    }
    w
}

pub(crate) const EMPIRICAL_NOTE: &str =
    "No constants are available for the stochastic orders; acceptance thresholds on normalized sequences are empirical pilot-run values.";
