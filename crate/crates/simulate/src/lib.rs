//! Monte Carlo experiments for the local linear conditional CDF estimator.
//!
//! Replications run in parallel on the current rayon pool and are
//! aggregated in replication order, so reports do not depend on the number
//! of threads.

pub mod config;
pub mod error;
pub mod experiments;
pub mod ftable;
pub mod report;
pub mod seeds;
pub mod stats;

pub use config::{parse_and_validate, ExperimentConfig, ExperimentKind, Validation};
pub use error::SimError;
pub use experiments::alr::run_alr;
pub use experiments::bias::run_bias;
pub use experiments::clt::run_clt;
pub use experiments::equicont::run_equicont;
pub use experiments::estimate::{run_estimate, EstimateOutput};
pub use experiments::rates::run_rates;
pub use report::SimulationReport;

/// Runs one experiment kind. `rates` yields one report per configured
/// estimator; `estimate` is handled by [`run_estimate`].
pub fn run(kind: ExperimentKind, cfg: &ExperimentConfig) -> Result<Vec<SimulationReport>, SimError> {
    Ok(match kind {
        ExperimentKind::Bias => vec![run_bias(cfg)?],
        ExperimentKind::Rates => cfg.estimators.iter().map(|&e| run_rates(cfg, e)).collect::<Result<_, _>>()?,
        ExperimentKind::Alr => vec![run_alr(cfg)?],
        ExperimentKind::Equicont => vec![run_equicont(cfg)?],
        ExperimentKind::Clt => vec![run_clt(cfg)?],
        ExperimentKind::Estimate => vec![run_estimate(cfg)?.report],
    })
}
