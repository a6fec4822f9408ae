//! Uniform convergence rate of the smoothed and unsmoothed estimators.

use condist_core::grid::sample_y_grid;
use condist_core::llr::surface;
use condist_core::{ConditionalLaw, Estimator};
use rayon::prelude::*;

use super::{bandwidths, seed_for, Setup};
use crate::config::ExperimentConfig;
use crate::error::SimError;
use crate::report::{stats, Aggregate, Record, RecordStatus, SimulationReport};
use crate::stats::{median, median_ci, ols};

pub fn experiment_name(estimator: Estimator) -> &'static str {
    match estimator {
        Estimator::Smoothed => "rates-smoothed",
        Estimator::Unsmoothed => "rates-unsmoothed",
    }
}

/// Per replication: draw, evaluate on the sample-based `y` grid (with the
/// two saturated tail points) times the covariate grid, and record the sup
/// error against the true CDF. Aggregates the median per `n` and fits the
/// log-log slope of the medians.
pub fn run_rates(cfg: &ExperimentConfig, estimator: Estimator) -> Result<SimulationReport, SimError> {
    let setup = Setup::new(cfg)?;
    let mut report = SimulationReport::new(experiment_name(estimator), cfg);
    let mut log_n = Vec::new();
    let mut log_med = Vec::new();

    for (k, &n) in cfg.n.iter().enumerate() {
        let bw = bandwidths(cfg, n)?;
        let records = (0..cfg.replications)
            .into_par_iter()
            .map(|r| {
                let seed = seed_for(cfg, k, r);
                let sample = setup.law.draw(n, seed)?;
                let y_grid = sample_y_grid(&sample, bw.h2, cfg.grid.m_y);
                let s = surface(&sample, &y_grid, &setup.x_grid, bw, &setup.spec, estimator, setup.opts)?;
                if s.singular_columns() > 0 {
                    return Ok(Record::excluded(n, r, seed, format!("singular design in {} columns", s.singular_columns())));
                }
                let mut sup = 0.0_f64;
                for (ix, x) in setup.x_grid.iter().enumerate() {
                    for (iy, &y) in y_grid.iter().enumerate() {
                        let e = (s.value(iy, ix).expect("solvable column") - setup.law.cdf(y, x)).abs();
                        sup = sup.max(e);
                    }
                }
                let violations = s.monotonicity_violations(1e-12) as f64;
                Ok(Record::replication(n, r, seed, stats([("sup_error", sup), ("monotonicity_violations", violations)])))
            })
            .collect::<Result<Vec<Record>, SimError>>()?;

        let errors: Vec<f64> = records.iter().filter_map(|r| r.value("sup_error")).collect();
        let excluded = records.iter().filter(|r| r.status == RecordStatus::Excluded).count();
        let mut agg = stats([("h1", bw.h1), ("h2", bw.h2), ("excluded", excluded as f64), ("used", errors.len() as f64)]);
        if !errors.is_empty() {
            let med = median(&errors);
            let (lo, hi) = median_ci(&errors);
            agg.insert("median".into(), med);
            agg.insert("median_ci_lo".into(), lo);
            agg.insert("median_ci_hi".into(), hi);
            log_n.push((n as f64).ln());
            log_med.push(med.ln());
        }
        report.aggregates.push(Aggregate::for_n(n, agg));
        report.records.extend(records);
    }

    report.summary.insert("excluded".into(), report.excluded() as f64);
    if log_n.len() >= 2 {
        let fit = ols(&log_n, &log_med);
        report.summary.insert("slope".into(), fit.slope);
        report.summary.insert("slope_se".into(), fit.slope_se);
        report.summary.insert("intercept".into(), fit.intercept);
    }
    report.notes.push(format!(
        "Sup over {} sample-spanning y points plus one saturated point on each side, times {} covariate points.",
        cfg.grid.m_y, cfg.grid.m_x
    ));
    report.notes.push("Median sup error is regressed on n in logs; median_ci is a 95% order-statistic interval.".into());
    if estimator == Estimator::Smoothed {
        report.notes.push("monotonicity_violations counts decreasing y steps of the fitted surface; it is a diagnostic only.".into());
    }
    Ok(report)
}
