//! Asymptotic normality of the integrated estimate `θ̂ = ∬ F̂`.

use condist_core::grid::linspace;
use condist_core::llr::surface;
use condist_core::oracle::{clt_variance, theta};
use condist_core::{ConditionalLaw, Estimator};
use rayon::prelude::*;

use super::{bandwidths, seed_for, trapezoid_weights, Setup};
use crate::config::ExperimentConfig;
use crate::error::SimError;
use crate::report::{stats, Aggregate, Record, SimulationReport};
use crate::stats::moments;

/// `θ̂` is the trapezoid rule applied to the smoothed surface on the
/// `y_box × support` grid; `z = √n (θ̂ − θ)` is compared with `N(0, V)`.
pub fn run_clt(cfg: &ExperimentConfig) -> Result<SimulationReport, SimError> {
    let setup = Setup::new(cfg)?;
    let y_box = cfg.y_box(&setup.law);
    let theta0 = theta(&setup.law, y_box)?;
    let v = clt_variance(&setup.law, y_box)?;
    let y_grid = linspace(y_box.0, y_box.1, cfg.grid.m_y);
    let wy = trapezoid_weights(&y_grid);
    let xs: Vec<f64> = setup.x_grid.iter().map(|x| x[0]).collect();
    let wx = trapezoid_weights(&xs);

    let mut report = SimulationReport::new("clt", cfg);
    for (k, &n) in cfg.n.iter().enumerate() {
        let bw = bandwidths(cfg, n)?;
        let records = (0..cfg.replications)
            .into_par_iter()
            .map(|r| {
                let seed = seed_for(cfg, k, r);
                let sample = setup.law.draw(n, seed)?;
                let s = surface(&sample, &y_grid, &setup.x_grid, bw, &setup.spec, Estimator::Smoothed, setup.opts)?;
                if s.singular_columns() > 0 {
                    return Ok(Record::excluded(n, r, seed, format!("singular design in {} columns", s.singular_columns())));
                }
                let mut theta_hat = 0.0;
                for (ix, col) in s.columns.iter().enumerate() {
                    let inner: f64 = col.fhat.iter().zip(&wy).map(|(f, w)| f * w).sum();
                    theta_hat += wx[ix] * inner;
                }
                let z = (n as f64).sqrt() * (theta_hat - theta0);
                Ok(Record::replication(n, r, seed, stats([("theta_hat", theta_hat), ("z", z)])))
            })
            .collect::<Result<Vec<Record>, SimError>>()?;

        let thetas: Vec<f64> = records.iter().filter_map(|r| r.value("theta_hat")).collect();
        let zs: Vec<f64> = records.iter().filter_map(|r| r.value("z")).collect();
        let excluded = records.len() - thetas.len();
        let mut agg = stats([("h1", bw.h1), ("h2", bw.h2), ("excluded", excluded as f64), ("used", thetas.len() as f64)]);
        if thetas.len() >= 2 {
            let mt = moments(&thetas);
            let mz = moments(&zs);
            let se = (mt.variance / thetas.len() as f64).sqrt();
            agg.extend(stats([
                ("mean_theta_hat", mt.mean),
                ("se_mean_theta_hat", se),
                ("mean_error_in_se", (mt.mean - theta0) / se),
                ("mean_z", mz.mean),
                ("var_z", mz.variance),
                ("var_ratio", mz.variance / v),
                ("skewness", mz.skewness),
                ("excess_kurtosis", mz.excess_kurtosis),
            ]));
        }
        report.aggregates.push(Aggregate::for_n(n, agg));
        report.records.extend(records);
    }
    report.summary = stats([
        ("theta", theta0),
        ("v", v),
        ("y_lo", y_box.0),
        ("y_hi", y_box.1),
        ("excluded", report.excluded() as f64),
    ]);
    report.notes.push(format!(
        "θ̂ uses the trapezoid rule on a {}×{} grid; its discretization error is far below the sampling error at these sizes.",
        cfg.grid.m_y, cfg.grid.m_x
    ));
    report.notes.push("θ and V come from quadrature over the same y box; mass outside the box enters V exactly.".into());
    Ok(report)
}
