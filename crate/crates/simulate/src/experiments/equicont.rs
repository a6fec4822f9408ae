//! Stochastic equicontinuity of `y ↦ β̂₀(y) − β̄₀(y)`.

use condist_core::grid::linspace;
use condist_core::oracle::pseudo_true;
use condist_core::{ConditionalLaw, LocalWindow};
use rayon::prelude::*;

use super::{bandwidths, log_rate, seed_for, Setup, EMPIRICAL_NOTE};
use crate::config::ExperimentConfig;
use crate::error::SimError;
use crate::report::{stats, Aggregate, Record, SimulationReport};
use crate::stats::{max_over_min, median};

/// Number of steps of `δ/STENCIL_STEPS` placed above each base point.
pub const STENCIL_STEPS: usize = 4;

/// `max |v_j − v_i|` over pairs with `|y_j − y_i| ≤ δ`; `ys` must be sorted.
/// Zero at `δ = 0` (for distinct `ys`) and nondecreasing in `δ`.
pub fn modulus(ys: &[f64], vals: &[f64], delta: f64) -> f64 {
    let reach = delta * (1.0 + 1e-9);
    let mut best = 0.0_f64;
    for i in 0..ys.len() {
        for j in (i + 1)..ys.len() {
            if ys[j] - ys[i] > reach {
                break;
            }
            best = best.max((vals[j] - vals[i]).abs());
        }
    }
    best
}

/// Base points across the `y` box, each followed by `STENCIL_STEPS` points
/// spaced `δ/STENCIL_STEPS` apart, merged into one sorted grid.
pub fn stencil_grid(y_box: (f64, f64), m: usize, delta: f64) -> Vec<f64> {
    let step = delta / STENCIL_STEPS as f64;
    let mut ys: Vec<f64> = linspace(y_box.0, y_box.1, m)
        .into_iter()
        .flat_map(|b| (0..=STENCIL_STEPS).map(move |t| b + t as f64 * step))
        .collect();
    ys.sort_by(f64::total_cmp);
    ys.dedup();
    ys
}

/// Per replication: the modulus of `β̂₀ − β̄₀` at scale `δ_n`, maximized
/// over the covariate grid, compared with
/// `√(|log h₁|/(nh₁^d))·(δ_n/h₂) + |log h₁|/(nh₁^d)`.
pub fn run_equicont(cfg: &ExperimentConfig) -> Result<SimulationReport, SimError> {
    let setup = Setup::new(cfg)?;
    let law = &setup.law;
    let d = law.dim();
    let y_box = cfg.y_box(law);

    let mut report = SimulationReport::new("equicont", cfg);
    let mut normalized = Vec::new();
    for (k, &n) in cfg.n.iter().enumerate() {
        let bw = bandwidths(cfg, n)?;
        let delta = cfg.delta(n);
        let ys = stencil_grid(y_box, cfg.grid.m_y, delta);
        let m_y = ys.len();
        let beta_bar = (0..setup.x_grid.len() * m_y)
            .into_par_iter()
            .map(|idx| {
                let (ix, iy) = (idx / m_y, idx % m_y);
                Ok(pseudo_true(ys[iy], &setup.x_grid[ix], bw, law, &setup.spec)?.beta_bar[0])
            })
            .collect::<Result<Vec<f64>, SimError>>()?;

        let records = (0..cfg.replications)
            .into_par_iter()
            .map(|r| {
                let seed = seed_for(cfg, k, r);
                let sample = law.draw(n, seed)?;
                let mut worst = 0.0_f64;
                let mut b = vec![0.0; d + 1];
                let mut diff = vec![0.0; m_y];
                for (ix, x) in setup.x_grid.iter().enumerate() {
                    let window = LocalWindow::new(&sample, x, bw.h1, &setup.spec, setup.opts)?;
                    if !window.is_solvable() {
                        return Ok(Record::excluded(n, r, seed, format!("singular design at x = {x:?}")));
                    }
                    for (iy, &y) in ys.iter().enumerate() {
                        window.response_smoothed(y, bw.h2, &setup.spec, &mut b);
                        diff[iy] = window.solve(&b)?[0] - beta_bar[ix * m_y + iy];
                    }
                    worst = worst.max(modulus(&ys, &diff, delta));
                }
                Ok(Record::replication(n, r, seed, stats([("modulus", worst)])))
            })
            .collect::<Result<Vec<Record>, SimError>>()?;

        let moduli: Vec<f64> = records.iter().filter_map(|r| r.value("modulus")).collect();
        let rate = log_rate(n, bw.h1, d);
        let bound = rate.sqrt() * (delta / bw.h2) + rate;
        let mut agg = stats([
            ("h1", bw.h1),
            ("h2", bw.h2),
            ("delta", delta),
            ("bound", bound),
            ("excluded", (records.len() - moduli.len()) as f64),
            ("used", moduli.len() as f64),
        ]);
        if !moduli.is_empty() {
            let med = median(&moduli);
            agg.extend(stats([("median_modulus", med), ("normalized_modulus", med / bound)]));
            normalized.push(med / bound);
        }
        report.aggregates.push(Aggregate::for_n(n, agg));
        report.records.extend(records);
    }
    report.summary.insert("excluded".into(), report.excluded() as f64);
    if !normalized.is_empty() {
        report.summary.insert("normalized_max_over_min".into(), max_over_min(&normalized));
    }
    report.notes.push(format!(
        "Pairs come from {} base points in the y box, each with {} steps of δ_n/{}; log h₁ is read as |log h₁|.",
        cfg.grid.m_y, STENCIL_STEPS, STENCIL_STEPS
    ));
    report.notes.push(EMPIRICAL_NOTE.into());
    Ok(report)
}
