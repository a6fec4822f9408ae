use condist_core::grid::{box_grid, linspace};
use condist_core::llr::surface;
use condist_core::{Bandwidths, ConditionalLaw, Estimator, FitOptions, IndependentUniform, KernelSpec};
use condist_simulate::{run_alr, run_bias, run_equicont, run_estimate, run_rates, ExperimentConfig};

fn cfg(text: &str) -> ExperimentConfig {
    ExperimentConfig::from_json(text).unwrap()
}

#[test]
fn doubling_replications_keeps_median_inside_its_interval() {
    let base = r#"{"dgp": "A", "n": [250, 500, 1000, 2000], "replications": 100, "grid": {"m_y": 101, "m_x": 26}, "seed": 17}"#;
    let small = cfg(base);
    let mut big = small.clone();
    big.replications = 200;
    let a = run_rates(&small, Estimator::Smoothed).unwrap();
    let b = run_rates(&big, Estimator::Smoothed).unwrap();
    for &n in &small.n {
        let (ga, gb) = (a.aggregate(n).unwrap(), b.aggregate(n).unwrap());
        let m = gb.stat("median").unwrap();
        let (lo, hi) = (ga.stat("median_ci_lo").unwrap(), ga.stat("median_ci_hi").unwrap());
        assert!(lo <= m && m <= hi, "n = {n}: {m} outside [{lo}, {hi}]");
    }
}

#[test]
fn alr_remainder_vanishes_with_fixed_bandwidth() {
    let c = cfg(r#"{"dgp": "A", "n": [500, 8000], "h1": 0.2, "h2": 0.2, "replications": 6, "grid": {"m_y": 41, "m_x": 11}, "seed": 4}"#);
    let r = run_alr(&c).unwrap();
    let small = r.aggregate(500).unwrap().stat("median_sup_remainder").unwrap();
    let large = r.aggregate(8000).unwrap().stat("median_sup_remainder").unwrap();
    assert!(large < 0.25 * small, "{small} -> {large}");
}

#[test]
fn equicont_modulus_is_zero_without_increments() {
    let mut c = cfg(r#"{"dgp": "A", "n": [300, 600], "replications": 3, "grid": {"m_y": 11, "m_x": 6}}"#);
    c.delta.c = 1e-300;
    let r = run_equicont(&c).unwrap();
    for rec in &r.records {
        assert_eq!(rec.value("modulus"), Some(0.0));
    }
}

#[test]
fn bias_experiment_on_dgp_a() {
    let r = run_bias(&cfg(r#"{"dgp": "A"}"#)).unwrap();
    assert!(r.stat("max_residual_ratio").unwrap() <= 0.6);
    assert_eq!(r.stat("boundary_general_wins"), Some(3.0));
}

#[test]
fn estimate_reports_each_estimator() {
    let out = run_estimate(&cfg(r#"{"dgp": "C", "n": [1500], "seed": 1}"#)).unwrap();
    assert_eq!(out.surfaces.len(), 2);
    assert_eq!(out.sample.len(), 1500);
    for a in &out.report.aggregates {
        assert_eq!(a.stat("singular_columns"), Some(0.0));
        assert!(a.stat("sup_error").unwrap() < 0.2);
    }
}

/// With `Y ⊥ X` uniform, `θ = 0.5` on the unit square and the integrated
/// estimate is centred on it.
#[test]
fn integrated_estimate_is_centred_for_independent_uniform() {
    let law = IndependentUniform::new(1);
    let spec = KernelSpec::epanechnikov(1);
    let ys = linspace(0.0, 1.0, 41);
    let xs = box_grid(law.support(), 21);
    let n = 1000;
    let h = (n as f64).powf(-0.35);
    let bw = Bandwidths::new(h, h).unwrap();
    let trap = |g: &[f64], f: &dyn Fn(usize) -> f64| (0..g.len() - 1).map(|i| 0.5 * (g[i + 1] - g[i]) * (f(i) + f(i + 1))).sum::<f64>();
    let reps = 200;
    let thetas: Vec<f64> = (0..reps)
        .map(|r| {
            let sample = law.draw(n, 1000 + r).unwrap();
            let s = surface(&sample, &ys, &xs, bw, &spec, Estimator::Smoothed, FitOptions::default()).unwrap();
            let xg: Vec<f64> = xs.iter().map(|x| x[0]).collect();
            trap(&xg, &|ix| trap(&ys, &|iy| s.value(iy, ix).unwrap()))
        })
        .collect();
    let mean = thetas.iter().sum::<f64>() / reps as f64;
    let sd = (thetas.iter().map(|t| (t - mean).powi(2)).sum::<f64>() / (reps - 1) as f64).sqrt();
    // The smoothed response biases θ̂ near y = 0 and 1 by O(h²).
    let allowance = 4.0 * sd / (reps as f64).sqrt() + spec.kappa2_k() * h * h;
    assert!((mean - 0.5).abs() < allowance, "mean {mean}, allowance {allowance}");
}
