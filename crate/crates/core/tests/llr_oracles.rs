use condist_core::dgp::{ConditionalLaw, DgpId, DgpSpec, SupportSpec};
use condist_core::kernels::KernelSpec;
use condist_core::llr::{
    design_matrix, fit_smoothed, fit_unsmoothed, local_response, surface, weighted_mean_response, Bandwidths, Estimator,
    FitOptions, LocalWindow, Sample,
};
use condist_core::grid::{box_grid, linspace};
use proptest::prelude::*;

fn epan() -> KernelSpec {
    KernelSpec::epanechnikov(1)
}

#[test]
fn four_point_fit_matches_long_hand() {
    let sample = Sample::new(vec![0.2, 0.3, 0.5, 0.0], vec![0.45, 0.5, 0.55, 0.62], SupportSpec::unit(1)).unwrap();
    let bw = Bandwidths::new(0.1, 0.2).unwrap();
    // u = (-0.5, 0, 0.5, 1.2), w = (0.5625, 0.75, 0.5625, 0), K = (0.84375, 0.5, 0, 1).
    let scale = 1.0 / (4.0 * 0.1);
    let xi = design_matrix(&sample, &[0.5], 0.1, &epan()).unwrap();
    let expect_xi = [1.875 * scale, 0.0, 0.0, 0.28125 * scale];
    for (a, b) in xi.as_slice().iter().zip(expect_xi) {
        assert!((a - b).abs() < 1e-14, "{a} vs {b}");
    }
    let ups = local_response(&sample, 0.3, &[0.5], bw, &epan()).unwrap();
    let s0 = 0.5625 * 0.84375 + 0.75 * 0.5;
    let s1 = -0.5 * 0.5625 * 0.84375;
    assert!((ups[0] - s0 * scale).abs() < 1e-14);
    assert!((ups[1] - s1 * scale).abs() < 1e-14);

    let fit = fit_smoothed(&sample, 0.3, &[0.5], bw, &epan(), FitOptions::default()).unwrap();
    assert!((fit.beta0 - 0.453125).abs() < 1e-14);
    assert!((fit.grad[0] + 8.4375).abs() < 1e-12);
    assert_eq!(fit.n_local, 3);
}

#[test]
fn spread_four_point_fixture() {
    let sample = Sample::new(vec![0.2, 0.45, 0.5, 0.9], vec![0.3, 0.4, 0.6, 0.7], SupportSpec::unit(1)).unwrap();
    // u = (-0.4, -0.2, 0.2, 0.4), w = (0.63, 0.72, 0.72, 0.63), scale 1/(4 * 0.5).
    let xi = design_matrix(&sample, &[0.5], 0.5, &epan()).unwrap();
    for (a, b) in xi.as_slice().iter().zip([1.35, 0.0, 0.0, 0.1296]) {
        assert!((a - b).abs() < 1e-14, "{a} vs {b}");
    }
    // v = (3, 0.5, 0, -4), K = (1, 0.84375, 0.5, 0).
    let ups = local_response(&sample, 0.5, &[0.5], Bandwidths::new(0.5, 0.1).unwrap(), &epan()).unwrap();
    assert!((ups[0] - 0.79875).abs() < 1e-14);
    assert!((ups[1] + 0.15075).abs() < 1e-14);
}

/// Weighted least squares through Cramer's rule on raw sums, in reverse order.
fn cramer_fit(sample: &Sample, y: f64, x: f64, bw: Bandwidths) -> (f64, f64) {
    let (mut s0, mut s1, mut s2, mut t0, mut t1) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for i in (0..sample.len()).rev() {
        let u = (sample.x()[i] - x) / bw.h1;
        if u.abs() >= 1.0 {
            continue;
        }
        let w = 0.75 * (1.0 - u * u);
        let v = ((y - sample.y()[i]) / bw.h2).clamp(-1.0, 1.0);
        let k = 0.5 + 0.75 * v - 0.25 * v * v * v;
        s0 += w;
        s1 += u * w;
        s2 += u * u * w;
        t0 += k * w;
        t1 += u * k * w;
    }
    let det = s0 * s2 - s1 * s1;
    ((s2 * t0 - s1 * t1) / det, (s0 * t1 - s1 * t0) / det / bw.h1)
}

#[test]
fn twenty_point_normal_equations() {
    let sample = DgpSpec::new(DgpId::A).draw(20, 7).unwrap();
    let bw = Bandwidths::new(0.3, 0.1).unwrap();
    let fit = fit_smoothed(&sample, 0.25, &[0.5], bw, &epan(), FitOptions::default()).unwrap();
    let (b0, b1) = cramer_fit(&sample, 0.25, 0.5, bw);
    assert!((fit.beta0 - b0).abs() < 1e-12, "{} vs {b0}", fit.beta0);
    assert!((fit.grad[0] - b1).abs() < 1e-10, "{} vs {b1}", fit.grad[0]);
}

#[test]
fn window_path_agrees_with_direct_sums() {
    let sample = DgpSpec::new(DgpId::A).draw(500, 3).unwrap();
    let bw = Bandwidths::new(0.15, 0.2).unwrap();
    for x in [0.0, 0.3, 0.97] {
        let window = LocalWindow::new(&sample, &[x], bw.h1, &epan(), FitOptions::default()).unwrap();
        assert!(window.design().max_abs_diff(&design_matrix(&sample, &[x], bw.h1, &epan()).unwrap()) < 1e-12);
        for y in linspace(-3.0, 4.0, 57) {
            let direct = local_response(&sample, y, &[x], bw, &epan()).unwrap();
            let mut fast = vec![0.0; 2];
            window.response_smoothed(y, bw.h2, &epan(), &mut fast);
            for (a, b) in direct.iter().zip(&fast) {
                assert!((a - b).abs() < 1e-12, "x={x} y={y}: {a} vs {b}");
            }
        }
    }
}

#[test]
fn unsmoothed_is_the_small_h2_limit() {
    let sample = DgpSpec::new(DgpId::A).draw(300, 11).unwrap();
    let opts = FitOptions::default();
    for y in linspace(-2.0, 3.0, 23) {
        let a = fit_smoothed(&sample, y, &[0.4], Bandwidths::new(0.2, 1e-8).unwrap(), &epan(), opts).unwrap();
        let b = fit_unsmoothed(&sample, y, &[0.4], 0.2, &epan(), opts).unwrap();
        assert!((a.beta0 - b.beta0).abs() < 1e-12);
    }
}

#[test]
fn symmetric_design_gives_monotone_fit() {
    // Covariates placed symmetrically about x make every equivalent-kernel
    // weight nonnegative, so the fitted intercept is a weighted mean.
    let xs: Vec<f64> = (0..41).map(|i| 0.3 + 0.01 * i as f64).collect();
    let ys: Vec<f64> = (0..41).map(|i| ((i * 37) % 41) as f64 / 10.0 - 2.0).collect();
    let sample = Sample::new(ys, xs, SupportSpec::unit(1)).unwrap();
    let bw = Bandwidths::new(0.15, 0.3).unwrap();
    let grid = linspace(-3.0, 3.0, 301);
    let s = surface(&sample, &grid, &[vec![0.5]], bw, &epan(), Estimator::Smoothed, FitOptions::default()).unwrap();
    assert_eq!(s.monotonicity_violations(1e-12), 0);
    for (iy, &y) in grid.iter().enumerate() {
        let m = weighted_mean_response(&sample, y, &[0.5], bw, &epan()).unwrap();
        assert!((s.value(iy, 0).unwrap() - m).abs() < 1e-12);
    }
}

#[test]
fn surface_error_is_small_on_dgp_a() {
    let law = DgpSpec::new(DgpId::A);
    let sample = law.draw(2000, 2024).unwrap();
    let bw = Bandwidths::new(0.2, 0.2).unwrap();
    let y_grid = linspace(-3.0, 4.0, 201);
    let x_grid = box_grid(law.support(), 51);
    let s = surface(&sample, &y_grid, &x_grid, bw, &epan(), Estimator::Smoothed, FitOptions::default()).unwrap();
    assert_eq!(s.singular_columns(), 0);
    let mut sup = 0.0_f64;
    for (ix, x) in x_grid.iter().enumerate() {
        for (iy, &y) in y_grid.iter().enumerate() {
            sup = sup.max((s.value(iy, ix).unwrap() - law.cdf(y, x)).abs());
        }
    }
    assert!(sup < 0.5, "sup error {sup}");
    assert!(sup > 0.0);
}

fn arb_sample() -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
    prop::collection::vec((0.0f64..1.0, -3.0f64..3.0), 8..60).prop_map(|v| v.into_iter().map(|(x, y)| (y, x)).unzip())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn reversed_order_gives_same_fit((ys, xs) in arb_sample(), x in 0.0f64..1.0, y in -3.0f64..3.0) {
        let bw = Bandwidths::new(0.4, 0.5).unwrap();
        let fwd = Sample::new(ys.clone(), xs.clone(), SupportSpec::unit(1)).unwrap();
        let rev = Sample::new(ys.into_iter().rev().collect(), xs.into_iter().rev().collect(), SupportSpec::unit(1)).unwrap();
        let opts = FitOptions::default();
        if let (Ok(a), Ok(b)) = (fit_smoothed(&fwd, y, &[x], bw, &epan(), opts), fit_smoothed(&rev, y, &[x], bw, &epan(), opts)) {
            prop_assume!(a.min_eig > 1e-3);
            prop_assert!((a.beta0 - b.beta0).abs() < 1e-13);
        }
    }

    #[test]
    fn location_and_scale_equivariance(
        (ys, xs) in arb_sample(), x in 0.0f64..1.0, y in -3.0f64..3.0,
        shift in -5.0f64..5.0, a in -2.0f64..2.0, b in 0.25f64..4.0,
    ) {
        let bw = Bandwidths::new(0.4, 0.5).unwrap();
        let opts = FitOptions::default();
        let base = Sample::new(ys.clone(), xs.clone(), SupportSpec::unit(1)).unwrap();
        let moved = Sample::new(
            ys.iter().map(|v| a + b * v).collect(),
            xs.iter().map(|v| v + shift).collect(),
            SupportSpec::new(vec![shift], vec![1.0 + shift]).unwrap(),
        ).unwrap();
        let bw_moved = Bandwidths::new(0.4, 0.5 * b).unwrap();
        if let Ok(f0) = fit_smoothed(&base, y, &[x], bw, &epan(), opts) {
            prop_assume!(f0.min_eig > 1e-3);
            let f1 = fit_smoothed(&moved, a + b * y, &[x + shift], bw_moved, &epan(), opts).unwrap();
            prop_assert!((f0.beta0 - f1.beta0).abs() < 1e-8, "{} vs {}", f0.beta0, f1.beta0);
        }
    }

    #[test]
    fn weighted_mean_is_monotone_in_y((ys, xs) in arb_sample(), x in 0.0f64..1.0) {
        let sample = Sample::new(ys, xs, SupportSpec::unit(1)).unwrap();
        let bw = Bandwidths::new(0.3, 0.4).unwrap();
        let mut prev = -1.0;
        for y in linspace(-4.0, 4.0, 81) {
            if let Some(m) = weighted_mean_response(&sample, y, &[x], bw, &epan()) {
                prop_assert!(m >= prev - 1e-15);
                prev = m;
            }
        }
    }
}
