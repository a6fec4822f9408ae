use condist_core::dgp::{ConditionalLaw, DgpId, DgpSpec};
use condist_core::quad::{integrate_box, QuadConfig};

const STEP: f64 = 1e-4;
const FD_TOL: f64 = 1e-5;

fn points(id: DgpId) -> Vec<(f64, Vec<f64>)> {
    match id {
        DgpId::A => vec![(0.25, vec![0.5]), (-1.0, vec![0.2]), (1.7, vec![0.9])],
        DgpId::B => vec![(1.0, vec![0.5, 0.5]), (0.2, vec![0.1, 0.7]), (2.3, vec![0.8, 0.6])],
        DgpId::C => vec![(0.8, vec![0.5]), (0.3, vec![0.1]), (1.5, vec![0.9])],
    }
}

fn bumped(x: &[f64], l: usize, delta: f64) -> Vec<f64> {
    let mut v = x.to_vec();
    v[l] += delta;
    v
}

#[test]
fn derivatives_match_finite_differences() {
    for id in DgpId::ALL {
        let law = DgpSpec::new(id);
        let d = law.dim();
        for (y, x) in points(id) {
            let truth = law.truth(y, &x).unwrap();
            let f = |y: f64, x: &[f64]| law.cdf(y, x);
            let fyy = (f(y + STEP, &x) - 2.0 * f(y, &x) + f(y - STEP, &x)) / (STEP * STEP);
            assert!((fyy - truth.d2_dy2).abs() < FD_TOL, "{id} F_yy {fyy} vs {}", truth.d2_dy2);
            let fy = (f(y + STEP, &x) - f(y - STEP, &x)) / (2.0 * STEP);
            assert!((fy - law.cond_density(y, &x)).abs() < FD_TOL);
            for l in 0..d {
                let g = (f(y, &bumped(&x, l, STEP)) - f(y, &bumped(&x, l, -STEP))) / (2.0 * STEP);
                assert!((g - truth.grad_x[l]).abs() < FD_TOL, "{id} F_x{l}");
                for m in 0..d {
                    let pp = f(y, &bumped(&bumped(&x, l, STEP), m, STEP));
                    let pm = f(y, &bumped(&bumped(&x, l, STEP), m, -STEP));
                    let mp = f(y, &bumped(&bumped(&x, l, -STEP), m, STEP));
                    let mm = f(y, &bumped(&bumped(&x, l, -STEP), m, -STEP));
                    let h = (pp - pm - mp + mm) / (4.0 * STEP * STEP);
                    assert!((h - truth.hess_x[l * d + m]).abs() < FD_TOL, "{id} F_x{l}x{m}: {h} vs {}", truth.hess_x[l * d + m]);
                }
            }
        }
    }
}

#[test]
fn joint_density_has_unit_mass() {
    for id in DgpId::ALL {
        let law = DgpSpec::new(id);
        let s = law.support();
        let (ylo, yhi) = law.y_range();
        let mut lower = vec![ylo];
        let mut upper = vec![yhi];
        lower.extend_from_slice(s.lower());
        upper.extend_from_slice(s.upper());
        let est = integrate_box(
            |p, out: &mut [f64]| out[0] = law.joint(p[0], &p[1..]),
            1,
            &lower,
            &upper,
            &[],
            &QuadConfig::absolute(1e-10),
        )
        .unwrap();
        assert!((est.value[0] - 1.0).abs() < 1e-8, "{id}: mass {}", est.value[0]);
    }
}

/// Kolmogorov distance of the probability integral transforms from uniform.
fn ks_uniform(mut u: Vec<f64>) -> f64 {
    u.sort_by(f64::total_cmp);
    let n = u.len() as f64;
    u.iter()
        .enumerate()
        .map(|(i, &v)| (v - i as f64 / n).max((i + 1) as f64 / n - v))
        .fold(0.0, f64::max)
}

#[test]
fn draws_follow_the_conditional_law() {
    let n = 100_000;
    for id in DgpId::ALL {
        let law = DgpSpec::new(id);
        let sample = law.draw(n, 99).unwrap();
        let pit: Vec<f64> = (0..n).map(|i| law.cdf(sample.y()[i], sample.x_row(i))).collect();
        let ks = ks_uniform(pit.clone());
        assert!(ks < 1.95 / (n as f64).sqrt(), "{id}: KS {ks}");

        // Narrow bins in the first covariate: the law must also hold locally.
        for bin in 0..5 {
            let (lo, hi) = (bin as f64 * 0.2, (bin + 1) as f64 * 0.2);
            let idx: Vec<usize> = (0..n).filter(|&i| (lo..hi).contains(&sample.x_row(i)[0])).collect();
            let local: Vec<f64> = idx.iter().map(|&i| pit[i]).collect();
            let m = local.len() as f64;
            let ks = ks_uniform(local);
            assert!(ks < 1.95 / m.sqrt(), "{id} bin {bin}: KS {ks}");
            let below = idx.iter().filter(|&&i| pit[i] <= 0.5).count() as f64 / m;
            assert!((below - 0.5).abs() < 0.01, "{id} bin {bin}: median fraction {below}");
        }
    }
}
