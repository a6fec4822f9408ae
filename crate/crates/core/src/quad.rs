//! Adaptive Gauss–Kronrod quadrature (7-point Gauss / 15-point Kronrod pair).
//!
//! Integrands may be vector valued: every component is integrated over the
//! same panels and the panel error is the largest component error. This lets
//! matrix-valued integrals such as `∫ r(u) r(u)ᵀ w(u) du` share one set of
//! function evaluations.
//!
//! Multi-dimensional integrals over axis-aligned boxes are computed by nesting
//! the one-dimensional rule, one axis at a time.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use thiserror::Error;

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];

const WGK: [f64; 8] = [
    0.022_935_322_010_529_225,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_83,
];

// Gauss weights for XGK[1], XGK[3], XGK[5], XGK[7].
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

#[derive(Debug, Clone, PartialEq, Error)]
pub enum QuadError {
    #[error("quadrature did not converge: error estimate {abs_err:.3e} exceeds tolerance {tol:.3e} after {intervals} intervals")]
    NoConvergence {
        abs_err: f64,
        tol: f64,
        intervals: usize,
    },
    #[error("integrand returned a non-finite value at {at}")]
    NonFinite { at: f64 },
    #[error("invalid integration bounds [{lower}, {upper}]")]
    InvalidBounds { lower: f64, upper: f64 },
}

/// Stopping rule for the adaptive scheme.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadConfig {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_intervals: usize,
}

impl QuadConfig {
    pub const fn absolute(abs_tol: f64) -> Self {
        Self {
            abs_tol,
            rel_tol: 0.0,
            max_intervals: 2000,
        }
    }

    fn target(&self, magnitude: f64) -> f64 {
        self.abs_tol.max(self.rel_tol * magnitude)
    }
}

impl Default for QuadConfig {
    fn default() -> Self {
        Self::absolute(1e-10)
    }
}

/// Result of a scalar integration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub abs_err: f64,
    pub evals: usize,
}

/// Result of a vector-valued integration.
#[derive(Debug, Clone, PartialEq)]
pub struct VecEstimate {
    pub value: Vec<f64>,
    pub abs_err: f64,
    pub evals: usize,
}

struct Panel {
    lower: f64,
    upper: f64,
    value: Vec<f64>,
    err: f64,
    floor: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.err == other.err
    }
}

impl Eq for Panel {}

impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.err.total_cmp(&other.err)
    }
}

/// Returns the rescaled error and the roundoff floor below which it cannot go.
fn rescale_error(err: f64, res_abs: f64, res_asc: f64) -> (f64, f64) {
    let mut scaled = err.abs();
    if res_asc != 0.0 && scaled != 0.0 {
        let scale = (200.0 * scaled / res_asc).powf(1.5);
        scaled = if scale < 1.0 { res_asc * scale } else { res_asc };
    }
    let mut floor = 0.0;
    if res_abs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        floor = 50.0 * f64::EPSILON * res_abs;
        scaled = scaled.max(floor);
    }
    (scaled, floor)
}

/// Applies the 15-point rule on `[a, b]`, writing the Kronrod estimate into
/// `out` and returning the panel error estimate and its roundoff floor.
fn kronrod_panel<F>(f: &mut F, a: f64, b: f64, dim: usize, scratch: &mut Scratch, out: &mut [f64]) -> Result<(f64, f64), QuadError>
where
    F: FnMut(f64, &mut [f64]),
{
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let abs_half = half.abs();

    // Node order: center, then (−x, +x) pairs for XGK[0..7].
    let fc = &mut scratch.fc;
    f(center, fc);
    check_finite(fc, center)?;
    for j in 0..7 {
        let dx = half * XGK[j];
        let (lo, hi) = scratch.pairs.split_at_mut(dim);
        f(center - dx, &mut lo[..dim]);
        check_finite(&lo[..dim], center - dx)?;
        f(center + dx, &mut hi[..dim]);
        check_finite(&hi[..dim], center + dx)?;
        for c in 0..dim {
            scratch.f1[j * dim + c] = lo[c];
            scratch.f2[j * dim + c] = hi[c];
        }
    }

    let mut worst = 0.0_f64;
    let mut floor = 0.0_f64;
    for c in 0..dim {
        let fcv = scratch.fc[c];
        let mut res_k = fcv * WGK[7];
        let mut res_g = fcv * WG[3];
        let mut res_abs = res_k.abs();
        for j in 0..7 {
            let lo = scratch.f1[j * dim + c];
            let hi = scratch.f2[j * dim + c];
            res_k += WGK[j] * (lo + hi);
            res_abs += WGK[j] * (lo.abs() + hi.abs());
            if j % 2 == 1 {
                res_g += WG[j / 2] * (lo + hi);
            }
        }
        let mean = 0.5 * res_k;
        let mut res_asc = WGK[7] * (fcv - mean).abs();
        for j in 0..7 {
            let lo = scratch.f1[j * dim + c];
            let hi = scratch.f2[j * dim + c];
            res_asc += WGK[j] * ((lo - mean).abs() + (hi - mean).abs());
        }
        let (err, fl) = rescale_error((res_k - res_g) * half, res_abs * abs_half, res_asc * abs_half);
        out[c] = res_k * half;
        worst = worst.max(err);
        floor = floor.max(fl);
    }
    Ok((worst, floor))
}

fn check_finite(values: &[f64], at: f64) -> Result<(), QuadError> {
    if values.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(QuadError::NonFinite { at })
    }
}

struct Scratch {
    fc: Vec<f64>,
    pairs: Vec<f64>,
    f1: Vec<f64>,
    f2: Vec<f64>,
}

impl Scratch {
    fn new(dim: usize) -> Self {
        Self {
            fc: vec![0.0; dim],
            pairs: vec![0.0; 2 * dim],
            f1: vec![0.0; 7 * dim],
            f2: vec![0.0; 7 * dim],
        }
    }
}

/// Integrates a `dim`-component integrand over `[a, b]`.
pub fn integrate_vec<F>(mut f: F, dim: usize, a: f64, b: f64, cfg: &QuadConfig) -> Result<VecEstimate, QuadError>
where
    F: FnMut(f64, &mut [f64]),
{
    if !(a.is_finite() && b.is_finite()) {
        return Err(QuadError::InvalidBounds { lower: a, upper: b });
    }
    if a == b || dim == 0 {
        return Ok(VecEstimate {
            value: vec![0.0; dim],
            abs_err: 0.0,
            evals: 0,
        });
    }

    let mut scratch = Scratch::new(dim);
    let mut value = vec![0.0; dim];
    let (err, floor) = kronrod_panel(&mut f, a, b, dim, &mut scratch, &mut value)?;
    let mut evals = 15;

    let mut total = value.clone();
    let mut total_err = err;
    let mut total_floor = floor;
    let mut heap = BinaryHeap::new();
    heap.push(Panel {
        lower: a,
        upper: b,
        value,
        err,
        floor,
    });

    loop {
        let magnitude = total.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        let tol = cfg.target(magnitude);
        // Once every panel sits at its roundoff floor, splitting cannot help.
        if total_err <= tol || total_err <= total_floor * (1.0 + 1e-9) {
            break;
        }
        if heap.len() >= cfg.max_intervals {
            return Err(QuadError::NoConvergence {
                abs_err: total_err,
                tol,
                intervals: heap.len(),
            });
        }
        let worst = heap.pop().expect("heap holds at least one panel");
        let mid = 0.5 * (worst.lower + worst.upper);
        if mid <= worst.lower || mid >= worst.upper {
            // Panel cannot be split further in floating point.
            return Err(QuadError::NoConvergence {
                abs_err: total_err,
                tol,
                intervals: heap.len() + 1,
            });
        }
        let mut left = vec![0.0; dim];
        let mut right = vec![0.0; dim];
        let (left_err, left_floor) = kronrod_panel(&mut f, worst.lower, mid, dim, &mut scratch, &mut left)?;
        let (right_err, right_floor) = kronrod_panel(&mut f, mid, worst.upper, dim, &mut scratch, &mut right)?;
        evals += 30;
        for c in 0..dim {
            total[c] += left[c] + right[c] - worst.value[c];
        }
        total_err += left_err + right_err - worst.err;
        total_floor += left_floor + right_floor - worst.floor;
        heap.push(Panel {
            lower: worst.lower,
            upper: mid,
            value: left,
            err: left_err,
            floor: left_floor,
        });
        heap.push(Panel {
            lower: mid,
            upper: worst.upper,
            value: right,
            err: right_err,
            floor: right_floor,
        });
    }

    // Re-sum from the panels in position order so the result does not carry
    // the drift of the incremental updates.
    let mut panels = heap.into_vec();
    panels.sort_by(|p, q| p.lower.total_cmp(&q.lower));
    let mut value = vec![0.0; dim];
    let mut abs_err = 0.0;
    for p in &panels {
        for c in 0..dim {
            value[c] += p.value[c];
        }
        abs_err += p.err;
    }
    Ok(VecEstimate { value, abs_err, evals })
}

/// Integrates a scalar function over `[a, b]`.
pub fn integrate<F>(mut f: F, a: f64, b: f64, cfg: &QuadConfig) -> Result<Estimate, QuadError>
where
    F: FnMut(f64) -> f64,
{
    let est = integrate_vec(|t, out: &mut [f64]| out[0] = f(t), 1, a, b, cfg)?;
    Ok(Estimate {
        value: est.value[0],
        abs_err: est.abs_err,
        evals: est.evals,
    })
}

/// Integrates over `[a, b]` split at every breakpoint strictly inside the
/// interval. Use this for integrands with known kinks.
pub fn integrate_vec_split<F>(
    mut f: F,
    dim: usize,
    a: f64,
    b: f64,
    breakpoints: &[f64],
    cfg: &QuadConfig,
) -> Result<VecEstimate, QuadError>
where
    F: FnMut(f64, &mut [f64]),
{
    let mut edges = vec![a];
    let mut inner: Vec<f64> = breakpoints.iter().copied().filter(|&p| p > a && p < b).collect();
    inner.sort_by(f64::total_cmp);
    inner.dedup();
    edges.extend(inner);
    edges.push(b);

    let mut value = vec![0.0; dim];
    let mut abs_err = 0.0;
    let mut evals = 0;
    for piece in edges.windows(2) {
        let est = integrate_vec(&mut f, dim, piece[0], piece[1], cfg)?;
        for c in 0..dim {
            value[c] += est.value[c];
        }
        abs_err += est.abs_err;
        evals += est.evals;
    }
    Ok(VecEstimate { value, abs_err, evals })
}

/// Scalar counterpart of [`integrate_vec_split`].
pub fn integrate_split<F>(mut f: F, a: f64, b: f64, breakpoints: &[f64], cfg: &QuadConfig) -> Result<Estimate, QuadError>
where
    F: FnMut(f64) -> f64,
{
    let est = integrate_vec_split(|t, out: &mut [f64]| out[0] = f(t), 1, a, b, breakpoints, cfg)?;
    Ok(Estimate {
        value: est.value[0],
        abs_err: est.abs_err,
        evals: est.evals,
    })
}

/// Integrates a vector-valued function over the box `∏ [lower_ℓ, upper_ℓ]` by
/// nesting the one-dimensional rule. Every axis is split at `breakpoints`.
pub fn integrate_box<F>(
    mut f: F,
    dim: usize,
    lower: &[f64],
    upper: &[f64],
    breakpoints: &[f64],
    cfg: &QuadConfig,
) -> Result<VecEstimate, QuadError>
where
    F: FnMut(&[f64], &mut [f64]),
{
    assert_eq!(lower.len(), upper.len(), "box bounds must have equal length");
    let mut point = lower.to_vec();
    let mut evals = 0;
    let value = nested(&mut f, dim, lower, upper, breakpoints, cfg, 0, &mut point, &mut evals)?;
    Ok(VecEstimate {
        abs_err: value.1,
        value: value.0,
        evals,
    })
}

#[allow(clippy::too_many_arguments)]
fn nested(
    f: &mut dyn FnMut(&[f64], &mut [f64]),
    dim: usize,
    lower: &[f64],
    upper: &[f64],
    breakpoints: &[f64],
    cfg: &QuadConfig,
    axis: usize,
    point: &mut Vec<f64>,
    evals: &mut usize,
) -> Result<(Vec<f64>, f64), QuadError> {
    let last = axis + 1 == lower.len();
    let mut inner_failure: Option<QuadError> = None;
    let mut inner_err = 0.0_f64;
    let est = integrate_vec_split(
        |t, out: &mut [f64]| {
            point[axis] = t;
            if last {
                *evals += 1;
                f(point, out);
                return;
            }
            if inner_failure.is_some() {
                out.iter_mut().for_each(|o| *o = 0.0);
                return;
            }
            match nested(f, dim, lower, upper, breakpoints, cfg, axis + 1, point, evals) {
                Ok((v, e)) => {
                    out.copy_from_slice(&v);
                    inner_err = inner_err.max(e);
                }
                Err(e) => {
                    inner_failure = Some(e);
                    out.iter_mut().for_each(|o| *o = 0.0);
                }
            }
        },
        dim,
        lower[axis],
        upper[axis],
        breakpoints,
        cfg,
    )?;
    if let Some(e) = inner_failure {
        return Err(e);
    }
    let width = upper[axis] - lower[axis];
    Ok((est.value, est.abs_err + inner_err * width.abs()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomials_are_exact_on_one_panel() {
        let cfg = QuadConfig::absolute(1e-14);
        let est = integrate(|x| x.powi(6) - 3.0 * x * x + 1.0, -1.0, 2.0, &cfg).unwrap();
        let exact = (2f64.powi(7) + 1.0) / 7.0 - (8.0 + 1.0) + 3.0;
        assert!((est.value - exact).abs() < 1e-13);
        assert_eq!(est.evals, 15);
    }

    #[test]
    fn adapts_to_a_kink() {
        let cfg = QuadConfig::absolute(1e-11);
        let est = integrate(|x: f64| x.abs(), -1.0, 0.3, &cfg).unwrap();
        assert!((est.value - (0.5 + 0.045)).abs() < 1e-11);
        let split = integrate_split(|x: f64| x.abs(), -1.0, 0.3, &[0.0], &cfg).unwrap();
        assert!(split.evals < est.evals);
    }

    #[test]
    fn smooth_transcendental() {
        let cfg = QuadConfig::absolute(1e-12);
        let est = integrate(|x: f64| x.exp() * x.sin(), 0.0, std::f64::consts::PI, &cfg).unwrap();
        let exact = 0.5 * (std::f64::consts::PI.exp() + 1.0);
        assert!((est.value - exact).abs() < 1e-12);
    }

    #[test]
    fn reversed_bounds_flip_sign() {
        let cfg = QuadConfig::default();
        let fwd = integrate(|x: f64| x.cos(), 0.0, 1.0, &cfg).unwrap();
        let bwd = integrate(|x: f64| x.cos(), 1.0, 0.0, &cfg).unwrap();
        assert!((fwd.value + bwd.value).abs() < 1e-14);
    }

    #[test]
    fn non_finite_integrand_is_reported() {
        let cfg = QuadConfig::default();
        let err = integrate(|x: f64| 1.0 / x, 0.0, 1.0, &cfg).unwrap_err();
        assert!(matches!(err, QuadError::NonFinite { .. } | QuadError::NoConvergence { .. }));
    }

    #[test]
    fn vector_components_share_panels() {
        let cfg = QuadConfig::absolute(1e-13);
        let est = integrate_vec(
            |x, out: &mut [f64]| {
                out[0] = 1.0;
                out[1] = x;
                out[2] = x * x;
            },
            3,
            0.0,
            3.0,
            &cfg,
        )
        .unwrap();
        assert!((est.value[0] - 3.0).abs() < 1e-13);
        assert!((est.value[1] - 4.5).abs() < 1e-13);
        assert!((est.value[2] - 9.0).abs() < 1e-12);
    }

    #[test]
    fn box_integral_of_separable_function() {
        let cfg = QuadConfig::absolute(1e-12);
        let est = integrate_box(
            |p, out: &mut [f64]| out[0] = p[0].exp() * p[1] * p[1],
            1,
            &[0.0, -1.0],
            &[1.0, 2.0],
            &[0.0],
            &cfg,
        )
        .unwrap();
        let exact = (1f64.exp() - 1.0) * 3.0;
        assert!((est.value[0] - exact).abs() < 1e-11);
    }
}
