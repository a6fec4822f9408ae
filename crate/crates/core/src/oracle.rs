//! Population quantities computed by deterministic quadrature.
//!
//! With `u = (X − x)/h₁` the population normal equations become integrals
//! over the part of `[-1,1]^d` that maps back into the support box:
//!
//! ```text
//! Ξ(x,h₁)  = ∫ r(u) r(u)ᵀ w(u) f_X(x + h₁u) du
//! υ(y,x)   = ∫ r(u) w(u) F̃(y | x + h₁u) f_X(x + h₁u) du
//! F̃(y|x)  = E[K((y − Y)/h₂) | X = x] = ∫ k(v) F(y − h₂v | x) dv
//! H₁β̄     = Ξ⁻¹ υ
//! ```
//!
//! Because supports are boxes, every integration region is itself a box and
//! is integrated exactly (no indicator functions inside the integrand).
//!
//! Bias predictions carry the true kernel second moments `κ₂` rather than
//! assuming they equal one.

use serde::{Deserialize, Serialize};

use crate::dgp::{ConditionalLaw, SupportSpec};
use crate::error::Error;
use crate::kernels::KernelSpec;
use crate::linalg::SymMatrix;
use crate::llr::Bandwidths;
use crate::quad::{integrate_box, integrate_split, QuadConfig};

/// Tolerance for integrals of kernel polynomials (`Ω` and moment integrals).
const MOMENT_TOL: f64 = 1e-13;
/// Tolerance for `F̃`, the innermost integral of the nested computations.
const SMOOTHED_CDF_TOL: f64 = 1e-13;
/// Outer tolerance for `υ` and `Ξ` with a non-constant integrand.
const OUTER_TOL: f64 = 1e-12;
/// Tolerance for `θ` and `V`.
const FUNCTIONAL_TOL: f64 = 1e-11;

fn cfg(tol: f64) -> QuadConfig {
    QuadConfig {
        abs_tol: tol,
        rel_tol: 0.0,
        max_intervals: 4000,
    }
}

fn check_inside(support: &SupportSpec, x: &[f64]) -> Result<(), Error> {
    if support.contains(x) {
        Ok(())
    } else {
        Err(Error::OutsideSupport { point: x.to_vec() })
    }
}

fn upper_to_sym(p: usize, packed: &[f64]) -> SymMatrix {
    let mut m = SymMatrix::zeros(p);
    let mut k = 0;
    for i in 0..p {
        for j in i..p {
            m.set(i, j, packed[k]);
            m.set(j, i, packed[k]);
            k += 1;
        }
    }
    m
}

#[inline]
fn fill_upper_outer(u: &[f64], weight: f64, out: &mut [f64]) {
    let p = u.len() + 1;
    let r = |i: usize| if i == 0 { 1.0 } else { u[i - 1] };
    let mut k = 0;
    for i in 0..p {
        let wi = weight * r(i);
        for j in i..p {
            out[k] = wi * r(j);
            k += 1;
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OmegaReport {
    pub omega: SymMatrix,
    pub eig_min: f64,
    pub eig_max: f64,
}

/// `Ω(x,h₁) = ∫ r(u) r(u)ᵀ w(u) 𝟏{x + h₁u ∈ 𝒳} du`.
pub fn omega(x: &[f64], h1: f64, support: &SupportSpec, spec: &KernelSpec) -> Result<OmegaReport, Error> {
    check_inside(support, x)?;
    Bandwidths::new(h1, 1.0)?;
    let d = support.dim();
    let p = d + 1;
    let (lo, hi) = support.window(x, h1);
    let est = integrate_box(
        |u, out: &mut [f64]| {
            let w = spec.eval_w(u);
            fill_upper_outer(u, w, out);
        },
        p * (p + 1) / 2,
        &lo,
        &hi,
        &spec.w_kinks(),
        &cfg(MOMENT_TOL),
    )?;
    let omega = upper_to_sym(p, &est.value);
    let (eig_min, eig_max) = omega.eig_range();
    Ok(OmegaReport { omega, eig_min, eig_max })
}

/// `Ξ(x,h₁) = ∫ r(u) r(u)ᵀ w(u) f_X(x + h₁u) du`.
pub fn xi_pop<L: ConditionalLaw + ?Sized>(x: &[f64], h1: f64, law: &L, spec: &KernelSpec) -> Result<SymMatrix, Error> {
    let support = law.support();
    check_inside(support, x)?;
    Bandwidths::new(h1, 1.0)?;
    let d = support.dim();
    let p = d + 1;
    let (lo, hi) = support.window(x, h1);
    let mut point = vec![0.0; d];
    let est = integrate_box(
        |u, out: &mut [f64]| {
            for l in 0..d {
                point[l] = x[l] + h1 * u[l];
            }
            let w = spec.eval_w(u) * law.density_x(&point);
            fill_upper_outer(u, w, out);
        },
        p * (p + 1) / 2,
        &lo,
        &hi,
        &spec.w_kinks(),
        &cfg(OUTER_TOL),
    )?;
    Ok(upper_to_sym(p, &est.value))
}

/// `F̃(y|x) = ∫ k(v) F(y − h₂v | x) dv`.
pub fn smoothed_cdf<L: ConditionalLaw + ?Sized>(y: f64, x: &[f64], h2: f64, law: &L, spec: &KernelSpec) -> Result<f64, Error> {
    check_inside(law.support(), x)?;
    Bandwidths::new(1.0, h2)?;
    smoothed_cdf_unchecked(y, x, h2, law, spec)
}

fn smoothed_cdf_unchecked<L: ConditionalLaw + ?Sized>(y: f64, x: &[f64], h2: f64, law: &L, spec: &KernelSpec) -> Result<f64, Error> {
    let k = spec.k();
    let mut breaks: Vec<f64> = k.kinks().to_vec();
    breaks.extend(law.y_kinks(x).into_iter().map(|kink| (y - kink) / h2));
    let est = integrate_split(|v| k.value(v) * law.cdf(y - h2 * v, x), -1.0, 1.0, &breaks, &cfg(SMOOTHED_CDF_TOL))?;
    Ok(est.value)
}

/// `υ(y,x,h₁,h₂) = ∫ r(u) w(u) F̃(y | x + h₁u) f_X(x + h₁u) du`.
pub fn upsilon_pop<L: ConditionalLaw + ?Sized>(y: f64, x: &[f64], bw: Bandwidths, law: &L, spec: &KernelSpec) -> Result<Vec<f64>, Error> {
    let support = law.support();
    check_inside(support, x)?;
    let d = support.dim();
    let (lo, hi) = support.window(x, bw.h1);
    let mut point = vec![0.0; d];
    let mut failure = None;
    let est = integrate_box(
        |u, out: &mut [f64]| {
            for l in 0..d {
                point[l] = x[l] + bw.h1 * u[l];
            }
            let w = spec.eval_w(u);
            let ft = if w > 0.0 {
                match smoothed_cdf_unchecked(y, &point, bw.h2, law, spec) {
                    Ok(v) => v,
                    Err(e) => {
                        failure.get_or_insert(e);
                        0.0
                    }
                }
            } else {
                0.0
            };
            let a = w * ft * law.density_x(&point);
            out[0] = a;
            for l in 0..d {
                out[l + 1] = a * u[l];
            }
        },
        d + 1,
        &lo,
        &hi,
        &spec.w_kinks(),
        &cfg(OUTER_TOL),
    )?;
    if let Some(e) = failure {
        return Err(e);
    }
    Ok(est.value)
}

/// Population minimizer `β̄` of the kernel-weighted least-squares criterion.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PseudoTrue {
    /// `(β̄₀, β̄₁, …, β̄_d)`: the intercept and the slope block on the
    /// original (unscaled) covariate axis.
    pub beta_bar: Vec<f64>,
    pub xi: SymMatrix,
    pub upsilon: Vec<f64>,
}

impl PseudoTrue {
    /// `H₁β̄`.
    pub fn scaled(&self, h1: f64) -> Vec<f64> {
        let mut v = self.beta_bar.clone();
        v.iter_mut().skip(1).for_each(|b| *b *= h1);
        v
    }
}

pub fn pseudo_true<L: ConditionalLaw + ?Sized>(y: f64, x: &[f64], bw: Bandwidths, law: &L, spec: &KernelSpec) -> Result<PseudoTrue, Error> {
    let bw = Bandwidths::new(bw.h1, bw.h2)?;
    let xi = xi_pop(x, bw.h1, law, spec)?;
    let upsilon = upsilon_pop(y, x, bw, law, spec)?;
    let mut beta_bar = xi.cholesky()?.solve(&upsilon);
    beta_bar.iter_mut().skip(1).for_each(|b| *b /= bw.h1);
    Ok(PseudoTrue { beta_bar, xi, upsilon })
}

/// Leading bias term of `β̄₀ − F(y|x)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BiasPrediction {
    /// Contribution of the covariate smoothing (`h₁²` term).
    pub leading_x: f64,
    /// Contribution of the response smoothing (`h₂²` term).
    pub leading_y: f64,
    pub total: f64,
    /// Whether `x ± h₁·1` lies in the support.
    pub interior: bool,
}

/// Diagonal form valid on the interior set:
/// `(h₁²/2) Σ_ℓ κ₂(w_ℓ) ∂²F/∂x_ℓ² + (h₂²/2) κ₂(k) ∂²F/∂y²`.
pub fn bias_interior<L: ConditionalLaw + ?Sized>(y: f64, x: &[f64], bw: Bandwidths, law: &L, spec: &KernelSpec) -> Result<BiasPrediction, Error> {
    let truth = law.truth(y, x)?;
    let d = law.dim();
    let curvature: f64 = (0..d).map(|l| spec.kappa2_w()[l] * truth.hess_x[l * d + l]).sum();
    let leading_x = 0.5 * bw.h1 * bw.h1 * curvature;
    let leading_y = 0.5 * bw.h2 * bw.h2 * spec.kappa2_k() * truth.d2_dy2;
    Ok(BiasPrediction {
        leading_x,
        leading_y,
        total: leading_x + leading_y,
        interior: law.support().is_interior(x, bw.h1),
    })
}

/// General form valid at every `x` in the support, returned as the full
/// vector prediction of `H₁(β̄ − β*)` split into its two terms:
///
/// ```text
/// (h₁²/2) Ω⁻¹ Σ_{ℓ,ℓ'} ∂²F/∂x_ℓ∂x_ℓ' ∫ r(u) u_ℓ u_ℓ' w(u) 𝟏{x+h₁u ∈ 𝒳} du
/// (h₂²/2) κ₂(k) ∂²F/∂y² Ω⁻¹ ∫ r(u) w(u) 𝟏{x+h₁u ∈ 𝒳} du
/// ```
pub fn bias_general_vector<L: ConditionalLaw + ?Sized>(
    y: f64,
    x: &[f64],
    bw: Bandwidths,
    law: &L,
    spec: &KernelSpec,
) -> Result<(Vec<f64>, Vec<f64>), Error> {
    let truth = law.truth(y, x)?;
    let support = law.support();
    let d = support.dim();
    let p = d + 1;
    let (lo, hi) = support.window(x, bw.h1);
    // Layout: [Ω upper (p(p+1)/2) | Σ H_ℓℓ' ∫ r u_ℓ u_ℓ' w (p) | ∫ r w (p)]
    let n_omega = p * (p + 1) / 2;
    let hess = &truth.hess_x;
    let est = integrate_box(
        |u, out: &mut [f64]| {
            let w = spec.eval_w(u);
            fill_upper_outer(u, w, &mut out[..n_omega]);
            let mut quad_form = 0.0;
            for l in 0..d {
                for m in 0..d {
                    quad_form += hess[l * d + m] * u[l] * u[m];
                }
            }
            let a = w * quad_form;
            out[n_omega] = a;
            out[n_omega + p] = w;
            for l in 0..d {
                out[n_omega + 1 + l] = a * u[l];
                out[n_omega + p + 1 + l] = w * u[l];
            }
        },
        n_omega + 2 * p,
        &lo,
        &hi,
        &spec.w_kinks(),
        &cfg(MOMENT_TOL),
    )?;
    let omega = upper_to_sym(p, &est.value[..n_omega]);
    let chol = omega.cholesky()?;
    let mut x_term = chol.solve(&est.value[n_omega..n_omega + p]);
    let mut y_term = chol.solve(&est.value[n_omega + p..]);
    let cx = 0.5 * bw.h1 * bw.h1;
    let cy = 0.5 * bw.h2 * bw.h2 * spec.kappa2_k() * truth.d2_dy2;
    x_term.iter_mut().for_each(|v| *v *= cx);
    y_term.iter_mut().for_each(|v| *v *= cy);
    Ok((x_term, y_term))
}

/// Intercept of the general form.
pub fn bias_general<L: ConditionalLaw + ?Sized>(y: f64, x: &[f64], bw: Bandwidths, law: &L, spec: &KernelSpec) -> Result<BiasPrediction, Error> {
    let (x_term, y_term) = bias_general_vector(y, x, bw, law, spec)?;
    Ok(BiasPrediction {
        leading_x: x_term[0],
        leading_y: y_term[0],
        total: x_term[0] + y_term[0],
        interior: law.support().is_interior(x, bw.h1),
    })
}

/// Interior points get the diagonal form, boundary points the general form.
pub fn bias_prediction<L: ConditionalLaw + ?Sized>(y: f64, x: &[f64], bw: Bandwidths, law: &L, spec: &KernelSpec) -> Result<BiasPrediction, Error> {
    let bw = Bandwidths::new(bw.h1, bw.h2)?;
    check_inside(law.support(), x)?;
    if law.support().is_interior(x, bw.h1) {
        bias_interior(y, x, bw, law, spec)
    } else {
        bias_general(y, x, bw, law, spec)
    }
}

fn y_breaks<L: ConditionalLaw + ?Sized>(law: &L, x: &[f64]) -> Vec<f64> {
    law.y_kinks(x)
}

/// `∫_{y̲}^{ȳ} F(y|x) dy`.
fn integrated_cdf<L: ConditionalLaw + ?Sized>(law: &L, x: &[f64], y_box: (f64, f64)) -> Result<f64, Error> {
    let est = integrate_split(|y| law.cdf(y, x), y_box.0, y_box.1, &y_breaks(law, x), &cfg(FUNCTIONAL_TOL))?;
    Ok(est.value)
}

fn check_y_box(y_box: (f64, f64)) -> Result<(), Error> {
    if y_box.0.is_finite() && y_box.1.is_finite() && y_box.0 < y_box.1 {
        Ok(())
    } else {
        Err(Error::Dimension(format!("invalid y integration box [{}, {}]", y_box.0, y_box.1)))
    }
}

/// `θ = ∫_{y̲}^{ȳ} ∫_𝒳 F(y|x) dx dy`.
pub fn theta<L: ConditionalLaw + ?Sized>(law: &L, y_box: (f64, f64)) -> Result<f64, Error> {
    check_y_box(y_box)?;
    let s = law.support();
    let mut failure = None;
    let est = integrate_box(
        |x, out: &mut [f64]| {
            out[0] = integrated_cdf(law, x, y_box).unwrap_or_else(|e| {
                failure.get_or_insert(e);
                0.0
            });
        },
        1,
        s.lower(),
        s.upper(),
        &[],
        &cfg(FUNCTIONAL_TOL),
    )?;
    if let Some(e) = failure {
        return Err(e);
    }
    Ok(est.value[0])
}

/// `∫_{y̲}^{ȳ} (𝟏{s ≤ y} − F(y|t)) dy = (ȳ − s) − ∫_{y̲}^{ȳ} F(y|t) dy`, with
/// `s` clamped to the box.
pub fn clt_inner<L: ConditionalLaw + ?Sized>(law: &L, s: f64, t: &[f64], y_box: (f64, f64)) -> Result<f64, Error> {
    check_y_box(y_box)?;
    Ok((y_box.1 - s.clamp(y_box.0, y_box.1)) - integrated_cdf(law, t, y_box)?)
}

/// `V = ∫∫ (∫ (𝟏{s ≤ y} − F(y|t)) dy)² f(s,t) dt ds` for `d = 1`.
///
/// Mass of `Y` outside the box enters through `F(y̲|t)` and `1 − F(ȳ|t)`
/// (the inner integral is constant there), so no truncation of the `s`
/// range is involved.
pub fn clt_variance<L: ConditionalLaw + ?Sized>(law: &L, y_box: (f64, f64)) -> Result<f64, Error> {
    if law.dim() != 1 {
        return Err(Error::Unsupported(format!("clt_variance requires d = 1, got d = {}", law.dim())));
    }
    check_y_box(y_box)?;
    let (y_lo, y_hi) = y_box;
    let s = law.support();
    let mut failure: Option<Error> = None;
    let est = integrate_split(
        |t| {
            let x = [t];
            let g = match integrated_cdf(law, &x, y_box) {
                Ok(v) => v,
                Err(e) => {
                    failure.get_or_insert(e);
                    return 0.0;
                }
            };
            let below = law.cdf(y_lo, &x) * (y_hi - y_lo - g).powi(2);
            let above = (1.0 - law.cdf(y_hi, &x)) * g * g;
            let inside = integrate_split(
                |sv| (y_hi - sv - g).powi(2) * law.cond_density(sv, &x),
                y_lo,
                y_hi,
                &y_breaks(law, &x),
                &cfg(FUNCTIONAL_TOL),
            );
            match inside {
                Ok(est) => law.density_x(&x) * (below + above + est.value),
                Err(e) => {
                    failure.get_or_insert(e.into());
                    0.0
                }
            }
        },
        s.lower()[0],
        s.upper()[0],
        &[],
        &cfg(FUNCTIONAL_TOL),
    )?;
    if let Some(e) = failure {
        return Err(e);
    }
    Ok(est.value.max(0.0))
}

/// Eigenvalue extremes of `Ω` and `Ξ` over a grid of points and bandwidths.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EigenBand {
    pub omega_min: f64,
    pub omega_max: f64,
    pub xi_min: f64,
    pub xi_max: f64,
}

impl EigenBand {
    /// Smallest `C` with every eigenvalue in `[1/C, C]`.
    pub fn constant(&self) -> f64 {
        let lo = self.omega_min.min(self.xi_min);
        let hi = self.omega_max.max(self.xi_max);
        (1.0 / lo).max(hi)
    }
}

/// Scans `Ω(x,h)` and `Ξ(x,h)` over `x_points` evenly spaced points per
/// axis (endpoints included) for each bandwidth.
pub fn eigen_band<L: ConditionalLaw + ?Sized>(law: &L, spec: &KernelSpec, bandwidths: &[f64], x_points: usize) -> Result<EigenBand, Error> {
    let s = law.support();
    let grid = crate::grid::box_grid(s, x_points);
    let mut band = EigenBand {
        omega_min: f64::INFINITY,
        omega_max: f64::NEG_INFINITY,
        xi_min: f64::INFINITY,
        xi_max: f64::NEG_INFINITY,
    };
    for &h in bandwidths {
        for x in &grid {
            let om = omega(x, h, s, spec)?;
            band.omega_min = band.omega_min.min(om.eig_min);
            band.omega_max = band.omega_max.max(om.eig_max);
            let (lo, hi) = xi_pop(x, h, law, spec)?.eig_range();
            band.xi_min = band.xi_min.min(lo);
            band.xi_max = band.xi_max.max(hi);
        }
    }
    Ok(band)
}
