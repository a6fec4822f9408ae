//! Local linear estimation of `F(y|x)`.
//!
//! The smoothed estimator regresses `K((y − Yᵢ)/h₂)` on `r(Xᵢ − x) = (1, Xᵢ − x)`
//! with weights `w((Xᵢ − x)/h₁)`; the unsmoothed estimator uses `𝟏{Yᵢ ≤ y}`.
//! The normal equations are written in rescaled form
//!
//! ```text
//! Ξ̂(x,h₁) · H₁β̂ = υ̂(y,x,h₁,h₂)
//! Ξ̂ = (n h₁^d)⁻¹ Σ r(uᵢ) r(uᵢ)ᵀ w(uᵢ),   υ̂ = (n h₁^d)⁻¹ Σ r(uᵢ) K((y − Yᵢ)/h₂) w(uᵢ)
//! ```
//!
//! with `uᵢ = (Xᵢ − x)/h₁` and `H₁ = diag(1, h₁, …, h₁)`.
//!
//! [`LocalWindow`] holds everything about a fixed `x` that does not depend on
//! `y`: the in-window observations sorted by response, their weighted
//! regressors with prefix sums, and the factored `Ξ̂`. Evaluating a new `y`
//! then costs a binary search plus the observations whose response falls in
//! the `h₂` band around `y`, where `K` is not saturated.

use std::io::{self, Write};

use serde::{Deserialize, Serialize};

use crate::dgp::SupportSpec;
use crate::error::Error;
use crate::kernels::KernelSpec;
use crate::linalg::{Cholesky, SymMatrix};

/// Fits whose `Ξ̂` has a smaller eigenvalue are reported as singular.
pub const MIN_EIGENVALUE: f64 = 1e-12;

/// `n` observations of `(Y, X)` with `X` stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    y: Vec<f64>,
    x: Vec<f64>,
    support: SupportSpec,
}

impl Sample {
    pub fn new(y: Vec<f64>, x: Vec<f64>, support: SupportSpec) -> Result<Self, Error> {
        let d = support.dim();
        if x.len() != y.len() * d {
            return Err(Error::Dimension(format!(
                "{} responses need {} covariate entries, got {}",
                y.len(),
                y.len() * d,
                x.len()
            )));
        }
        if let Some(i) = y.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidSample(format!("response {i} is not finite")));
        }
        for i in 0..y.len() {
            let row = &x[i * d..(i + 1) * d];
            if !support.contains(row) {
                return Err(Error::InvalidSample(format!("covariate row {i} = {row:?} outside the support")));
            }
        }
        Ok(Self { y, x, support })
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.support.dim()
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn x(&self) -> &[f64] {
        &self.x
    }

    pub fn x_row(&self, i: usize) -> &[f64] {
        let d = self.dim();
        &self.x[i * d..(i + 1) * d]
    }

    pub fn support(&self) -> &SupportSpec {
        &self.support
    }

    pub fn y_min(&self) -> f64 {
        self.y.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn y_max(&self) -> f64 {
        self.y.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// CSV with header `y,x1,...,xd`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        let d = self.dim();
        write!(out, "y")?;
        for l in 1..=d {
            write!(out, ",x{l}")?;
        }
        writeln!(out)?;
        for i in 0..self.len() {
            write!(out, "{}", self.y[i])?;
            for v in self.x_row(i) {
                write!(out, ",{v}")?;
            }
            writeln!(out)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bandwidths {
    pub h1: f64,
    pub h2: f64,
}

impl Bandwidths {
    pub fn new(h1: f64, h2: f64) -> Result<Self, Error> {
        for (name, value) in [("h1", h1), ("h2", h2)] {
            if !(value > 0.0 && value.is_finite()) {
                return Err(Error::InvalidBandwidth { name, value });
            }
        }
        Ok(Self { h1, h2 })
    }
}

/// Optional departures from the plain least-squares fit.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct FitOptions {
    /// Adds `ridge · I` to `Ξ̂` before solving and skips the singularity check.
    #[serde(default)]
    pub ridge: f64,
    /// Clamps the intercept to `[0, 1]`.
    #[serde(default)]
    pub clamp: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Estimator {
    Smoothed,
    Unsmoothed,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LocalFit {
    /// `F̂(y|x)`.
    pub beta0: f64,
    /// Estimated `∇ₓF(y|x)`: the fitted slopes of `H₁β̂` divided by `h₁`.
    pub grad: Vec<f64>,
    pub min_eig: f64,
    pub n_local: usize,
}

#[inline]
fn fill_regressor(xi: &[f64], x: &[f64], h1: f64, r: &mut [f64]) {
    r[0] = 1.0;
    for l in 0..xi.len() {
        r[l + 1] = (xi[l] - x[l]) / h1;
    }
}

fn check_point(sample: &Sample, x: &[f64]) -> Result<(), Error> {
    if x.len() != sample.dim() {
        return Err(Error::Dimension(format!(
            "evaluation point has {} coordinates, sample has {}",
            x.len(),
            sample.dim()
        )));
    }
    Ok(())
}

/// `Ξ̂(x, h₁)`, summed in observation order.
pub fn design_matrix(sample: &Sample, x: &[f64], h1: f64, spec: &KernelSpec) -> Result<SymMatrix, Error> {
    check_point(sample, x)?;
    Bandwidths::new(h1, 1.0)?;
    let d = sample.dim();
    let mut r = vec![0.0; d + 1];
    let mut xi_hat = SymMatrix::zeros(d + 1);
    for i in 0..sample.len() {
        fill_regressor(sample.x_row(i), x, h1, &mut r);
        let w = spec.eval_w(&r[1..]);
        if w > 0.0 {
            xi_hat.add_outer_upper(&r, w);
        }
    }
    xi_hat.mirror_upper();
    xi_hat.scale(1.0 / (sample.len() as f64 * h1.powi(d as i32)));
    Ok(xi_hat)
}

/// `υ̂(y, x, h₁, h₂)`, summed in observation order.
pub fn local_response(sample: &Sample, y: f64, x: &[f64], bw: Bandwidths, spec: &KernelSpec) -> Result<Vec<f64>, Error> {
    check_point(sample, x)?;
    let d = sample.dim();
    let mut r = vec![0.0; d + 1];
    let mut out = vec![0.0; d + 1];
    for i in 0..sample.len() {
        fill_regressor(sample.x_row(i), x, bw.h1, &mut r);
        let w = spec.eval_w(&r[1..]);
        if w > 0.0 {
            let kw = w * spec.eval_k_cdf((y - sample.y()[i]) / bw.h2);
            for (o, rv) in out.iter_mut().zip(&r) {
                *o += rv * kw;
            }
        }
    }
    let scale = 1.0 / (sample.len() as f64 * bw.h1.powi(d as i32));
    out.iter_mut().for_each(|v| *v *= scale);
    Ok(out)
}

/// The `y`-independent part of a local fit at one evaluation point.
#[derive(Debug, Clone)]
pub struct LocalWindow {
    x: Vec<f64>,
    h1: f64,
    /// `1 / (n h₁^d)`.
    scale: f64,
    xi_hat: SymMatrix,
    factor: Option<Cholesky>,
    min_eig: f64,
    /// Responses of the in-window observations, ascending.
    y_sorted: Vec<f64>,
    /// Original sample index of each sorted entry.
    index: Vec<usize>,
    /// `r(uᵢ) w(uᵢ)` per sorted entry, `d + 1` values each.
    rw: Vec<f64>,
    /// `prefix[k·p..(k+1)·p] = Σ_{j<k} rw_j`.
    prefix: Vec<f64>,
    clamp: bool,
}

impl LocalWindow {
    pub fn new(sample: &Sample, x: &[f64], h1: f64, spec: &KernelSpec, opts: FitOptions) -> Result<Self, Error> {
        check_point(sample, x)?;
        Bandwidths::new(h1, 1.0)?;
        let d = sample.dim();
        let p = d + 1;
        let mut r = vec![0.0; p];
        let mut entries: Vec<(f64, usize, f64)> = Vec::new();
        let mut xi_hat = SymMatrix::zeros(p);
        let mut rw_unsorted: Vec<f64> = Vec::new();
        for i in 0..sample.len() {
            fill_regressor(sample.x_row(i), x, h1, &mut r);
            let w = spec.eval_w(&r[1..]);
            if w > 0.0 {
                xi_hat.add_outer_upper(&r, w);
                entries.push((sample.y()[i], i, w));
                rw_unsorted.extend(r.iter().map(|v| v * w));
            }
        }
        xi_hat.mirror_upper();
        let scale = 1.0 / (sample.len() as f64 * h1.powi(d as i32));
        xi_hat.scale(scale);

        let n_local = entries.len();
        let mut order: Vec<usize> = (0..n_local).collect();
        order.sort_by(|&a, &b| entries[a].0.total_cmp(&entries[b].0).then(entries[a].1.cmp(&entries[b].1)));

        let mut y_sorted = Vec::with_capacity(n_local);
        let mut index = Vec::with_capacity(n_local);
        let mut rw = Vec::with_capacity(n_local * p);
        for &k in &order {
            y_sorted.push(entries[k].0);
            index.push(entries[k].1);
            rw.extend_from_slice(&rw_unsorted[k * p..(k + 1) * p]);
        }
        let mut prefix = vec![0.0; (n_local + 1) * p];
        for k in 0..n_local {
            for c in 0..p {
                prefix[(k + 1) * p + c] = prefix[k * p + c] + rw[k * p + c];
            }
        }

        let min_eig = if n_local == 0 { 0.0 } else { xi_hat.eig_range().0 };
        let factor = if opts.ridge > 0.0 {
            let mut m = xi_hat.clone();
            m.add_diagonal(opts.ridge);
            m.cholesky().ok()
        } else if n_local >= p && min_eig >= MIN_EIGENVALUE {
            xi_hat.cholesky().ok()
        } else {
            None
        };

        Ok(Self {
            x: x.to_vec(),
            h1,
            scale,
            xi_hat,
            factor,
            min_eig,
            y_sorted,
            index,
            rw,
            prefix,
            clamp: opts.clamp,
        })
    }

    pub fn x(&self) -> &[f64] {
        &self.x
    }

    pub fn dim(&self) -> usize {
        self.x.len()
    }

    pub fn n_local(&self) -> usize {
        self.y_sorted.len()
    }

    pub fn min_eig(&self) -> f64 {
        self.min_eig
    }

    pub fn design(&self) -> &SymMatrix {
        &self.xi_hat
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn is_solvable(&self) -> bool {
        self.factor.is_some()
    }

    /// In-window observations in ascending response order:
    /// `(sample index, Yᵢ, r(uᵢ) w(uᵢ))`.
    pub fn entries(&self) -> impl Iterator<Item = (usize, f64, &[f64])> + '_ {
        let p = self.dim() + 1;
        (0..self.n_local()).map(move |k| (self.index[k], self.y_sorted[k], &self.rw[k * p..(k + 1) * p]))
    }

    fn singular(&self) -> Error {
        Error::SingularDesign {
            min_eig: self.min_eig,
            n_local: self.n_local(),
        }
    }

    /// `υ̂(y)` for the smoothed response.
    pub fn response_smoothed(&self, y: f64, h2: f64, k: &KernelSpec, out: &mut [f64]) {
        let p = self.dim() + 1;
        // K = 1 for Yᵢ ≤ y − h₂ and K = 0 for Yᵢ ≥ y + h₂.
        let full = self.y_sorted.partition_point(|&v| v <= y - h2);
        let end = self.y_sorted.partition_point(|&v| v < y + h2).max(full);
        out.copy_from_slice(&self.prefix[full * p..(full + 1) * p]);
        for j in full..end {
            let kv = k.eval_k_cdf((y - self.y_sorted[j]) / h2);
            if kv > 0.0 {
                for c in 0..p {
                    out[c] += self.rw[j * p + c] * kv;
                }
            }
        }
        out.iter_mut().for_each(|v| *v *= self.scale);
    }

    /// `υ̂(y)` for the indicator response `𝟏{Yᵢ ≤ y}`.
    pub fn response_indicator(&self, y: f64, out: &mut [f64]) {
        let p = self.dim() + 1;
        let count = self.y_sorted.partition_point(|&v| v <= y);
        for c in 0..p {
            out[c] = self.prefix[count * p + c] * self.scale;
        }
    }

    /// Solves `Ξ̂ z = b`, giving `z = H₁β̂` when `b = υ̂`.
    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>, Error> {
        let f = self.factor.as_ref().ok_or_else(|| self.singular())?;
        Ok(f.solve(b))
    }

    fn to_fit(&self, mut z: Vec<f64>) -> LocalFit {
        let mut beta0 = z[0];
        if self.clamp {
            beta0 = beta0.clamp(0.0, 1.0);
        }
        let grad = z.drain(1..).map(|v| v / self.h1).collect();
        LocalFit {
            beta0,
            grad,
            min_eig: self.min_eig,
            n_local: self.n_local(),
        }
    }

    pub fn fit_smoothed(&self, y: f64, h2: f64, k: &KernelSpec) -> Result<LocalFit, Error> {
        let mut b = vec![0.0; self.dim() + 1];
        self.response_smoothed(y, h2, k, &mut b);
        Ok(self.to_fit(self.solve(&b)?))
    }

    pub fn fit_unsmoothed(&self, y: f64) -> Result<LocalFit, Error> {
        let mut b = vec![0.0; self.dim() + 1];
        self.response_indicator(y, &mut b);
        Ok(self.to_fit(self.solve(&b)?))
    }

    pub fn fit(&self, estimator: Estimator, y: f64, h2: f64, k: &KernelSpec) -> Result<LocalFit, Error> {
        match estimator {
            Estimator::Smoothed => self.fit_smoothed(y, h2, k),
            Estimator::Unsmoothed => self.fit_unsmoothed(y),
        }
    }
}

/// `F̂(y|x)` from the smoothed local linear fit.
pub fn fit_smoothed(
    sample: &Sample,
    y: f64,
    x: &[f64],
    bw: Bandwidths,
    spec: &KernelSpec,
    opts: FitOptions,
) -> Result<LocalFit, Error> {
    Bandwidths::new(bw.h1, bw.h2)?;
    LocalWindow::new(sample, x, bw.h1, spec, opts)?.fit_smoothed(y, bw.h2, spec)
}

/// `F̌(y|x)` from the indicator-response local linear fit.
pub fn fit_unsmoothed(
    sample: &Sample,
    y: f64,
    x: &[f64],
    h1: f64,
    spec: &KernelSpec,
    opts: FitOptions,
) -> Result<LocalFit, Error> {
    LocalWindow::new(sample, x, h1, spec, opts)?.fit_unsmoothed(y)
}

/// Kernel-weighted mean of the smoothed responses (intercept-only fit).
/// Returns `None` when the window is empty.
pub fn weighted_mean_response(sample: &Sample, y: f64, x: &[f64], bw: Bandwidths, spec: &KernelSpec) -> Option<f64> {
    let d = sample.dim();
    let mut u = vec![0.0; d];
    let (mut num, mut den) = (0.0, 0.0);
    for i in 0..sample.len() {
        for l in 0..d {
            u[l] = (sample.x_row(i)[l] - x[l]) / bw.h1;
        }
        let w = spec.eval_w(&u);
        if w > 0.0 {
            num += w * spec.eval_k_cdf((y - sample.y()[i]) / bw.h2);
            den += w;
        }
    }
    (den > 0.0).then(|| num / den)
}

/// Score `s(Yᵢ, Xᵢ; y, x) = r(uᵢ) (K((y − Yᵢ)/h₂) − F̃(y|Xᵢ)) w(uᵢ)`.
///
/// `f_tilde(y, x)` must return `E[K((y − Y)/h₂) | X = x]`.
pub fn score<F>(yi: f64, xi: &[f64], y: f64, x: &[f64], bw: Bandwidths, spec: &KernelSpec, f_tilde: F) -> Vec<f64>
where
    F: Fn(f64, &[f64]) -> f64,
{
    let mut r = vec![0.0; x.len() + 1];
    fill_regressor(xi, x, bw.h1, &mut r);
    let w = spec.eval_w(&r[1..]);
    if w == 0.0 {
        return vec![0.0; r.len()];
    }
    let middle = spec.eval_k_cdf((y - yi) / bw.h2) - f_tilde(y, xi);
    r.iter().map(|v| v * middle * w).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum ColumnStatus {
    Ok { min_eig: f64, n_local: usize },
    Singular { min_eig: f64, n_local: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SurfaceColumn {
    pub x: Vec<f64>,
    pub status: ColumnStatus,
    /// One value per `y` grid point; empty when the column is singular.
    pub fhat: Vec<f64>,
    /// `m_y × d`, row-major; empty when the column is singular.
    pub grad: Vec<f64>,
}

/// Estimates on a `y × x` grid, one column per `x` point.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Surface {
    pub y_grid: Vec<f64>,
    pub columns: Vec<SurfaceColumn>,
}

impl Surface {
    pub fn m_y(&self) -> usize {
        self.y_grid.len()
    }

    pub fn m_x(&self) -> usize {
        self.columns.len()
    }

    pub fn value(&self, iy: usize, ix: usize) -> Option<f64> {
        self.columns[ix].fhat.get(iy).copied()
    }

    pub fn singular_columns(&self) -> usize {
        self.columns
            .iter()
            .filter(|c| matches!(c.status, ColumnStatus::Singular { .. }))
            .count()
    }

    /// Number of adjacent `y` steps where the estimate decreases by more than
    /// `tol`, summed over columns.
    pub fn monotonicity_violations(&self, tol: f64) -> usize {
        self.columns
            .iter()
            .map(|c| c.fhat.windows(2).filter(|w| w[1] < w[0] - tol).count())
            .sum()
    }

    /// CSV with columns `y,x1..xd,Fhat,grad1..gradd,min_eig,n_local`.
    /// Singular columns leave `Fhat` and the gradient empty.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        let d = self.columns.first().map_or(1, |c| c.x.len());
        write!(out, "y")?;
        for l in 1..=d {
            write!(out, ",x{l}")?;
        }
        write!(out, ",Fhat")?;
        for l in 1..=d {
            write!(out, ",grad{l}")?;
        }
        writeln!(out, ",min_eig,n_local")?;
        for col in &self.columns {
            let (min_eig, n_local) = match col.status {
                ColumnStatus::Ok { min_eig, n_local } | ColumnStatus::Singular { min_eig, n_local } => (min_eig, n_local),
            };
            for (iy, y) in self.y_grid.iter().enumerate() {
                write!(out, "{y}")?;
                for v in &col.x {
                    write!(out, ",{v}")?;
                }
                match col.fhat.get(iy) {
                    Some(f) => {
                        write!(out, ",{f}")?;
                        for g in &col.grad[iy * d..(iy + 1) * d] {
                            write!(out, ",{g}")?;
                        }
                    }
                    None => {
                        write!(out, ",")?;
                        for _ in 0..d {
                            write!(out, ",")?;
                        }
                    }
                }
                writeln!(out, ",{min_eig},{n_local}")?;
            }
        }
        Ok(())
    }
}

/// Evaluates the estimator on every `(y, x)` grid pair. Singular columns are
/// recorded in the column status and left empty.
#[allow(clippy::too_many_arguments)]
pub fn surface(
    sample: &Sample,
    y_grid: &[f64],
    x_grid: &[Vec<f64>],
    bw: Bandwidths,
    spec: &KernelSpec,
    estimator: Estimator,
    opts: FitOptions,
) -> Result<Surface, Error> {
    if y_grid.is_empty() || x_grid.is_empty() {
        return Err(Error::Dimension("surface grids must be nonempty".into()));
    }
    Bandwidths::new(bw.h1, bw.h2)?;
    let d = sample.dim();
    let mut columns = Vec::with_capacity(x_grid.len());
    let mut b = vec![0.0; d + 1];
    for x in x_grid {
        let window = LocalWindow::new(sample, x, bw.h1, spec, opts)?;
        let (min_eig, n_local) = (window.min_eig(), window.n_local());
        if !window.is_solvable() {
            columns.push(SurfaceColumn {
                x: x.clone(),
                status: ColumnStatus::Singular { min_eig, n_local },
                fhat: Vec::new(),
                grad: Vec::new(),
            });
            continue;
        }
        let mut fhat = Vec::with_capacity(y_grid.len());
        let mut grad = Vec::with_capacity(y_grid.len() * d);
        for &y in y_grid {
            match estimator {
                Estimator::Smoothed => window.response_smoothed(y, bw.h2, spec, &mut b),
                Estimator::Unsmoothed => window.response_indicator(y, &mut b),
            }
            let fit = window.to_fit(window.solve(&b)?);
            fhat.push(fit.beta0);
            grad.extend(fit.grad);
        }
        columns.push(SurfaceColumn {
            x: x.clone(),
            status: ColumnStatus::Ok { min_eig, n_local },
            fhat,
            grad,
        });
    }
    Ok(Surface {
        y_grid: y_grid.to_vec(),
        columns,
    })
}
