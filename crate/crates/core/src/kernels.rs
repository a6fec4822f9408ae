//! Compactly supported univariate kernels on `[-1, 1]` and the product
//! covariate kernel built from them.
//!
//! Every family has a closed-form density, integral `K(v) = ∫_{-∞}^{v} k`,
//! and second moment. No family has unit second moment (a density on
//! `[-1, 1]` cannot), so the actual `κ₂` is carried in [`KernelSpec`] and
//! used wherever bias constants appear.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum UnivariateKernel {
    Epanechnikov,
    Biweight,
    Triangular,
    Uniform,
}

impl UnivariateKernel {
    pub const ALL: [UnivariateKernel; 4] = [
        UnivariateKernel::Epanechnikov,
        UnivariateKernel::Biweight,
        UnivariateKernel::Triangular,
        UnivariateKernel::Uniform,
    ];

    pub fn name(self) -> &'static str {
        match self {
            UnivariateKernel::Epanechnikov => "epanechnikov",
            UnivariateKernel::Biweight => "biweight",
            UnivariateKernel::Triangular => "triangular",
            UnivariateKernel::Uniform => "uniform",
        }
    }

    /// Density value; zero outside `[-1, 1]`.
    #[inline]
    pub fn value(self, u: f64) -> f64 {
        let a = u.abs();
        if a > 1.0 {
            return 0.0;
        }
        match self {
            UnivariateKernel::Epanechnikov => 0.75 * (1.0 - u * u),
            UnivariateKernel::Biweight => {
                let s = 1.0 - u * u;
                0.9375 * s * s
            }
            UnivariateKernel::Triangular => 1.0 - a,
            UnivariateKernel::Uniform => 0.5,
        }
    }

    /// Closed-form `K(v) = ∫_{-∞}^{v} k(t) dt`, saturating at 0 and 1.
    #[inline]
    pub fn cdf(self, v: f64) -> f64 {
        if v <= -1.0 {
            return 0.0;
        }
        if v >= 1.0 {
            return 1.0;
        }
        match self {
            UnivariateKernel::Epanechnikov => 0.5 + 0.75 * (v - v * v * v / 3.0),
            UnivariateKernel::Biweight => {
                let v2 = v * v;
                0.5 + 0.9375 * v * (1.0 - v2 * (2.0 / 3.0) + v2 * v2 / 5.0)
            }
            UnivariateKernel::Triangular => {
                if v <= 0.0 {
                    0.5 * (1.0 + v) * (1.0 + v)
                } else {
                    1.0 - 0.5 * (1.0 - v) * (1.0 - v)
                }
            }
            UnivariateKernel::Uniform => 0.5 * (1.0 + v),
        }
    }

    /// Exact `∫ u² k(u) du`.
    pub fn moment2(self) -> f64 {
        match self {
            UnivariateKernel::Epanechnikov => 0.2,
            UnivariateKernel::Biweight => 1.0 / 7.0,
            UnivariateKernel::Triangular => 1.0 / 6.0,
            UnivariateKernel::Uniform => 1.0 / 3.0,
        }
    }

    /// Points inside `(-1, 1)` where the density is not smooth.
    pub fn kinks(self) -> &'static [f64] {
        match self {
            UnivariateKernel::Triangular => &[0.0],
            _ => &[],
        }
    }
}

impl fmt::Display for UnivariateKernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for UnivariateKernel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "epanechnikov" => Ok(UnivariateKernel::Epanechnikov),
            "biweight" | "quartic" => Ok(UnivariateKernel::Biweight),
            "triangular" => Ok(UnivariateKernel::Triangular),
            "uniform" => Ok(UnivariateKernel::Uniform),
            other => Err(Error::UnknownKernel(other.to_string())),
        }
    }
}

/// Product covariate kernel `w` plus the smoothing kernel `k`, with their
/// second moments.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelSpec {
    w_axes: Vec<UnivariateKernel>,
    k: UnivariateKernel,
    kappa2_w: Vec<f64>,
    kappa2_k: f64,
}

impl KernelSpec {
    pub fn new(w_axes: Vec<UnivariateKernel>, k: UnivariateKernel) -> Result<Self, Error> {
        if w_axes.is_empty() {
            return Err(Error::Dimension("product kernel needs at least one axis".into()));
        }
        let kappa2_w = w_axes.iter().map(|w| w.moment2()).collect();
        Ok(Self {
            kappa2_k: k.moment2(),
            w_axes,
            k,
            kappa2_w,
        })
    }

    /// The same family on every covariate axis and for `k`.
    pub fn uniform_family(family: UnivariateKernel, d: usize) -> Result<Self, Error> {
        Self::new(vec![family; d], family)
    }

    pub fn epanechnikov(d: usize) -> Self {
        Self::uniform_family(UnivariateKernel::Epanechnikov, d.max(1)).expect("d >= 1")
    }

    pub fn dim(&self) -> usize {
        self.w_axes.len()
    }

    pub fn w_axes(&self) -> &[UnivariateKernel] {
        &self.w_axes
    }

    pub fn k(&self) -> UnivariateKernel {
        self.k
    }

    pub fn kappa2_w(&self) -> &[f64] {
        &self.kappa2_w
    }

    pub fn kappa2_k(&self) -> f64 {
        self.kappa2_k
    }

    /// `w(u) = ∏ w_ℓ(u_ℓ)`.
    #[inline]
    pub fn eval_w(&self, u: &[f64]) -> f64 {
        debug_assert_eq!(u.len(), self.w_axes.len());
        let mut prod = 1.0;
        for (kern, &ul) in self.w_axes.iter().zip(u) {
            prod *= kern.value(ul);
            if prod == 0.0 {
                return 0.0;
            }
        }
        prod
    }

    #[inline]
    pub fn eval_k(&self, v: f64) -> f64 {
        self.k.value(v)
    }

    #[inline]
    pub fn eval_k_cdf(&self, v: f64) -> f64 {
        self.k.cdf(v)
    }

    /// Union of the kink locations of all kernels, for quadrature splitting.
    pub fn w_kinks(&self) -> Vec<f64> {
        let mut pts: Vec<f64> = self.w_axes.iter().flat_map(|w| w.kinks().iter().copied()).collect();
        pts.sort_by(f64::total_cmp);
        pts.dedup();
        pts
    }
}

/// Closed-form quantities of one family next to their quadrature values.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KernelCheck {
    pub kernel: UnivariateKernel,
    pub mass: f64,
    pub moment1: f64,
    pub moment2: f64,
    pub moment2_quadrature: f64,
    /// Largest `|K(v) − ∫_{-1}^{v} k|` over `v` on a 401-point grid of `[-1, 1]`.
    pub cdf_max_err: f64,
}

impl KernelCheck {
    /// Largest disagreement between closed form and quadrature.
    pub fn max_err(&self) -> f64 {
        (self.mass - 1.0)
            .abs()
            .max(self.moment1.abs())
            .max((self.moment2 - self.moment2_quadrature).abs())
            .max(self.cdf_max_err)
    }
}

/// Checks every family's mass, first two moments and CDF by adaptive
/// quadrature.
pub fn check_against_quadrature() -> Result<Vec<KernelCheck>, Error> {
    use crate::quad::{integrate_split, QuadConfig};
    let cfg = QuadConfig::absolute(1e-13);
    let quad = |f: &dyn Fn(f64) -> f64, a: f64, b: f64| -> Result<f64, Error> {
        let bps: &[f64] = if a < 0.0 && b > 0.0 { &[0.0] } else { &[] };
        Ok(integrate_split(f, a, b, bps, &cfg)?.value)
    };
    let mut out = Vec::new();
    for k in UnivariateKernel::ALL {
        let mut cdf_max_err = 0.0_f64;
        for i in 0..=400 {
            let v = -1.0 + 2.0 * i as f64 / 400.0;
            let numeric = if i == 0 { 0.0 } else { quad(&|t| k.value(t), -1.0, v)? };
            cdf_max_err = cdf_max_err.max((numeric - k.cdf(v)).abs());
        }
        out.push(KernelCheck {
            kernel: k,
            mass: quad(&|t| k.value(t), -1.0, 1.0)?,
            moment1: quad(&|t| t * k.value(t), -1.0, 1.0)?,
            moment2: k.moment2(),
            moment2_quadrature: quad(&|t| t * t * k.value(t), -1.0, 1.0)?,
            cdf_max_err,
        });
    }
    Ok(out)
}
