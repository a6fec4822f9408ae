//! Synthetic data-generating processes with analytic conditional CDFs.
//!
//! [`ConditionalLaw`] is the interface the estimator tests and the quadrature
//! oracle consume: the conditional CDF `F(y|x)`, its derivatives, the
//! covariate density and a sampler. [`DgpSpec`] implements it for the shipped
//! catalog:
//!
//! | id | d | X             | Y given X = x                       |
//! |----|---|---------------|-------------------------------------|
//! | A  | 1 | U[0,1]        | N(x², 1)                            |
//! | B  | 2 | U[0,1]²       | N(x₁ + x₂, 1)                       |
//! | C  | 1 | U[0,1]        | (1 + x)·Beta(3,3), a C² "smoothed uniform" on [0, 1+x] |

use std::f64::consts::{FRAC_1_SQRT_2, PI};
use std::fmt;
use std::str::FromStr;

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Beta, Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use crate::error::Error;
use crate::llr::Sample;

/// Standard normal CDF.
#[inline]
pub fn norm_cdf(z: f64) -> f64 {
    0.5 * erfc(-z * FRAC_1_SQRT_2)
}

/// Standard normal density.
#[inline]
pub fn norm_pdf(z: f64) -> f64 {
    (-0.5 * z * z).exp() / (2.0 * PI).sqrt()
}

/// Axis-aligned support box `[a₁,b₁] × … × [a_d,b_d]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SupportSpec {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl SupportSpec {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self, Error> {
        if lower.is_empty() || lower.len() != upper.len() {
            return Err(Error::Dimension(format!(
                "support bounds have lengths {} and {}",
                lower.len(),
                upper.len()
            )));
        }
        if let Some(l) = (0..lower.len()).find(|&l| !(lower[l] < upper[l]) || !lower[l].is_finite() || !upper[l].is_finite()) {
            return Err(Error::Dimension(format!(
                "axis {l}: need finite lower < upper, got [{}, {}]",
                lower[l], upper[l]
            )));
        }
        Ok(Self { lower, upper })
    }

    pub fn unit(d: usize) -> Self {
        Self::new(vec![0.0; d], vec![1.0; d]).expect("unit box is valid")
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn volume(&self) -> f64 {
        self.lower.iter().zip(&self.upper).map(|(a, b)| b - a).product()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim() && x.iter().enumerate().all(|(l, &v)| v >= self.lower[l] && v <= self.upper[l])
    }

    /// Whether `x ± h·1` stays inside the box, i.e. the whole kernel window
    /// `x + h[-1,1]^d` is covered by the support.
    pub fn is_interior(&self, x: &[f64], h: f64) -> bool {
        x.iter()
            .enumerate()
            .all(|(l, &v)| v - h >= self.lower[l] && v + h <= self.upper[l])
    }

    /// Inner-cone radius `λ₀ = min_ℓ (b_ℓ − a_ℓ)/2`.
    pub fn lambda0(&self) -> f64 {
        self.lower
            .iter()
            .zip(&self.upper)
            .map(|(a, b)| 0.5 * (b - a))
            .fold(f64::INFINITY, f64::min)
    }

    /// Inner-cone ratio `λ₁ = 1/√d`.
    pub fn lambda1(&self) -> f64 {
        1.0 / (self.dim() as f64).sqrt()
    }

    /// The part of `[-1,1]^d` mapped into the box by `u ↦ x + h u`.
    pub fn window(&self, x: &[f64], h: f64) -> (Vec<f64>, Vec<f64>) {
        let lo = (0..self.dim()).map(|l| ((self.lower[l] - x[l]) / h).max(-1.0)).collect();
        let hi = (0..self.dim()).map(|l| ((self.upper[l] - x[l]) / h).min(1.0)).collect();
        (lo, hi)
    }
}

/// Analytic values of `F` and its derivatives at one `(y, x)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Truth {
    pub cdf: f64,
    pub grad_x: Vec<f64>,
    /// Row-major `d × d`.
    pub hess_x: Vec<f64>,
    pub d2_dy2: f64,
}

/// A joint law of `(Y, X)` described through `X`'s density and the
/// conditional CDF of `Y` given `X`.
pub trait ConditionalLaw: Send + Sync {
    fn support(&self) -> &SupportSpec;

    fn dim(&self) -> usize {
        self.support().dim()
    }

    /// Interval carrying all but a negligible part of the `Y` mass.
    fn y_range(&self) -> (f64, f64);

    fn cdf(&self, y: f64, x: &[f64]) -> f64;

    /// `∂F/∂y`, the conditional density.
    fn cond_density(&self, y: f64, x: &[f64]) -> f64;

    fn d2_cdf_dy2(&self, y: f64, x: &[f64]) -> f64;

    fn grad_x(&self, y: f64, x: &[f64], out: &mut [f64]);

    /// Row-major `d × d` matrix of `∂²F/∂x_ℓ∂x_ℓ'`.
    fn hess_x(&self, y: f64, x: &[f64], out: &mut [f64]);

    /// Covariate density on the support. Uniform by default.
    fn density_x(&self, _x: &[f64]) -> f64 {
        1.0 / self.support().volume()
    }

    fn joint(&self, y: f64, x: &[f64]) -> f64 {
        self.density_x(x) * self.cond_density(y, x)
    }

    /// Locations in `y` where `F(·|x)` loses smoothness.
    fn y_kinks(&self, _x: &[f64]) -> Vec<f64> {
        Vec::new()
    }

    /// Draws `X`. Uniform on the support box by default.
    fn sample_x(&self, rng: &mut dyn RngCore, out: &mut [f64]) {
        let s = self.support();
        for (l, o) in out.iter_mut().enumerate() {
            let u: f64 = rng.random();
            *o = s.lower()[l] + (s.upper()[l] - s.lower()[l]) * u;
        }
    }

    fn sample_y(&self, x: &[f64], rng: &mut dyn RngCore) -> f64;

    fn truth(&self, y: f64, x: &[f64]) -> Result<Truth, Error> {
        if !self.support().contains(x) {
            return Err(Error::OutsideSupport { point: x.to_vec() });
        }
        let d = self.dim();
        let mut grad_x = vec![0.0; d];
        let mut hess_x = vec![0.0; d * d];
        self.grad_x(y, x, &mut grad_x);
        self.hess_x(y, x, &mut hess_x);
        Ok(Truth {
            cdf: self.cdf(y, x),
            grad_x,
            hess_x,
            d2_dy2: self.d2_cdf_dy2(y, x),
        })
    }

    /// `n` i.i.d. draws, reproducible from `seed`.
    fn draw(&self, n: usize, seed: u64) -> Result<Sample, Error> {
        if n == 0 {
            return Err(Error::InvalidSample("n must be at least 1".into()));
        }
        let d = self.dim();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut xs = vec![0.0; n * d];
        let mut ys = vec![0.0; n];
        for i in 0..n {
            let row = &mut xs[i * d..(i + 1) * d];
            self.sample_x(&mut rng, row);
            ys[i] = self.sample_y(row, &mut rng);
        }
        Sample::new(ys, xs, self.support().clone())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum DgpId {
    A,
    B,
    C,
}

impl DgpId {
    pub const ALL: [DgpId; 3] = [DgpId::A, DgpId::B, DgpId::C];
}

impl fmt::Display for DgpId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            DgpId::A => "A",
            DgpId::B => "B",
            DgpId::C => "C",
        };
        f.write_str(s)
    }
}

impl FromStr for DgpId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let t = s.trim().to_ascii_uppercase();
        let t = t.strip_prefix("DGP-").or_else(|| t.strip_prefix("DGP")).unwrap_or(&t);
        match t {
            "A" => Ok(DgpId::A),
            "B" => Ok(DgpId::B),
            "C" => Ok(DgpId::C),
            _ => Err(Error::UnknownDgp(s.to_string())),
        }
    }
}

/// One of the catalog processes. X is uniform on the unit box in all cases.
#[derive(Debug, Clone, PartialEq)]
pub struct DgpSpec {
    id: DgpId,
    support: SupportSpec,
}

// Beta(3,3) CDF and derivatives: the quintic smoothstep on [0, 1].
fn smoothstep(t: f64) -> (f64, f64, f64) {
    if t <= 0.0 {
        return (0.0, 0.0, 0.0);
    }
    if t >= 1.0 {
        return (1.0, 0.0, 0.0);
    }
    let s = 1.0 - t;
    let cdf = t * t * t * (10.0 - 15.0 * t + 6.0 * t * t);
    let d1 = 30.0 * t * t * s * s;
    let d2 = 60.0 * t * s * (1.0 - 2.0 * t);
    (cdf, d1, d2)
}

impl DgpSpec {
    pub fn new(id: DgpId) -> Self {
        let d = match id {
            DgpId::A | DgpId::C => 1,
            DgpId::B => 2,
        };
        Self {
            id,
            support: SupportSpec::unit(d),
        }
    }

    pub fn id(&self) -> DgpId {
        self.id
    }

    /// Conditional mean for the normal-location processes.
    fn location(&self, x: &[f64]) -> f64 {
        match self.id {
            DgpId::A => x[0] * x[0],
            DgpId::B => x[0] + x[1],
            DgpId::C => unreachable!("DGP-C is not a location family"),
        }
    }
}

impl ConditionalLaw for DgpSpec {
    fn support(&self) -> &SupportSpec {
        &self.support
    }

    fn y_range(&self) -> (f64, f64) {
        // Normal cases: six standard deviations beyond the range of means.
        match self.id {
            DgpId::A => (-6.0, 7.0),
            DgpId::B => (-6.0, 8.0),
            DgpId::C => (0.0, 2.0),
        }
    }

    fn cdf(&self, y: f64, x: &[f64]) -> f64 {
        match self.id {
            DgpId::A | DgpId::B => norm_cdf(y - self.location(x)),
            DgpId::C => smoothstep(y / (1.0 + x[0])).0,
        }
    }

    fn cond_density(&self, y: f64, x: &[f64]) -> f64 {
        match self.id {
            DgpId::A | DgpId::B => norm_pdf(y - self.location(x)),
            DgpId::C => {
                let c = 1.0 + x[0];
                smoothstep(y / c).1 / c
            }
        }
    }

    fn d2_cdf_dy2(&self, y: f64, x: &[f64]) -> f64 {
        match self.id {
            DgpId::A | DgpId::B => {
                let z = y - self.location(x);
                -z * norm_pdf(z)
            }
            DgpId::C => {
                let c = 1.0 + x[0];
                smoothstep(y / c).2 / (c * c)
            }
        }
    }

    fn grad_x(&self, y: f64, x: &[f64], out: &mut [f64]) {
        match self.id {
            DgpId::A => {
                out[0] = -2.0 * x[0] * norm_pdf(y - x[0] * x[0]);
            }
            DgpId::B => {
                let g = -norm_pdf(y - x[0] - x[1]);
                out[0] = g;
                out[1] = g;
            }
            DgpId::C => {
                let c = 1.0 + x[0];
                let t = y / c;
                out[0] = -t * smoothstep(t).1 / c;
            }
        }
    }

    fn hess_x(&self, y: f64, x: &[f64], out: &mut [f64]) {
        match self.id {
            DgpId::A => {
                let z = y - x[0] * x[0];
                let phi = norm_pdf(z);
                out[0] = -2.0 * phi - 4.0 * x[0] * x[0] * z * phi;
            }
            DgpId::B => {
                let z = y - x[0] - x[1];
                let v = -z * norm_pdf(z);
                out.iter_mut().for_each(|o| *o = v);
            }
            DgpId::C => {
                let c = 1.0 + x[0];
                let t = y / c;
                let (_, d1, d2) = smoothstep(t);
                out[0] = t * (t * d2 + 2.0 * d1) / (c * c);
            }
        }
    }

    fn y_kinks(&self, x: &[f64]) -> Vec<f64> {
        match self.id {
            DgpId::A | DgpId::B => Vec::new(),
            DgpId::C => vec![0.0, 1.0 + x[0]],
        }
    }

    fn sample_y(&self, x: &[f64], rng: &mut dyn RngCore) -> f64 {
        match self.id {
            DgpId::A | DgpId::B => {
                let e: f64 = StandardNormal.sample(rng);
                self.location(x) + e
            }
            DgpId::C => {
                let beta = Beta::new(3.0, 3.0).expect("valid Beta parameters");
                (1.0 + x[0]) * beta.sample(rng)
            }
        }
    }
}

/// `Y ~ Uniform[0,1]` independent of `X ~ Uniform[0,1]^d`. Not part of the
/// catalog (its CDF has kinks); used where closed-form functionals help.
#[derive(Debug, Clone, PartialEq)]
pub struct IndependentUniform {
    support: SupportSpec,
}

impl IndependentUniform {
    pub fn new(d: usize) -> Self {
        Self {
            support: SupportSpec::unit(d),
        }
    }
}

impl ConditionalLaw for IndependentUniform {
    fn support(&self) -> &SupportSpec {
        &self.support
    }

    fn y_range(&self) -> (f64, f64) {
        (0.0, 1.0)
    }

    fn cdf(&self, y: f64, _x: &[f64]) -> f64 {
        y.clamp(0.0, 1.0)
    }

    fn cond_density(&self, y: f64, _x: &[f64]) -> f64 {
        if (0.0..=1.0).contains(&y) {
            1.0
        } else {
            0.0
        }
    }

    fn d2_cdf_dy2(&self, _y: f64, _x: &[f64]) -> f64 {
        0.0
    }

    fn grad_x(&self, _y: f64, _x: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|o| *o = 0.0);
    }

    fn hess_x(&self, _y: f64, _x: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|o| *o = 0.0);
    }

    fn y_kinks(&self, _x: &[f64]) -> Vec<f64> {
        vec![0.0, 1.0]
    }

    fn sample_y(&self, _x: &[f64], rng: &mut dyn RngCore) -> f64 {
        rng.random()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn truth_at_origin() {
        let a = DgpSpec::new(DgpId::A);
        let t = a.truth(0.0, &[0.0]).unwrap();
        assert!((t.cdf - 0.5).abs() < 1e-15);
        assert_eq!(t.grad_x, vec![0.0]);
    }

    #[test]
    fn truth_outside_box_is_domain_error() {
        let a = DgpSpec::new(DgpId::A);
        assert!(matches!(a.truth(0.0, &[1.5]), Err(Error::OutsideSupport { .. })));
    }

    #[test]
    fn cdf_limits() {
        let b = DgpSpec::new(DgpId::B);
        assert!((b.cdf(40.0, &[0.3, 0.9]) - 1.0).abs() < 1e-15);
        assert!(b.cdf(-40.0, &[0.3, 0.9]) < 1e-300);
        let c = DgpSpec::new(DgpId::C);
        assert_eq!(c.cdf(2.0, &[1.0]), 1.0);
        assert_eq!(c.cdf(0.0, &[0.5]), 0.0);
    }

    #[test]
    fn draws_are_reproducible_and_inside_box() {
        for id in DgpId::ALL {
            let dgp = DgpSpec::new(id);
            let s1 = dgp.draw(5, 42).unwrap();
            let s2 = dgp.draw(5, 42).unwrap();
            assert_eq!(s1, s2);
            for i in 0..s1.len() {
                assert!(dgp.support().contains(s1.x_row(i)));
            }
            assert_ne!(dgp.draw(5, 43).unwrap(), s1);
        }
    }

    #[test]
    fn parse_ids() {
        assert_eq!("dgp-a".parse::<DgpId>().unwrap(), DgpId::A);
        assert_eq!("C".parse::<DgpId>().unwrap(), DgpId::C);
        assert!("D".parse::<DgpId>().is_err());
    }

    #[test]
    fn interior_set_is_shrunken_box() {
        let s = SupportSpec::unit(2);
        assert!(s.is_interior(&[0.5, 0.5], 0.5));
        assert!(!s.is_interior(&[0.5, 0.49], 0.5));
        assert_eq!(s.lambda0(), 0.5);
        assert!((s.lambda1() - FRAC_1_SQRT_2).abs() < 1e-15);
        let (lo, hi) = s.window(&[0.0, 0.95], 0.1);
        assert_eq!(lo, vec![0.0, -1.0]);
        assert!((hi[1] - 0.5).abs() < 1e-12);
    }
}
