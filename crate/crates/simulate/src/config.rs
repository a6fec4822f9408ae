//! Experiment configuration: a strict JSON schema plus validation that
//! reports every violation at once and warns when a bandwidth rule breaks a
//! side condition of the result an experiment is meant to check.

use std::fmt;

use condist_core::{DgpId, DgpSpec, Error as CoreError, FitOptions, KernelSpec, UnivariateKernel};
use serde::{Deserialize, Serialize};

use crate::error::SimError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExperimentKind {
    Estimate,
    Bias,
    Rates,
    Alr,
    Equicont,
    Clt,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::Estimate => "estimate",
            ExperimentKind::Bias => "bias",
            ExperimentKind::Rates => "rates",
            ExperimentKind::Alr => "alr",
            ExperimentKind::Equicont => "equicont",
            ExperimentKind::Clt => "clt",
        }
    }

    /// Experiments whose output is a statistic over replications.
    fn is_statistical(self) -> bool {
        matches!(self, ExperimentKind::Rates | ExperimentKind::Alr | ExperimentKind::Equicont | ExperimentKind::Clt)
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Either a single family name used for every axis and for `k`, or
/// per-axis families for `w` plus a family for `k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum KernelConfig {
    Family(String),
    Axes(KernelAxes),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelAxes {
    pub w: Vec<String>,
    pub k: String,
}

impl Default for KernelConfig {
    fn default() -> Self {
        KernelConfig::Family("epanechnikov".into())
    }
}

/// `h₁ = c·n^(−γ)`, `h₂ = ρ·h₁`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BandwidthRule {
    #[serde(default = "one")]
    pub c: f64,
    #[serde(default = "default_gamma")]
    pub gamma: f64,
    #[serde(default = "one")]
    pub rho: f64,
}

impl Default for BandwidthRule {
    fn default() -> Self {
        Self {
            c: 1.0,
            gamma: default_gamma(),
            rho: 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    #[serde(default = "default_m_y")]
    pub m_y: usize,
    #[serde(default = "default_m_x")]
    pub m_x: usize,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            m_y: default_m_y(),
            m_x: default_m_x(),
        }
    }
}

/// `δ_n = c·n^(−exponent)` for the equicontinuity modulus.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeltaRule {
    #[serde(default = "one")]
    pub c: f64,
    #[serde(default = "half")]
    pub exponent: f64,
}

impl Default for DeltaRule {
    fn default() -> Self {
        Self { c: 1.0, exponent: 0.5 }
    }
}

/// Oracle-only bias experiment layout.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BiasConfig {
    #[serde(default = "default_bias_h")]
    pub h: Vec<f64>,
    #[serde(default = "default_bias_y")]
    pub y_range: [f64; 2],
    #[serde(default = "default_bias_m_y")]
    pub m_y: usize,
    /// Interior points are drawn from this interval on every axis.
    #[serde(default = "default_bias_x")]
    pub x_interior: [f64; 2],
    #[serde(default = "default_bias_m_x")]
    pub m_x: usize,
    /// Boundary points sit at `offset·h` from each face.
    #[serde(default = "default_bias_offsets")]
    pub boundary_offsets: Vec<f64>,
}

impl Default for BiasConfig {
    fn default() -> Self {
        Self {
            h: default_bias_h(),
            y_range: default_bias_y(),
            m_y: default_bias_m_y(),
            x_interior: default_bias_x(),
            m_x: default_bias_m_x(),
            boundary_offsets: default_bias_offsets(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub dgp: String,
    #[serde(default)]
    pub kernel: KernelConfig,
    #[serde(default = "default_n")]
    pub n: Vec<usize>,
    #[serde(default)]
    pub bandwidth: BandwidthRule,
    /// Fixed `h₁`, overriding the rule.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub h1: Option<f64>,
    /// Fixed `h₂`, overriding the rule.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub h2: Option<f64>,
    #[serde(default = "default_replications")]
    pub replications: usize,
    #[serde(default)]
    pub grid: GridConfig,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_estimators")]
    pub estimators: Vec<condist_core::Estimator>,
    #[serde(default)]
    pub ridge: f64,
    #[serde(default)]
    pub clamp: bool,
    /// `[y̲, ȳ]` for the integrated functional and the ALR/equicontinuity
    /// grids. Defaults to the DGP's `y` range.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub y_box: Option<[f64; 2]>,
    #[serde(default)]
    pub delta: DeltaRule,
    #[serde(default)]
    pub bias: BiasConfig,
}

fn one() -> f64 {
    1.0
}
fn half() -> f64 {
    0.5
}
fn default_gamma() -> f64 {
    0.2
}
fn default_m_y() -> usize {
    201
}
fn default_m_x() -> usize {
    51
}
fn default_n() -> Vec<usize> {
    vec![500, 2000, 8000, 32000]
}
fn default_replications() -> usize {
    200
}
fn default_estimators() -> Vec<condist_core::Estimator> {
    vec![condist_core::Estimator::Smoothed, condist_core::Estimator::Unsmoothed]
}
fn default_bias_h() -> Vec<f64> {
    vec![0.2, 0.1, 0.05]
}
fn default_bias_y() -> [f64; 2] {
    [-3.0, 4.0]
}
fn default_bias_m_y() -> usize {
    15
}
fn default_bias_x() -> [f64; 2] {
    [0.2, 0.8]
}
fn default_bias_m_x() -> usize {
    7
}
fn default_bias_offsets() -> Vec<f64> {
    vec![0.0, 0.5]
}

/// Outcome of [`ExperimentConfig::validate`].
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Validation {
    pub errors: Vec<String>,
    pub warnings: Vec<String>,
}

impl Validation {
    pub fn is_ok(&self) -> bool {
        self.errors.is_empty()
    }
}

fn parse_kernel(name: &str) -> Result<UnivariateKernel, String> {
    name.parse::<UnivariateKernel>().map_err(|e: CoreError| e.to_string())
}

impl ExperimentConfig {
    /// Strict parse: unknown keys and type errors are rejected.
    pub fn from_json(text: &str) -> Result<Self, SimError> {
        serde_json::from_str(text).map_err(|e| SimError::Config(vec![e.to_string()]))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn dgp_id(&self) -> Result<DgpId, SimError> {
        self.dgp.parse().map_err(|e: CoreError| SimError::Config(vec![format!("dgp: {e}")]))
    }

    pub fn law(&self) -> Result<DgpSpec, SimError> {
        Ok(DgpSpec::new(self.dgp_id()?))
    }

    pub fn kernel_spec(&self, d: usize) -> Result<KernelSpec, SimError> {
        let built = match &self.kernel {
            KernelConfig::Family(name) => parse_kernel(name).and_then(|k| KernelSpec::uniform_family(k, d).map_err(|e| e.to_string())),
            KernelConfig::Axes(axes) => {
                if axes.w.len() != d {
                    Err(format!("kernel.w: expected {d} families, got {}", axes.w.len()))
                } else {
                    let w: Result<Vec<_>, _> = axes.w.iter().map(|s| parse_kernel(s)).collect();
                    w.and_then(|w| parse_kernel(&axes.k).and_then(|k| KernelSpec::new(w, k).map_err(|e| e.to_string())))
                }
            }
        };
        built.map_err(|e| SimError::Config(vec![format!("kernel: {e}")]))
    }

    pub fn fit_options(&self) -> FitOptions {
        FitOptions {
            ridge: self.ridge,
            clamp: self.clamp,
        }
    }

    /// `(h₁, h₂)` at sample size `n`.
    pub fn bandwidths(&self, n: usize) -> (f64, f64) {
        let rule = self.bandwidth;
        let h1 = self.h1.unwrap_or_else(|| rule.c * (n as f64).powf(-rule.gamma));
        let h2 = self.h2.unwrap_or(rule.rho * h1);
        (h1, h2)
    }

    pub fn delta(&self, n: usize) -> f64 {
        self.delta.c * (n as f64).powf(-self.delta.exponent)
    }

    pub fn y_box(&self, law: &DgpSpec) -> (f64, f64) {
        use condist_core::ConditionalLaw;
        match self.y_box {
            Some([a, b]) => (a, b),
            None => law.y_range(),
        }
    }

    /// Every violation of the schema invariants, plus warnings for side
    /// conditions that the experiment `kind` relies on.
    pub fn validate(&self, kind: ExperimentKind) -> Validation {
        let mut v = Validation::default();
        let err = &mut v.errors;

        let d = match self.dgp.parse::<DgpId>() {
            Ok(id) => {
                use condist_core::ConditionalLaw;
                let d = DgpSpec::new(id).dim();
                if let Err(SimError::Config(msgs)) = self.kernel_spec(d) {
                    err.extend(msgs);
                }
                Some(d)
            }
            Err(e) => {
                err.push(format!("dgp: {e}"));
                None
            }
        };

        if self.n.is_empty() {
            err.push("n: schedule must not be empty".into());
        }
        if self.n.contains(&0) {
            err.push("n: sample sizes must be at least 1".into());
        }
        if self.n.windows(2).any(|w| w[1] <= w[0]) {
            err.push("n: schedule must be strictly increasing".into());
        }
        match kind {
            ExperimentKind::Rates if self.n.len() < 4 => err.push(format!("n: rates needs at least 4 sample sizes, got {}", self.n.len())),
            ExperimentKind::Alr | ExperimentKind::Equicont if self.n.len() < 2 => {
                err.push(format!("n: {kind} needs at least 2 sample sizes, got {}", self.n.len()))
            }
            _ => {}
        }

        for (name, value) in [("h1", self.h1), ("h2", self.h2)] {
            if let Some(h) = value {
                if !(h > 0.0 && h.is_finite()) {
                    err.push(format!("{name}: must be positive and finite, got {h}"));
                }
            }
        }
        let rule = self.bandwidth;
        if !(rule.c > 0.0 && rule.c.is_finite()) {
            err.push(format!("bandwidth.c: must be positive, got {}", rule.c));
        }
        if !(rule.rho > 0.0 && rule.rho.is_finite()) {
            err.push(format!("bandwidth.rho: must be positive, got {}", rule.rho));
        }
        if let Some(d) = d {
            let upper = 1.0 / d as f64;
            if !(rule.gamma > 0.0 && rule.gamma < upper) {
                err.push(format!("bandwidth.gamma: must lie in (0, 1/d) = (0, {upper}), got {}", rule.gamma));
            }
        }

        if self.replications == 0 {
            err.push("replications: must be at least 1".into());
        } else if kind.is_statistical() && self.replications < 100 {
            v.warnings.push(format!(
                "replications: {} is below 100; statistical summaries will be noisy",
                self.replications
            ));
        }
        if self.grid.m_y < 2 {
            err.push(format!("grid.m_y: must be at least 2, got {}", self.grid.m_y));
        }
        if self.grid.m_x < 2 {
            err.push(format!("grid.m_x: must be at least 2, got {}", self.grid.m_x));
        }
        if !(self.ridge >= 0.0 && self.ridge.is_finite()) {
            err.push(format!("ridge: must be nonnegative, got {}", self.ridge));
        }
        if self.estimators.is_empty() {
            err.push("estimators: must name at least one estimator".into());
        }
        if let Some([a, b]) = self.y_box {
            if !(a.is_finite() && b.is_finite() && a < b) {
                err.push(format!("y_box: need finite lower < upper, got [{a}, {b}]"));
            }
        }
        if !(self.delta.c > 0.0 && self.delta.c.is_finite()) {
            err.push(format!("delta.c: must be positive, got {}", self.delta.c));
        }
        if !(self.delta.exponent > 0.0 && self.delta.exponent.is_finite()) {
            err.push(format!("delta.exponent: must be positive so that δ_n → 0, got {}", self.delta.exponent));
        }
        self.validate_bias(err);

        if let Some(d) = d {
            self.side_conditions(kind, d, &mut v);
        }
        v
    }

    fn validate_bias(&self, err: &mut Vec<String>) {
        let b = &self.bias;
        if b.h.is_empty() || b.h.iter().any(|h| !(*h > 0.0 && h.is_finite())) {
            err.push("bias.h: need a nonempty list of positive bandwidths".into());
        }
        if !(b.y_range[0] < b.y_range[1]) {
            err.push(format!("bias.y_range: need lower < upper, got {:?}", b.y_range));
        }
        if !(0.0 <= b.x_interior[0] && b.x_interior[0] <= b.x_interior[1] && b.x_interior[1] <= 1.0) {
            err.push(format!("bias.x_interior: need 0 <= lower <= upper <= 1, got {:?}", b.x_interior));
        }
        if b.m_y == 0 || b.m_x == 0 {
            err.push("bias.m_y, bias.m_x: must be at least 1".into());
        }
        if b.boundary_offsets.iter().any(|o| !(0.0..1.0).contains(o)) {
            err.push("bias.boundary_offsets: offsets are multiples of h in [0, 1)".into());
        }
    }

    fn side_conditions(&self, kind: ExperimentKind, d: usize, v: &mut Validation) {
        let gamma = self.bandwidth.gamma;
        let fixed = self.h1.is_some();
        let warn = &mut v.warnings;
        if fixed && self.n.len() > 1 && kind != ExperimentKind::Estimate {
            warn.push("h1: a fixed bandwidth does not shrink with n, so the asymptotic conditions cannot hold along the schedule".into());
        }
        if fixed {
            return;
        }
        let df = d as f64;
        match kind {
            ExperimentKind::Alr => {
                if gamma < 1.0 / (df + 4.0) {
                    warn.push(format!(
                        "bandwidth.gamma = {gamma}: the ALR order needs n h₁^(d+4) / |log h₁| bounded, which requires gamma >= 1/(d+4) = {}",
                        1.0 / (df + 4.0)
                    ));
                }
            }
            ExperimentKind::Clt => {
                if d != 1 {
                    v.errors.push(format!("dgp: the integrated-CDF CLT is stated for d = 1, got d = {d}"));
                }
                if gamma <= 0.25 {
                    warn.push(format!(
                        "bandwidth.gamma = {gamma}: √n h₁² → 0 fails (√n h₁² = n^{}), so the bias is not negligible",
                        0.5 - 2.0 * gamma
                    ));
                }
                if gamma >= 0.5 {
                    warn.push(format!("bandwidth.gamma = {gamma}: √n h₁ / |log h₁| → ∞ fails"));
                }
            }
            _ => {}
        }
    }
}

/// Parses and validates; errors carry every violation.
pub fn parse_and_validate(text: &str, kind: ExperimentKind) -> Result<(ExperimentConfig, Vec<String>), SimError> {
    let cfg = ExperimentConfig::from_json(text)?;
    let v = cfg.validate(kind);
    if v.is_ok() {
        Ok((cfg, v.warnings))
    } else {
        Err(SimError::Config(v.errors))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_gets_defaults() {
        let cfg = ExperimentConfig::from_json(r#"{"dgp": "A"}"#).unwrap();
        assert_eq!(cfg.grid, GridConfig { m_y: 201, m_x: 51 });
        assert_eq!(cfg.replications, 200);
        assert!(cfg.validate(ExperimentKind::Rates).is_ok());
    }

    #[test]
    fn unknown_key_is_rejected() {
        let err = ExperimentConfig::from_json(r#"{"dgp": "A", "h3": 0.1}"#).unwrap_err();
        assert!(err.to_string().contains("h3"), "{err}");
    }

    #[test]
    fn every_violation_is_listed() {
        let cfg = ExperimentConfig::from_json(r#"{"dgp": "Z", "h1": -1, "n": [10, 5], "replications": 0}"#).unwrap();
        let v = cfg.validate(ExperimentKind::Estimate);
        assert!(v.errors.iter().any(|e| e.starts_with("h1:")));
        assert!(v.errors.iter().any(|e| e.starts_with("dgp:")));
        assert!(v.errors.iter().any(|e| e.starts_with("n:")));
        assert!(v.errors.iter().any(|e| e.starts_with("replications:")));
    }

    #[test]
    fn clt_warns_about_undersmoothing() {
        let cfg = ExperimentConfig::from_json(r#"{"dgp": "A", "n": [2000], "bandwidth": {"gamma": 0.1}}"#).unwrap();
        let v = cfg.validate(ExperimentKind::Clt);
        assert!(v.is_ok());
        assert!(v.warnings.iter().any(|w| w.contains("√n h₁² → 0")), "{:?}", v.warnings);
        let ok = ExperimentConfig::from_json(r#"{"dgp": "A", "n": [2000], "bandwidth": {"gamma": 0.35}}"#).unwrap();
        assert!(ok.validate(ExperimentKind::Clt).warnings.is_empty());
    }

    #[test]
    fn clt_rejects_two_dimensional_designs() {
        let cfg = ExperimentConfig::from_json(r#"{"dgp": "B", "n": [2000], "bandwidth": {"gamma": 0.35}}"#).unwrap();
        assert!(!cfg.validate(ExperimentKind::Clt).is_ok());
    }

    #[test]
    fn gamma_must_respect_dimension() {
        let cfg = ExperimentConfig::from_json(r#"{"dgp": "B", "bandwidth": {"gamma": 0.6}}"#).unwrap();
        let v = cfg.validate(ExperimentKind::Rates);
        assert!(v.errors.iter().any(|e| e.starts_with("bandwidth.gamma")));
    }

    #[test]
    fn per_axis_kernels() {
        let cfg = ExperimentConfig::from_json(r#"{"dgp": "B", "kernel": {"w": ["biweight", "uniform"], "k": "triangular"}}"#).unwrap();
        let spec = cfg.kernel_spec(2).unwrap();
        assert_eq!(spec.w_axes(), &[UnivariateKernel::Biweight, UnivariateKernel::Uniform]);
        assert!(cfg.kernel_spec(1).is_err());
    }

    #[test]
    fn bandwidth_rule() {
        let cfg = ExperimentConfig::from_json(r#"{"dgp": "A", "bandwidth": {"c": 2, "gamma": 0.5, "rho": 0.5}}"#).unwrap();
        let (h1, h2) = cfg.bandwidths(100);
        assert!((h1 - 0.2).abs() < 1e-15 && (h2 - 0.1).abs() < 1e-15);
        let fixed = ExperimentConfig::from_json(r#"{"dgp": "A", "h1": 0.3}"#).unwrap();
        assert_eq!(fixed.bandwidths(100), (0.3, 0.3));
    }
}
