//! Oracle fixture values: pseudo-true intercepts, `θ`, `V`, and the
//! eigenvalue band of `Ω`/`Ξ`, all computed by quadrature.
//!
//! [`generate`] is deterministic; the JSON it produces is checked into
//! `crates/core/fixtures/oracle.json` and compared against by tests.

use serde::{Deserialize, Serialize};

use crate::dgp::{ConditionalLaw, DgpId, DgpSpec, IndependentUniform};
use crate::error::Error;
use crate::kernels::KernelSpec;
use crate::llr::Bandwidths;
use crate::oracle::{clt_variance, eigen_band, pseudo_true, theta, EigenBand};

/// Path of the checked-in fixture file relative to the workspace root.
pub const FIXTURE_PATH: &str = "crates/core/fixtures/oracle.json";

/// The checked-in fixture file, embedded at compile time.
pub const CHECKED_IN: &str = include_str!("../fixtures/oracle.json");

pub const EIGEN_BANDWIDTHS: [f64; 3] = [0.05, 0.1, 0.3];
pub const EIGEN_POINTS: usize = 101;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    pub beta_bar: f64,
    pub theta: f64,
    pub clt_variance: f64,
    pub eigen: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            beta_bar: 1e-8,
            theta: 1e-9,
            clt_variance: 1e-8,
            eigen: 1e-9,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BetaBarFixture {
    pub dgp: DgpId,
    pub y: f64,
    pub x: Vec<f64>,
    pub h1: f64,
    pub h2: f64,
    pub beta0: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FunctionalFixture {
    /// `"A"`, `"C"`, or `"independent-uniform"`.
    pub case: String,
    pub y_lo: f64,
    pub y_hi: f64,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EigenBandFixture {
    pub dgp: DgpId,
    pub kernel: String,
    pub bandwidths: Vec<f64>,
    pub x_points: usize,
    pub band: EigenBand,
    /// Smallest `C` with every eigenvalue in `[1/C, C]`.
    pub constant: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleFixtures {
    pub kernel: String,
    pub tolerances: Tolerances,
    pub beta_bar: Vec<BetaBarFixture>,
    pub theta: Vec<FunctionalFixture>,
    pub clt_variance: Vec<FunctionalFixture>,
    pub eigen_band: Vec<EigenBandFixture>,
}

/// `(dgp, y, x, h1, h2)` points whose pseudo-true intercept is recorded.
fn beta_bar_points() -> Vec<(DgpId, f64, Vec<f64>, f64, f64)> {
    vec![
        (DgpId::A, 0.25, vec![0.5], 0.1, 0.1),
        (DgpId::A, 0.25, vec![0.0], 0.1, 0.1),
        (DgpId::A, 1.0, vec![0.9], 0.2, 0.1),
        (DgpId::A, -0.5, vec![1.0], 0.3, 0.3),
        (DgpId::B, 1.0, vec![0.5, 0.5], 0.2, 0.2),
        (DgpId::B, 0.3, vec![0.0, 0.0], 0.2, 0.1),
        (DgpId::C, 0.8, vec![0.5], 0.1, 0.1),
        (DgpId::C, 1.9, vec![1.0], 0.1, 0.05),
    ]
}

/// Named law and its `y` integration box for `θ` and `V`.
pub fn functional_cases() -> Vec<(String, Box<dyn ConditionalLaw>, (f64, f64))> {
    vec![
        ("A".to_string(), Box::new(DgpSpec::new(DgpId::A)), (-4.0, 5.0)),
        ("C".to_string(), Box::new(DgpSpec::new(DgpId::C)), (0.0, 2.0)),
        ("independent-uniform".to_string(), Box::new(IndependentUniform::new(1)), (0.0, 1.0)),
    ]
}

pub fn generate() -> Result<OracleFixtures, Error> {
    let mut beta_bar = Vec::new();
    for (dgp, y, x, h1, h2) in beta_bar_points() {
        let law = DgpSpec::new(dgp);
        let spec = KernelSpec::epanechnikov(law.dim());
        let pt = pseudo_true(y, &x, Bandwidths::new(h1, h2)?, &law, &spec)?;
        beta_bar.push(BetaBarFixture {
            dgp,
            y,
            x,
            h1,
            h2,
            beta0: pt.beta_bar[0],
        });
    }

    let mut thetas = Vec::new();
    let mut variances = Vec::new();
    for (case, law, y_box) in functional_cases() {
        thetas.push(FunctionalFixture {
            case: case.clone(),
            y_lo: y_box.0,
            y_hi: y_box.1,
            value: theta(law.as_ref(), y_box)?,
        });
        variances.push(FunctionalFixture {
            case,
            y_lo: y_box.0,
            y_hi: y_box.1,
            value: clt_variance(law.as_ref(), y_box)?,
        });
    }

    let mut bands = Vec::new();
    for dgp in [DgpId::A, DgpId::C] {
        let law = DgpSpec::new(dgp);
        let spec = KernelSpec::epanechnikov(1);
        let band = eigen_band(&law, &spec, &EIGEN_BANDWIDTHS, EIGEN_POINTS)?;
        bands.push(EigenBandFixture {
            dgp,
            kernel: "epanechnikov".into(),
            bandwidths: EIGEN_BANDWIDTHS.to_vec(),
            x_points: EIGEN_POINTS,
            constant: band.constant(),
            band,
        });
    }

    Ok(OracleFixtures {
        kernel: "epanechnikov".into(),
        tolerances: Tolerances::default(),
        beta_bar,
        theta: thetas,
        clt_variance: variances,
        eigen_band: bands,
    })
}

impl OracleFixtures {
    pub fn checked_in() -> Result<Self, serde_json::Error> {
        serde_json::from_str(CHECKED_IN)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("fixtures serialize");
        s.push('\n');
        s
    }

    /// Entries of `other` that disagree with `self` beyond the tolerances of
    /// `self`, one message per mismatch.
    pub fn mismatches(&self, other: &OracleFixtures) -> Vec<String> {
        let tol = self.tolerances;
        let mut out = Vec::new();
        if self.beta_bar.len() != other.beta_bar.len()
            || self.theta.len() != other.theta.len()
            || self.clt_variance.len() != other.clt_variance.len()
            || self.eigen_band.len() != other.eigen_band.len()
        {
            out.push("fixture sets have different shapes".to_string());
            return out;
        }
        for (a, b) in self.beta_bar.iter().zip(&other.beta_bar) {
            if a.dgp != b.dgp || a.x != b.x || a.y != b.y || (a.beta0 - b.beta0).abs() > tol.beta_bar {
                out.push(format!("beta_bar {:?} vs {:?}", a, b));
            }
        }
        for (name, xs, ys, t) in [
            ("theta", &self.theta, &other.theta, tol.theta),
            ("clt_variance", &self.clt_variance, &other.clt_variance, tol.clt_variance),
        ] {
            for (a, b) in xs.iter().zip(ys) {
                if a.case != b.case || (a.value - b.value).abs() > t {
                    out.push(format!("{name} {:?} vs {:?}", a, b));
                }
            }
        }
        for (a, b) in self.eigen_band.iter().zip(&other.eigen_band) {
            let rel = (a.constant - b.constant).abs() / a.constant;
            if a.dgp != b.dgp || rel > tol.eigen {
                out.push(format!("eigen_band {:?} vs {:?}", a, b));
            }
        }
        out
    }
}
