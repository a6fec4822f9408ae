//! Local linear regression estimates of conditional distribution functions,
//! together with the population quantities they target.
//!
//! - [`kernels`]: compactly supported kernels and their exact moments.
//! - [`dgp`]: synthetic laws with analytic conditional CDFs.
//! - [`llr`]: the smoothed and unsmoothed estimators and their scores.
//! - [`oracle`]: pseudo-true values, bias expansions, `θ` and `V` by quadrature.
//! - [`quad`]: adaptive Gauss–Kronrod integration.

pub mod dgp;
pub mod error;
pub mod fixtures;
pub mod grid;
pub mod kernels;
pub mod linalg;
pub mod llr;
pub mod oracle;
pub mod quad;

pub use dgp::{ConditionalLaw, DgpId, DgpSpec, IndependentUniform, SupportSpec, Truth};
pub use error::Error;
pub use kernels::{KernelCheck, KernelSpec, UnivariateKernel};
pub use llr::{Bandwidths, Estimator, FitOptions, LocalFit, LocalWindow, Sample, Surface};
