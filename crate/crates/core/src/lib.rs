//! Inverse-map power series, characteristic points, symmetry-block Gram
//! spectra and criticality diagnostics for polynomial conformal leaves
//! `f(w) = r w + Σ a_n w^{1-s_n}`.
//!
//! The pipeline, bottom up:
//!
//! * [`series`]: the Taylor branch `U(x; ζ)` and the coefficient tables `R_p(m; ζ)`.
//! * [`branch`]: characteristic points, the dominant orbit, transfer amplitudes.
//! * [`hessian`]: kernel Hessian oracle, Gram blocks, dense Hermitian eigensolver.
//! * [`spectral`]: approach scans and log-scaling fits.
//! * [`growth`]: Laplacian growth by moment conservation and threshold detection.
//! * [`leaves`]: single-pole and single-log leaf diagnostics.
//! * [`report`]: config, CSV/JSON output and the command runner behind the binary.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod branch;
pub mod error;
pub mod growth;
pub mod hessian;
pub mod leaves;
pub mod report;
pub mod series;
pub mod spectral;

pub use error::{Error, Result};
pub use num_complex::Complex64;
pub use series::{Leaf, ParamPoint, PowerSeries};
