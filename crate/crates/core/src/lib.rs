//! Numerical evaluation of higher (two-dimensional) Mordell integrals attached
//! to positive definite integral binary quadratic forms.
//!
//! The crate is organised bottom-up:
//!
//! - [`quad`]: adaptive Gauss–Kronrod quadrature on finite intervals, half-lines,
//!   Gaussian-weighted planes and the wedge `0 ≤ ω₁ ≤ ω₂`.
//! - [`forms`]: quadratic forms, rational shift vectors, lattice boxes and points of
//!   the upper half-plane.
//! - [`errfns`]: the rescaled error functions `E`, `M` and their two-dimensional
//!   analogues `E₂`, `M₂`.
//! - [`theta`]: truncated unary and binary theta series with tail bounds.
//! - [`eichler`]: the one-dimensional Mordell integral, (double) Eichler integrals and
//!   the lattice-sum evaluation of `H_α(iv)`.
//! - [`kernel`]: the `𝓕`/`𝓖` kernels and the Gaussian-weighted plane integral of `g_α`.
//!
//! `H_α(iv)` can be computed by three independent routes (lattice sums of `M₂` via
//! the contour definition, via the error-function relation, or via per-term Eichler
//! integrals) and by the kernel integral; agreement of all of them is the main
//! consistency check exposed by the companion CLI.

// `!(x > 0.0)` style guards are kept on purpose: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod eichler;
pub mod errfns;
pub mod error;
pub mod forms;
pub mod kernel;
pub mod quad;
pub mod theta;

pub use error::{Error, Result};
pub use forms::{AlphaCase, AlphaShift, LatticePoint, ModularPoint, QuadraticForm};
pub use quad::{QuadratureResult, Tolerance};
