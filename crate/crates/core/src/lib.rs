//! Transition kernels of diffusions `dX = b(t, X) dt + dB` with rough drift.
//!
//! The crate builds the kernel `Γ_t(x, y)` on a periodic grid in two
//! independent ways (a parametrix series and a mild-solution fixed point),
//! measures the drift norms that control it, and checks two-sided Gaussian
//! envelopes, escape probabilities and path-regularity functionals against
//! Monte Carlo ensembles.
//!
//! Modules, bottom up:
//!
//! - [`grid`]: periodic grids, spectral Gaussians, the heat semigroup.
//! - [`littlewood_paley`]: dyadic blocks, Besov norms, drift fields.
//! - [`duhamel`]: exact-exponential time quadrature of Duhamel integrals.
//! - [`parametrix`]: the kernel as a series of iterated transport terms.
//! - [`cauchy`]: the backward Cauchy problem solved by Picard iteration.
//! - [`bounds`]: beta functions, series constants, envelope fits.
//! - [`monte_carlo`]: Euler–Maruyama ensembles and their statistics.

// `!(x > 0.0)` is deliberate throughout: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
#![allow(clippy::needless_range_loop)]

pub mod bounds;
pub mod cauchy;
pub mod duhamel;
pub mod error;
pub mod fourier;
pub mod grid;
pub mod io;
pub mod littlewood_paley;
pub mod monte_carlo;
pub mod parametrix;
pub mod sum;

pub use error::{Error, Result};

/// Version string embedded in reports.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
