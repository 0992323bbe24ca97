//! Spectral, geometric and exact-exponent machinery for measuring the
//! diagonal high×high→low paraproduct `P_{<λ^{1-δ}} ∇·(u_λ ⊗ v_λ)` of
//! three-dimensional incompressible flow.
//!
//! Modules, bottom-up:
//!
//! - [`spectral`]: periodic grid, band fields, Sobolev norms, Leray
//!   projection, alias-safe products.
//! - [`dyadic`]: Littlewood–Paley projections and smooth angular caps.
//! - [`phase`]: the resonant phase, its transverse Hessian and the null
//!   symbol, with finite-difference cross-checks.
//! - [`window`]: Gaussian window derivatives, heat/Schrödinger kernel
//!   differences, and the tile-to-max inequality.
//! - [`engine`]: the paraproduct itself and the measured experiments.
//! - [`ledger`]: exact rational bookkeeping of every exponent.

pub mod dyadic;
pub mod engine;
pub mod error;
pub mod fft;
pub mod ledger;
pub mod phase;
pub mod rng;
pub mod spectral;
pub mod window;

pub use error::{Error, Result};
