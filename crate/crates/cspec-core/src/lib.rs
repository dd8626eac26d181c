//! Spectral per-mode dynamics and diagnostics for the linearized 2D
//! compressible Couette flow on T x R.
//!
//! The library evaluates the moving-frame Fourier multipliers in closed form,
//! integrates the inviscid 2x2, viscous 3x3 and k = 0 per-mode systems with an
//! oscillation-aware Runge-Kutta pair, assembles multi-mode spectral fields
//! with Helmholtz and Sobolev diagnostics, and fits the predicted growth and
//! decay rates (t^(1/2) instability, inviscid damping, nu^(1/3)-enhanced
//! dissipation, zero-mode heat-type decay). An acceptance suite pins every
//! rate and inequality to executable checks.

pub mod acceptance;
pub mod error;
pub mod field;
pub mod integrator;
pub mod inviscid;
pub mod par;
pub mod report;
pub mod smallc;
pub mod sweep;
pub mod symbols;
pub mod viscous;
pub mod zero_mode;

pub use error::{CoreError, Result};
pub use symbols::{FluidParams, Frequency, WeightParams};
