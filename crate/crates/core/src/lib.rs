//! levylab: a simulation and spectral-verification laboratory for killed
//! non-symmetric Lévy processes on bounded open sets.
//!
//! The crate builds strictly α-stable and truncated stable models (optionally
//! Brownian-mixed), simulates their killed paths in unions of balls and
//! boxes, discretizes the killed semigroup and its dual on a cell grid from
//! Monte Carlo transitions, extracts the principal eigentriple
//! (λ₀, φ₀, ψ₀), and turns the spectral-theory statements about such
//! semigroups — the two-sided intrinsic-ultracontractivity sandwich, the
//! exponential convergence rate, exit-time/eigenfunction comparability, the
//! Green-function lower bound, parabolic boundary Harnack ratios, and
//! conditioned-lifetime bounds — into numerical certificates with Monte Carlo
//! error tracking.
//!
//! Everything is generic over the scalar type via [`scalar::Real`]
//! (`f32` or `f64`); the `*64`/`*32` aliases below fix the common choices.

pub mod error;
pub mod geometry;
pub mod levy;
pub mod linalg;
pub mod quad;
pub mod sampler;
pub mod scalar;
pub mod stats;

pub use error::{Error, Result};
pub use scalar::Real;

pub type LevyModel64 = levy::LevyModel<f64>;
pub type LevyModel32 = levy::LevyModel<f32>;
pub type SpectralDensity64 = levy::SpectralDensity<f64>;
pub type Domain64 = geometry::Domain<f64>;
pub type Domain32 = geometry::Domain<f32>;
pub type Grid64 = geometry::Grid<f64>;
