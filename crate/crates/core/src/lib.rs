//! Numerical laboratory for hypothesis testability in singular statistical
//! models.
//!
//! Two singular families are built in: the two-component equal-variance
//! Gaussian mixture and Gaussian reduced-rank regression. Around them the
//! crate provides
//!
//! * symmetry actions, observables and overlap witnesses ([`equivalence`]),
//! * squared Hellinger distances, regime separation and the local separation
//!   exponent ([`divergence`]),
//! * four concrete tests and worst-case error curves ([`testing`]),
//! * exact grid posteriors and contraction experiments ([`contraction`]),
//! * experiment configs, the scale scan and file output ([`harness`]).
//!
//! The numerical core is generic over [`Real`] (`f32` or `f64`); the aliases
//! below fix the scalar type. The harness works in `f64`.

pub mod contraction;
pub mod divergence;
pub mod equivalence;
pub mod error;
pub mod harness;
pub mod linalg;
pub mod model;
pub mod numeric;
pub mod rng;
pub mod scalar;
pub mod testing;

pub use error::{Error, Result};
pub use model::{BatchData, GmmParams, ModelKind, ModelPoint, Observation, RrrParams, SampleBatch};
pub use scalar::Real;

pub type GmmParams64 = GmmParams<f64>;
pub type RrrParams64 = RrrParams<f64>;
pub type ModelPoint64 = ModelPoint<f64>;
pub type SampleBatch64 = SampleBatch<f64>;
pub type HellingerEstimate64 = divergence::HellingerEstimate<f64>;
pub type ErrorCurve64 = testing::ErrorCurve<f64>;
pub type GridPrior64 = contraction::GridPrior<f64>;

pub type GmmParams32 = GmmParams<f32>;
pub type RrrParams32 = RrrParams<f32>;
pub type ModelPoint32 = ModelPoint<f32>;
pub type SampleBatch32 = SampleBatch<f32>;
pub type HellingerEstimate32 = divergence::HellingerEstimate<f32>;

/// Crate version, echoed into run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
