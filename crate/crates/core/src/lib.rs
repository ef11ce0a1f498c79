//! Trust-region Bayesian optimization for noisy black-box functions.
//!
//! This crate implements TuRBO-style optimization: several independent local
//! Gaussian-process surrogates, each confined to a hyperrectangular trust
//! region that expands on successes and shrinks on failures, with batches of
//! evaluation points allocated across regions by Thompson sampling.
//!
//! The main entry point is [`Turbo`], which owns the optimization loop and
//! exposes both a closed loop ([`Turbo::run`]) and an ask/tell interface for
//! externally evaluated objectives:
//!
//! ```
//! use turbo_core::{Turbo64, TurboConfig};
//!
//! let config = TurboConfig::new(1, 4, 60, 10, 3, 0);
//! let mut turbo = Turbo64::new(config).unwrap();
//! let mut sphere = |x: &[f64]| Ok(x.iter().map(|v| (v - 0.3) * (v - 0.3)).sum());
//! let trace = turbo.run(&mut sphere).unwrap();
//! assert_eq!(trace.len(), 60);
//! ```
//!
//! All optimization takes place on the unit cube `[0, 1]^d`; the
//! [`benchmarks`] module provides standard test functions together with the
//! affine map between their native boxes and unit coordinates.
//!
//! Numerical code is generic over the scalar type through the [`Scalar`]
//! trait (`f32` or `f64`); the `*64` aliases at the crate root pick double
//! precision, which is what the experiment harness uses.

pub mod acquisition;
pub mod benchmarks;
pub mod candidates;
pub mod error;
pub mod gp;
pub mod linalg;
pub mod orchestrator;
pub mod scalar;
pub mod trace;
pub mod trust_region;

pub use error::{Error, Result};
pub use orchestrator::{Turbo, TurboConfig};
pub use scalar::Scalar;
pub use trace::{RunTrace, TraceRecord};
pub use trust_region::TrConfig;

/// Double-precision optimizer, the configuration everything ships with.
pub type Turbo64 = Turbo<f64>;
/// Single-precision optimizer.
pub type Turbo32 = Turbo<f32>;
/// Double-precision fitted surrogate.
pub type GpModel64 = gp::GpModel<f64>;
/// Double-precision run trace.
pub type RunTrace64 = trace::RunTrace<f64>;
