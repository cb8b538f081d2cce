//! Sequence classification from appearance dynamics.
//!
//! A sequence of images (face expressions in the motivating use case) is
//! reduced to a set of multi-scale Haar-like feature time series, one per
//! (feature kind, spatial scale) channel. Each channel series is lifted into
//! a normalized block-Hankel matrix, so that two sequences can be compared
//! channel-by-channel with a subspace-angle similarity score. Classification
//! is nearest-neighbor per channel followed by a majority vote across the
//! ensemble of channels.
//!
//! The crate is organized around that pipeline:
//!
//! * [`appearance`] — grayscale images, integral images, Haar-like feature
//!   extraction on a 9x9 sampling grid over a face region.
//! * [`dynamics`] — time series, block-Hankel lifting, normalization and the
//!   similarity score.
//! * [`classify`] — per-channel nearest neighbor, majority voting, and the
//!   DTW-on-raw-features baseline.
//! * [`eval`] — dataset manifests, leave-one-subject-out cross validation,
//!   accuracy/confusion reporting, and a synthetic linear-system generator
//!   used for benchmarking and verification.
//! * [`cache`] — the on-disk feature cache that makes repeated evaluations
//!   cheap.

pub mod appearance;
pub mod cache;
pub mod classify;
pub mod dynamics;
pub mod error;
pub mod eval;
pub mod rng;

mod parallel;
mod wire;

pub use error::{ErrorCategory, Error};
