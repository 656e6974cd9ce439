//! Multistatic target Doppler estimation with asynchronous receivers.
//!
//! One mobile transmitter illuminates one mobile point target; `N` static
//! receivers observe a line-of-sight path and a target-scattered path. Every
//! receiver has its own carrier frequency offset and phase offset, so no raw
//! path phase is usable on its own. This crate holds the allocation-only
//! parts of the problem:
//!
//! - [`geometry`]: scene kinematics, signed angle conventions, closed-form
//!   Doppler terms and ray-intersection localization.
//! - [`nlls`]: a small dense Levenberg-Marquardt solver.
//! - [`estimator`]: offset cancellation by differencing across paths and
//!   time, the four-unknown reduced system, per-frame solves, smoothing and
//!   target Doppler reconstruction.
//!
//! Signal synthesis, file formats and the command line live in the
//! `multidop` crate.

#![cfg_attr(not(test), no_std)]
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

extern crate alloc;

pub mod estimator;
pub mod frame;
pub mod geometry;
pub mod math;
pub mod nlls;

pub use estimator::{
    DopplerEstimator, DopplerTrack, EstimatorConfig, EstimatorError, ReducedSystem,
    SmoothingMode, SolutionVector, StepOutcome, TrackPoint,
};
pub use frame::{ObservationFrame, PathRecord};
pub use geometry::{
    AngleSet, DopplerConvention, GammaRecursionAoa, GeometryError, Scene, SignedAngle, Vec2D,
};
pub use nlls::{LmError, LmOptions, LmResult, LmStatus};

/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Carrier wavelength for a carrier frequency in Hz.
#[inline]
pub fn wavelength(carrier_hz: f64) -> f64 {
    SPEED_OF_LIGHT / carrier_hz
}
