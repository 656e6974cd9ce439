//! Simulation, estimation harness and file formats for multistatic target
//! Doppler estimation. The numerical pipeline lives in `multidop_core`.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod channel;
pub mod cir;
pub mod config;
pub mod harness;
pub mod pipeline;
pub mod sim;
pub mod waveform;

use multidop_core::GeometryError;

#[derive(Debug, thiserror::Error)]
pub enum SimError {
    #[error("invalid waveform: {0}")]
    InvalidWaveform(String),
    #[error("invalid link budget: {0}")]
    InvalidBudget(&'static str),
    #[error("per-receiver data must cover {expected} receivers")]
    ReceiverCount { expected: usize },
    #[error("grid length {got} does not match {expected} subcarriers")]
    GridMismatch { expected: usize, got: usize },
    #[error("pilot grid has no pilots")]
    NoPilots,
    #[error("fewer than two CIR peaks above the noise floor")]
    DroppedFrame,
    #[error("{dropped} of {total} frames dropped")]
    TooManyDropped { dropped: usize, total: usize },
    #[error("invalid run: {0}")]
    InvalidRun(String),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}
