//! Runs the estimator over a frame sequence and scores it against truth.

use multidop_core::{DopplerEstimator, DopplerTrack, EstimatorConfig, EstimatorError, ObservationFrame, StepOutcome, Vec2D};

#[derive(Debug, Clone, PartialEq)]
pub struct TrackResult {
    pub track: DopplerTrack,
    pub degraded: usize,
    pub skipped: usize,
}

/// Feeds frames in order; slots without a frame or without an estimate
/// are left out of the track.
pub fn estimate_track<'a, I>(
    frames: I,
    truth: &[f64],
    rx_positions: &[Vec2D],
    cfg: EstimatorConfig,
) -> Result<TrackResult, EstimatorError>
where
    I: IntoIterator<Item = &'a ObservationFrame>,
{
    let mut est = DopplerEstimator::new(rx_positions.to_vec(), cfg)?;
    let mut track = DopplerTrack::default();
    for frame in frames {
        if let StepOutcome::Estimate { k, doppler_hz, .. } = est.step(frame)? {
            let f_true = truth.get(k as usize).copied().ok_or(EstimatorError::EmptyTrack)?;
            track.push(k, f_true, doppler_hz);
        }
    }
    Ok(TrackResult { track, degraded: est.degraded_steps(), skipped: est.skipped_steps() })
}
