//! Per-slot measurements handed from the receivers to the estimator.

use alloc::vec::Vec;

use crate::geometry::SignedAngle;

/// What one receiver extracted from its channel estimate in one slot.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PathRecord {
    /// Phase of the LoS peak, wrapped.
    pub phi_los: f64,
    /// Phase of the target peak, wrapped.
    pub phi_tgt: f64,
    pub aoa_los: SignedAngle,
    pub aoa_tgt: SignedAngle,
    pub amp_los: f64,
    pub amp_tgt: f64,
}

/// All receivers' records for slot `k`, in receiver order.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservationFrame {
    pub k: u64,
    pub records: Vec<PathRecord>,
}

impl ObservationFrame {
    pub fn num_rx(&self) -> usize {
        self.records.len()
    }
}
