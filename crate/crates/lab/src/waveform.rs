//! OFDM numerology and the comb pilot grid used for channel sounding.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use multidop_core::wavelength;

use crate::SimError;

/// Subcarriers per resource block.
pub const SUBCARRIERS_PER_RB: usize = 12;

/// RNG stream reserved for pilot symbols.
const PILOT_STREAM: u64 = 0x9170;

#[derive(Debug, Clone, PartialEq)]
pub struct WaveformConfig {
    pub carrier_frequency: f64,
    pub subcarrier_spacing: f64,
    pub num_resource_blocks: usize,
    pub fft_size: usize,
    /// Slot duration `T`, seconds.
    pub slot_duration: f64,
    pub pilot_comb_step: usize,
    pub pilots_per_slot: usize,
}

impl Default for WaveformConfig {
    fn default() -> Self {
        Self {
            carrier_frequency: 28e9,
            subcarrier_spacing: 120e3,
            num_resource_blocks: 52,
            fft_size: 1024,
            slot_duration: 125e-6,
            pilot_comb_step: 2,
            pilots_per_slot: 1,
        }
    }
}

impl WaveformConfig {
    pub fn validate(&self) -> Result<(), SimError> {
        let bad = |msg: &str| Err(SimError::InvalidWaveform(msg.to_string()));
        if !(self.carrier_frequency > 0.0) || !(self.subcarrier_spacing > 0.0) || !(self.slot_duration > 0.0) {
            return bad("frequencies and slot duration must be positive");
        }
        if self.num_resource_blocks == 0 {
            return bad("at least one resource block is required");
        }
        if self.fft_size < self.num_subcarriers() {
            return bad("fft_size must cover 12 subcarriers per resource block");
        }
        if self.pilot_comb_step == 0 {
            return bad("pilot_comb_step must be at least 1");
        }
        if self.pilots_per_slot != 1 {
            return bad("exactly one pilot symbol per slot is supported");
        }
        Ok(())
    }

    pub fn num_subcarriers(&self) -> usize {
        SUBCARRIERS_PER_RB * self.num_resource_blocks
    }

    pub fn wavelength(&self) -> f64 {
        wavelength(self.carrier_frequency)
    }

    /// Signed subcarrier index relative to the carrier, `−N/2 … N/2 − 1`.
    pub fn subcarrier_index(&self, i: usize) -> i64 {
        i as i64 - (self.num_subcarriers() / 2) as i64
    }

    /// Baseband frequency of subcarrier `i`, Hz.
    pub fn subcarrier_offset(&self, i: usize) -> f64 {
        self.subcarrier_index(i) as f64 * self.subcarrier_spacing
    }

    pub fn occupied_bandwidth(&self) -> f64 {
        self.num_subcarriers() as f64 * self.subcarrier_spacing
    }

    pub fn is_pilot(&self, i: usize) -> bool {
        i.is_multiple_of(self.pilot_comb_step)
    }

    pub fn pilot_positions(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.num_subcarriers()).step_by(self.pilot_comb_step)
    }
}

/// Known transmitted symbols on the occupied subcarriers; zero off-pilot.
#[derive(Debug, Clone, PartialEq)]
pub struct PilotGrid {
    pub symbols: Vec<Complex64>,
    pub comb_step: usize,
}

impl PilotGrid {
    pub fn num_pilots(&self) -> usize {
        self.symbols.iter().filter(|s| s.norm_sqr() > 0.0).count()
    }
}

/// Unit-magnitude QPSK pilots on a comb, deterministic in `(seed, k)`.
pub fn generate_pilot_grid(cfg: &WaveformConfig, seed: u64, k: u64) -> PilotGrid {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ k.wrapping_mul(0x9E37_79B9_7F4A_7C15));
    rng.set_stream(PILOT_STREAM);
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let symbols = (0..cfg.num_subcarriers())
        .map(|i| {
            if cfg.is_pilot(i) {
                let bits: u8 = rng.random_range(0..4);
                Complex64::new(if bits & 1 == 0 { h } else { -h }, if bits & 2 == 0 { h } else { -h })
            } else {
                Complex64::new(0.0, 0.0)
            }
        })
        .collect();
    PilotGrid { symbols, comb_step: cfg.pilot_comb_step }
}
