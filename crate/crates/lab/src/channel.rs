//! Two-path (LoS + target) frequency-domain channel with per-receiver clock
//! impairments and AWGN.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, LogNormal, Normal};

use multidop_core::{Scene, SPEED_OF_LIGHT};

use crate::waveform::{PilotGrid, WaveformConfig};
use crate::SimError;

/// Converts a density in dBm/Hz to W/Hz.
pub fn dbm_per_hz_to_watts(dbm: f64) -> f64 {
    10f64.powf(dbm / 10.0) * 1e-3
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinkBudget {
    pub tx_power: f64,
    /// One-sided noise power spectral density, W/Hz.
    pub noise_density: f64,
    /// `(µ_L, σ_L)` of `ln ρ`.
    pub rcs_log_params: (f64, f64),
}

impl Default for LinkBudget {
    fn default() -> Self {
        Self {
            tx_power: 0.2,
            noise_density: dbm_per_hz_to_watts(-174.0),
            rcs_log_params: rcs_log_params_from_moments(50.0, 100.0),
        }
    }
}

/// Lognormal parameters whose distribution has the given mean and
/// variance (in m² and m⁴).
pub fn rcs_log_params_from_moments(mean: f64, variance: f64) -> (f64, f64) {
    let sigma_sq = (1.0 + variance / (mean * mean)).ln();
    (mean.ln() - sigma_sq / 2.0, sigma_sq.sqrt())
}

impl LinkBudget {
    pub fn validate(&self) -> Result<(), SimError> {
        if !(self.tx_power > 0.0) || !(self.noise_density > 0.0) {
            return Err(SimError::InvalidBudget("tx power and noise density must be positive"));
        }
        if !(self.rcs_log_params.1 >= 0.0) || !self.rcs_log_params.0.is_finite() {
            return Err(SimError::InvalidBudget("RCS log-parameters must be finite with σ ≥ 0"));
        }
        Ok(())
    }

    pub fn draw_rcs<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let (mu, sigma) = self.rcs_log_params;
        if sigma == 0.0 {
            return mu.exp();
        }
        LogNormal::new(mu, sigma).expect("validated lognormal parameters").sample(rng)
    }

    /// Complex noise variance on one subcarrier, W.
    pub fn noise_variance(&self, subcarrier_spacing: f64) -> f64 {
        self.noise_density * subcarrier_spacing
    }
}

/// Per-receiver clock impairments for one run.
#[derive(Debug, Clone, PartialEq)]
pub struct ImpairmentState {
    /// Carrier frequency offsets `f_n^o`, Hz.
    pub cfo: Vec<f64>,
    /// Phase offsets `ψ_n^o`, radians.
    pub po: Vec<f64>,
    /// Timing offsets `τ_o,n`, seconds.
    pub to: Vec<f64>,
    /// AoA noise standard deviation `σ_δ`, radians.
    pub aoa_noise_std: f64,
    pub rng_seed: u64,
}

impl ImpairmentState {
    pub fn none(num_rx: usize) -> Self {
        Self {
            cfo: vec![0.0; num_rx],
            po: vec![0.0; num_rx],
            to: vec![0.0; num_rx],
            aoa_noise_std: 0.0,
            rng_seed: 0,
        }
    }

    /// CFO uniform in `±cfo_max`, PO uniform in `[0, 2π)` from `offset_rng`;
    /// TO uniform in `[0, to_max]` from `timing_rng`.
    pub fn draw<R: Rng + ?Sized, S: Rng + ?Sized>(
        num_rx: usize,
        cfo_max: f64,
        to_max: f64,
        offset_rng: &mut R,
        timing_rng: &mut S,
    ) -> Self {
        let mut state = Self::none(num_rx);
        for n in 0..num_rx {
            state.cfo[n] = if cfo_max > 0.0 { offset_rng.random_range(-cfo_max..=cfo_max) } else { 0.0 };
            state.po[n] = offset_rng.random_range(0.0..TAU);
            state.to[n] = if to_max > 0.0 { timing_rng.random_range(0.0..=to_max) } else { 0.0 };
        }
        state
    }

    pub fn num_rx(&self) -> usize {
        self.cfo.len()
    }

    /// Combined offset phase `Ψ_n^o[k] = ψ_n^o + 2π k T f_n^o`.
    pub fn offset_phase(&self, n: usize, k: u64, slot_duration: f64) -> f64 {
        self.po[n] + TAU * (k as f64 * slot_duration * self.cfo[n]).rem_euclid(1.0)
    }
}

/// Complex amplitudes of the two paths at one receiver, `√W`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathGains {
    pub los: f64,
    pub tgt: f64,
}

/// Free-space LoS gain and bistatic radar-equation target gain per receiver.
pub fn path_gains(scene: &Scene, budget: &LinkBudget, wavelength: f64, rcs: f64) -> Result<Vec<PathGains>, SimError> {
    scene.validate()?;
    let d_tx_tgt = scene.tx_pos.distance(scene.tgt_pos);
    Ok(scene
        .rx_pos
        .iter()
        .map(|&rx| {
            let d_los = scene.tx_pos.distance(rx);
            let d_tgt_rx = scene.tgt_pos.distance(rx);
            let los_power = budget.tx_power * (wavelength / (4.0 * PI * d_los)).powi(2);
            let tgt_power = budget.tx_power * wavelength * wavelength * rcs
                / ((4.0 * PI).powi(3) * d_tx_tgt * d_tx_tgt * d_tgt_rx * d_tgt_rx);
            PathGains { los: los_power.sqrt(), tgt: tgt_power.sqrt() }
        })
        .collect())
}

/// Carrier phase `−2π·L/λ`, reduced before scaling to keep precision.
fn carrier_phase(path_length: f64, wavelength: f64) -> f64 {
    -TAU * (path_length / wavelength).rem_euclid(1.0)
}

/// Everything `apply_channel` needs besides the grid and scene.
pub struct ChannelContext<'a> {
    pub waveform: &'a WaveformConfig,
    pub impairments: &'a ImpairmentState,
    pub gains: &'a [PathGains],
    /// Extra path length (m) added to each receiver's target-path carrier
    /// phase only; used to realize alternative Doppler conventions.
    pub target_phase_excess: &'a [f64],
    /// Complex noise variance per subcarrier; `None` disables AWGN.
    pub noise_variance: Option<f64>,
}

/// Received pilot grid at every receiver for slot `k`:
/// `Y_n[i] = s[i]·Ψ_n·Σ_m A_m,n e^{−j2π(f_c+Δf_i)τ_m,n} e^{−j2πΔf_i τ_o,n} + w`.
pub fn apply_channel<R: Rng + ?Sized>(
    grid: &PilotGrid,
    scene: &Scene,
    ctx: &ChannelContext<'_>,
    rng: &mut R,
) -> Result<Vec<Vec<Complex64>>, SimError> {
    let wf = ctx.waveform;
    let n_rx = scene.num_rx();
    if ctx.impairments.num_rx() != n_rx || ctx.gains.len() != n_rx || ctx.target_phase_excess.len() != n_rx {
        return Err(SimError::ReceiverCount { expected: n_rx });
    }
    let lambda = wf.wavelength();
    let noise = match ctx.noise_variance {
        Some(v) if v > 0.0 => Some(Normal::new(0.0, (v / 2.0).sqrt()).expect("finite noise std")),
        _ => None,
    };

    let mut out = Vec::with_capacity(n_rx);
    for n in 0..n_rx {
        let l_los = scene.los_length(n)?;
        let l_tgt = scene.target_path_length(n)?;
        let tau_los = l_los / SPEED_OF_LIGHT;
        let tau_tgt = l_tgt / SPEED_OF_LIGHT;
        let tau_o = ctx.impairments.to[n];
        let psi = ctx.impairments.offset_phase(n, scene.k, wf.slot_duration);

        let a_los = Complex64::from_polar(ctx.gains[n].los, carrier_phase(l_los, lambda) + psi);
        let a_tgt = Complex64::from_polar(
            ctx.gains[n].tgt,
            carrier_phase(l_tgt + ctx.target_phase_excess[n], lambda) + psi,
        );

        // Per-subcarrier delay phasors advance by a fixed rotation.
        let phasor = |tau: f64| {
            (
                Complex64::from_polar(1.0, -TAU * wf.subcarrier_offset(0) * tau),
                Complex64::from_polar(1.0, -TAU * wf.subcarrier_spacing * tau),
            )
        };
        let (mut p_los, r_los) = phasor(tau_los + tau_o);
        let (mut p_tgt, r_tgt) = phasor(tau_tgt + tau_o);
        let mut y = Vec::with_capacity(grid.symbols.len());
        for s in &grid.symbols {
            let h = a_los * p_los + a_tgt * p_tgt;
            p_los *= r_los;
            p_tgt *= r_tgt;
            let mut v = h * s;
            if let Some(d) = &noise {
                v += Complex64::new(d.sample(rng), d.sample(rng));
            }
            y.push(v);
        }
        out.push(y);
    }
    Ok(out)
}
