//! Least-squares channel estimation, oversampled CIR and two-peak extraction.

use std::f64::consts::{PI, TAU};
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use multidop_core::math::wrap;

use crate::waveform::{PilotGrid, WaveformConfig};
use crate::SimError;

pub const DEFAULT_OVERSAMPLING: usize = 8;

/// Peaks must exceed the median tap power by this factor (6 dB).
const FLOOR_MARGIN: f64 = 3.981_071_705_534_972;
/// Peaks more than 60 dB below the strongest tap are window sidelobes.
const DYNAMIC_RANGE: f64 = 1e-6;

/// Per-subcarrier LS estimate `Y/s` on pilots, linearly interpolated
/// between pilots and held at the band edges.
pub fn ls_estimate(received: &[Complex64], pilots: &PilotGrid) -> Result<Vec<Complex64>, SimError> {
    let (known, values) = pilot_estimates(received, pilots)?;
    Ok(interpolate(&known, &values, received.len()))
}

/// Positions of the pilots and the raw `Y/s` there.
pub fn pilot_estimates(
    received: &[Complex64],
    pilots: &PilotGrid,
) -> Result<(Vec<usize>, Vec<Complex64>), SimError> {
    if received.len() != pilots.symbols.len() {
        return Err(SimError::GridMismatch { expected: pilots.symbols.len(), got: received.len() });
    }
    let known: Vec<usize> = (0..received.len()).filter(|&i| pilots.symbols[i].norm_sqr() > 0.0).collect();
    if known.is_empty() {
        return Err(SimError::NoPilots);
    }
    let values = known.iter().map(|&i| received[i] / pilots.symbols[i]).collect();
    Ok((known, values))
}

fn interpolate(known: &[usize], values: &[Complex64], len: usize) -> Vec<Complex64> {
    let mut h = vec![Complex64::new(0.0, 0.0); len];
    for (&i, &v) in known.iter().zip(values) {
        h[i] = v;
    }
    for pair in known.windows(2) {
        let (a, b) = (pair[0], pair[1]);
        let span = (b - a) as f64;
        for i in a + 1..b {
            let t = (i - a) as f64 / span;
            h[i] = h[a] * (1.0 - t) + h[b] * t;
        }
    }
    let (first, last) = (known[0], known[known.len() - 1]);
    for i in 0..first {
        h[i] = h[first];
    }
    for i in last + 1..len {
        h[i] = h[last];
    }
    h
}

/// Four-term Blackman-Harris taper of length `n`.
pub fn blackman_harris(n: usize) -> Vec<f64> {
    const A: [f64; 4] = [0.358_75, 0.488_29, 0.141_28, 0.011_68];
    if n == 1 {
        return vec![1.0];
    }
    let denom = (n - 1) as f64;
    (0..n)
        .map(|i| {
            let x = TAU * i as f64 / denom;
            A[0] - A[1] * x.cos() + A[2] * (2.0 * x).cos() - A[3] * (3.0 * x).cos()
        })
        .collect()
}

#[derive(Debug, Clone)]
pub struct CirEstimate {
    pub taps: Vec<Complex64>,
    /// Seconds per tap.
    pub delay_resolution: f64,
    pub oversampling: usize,
}

impl CirEstimate {
    pub fn power(&self, bin: usize) -> f64 {
        self.taps[bin].norm_sqr()
    }
}

/// Reusable IDFT plan and window for one waveform configuration.
pub struct CirProcessor {
    fft: Arc<dyn Fft<f64>>,
    window: Vec<f64>,
    wsum: f64,
    bins: Vec<usize>,
    len: usize,
    oversampling: usize,
    delay_resolution: f64,
    scratch: Vec<Complex64>,
}

impl CirProcessor {
    pub fn new(wf: &WaveformConfig, oversampling: usize) -> Result<Self, SimError> {
        wf.validate()?;
        if oversampling == 0 {
            return Err(SimError::InvalidWaveform("oversampling must be at least 1".into()));
        }
        let len = wf.fft_size * oversampling;
        let n_sc = wf.num_subcarriers();
        let fft = FftPlanner::new().plan_fft_inverse(len);
        let scratch = vec![Complex64::new(0.0, 0.0); fft.get_inplace_scratch_len()];
        let window = blackman_harris(n_sc);
        Ok(Self {
            wsum: window.iter().sum(),
            window,
            bins: (0..n_sc).map(|i| wf.subcarrier_index(i).rem_euclid(len as i64) as usize).collect(),
            len,
            oversampling,
            delay_resolution: 1.0 / (wf.fft_size as f64 * wf.subcarrier_spacing * oversampling as f64),
            fft,
            scratch,
        })
    }

    pub fn process(&mut self, cfr: &[Complex64]) -> Result<CirEstimate, SimError> {
        if cfr.len() != self.window.len() {
            return Err(SimError::GridMismatch { expected: self.window.len(), got: cfr.len() });
        }
        let mut taps = vec![Complex64::new(0.0, 0.0); self.len];
        for ((&h, &w), &bin) in cfr.iter().zip(self.window.iter()).zip(&self.bins) {
            taps[bin] = h * w;
        }
        self.fft.process_with_scratch(&mut taps, &mut self.scratch);
        for t in &mut taps {
            *t /= self.wsum;
        }
        Ok(CirEstimate { taps, delay_resolution: self.delay_resolution, oversampling: self.oversampling })
    }
}

/// One-shot convenience over [`CirProcessor`].
pub fn cir_from_cfr(cfr: &[Complex64], wf: &WaveformConfig, oversampling: usize) -> Result<CirEstimate, SimError> {
    CirProcessor::new(wf, oversampling)?.process(cfr)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathPeak {
    pub delay: f64,
    pub amplitude: f64,
    pub phase: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExtractedPaths {
    pub los: PathPeak,
    pub target: PathPeak,
}

/// Offset of the vertex of the parabola through three samples, in bins.
fn parabolic_offset(left: f64, centre: f64, right: f64) -> f64 {
    let denom = left - 2.0 * centre + right;
    if denom.abs() < f64::MIN_POSITIVE {
        0.0
    } else {
        (0.5 * (left - right) / denom).clamp(-0.5, 0.5)
    }
}

fn median(mut v: Vec<f64>) -> f64 {
    let m = v.len() / 2;
    let upper = *v.select_nth_unstable_by(m, f64::total_cmp).1;
    if v.len().is_multiple_of(2) {
        let lower = v[..m].iter().copied().fold(f64::NEG_INFINITY, f64::max);
        0.5 * (lower + upper)
    } else {
        upper
    }
}

/// Gauss-Newton passes of the joint two-path fit.
const MAX_REFINE_ITERATIONS: usize = 30;

/// Finds the LoS and target paths of one receiver's slot.
///
/// The strongest CIR peak is fitted on the pilots and cancelled, the
/// second path is the strongest peak of what remains, and both delays
/// are then refined jointly by least squares on the raw pilot estimates
/// with the complex gains solved exactly at every step. Closely spaced
/// paths thus keep their phases free of each other's leakage.
pub struct PathExtractor {
    processor: CirProcessor,
    subcarrier_spacing: f64,
    /// One delay cell, `1/bandwidth`, s.
    cell: f64,
    /// CIR period, `1/subcarrier_spacing`, s.
    period: f64,
    num_subcarriers: usize,
}

impl PathExtractor {
    pub fn new(wf: &WaveformConfig, oversampling: usize) -> Result<Self, SimError> {
        Ok(Self {
            processor: CirProcessor::new(wf, oversampling)?,
            subcarrier_spacing: wf.subcarrier_spacing,
            cell: 1.0 / wf.occupied_bandwidth(),
            period: 1.0 / wf.subcarrier_spacing,
            num_subcarriers: wf.num_subcarriers(),
        })
    }

    pub fn extract(&mut self, received: &[Complex64], pilots: &PilotGrid) -> Result<ExtractedPaths, SimError> {
        let (known, h) = pilot_estimates(received, pilots)?;
        let step = known.get(1).map_or(0, |k| k - known[0]);
        if known.len() < 4 || known.windows(2).any(|w| w[1] - w[0] != step) {
            return Err(SimError::InvalidWaveform("path extraction needs at least four evenly spaced pilots".into()));
        }
        let first = (known[0] as f64 - (self.num_subcarriers / 2) as f64) * self.subcarrier_spacing;
        let spacing = step as f64 * self.subcarrier_spacing;
        let cir = self.processor.process(&interpolate(&known, &h, self.num_subcarriers))?;
        let power: Vec<f64> = cir.taps.iter().map(|t| t.norm_sqr()).collect();
        let strongest = power.iter().copied().fold(0.0, f64::max);
        if !(strongest > 0.0) || !strongest.is_finite() {
            return Err(SimError::DroppedFrame);
        }
        let b1 = (0..power.len()).max_by(|&a, &b| power[a].total_cmp(&power[b])).expect("non-empty CIR");
        let tau1 = refine_bin(&power, b1) * cir.delay_resolution;

        // Cancel the strongest path and look for the next one.
        let mut s1 = vec![Complex64::new(0.0, 0.0); h.len()];
        steering(first, spacing, tau1, &mut s1);
        let a1 = s1.iter().zip(&h).map(|(s, h)| s.conj() * h).sum::<Complex64>() / h.len() as f64;
        let residual: Vec<Complex64> = h.iter().zip(&s1).map(|(h, s)| h - a1 * s).collect();
        let rest = self.processor.process(&interpolate(&known, &residual, self.num_subcarriers))?;
        let rest_power: Vec<f64> = rest.taps.iter().map(|t| t.norm_sqr()).collect();
        let threshold = (median(rest_power.clone()) * FLOOR_MARGIN).max(strongest * DYNAMIC_RANGE);
        let n = rest_power.len();
        let guard = (1.5 * self.cell / cir.delay_resolution).ceil() as usize;
        let b2 = (0..n)
            .filter(|&i| {
                let p = rest_power[i];
                let d = i.abs_diff(b1).min(n - i.abs_diff(b1));
                d > guard && p > threshold && p > rest_power[(i + n - 1) % n] && p >= rest_power[(i + 1) % n]
            })
            .max_by(|&a, &b| rest_power[a].total_cmp(&rest_power[b]))
            .ok_or(SimError::DroppedFrame)?;
        let tau2 = refine_bin(&rest_power, b2) * cir.delay_resolution;

        let start = [self.signed_delay(tau1), self.signed_delay(tau2)];
        let fit = fit_two_paths(&h, first, spacing, start, self.cell).ok_or(SimError::DroppedFrame)?;
        let mut paths = [0, 1].map(|p| PathPeak {
            delay: fit.delays[p],
            amplitude: fit.gains[p].norm(),
            phase: wrap(fit.gains[p].arg()),
        });
        paths.sort_by(|a, b| a.delay.total_cmp(&b.delay));
        Ok(ExtractedPaths { los: paths[0], target: paths[1] })
    }

    /// Maps a CIR delay onto `(−period/2, period/2]`.
    fn signed_delay(&self, tau: f64) -> f64 {
        if tau > self.period / 2.0 {
            tau - self.period
        } else {
            tau
        }
    }
}

/// Fractional bin of the peak at `bin`, by a parabola through magnitudes.
fn refine_bin(power: &[f64], bin: usize) -> f64 {
    let n = power.len();
    let mag = |i: usize| power[i].sqrt();
    bin as f64 + parabolic_offset(mag((bin + n - 1) % n), mag(bin), mag((bin + 1) % n))
}

/// `exp(−j2π f τ)` over evenly spaced frequencies starting at `first`.
fn steering(first: f64, spacing: f64, tau: f64, out: &mut [Complex64]) {
    let mut p = Complex64::from_polar(1.0, -TAU * first * tau);
    let rotate = Complex64::from_polar(1.0, -TAU * spacing * tau);
    for o in out.iter_mut() {
        *o = p;
        p *= rotate;
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct TwoPathFit {
    delays: [f64; 2],
    gains: [Complex64; 2],
    cost: f64,
}

/// Gains minimizing `‖h − a₁s₁ − a₂s₂‖²` for fixed steering vectors.
fn two_path_gains(h: &[Complex64], s1: &[Complex64], s2: &[Complex64]) -> Option<[Complex64; 2]> {
    let n = h.len() as f64;
    let g12: Complex64 = s1.iter().zip(s2).map(|(a, b)| a.conj() * b).sum();
    let det = n * n - g12.norm_sqr();
    if !(det > 1e-9 * n * n) {
        return None;
    }
    let b1: Complex64 = s1.iter().zip(h).map(|(s, h)| s.conj() * h).sum();
    let b2: Complex64 = s2.iter().zip(h).map(|(s, h)| s.conj() * h).sum();
    Some([(b1 * n - g12 * b2) / det, (b2 * n - g12.conj() * b1) / det])
}

/// Joint delay refinement by Gauss-Newton on the variable-projection
/// cost. Falls back to the starting delays when the refinement wanders
/// more than two cells or merges the paths.
fn fit_two_paths(h: &[Complex64], first: f64, spacing: f64, start: [f64; 2], cell: f64) -> Option<TwoPathFit> {
    let m = h.len();
    let zero = Complex64::new(0.0, 0.0);
    let (mut s1, mut s2) = (vec![zero; m], vec![zero; m]);
    let evaluate = |delays: [f64; 2], s1: &mut [Complex64], s2: &mut [Complex64]| -> Option<TwoPathFit> {
        steering(first, spacing, delays[0], s1);
        steering(first, spacing, delays[1], s2);
        let gains = two_path_gains(h, s1, s2)?;
        let cost = h.iter().zip(s1.iter().zip(s2.iter())).map(|(h, (a, b))| (h - gains[0] * a - gains[1] * b).norm_sqr()).sum();
        Some(TwoPathFit { delays, gains, cost })
    };
    let initial = evaluate(start, &mut s1, &mut s2)?;
    let mut best = initial;
    let freq = |i: usize| first + i as f64 * spacing;
    for _ in 0..MAX_REFINE_ITERATIONS {
        steering(first, spacing, best.delays[0], &mut s1);
        steering(first, spacing, best.delays[1], &mut s2);
        // ∂r/∂τ_p = j2πf·a_p·s_p, projected off the span of the steering vectors.
        let mut cols = [vec![zero; m], vec![zero; m]];
        for (p, (col, s)) in cols.iter_mut().zip([&s1, &s2]).enumerate() {
            for (i, c) in col.iter_mut().enumerate() {
                *c = Complex64::new(0.0, TAU * freq(i)) * best.gains[p] * s[i];
            }
            let g = two_path_gains(col, &s1, &s2)?;
            for (i, c) in col.iter_mut().enumerate() {
                *c -= g[0] * s1[i] + g[1] * s2[i];
            }
        }
        let r: Vec<Complex64> = (0..m).map(|i| h[i] - best.gains[0] * s1[i] - best.gains[1] * s2[i]).collect();
        let dot = |a: &[Complex64], b: &[Complex64]| a.iter().zip(b).map(|(x, y)| (x.conj() * y).re).sum::<f64>();
        let (a11, a12, a22) = (dot(&cols[0], &cols[0]), dot(&cols[0], &cols[1]), dot(&cols[1], &cols[1]));
        let (g1, g2) = (dot(&cols[0], &r), dot(&cols[1], &r));
        let det = a11 * a22 - a12 * a12;
        if !(det > 0.0) {
            break;
        }
        let step = [-(a22 * g1 - a12 * g2) / det, -(a11 * g2 - a12 * g1) / det];
        let mut scale = 1.0;
        let mut improved = false;
        for _ in 0..8 {
            let trial = [best.delays[0] + scale * step[0], best.delays[1] + scale * step[1]];
            if let Some(t) = evaluate(trial, &mut s1, &mut s2) {
                if t.cost <= best.cost {
                    best = t;
                    improved = true;
                    break;
                }
            }
            scale *= 0.5;
        }
        if !improved || scale * step[0].abs().max(step[1].abs()) < 1e-9 * cell {
            break;
        }
    }
    let wandered = (0..2).any(|p| (best.delays[p] - start[p]).abs() > 2.0 * cell);
    let merged = (best.delays[0] - best.delays[1]).abs() < 0.5 * cell;
    Some(if wandered || merged { initial } else { best })
}

/// Phase of a pure delay at subcarrier offset `df`, useful for oracles.
pub fn delay_phase(df: f64, delay: f64) -> f64 {
    -2.0 * PI * df * delay
}

#[cfg(test)]
mod tests {
    use super::*;

    fn single_path(wf: &WaveformConfig, gain: Complex64, tau: f64) -> Vec<Complex64> {
        (0..wf.num_subcarriers())
            .map(|i| gain * Complex64::from_polar(1.0, delay_phase(wf.subcarrier_offset(i), tau)))
            .collect()
    }

    fn comb(wf: &WaveformConfig) -> PilotGrid {
        let symbols = (0..wf.num_subcarriers())
            .map(|i| if wf.is_pilot(i) { Complex64::new(0.0, 1.0) } else { Complex64::new(0.0, 0.0) })
            .collect();
        PilotGrid { symbols, comb_step: wf.pilot_comb_step }
    }

    #[test]
    fn ls_flat_channel() {
        let wf = WaveformConfig::default();
        let pilots = comb(&wf);
        let c = Complex64::new(0.3, -0.7);
        let y: Vec<_> = pilots.symbols.iter().map(|s| s * c).collect();
        for h in ls_estimate(&y, &pilots).unwrap() {
            assert!((h - c).norm() < 1e-15);
        }
    }

    #[test]
    fn ls_interpolation_error_is_small() {
        let wf = WaveformConfig::default();
        let pilots = comb(&wf);
        let truth = single_path(&wf, Complex64::new(1.0, 0.0), 100e-9);
        let y: Vec<_> = truth.iter().zip(&pilots.symbols).map(|(h, s)| h * s).collect();
        let est = ls_estimate(&y, &pilots).unwrap();
        let last_pilot = wf.pilot_positions().last().unwrap();
        let worst = est[..=last_pilot].iter().zip(&truth).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        assert!(worst < 1e-2, "{worst}");
        // Past the last pilot the value is held, so the error is one
        // subcarrier's worth of phase ramp.
        let step = TAU * wf.subcarrier_spacing * 100e-9;
        for i in last_pilot + 1..est.len() {
            assert!((est[i] - truth[i]).norm() <= step * (i - last_pilot) as f64 + 1e-12);
        }
    }

    #[test]
    fn ls_comb_one_is_exact_division() {
        let wf = WaveformConfig { pilot_comb_step: 1, ..WaveformConfig::default() };
        let pilots = comb(&wf);
        let truth = single_path(&wf, Complex64::new(0.5, 0.5), 230e-9);
        let y: Vec<_> = truth.iter().zip(&pilots.symbols).map(|(h, s)| h * s).collect();
        assert_eq!(ls_estimate(&y, &pilots).unwrap().len(), truth.len());
        for (a, b) in ls_estimate(&y, &pilots).unwrap().iter().zip(&truth) {
            assert!((a - b).norm() < 1e-15);
        }
    }

    #[test]
    fn peak_bin_mapping() {
        let wf = WaveformConfig::default();
        let cir = cir_from_cfr(&single_path(&wf, Complex64::new(1.0, 0.0), 100e-9), &wf, 8).unwrap();
        assert_eq!(cir.taps.len(), 8192);
        assert!((cir.delay_resolution - 1.0 / (1024.0 * 120e3 * 8.0)).abs() < 1e-24);
        let argmax = (0..cir.taps.len()).max_by(|&a, &b| cir.power(a).total_cmp(&cir.power(b))).unwrap();
        assert_eq!(argmax, 98);

        let cir0 = cir_from_cfr(&single_path(&wf, Complex64::new(1.0, 0.0), 0.0), &wf, 8).unwrap();
        let argmax0 = (0..cir0.taps.len()).max_by(|&a, &b| cir0.power(a).total_cmp(&cir0.power(b))).unwrap();
        assert_eq!(argmax0, 0);
    }

    fn received(wf: &WaveformConfig, paths: &[(Complex64, f64)]) -> (Vec<Complex64>, PilotGrid) {
        let pilots = comb(wf);
        let mut h = vec![Complex64::new(0.0, 0.0); wf.num_subcarriers()];
        for &(g, tau) in paths {
            for (x, p) in h.iter_mut().zip(single_path(wf, g, tau)) {
                *x += p;
            }
        }
        let y = h.iter().zip(&pilots.symbols).map(|(h, s)| h * s).collect();
        (y, pilots)
    }

    fn extract(wf: &WaveformConfig, paths: &[(Complex64, f64)]) -> Result<ExtractedPaths, SimError> {
        let (y, pilots) = received(wf, paths);
        PathExtractor::new(wf, 8).unwrap().extract(&y, &pilots)
    }

    #[test]
    fn two_paths_resolved_with_phases() {
        let wf = WaveformConfig::default();
        let (t_los, t_tgt) = (26.9e-9 + 40e-9, 96.5e-9 + 40e-9);
        let paths = extract(&wf, &[(Complex64::from_polar(1.0, 0.4), t_los), (Complex64::from_polar(0.08, -2.9), t_tgt)]).unwrap();
        assert!((paths.los.delay - t_los).abs() < 1e-15);
        assert!((paths.target.delay - t_tgt).abs() < 1e-15);
        assert!(wrap(paths.los.phase - 0.4).abs() < 1e-9);
        assert!(wrap(paths.target.phase + 2.9).abs() < 1e-9);
        assert!((paths.target.amplitude - 0.08).abs() < 1e-9);
    }

    #[test]
    fn overlapping_main_lobes_are_separated() {
        // Target 15 dB down and under three delay cells behind the LoS.
        let wf = WaveformConfig::default();
        let cell = 1.0 / wf.occupied_bandwidth();
        for (gap, phase) in [(2.8, 1.0), (2.0, -2.0), (4.5, 3.0)] {
            let t_los = 95.45e-9;
            let t_tgt = t_los + gap * cell;
            let g_tgt = Complex64::from_polar(0.18, phase);
            let paths = extract(&wf, &[(Complex64::from_polar(1.0, -0.3), t_los), (g_tgt, t_tgt)]).unwrap();
            assert!((paths.target.delay - t_tgt).abs() < 1e-14, "gap {gap}: {}", paths.target.delay);
            assert!(wrap(paths.target.phase - phase).abs() < 1e-9, "gap {gap}: {}", paths.target.phase);
            assert!(wrap(paths.los.phase + 0.3).abs() < 1e-9, "gap {gap}");
        }
    }

    #[test]
    fn stronger_later_path_is_still_the_target() {
        let wf = WaveformConfig::default();
        let paths = extract(&wf, &[(Complex64::from_polar(0.2, 0.0), 60e-9), (Complex64::from_polar(1.0, 1.0), 150e-9)]).unwrap();
        assert!((paths.los.delay - 60e-9).abs() < 1e-15 && (paths.target.amplitude - 1.0).abs() < 1e-9);
    }

    #[test]
    fn missing_target_drops_frame() {
        let wf = WaveformConfig::default();
        let r = extract(&wf, &[(Complex64::new(1.0, 0.0), 50e-9)]);
        assert!(matches!(r, Err(SimError::DroppedFrame)), "{r:?}");
    }

    #[test]
    fn two_path_gains_solve_exactly() {
        let wf = WaveformConfig::default();
        let (y, pilots) = received(&wf, &[(Complex64::new(0.5, 0.1), 30e-9), (Complex64::new(-0.2, 0.3), 80e-9)]);
        let (known, h) = pilot_estimates(&y, &pilots).unwrap();
        let first = wf.subcarrier_offset(known[0]);
        let spacing = wf.subcarrier_spacing * (known[1] - known[0]) as f64;
        let mut s1 = vec![Complex64::new(0.0, 0.0); h.len()];
        let mut s2 = s1.clone();
        steering(first, spacing, 30e-9, &mut s1);
        steering(first, spacing, 80e-9, &mut s2);
        let g = two_path_gains(&h, &s1, &s2).unwrap();
        assert!((g[0] - Complex64::new(0.5, 0.1)).norm() < 1e-12 && (g[1] - Complex64::new(-0.2, 0.3)).norm() < 1e-12);
        assert!(two_path_gains(&h, &s1, &s1).is_none());
    }

    #[test]
    fn median_by_selection() {
        assert_eq!(median(vec![3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(vec![4.0, 1.0, 3.0, 2.0]), 2.5);
    }

    #[test]
    fn parabola_vertex() {
        // y = -(x - 0.2)² sampled at -1, 0, 1.
        let f = |x: f64| -(x - 0.2) * (x - 0.2);
        assert!((parabolic_offset(f(-1.0), f(0.0), f(1.0)) - 0.2).abs() < 1e-12);
        assert_eq!(parabolic_offset(1.0, 1.0, 1.0), 0.0);
    }

    #[test]
    fn window_is_symmetric_and_peaks_in_centre() {
        let w = blackman_harris(9);
        for i in 0..9 {
            assert!((w[i] - w[8 - i]).abs() < 1e-15);
        }
        assert!((w[4] - 1.0).abs() < 1e-12);
        assert!(w[0] < 1e-4);
    }
}
