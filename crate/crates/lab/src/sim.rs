//! End-to-end observation synthesis: scene → pilots → channel → CIR → frame.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use multidop_core::geometry::{direction_angle, doppler_tgt};
use multidop_core::math::rad;
use multidop_core::{DopplerConvention, ObservationFrame, PathRecord, Scene, SignedAngle};

use crate::channel::{apply_channel, path_gains, ChannelContext, ImpairmentState, LinkBudget};
use crate::cir::{PathExtractor, DEFAULT_OVERSAMPLING};
use crate::waveform::{generate_pilot_grid, WaveformConfig};
use crate::SimError;

const STREAM_TIMING: u64 = 1;
const STREAM_RCS: u64 = 2;
const STREAM_AOA: u64 = 3;
const STREAM_AWGN: u64 = 4;
const STREAM_OFFSETS: u64 = 5;

fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

/// How impairments and noise are drawn for a run.
#[derive(Debug, Clone, PartialEq)]
pub struct ImpairmentPolicy {
    pub aoa_noise_deg: f64,
    /// CFO drawn uniformly from `±cfo_max_hz`.
    pub cfo_max_hz: f64,
    /// TO drawn uniformly from `[0, to_max_s]`.
    pub to_max_s: f64,
    pub awgn: bool,
    /// Use this RCS (m²) instead of a lognormal draw.
    pub fixed_rcs: Option<f64>,
}

impl Default for ImpairmentPolicy {
    fn default() -> Self {
        Self { aoa_noise_deg: 2.0, cfo_max_hz: 2800.0, to_max_s: 100e-9, awgn: true, fixed_rcs: None }
    }
}

impl ImpairmentPolicy {
    /// AoA noise only; no clock offsets, no AWGN, fixed RCS.
    pub fn noise_free() -> Self {
        Self { aoa_noise_deg: 0.0, cfo_max_hz: 0.0, to_max_s: 0.0, awgn: false, fixed_rcs: Some(50.0) }
    }
}

#[derive(Debug, Clone)]
pub struct SimSetup {
    pub waveform: WaveformConfig,
    pub budget: LinkBudget,
    pub policy: ImpairmentPolicy,
    pub convention: DopplerConvention,
    pub num_steps: u64,
    /// Zero-based receiver at which the truth Doppler is recorded.
    pub reference_rx: usize,
    pub oversampling: usize,
}

impl SimSetup {
    pub fn new(waveform: WaveformConfig) -> Self {
        Self {
            waveform,
            budget: LinkBudget::default(),
            policy: ImpairmentPolicy::default(),
            convention: DopplerConvention::default(),
            num_steps: 5000,
            reference_rx: 0,
            oversampling: DEFAULT_OVERSAMPLING,
        }
    }
}

/// Seeds for one run. CFO/PO come from their own seed so they can be
/// varied while every other draw stays fixed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RunSeeds {
    pub seed: u64,
    pub offset_seed: u64,
}

impl RunSeeds {
    pub fn new(seed: u64) -> Self {
        Self { seed, offset_seed: seed }
    }
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    /// One entry per slot; `None` marks a dropped frame.
    pub frames: Vec<Option<ObservationFrame>>,
    /// True target Doppler at the reference receiver, per slot.
    pub truth: Vec<f64>,
    pub dropped: usize,
    pub rcs: f64,
    pub impairments: ImpairmentState,
}

/// True LoS and target AoAs at each receiver plus i.i.d. Gaussian noise.
pub fn measure_aoa<R: Rng + ?Sized>(
    scene: &Scene,
    sigma: f64,
    rng: &mut R,
) -> Result<Vec<(SignedAngle, SignedAngle)>, SimError> {
    if !(sigma >= 0.0) {
        return Err(SimError::InvalidRun("AoA noise must be non-negative".into()));
    }
    let noise = Normal::new(0.0, sigma).map_err(|e| SimError::InvalidRun(e.to_string()))?;
    let draw = |rng: &mut R| if sigma > 0.0 { noise.sample(rng) } else { 0.0 };
    scene
        .rx_pos
        .iter()
        .map(|&rx| {
            let los = direction_angle(rx, scene.tx_pos)?;
            let tgt = direction_angle(rx, scene.tgt_pos)?;
            let (e_los, e_tgt) = (draw(rng), draw(rng));
            Ok((SignedAngle::new(los.radians() + e_los), SignedAngle::new(tgt.radians() + e_tgt)))
        })
        .collect()
}

/// Bistatic path length with the target at `tgt` and everything else
/// taken from `scene`.
fn target_length_with(scene: &Scene, tgt: multidop_core::Vec2D, n: usize) -> f64 {
    scene.tx_pos.distance(tgt) + tgt.distance(scene.rx_pos[n])
}

/// Simulates `setup.num_steps` slots starting from `scene0`.
pub fn simulate_run(scene0: &Scene, setup: &SimSetup, seeds: RunSeeds) -> Result<RunOutput, SimError> {
    scene0.validate()?;
    setup.waveform.validate()?;
    setup.budget.validate()?;
    let k_total = setup.num_steps;
    if k_total < 2 {
        return Err(SimError::InvalidRun("at least two steps are required".into()));
    }
    let n_rx = scene0.num_rx();
    if setup.reference_rx >= n_rx {
        return Err(SimError::InvalidRun(format!("reference receiver {} out of range", setup.reference_rx + 1)));
    }

    let wf = &setup.waveform;
    let lambda = wf.wavelength();
    let policy = &setup.policy;

    let mut offset_rng = stream(seeds.offset_seed, STREAM_OFFSETS);
    let mut timing_rng = stream(seeds.seed, STREAM_TIMING);
    let mut rcs_rng = stream(seeds.seed, STREAM_RCS);
    let mut aoa_rng = stream(seeds.seed, STREAM_AOA);
    let mut noise_rng = stream(seeds.seed, STREAM_AWGN);

    let mut impairments = ImpairmentState::draw(n_rx, policy.cfo_max_hz, policy.to_max_s, &mut offset_rng, &mut timing_rng);
    impairments.aoa_noise_std = rad(policy.aoa_noise_deg);
    impairments.rng_seed = seeds.seed;
    let rcs = policy.fixed_rcs.unwrap_or_else(|| setup.budget.draw_rcs(&mut rcs_rng));
    let noise_variance = policy.awgn.then(|| setup.budget.noise_variance(wf.subcarrier_spacing));

    let mut extractor = PathExtractor::new(wf, setup.oversampling)?;
    // Under the no-factor convention the target's own motion moves the
    // target-path phase at half the geometric rate.
    let excess_scale = setup.convention.target_factor() / 2.0 - 1.0;
    let mut excess = vec![0.0; n_rx];
    let mut prev_tgt = scene0.tgt_pos;

    let mut frames = Vec::with_capacity(k_total as usize);
    let mut truth = Vec::with_capacity(k_total as usize);
    let mut dropped = 0usize;
    for k in 0..k_total {
        let scene = scene0.advance(k);
        if excess_scale != 0.0 && k > 0 {
            for (n, e) in excess.iter_mut().enumerate() {
                *e += excess_scale
                    * (target_length_with(&scene, scene.tgt_pos, n) - target_length_with(&scene, prev_tgt, n));
            }
        }
        prev_tgt = scene.tgt_pos;
        truth.push(doppler_tgt(&scene, setup.reference_rx, lambda, setup.convention)?);

        let gains = path_gains(&scene, &setup.budget, lambda, rcs)?;
        let grid = generate_pilot_grid(wf, seeds.seed, k);
        let ctx = ChannelContext {
            waveform: wf,
            impairments: &impairments,
            gains: &gains,
            target_phase_excess: &excess,
            noise_variance,
        };
        let received = apply_channel(&grid, &scene, &ctx, &mut noise_rng)?;
        let aoas = measure_aoa(&scene, impairments.aoa_noise_std, &mut aoa_rng)?;

        let mut records = Vec::with_capacity(n_rx);
        for (y, (aoa_los, aoa_tgt)) in received.iter().zip(aoas) {
            match extractor.extract(y, &grid) {
                Ok(p) => records.push(PathRecord {
                    phi_los: p.los.phase,
                    phi_tgt: p.target.phase,
                    aoa_los,
                    aoa_tgt,
                    amp_los: p.los.amplitude,
                    amp_tgt: p.target.amplitude,
                }),
                Err(SimError::DroppedFrame) => break,
                Err(e) => return Err(e),
            }
        }
        if records.len() == n_rx {
            frames.push(Some(ObservationFrame { k, records }));
        } else {
            dropped += 1;
            frames.push(None);
        }
    }
    if 2 * dropped > k_total as usize {
        return Err(SimError::TooManyDropped { dropped, total: k_total as usize });
    }
    Ok(RunOutput { frames, truth, dropped, rcs, impairments })
}

#[cfg(test)]
mod tests {
    use super::*;
    use multidop_core::math::wrap;
    use multidop_core::{Vec2D, SPEED_OF_LIGHT};

    fn reference_scene() -> Scene {
        Scene::new(
            Vec2D::new(8.0, 0.0),
            Vec2D::new(12.0, -12.0),
            vec![Vec2D::new(15.0, 4.0), Vec2D::new(15.0, 2.0), Vec2D::new(15.0, 0.0), Vec2D::new(15.0, -2.0)],
            Vec2D::from_polar(4.0, rad(225.0)),
            Vec2D::from_polar(4.0, rad(315.0)),
            125e-6,
        )
        .unwrap()
    }

    fn setup(steps: u64, policy: ImpairmentPolicy) -> SimSetup {
        SimSetup { num_steps: steps, policy, ..SimSetup::new(WaveformConfig::default()) }
    }

    #[test]
    fn aoa_noise_statistics() {
        let s = reference_scene();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let sigma = rad(2.0);
        let draws = 25_000;
        let mut errs: Vec<Vec<f64>> = (0..8).map(|_| Vec::with_capacity(draws)).collect();
        for _ in 0..draws {
            let m = measure_aoa(&s, sigma, &mut rng).unwrap();
            for (n, (l, t)) in m.iter().enumerate() {
                errs[2 * n].push(wrap(l.radians() - direction_angle(s.rx_pos[n], s.tx_pos).unwrap().radians()));
                errs[2 * n + 1].push(wrap(t.radians() - direction_angle(s.rx_pos[n], s.tgt_pos).unwrap().radians()));
            }
        }
        let all: Vec<f64> = errs.iter().flatten().copied().collect();
        let std = (all.iter().map(|e| e * e).sum::<f64>() / all.len() as f64).sqrt();
        assert!((std / sigma - 1.0).abs() < 0.02, "{}", std / sigma);
        for a in 0..8 {
            for b in a + 1..8 {
                let cov: f64 = errs[a].iter().zip(&errs[b]).map(|(x, y)| x * y).sum::<f64>() / draws as f64;
                assert!((cov / (sigma * sigma)).abs() < 0.03);
            }
        }
        let exact = measure_aoa(&s, 0.0, &mut rng).unwrap();
        assert_eq!(exact[2].0, direction_angle(s.rx_pos[2], s.tx_pos).unwrap());
    }

    #[test]
    fn noise_free_phases_follow_geometry() {
        let s = reference_scene();
        let out = simulate_run(&s, &setup(2, ImpairmentPolicy::noise_free()), RunSeeds::new(1)).unwrap();
        assert_eq!(out.dropped, 0);
        let lambda = WaveformConfig::default().wavelength();
        for k in 0..2u64 {
            let sc = s.advance(k);
            let frame = out.frames[k as usize].as_ref().unwrap();
            for n in 0..4 {
                let po = out.impairments.po[n];
                let want_los = wrap(po - std::f64::consts::TAU * sc.los_length(n).unwrap() / lambda);
                let want_tgt = wrap(po - std::f64::consts::TAU * sc.target_path_length(n).unwrap() / lambda);
                assert!(wrap(frame.records[n].phi_los - want_los).abs() < 1e-2);
                assert!(wrap(frame.records[n].phi_tgt - want_tgt).abs() < 1e-2);
            }
        }
        let d = (s.los_length(0).unwrap() / SPEED_OF_LIGHT, s.target_path_length(0).unwrap() / SPEED_OF_LIGHT);
        assert!((d.1 - d.0 - 69.6e-9).abs() < 0.5e-9);
    }

    #[test]
    fn los_power_matches_friis() {
        let s = reference_scene();
        let out = simulate_run(&s, &setup(2, ImpairmentPolicy::noise_free()), RunSeeds::new(1)).unwrap();
        let wf = WaveformConfig::default();
        let g = path_gains(&s, &LinkBudget::default(), wf.wavelength(), 50.0).unwrap();
        let amp = out.frames[0].as_ref().unwrap().records[0].amp_los;
        let db = 20.0 * (amp / g[0].los).log10();
        assert!(db.abs() < 0.1, "{db}");
    }

    #[test]
    fn offsets_cancel_in_spatial_difference() {
        let s = reference_scene();
        let policy = ImpairmentPolicy { aoa_noise_deg: 0.0, awgn: false, ..ImpairmentPolicy::default() };
        let a = simulate_run(&s, &setup(3, policy.clone()), RunSeeds { seed: 5, offset_seed: 1 }).unwrap();
        let b = simulate_run(&s, &setup(3, policy), RunSeeds { seed: 5, offset_seed: 2 }).unwrap();
        assert_ne!(a.impairments.cfo, b.impairments.cfo);
        for (fa, fb) in a.frames.iter().zip(&b.frames) {
            for (ra, rb) in fa.as_ref().unwrap().records.iter().zip(&fb.as_ref().unwrap().records) {
                let da = wrap(ra.phi_tgt - ra.phi_los);
                let db = wrap(rb.phi_tgt - rb.phi_los);
                assert!(wrap(da - db).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn deterministic_in_seed() {
        let s = reference_scene();
        let a = simulate_run(&s, &setup(4, ImpairmentPolicy::default()), RunSeeds::new(9)).unwrap();
        let b = simulate_run(&s, &setup(4, ImpairmentPolicy::default()), RunSeeds::new(9)).unwrap();
        assert_eq!(a.frames, b.frames);
        assert_eq!(a.rcs, b.rcs);
    }

    #[test]
    fn reference_scenario_drops_nothing() {
        let s = reference_scene();
        let out = simulate_run(&s, &setup(200, ImpairmentPolicy::default()), RunSeeds::new(3)).unwrap();
        assert_eq!(out.dropped, 0);
    }

    #[test]
    fn invisible_target_aborts() {
        let s = reference_scene();
        let policy = ImpairmentPolicy { fixed_rcs: Some(0.0), ..ImpairmentPolicy::noise_free() };
        assert!(matches!(
            simulate_run(&s, &setup(4, policy), RunSeeds::new(1)),
            Err(SimError::TooManyDropped { dropped: 4, total: 4 })
        ));
    }

    #[test]
    fn no_factor_convention_halves_target_phase_rate() {
        let s = reference_scene();
        let mut st = setup(2, ImpairmentPolicy::noise_free());
        let full = simulate_run(&s, &st, RunSeeds::new(1)).unwrap();
        st.convention = DopplerConvention::NoBistaticFactor;
        let half = simulate_run(&s, &st, RunSeeds::new(1)).unwrap();
        assert!((half.truth[0] - full.truth[0] / 2.0).abs() < 1e-9);
        let inc = |o: &RunOutput| {
            let (a, b) = (o.frames[0].as_ref().unwrap(), o.frames[1].as_ref().unwrap());
            wrap(wrap(b.records[0].phi_tgt - b.records[0].phi_los) - wrap(a.records[0].phi_tgt - a.records[0].phi_los))
        };
        let t = std::f64::consts::TAU * 125e-6;
        // The difference between conventions is exactly the halved target term.
        assert!(((inc(&full) - inc(&half)) / t - full.truth[0] / 2.0).abs() < 2.0);
    }
}
