//! Target Doppler estimation from per-receiver path phases and AoAs.
//!
//! The pipeline per slot `k`:
//!
//! 1. Spatial differencing: `Δφ_n = wrap(φ_tgt,n − φ_LoS,n)` cancels each
//!    receiver's CFO and phase offset, which are common to both paths.
//! 2. Temporal differencing: `Δφ'_n[k] = wrap(Δφ_n[k] − Δφ_n[k−1])` drops the
//!    static path-length phase and leaves `2πT` times the net Doppler.
//! 3. Geometric reduction: TX and target are localized from the AoAs, the
//!    bistatic angles `β_n` and `α` follow from the resulting triangles, and
//!    the AoA recursions leave only `(‖v_tx‖, ‖v_tgt‖, ζ_1, γ_1)` unknown.
//! 4. A Levenberg-Marquardt solve per slot, a moving average over the last
//!    `N_w` solutions, and the target Doppler at the reference receiver.

use alloc::collections::VecDeque;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::{PI, TAU};

use crate::frame::ObservationFrame;
use crate::geometry::{
    self, cumulative_aoa_differences, direction_angle, localize, DopplerConvention, GammaRecursionAoa,
    GeometryError, SignedAngle, Vec2D,
};
use crate::math::{atan2, circular_mean, cos, hypot, sin, wrap};
use crate::nlls::{self, LmError, LmOptions, LmResult, LmStatus, Matrix, Residuals};

/// Unknowns of the reduced system.
pub const NUM_UNKNOWNS: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, thiserror::Error)]
pub enum EstimatorError {
    #[error("{got} receivers cannot determine 4 unknowns; at least 4 are required")]
    UnderDetermined { got: usize },
    #[error("frame has {got} receiver records, expected {expected}")]
    ReceiverCount { expected: usize, got: usize },
    #[error("track is empty")]
    EmptyTrack,
    #[error("smoothing window must hold at least one solution")]
    EmptyWindow,
    #[error("maximum speed must be positive")]
    InvalidMaxSpeed,
    #[error("reference receiver {index} is out of range for {count} receivers")]
    ReferenceReceiver { index: usize, count: usize },
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Solver(#[from] LmError),
}

/// Wrapped spatial phase differences `Δφ_n = φ_tgt,n − φ_LoS,n`.
pub fn spatial_difference(frame: &ObservationFrame) -> Vec<f64> {
    frame.records.iter().map(|r| wrap(r.phi_tgt - r.phi_los)).collect()
}

/// Wrapped temporal differences `Δφ'_n = Δφ_n[k] − Δφ_n[k−1]`.
pub fn temporal_difference(current: &[f64], previous: &[f64]) -> Result<Vec<f64>, EstimatorError> {
    if current.len() != previous.len() {
        return Err(EstimatorError::ReceiverCount { expected: previous.len(), got: current.len() });
    }
    Ok(current.iter().zip(previous).map(|(c, p)| wrap(c - p)).collect())
}

/// Both differencing stages for one slot.
#[derive(Debug, Clone, PartialEq)]
pub struct DifferencedPhase {
    pub k: u64,
    pub delta_phi: Vec<f64>,
    pub delta_phi_prime: Vec<f64>,
}

/// Speeds and reference-receiver angles; the estimator's unknowns.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SolutionVector {
    pub v_tx: f64,
    pub v_tgt: f64,
    pub zeta_1: SignedAngle,
    pub gamma_1: SignedAngle,
}

impl SolutionVector {
    // Solver coordinates: velocity components along and across the
    // reference directions, `[v_tx·cos ζ_1, v_tx·sin ζ_1, v_tgt·cos γ_1,
    // v_tgt·sin γ_1]`. The model is linear in them and speeds stay ≥ 0.
    fn to_params(self) -> [f64; NUM_UNKNOWNS] {
        let (z, g) = (self.zeta_1.radians(), self.gamma_1.radians());
        let (v_tx, v_tgt) = (self.v_tx.max(0.0), self.v_tgt.max(0.0));
        [v_tx * cos(z), v_tx * sin(z), v_tgt * cos(g), v_tgt * sin(g)]
    }

    fn from_params(p: &[f64]) -> Self {
        SolutionVector {
            v_tx: hypot(p[0], p[1]),
            v_tgt: hypot(p[2], p[3]),
            zeta_1: SignedAngle::new(atan2(p[1], p[0])),
            gamma_1: SignedAngle::new(atan2(p[3], p[2])),
        }
    }
}

/// Parameters shared by every reduced system of a run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SystemParams {
    pub slot_duration: f64,
    pub wavelength: f64,
    pub convention: DopplerConvention,
    pub gamma_recursion: GammaRecursionAoa,
}

/// The `N` residual equations in the four unknowns for one slot.
#[derive(Debug, Clone, PartialEq)]
pub struct ReducedSystem {
    /// Bistatic angles at the estimated target, radians in `[0, π]`.
    pub beta: Vec<f64>,
    pub alpha: SignedAngle,
    /// `δ^tx_n − δ^tx_1`, accumulated from wrapped consecutive differences.
    pub d_aoa_tx: Vec<f64>,
    pub d_aoa_tgt: Vec<f64>,
    /// Measured `Δφ'_n`, wrapped.
    pub measurements: Vec<f64>,
    pub params: SystemParams,
    pub tx_estimate: Vec2D,
    pub tgt_estimate: Vec2D,
}

impl ReducedSystem {
    /// Localizes TX and target, builds the triangles and stores the AoA
    /// differences that drive the angle recursions.
    pub fn build(
        aoa_tx: &[SignedAngle],
        aoa_tgt: &[SignedAngle],
        rx_positions: &[Vec2D],
        measurements: &[f64],
        params: SystemParams,
    ) -> Result<Self, EstimatorError> {
        let n = rx_positions.len();
        for len in [aoa_tx.len(), aoa_tgt.len(), measurements.len()] {
            if len != n {
                return Err(EstimatorError::ReceiverCount { expected: n, got: len });
            }
        }
        let tx = localize(rx_positions, aoa_tx)?;
        let tgt = localize(rx_positions, aoa_tgt)?;
        let mut beta = Vec::with_capacity(n);
        for &rx in rx_positions {
            beta.push(geometry::bistatic_angle(tx, tgt, rx)?);
        }
        let alpha = direction_angle(tx, tgt)? - direction_angle(tx, rx_positions[0])?;
        Ok(ReducedSystem {
            beta,
            alpha,
            d_aoa_tx: cumulative_aoa_differences(aoa_tx),
            d_aoa_tgt: cumulative_aoa_differences(aoa_tgt),
            measurements: measurements.iter().map(|m| wrap(*m)).collect(),
            params,
            tx_estimate: tx,
            tgt_estimate: tgt,
        })
    }

    pub fn num_equations(&self) -> usize {
        self.measurements.len()
    }

    /// `ζ_n` predicted from `ζ_1`; not re-wrapped.
    pub fn zeta(&self, zeta_1: f64, n: usize) -> f64 {
        zeta_1 - self.d_aoa_tx[n]
    }

    /// `γ_n` predicted from `γ_1`; not re-wrapped.
    pub fn gamma(&self, gamma_1: f64, n: usize) -> f64 {
        let d = match self.params.gamma_recursion {
            GammaRecursionAoa::Target => self.d_aoa_tgt[n],
            GammaRecursionAoa::Tx => self.d_aoa_tx[n],
        };
        gamma_1 - d / 2.0
    }

    /// Model phase increment `2πT·(f_tx,tgt + f_tgt,n − f_tx,los,n)` for receiver `n`.
    pub fn model_increment(&self, x: &SolutionVector, n: usize) -> f64 {
        let p = x.to_params();
        self.model_from_params(&p, n)
    }

    /// Coefficients of the model increment for receiver `n` with respect to
    /// the four solver coordinates.
    fn coefficients(&self, n: usize) -> [f64; NUM_UNKNOWNS] {
        let scale = TAU * self.params.slot_duration / self.params.wavelength;
        let g = self.params.convention.target_factor() * cos(self.beta[n] / 2.0);
        let alpha = self.alpha.radians();
        let d_zeta = self.zeta(0.0, n);
        let d_gamma = self.gamma(0.0, n);
        // cos(ζ_1 − α) − cos(ζ_1 + d) and g·cos(γ_1 + d'), expanded.
        [
            scale * (cos(alpha) - cos(d_zeta)),
            scale * (sin(alpha) + sin(d_zeta)),
            scale * g * cos(d_gamma),
            -scale * g * sin(d_gamma),
        ]
    }

    fn model_from_params(&self, p: &[f64], n: usize) -> f64 {
        self.coefficients(n).iter().zip(p).map(|(c, x)| c * x).sum()
    }

    /// `r_n = Δφ'_n − model_n(x)`.
    pub fn residuals(&self, x: &SolutionVector) -> Vec<f64> {
        let p = x.to_params();
        (0..self.num_equations()).map(|n| self.measurements[n] - self.model_from_params(&p, n)).collect()
    }

    /// Problem view over the solver coordinates (see [`SolutionVector`]).
    pub fn problem(&self, analytic_jacobian: bool) -> SystemProblem<'_> {
        SystemProblem { system: self, analytic: analytic_jacobian }
    }
}

/// [`Residuals`] adapter over a [`ReducedSystem`].
pub struct SystemProblem<'a> {
    system: &'a ReducedSystem,
    analytic: bool,
}

impl Residuals for SystemProblem<'_> {
    fn num_residuals(&self) -> usize {
        self.system.num_equations()
    }

    fn residuals(&self, x: &[f64], out: &mut [f64]) {
        for (n, o) in out.iter_mut().enumerate() {
            *o = self.system.measurements[n] - self.system.model_from_params(x, n);
        }
    }

    fn jacobian(&self, _x: &[f64], jac: &mut Matrix) -> bool {
        if !self.analytic {
            return false;
        }
        for n in 0..self.system.num_equations() {
            for (j, c) in self.system.coefficients(n).iter().enumerate() {
                jac.set(n, j, -c);
            }
        }
        true
    }
}

/// Speeds tried by the cold-start grid, m/s.
/// Upper end of the cold-start speed grid; also the default plausibility
/// bound on solved speeds.
pub const DEFAULT_MAX_SPEED: f64 = 32.0;

pub fn cold_start_speeds() -> impl Iterator<Item = f64> + Clone {
    (0..=16).map(|i| 2.0 * i as f64)
}

/// Angles tried by the cold-start grid, radians.
pub fn cold_start_angles() -> impl Iterator<Item = f64> + Clone {
    (0..16).map(|i| -PI + i as f64 * PI / 8.0)
}

/// Best grid point by residual norm.
pub fn cold_start(sys: &ReducedSystem) -> SolutionVector {
    // The model splits into a TX part and a target part, so each half of
    // the grid is evaluated once and the pairs are combined.
    let n = sys.num_equations();
    let coeffs: Vec<_> = (0..n).map(|i| sys.coefficients(i)).collect();
    let half = |speeds: &mut dyn Iterator<Item = f64>, cols: usize| {
        let mut out = Vec::new();
        for v in speeds {
            for a in cold_start_angles() {
                let (x, y) = (v * cos(a), v * sin(a));
                let contrib: Vec<f64> = coeffs.iter().map(|c| c[cols] * x + c[cols + 1] * y).collect();
                out.push((v, a, contrib));
            }
        }
        out
    };
    let tx_part = half(&mut cold_start_speeds(), 0);
    let tgt_part = half(&mut cold_start_speeds(), 2);

    let mut best = (f64::INFINITY, SolutionVector::default());
    for (v_tx, zeta, a) in &tx_part {
        for (v_tgt, gamma, b) in &tgt_part {
            let mut cost = 0.0;
            for i in 0..n {
                let r = sys.measurements[i] - a[i] - b[i];
                cost += r * r;
            }
            if cost < best.0 {
                best = (
                    cost,
                    SolutionVector {
                        v_tx: *v_tx,
                        v_tgt: *v_tgt,
                        zeta_1: SignedAngle::new(*zeta),
                        gamma_1: SignedAngle::new(*gamma),
                    },
                );
            }
        }
    }
    best.1
}

/// Result of one per-slot solve.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameSolution {
    pub solution: SolutionVector,
    pub lm: LmResult,
}

impl FrameSolution {
    pub fn converged(&self) -> bool {
        self.lm.status == LmStatus::Converged
    }
}

/// Minimizes the reduced system from `warm_start`, or from the best
/// cold-start grid point when there is none.
pub fn solve_frame(
    sys: &ReducedSystem,
    warm_start: Option<SolutionVector>,
    opts: &LmOptions,
    analytic_jacobian: bool,
) -> Result<FrameSolution, EstimatorError> {
    let n = sys.num_equations();
    if n < NUM_UNKNOWNS {
        return Err(EstimatorError::UnderDetermined { got: n });
    }
    let start = warm_start.unwrap_or_else(|| cold_start(sys));
    let lm = nlls::lm_solve(&sys.problem(analytic_jacobian), &start.to_params(), opts)?;
    Ok(FrameSolution { solution: SolutionVector::from_params(&lm.solution), lm })
}

/// Mean of the last `window` solutions: arithmetic for speeds, circular for
/// angles.
pub fn smooth(history: &[SolutionVector], window: usize, mode: SmoothingMode) -> Result<SolutionVector, EstimatorError> {
    if window == 0 {
        return Err(EstimatorError::EmptyWindow);
    }
    let last = *history.last().ok_or(EstimatorError::EmptyTrack)?;
    let tail = &history[history.len().saturating_sub(window)..];
    let count = tail.len() as f64;
    if mode == SmoothingMode::Velocity {
        let mut mean = [0.0; NUM_UNKNOWNS];
        for s in tail {
            for (m, v) in mean.iter_mut().zip(s.to_params()) {
                *m += v / count;
            }
        }
        return Ok(SolutionVector::from_params(&mean));
    }
    let zeta = circular_mean(tail.iter().map(|s| s.zeta_1.radians())).unwrap_or(last.zeta_1.radians());
    let gamma = circular_mean(tail.iter().map(|s| s.gamma_1.radians())).unwrap_or(last.gamma_1.radians());
    Ok(SolutionVector {
        v_tx: tail.iter().map(|s| s.v_tx).sum::<f64>() / count,
        v_tgt: tail.iter().map(|s| s.v_tgt).sum::<f64>() / count,
        zeta_1: SignedAngle::new(zeta),
        gamma_1: SignedAngle::new(gamma),
    })
}

/// How the moving average combines solution vectors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SmoothingMode {
    /// Average the TX and target velocity vectors `(v cos θ, v sin θ)`.
    /// Unbiased when the per-slot solutions scatter widely.
    #[default]
    Velocity,
    /// Arithmetic mean of speeds, circular mean of angles.
    SpeedAngle,
}

/// Target Doppler at the receiver whose `γ` and `β` are given, Hz.
pub fn reconstruct_doppler(x: &SolutionVector, beta_1: f64, wavelength: f64, convention: DopplerConvention) -> f64 {
    geometry::target_doppler(x.v_tgt, x.gamma_1.radians(), beta_1, wavelength, convention)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrackPoint {
    pub k: u64,
    pub f_true: f64,
    pub f_est: f64,
}

/// True and estimated target Doppler per slot.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct DopplerTrack {
    pub points: Vec<TrackPoint>,
}

impl DopplerTrack {
    pub fn push(&mut self, k: u64, f_true: f64, f_est: f64) {
        self.points.push(TrackPoint { k, f_true, f_est });
    }

    /// Mean absolute error over recorded slots, Hz.
    pub fn mae(&self) -> Result<f64, EstimatorError> {
        if self.points.is_empty() {
            return Err(EstimatorError::EmptyTrack);
        }
        let total: f64 = self.points.iter().map(|p| (p.f_true - p.f_est).abs()).sum();
        Ok(total / self.points.len() as f64)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimatorConfig {
    pub wavelength: f64,
    pub slot_duration: f64,
    /// Moving-average window `N_w`.
    pub window: usize,
    pub convention: DopplerConvention,
    pub gamma_recursion: GammaRecursionAoa,
    pub lm: LmOptions,
    pub analytic_jacobian: bool,
    /// Accept fewer than four receivers at construction (the solve still
    /// rejects them).
    pub allow_underdetermined: bool,
    /// Zero-based receiver at which the target Doppler is reconstructed.
    pub reference_rx: usize,
    pub smoothing: SmoothingMode,
    /// Average the reference bistatic angle over the same window as the
    /// solutions; otherwise the current slot's value is used.
    pub smooth_beta: bool,
    /// Solutions with either speed above this (m/s) are treated like a
    /// failed solve. Near-singular slots otherwise inject outliers that
    /// dominate the moving average.
    pub max_speed: f64,
}

impl EstimatorConfig {
    pub fn new(wavelength: f64, slot_duration: f64) -> Self {
        Self {
            wavelength,
            slot_duration,
            window: 500,
            convention: DopplerConvention::default(),
            gamma_recursion: GammaRecursionAoa::default(),
            lm: LmOptions::default(),
            analytic_jacobian: true,
            allow_underdetermined: false,
            reference_rx: 0,
            smoothing: SmoothingMode::default(),
            smooth_beta: true,
            max_speed: DEFAULT_MAX_SPEED,
        }
    }

    fn system_params(&self) -> SystemParams {
        SystemParams {
            slot_duration: self.slot_duration,
            wavelength: self.wavelength,
            convention: self.convention,
            gamma_recursion: self.gamma_recursion,
        }
    }
}

/// Why a slot produced no estimate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SkipReason {
    /// No frame for `k − 1`, so no temporal difference.
    MissingPrevious,
    LocalizationFailed,
    /// The solver failed and there is no earlier solution to carry.
    NoSolutionYet,
}

#[derive(Debug, Clone, PartialEq)]
pub enum StepOutcome {
    Skipped { k: u64, reason: SkipReason },
    Estimate {
        k: u64,
        doppler_hz: f64,
        /// Solver did not converge; the previous solution was carried.
        degraded: bool,
        raw: SolutionVector,
        smoothed: SolutionVector,
        /// Bistatic angle at the reference receiver used for the output.
        beta_ref: f64,
    },
}

/// Sequential per-run estimator state: previous differenced phases, the
/// warm start and the smoothing buffer.
#[derive(Debug, Clone)]
pub struct DopplerEstimator {
    cfg: EstimatorConfig,
    rx_positions: Vec<Vec2D>,
    previous: Option<(u64, Vec<f64>)>,
    last_solution: Option<SolutionVector>,
    cold: bool,
    history: VecDeque<SolutionVector>,
    beta_history: VecDeque<f64>,
    degraded_steps: usize,
    skipped_steps: usize,
}

impl DopplerEstimator {
    pub fn new(rx_positions: Vec<Vec2D>, cfg: EstimatorConfig) -> Result<Self, EstimatorError> {
        if rx_positions.len() < NUM_UNKNOWNS && !cfg.allow_underdetermined {
            return Err(EstimatorError::UnderDetermined { got: rx_positions.len() });
        }
        if cfg.window == 0 {
            return Err(EstimatorError::EmptyWindow);
        }
        if !(cfg.max_speed > 0.0) {
            return Err(EstimatorError::InvalidMaxSpeed);
        }
        if cfg.reference_rx >= rx_positions.len() {
            return Err(EstimatorError::ReferenceReceiver { index: cfg.reference_rx, count: rx_positions.len() });
        }
        cfg.lm.validate()?;
        Ok(Self {
            cfg,
            rx_positions,
            previous: None,
            last_solution: None,
            cold: true,
            history: VecDeque::with_capacity(cfg.window),
            beta_history: VecDeque::with_capacity(cfg.window),
            degraded_steps: 0,
            skipped_steps: 0,
        })
    }

    pub fn config(&self) -> &EstimatorConfig {
        &self.cfg
    }

    pub fn degraded_steps(&self) -> usize {
        self.degraded_steps
    }

    pub fn skipped_steps(&self) -> usize {
        self.skipped_steps
    }

    fn skip(&mut self, k: u64, reason: SkipReason) -> StepOutcome {
        self.skipped_steps += 1;
        StepOutcome::Skipped { k, reason }
    }

    /// Consumes one frame. Frames must arrive in increasing `k`; a gap
    /// resets the temporal difference.
    pub fn step(&mut self, frame: &ObservationFrame) -> Result<StepOutcome, EstimatorError> {
        let n = self.rx_positions.len();
        if frame.num_rx() != n {
            return Err(EstimatorError::ReceiverCount { expected: n, got: frame.num_rx() });
        }
        let k = frame.k;
        let delta_phi = spatial_difference(frame);
        let previous = self.previous.replace((k, delta_phi.clone()));
        let measurements = match previous {
            Some((pk, prev)) if pk + 1 == k => temporal_difference(&delta_phi, &prev)?,
            _ => return Ok(self.skip(k, SkipReason::MissingPrevious)),
        };

        let aoa_tx: Vec<_> = frame.records.iter().map(|r| r.aoa_los).collect();
        let aoa_tgt: Vec<_> = frame.records.iter().map(|r| r.aoa_tgt).collect();
        let sys = match ReducedSystem::build(&aoa_tx, &aoa_tgt, &self.rx_positions, &measurements, self.cfg.system_params()) {
            Ok(sys) => sys,
            Err(EstimatorError::Geometry(_)) => return Ok(self.skip(k, SkipReason::LocalizationFailed)),
            Err(e) => return Err(e),
        };

        let warm = if self.cold { None } else { self.last_solution };
        let solved = solve_frame(&sys, warm, &self.cfg.lm, self.cfg.analytic_jacobian)?;
        let plausible = solved.solution.v_tx <= self.cfg.max_speed && solved.solution.v_tgt <= self.cfg.max_speed;
        let (raw, degraded) = if solved.converged() && plausible {
            self.cold = false;
            (solved.solution, false)
        } else {
            self.degraded_steps += 1;
            self.cold = true;
            match self.last_solution {
                Some(prev) => (prev, true),
                None => return Ok(self.skip(k, SkipReason::NoSolutionYet)),
            }
        };
        self.last_solution = Some(raw);
        if self.history.len() == self.cfg.window {
            self.history.pop_front();
        }
        self.history.push_back(raw);
        let window: Vec<SolutionVector> = self.history.iter().copied().collect();
        let smoothed = smooth(&window, self.cfg.window, self.cfg.smoothing)?;
        let r = self.cfg.reference_rx;
        if self.beta_history.len() == self.cfg.window {
            self.beta_history.pop_front();
        }
        self.beta_history.push_back(sys.beta[r]);
        let beta_ref = if self.cfg.smooth_beta {
            self.beta_history.iter().sum::<f64>() / self.beta_history.len() as f64
        } else {
            sys.beta[r]
        };
        let at_ref = SolutionVector { gamma_1: SignedAngle::new(sys.gamma(smoothed.gamma_1.radians(), r)), ..smoothed };
        Ok(StepOutcome::Estimate {
            k,
            doppler_hz: reconstruct_doppler(&at_ref, beta_ref, self.cfg.wavelength, self.cfg.convention),
            degraded,
            raw,
            smoothed,
            beta_ref,
        })
    }
}

/// `Δφ'_n` predicted for every receiver of a scene from the closed-form
/// Doppler terms; a noise-free stand-in for measured increments.
pub fn ideal_increments(
    scene: &geometry::Scene,
    wavelength: f64,
    convention: DopplerConvention,
) -> Result<Vec<f64>, GeometryError> {
    let mut out = vec![0.0; scene.num_rx()];
    for (n, o) in out.iter_mut().enumerate() {
        *o = TAU * scene.slot_duration * geometry::differenced_doppler(scene, n, wavelength, convention)?;
    }
    Ok(out)
}
