//! Planar scene geometry: positions, kinematics, signed angles, closed-form
//! Doppler terms and AoA ray-intersection localization.
//!
//! All angles are global-frame, counterclockwise from the +x axis, and
//! wrapped to `(-π, π]`. The angle conventions are chosen so that each
//! Doppler term equals `-1/λ` times the time derivative of the matching path
//! length:
//!
//! - `ζ_n = ∠v_tx − ∠(RX_n − TX)`: TX velocity against the TX→RX_n line.
//! - `η = ∠v_tx − ∠(TGT − TX)`: TX velocity against the TX→TGT line.
//! - `δ_n^tx = ∠(TX − RX_n)`, `δ_n^tgt = ∠(TGT − RX_n)`: angles of arrival.
//! - `β_n`: unsigned bistatic angle at the target between TX and RX_n.
//! - `γ_n = ∠v_tgt − ∠(inward bisector at the target)`.
//! - `α = ∠(TGT − TX) − ∠(RX_1 − TX)`.
//!
//! With these, `ζ_{n+1} = ζ_n − (δ^tx_{n+1} − δ^tx_n)`,
//! `γ_{n+1} = γ_n − (δ^tgt_{n+1} − δ^tgt_n)/2` and `η = ζ_1 − α` hold exactly.

use alloc::vec::Vec;
use core::ops::{Add, Mul, Neg, Sub};

use crate::math::{self, atan2, cos, hypot, sin, wrap};

/// Minimum separation between two scene points, meters.
pub const MIN_SEPARATION: f64 = 1e-9;

/// Rays whose directions satisfy `|sin(a1 − a2)|` below this are treated as
/// parallel and skipped during localization.
pub const PARALLEL_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
pub enum GeometryError {
    #[error("degenerate geometry: {0}")]
    Degenerate(&'static str),
    #[error("rays are parallel")]
    ParallelRays,
    #[error("rays only meet behind a receiver")]
    BehindReceiver,
    #[error("localization failed: no usable receiver pair")]
    LocalizationFailed,
    #[error("receiver index {index} out of range for {count} receivers")]
    ReceiverIndex { index: usize, count: usize },
    #[error("angle list length {got} does not match {expected} receivers")]
    LengthMismatch { expected: usize, got: usize },
}

/// A planar vector in meters (positions) or m/s (velocities).
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Vec2D {
    pub x: f64,
    pub y: f64,
}

impl Vec2D {
    pub const ZERO: Vec2D = Vec2D { x: 0.0, y: 0.0 };

    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    /// Vector of length `magnitude` pointing along `angle` (radians).
    pub fn from_polar(magnitude: f64, angle: f64) -> Self {
        Self::new(magnitude * cos(angle), magnitude * sin(angle))
    }

    pub fn norm(self) -> f64 {
        hypot(self.x, self.y)
    }

    pub fn dot(self, other: Vec2D) -> f64 {
        self.x * other.x + self.y * other.y
    }

    pub fn cross(self, other: Vec2D) -> f64 {
        self.x * other.y - self.y * other.x
    }

    pub fn unit(self) -> Option<Vec2D> {
        let n = self.norm();
        (n > 0.0).then(|| Vec2D::new(self.x / n, self.y / n))
    }

    /// Heading of the vector; `0` for the zero vector.
    pub fn angle(self) -> SignedAngle {
        SignedAngle::new(atan2(self.y, self.x))
    }

    pub fn distance(self, other: Vec2D) -> f64 {
        (other - self).norm()
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

impl Add for Vec2D {
    type Output = Vec2D;
    fn add(self, o: Vec2D) -> Vec2D {
        Vec2D::new(self.x + o.x, self.y + o.y)
    }
}

impl Sub for Vec2D {
    type Output = Vec2D;
    fn sub(self, o: Vec2D) -> Vec2D {
        Vec2D::new(self.x - o.x, self.y - o.y)
    }
}

impl Mul<f64> for Vec2D {
    type Output = Vec2D;
    fn mul(self, s: f64) -> Vec2D {
        Vec2D::new(self.x * s, self.y * s)
    }
}

impl Neg for Vec2D {
    type Output = Vec2D;
    fn neg(self) -> Vec2D {
        Vec2D::new(-self.x, -self.y)
    }
}

/// An angle in radians, always wrapped to `(-π, π]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Default)]
pub struct SignedAngle(f64);

impl SignedAngle {
    pub fn new(radians: f64) -> Self {
        SignedAngle(wrap(radians))
    }

    pub fn from_degrees(deg: f64) -> Self {
        Self::new(math::rad(deg))
    }

    pub fn radians(self) -> f64 {
        self.0
    }

    pub fn degrees(self) -> f64 {
        math::deg(self.0)
    }
}

impl Add for SignedAngle {
    type Output = SignedAngle;
    fn add(self, o: SignedAngle) -> SignedAngle {
        SignedAngle::new(self.0 + o.0)
    }
}

impl Sub for SignedAngle {
    type Output = SignedAngle;
    fn sub(self, o: SignedAngle) -> SignedAngle {
        SignedAngle::new(self.0 - o.0)
    }
}

impl Neg for SignedAngle {
    type Output = SignedAngle;
    fn neg(self) -> SignedAngle {
        SignedAngle::new(-self.0)
    }
}

/// How the target-path Doppler term is scaled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DopplerConvention {
    /// `2‖v‖/λ · cos γ · cos(β/2)`: equals `-1/λ` times the bistatic range rate.
    #[default]
    DerivativeConsistent,
    /// `‖v‖/λ · cos γ · cos(β/2)`, without the bistatic factor of two.
    NoBistaticFactor,
}

impl DopplerConvention {
    pub fn target_factor(self) -> f64 {
        match self {
            DopplerConvention::DerivativeConsistent => 2.0,
            DopplerConvention::NoBistaticFactor => 1.0,
        }
    }
}

/// Which AoA differences drive the bisector-angle recursion.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum GammaRecursionAoa {
    /// Target-path AoAs; exact for the inward bisector.
    #[default]
    Target,
    /// LoS AoAs, as in the original printed recursion.
    Tx,
}

/// Positions and velocities of every node at slot `k`.
#[derive(Debug, Clone, PartialEq)]
pub struct Scene {
    pub tx_pos: Vec2D,
    pub tgt_pos: Vec2D,
    pub rx_pos: Vec<Vec2D>,
    pub tx_vel: Vec2D,
    pub tgt_vel: Vec2D,
    pub k: u64,
    /// Slot duration `T` in seconds.
    pub slot_duration: f64,
}

impl Scene {
    pub fn new(
        tx_pos: Vec2D,
        tgt_pos: Vec2D,
        rx_pos: Vec<Vec2D>,
        tx_vel: Vec2D,
        tgt_vel: Vec2D,
        slot_duration: f64,
    ) -> Result<Self, GeometryError> {
        let scene = Scene { tx_pos, tgt_pos, rx_pos, tx_vel, tgt_vel, k: 0, slot_duration };
        scene.validate()?;
        Ok(scene)
    }

    pub fn num_rx(&self) -> usize {
        self.rx_pos.len()
    }

    pub fn validate(&self) -> Result<(), GeometryError> {
        if self.rx_pos.is_empty() {
            return Err(GeometryError::Degenerate("no receivers"));
        }
        if !(self.slot_duration > 0.0) || !self.slot_duration.is_finite() {
            return Err(GeometryError::Degenerate("slot duration must be positive"));
        }
        let all_finite = [self.tx_pos, self.tgt_pos, self.tx_vel, self.tgt_vel]
            .iter()
            .chain(self.rx_pos.iter())
            .all(|v| v.is_finite());
        if !all_finite {
            return Err(GeometryError::Degenerate("non-finite coordinate"));
        }
        if self.tx_pos.distance(self.tgt_pos) <= MIN_SEPARATION {
            return Err(GeometryError::Degenerate("transmitter and target coincide"));
        }
        for rx in &self.rx_pos {
            if rx.distance(self.tx_pos) <= MIN_SEPARATION {
                return Err(GeometryError::Degenerate("receiver coincides with transmitter"));
            }
            if rx.distance(self.tgt_pos) <= MIN_SEPARATION {
                return Err(GeometryError::Degenerate("receiver coincides with target"));
            }
        }
        Ok(())
    }

    /// Constant-velocity propagation by `steps` slots. Receivers are static.
    pub fn advance(&self, steps: u64) -> Scene {
        let dt = self.slot_duration * steps as f64;
        Scene {
            tx_pos: self.tx_pos + self.tx_vel * dt,
            tgt_pos: self.tgt_pos + self.tgt_vel * dt,
            rx_pos: self.rx_pos.clone(),
            tx_vel: self.tx_vel,
            tgt_vel: self.tgt_vel,
            k: self.k + steps,
            slot_duration: self.slot_duration,
        }
    }

    fn rx(&self, n: usize) -> Result<Vec2D, GeometryError> {
        self.rx_pos
            .get(n)
            .copied()
            .ok_or(GeometryError::ReceiverIndex { index: n, count: self.rx_pos.len() })
    }

    /// Length of the direct TX→RX_n path, meters.
    pub fn los_length(&self, n: usize) -> Result<f64, GeometryError> {
        Ok(self.tx_pos.distance(self.rx(n)?))
    }

    /// Length of the TX→TGT→RX_n path (the bistatic range), meters.
    pub fn target_path_length(&self, n: usize) -> Result<f64, GeometryError> {
        Ok(self.tx_pos.distance(self.tgt_pos) + self.tgt_pos.distance(self.rx(n)?))
    }
}

/// Direction of `to − from`, counterclockwise from +x.
pub fn direction_angle(from: Vec2D, to: Vec2D) -> Result<SignedAngle, GeometryError> {
    let d = to - from;
    if d.norm() <= MIN_SEPARATION {
        return Err(GeometryError::Degenerate("coincident points have no direction"));
    }
    Ok(d.angle())
}

/// Bistatic angle at `tgt` between the directions to `tx` and `rx`, in `[0, π]`.
pub fn bistatic_angle(tx: Vec2D, tgt: Vec2D, rx: Vec2D) -> Result<f64, GeometryError> {
    let a = (tx - tgt).unit().ok_or(GeometryError::Degenerate("target coincides with transmitter"))?;
    let b = (rx - tgt).unit().ok_or(GeometryError::Degenerate("target coincides with receiver"))?;
    Ok(atan2(math::abs(a.cross(b)), a.dot(b)))
}

/// Direction of the inward bisector of the bistatic angle at `tgt`.
pub fn bisector_direction(tx: Vec2D, tgt: Vec2D, rx: Vec2D) -> Result<SignedAngle, GeometryError> {
    let a = (tx - tgt).unit().ok_or(GeometryError::Degenerate("target coincides with transmitter"))?;
    let b = (rx - tgt).unit().ok_or(GeometryError::Degenerate("target coincides with receiver"))?;
    let s = a + b;
    if s.norm() <= 1e-12 {
        return Err(GeometryError::Degenerate("forward-scatter geometry has no bisector"));
    }
    Ok(s.angle())
}

/// Every angle of the scene under the conventions in the module docs.
#[derive(Debug, Clone, PartialEq)]
pub struct AngleSet {
    pub zeta: Vec<SignedAngle>,
    pub eta: SignedAngle,
    pub gamma: Vec<SignedAngle>,
    pub beta: Vec<SignedAngle>,
    pub alpha: SignedAngle,
    pub aoa_tx: Vec<SignedAngle>,
    pub aoa_tgt: Vec<SignedAngle>,
}

pub fn true_angle_set(scene: &Scene) -> Result<AngleSet, GeometryError> {
    scene.validate()?;
    let tx_heading = scene.tx_vel.angle();
    let tgt_heading = scene.tgt_vel.angle();
    let tx_to_tgt = direction_angle(scene.tx_pos, scene.tgt_pos)?;
    let n = scene.num_rx();
    let mut set = AngleSet {
        zeta: Vec::with_capacity(n),
        eta: tx_heading - tx_to_tgt,
        gamma: Vec::with_capacity(n),
        beta: Vec::with_capacity(n),
        alpha: SignedAngle::default(),
        aoa_tx: Vec::with_capacity(n),
        aoa_tgt: Vec::with_capacity(n),
    };
    for &rx in &scene.rx_pos {
        let tx_to_rx = direction_angle(scene.tx_pos, rx)?;
        set.zeta.push(tx_heading - tx_to_rx);
        set.aoa_tx.push(direction_angle(rx, scene.tx_pos)?);
        set.aoa_tgt.push(direction_angle(rx, scene.tgt_pos)?);
        set.beta.push(SignedAngle::new(bistatic_angle(scene.tx_pos, scene.tgt_pos, rx)?));
        set.gamma.push(tgt_heading - bisector_direction(scene.tx_pos, scene.tgt_pos, rx)?);
    }
    set.alpha = tx_to_tgt - direction_angle(scene.tx_pos, scene.rx_pos[0])?;
    Ok(set)
}

/// TX-induced Doppler on the LoS path of receiver `n`, Hz.
pub fn doppler_tx_los(scene: &Scene, n: usize, wavelength: f64) -> Result<f64, GeometryError> {
    let rx = scene.rx(n)?;
    let zeta = scene.tx_vel.angle() - direction_angle(scene.tx_pos, rx)?;
    Ok(scene.tx_vel.norm() / wavelength * cos(zeta.radians()))
}

/// TX-induced Doppler on the target path (common to all receivers), Hz.
pub fn doppler_tx_tgt(scene: &Scene, wavelength: f64) -> Result<f64, GeometryError> {
    let eta = scene.tx_vel.angle() - direction_angle(scene.tx_pos, scene.tgt_pos)?;
    Ok(scene.tx_vel.norm() / wavelength * cos(eta.radians()))
}

/// Target-induced Doppler on the target path of receiver `n`, Hz.
pub fn doppler_tgt(
    scene: &Scene,
    n: usize,
    wavelength: f64,
    convention: DopplerConvention,
) -> Result<f64, GeometryError> {
    let rx = scene.rx(n)?;
    let beta = bistatic_angle(scene.tx_pos, scene.tgt_pos, rx)?;
    let gamma = scene.tgt_vel.angle() - bisector_direction(scene.tx_pos, scene.tgt_pos, rx)?;
    Ok(target_doppler(scene.tgt_vel.norm(), gamma.radians(), beta, wavelength, convention))
}

/// `g · v/λ · cos γ · cos(β/2)` with `g` set by the convention.
#[inline]
pub fn target_doppler(
    speed: f64,
    gamma: f64,
    beta: f64,
    wavelength: f64,
    convention: DopplerConvention,
) -> f64 {
    convention.target_factor() * speed / wavelength * cos(gamma) * cos(beta / 2.0)
}

/// Net Doppler seen by the spatially differenced phase of receiver `n`:
/// target-path TX term plus target term minus LoS TX term, Hz.
pub fn differenced_doppler(
    scene: &Scene,
    n: usize,
    wavelength: f64,
    convention: DopplerConvention,
) -> Result<f64, GeometryError> {
    Ok(doppler_tx_tgt(scene, wavelength)? + doppler_tgt(scene, n, wavelength, convention)?
        - doppler_tx_los(scene, n, wavelength)?)
}

/// Intersection of the ray from `p1` along `a1` with the ray from `p2`
/// along `a2`. Lines that only cross behind a receiver are rejected.
pub fn ray_intersection(
    p1: Vec2D,
    a1: SignedAngle,
    p2: Vec2D,
    a2: SignedAngle,
) -> Result<Vec2D, GeometryError> {
    let d1 = Vec2D::from_polar(1.0, a1.radians());
    let d2 = Vec2D::from_polar(1.0, a2.radians());
    let denom = d1.cross(d2);
    if math::abs(denom) < PARALLEL_TOLERANCE {
        return Err(GeometryError::ParallelRays);
    }
    // p1 + t·d1 = p2 + s·d2  =>  t = ((p2 − p1) × d2) / (d1 × d2)
    let t = (p2 - p1).cross(d2) / denom;
    let s = (p2 - p1).cross(d1) / denom;
    if t < 0.0 || s < 0.0 {
        return Err(GeometryError::BehindReceiver);
    }
    Ok(p1 + d1 * t)
}

/// Mean of the pairwise ray intersections over all receiver pairs,
/// skipping near-parallel pairs.
pub fn localize(rx_positions: &[Vec2D], aoas: &[SignedAngle]) -> Result<Vec2D, GeometryError> {
    if rx_positions.len() != aoas.len() {
        return Err(GeometryError::LengthMismatch { expected: rx_positions.len(), got: aoas.len() });
    }
    let mut sum = Vec2D::ZERO;
    let mut used = 0usize;
    for i in 0..rx_positions.len() {
        for j in (i + 1)..rx_positions.len() {
            match ray_intersection(rx_positions[i], aoas[i], rx_positions[j], aoas[j]) {
                Ok(p) => {
                    sum = sum + p;
                    used += 1;
                }
                Err(GeometryError::ParallelRays | GeometryError::BehindReceiver) => {}
                Err(e) => return Err(e),
            }
        }
    }
    if used == 0 {
        return Err(GeometryError::LocalizationFailed);
    }
    Ok(sum * (1.0 / used as f64))
}

/// Differences `δ_n − δ_1` built by summing wrapped consecutive
/// differences, so they stay continuous along the receiver chain.
pub fn cumulative_aoa_differences(aoas: &[SignedAngle]) -> Vec<f64> {
    let mut out = Vec::with_capacity(aoas.len());
    let mut acc = 0.0;
    for (i, a) in aoas.iter().enumerate() {
        if i > 0 {
            acc += (*a - aoas[i - 1]).radians();
        }
        out.push(acc);
    }
    out
}
