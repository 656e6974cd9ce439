//! `f64` helpers routed through `libm` so results do not depend on the
//! platform's math library.

use core::f64::consts::{PI, TAU};

#[inline]
pub fn sin(x: f64) -> f64 {
    libm::sin(x)
}

#[inline]
pub fn cos(x: f64) -> f64 {
    libm::cos(x)
}

#[inline]
pub fn atan2(y: f64, x: f64) -> f64 {
    libm::atan2(y, x)
}

#[inline]
pub fn sqrt(x: f64) -> f64 {
    libm::sqrt(x)
}

#[inline]
pub fn hypot(x: f64, y: f64) -> f64 {
    libm::hypot(x, y)
}

#[inline]
pub fn acos(x: f64) -> f64 {
    libm::acos(x)
}

#[inline]
pub fn abs(x: f64) -> f64 {
    libm::fabs(x)
}

/// Wraps an angle in radians to `(-π, π]`.
pub fn wrap(angle: f64) -> f64 {
    if angle > -PI && angle <= PI {
        return angle;
    }
    let mut r = libm::fmod(angle + PI, TAU);
    if r < 0.0 {
        r += TAU;
    }
    // r in [0, 2π); map 0 to +π so the interval is half-open on the left.
    if r == 0.0 {
        PI
    } else {
        r - PI
    }
}

/// Circular mean of a set of angles. Returns `None` when the resultant
/// vector vanishes.
pub fn circular_mean<I: IntoIterator<Item = f64>>(angles: I) -> Option<f64> {
    let (mut s, mut c) = (0.0, 0.0);
    for a in angles {
        s += sin(a);
        c += cos(a);
    }
    if hypot(s, c) < 1e-300 {
        None
    } else {
        Some(atan2(s, c))
    }
}

pub fn deg(rad: f64) -> f64 {
    rad * 180.0 / PI
}

pub fn rad(deg: f64) -> f64 {
    deg * PI / 180.0
}
