#![allow(dead_code)]

use std::f64::consts::PI;

use multidop_core::geometry::{differenced_doppler, direction_angle, true_angle_set};
use multidop_core::math::wrap;
use multidop_core::{wavelength, DopplerConvention, Scene, Vec2D};
use rand::Rng;

pub const SLOT: f64 = 125e-6;

fn point<R: Rng>(rng: &mut R) -> Vec2D {
    Vec2D::new(rng.random_range(-30.0..30.0), rng.random_range(-30.0..30.0))
}

/// No two nodes closer than 2 m, no receiver pair seeing the TX or the
/// target along nearly the same line, and every receiver on the same side
/// of the target-to-TX line as seen from the target, away from forward
/// scatter. Net Doppler stays inside the unaliased per-slot range.
pub fn well_posed(s: &Scene) -> bool {
    let Ok(angles) = true_angle_set(s) else { return false };
    let limit = 0.45 / s.slot_duration;
    let aliased = (0..s.num_rx()).any(|n| {
        differenced_doppler(s, n, wavelength(28e9), DopplerConvention::DerivativeConsistent)
            .map_or(true, |f| f.abs() >= limit)
    });
    if aliased {
        return false;
    }
    let mut nodes = vec![s.tx_pos, s.tgt_pos];
    nodes.extend(&s.rx_pos);
    for i in 0..nodes.len() {
        for j in (i + 1)..nodes.len() {
            if nodes[i].distance(nodes[j]) < 2.0 {
                return false;
            }
        }
    }
    for aoas in [&angles.aoa_tx, &angles.aoa_tgt] {
        for i in 0..aoas.len() {
            for j in (i + 1)..aoas.len() {
                if (aoas[i] - aoas[j]).radians().sin().abs() < 0.02 {
                    return false;
                }
            }
        }
    }
    let to_tx = direction_angle(s.tgt_pos, s.tx_pos).unwrap().radians();
    let sides: Vec<f64> =
        s.rx_pos.iter().map(|&rx| wrap(direction_angle(s.tgt_pos, rx).unwrap().radians() - to_tx)).collect();
    sides.iter().all(|&t| t > 0.1 && t < PI - 0.1) || sides.iter().all(|&t| t < -0.1 && t > -PI + 0.1)
}

pub fn random_scene<R: Rng>(rng: &mut R, num_rx: usize) -> Scene {
    loop {
        let tx_vel = Vec2D::from_polar(rng.random_range(0.5..20.0), rng.random_range(-PI..PI));
        let tgt_vel = Vec2D::from_polar(rng.random_range(0.5..20.0), rng.random_range(-PI..PI));
        let rx = (0..num_rx).map(|_| point(rng)).collect();
        let Ok(s) = Scene::new(point(rng), point(rng), rx, tx_vel, tgt_vel, SLOT) else { continue };
        if well_posed(&s) {
            return s;
        }
    }
}
