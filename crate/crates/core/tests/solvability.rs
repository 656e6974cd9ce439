//! The reduced system needs four receivers; more receivers keep the exact
//! solution.

mod common;

use multidop_core::estimator::{ideal_increments, reconstruct_doppler, solve_frame, ReducedSystem, SystemParams};
use multidop_core::geometry::{doppler_tgt, true_angle_set};
use multidop_core::{
    wavelength, DopplerConvention, DopplerEstimator, EstimatorConfig, EstimatorError, GammaRecursionAoa, LmOptions,
    Scene,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn params() -> SystemParams {
    SystemParams {
        slot_duration: common::SLOT,
        wavelength: wavelength(28e9),
        convention: DopplerConvention::DerivativeConsistent,
        gamma_recursion: GammaRecursionAoa::Target,
    }
}

fn exact_system(s: &Scene) -> ReducedSystem {
    let a = true_angle_set(s).unwrap();
    let p = params();
    let meas = ideal_increments(s, p.wavelength, p.convention).unwrap();
    ReducedSystem::build(&a.aoa_tx, &a.aoa_tgt, &s.rx_pos, &meas, p).unwrap()
}

#[test]
fn three_receivers_are_rejected() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x30);
    for _ in 0..100 {
        let s = common::random_scene(&mut rng, 3);
        let err = solve_frame(&exact_system(&s), None, &LmOptions::default(), true).unwrap_err();
        assert_eq!(err, EstimatorError::UnderDetermined { got: 3 });
        let cfg = EstimatorConfig::new(params().wavelength, common::SLOT);
        assert!(DopplerEstimator::new(s.rx_pos.clone(), cfg).is_err());
    }
}

/// Residual norms at the solution sit at rounding level for every receiver
/// count; below this floor their ordering carries no information.
const RESIDUAL_FLOOR: f64 = 1e-9;

#[test]
fn four_to_six_receivers_recover_the_doppler() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x31);
    let p = params();
    for _ in 0..200 {
        let full = common::random_scene(&mut rng, 6);
        let mut previous = f64::INFINITY;
        for n_rx in 4..=6 {
            let mut s = full.clone();
            s.rx_pos.truncate(n_rx);
            let sys = exact_system(&s);
            let sol = solve_frame(&sys, None, &LmOptions::default(), true).unwrap();
            assert!(sol.converged(), "{n_rx} receivers: {:?}", sol.lm.status);
            let norm = sys.residuals(&sol.solution).iter().map(|r| r * r).sum::<f64>().sqrt();
            assert!(norm <= previous.max(RESIDUAL_FLOOR), "{n_rx} receivers: {norm} after {previous}");
            previous = norm;

            let truth = doppler_tgt(&s, 0, p.wavelength, p.convention).unwrap();
            let est = reconstruct_doppler(&sol.solution, sys.beta[0], p.wavelength, p.convention);
            assert!((est - truth).abs() < 1e-3 * truth.abs().max(1.0), "{n_rx} receivers: {est} vs {truth}");
        }
    }
}
