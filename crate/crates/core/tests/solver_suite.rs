//! Levenberg-Marquardt properties on random linear and nonlinear problems.

mod common;

use multidop_core::estimator::{ideal_increments, ReducedSystem, SystemParams};
use multidop_core::geometry::true_angle_set;
use multidop_core::nlls::{finite_difference_jacobian, lm_solve, Matrix, Residuals};
use multidop_core::{wavelength, DopplerConvention, GammaRecursionAoa, LmOptions, LmStatus};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Linear {
    a: Vec<Vec<f64>>,
    b: Vec<f64>,
}

impl Residuals for Linear {
    fn num_residuals(&self) -> usize {
        self.b.len()
    }

    fn residuals(&self, x: &[f64], out: &mut [f64]) {
        for (o, (row, b)) in out.iter_mut().zip(self.a.iter().zip(&self.b)) {
            *o = row.iter().zip(x).map(|(a, x)| a * x).sum::<f64>() - b;
        }
    }

    fn jacobian(&self, _x: &[f64], jac: &mut Matrix) -> bool {
        for (i, row) in self.a.iter().enumerate() {
            for (j, &a) in row.iter().enumerate() {
                jac.set(i, j, a);
            }
        }
        true
    }
}

/// Least squares through the normal equations and partial pivoting.
fn normal_equations(a: &[Vec<f64>], b: &[f64]) -> Vec<f64> {
    let n = a[0].len();
    let mut m: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            let mut row: Vec<f64> = (0..n).map(|j| a.iter().map(|r| r[i] * r[j]).sum()).collect();
            row.push(a.iter().zip(b).map(|(r, b)| r[i] * b).sum());
            row
        })
        .collect();
    for c in 0..n {
        let p = (c..n).max_by(|&i, &j| m[i][c].abs().total_cmp(&m[j][c].abs())).unwrap();
        m.swap(c, p);
        for r in 0..n {
            if r != c {
                let f = m[r][c] / m[c][c];
                let pivot = m[c].clone();
                for (x, y) in m[r].iter_mut().zip(pivot) {
                    *x -= f * y;
                }
            }
        }
    }
    (0..n).map(|i| m[i][n] / m[i][i]).collect()
}

#[test]
fn linear_problems_solve_in_two_iterations() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x51);
    for _ in 0..500 {
        let n = rng.random_range(1..=5);
        let m = n + rng.random_range(0..=4);
        let a: Vec<Vec<f64>> = (0..m).map(|_| (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
        let b: Vec<f64> = (0..m).map(|_| rng.random_range(-10.0..10.0)).collect();
        let expected = normal_equations(&a, &b);
        if expected.iter().any(|v| !v.is_finite() || v.abs() > 1e3) {
            continue;
        }
        let x0: Vec<f64> = (0..n).map(|_| rng.random_range(-5.0..5.0)).collect();
        let res = lm_solve(&Linear { a, b }, &x0, &LmOptions::default()).unwrap();
        assert!(res.iterations <= 2, "{} iterations", res.iterations);
        for (x, e) in res.solution.iter().zip(&expected) {
            assert!((x - e).abs() <= 1e-10 * e.abs().max(1.0), "{x} vs {e}");
        }
    }
}

/// `y = a·exp(b·t) + c·sin(d·t)` sampled at fixed `t`.
struct ExpSine {
    t: Vec<f64>,
    y: Vec<f64>,
}

impl ExpSine {
    fn model(p: &[f64], t: f64) -> f64 {
        p[0] * (p[1] * t).exp() + p[2] * (p[3] * t).sin()
    }
}

impl Residuals for ExpSine {
    fn num_residuals(&self) -> usize {
        self.t.len()
    }

    fn residuals(&self, x: &[f64], out: &mut [f64]) {
        for (o, (&t, y)) in out.iter_mut().zip(self.t.iter().zip(&self.y)) {
            *o = Self::model(x, t) - y;
        }
    }

    fn jacobian(&self, x: &[f64], jac: &mut Matrix) -> bool {
        for (i, &t) in self.t.iter().enumerate() {
            let e = (x[1] * t).exp();
            jac.set(i, 0, e);
            jac.set(i, 1, x[0] * t * e);
            jac.set(i, 2, (x[3] * t).sin());
            jac.set(i, 3, x[2] * t * (x[3] * t).cos());
        }
        true
    }
}

fn random_exp_sine(rng: &mut ChaCha8Rng) -> (ExpSine, Vec<f64>) {
    let truth = [rng.random_range(0.5..2.0), rng.random_range(-1.0..0.5), rng.random_range(-2.0..2.0), rng.random_range(1.0..4.0)];
    let t: Vec<f64> = (0..15).map(|i| i as f64 * 0.2).collect();
    let y = t.iter().map(|&t| ExpSine::model(&truth, t) + rng.random_range(-0.01..0.01)).collect();
    let x0 = truth.iter().map(|v| v + rng.random_range(-0.3..0.3)).collect();
    (ExpSine { t, y }, x0)
}

fn assert_jacobians_agree(analytic: &Matrix, fd: &Matrix) {
    let scale = analytic.as_slice().iter().fold(1.0f64, |m, v| m.max(v.abs()));
    for (a, f) in analytic.as_slice().iter().zip(fd.as_slice()) {
        assert!((a - f).abs() <= 1e-4 * scale, "analytic {a} vs finite difference {f}");
    }
}

#[test]
fn analytic_and_finite_difference_jacobians_agree() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x52);
    for _ in 0..500 {
        let (p, x) = random_exp_sine(&mut rng);
        let mut jac = Matrix::zeros(p.num_residuals(), 4);
        assert!(p.jacobian(&x, &mut jac));
        assert_jacobians_agree(&jac, &finite_difference_jacobian(&p, &x).unwrap());
    }

    let params = SystemParams {
        slot_duration: common::SLOT,
        wavelength: wavelength(28e9),
        convention: DopplerConvention::DerivativeConsistent,
        gamma_recursion: GammaRecursionAoa::Target,
    };
    for i in 0..500 {
        let s = common::random_scene(&mut rng, 4 + i % 3);
        let a = true_angle_set(&s).unwrap();
        let meas = ideal_increments(&s, params.wavelength, params.convention).unwrap();
        let sys = ReducedSystem::build(&a.aoa_tx, &a.aoa_tgt, &s.rx_pos, &meas, params).unwrap();
        let x: Vec<f64> = (0..4).map(|_| rng.random_range(-20.0..20.0)).collect();
        let problem = sys.problem(true);
        let mut jac = Matrix::zeros(s.num_rx(), 4);
        assert!(problem.jacobian(&x, &mut jac));
        assert_jacobians_agree(&jac, &finite_difference_jacobian(&problem, &x).unwrap());
    }
}

#[test]
fn accepted_steps_never_raise_cost() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x53);
    let mut converged = 0;
    for i in 0..500 {
        let (p, x0) = random_exp_sine(&mut rng);
        let res = if i % 2 == 0 {
            lm_solve(&p, &x0, &LmOptions::default()).unwrap()
        } else {
            let fd = multidop_core::nlls::FnResiduals::new(p.num_residuals(), |x: &[f64], out: &mut [f64]| p.residuals(x, out));
            lm_solve(&fd, &x0, &LmOptions::default()).unwrap()
        };
        assert!(res.cost_history.windows(2).all(|w| w[1] <= w[0]), "{:?}", res.cost_history);
        assert_eq!(res.cost_history.last().copied(), Some(res.cost));
        converged += usize::from(res.status == LmStatus::Converged);
    }
    assert!(converged > 450, "only {converged} of 500 converged");
}
