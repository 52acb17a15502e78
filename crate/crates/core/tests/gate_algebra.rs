mod common;

use std::f64::consts::PI;

use common::{dyn3, max_abs_diff, propagator, three_level_h};
use molqudit::gates::{evolve_three_level, phase_gate, q_pulse, two_photon_gate, CommonLevel};
use nalgebra::{Matrix2, Matrix3};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn closed_form_evolution_matches_matrix_exponential() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst: f64 = 0.0;
    for _ in 0..10_000 {
        let om = 2.0 * PI * rng.random_range(1e3..1e6);
        let zeta = rng.random_range(0.05..20.0);
        let (om_kc, om_lc) = (om * zeta / zeta.hypot(1.0), om / zeta.hypot(1.0));
        let (phi_kc, phi_lc) = (rng.random_range(0.0..2.0 * PI), rng.random_range(0.0..2.0 * PI));
        let t = rng.random_range(0.0..4.0 * PI / om);
        let closed = dyn3(&evolve_three_level(om_kc, om_lc, phi_kc, phi_lc, t).unwrap());
        let exact = propagator(&three_level_h(om_kc, om_lc, phi_kc, phi_lc), t);
        worst = worst.max(max_abs_diff(&closed, &exact));
    }
    assert!(worst <= 1e-10, "worst deviation {worst:e}");
}

#[test]
fn full_cycle_leaves_common_level_and_realizes_the_gate() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..2_000 {
        let zeta = rng.random_range(0.05..20.0);
        let phi = rng.random_range(0.0..2.0 * PI);
        let phi_lc = rng.random_range(0.0..2.0 * PI);
        let om = 2.0 * PI * rng.random_range(1e3..1e6);
        let (om_kc, om_lc) = (om * zeta / zeta.hypot(1.0), om / zeta.hypot(1.0));
        let u = propagator(&three_level_h(om_kc, om_lc, phi + phi_lc, phi_lc), 2.0 * PI / om);
        assert!((u[(0, 0)] + Complex64::from(1.0)).norm() < 1e-10);
        for j in 1..3 {
            assert!(u[(0, j)].norm() < 1e-10 && u[(j, 0)].norm() < 1e-10);
        }
        let g = two_photon_gate(zeta, phi, CommonLevel::Below).unwrap();
        for (i, j) in [(0, 0), (0, 1), (1, 0), (1, 1)] {
            assert!((u[(i + 1, j + 1)] - g[(i, j)]).norm() < 1e-10);
        }
    }
}

#[test]
fn two_photon_gate_is_a_unitary_involution() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let id = Matrix2::<Complex64>::identity();
    for _ in 0..10_000 {
        let zeta = rng.random_range(1e-3..1e3);
        let phi = rng.random_range(-4.0 * PI..4.0 * PI);
        for dir in [CommonLevel::Below, CommonLevel::Above] {
            let u = two_photon_gate(zeta, phi, dir).unwrap();
            assert!((u * u - id).iter().map(|z| z.norm()).fold(0.0, f64::max) <= 1e-12);
            assert!((u.adjoint() * u - id).iter().map(|z| z.norm()).fold(0.0, f64::max) <= 1e-12);
        }
        let below = two_photon_gate(zeta, 2.0 * PI - phi, CommonLevel::Below).unwrap();
        let above = two_photon_gate(zeta, phi, CommonLevel::Above).unwrap();
        assert!((below - above).iter().map(|z| z.norm()).fold(0.0, f64::max) <= 1e-12);
    }
}

#[test]
fn phase_gate_matches_diagonal_form() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for _ in 0..10_000 {
        let phi = rng.random_range(-2.0 * PI..2.0 * PI);
        let want = Matrix3::from_diagonal(&nalgebra::Vector3::new(
            Complex64::from_polar(1.0, -phi),
            Complex64::from_polar(1.0, phi),
            Complex64::from(1.0),
        ));
        assert!((phase_gate(phi) - want).iter().map(|z| z.norm()).fold(0.0, f64::max) <= 1e-12);
    }
}

#[test]
fn single_tone_pi_pulse_matches_exponential() {
    let mut rng = ChaCha8Rng::seed_from_u64(19);
    for _ in 0..1_000 {
        let phi = rng.random_range(0.0..2.0 * PI);
        let om = 2.0 * PI * rng.random_range(1e3..1e6);
        let exact = propagator(&three_level_h(om, 0.0, phi, 0.0), PI / om);
        assert!(max_abs_diff(&dyn3(&q_pulse(phi)), &exact) < 1e-10);
    }
}
