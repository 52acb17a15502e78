//! Property predicates shared by the proptest suites and the acceptance run.

use molqudit::search::{p_loss, search_qudit};
use molqudit::transitions::transition_dipole;
use molqudit::{wigner3j, wigner6j, Engine, FieldPoint, HalfInt, LossModel, MoleculeSpec};
use proptest::prelude::*;
use proptest::test_runner::TestCaseError;

type Check = Result<(), TestCaseError>;

fn h(twice: i32) -> HalfInt {
    HalfInt::from_twice(twice)
}

pub fn field() -> impl Strategy<Value = FieldPoint> {
    (0.0..300.0f64, 0.0..20.0f64).prop_map(|(b, i)| FieldPoint::new(b, i))
}

/// Doubled (j1, j2, j3) with j3 in the triangle of j1, j2.
pub fn triad() -> impl Strategy<Value = (i32, i32, i32)> {
    (0..=8i32, 0..=8i32).prop_flat_map(|(a, b)| {
        let lo = (a - b).abs();
        let hi = a + b;
        (Just(a), Just(b), (0..=(hi - lo) / 2).prop_map(move |k| lo + 2 * k))
    })
}

/// Doubled j closing a triangle with doubled `a` and `b`.
pub fn closing(a: i32, b: i32) -> impl Strategy<Value = i32> {
    let lo = (a - b).abs();
    (0..=(a + b - lo) / 2).prop_map(move |k| lo + 2 * k)
}

/// Doubled (j1, j2, j6, j4, j5) with {j1 j2 j6}, {j4 j2 j6} and {j1 j5 j6}
/// all closing.
pub fn six_j_args() -> impl Strategy<Value = (i32, i32, i32, i32, i32)> {
    triad().prop_flat_map(|(a, b, c)| (Just(a), Just(b), Just(c), closing(b, c), closing(a, c)))
}

pub fn three_j_orthogonal(j1: i32, j2: i32, j3: i32) -> Check {
    let mut total = 0.0;
    let m3 = j3 % 2;
    for m1 in (-j1..=j1).step_by(2) {
        for m2 in (-j2..=j2).step_by(2) {
            let w = wigner3j(h(j1), h(j2), h(j3), h(m1), h(m2), h(-m3));
            total += (j3 as f64 + 1.0) * w * w;
        }
    }
    prop_assert!((total - 1.0).abs() < 1e-12, "sum {total}");
    Ok(())
}

/// sum_j3 (2j3+1)(2j6+1) {j1 j2 j3; j4 j5 j6}^2 = 1 when {j4 j2 j6} and {j1 j5 j6} close.
pub fn six_j_orthogonal((j1, j2, j6, j4, j5): (i32, i32, i32, i32, i32)) -> Check {
    let mut total = 0.0;
    for j3 in 0..=16 {
        let w = wigner6j(h(j1), h(j2), h(j3), h(j4), h(j5), h(j6));
        total += (j3 as f64 + 1.0) * (j6 as f64 + 1.0) * w * w;
    }
    prop_assert!((total - 1.0).abs() < 1e-12, "sum {total}");
    Ok(())
}

fn amax(m: &nalgebra::DMatrix<f64>) -> f64 {
    m.iter().fold(0.0f64, |a, v| a.max(v.abs()))
}

pub fn hamiltonian_symmetric_and_blocked(spec: &MoleculeSpec, f: &FieldPoint, beta: f64) -> Check {
    let e = Engine::new(spec, 2).unwrap();
    let h = e.hamiltonian(f);
    let scale = amax(&h).max(1.0);
    prop_assert!(amax(&(&h - h.transpose())) <= 1e-12 * scale);
    for (i, a) in e.basis().iter().enumerate() {
        for (j, b) in e.basis().iter().enumerate() {
            if a.m_f() != b.m_f() {
                prop_assert_eq!(h[(i, j)], 0.0, "M_F coupling at ({}, {})", i, j);
            }
        }
    }
    // a tilted trap breaks the M_F blocks but keeps the operator symmetric
    let s = e.stark_operator(beta);
    prop_assert!(amax(&(&s - s.transpose())) <= 1e-12 * amax(&s).max(1e-300));
    Ok(())
}

pub fn dipole_sum_rule(spec: &MoleculeSpec, f: &FieldPoint) -> Check {
    let e = Engine::new(spec, 1).unwrap();
    let s = e.eigensystem(f).unwrap();
    let upper = s.manifold(1);
    for lo in s.manifold(0) {
        let total: f64 = upper
            .iter()
            .map(|hi| {
                let mu = transition_dipole(&e, &s, lo, hi).unwrap();
                3.0 * mu.iter().map(|m| m * m).sum::<f64>() / (spec.d0 * spec.d0)
            })
            .sum();
        prop_assert!((total - 3.0).abs() < 1e-9, "{} sums to {}", lo.name(), total);
    }
    Ok(())
}

pub fn n0_stark_shifts_equal(spec: &MoleculeSpec, f: &FieldPoint, beta: f64) -> Check {
    let e = Engine::new(spec, 1).unwrap();
    let s = e.eigensystem(&FieldPoint { beta, ..*f }).unwrap();
    let shifts: Vec<f64> = s.manifold(0).iter().map(|l| e.stark_expectation(l, beta)).collect();
    let first = shifts[0];
    prop_assert!(
        (first + spec.alpha0()).abs() <= 1e-9 * spec.alpha0().abs().max(1.0),
        "N=0 shift {} vs -alpha0 {}",
        first,
        -spec.alpha0()
    );
    for v in &shifts {
        prop_assert!((v - first).abs() <= 1e-9 * first.abs().max(1.0));
    }
    Ok(())
}

pub fn p_loss_monotone_in_detuning(omega: f64, r: f64, d1: f64, extra: f64) -> Check {
    let a = p_loss(omega, d1, r).unwrap();
    let b = p_loss(omega, d1 + extra, r).unwrap();
    prop_assert!(b <= a, "p({}) = {} < p({}) = {}", d1, a, d1 + extra, b);
    prop_assert!((0.0..=1.0).contains(&a));
    Ok(())
}

pub fn reaudit_idempotent(spec: &MoleculeSpec, b: f64, i: f64, t: f64) -> Check {
    let engine = Engine::new(spec, 1).unwrap();
    let spectrum = engine.diagonalize(&FieldPoint::new(b, i)).unwrap();
    let plan = search_qudit(&engine, &spectrum, 0, 1, &LossModel::new(t, 1e-2)).unwrap();
    let again = plan.reaudit(&engine, &spectrum).unwrap();
    prop_assert_eq!(&again, &plan.audit);
    prop_assert!(plan.passes());
    prop_assert!(plan.is_connected());
    let twice = plan.reaudit(&engine, &spectrum).unwrap();
    prop_assert_eq!(again, twice);
    Ok(())
}
