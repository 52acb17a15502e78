//! Shared helpers for integration tests: synthetic molecules and an
//! independent matrix exponential.

#![allow(dead_code)]

pub mod props;

use molqudit::{HalfInt, MoleculeSpec, Spins, Symmetry};
use nalgebra::{DMatrix, Matrix3};
use num_complex::Complex64;
use proptest::prelude::*;

/// Random ¹Σ or ²Σ molecule with small nuclear spins so the basis stays
/// cheap. Coupling constants span a few decades around typical values.
pub fn synthetic_spec() -> impl Strategy<Value = MoleculeSpec> {
    let singlet = (
        0..=3i32,
        1..=3i32,
        200.0..3000.0f64,
        prop::array::uniform2(-1.0..1.0f64),
        -1e-3..1e-3f64,
        0.0..0.05f64,
        prop::array::uniform2(0.1..3.0f64),
        0.001..0.02f64,
        (500.0..5000.0f64, 100.0..3000.0f64),
    )
        .prop_map(|(i1, i2, b, eqq, ct, cs, g, gr, (apar, aperp))| {
            let spins = Spins {
                s: HalfInt::ZERO,
                i1: HalfInt::from_twice(i1),
                i2: HalfInt::from_twice(i2),
            };
            let mut m = MoleculeSpec::new("synthetic-singlet", Symmetry::SingletSigma, spins, b);
            m.eqq = eqq;
            m.c_tensor = ct;
            m.c_scalar = cs;
            m.g_nuc = g;
            m.g_r = gr;
            m.d0 = 1.0;
            m.alpha_par = apar * 4.687e-5;
            m.alpha_perp = aperp * 4.687e-5;
            m
        });
    let doublet = (
        0..=1i32,
        0..=3i32,
        5000.0..20000.0f64,
        10.0..80.0f64,
        0.0..150.0f64,
        0.0..50.0f64,
        0.5..5.5f64,
        (100.0..400.0f64, 50.0..300.0f64),
    )
        .prop_map(|(i1, i2, b, gamma, bf, cd, g2, (apar, aperp))| {
            let spins = Spins {
                s: HalfInt::HALF,
                i1: HalfInt::from_twice(i1),
                i2: HalfInt::from_twice(i2),
            };
            let mut m = MoleculeSpec::new("synthetic-doublet", Symmetry::DoubletSigma, spins, b);
            m.gamma = gamma;
            m.b_fermi = [0.3 * bf, bf];
            m.c_dipolar = [0.0, cd];
            m.g_s = 2.0023;
            m.g_nuc = [0.5, g2];
            m.d0 = 3.0;
            m.alpha_par = apar * 4.687e-5;
            m.alpha_perp = aperp * 4.687e-5;
            m
        });
    prop_oneof![singlet, doublet].prop_filter("valid spec", |m| m.validate().is_ok())
}

/// exp(A) by scaling and squaring with a truncated Taylor series.
pub fn expm(a: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    let n = a.nrows();
    let norm: f64 = a.iter().map(|z| z.norm()).sum();
    let s = if norm > 0.5 { (norm / 0.5).log2().ceil() as i32 } else { 0 };
    let scaled = a / Complex64::from(2f64.powi(s));
    let mut term = DMatrix::<Complex64>::identity(n, n);
    let mut sum = term.clone();
    for k in 1..=30 {
        term = &term * &scaled / Complex64::from(k as f64);
        sum += &term;
        if term.iter().all(|z| z.norm() < 1e-18) {
            break;
        }
    }
    for _ in 0..s {
        sum = &sum * &sum;
    }
    sum
}

pub fn max_abs_diff(a: &DMatrix<Complex64>, b: &DMatrix<Complex64>) -> f64 {
    (a - b).iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub fn dyn3(m: &Matrix3<Complex64>) -> DMatrix<Complex64> {
    DMatrix::from_iterator(3, 3, m.iter().copied())
}

/// H in basis (c, k, l): H_ck = Ω_kc e^{iφ_kc}/2, H_cl = Ω_lc e^{iφ_lc}/2.
pub fn three_level_h(om_kc: f64, om_lc: f64, phi_kc: f64, phi_lc: f64) -> DMatrix<Complex64> {
    let mut h = DMatrix::zeros(3, 3);
    h[(0, 1)] = Complex64::from_polar(om_kc / 2.0, phi_kc);
    h[(0, 2)] = Complex64::from_polar(om_lc / 2.0, phi_lc);
    h[(1, 0)] = h[(0, 1)].conj();
    h[(2, 0)] = h[(0, 2)].conj();
    h
}

pub fn propagator(h: &DMatrix<Complex64>, t: f64) -> DMatrix<Complex64> {
    expm(&(h * Complex64::new(0.0, -t)))
}
