mod common;

use std::f64::consts::PI;

use common::props::{p_loss_monotone_in_detuning, reaudit_idempotent};
use common::synthetic_spec;
use molqudit::search::{audit_lines, p_loss, select, LineIndex};
use molqudit::transitions::Polarization;
use molqudit::{LossModel, TransitionLine};
use proptest::prelude::*;

fn pol() -> impl Strategy<Value = Polarization> {
    prop_oneof![
        Just(Polarization::SigmaMinus),
        Just(Polarization::Pi),
        Just(Polarization::SigmaPlus)
    ]
}

/// Primary levels p0..p{np-1}, auxiliary levels a0..a{na-1}, and a random
/// subset of the np x na possible lines.
fn line_set() -> impl Strategy<Value = (Vec<String>, Vec<TransitionLine>)> {
    (2..=4usize, 1..=3usize).prop_flat_map(|(np, na)| {
        let cells = np * na;
        (
            Just(np),
            Just(na),
            prop::collection::vec((prop::bool::weighted(0.7), 0.0..2.0f64, 0.01..1.0f64, pol()), cells),
        )
            .prop_map(|(np, na, cells)| {
                let primary: Vec<String> = (0..np).map(|i| format!("p{i}")).collect();
                let mut lines = Vec::new();
                for (k, (keep, f, s, pol)) in cells.into_iter().enumerate() {
                    if keep {
                        lines.push(TransitionLine {
                            lower: format!("p{}", k / na),
                            upper: format!("a{}", k % na),
                            frequency: 1000.0 + f,
                            pol,
                            dipole: (s / 3.0f64).sqrt(),
                            strength: s,
                        });
                    }
                }
                (primary, lines)
            })
    })
}

/// Brute-force audit: for every drive, every populated primary level and
/// every line from it into a different auxiliary level, keep the worst loss
/// per spectator auxiliary.
fn oracle_audit(
    primary: &[String],
    lines: &[TransitionLine],
    drives: &[TransitionLine],
    m: &LossModel,
) -> Vec<(String, String, String, f64)> {
    let omega = PI / (2.0 * m.t_half_pi);
    let mut out = Vec::new();
    for d in drives {
        let mut worst: std::collections::BTreeMap<String, f64> = Default::default();
        for s in lines.iter().filter(|s| primary.contains(&s.lower) && s.upper != d.upper) {
            let r = if s.pol == d.pol {
                s.dipole / d.dipole
            } else {
                s.dipole / d.dipole * (1.0 - m.purity).sqrt()
            };
            let delta = 2.0 * PI * 1e6 * (d.frequency - s.frequency).abs();
            let x = (r * omega).powi(2);
            let p = if x == 0.0 { 0.0 } else { x / (x + delta * delta) };
            let w = worst.entry(s.upper.clone()).or_insert(p);
            *w = w.max(p);
        }
        for (a, p) in worst {
            out.push((d.lower.clone(), d.upper.clone(), a, p));
        }
    }
    out.sort_by(|x, y| x.partial_cmp(y).unwrap());
    out
}

proptest! {
    #[test]
    fn p_loss_decreases_with_detuning(
        omega in 1e2..1e7f64,
        r in 0.01..10.0f64,
        d1 in 0.0..1e8f64,
        extra in 1e-3..1e8f64,
    ) {
        p_loss_monotone_in_detuning(omega, r, d1, extra)?;
    }

    #[test]
    fn p_loss_increases_with_ratio(omega in 1e2..1e7f64, d in 1.0..1e8f64, r in 0.0..10.0f64, extra in 1e-3..10.0f64) {
        prop_assert!(p_loss(omega, d, r + extra).unwrap() >= p_loss(omega, d, r).unwrap());
    }

    #[test]
    fn audit_matches_brute_force(
        (primary, lines) in line_set(),
        t in 1e-6..1e-3f64,
        purity in prop_oneof![Just(1.0), 0.5..1.0f64],
    ) {
        let model = LossModel { t_half_pi: t, purity, p_loss_max: 1e-3, s_min: 0.0 };
        let idx = LineIndex::new(&primary, lines.clone());
        let pop: Vec<&str> = primary.iter().map(String::as_str).collect();
        let got = audit_lines(&idx, &pop, &lines, &model).unwrap();
        let mut got: Vec<_> = got.into_iter().map(|e| (e.drive_lower, e.drive_upper, e.spectator, e.p_loss)).collect();
        got.sort_by(|x, y| x.partial_cmp(y).unwrap());
        let want = oracle_audit(&primary, &lines, &lines, &model);
        prop_assert_eq!(got.len(), want.len());
        for (g, w) in got.iter().zip(&want) {
            prop_assert_eq!((&g.0, &g.1, &g.2), (&w.0, &w.1, &w.2));
            prop_assert!((g.3 - w.3).abs() <= 1e-15 * w.3.max(1e-300), "{} vs {}", g.3, w.3);
        }
    }

    #[test]
    fn pure_polarization_ignores_cross_polarized_spectators((primary, lines) in line_set(), t in 1e-6..1e-3f64) {
        let model = LossModel { t_half_pi: t, purity: 1.0, p_loss_max: 1e-3, s_min: 0.0 };
        let idx = LineIndex::new(&primary, lines.clone());
        let pop: Vec<&str> = primary.iter().map(String::as_str).collect();
        for e in audit_lines(&idx, &pop, &lines, &model).unwrap() {
            let d = lines.iter().find(|l| l.lower == e.drive_lower && l.upper == e.drive_upper).unwrap();
            let same_pol = lines.iter().any(|s| s.upper == e.spectator && pop.contains(&s.lower.as_str()) && s.pol == d.pol);
            if !same_pol {
                prop_assert_eq!(e.p_loss, 0.0);
            }
        }
    }

    #[test]
    fn greedy_selection_passes_full_audit(
        (primary, lines) in line_set(),
        t in 1e-6..1e-3f64,
        p_max in 1e-4..1e-1f64,
        purity in 0.5..1.0f64,
    ) {
        let model = LossModel { t_half_pi: t, purity, p_loss_max: p_max, s_min: 0.05 };
        let idx = LineIndex::new(&primary, lines.clone());
        let sel = select(&idx, &model, &[]).unwrap();
        prop_assert_eq!(&sel.primary[0], &primary[0]);
        let pop: Vec<&str> = sel.primary.iter().map(String::as_str).collect();
        for e in oracle_audit(&sel.primary, &lines, &sel.drives, &model) {
            prop_assert!(e.3 <= p_max, "accepted set loses {} > {}", e.3, p_max);
        }
        let full = audit_lines(&idx, &pop, &sel.drives, &model).unwrap();
        prop_assert_eq!(full, sel.audit);
        // every accepted level beyond the seed is reached by a strong drive
        for p in sel.primary.iter().skip(1) {
            prop_assert!(sel.drives.iter().any(|d| &d.lower == p && d.strength >= model.s_min));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn reaudit_is_idempotent(spec in synthetic_spec(), b in 1.0..200.0f64, i in 0.0..10.0f64, t in 1e-5..1e-3f64) {
        reaudit_idempotent(&spec, b, i, t)?;
    }
}
