//! Two-photon microwave gates on a qudit and their compilation into pulses.
//!
//! Gates act between primary levels k and l through a common auxiliary
//! level c. A resonant two-tone square pulse of duration 2π/Ω̃ returns all
//! population to the primary manifold. A single tone for π/Ω gives Q_k, and
//! two of those give a phase gate.
//!
//! Matrices here use the level order (c, k, l) for three-level operators and
//! (k, l) for the effective two-level gate.

use std::collections::VecDeque;
use std::f64::consts::PI;

use nalgebra::{DMatrix, Matrix2, Matrix3};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hamiltonian::normalize_label;
use crate::search::QuditPlan;
use crate::transitions::Polarization;

pub type CMatrix = DMatrix<Complex64>;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);
const I: Complex64 = Complex64::new(0.0, 1.0);

/// Where the common level sits relative to the primary manifold.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CommonLevel {
    /// Common level in N−1.
    Below,
    /// Common level in N+1; the effective phase becomes 2π−φ.
    Above,
}

/// Resonant three-level evolution in basis (c, k, l).
///
/// `omega_kc`, `omega_lc` are Rabi frequencies (rad/s) and `t` the elapsed
/// time (s). Requires Ω̃ = √(Ω_kc² + Ω_lc²) > 0.
pub fn evolve_three_level(omega_kc: f64, omega_lc: f64, phi_kc: f64, phi_lc: f64, t: f64) -> Result<Matrix3<Complex64>> {
    let w = omega_kc.hypot(omega_lc);
    if !(w > 0.0) || !w.is_finite() {
        return Err(Error::InvalidArgument(format!("total Rabi frequency must be positive, got {w}")));
    }
    let (s, c) = (w * t / 2.0).sin_cos();
    let (a, b) = (omega_kc, omega_lc);
    let ek = Complex64::from_polar(1.0, phi_kc);
    let el = Complex64::from_polar(1.0, phi_lc);
    let ekl = Complex64::from_polar(1.0, phi_kc - phi_lc);
    let w2 = w * w;
    Ok(Matrix3::new(
        Complex64::from(c),
        -I * ek * (a * s / w),
        -I * el * (b * s / w),
        -I * ek.conj() * (a * s / w),
        Complex64::from((b * b + a * a * c) / w2),
        ekl.conj() * (a * b * (c - 1.0) / w2),
        -I * el.conj() * (b * s / w),
        ekl * (a * b * (c - 1.0) / w2),
        Complex64::from((a * a + b * b * c) / w2),
    ))
}

/// Effective gate 𝒰_{k,l}(ζ, φ) on (k, l) after a full 2π/Ω̃ pulse.
///
/// ζ = Ω_kc/Ω_lc and φ = φ_kc − φ_lc. With the common level above, the
/// pulse realizes the matrix for 2π − φ.
pub fn two_photon_gate(zeta: f64, phi: f64, direction: CommonLevel) -> Result<Matrix2<Complex64>> {
    if !(zeta > 0.0) || !zeta.is_finite() {
        return Err(Error::InvalidArgument(format!("zeta must be positive, got {zeta}")));
    }
    let phi = match direction {
        CommonLevel::Below => phi,
        CommonLevel::Above => 2.0 * PI - phi,
    };
    let n = zeta * zeta + 1.0;
    let diag = 2.0 / n - 1.0;
    let off = -2.0 * zeta / n;
    Ok(Matrix2::new(
        Complex64::from(diag),
        Complex64::from_polar(off, -phi),
        Complex64::from_polar(off, phi),
        Complex64::from(-diag),
    ))
}

/// Single-tone π pulse Q_k(φ) in basis (c, k, l).
pub fn q_pulse(phi: f64) -> Matrix3<Complex64> {
    let e = Complex64::from_polar(1.0, phi);
    Matrix3::new(ZERO, -I * e, ZERO, -I * e.conj(), ZERO, ZERO, ZERO, ZERO, ONE)
}

/// Phase gate R_k(φ) = Q_k(π−φ) Q_k(0); diag(e^{−iφ}, e^{iφ}, 1) on (c, k, l).
pub fn phase_gate(phi: f64) -> Matrix3<Complex64> {
    q_pulse(PI - phi) * q_pulse(0.0)
}

/// max |(U†U − 𝟙)_ij|.
pub fn unitarity_error(u: &CMatrix) -> f64 {
    let d = u.adjoint() * u - CMatrix::identity(u.nrows(), u.ncols());
    d.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Divide by the phase of the first entry (column-major) with modulus
/// above 1e-9, so matrices equal up to a global phase compare equal.
pub fn fix_global_phase(u: &CMatrix) -> CMatrix {
    match u.iter().find(|z| z.norm() > 1e-9) {
        Some(z) => u * (z.conj() / z.norm()),
        None => u.clone(),
    }
}

/// max |a − e^{iθ} b| for the θ fixed by [`fix_global_phase`].
pub fn phase_distance(a: &CMatrix, b: &CMatrix) -> f64 {
    if a.shape() != b.shape() {
        return f64::INFINITY;
    }
    (fix_global_phase(a) - fix_global_phase(b))
        .iter()
        .map(|z| z.norm())
        .fold(0.0, f64::max)
}

/// A unitary on a named set of levels.
#[derive(Clone, Debug, PartialEq)]
pub struct GateUnitary {
    pub matrix: CMatrix,
    pub levels: Vec<String>,
    pub origin: String,
}

impl GateUnitary {
    pub fn dimension(&self) -> usize {
        self.levels.len()
    }

    pub fn unitarity_error(&self) -> f64 {
        unitarity_error(&self.matrix)
    }

    /// Restrict to `levels` (in that order).
    pub fn restrict(&self, levels: &[String]) -> Result<CMatrix> {
        let idx = levels
            .iter()
            .map(|l| self.position(l).ok_or_else(|| Error::UnknownLevel(l.clone())))
            .collect::<Result<Vec<_>>>()?;
        Ok(CMatrix::from_fn(idx.len(), idx.len(), |i, j| self.matrix[(idx[i], idx[j])]))
    }

    fn position(&self, label: &str) -> Option<usize> {
        let l = normalize_label(label);
        self.levels.iter().position(|x| normalize_label(x) == l)
    }
}

/// Abstract gates on plan primary levels, addressed by label.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Gate {
    /// 𝒰_{k,l}(ζ, φ).
    TwoPhoton { k: String, l: String, zeta: f64, phi: f64 },
    /// R_k(φ).
    Phase { k: String, phi: f64 },
}

impl Gate {
    pub fn hadamard(k: &str, l: &str) -> Self {
        Gate::TwoPhoton {
            k: k.into(),
            l: l.into(),
            zeta: 2f64.sqrt() - 1.0,
            phi: PI,
        }
    }

    pub fn x(k: &str, l: &str) -> Self {
        Gate::TwoPhoton {
            k: k.into(),
            l: l.into(),
            zeta: 1.0,
            phi: PI,
        }
    }

    /// Matrix on `levels`, identity outside the gate's own levels.
    pub fn matrix(&self, levels: &[String]) -> Result<CMatrix> {
        let find = |x: &str| {
            let n = normalize_label(x);
            levels
                .iter()
                .position(|l| normalize_label(l) == n)
                .ok_or_else(|| Error::UnknownLevel(x.to_string()))
        };
        let mut m = CMatrix::identity(levels.len(), levels.len());
        match self {
            Gate::TwoPhoton { k, l, zeta, phi } => {
                let (i, j) = (find(k)?, find(l)?);
                if i == j {
                    return Err(Error::InvalidArgument(format!("gate needs two distinct levels, got {k} twice")));
                }
                let u = two_photon_gate(*zeta, *phi, CommonLevel::Below)?;
                m[(i, i)] = u[(0, 0)];
                m[(i, j)] = u[(0, 1)];
                m[(j, i)] = u[(1, 0)];
                m[(j, j)] = u[(1, 1)];
            }
            Gate::Phase { k, phi } => {
                let i = find(k)?;
                m[(i, i)] = Complex64::from_polar(1.0, *phi);
            }
        }
        Ok(m)
    }

    pub fn name(&self) -> String {
        match self {
            Gate::TwoPhoton { k, l, zeta, phi } => format!("U[{k},{l}]({zeta:.6},{phi:.6})"),
            Gate::Phase { k, phi } => format!("R[{k}]({phi:.6})"),
        }
    }
}

/// One microwave tone resonant with a plan transition.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tone {
    /// Primary level addressed by this tone.
    pub level: String,
    pub common: String,
    pub frequency_mhz: f64,
    /// Rabi frequency, rad/s.
    pub rabi: f64,
    /// Microwave phase, rad in [0, 2π).
    pub phase: f64,
    pub pol: Polarization,
}

/// A square pulse of one or two simultaneous tones sharing a common level.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Pulse {
    pub tones: Vec<Tone>,
    pub direction: CommonLevel,
    /// Seconds.
    pub duration: f64,
    /// Abstract gate this pulse belongs to.
    pub gate: String,
}

impl Pulse {
    /// Unitary in basis (c, k[, l]).
    pub fn unitary(&self) -> Result<CMatrix> {
        let sgn = match self.direction {
            CommonLevel::Below => 1.0,
            CommonLevel::Above => -1.0,
        };
        match self.tones.as_slice() {
            [k] => {
                let u = evolve_three_level(k.rabi, 0.0, sgn * k.phase, 0.0, self.duration)?;
                Ok(CMatrix::from_fn(2, 2, |i, j| u[(i, j)]))
            }
            [k, l] => {
                if k.common != l.common {
                    return Err(Error::Plan("tones of one pulse must share the common level".into()));
                }
                let u = evolve_three_level(k.rabi, l.rabi, sgn * k.phase, sgn * l.phase, self.duration)?;
                Ok(CMatrix::from_fn(3, 3, |i, j| u[(i, j)]))
            }
            _ => Err(Error::Plan(format!("pulse has {} tones", self.tones.len()))),
        }
    }

    fn levels(&self) -> Vec<&str> {
        let mut v = vec![self.tones[0].common.as_str()];
        v.extend(self.tones.iter().map(|t| t.level.as_str()));
        v
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PulseSequence {
    /// Pulses in time order.
    pub pulses: Vec<Pulse>,
}

impl PulseSequence {
    pub fn total_duration(&self) -> f64 {
        self.pulses.iter().map(|p| p.duration).sum()
    }

    pub fn extend(&mut self, other: PulseSequence) {
        self.pulses.extend(other.pulses);
    }

    /// Product of pulse unitaries on `levels`, which must contain every
    /// level a pulse touches.
    pub fn unitary(&self, levels: &[String]) -> Result<GateUnitary> {
        let norm: Vec<String> = levels.iter().map(|l| normalize_label(l)).collect();
        let mut u = CMatrix::identity(levels.len(), levels.len());
        for p in &self.pulses {
            let idx = p
                .levels()
                .iter()
                .map(|l| {
                    let n = normalize_label(l);
                    norm.iter().position(|x| *x == n).ok_or_else(|| Error::UnknownLevel(l.to_string()))
                })
                .collect::<Result<Vec<_>>>()?;
            let small = p.unitary()?;
            let mut full = CMatrix::identity(levels.len(), levels.len());
            for (a, &i) in idx.iter().enumerate() {
                for (b, &j) in idx.iter().enumerate() {
                    full[(i, j)] = small[(a, b)];
                }
            }
            u = full * u;
        }
        Ok(GateUnitary {
            matrix: u,
            levels: levels.to_vec(),
            origin: format!("{} pulses", self.pulses.len()),
        })
    }

    /// CSV `step,tone,frequency_MHz,rabi_Hz,phase_rad,polarization,duration_s`;
    /// rabi_Hz is Ω/2π.
    pub fn to_csv(&self) -> String {
        let header = [
            "step",
            "tone",
            "frequency_MHz",
            "rabi_Hz",
            "phase_rad",
            "polarization",
            "duration_s",
        ];
        let rows = self.pulses.iter().enumerate().flat_map(|(s, p)| {
            p.tones.iter().enumerate().map(move |(t, tone)| {
                vec![
                    (s + 1).to_string(),
                    (t + 1).to_string(),
                    format!("{:.6}", tone.frequency_mhz),
                    format!("{:.6}", tone.rabi / (2.0 * PI)),
                    format!("{:.9}", tone.phase),
                    tone.pol.to_string(),
                    format!("{:.9e}", p.duration),
                ]
            })
        });
        crate::io::csv_table(&header, rows)
    }
}

fn wrap_phase(phi: f64) -> f64 {
    let p = phi.rem_euclid(2.0 * PI);
    // rem_euclid can round up to exactly 2π
    if p >= 2.0 * PI {
        0.0
    } else {
        p
    }
}

/// Compiles abstract gates against a plan's transitions.
#[derive(Clone, Debug)]
pub struct Compiler<'a> {
    plan: &'a QuditPlan,
    direction: CommonLevel,
    rabi_max: f64,
}

impl<'a> Compiler<'a> {
    pub fn new(plan: &'a QuditPlan) -> Self {
        let direction = if plan.aux_n < plan.primary_n {
            CommonLevel::Below
        } else {
            CommonLevel::Above
        };
        Compiler {
            plan,
            direction,
            rabi_max: plan.model.omega(),
        }
    }

    pub fn direction(&self) -> CommonLevel {
        self.direction
    }

    /// Cap on each tone's Rabi frequency, rad/s.
    pub fn rabi_max(&self) -> f64 {
        self.rabi_max
    }

    /// Primary levels followed by auxiliaries; the basis used for verification.
    pub fn levels(&self) -> Vec<String> {
        self.plan.primary.iter().chain(self.plan.auxiliary.iter()).cloned().collect()
    }

    fn canonical(&self, label: &str) -> Result<String> {
        self.plan
            .primary_index(label)
            .map(|i| self.plan.primary[i].clone())
            .ok_or_else(|| Error::UnknownLevel(label.to_string()))
    }

    fn tone(&self, level: &str, common: &str, rabi: f64, phase: f64) -> Result<Tone> {
        let line = self
            .plan
            .transition(level, common)
            .ok_or_else(|| Error::Plan(format!("no plan transition {level} -> {common}")))?;
        Ok(Tone {
            level: level.to_string(),
            common: common.to_string(),
            frequency_mhz: line.frequency,
            rabi,
            phase: wrap_phase(phase),
            pol: line.pol,
        })
    }

    /// Physical phase to program for an abstract phase.
    fn physical_phase(&self, phi: f64) -> f64 {
        match self.direction {
            CommonLevel::Below => phi,
            CommonLevel::Above => 2.0 * PI - phi,
        }
    }

    fn direct(&self, k: &str, l: &str, c: &str, zeta: f64, phi: f64, gate: &str) -> Result<Pulse> {
        // the larger tone sits at the cap
        let (om_k, om_l) = if zeta <= 1.0 {
            (zeta * self.rabi_max, self.rabi_max)
        } else {
            (self.rabi_max, self.rabi_max / zeta)
        };
        let w = om_k.hypot(om_l);
        Ok(Pulse {
            tones: vec![self.tone(k, c, om_k, self.physical_phase(phi))?, self.tone(l, c, om_l, 0.0)?],
            direction: self.direction,
            duration: 2.0 * PI / w,
            gate: gate.to_string(),
        })
    }

    fn q(&self, k: &str, c: &str, phi: f64, gate: &str) -> Result<Pulse> {
        Ok(Pulse {
            tones: vec![self.tone(k, c, self.rabi_max, self.physical_phase(phi))?],
            direction: self.direction,
            duration: PI / self.rabi_max,
            gate: gate.to_string(),
        })
    }

    /// Shortest chain of primary levels from `k` to `l` through shared auxiliaries.
    pub fn route(&self, k: &str, l: &str) -> Result<Vec<String>> {
        let (k, l) = (self.canonical(k)?, self.canonical(l)?);
        let n = self.plan.primary.len();
        let ki = self.plan.primary_index(&k).expect("canonical label");
        let li = self.plan.primary_index(&l).expect("canonical label");
        let mut prev = vec![usize::MAX; n];
        prev[ki] = ki;
        let mut queue = VecDeque::from([ki]);
        while let Some(i) = queue.pop_front() {
            for j in 0..n {
                if prev[j] == usize::MAX && !self.plan.common_aux(&self.plan.primary[i], &self.plan.primary[j]).is_empty() {
                    prev[j] = i;
                    queue.push_back(j);
                }
            }
        }
        if prev[li] == usize::MAX {
            return Err(Error::RouteNotFound { from: k, to: l });
        }
        let mut path = vec![li];
        while *path.last().unwrap() != ki {
            path.push(prev[*path.last().unwrap()]);
        }
        path.reverse();
        Ok(path.into_iter().map(|i| self.plan.primary[i].clone()).collect())
    }

    /// Pulses for 𝒰_{k,l}(ζ, φ). Without a shared auxiliary the gate is routed
    /// through the chain k → m → … → l using 𝒰_{k,l}(ζ,φ) = 𝒰_{k,m}(1,0) 𝒰_{m,l}(ζ,φ−π) 𝒰_{k,m}(1,0).
    fn two_photon(&self, k: &str, l: &str, zeta: f64, phi: f64, gate: &str) -> Result<PulseSequence> {
        if !(zeta > 0.0) || !zeta.is_finite() {
            return Err(Error::InvalidArgument(format!("zeta must be positive, got {zeta}")));
        }
        let path = self.route(k, l)?;
        if path.len() < 2 {
            return Err(Error::InvalidArgument(format!("gate needs two distinct levels, got {k} twice")));
        }
        if path.len() == 2 {
            let c = self.plan.common_aux(&path[0], &path[1])[0].to_string();
            let p = self.direct(&path[0], &path[1], &c, zeta, phi, gate)?;
            return Ok(PulseSequence { pulses: vec![p] });
        }
        let (k, m) = (&path[0], &path[1]);
        let swap = self.two_photon(k, m, 1.0, 0.0, gate)?;
        let mut seq = swap.clone();
        seq.extend(self.two_photon(m, &path[path.len() - 1], zeta, phi - PI, gate)?);
        seq.extend(swap);
        Ok(seq)
    }

    pub fn compile(&self, gate: &Gate) -> Result<PulseSequence> {
        let name = gate.name();
        match gate {
            Gate::TwoPhoton { k, l, zeta, phi } => self.two_photon(k, l, *zeta, *phi, &name),
            Gate::Phase { k, phi } => {
                let k = self.canonical(k)?;
                let c = self
                    .plan
                    .auxiliary
                    .iter()
                    .find(|c| self.plan.transition(&k, c).is_some())
                    .ok_or_else(|| Error::Plan(format!("{k} has no auxiliary transition")))?;
                Ok(PulseSequence {
                    pulses: vec![self.q(&k, c, 0.0, &name)?, self.q(&k, c, PI - phi, &name)?],
                })
            }
        }
    }

    /// Compile and check the pulse product against the abstract gate on the
    /// primary levels, up to global phase. Returns the sequence and the
    /// residual distance.
    pub fn compile_verified(&self, gate: &Gate, tol: f64) -> Result<(PulseSequence, f64)> {
        let seq = self.compile(gate)?;
        let levels = self.levels();
        let u = seq.unitary(&levels)?;
        let got = u.restrict(&self.plan.primary)?;
        let want = gate.matrix(&self.plan.primary)?;
        let d = phase_distance(&got, &want);
        if !(d <= tol) {
            return Err(Error::Plan(format!("compiled {} deviates from target by {d:.3e}", gate.name())));
        }
        Ok((seq, d))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hamiltonian::FieldPoint;
    use crate::search::{LossModel, QuditPlan, PLAN_VERSION};
    use crate::transitions::TransitionLine;

    fn m2(u: Matrix2<Complex64>) -> CMatrix {
        CMatrix::from_fn(2, 2, |i, j| u[(i, j)])
    }

    fn close(a: Complex64, b: Complex64) -> bool {
        (a - b).norm() < 1e-12
    }

    #[test]
    fn three_level_identity_at_zero() {
        let u = evolve_three_level(1.3, 0.4, 0.2, 1.1, 0.0).unwrap();
        assert!((u - Matrix3::identity()).iter().all(|z| z.norm() < 1e-15));
        assert!(evolve_three_level(0.0, 0.0, 0.0, 0.0, 1.0).is_err());
    }

    #[test]
    fn single_tone_pi_pulse_is_q() {
        let om = 2.0 * PI * 50e3;
        let u = evolve_three_level(om, 0.0, 0.7, 0.0, PI / om).unwrap();
        assert!((u - q_pulse(0.7)).iter().all(|z| z.norm() < 1e-12));
    }

    #[test]
    fn full_pulse_matches_two_photon_gate() {
        let (a, b, pk, pl) = (0.8, 1.9, 2.3, 0.4);
        let w = f64::hypot(a, b);
        let u = evolve_three_level(a, b, pk, pl, 2.0 * PI / w).unwrap();
        let g = two_photon_gate(a / b, pk - pl, CommonLevel::Below).unwrap();
        assert!(close(u[(0, 0)], -ONE));
        for i in 0..2 {
            for j in 0..2 {
                assert!(close(u[(i + 1, j + 1)], g[(i, j)]), "{i}{j}");
            }
        }
    }

    #[test]
    fn named_gates() {
        let x = two_photon_gate(1.0, PI, CommonLevel::Below).unwrap();
        assert!(close(x[(0, 0)], ZERO) && close(x[(0, 1)], ONE) && close(x[(1, 0)], ONE));
        let h = two_photon_gate(2f64.sqrt() - 1.0, PI, CommonLevel::Below).unwrap();
        let r = 0.5f64.sqrt();
        assert!(close(h[(0, 0)], r.into()) && close(h[(0, 1)], r.into()) && close(h[(1, 1)], (-r).into()));
        let z = two_photon_gate(1e-9, 0.3, CommonLevel::Below).unwrap();
        assert!((z[(0, 0)] - ONE).norm() < 1e-8 && (z[(1, 1)] + ONE).norm() < 1e-8);
        assert!(two_photon_gate(0.0, 0.0, CommonLevel::Below).is_err());
    }

    #[test]
    fn common_above_reflects_phase() {
        let a = two_photon_gate(0.6, 0.9, CommonLevel::Above).unwrap();
        let b = two_photon_gate(0.6, 2.0 * PI - 0.9, CommonLevel::Below).unwrap();
        assert!((a - b).iter().all(|z| z.norm() < 1e-15));
    }

    #[test]
    fn phase_gate_closed_form() {
        let r = phase_gate(PI / 2.0);
        assert!(close(r[(1, 1)], I) && close(r[(0, 0)], -I) && close(r[(2, 2)], ONE));
        let id = phase_gate(0.3) * phase_gate(-0.3);
        assert!((id - Matrix3::identity()).iter().all(|z| z.norm() < 1e-12));
        assert!((phase_gate(0.0) - Matrix3::identity()).iter().all(|z| z.norm() < 1e-12));
    }

    #[test]
    fn global_phase_is_ignored() {
        let h = m2(two_photon_gate(0.4, 1.0, CommonLevel::Below).unwrap());
        let g = &h * Complex64::from_polar(1.0, 2.1);
        assert!(phase_distance(&h, &g) < 1e-14);
        assert!(phase_distance(&h, &m2(two_photon_gate(0.4, 1.1, CommonLevel::Below).unwrap())) > 1e-3);
    }

    fn line(p: &str, c: &str, f: f64) -> TransitionLine {
        TransitionLine {
            lower: c.into(),
            upper: p.into(),
            frequency: f,
            pol: Polarization::Pi,
            dipole: 1.0,
            strength: 1.0,
        }
    }

    /// a–b share c1, b–d share c2; a and d are only connected through b.
    fn chain_plan() -> QuditPlan {
        let mut plan = QuditPlan {
            version: PLAN_VERSION,
            molecule: "test".into(),
            field: FieldPoint::new(0.0, 0.0),
            primary_n: 1,
            aux_n: 0,
            model: LossModel::new(1e-3, 1e-3),
            primary: vec!["a".into(), "b".into(), "d".into()],
            auxiliary: vec!["c1".into(), "c2".into()],
            transitions: vec![
                line("a", "c1", 10.0),
                line("b", "c1", 11.0),
                line("b", "c2", 12.0),
                line("d", "c2", 13.0),
            ],
            links: Vec::new(),
            audit: Vec::new(),
            worst_p_loss: 0.0,
            diagnostics: Vec::new(),
        };
        plan.links = vec![
            crate::search::Link {
                a: "a".into(),
                b: "b".into(),
                via: "c1".into(),
            },
            crate::search::Link {
                a: "b".into(),
                b: "d".into(),
                via: "c2".into(),
            },
        ];
        plan
    }

    #[test]
    fn direct_gate_compiles_to_one_pulse() {
        let plan = chain_plan();
        let c = Compiler::new(&plan);
        let (seq, d) = c.compile_verified(&Gate::hadamard("a", "b"), 1e-10).unwrap();
        assert_eq!(seq.pulses.len(), 1);
        assert!(d < 1e-12);
        let w = c.rabi_max() * (1.0 + (2f64.sqrt() - 1.0).powi(2)).sqrt();
        assert!((seq.total_duration() - 2.0 * PI / w).abs() < 1e-15);
    }

    #[test]
    fn routed_gate_is_exact() {
        let plan = chain_plan();
        let c = Compiler::new(&plan);
        assert_eq!(c.route("a", "d").unwrap(), ["a", "b", "d"]);
        for g in [
            Gate::hadamard("a", "d"),
            Gate::hadamard("d", "a"),
            Gate::TwoPhoton {
                k: "a".into(),
                l: "d".into(),
                zeta: 1.7,
                phi: 0.3,
            },
        ] {
            let (seq, d) = c.compile_verified(&g, 1e-10).unwrap();
            assert_eq!(seq.pulses.len(), 3);
            assert!(d < 1e-12, "{d}");
        }
    }

    #[test]
    fn phase_gate_compiles() {
        let plan = chain_plan();
        let c = Compiler::new(&plan);
        let (seq, _) = c.compile_verified(&Gate::Phase { k: "b".into(), phi: 0.8 }, 1e-12).unwrap();
        assert_eq!(seq.pulses.len(), 2);
        assert!((seq.pulses[0].duration - PI / c.rabi_max()).abs() < 1e-18);
    }

    #[test]
    fn disconnected_pair_has_no_route() {
        let mut plan = chain_plan();
        plan.transitions.retain(|l| l.lower != "c2");
        plan.auxiliary.truncate(1);
        plan.links.truncate(1);
        let c = Compiler::new(&plan);
        assert!(matches!(c.compile(&Gate::x("a", "d")), Err(Error::RouteNotFound { .. })));
    }

    #[test]
    fn schedule_csv_header() {
        let plan = chain_plan();
        let seq = Compiler::new(&plan).compile(&Gate::x("a", "b")).unwrap();
        let csv = seq.to_csv();
        assert!(csv.starts_with("step,tone,frequency_MHz,rabi_Hz,phase_rad,polarization,duration_s\n"));
        assert_eq!(csv.lines().count(), 3);
    }
}
