//! Coherence times and first-order error budgets for compiled circuits.
//!
//! Components are added linearly: total = decoherence + off-resonant loss +
//! frequency error. The motional-state contribution is listed for reference
//! and left out of the total.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gates::PulseSequence;
use crate::hamiltonian::{EigenLevel, Spectrum};
use crate::molecule::MoleculeSpec;
use crate::search::QuditPlan;

/// Fixed bound on motional-state gate errors, not modeled.
pub const MOTIONAL_ERROR_BOUND: f64 = 0.01;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    /// RMS magnetic-field noise, G.
    pub db_gauss: f64,
    /// RMS intensity noise as a fraction of the working intensity.
    pub di_fraction: f64,
    /// Field-independent decoherence rate (blackbody, spontaneous), Hz.
    pub external_rate_hz: f64,
}

impl NoiseSpec {
    pub fn from_spec(spec: &MoleculeSpec) -> Self {
        NoiseSpec {
            db_gauss: spec.defaults.noise_b_gauss,
            di_fraction: spec.defaults.noise_intensity_fraction,
            external_rate_hz: spec.external_rate_hz,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("magnetic noise", self.db_gauss),
            ("intensity noise", self.di_fraction),
            ("external rate", self.external_rate_hz),
        ] {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(Error::InvalidArgument(format!("{name} must be non-negative, got {v}")));
            }
        }
        Ok(())
    }
}

/// Worst pair of a level set under one noise source.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Coherence {
    /// Seconds; `None` when the pair splitting has no first-order sensitivity.
    pub tau_s: Option<f64>,
    pub pair: (String, String),
    /// Splitting fluctuation, Hz.
    pub delta_hz: f64,
}

fn worst_pair(levels: &[&EigenLevel], key: impl Fn(&EigenLevel) -> f64) -> Result<(f64, (String, String))> {
    if levels.len() < 2 {
        return Err(Error::InvalidArgument("need at least two levels".into()));
    }
    let mut best = (-1.0, (String::new(), String::new()));
    for (i, a) in levels.iter().enumerate() {
        for b in &levels[i + 1..] {
            let d = (key(a) - key(b)).abs();
            if d.is_nan() {
                return Err(Error::InvalidArgument(format!(
                    "derivatives missing for {} or {}",
                    a.name(),
                    b.name()
                )));
            }
            if d > best.0 {
                best = (d, (a.name(), b.name()));
            }
        }
    }
    Ok(best)
}

/// τ = 1/(max |∂E_a/∂I − ∂E_b/∂I| ΔI) over the level set.
///
/// Levels all in N=0 have no first-order differential shift; τ is then
/// reported as `None`.
pub fn coherence_time_stark(levels: &[&EigenLevel], di_kw_cm2: f64) -> Result<Coherence> {
    let (slope, pair) = worst_pair(levels, |l| l.dedi)?;
    let delta_hz = slope * 1e6 * di_kw_cm2;
    let tau_s = if levels.iter().all(|l| l.label.n == 0) || delta_hz == 0.0 {
        None
    } else {
        Some(1.0 / delta_hz)
    };
    Ok(Coherence { tau_s, pair, delta_hz })
}

/// Crude bound h/(α⁽²⁾ΔI), s.
pub fn stark_bound(spec: &MoleculeSpec, di_kw_cm2: f64) -> f64 {
    1.0 / (spec.alpha2().abs() * 1e6 * di_kw_cm2)
}

/// τ = 1/(max |μ_a − μ_b| ΔB) over the level set.
pub fn coherence_time_magnetic(levels: &[&EigenLevel], db_gauss: f64) -> Result<Coherence> {
    let (dmu, pair) = worst_pair(levels, |l| l.mu)?;
    let delta_hz = dmu * 1e6 * db_gauss;
    Ok(Coherence {
        tau_s: (delta_hz > 0.0).then(|| 1.0 / delta_hz),
        pair,
        delta_hz,
    })
}

/// Δf²/Ω² for a π/2 time `t_half_pi` (s) and a line whose frequency moves
/// by `slope` MHz per kW cm⁻² under intensity noise `di_kw_cm2`.
pub fn gate_frequency_error(t_half_pi: f64, slope: f64, di_kw_cm2: f64) -> f64 {
    let f_hz = slope.abs() * 1e6 * di_kw_cm2;
    (4.0 * t_half_pi * f_hz).powi(2)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BudgetLine {
    pub component: String,
    pub value: f64,
    pub formula: String,
    pub inputs: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErrorBudget {
    pub total_time_s: f64,
    pub stark: Coherence,
    pub stark_bound_s: f64,
    pub magnetic: Coherence,
    pub tau_external_s: Option<f64>,
    pub tau_d_s: Option<f64>,
    pub decoherence: f64,
    pub off_resonant: f64,
    /// Largest single-pulse frequency error.
    pub frequency_per_gate: f64,
    pub frequency: f64,
    pub total: f64,
}

impl ErrorBudget {
    pub fn lines(&self) -> Vec<BudgetLine> {
        let line = |c: &str, v: f64, f: &str, i: String| BudgetLine {
            component: c.into(),
            value: v,
            formula: f.into(),
            inputs: i,
        };
        let inf = |t: Option<f64>| t.unwrap_or(f64::INFINITY);
        vec![
            line(
                "tau_stark_s",
                inf(self.stark.tau_s),
                "1/(max|dE_a/dI-dE_b/dI|*dI)",
                match self.stark.tau_s {
                    Some(_) => format!("pair {}/{}; {:.3e} Hz", self.stark.pair.0, self.stark.pair.1, self.stark.delta_hz),
                    None => "N=0 levels; no first-order differential shift".into(),
                },
            ),
            line("tau_stark_bound_s", self.stark_bound_s, "1/(alpha2*dI)", String::new()),
            line(
                "tau_magnetic_s",
                inf(self.magnetic.tau_s),
                "1/(max|mu_a-mu_b|*dB)",
                format!(
                    "pair {}/{}; {:.3e} Hz",
                    self.magnetic.pair.0, self.magnetic.pair.1, self.magnetic.delta_hz
                ),
            ),
            line("tau_external_s", inf(self.tau_external_s), "1/rate", String::new()),
            line("tau_d_s", inf(self.tau_d_s), "min(tau)", String::new()),
            line(
                "decoherence",
                self.decoherence,
                "t_tot/tau_d",
                format!("t_tot {:.6e} s", self.total_time_s),
            ),
            line(
                "off_resonant",
                self.off_resonant,
                "sum over pulses of worst audited p_loss",
                String::new(),
            ),
            line(
                "frequency_per_gate",
                self.frequency_per_gate,
                "(4*t_half_pi*df)^2",
                "worst pulse".into(),
            ),
            line("frequency", self.frequency, "sum over pulses of (4*t_half_pi*df)^2", String::new()),
            line("total", self.total, "decoherence+off_resonant+frequency", String::new()),
            line(
                "motional",
                MOTIONAL_ERROR_BOUND,
                "fixed bound, not modeled, excluded from total",
                String::new(),
            ),
        ]
    }

    /// CSV `component,value,formula,inputs`.
    pub fn to_csv(&self) -> String {
        let rows = self
            .lines()
            .into_iter()
            .map(|l| vec![l.component, format!("{:.6e}", l.value), l.formula, l.inputs]);
        crate::io::csv_table(&["component", "value", "formula", "inputs"], rows)
    }

    pub fn to_table(&self) -> String {
        let mut s = String::new();
        for l in self.lines() {
            s.push_str(&format!("{:<20} {:>12.4e}  {}\n", l.component, l.value, l.formula));
        }
        s
    }
}

/// Budget for a compiled schedule on a plan. `spectrum` must be the
/// diagonalization (with derivatives) at the plan's field point.
pub fn circuit_budget(
    spectrum: &Spectrum,
    spec: &MoleculeSpec,
    plan: &QuditPlan,
    schedule: &PulseSequence,
    noise: &NoiseSpec,
) -> Result<ErrorBudget> {
    noise.validate()?;
    if plan.audit.is_empty() && plan.transitions.len() > 1 {
        return Err(Error::Plan("plan carries no loss audit".into()));
    }
    let di = noise.di_fraction * spectrum.field.intensity;
    let levels = plan.primary.iter().map(|l| spectrum.find(l)).collect::<Result<Vec<_>>>()?;
    let stark = coherence_time_stark(&levels, di)?;
    let magnetic = coherence_time_magnetic(&levels, noise.db_gauss)?;
    let tau_external_s = (noise.external_rate_hz > 0.0).then(|| 1.0 / noise.external_rate_hz);
    let tau_d_s = [stark.tau_s, magnetic.tau_s, tau_external_s].into_iter().flatten().reduce(f64::min);

    let mut off_resonant = 0.0;
    let mut frequency = 0.0;
    let mut frequency_per_gate = 0.0f64;
    for p in &schedule.pulses {
        let mut worst = 0.0f64;
        let mut slope = 0.0f64;
        for t in &p.tones {
            let line = plan
                .transition(&t.level, &t.common)
                .ok_or_else(|| Error::Plan(format!("pulse tone {} -> {} is not a plan transition", t.level, t.common)))?;
            worst = plan
                .audit
                .iter()
                .filter(|e| e.drive_lower == line.lower && e.drive_upper == line.upper)
                .map(|e| e.p_loss)
                .fold(worst, f64::max);
            let d = spectrum.find(&line.upper)?.dedi - spectrum.find(&line.lower)?.dedi;
            slope = slope.max(d.abs());
        }
        off_resonant += worst;
        let e = gate_frequency_error(plan.model.t_half_pi, slope, di);
        frequency += e;
        frequency_per_gate = frequency_per_gate.max(e);
    }
    let total_time_s = schedule.total_duration();
    let decoherence = tau_d_s.map_or(0.0, |t| total_time_s / t);
    Ok(ErrorBudget {
        total_time_s,
        stark,
        stark_bound_s: stark_bound(spec, di),
        magnetic,
        tau_external_s,
        tau_d_s,
        decoherence,
        off_resonant,
        frequency_per_gate,
        frequency,
        total: decoherence + off_resonant + frequency,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::angmom::HalfInt;
    use crate::hamiltonian::LevelLabel;
    use nalgebra::DVector;

    fn level(n: u32, i: u32, mu: f64, dedi: f64) -> EigenLevel {
        EigenLevel {
            index: i as usize,
            label: LevelLabel {
                n,
                m_f: HalfInt::ZERO,
                i: i as usize,
                f: None,
                f_tag: None,
            },
            energy: 0.0,
            vector: DVector::zeros(1),
            mu,
            dedi,
        }
    }

    #[test]
    fn magnetic_time_scales_inversely() {
        let (a, b) = (level(1, 0, 1.0, 0.0), level(1, 1, 1.002, 0.0));
        let t1 = coherence_time_magnetic(&[&a, &b], 0.05).unwrap().tau_s.unwrap();
        let t2 = coherence_time_magnetic(&[&a, &b], 0.10).unwrap().tau_s.unwrap();
        assert!((t1 / t2 - 2.0).abs() < 1e-12);
        // 2 kHz/G at 50 mG
        assert!((t1 - 1.0 / 100.0).abs() < 1e-12);
    }

    #[test]
    fn n0_has_no_first_order_stark() {
        let (a, b) = (level(0, 0, 0.0, -0.1), level(0, 1, 0.0, -0.1));
        assert_eq!(coherence_time_stark(&[&a, &b], 0.01).unwrap().tau_s, None);
        let (c, d) = (level(1, 0, 0.0, -0.1), level(1, 1, 0.0, -0.099));
        let t = coherence_time_stark(&[&c, &d], 0.01).unwrap().tau_s.unwrap();
        assert!((t - 0.1).abs() < 1e-9);
    }

    #[test]
    fn single_level_is_rejected() {
        let a = level(0, 0, 0.0, 0.0);
        assert!(coherence_time_magnetic(&[&a], 1.0).is_err());
    }

    #[test]
    fn frequency_error_formula() {
        assert_eq!(gate_frequency_error(5e-6, 0.1, 0.0), 0.0);
        // 1 kHz shift at t = 0.25 ms: (4 * 2.5e-4 * 1e3)^2 = 1
        assert!((gate_frequency_error(2.5e-4, 1e-3, 1.0) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn negative_noise_rejected() {
        let n = NoiseSpec {
            db_gauss: -1.0,
            di_fraction: 0.0,
            external_rate_hz: 0.0,
        };
        assert!(n.validate().is_err());
    }
}
