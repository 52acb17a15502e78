//! Electric-dipole transition moments, strengths and line lists.

use std::fmt;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hamiltonian::{EigenLevel, Engine, Spectrum};

/// Change in M_F from the lower to the upper level.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Polarization {
    #[serde(rename = "sigma-")]
    SigmaMinus,
    #[serde(rename = "pi")]
    Pi,
    #[serde(rename = "sigma+")]
    SigmaPlus,
}

impl Polarization {
    pub fn from_delta(dm: i32) -> Option<Self> {
        match dm {
            -1 => Some(Polarization::SigmaMinus),
            0 => Some(Polarization::Pi),
            1 => Some(Polarization::SigmaPlus),
            _ => None,
        }
    }

    pub fn q(self) -> i32 {
        match self {
            Polarization::SigmaMinus => -1,
            Polarization::Pi => 0,
            Polarization::SigmaPlus => 1,
        }
    }
}

impl fmt::Display for Polarization {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Polarization::SigmaMinus => "sigma-",
            Polarization::Pi => "pi",
            Polarization::SigmaPlus => "sigma+",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TransitionLine {
    pub lower: String,
    pub upper: String,
    /// Upper minus lower energy, MHz.
    pub frequency: f64,
    pub pol: Polarization,
    /// |μ| of the dominant component, debye.
    pub dipole: f64,
    /// 3|μ|²/d₀² summed over components.
    pub strength: f64,
}

impl TransitionLine {
    pub fn involves(&self, label: &str) -> bool {
        self.lower == label || self.upper == label
    }

    /// The level at the other end of the line from `label`.
    pub fn partner(&self, label: &str) -> Option<&str> {
        if self.lower == label {
            Some(&self.upper)
        } else if self.upper == label {
            Some(&self.lower)
        } else {
            None
        }
    }
}

/// μ_p = d₀ ⟨b|C¹_p|a⟩ in debye for p = −1, 0, +1.
pub fn transition_dipole(engine: &Engine, spectrum: &Spectrum, a: &EigenLevel, b: &EigenLevel) -> Result<[f64; 3]> {
    if spectrum.context() != engine.context() || a.vector.len() != engine.dim() || b.vector.len() != engine.dim() {
        return Err(Error::DimensionMismatch {
            expected: engine.dim(),
            got: a.vector.len().min(b.vector.len()),
        });
    }
    let d0 = engine.spec().d0;
    Ok(std::array::from_fn(|k| {
        let p = k as i32 - 1;
        d0 * b.vector.dot(&(engine.dipole_operator(p) * &a.vector))
    }))
}

/// Line between two levels, oriented by energy.
pub fn line_between(engine: &Engine, spectrum: &Spectrum, a: &EigenLevel, b: &EigenLevel) -> Result<Option<TransitionLine>> {
    let (lo, hi) = if a.energy <= b.energy { (a, b) } else { (b, a) };
    let mu = transition_dipole(engine, spectrum, lo, hi)?;
    let dm = (hi.label.m_f - lo.label.m_f).twice();
    if dm % 2 != 0 {
        return Ok(None);
    }
    let Some(pol) = Polarization::from_delta(dm / 2) else {
        return Ok(None);
    };
    Ok(Some(make_line(engine, lo, hi, pol, &mu)))
}

fn make_line(engine: &Engine, lo: &EigenLevel, hi: &EigenLevel, pol: Polarization, mu: &[f64; 3]) -> TransitionLine {
    let d0 = engine.spec().d0;
    let sum2: f64 = mu.iter().map(|m| m * m).sum();
    TransitionLine {
        lower: lo.name(),
        upper: hi.name(),
        frequency: hi.energy - lo.energy,
        pol,
        dipole: mu[(pol.q() + 1) as usize].abs(),
        strength: 3.0 * sum2 / (d0 * d0),
    }
}

/// All lines between manifold `from_n` and manifold `to_n` with strength ≥ `s_min`,
/// sorted by frequency then labels.
pub fn line_list(engine: &Engine, spectrum: &Spectrum, from_n: u32, to_n: u32, s_min: f64) -> Result<Vec<TransitionLine>> {
    let from: Vec<&EigenLevel> = spectrum.manifold(from_n);
    let to: Vec<&EigenLevel> = spectrum.manifold(to_n);
    pairs(engine, spectrum, &from, &to, s_min)
}

/// Lines from specific levels into manifold `to_n`.
pub fn lines_from(engine: &Engine, spectrum: &Spectrum, from: &[&EigenLevel], to_n: u32, s_min: f64) -> Result<Vec<TransitionLine>> {
    let to: Vec<&EigenLevel> = spectrum.manifold(to_n);
    pairs(engine, spectrum, from, &to, s_min)
}

fn pairs(engine: &Engine, spectrum: &Spectrum, from: &[&EigenLevel], to: &[&EigenLevel], s_min: f64) -> Result<Vec<TransitionLine>> {
    if spectrum.context() != engine.context() {
        return Err(Error::InvalidArgument("spectrum was produced by a different engine".into()));
    }
    let n = engine.dim();
    let a = DMatrix::from_fn(n, from.len(), |i, j| from[j].vector[i]);
    let b = DMatrix::from_fn(n, to.len(), |i, j| to[j].vector[i]);
    let d0 = engine.spec().d0;
    // <to|C_p|from> and <from|C_p|to> for every p
    let fwd: Vec<DMatrix<f64>> = (-1..=1).map(|p| b.transpose() * (engine.dipole_operator(p) * &a) * d0).collect();
    let rev: Vec<DMatrix<f64>> = (-1..=1).map(|p| a.transpose() * (engine.dipole_operator(p) * &b) * d0).collect();
    let mut out = Vec::new();
    for (i, f) in from.iter().enumerate() {
        for (j, t) in to.iter().enumerate() {
            let (lo, hi, mu) = if f.energy <= t.energy {
                (*f, *t, [fwd[0][(j, i)], fwd[1][(j, i)], fwd[2][(j, i)]])
            } else {
                (*t, *f, [rev[0][(i, j)], rev[1][(i, j)], rev[2][(i, j)]])
            };
            let dm = (hi.label.m_f - lo.label.m_f).twice();
            if dm % 2 != 0 {
                continue;
            }
            let Some(pol) = Polarization::from_delta(dm / 2) else { continue };
            let line = make_line(engine, lo, hi, pol, &mu);
            if line.strength >= s_min && line.strength > 0.0 {
                out.push(line);
            }
        }
    }
    out.sort_by(|x, y| {
        x.frequency
            .total_cmp(&y.frequency)
            .then_with(|| x.lower.cmp(&y.lower))
            .then_with(|| x.upper.cmp(&y.upper))
    });
    Ok(out)
}

/// Frequency unit for line-list output.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FreqUnit {
    MHz,
    KHz,
}

impl FreqUnit {
    pub fn scale(self) -> f64 {
        match self {
            FreqUnit::MHz => 1.0,
            FreqUnit::KHz => 1e3,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            FreqUnit::MHz => "MHz",
            FreqUnit::KHz => "kHz",
        }
    }
}

/// CSV `lower_label,upper_label,pol,f,dipole_D,strength`; the frequency
/// unit is written into the `f` column header.
pub fn lines_to_csv(lines: &[TransitionLine], unit: FreqUnit) -> String {
    let f = format!("f_{}", unit.name());
    let header = ["lower_label", "upper_label", "pol", f.as_str(), "dipole_D", "strength"];
    let rows = lines.iter().map(|l| {
        vec![
            l.lower.clone(),
            l.upper.clone(),
            l.pol.to_string(),
            format!("{:.6}", l.frequency * unit.scale()),
            format!("{:.6}", l.dipole),
            format!("{:.6}", l.strength),
        ]
    });
    crate::io::csv_table(&header, rows)
}
