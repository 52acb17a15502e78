//! State-vector simulation of one qudit and the four-level Deutsch algorithm.
//!
//! Two qubits A, B are encoded as |x⟩_A|y⟩_B → |1 + 2x + y⟩. The qudit starts
//! in |2⟩ = |0⟩_A|1⟩_B and runs H_A H_B, the oracle F_i, H_A and finally
//! G_M = 𝒰₁₂(√2−1, π). Ending in |2⟩ means the function is constant.

use std::fmt;

use nalgebra::DVector;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gates::{CMatrix, Compiler, Gate, GateUnitary, PulseSequence};
use crate::hamiltonian::normalize_label;
use crate::search::QuditPlan;

/// Amplitudes over named levels.
#[derive(Clone, Debug, PartialEq)]
pub struct QuditState {
    pub levels: Vec<String>,
    pub amplitudes: DVector<Complex64>,
}

impl QuditState {
    pub fn basis(levels: &[String], label: &str) -> Result<Self> {
        let i = position(levels, label)?;
        let mut amplitudes = DVector::zeros(levels.len());
        amplitudes[i] = Complex64::new(1.0, 0.0);
        Ok(QuditState {
            levels: levels.to_vec(),
            amplitudes,
        })
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.norm()
    }

    pub fn probability(&self, label: &str) -> Result<f64> {
        Ok(self.amplitudes[position(&self.levels, label)?].norm_sqr())
    }

    /// ψ ← Uψ.
    pub fn apply(&mut self, u: &CMatrix) -> Result<()> {
        if u.nrows() != self.amplitudes.len() || u.ncols() != self.amplitudes.len() {
            return Err(Error::DimensionMismatch {
                expected: self.amplitudes.len(),
                got: u.nrows(),
            });
        }
        self.amplitudes = u * &self.amplitudes;
        Ok(())
    }

    pub fn apply_gate(&mut self, u: &GateUnitary) -> Result<()> {
        if u.levels != self.levels {
            return Err(Error::InvalidArgument("gate and state use different level orders".into()));
        }
        self.apply(&u.matrix)
    }

    pub fn apply_sequence(&mut self, seq: &PulseSequence) -> Result<()> {
        let u = seq.unitary(&self.levels)?;
        self.apply(&u.matrix)
    }
}

fn position(levels: &[String], label: &str) -> Result<usize> {
    let n = normalize_label(label);
    levels
        .iter()
        .position(|l| normalize_label(l) == n)
        .ok_or_else(|| Error::UnknownLevel(label.to_string()))
}

/// Qudit index (1-based) ↔ physical level.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LogicalMapping {
    levels: Vec<String>,
}

impl LogicalMapping {
    pub fn new(levels: Vec<String>) -> Result<Self> {
        for (i, a) in levels.iter().enumerate() {
            if levels[..i].iter().any(|b| normalize_label(a) == normalize_label(b)) {
                return Err(Error::InvalidArgument(format!("level {a} mapped twice")));
            }
        }
        Ok(LogicalMapping { levels })
    }

    /// The plan's primary levels in plan order.
    pub fn from_plan(plan: &QuditPlan) -> Self {
        LogicalMapping {
            levels: plan.primary.clone(),
        }
    }

    pub fn dimension(&self) -> usize {
        self.levels.len()
    }

    /// Physical label of qudit state |j⟩, j from 1.
    pub fn level(&self, j: usize) -> Result<&str> {
        j.checked_sub(1)
            .and_then(|i| self.levels.get(i))
            .map(String::as_str)
            .ok_or_else(|| Error::InvalidArgument(format!("qudit index {j} outside 1..={}", self.levels.len())))
    }

    pub fn levels(&self) -> &[String] {
        &self.levels
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Constant,
    Balanced,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Constant => "constant",
            Verdict::Balanced => "balanced",
        })
    }
}

/// (f_i(0), f_i(1)) for the four one-bit functions.
pub fn boolean_oracle_table(i: usize) -> Result<(u8, u8)> {
    match i {
        1 => Ok((0, 0)),
        2 => Ok((1, 1)),
        3 => Ok((1, 0)),
        4 => Ok((0, 1)),
        _ => Err(Error::InvalidArgument(format!("oracle index must be 1..=4, got {i}"))),
    }
}

pub fn classify(table: (u8, u8)) -> Verdict {
    if table.0 == table.1 {
        Verdict::Constant
    } else {
        Verdict::Balanced
    }
}

fn need4(map: &LogicalMapping) -> Result<()> {
    if map.dimension() < 4 {
        return Err(Error::Plan(format!(
            "Deutsch needs 4 qudit levels, mapping has {}",
            map.dimension()
        )));
    }
    Ok(())
}

fn u(map: &LogicalMapping, k: usize, l: usize, zeta: f64, phi: f64) -> Result<Gate> {
    Ok(Gate::TwoPhoton {
        k: map.level(k)?.to_string(),
        l: map.level(l)?.to_string(),
        zeta,
        phi,
    })
}

/// Gates of the oracle F_i, in application order.
///
/// F₃ = 𝒰₃₄(1,π) realizes f₄ and F₄ = 𝒰₁₂(1,π) realizes f₃; both are balanced.
pub fn oracle_gates(map: &LogicalMapping, i: usize) -> Result<Vec<Gate>> {
    need4(map)?;
    let pi = std::f64::consts::PI;
    boolean_oracle_table(i)?;
    Ok(match i {
        1 => Vec::new(),
        2 => vec![u(map, 3, 4, 1.0, pi)?, u(map, 1, 2, 1.0, pi)?],
        3 => vec![u(map, 3, 4, 1.0, pi)?],
        _ => vec![u(map, 1, 2, 1.0, pi)?],
    })
}

/// Named stages of the Deutsch circuit with their gates in application order.
pub fn deutsch_circuit(map: &LogicalMapping, i: usize) -> Result<Vec<(String, Vec<Gate>)>> {
    need4(map)?;
    let h = 2f64.sqrt() - 1.0;
    let pi = std::f64::consts::PI;
    let h_a = vec![u(map, 2, 4, h, pi)?, u(map, 1, 3, h, pi)?];
    let h_b = vec![u(map, 3, 4, h, pi)?, u(map, 1, 2, h, pi)?];
    Ok(vec![
        ("H_A".to_string(), h_a.clone()),
        ("H_B".to_string(), h_b),
        (format!("F_{i}"), oracle_gates(map, i)?),
        ("H_A".to_string(), h_a),
        ("G_M".to_string(), vec![u(map, 1, 2, h, pi)?]),
    ])
}

/// Function induced by F_i on the two-qubit encoding: f(x) = y_out ⊕ y_in.
/// Errors if F_i does not act as |x⟩|y⟩ → |x⟩|y ⊕ f(x)⟩ on every basis state.
pub fn induced_function(i: usize) -> Result<(u8, u8)> {
    let map = LogicalMapping::new((1..=4).map(|j| j.to_string()).collect())?;
    let mut m = CMatrix::identity(4, 4);
    for g in oracle_gates(&map, i)? {
        m = g.matrix(map.levels())? * m;
    }
    let mut f = [0u8; 2];
    for x in 0..2usize {
        for y in 0..2usize {
            let col = 2 * x + y;
            let row = (0..4)
                .find(|&r| m[(r, col)].norm() > 1.0 - 1e-9)
                .ok_or_else(|| Error::Plan(format!("F_{i} is not a permutation")))?;
            if row / 2 != x {
                return Err(Error::Plan(format!("F_{i} changes the A qubit")));
            }
            let fx = ((row % 2) ^ y) as u8;
            if y == 1 && fx != f[x] {
                return Err(Error::Plan(format!("F_{i} is not of the form y xor f(x)")));
            }
            f[x] = fx;
        }
    }
    Ok((f[0], f[1]))
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct StageTiming {
    pub stage: String,
    pub pulses: usize,
    pub duration_s: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DeutschReport {
    pub oracle: usize,
    pub p_state2: f64,
    pub verdict: Verdict,
    /// Classification of the oracle's own truth table.
    pub expected: Verdict,
    pub pulse_count: usize,
    pub total_time_s: f64,
    pub stages: Vec<StageTiming>,
    /// Largest residual of any compiled gate against its target.
    pub max_gate_residual: f64,
    /// Population left outside the qudit levels at the end.
    pub leakage: f64,
    pub schedule: PulseSequence,
}

/// Compile and simulate the Deutsch circuit for oracle `i`.
pub fn deutsch_run(plan: &QuditPlan, map: &LogicalMapping, i: usize) -> Result<DeutschReport> {
    let expected = classify(boolean_oracle_table(i)?);
    need4(map)?;
    for l in map.levels() {
        if plan.primary_index(l).is_none() {
            return Err(Error::UnknownLevel(l.clone()));
        }
    }
    let compiler = Compiler::new(plan);
    let levels = compiler.levels();
    let mut state = QuditState::basis(&levels, map.level(2)?)?;
    let mut schedule = PulseSequence::default();
    let mut stages = Vec::new();
    let mut residual = 0.0f64;
    for (name, gates) in deutsch_circuit(map, i)? {
        let mut stage = PulseSequence::default();
        for g in &gates {
            let (seq, d) = compiler.compile_verified(g, 1e-10)?;
            residual = residual.max(d);
            stage.extend(seq);
        }
        state.apply_sequence(&stage)?;
        stages.push(StageTiming {
            stage: name,
            pulses: stage.pulses.len(),
            duration_s: stage.total_duration(),
        });
        schedule.extend(stage);
    }
    let p2 = state.probability(map.level(2)?)?;
    let in_qudit: f64 = map.levels().iter().map(|l| state.probability(l)).sum::<Result<f64>>()?;
    Ok(DeutschReport {
        oracle: i,
        p_state2: p2,
        verdict: if p2 > 0.5 { Verdict::Constant } else { Verdict::Balanced },
        expected,
        pulse_count: schedule.pulses.len(),
        total_time_s: schedule.total_duration(),
        stages,
        max_gate_residual: residual,
        leakage: (1.0 - in_qudit).max(0.0),
        schedule,
    })
}
