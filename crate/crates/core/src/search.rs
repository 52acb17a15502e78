//! Off-resonant loss model and the greedy search for isolated qudit level sets.
//!
//! A qudit lives in one rotational manifold (the primary levels) and is
//! driven by two-photon transitions through levels of a neighbouring
//! manifold (the auxiliaries). A plan is accepted only if every drive
//! frequency leaves every populated primary level isolated from the
//! auxiliaries it is not meant to reach.

use std::collections::{BTreeSet, HashMap};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hamiltonian::{normalize_label, Engine, FieldPoint, Spectrum};
use crate::transitions::{line_list, TransitionLine};
use crate::units::{mhz_to_angular, rabi_from_half_pi};

/// Version tag written into plan files.
pub const PLAN_VERSION: u32 = 1;

/// Products of strengths closer than this are treated as tied.
const STRENGTH_TIE: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LossModel {
    /// π/2-pulse duration, s.
    pub t_half_pi: f64,
    /// Fraction of microwave power in the intended polarization.
    pub purity: f64,
    pub p_loss_max: f64,
    /// Minimum accepted 3|μ|²/d₀² for a drive line.
    pub s_min: f64,
}

impl LossModel {
    pub fn new(t_half_pi: f64, p_loss_max: f64) -> Self {
        LossModel {
            t_half_pi,
            purity: 0.95,
            p_loss_max,
            s_min: 0.01,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.t_half_pi > 0.0 && self.t_half_pi.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "t_half_pi must be positive, got {}",
                self.t_half_pi
            )));
        }
        if !(self.purity > 0.0 && self.purity <= 1.0) {
            return Err(Error::InvalidArgument(format!("purity must lie in (0, 1], got {}", self.purity)));
        }
        if !(self.p_loss_max >= 0.0) || !(self.s_min >= 0.0) {
            return Err(Error::InvalidArgument("p_loss_max and strength_min must be non-negative".into()));
        }
        Ok(())
    }

    /// Rabi frequency of a drive tone, rad/s.
    pub fn omega(&self) -> f64 {
        rabi_from_half_pi(self.t_half_pi)
    }

    /// Effective r_tdm of a spectator line under a drive, including the
    /// polarization-impurity amplitude when the polarizations differ.
    pub fn ratio(&self, drive: &TransitionLine, spectator: &TransitionLine) -> f64 {
        let r = spectator.dipole / drive.dipole;
        if spectator.pol == drive.pol {
            r
        } else {
            r * (1.0 - self.purity).sqrt()
        }
    }

    /// Loss into `spectator` while `drive` is applied resonantly.
    pub fn loss(&self, drive: &TransitionLine, spectator: &TransitionLine) -> f64 {
        let delta = mhz_to_angular((drive.frequency - spectator.frequency).abs());
        loss_unchecked(self.omega(), delta, self.ratio(drive, spectator))
    }
}

/// Upper bound on off-resonant excitation, (rΩ)²/((rΩ)² + Δ²).
///
/// `omega` and `delta` are angular frequencies in the same units.
pub fn p_loss(omega: f64, delta: f64, r: f64) -> Result<f64> {
    if omega < 0.0 || delta < 0.0 || r < 0.0 || omega.is_nan() || delta.is_nan() || r.is_nan() {
        return Err(Error::InvalidArgument(format!(
            "p_loss inputs must be non-negative (omega {omega}, delta {delta}, r {r})"
        )));
    }
    Ok(loss_unchecked(omega, delta, r))
}

fn loss_unchecked(omega: f64, delta: f64, r: f64) -> f64 {
    let x = (r * omega).powi(2);
    if x == 0.0 {
        0.0
    } else {
        x / (x + delta * delta)
    }
}

/// Worst loss caused by one drive frequency into one auxiliary level.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AuditEntry {
    pub drive_lower: String,
    pub drive_upper: String,
    /// Auxiliary level receiving the unwanted population.
    pub spectator: String,
    /// Primary level the worst spectator line starts from.
    pub from: String,
    pub detuning_mhz: f64,
    pub ratio: f64,
    pub p_loss: f64,
}

/// Primary/auxiliary bookkeeping over a line list.
///
/// Lines with neither end in the primary set are ignored, as are lines
/// between two primary levels.
#[derive(Clone, Debug)]
pub struct LineIndex {
    lines: Vec<TransitionLine>,
    primary: Vec<String>,
    aux: Vec<String>,
    /// For each primary level, (aux index, line index) pairs.
    edges: Vec<Vec<(usize, usize)>>,
    /// Line index to (primary index, aux index).
    ends: Vec<Option<(usize, usize)>>,
}

impl LineIndex {
    /// `primary` is the candidate order used by the search (energy order).
    pub fn new(primary: &[String], lines: Vec<TransitionLine>) -> Self {
        let p_of: HashMap<&str, usize> = primary.iter().enumerate().map(|(i, s)| (s.as_str(), i)).collect();
        let mut aux: Vec<String> = Vec::new();
        let mut a_of: HashMap<String, usize> = HashMap::new();
        let mut edges = vec![Vec::new(); primary.len()];
        let mut ends = Vec::with_capacity(lines.len());
        for (li, l) in lines.iter().enumerate() {
            let (p, a) = match (p_of.get(l.lower.as_str()), p_of.get(l.upper.as_str())) {
                (Some(&p), None) => (p, &l.upper),
                (None, Some(&p)) => (p, &l.lower),
                _ => {
                    ends.push(None);
                    continue;
                }
            };
            let ai = *a_of.entry(a.clone()).or_insert_with(|| {
                aux.push(a.clone());
                aux.len() - 1
            });
            edges[p].push((ai, li));
            ends.push(Some((p, ai)));
        }
        LineIndex {
            lines,
            primary: primary.to_vec(),
            aux,
            edges,
            ends,
        }
    }

    pub fn lines(&self) -> &[TransitionLine] {
        &self.lines
    }

    pub fn primary(&self) -> &[String] {
        &self.primary
    }

    fn primary_index(&self, label: &str) -> Result<usize> {
        self.primary
            .iter()
            .position(|p| p == label)
            .ok_or_else(|| Error::UnknownLevel(label.to_string()))
    }

    fn line_index(&self, line: &TransitionLine) -> Result<usize> {
        self.lines
            .iter()
            .position(|l| l.lower == line.lower && l.upper == line.upper)
            .filter(|&i| self.ends[i].is_some())
            .ok_or_else(|| Error::Plan(format!("drive {} -> {} is not a primary-auxiliary line", line.lower, line.upper)))
    }

    /// Worst loss per spectator auxiliary level for one drive line, with
    /// `populated` primary levels. The drive's own auxiliary is not a spectator.
    fn audit_drive(&self, model: &LossModel, drive: usize, populated: &[usize]) -> Vec<(usize, usize, f64)> {
        let (_, a_d) = self.ends[drive].expect("drive is a primary-auxiliary line");
        let d = &self.lines[drive];
        let mut worst: Vec<Option<(usize, f64)>> = vec![None; self.aux.len()];
        for &q in populated {
            for &(a, li) in &self.edges[q] {
                if a == a_d {
                    continue;
                }
                let p = model.loss(d, &self.lines[li]);
                if worst[a].is_none_or(|(_, w)| p > w) {
                    worst[a] = Some((li, p));
                }
            }
        }
        worst
            .into_iter()
            .enumerate()
            .filter_map(|(a, w)| w.map(|(li, p)| (a, li, p)))
            .collect()
    }

    fn max_loss(&self, model: &LossModel, drive: usize, populated: &[usize]) -> (f64, Option<usize>) {
        self.audit_drive(model, drive, populated)
            .into_iter()
            .fold((0.0, None), |acc, (_, li, p)| if p > acc.0 { (p, Some(li)) } else { acc })
    }

    fn entries(&self, model: &LossModel, drives: &[usize], populated: &[usize]) -> Vec<AuditEntry> {
        let mut out = Vec::new();
        for &d in drives {
            let dl = &self.lines[d];
            for (a, li, p) in self.audit_drive(model, d, populated) {
                let s = &self.lines[li];
                let (q, _) = self.ends[li].expect("spectator is a primary-auxiliary line");
                out.push(AuditEntry {
                    drive_lower: dl.lower.clone(),
                    drive_upper: dl.upper.clone(),
                    spectator: self.aux[a].clone(),
                    from: self.primary[q].clone(),
                    detuning_mhz: (dl.frequency - s.frequency).abs(),
                    ratio: model.ratio(dl, s),
                    p_loss: p,
                });
            }
        }
        out
    }
}

/// Worst loss caused by `drive` from any of the `populated` primary levels,
/// or `None` when there is no spectator line at all.
pub fn audit_frequency(index: &LineIndex, populated: &[&str], drive: &TransitionLine, model: &LossModel) -> Result<Option<AuditEntry>> {
    let d = index.line_index(drive)?;
    let pop = populated.iter().map(|p| index.primary_index(p)).collect::<Result<Vec<_>>>()?;
    let (_, li) = index.max_loss(model, d, &pop);
    Ok(li.map(|_| {
        index
            .entries(model, &[d], &pop)
            .into_iter()
            .max_by(|x, y| x.p_loss.total_cmp(&y.p_loss))
            .expect("a worst line implies at least one entry")
    }))
}

/// Full audit of a set of drive lines with the given primary levels populated.
pub fn audit_lines(index: &LineIndex, populated: &[&str], drives: &[TransitionLine], model: &LossModel) -> Result<Vec<AuditEntry>> {
    let ds = drives.iter().map(|d| index.line_index(d)).collect::<Result<Vec<_>>>()?;
    let pop = populated.iter().map(|p| index.primary_index(p)).collect::<Result<Vec<_>>>()?;
    Ok(index.entries(model, &ds, &pop))
}

/// Result of the greedy procedure over a line list.
#[derive(Clone, Debug, PartialEq)]
pub struct Selection {
    /// Accepted primary levels, seed first, in acceptance order.
    pub primary: Vec<String>,
    pub auxiliary: Vec<String>,
    pub drives: Vec<TransitionLine>,
    pub audit: Vec<AuditEntry>,
    /// One line per rejected candidate.
    pub diagnostics: Vec<String>,
}

#[derive(Clone, Copy, Debug)]
struct Combo {
    aux: usize,
    line_q: usize,
    line_c: usize,
    known_aux: bool,
    product: f64,
    aux_energy_rank: usize,
}

impl Combo {
    /// True when `self` should replace `other`.
    fn beats(&self, other: &Combo) -> bool {
        if self.known_aux != other.known_aux {
            return self.known_aux;
        }
        if (self.product - other.product).abs() > STRENGTH_TIE {
            return self.product > other.product;
        }
        self.aux_energy_rank < other.aux_energy_rank
    }
}

/// Greedy level-set search.
///
/// Candidates are visited once each in `index.primary()` order, starting
/// from the first level as the seed. `aux_energy_rank` orders auxiliary
/// labels for the final tie-break; labels missing from it rank last.
pub fn select(index: &LineIndex, model: &LossModel, aux_energy_rank: &[String]) -> Result<Selection> {
    model.validate()?;
    if index.primary.is_empty() {
        return Err(Error::Plan("no primary levels".into()));
    }
    let rank: Vec<usize> = index
        .aux
        .iter()
        .map(|a| aux_energy_rank.iter().position(|r| r == a).unwrap_or(usize::MAX))
        .collect();
    let strong = |li: usize| index.lines[li].strength >= model.s_min;

    let mut qudit = vec![0usize];
    let mut drives: BTreeSet<usize> = BTreeSet::new();
    let mut aux_in: Vec<usize> = Vec::new();
    let mut diagnostics = Vec::new();

    for cand in 1..index.primary.len() {
        let mut populated = qudit.clone();
        populated.push(cand);
        let mut best: Option<Combo> = None;
        let mut closest: Option<(f64, usize, usize)> = None;
        let mut any_strong = false;
        for &q in &qudit {
            for &(a, lq) in &index.edges[q] {
                if !strong(lq) {
                    continue;
                }
                for &(a2, lc) in &index.edges[cand] {
                    if a2 != a || !strong(lc) {
                        continue;
                    }
                    any_strong = true;
                    // existing drives were audited against the old qudit;
                    // only the new drives and the new level's lines need checking
                    let mut worst = (0.0f64, None);
                    for nd in [lq, lc] {
                        if drives.contains(&nd) {
                            continue;
                        }
                        let w = index.max_loss(model, nd, &populated);
                        if w.0 > worst.0 {
                            worst = (w.0, w.1.map(|s| (nd, s)));
                        }
                    }
                    for &d in &drives {
                        let w = index.max_loss(model, d, &[cand]);
                        if w.0 > worst.0 {
                            worst = (w.0, w.1.map(|s| (d, s)));
                        }
                    }
                    if worst.0 > model.p_loss_max {
                        if let Some((d, s)) = worst.1 {
                            if closest.is_none_or(|(p, _, _)| worst.0 < p) {
                                closest = Some((worst.0, d, s));
                            }
                        }
                        continue;
                    }
                    let c = Combo {
                        aux: a,
                        line_q: lq,
                        line_c: lc,
                        known_aux: aux_in.contains(&a),
                        product: index.lines[lq].strength * index.lines[lc].strength,
                        aux_energy_rank: rank[a],
                    };
                    if best.is_none_or(|b| c.beats(&b)) {
                        best = Some(c);
                    }
                }
            }
        }
        match best {
            Some(c) => {
                qudit.push(cand);
                drives.insert(c.line_q);
                drives.insert(c.line_c);
                if !aux_in.contains(&c.aux) {
                    aux_in.push(c.aux);
                }
            }
            None => {
                let name = &index.primary[cand];
                diagnostics.push(match closest {
                    Some((p, d, s)) => {
                        let (dl, sl) = (&index.lines[d], &index.lines[s]);
                        format!(
                            "{name}: rejected, best combination loses {p:.3e} when driving {}->{} into {}->{}",
                            dl.lower, dl.upper, sl.lower, sl.upper
                        )
                    }
                    None if any_strong => format!("{name}: rejected, no combination passes the audit"),
                    None => format!("{name}: rejected, no common auxiliary with strong lines"),
                });
            }
        }
    }

    let drive_list: Vec<usize> = drives.into_iter().collect();
    Ok(Selection {
        primary: qudit.iter().map(|&q| index.primary[q].clone()).collect(),
        auxiliary: aux_in.iter().map(|&a| index.aux[a].clone()).collect(),
        drives: drive_list.iter().map(|&d| index.lines[d].clone()).collect(),
        audit: index.entries(model, &drive_list, &qudit),
        diagnostics,
    })
}

/// Two primary levels sharing an auxiliary level through plan transitions.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Link {
    pub a: String,
    pub b: String,
    pub via: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuditPlan {
    pub version: u32,
    pub molecule: String,
    pub field: FieldPoint,
    pub primary_n: u32,
    pub aux_n: u32,
    pub model: LossModel,
    pub primary: Vec<String>,
    pub auxiliary: Vec<String>,
    pub transitions: Vec<TransitionLine>,
    pub links: Vec<Link>,
    pub audit: Vec<AuditEntry>,
    pub worst_p_loss: f64,
    #[serde(default)]
    pub diagnostics: Vec<String>,
}

impl QuditPlan {
    fn assemble(engine: &Engine, spectrum: &Spectrum, primary_n: u32, aux_n: u32, model: &LossModel, sel: Selection) -> Self {
        let worst = sel.audit.iter().map(|e| e.p_loss).fold(0.0, f64::max);
        let mut plan = QuditPlan {
            version: PLAN_VERSION,
            molecule: engine.spec().name.clone(),
            field: spectrum.field,
            primary_n,
            aux_n,
            model: *model,
            primary: sel.primary,
            auxiliary: sel.auxiliary,
            transitions: sel.drives,
            links: Vec::new(),
            audit: sel.audit,
            worst_p_loss: worst,
            diagnostics: sel.diagnostics,
        };
        plan.links = plan.compute_links();
        plan
    }

    fn compute_links(&self) -> Vec<Link> {
        let mut out = Vec::new();
        for (i, a) in self.primary.iter().enumerate() {
            for b in &self.primary[i + 1..] {
                for c in &self.auxiliary {
                    if self.transition(a, c).is_some() && self.transition(b, c).is_some() {
                        out.push(Link {
                            a: a.clone(),
                            b: b.clone(),
                            via: c.clone(),
                        });
                    }
                }
            }
        }
        out
    }

    pub fn dimension(&self) -> usize {
        self.primary.len()
    }

    pub fn passes(&self) -> bool {
        self.worst_p_loss <= self.model.p_loss_max
    }

    /// Plan transition between a primary and an auxiliary level, either order.
    pub fn transition(&self, a: &str, b: &str) -> Option<&TransitionLine> {
        let (a, b) = (normalize_label(a), normalize_label(b));
        self.transitions.iter().find(|l| {
            let (lo, up) = (normalize_label(&l.lower), normalize_label(&l.upper));
            (lo == a && up == b) || (lo == b && up == a)
        })
    }

    /// Auxiliary levels connected to both primaries.
    pub fn common_aux(&self, a: &str, b: &str) -> Vec<&str> {
        self.auxiliary
            .iter()
            .filter(|c| self.transition(a, c).is_some() && self.transition(b, c).is_some())
            .map(String::as_str)
            .collect()
    }

    pub fn primary_index(&self, label: &str) -> Option<usize> {
        let l = normalize_label(label);
        self.primary.iter().position(|p| normalize_label(p) == l)
    }

    /// Every primary level is reachable from the seed through links.
    pub fn is_connected(&self) -> bool {
        let n = self.primary.len();
        if n == 0 {
            return false;
        }
        let mut seen = vec![false; n];
        let mut stack = vec![0];
        seen[0] = true;
        while let Some(i) = stack.pop() {
            for l in &self.links {
                let (x, y) = (self.primary_index(&l.a), self.primary_index(&l.b));
                let next = if x == Some(i) {
                    y
                } else if y == Some(i) {
                    x
                } else {
                    None
                };
                if let Some(j) = next {
                    if !seen[j] {
                        seen[j] = true;
                        stack.push(j);
                    }
                }
            }
        }
        seen.into_iter().all(|s| s)
    }

    /// Recompute the audit from scratch against a fresh line list.
    pub fn reaudit(&self, engine: &Engine, spectrum: &Spectrum) -> Result<Vec<AuditEntry>> {
        let index = manifold_index(engine, spectrum, self.primary_n, self.aux_n)?;
        let pop: Vec<&str> = self.primary.iter().map(String::as_str).collect();
        audit_lines(&index, &pop, &self.transitions, &self.model)
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let plan: QuditPlan = serde_json::from_str(text)?;
        if plan.version != PLAN_VERSION {
            return Err(Error::Plan(format!("unsupported plan version {}", plan.version)));
        }
        if plan.primary.is_empty() {
            return Err(Error::Plan("plan has no primary levels".into()));
        }
        Ok(plan)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_json(&text)
    }
}

fn manifold_index(engine: &Engine, spectrum: &Spectrum, primary_n: u32, aux_n: u32) -> Result<LineIndex> {
    if primary_n.abs_diff(aux_n) != 1 {
        return Err(Error::InvalidArgument(format!(
            "auxiliary manifold N={aux_n} is not adjacent to primary N={primary_n}"
        )));
    }
    if primary_n.max(aux_n) > engine.n_max() {
        return Err(Error::InvalidArgument(format!("engine basis stops at N={}", engine.n_max())));
    }
    let primary: Vec<String> = spectrum.manifold(primary_n).iter().map(|l| l.name()).collect();
    let lines = line_list(engine, spectrum, primary_n, aux_n, 0.0)?;
    Ok(LineIndex::new(&primary, lines))
}

/// Run the greedy search on a diagonalized spectrum.
pub fn search_qudit(engine: &Engine, spectrum: &Spectrum, primary_n: u32, aux_n: u32, model: &LossModel) -> Result<QuditPlan> {
    let index = manifold_index(engine, spectrum, primary_n, aux_n)?;
    let aux_rank: Vec<String> = spectrum.manifold(aux_n).iter().map(|l| l.name()).collect();
    let sel = select(&index, model, &aux_rank)?;
    Ok(QuditPlan::assemble(engine, spectrum, primary_n, aux_n, model, sel))
}

/// Build a plan from hand-picked (primary, auxiliary) transitions. Primary
/// levels are ordered by first appearance. Every pair must have a line of
/// at least `model.s_min`. The audit is computed but not enforced; check
/// [`QuditPlan::passes`].
pub fn plan_from_selection(engine: &Engine, spectrum: &Spectrum, pairs: &[(&str, &str)], model: &LossModel) -> Result<QuditPlan> {
    model.validate()?;
    let (p0, a0) = pairs.first().ok_or_else(|| Error::Plan("empty selection".into()))?;
    let primary_n = spectrum.find(p0)?.label.n;
    let aux_n = spectrum.find(a0)?.label.n;
    let index = manifold_index(engine, spectrum, primary_n, aux_n)?;

    let mut primary: Vec<String> = Vec::new();
    let mut auxiliary: Vec<String> = Vec::new();
    let mut drives = Vec::new();
    for (p, a) in pairs {
        let (lp, la) = (spectrum.find(p)?, spectrum.find(a)?);
        if lp.label.n != primary_n || la.label.n != aux_n {
            return Err(Error::Plan(format!("{p} -> {a} does not join N={primary_n} to N={aux_n}")));
        }
        let (p, a) = (lp.name(), la.name());
        let line = index
            .lines()
            .iter()
            .find(|l| l.involves(&p) && l.involves(&a))
            .filter(|l| l.strength >= model.s_min)
            .ok_or_else(|| Error::Plan(format!("{p} -> {a} has no line of strength >= {}", model.s_min)))?;
        if !drives.contains(line) {
            drives.push(line.clone());
        }
        if !primary.contains(&p) {
            primary.push(p);
        }
        if !auxiliary.contains(&a) {
            auxiliary.push(a);
        }
    }
    let pop: Vec<&str> = primary.iter().map(String::as_str).collect();
    let audit = audit_lines(&index, &pop, &drives, model)?;
    let mut diagnostics = Vec::new();
    if let Some(w) = audit.iter().max_by(|a, b| a.p_loss.total_cmp(&b.p_loss)) {
        if w.p_loss > model.p_loss_max {
            diagnostics.push(format!(
                "audit exceeds p_loss_max: {:.3e} driving {}->{} into {} from {}",
                w.p_loss, w.drive_lower, w.drive_upper, w.spectator, w.from
            ));
        }
    }
    let sel = Selection {
        primary,
        auxiliary,
        drives,
        audit,
        diagnostics,
    };
    Ok(QuditPlan::assemble(engine, spectrum, primary_n, aux_n, model, sel))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::transitions::Polarization;
    use std::f64::consts::PI;

    fn line(lower: &str, upper: &str, f: f64, pol: Polarization, strength: f64) -> TransitionLine {
        TransitionLine {
            lower: lower.into(),
            upper: upper.into(),
            frequency: f,
            pol,
            dipole: (strength / 3.0).sqrt(),
            strength,
        }
    }

    #[test]
    fn p_loss_examples() {
        let om = 2.0 * PI * 50e3;
        assert_eq!(p_loss(om, 1.0, 0.0).unwrap(), 0.0);
        assert_eq!(p_loss(om, 0.0, 1.0).unwrap(), 1.0);
        let p = p_loss(om, 2.0 * PI * 10e6, 1.0).unwrap();
        assert!((p - 2.5e-5).abs() < 1e-9, "{p}");
        assert!(p_loss(-1.0, 1.0, 1.0).is_err());
        assert!(p_loss(1.0, 1.0, -0.5).is_err());
    }

    #[test]
    fn close_lines_fail_audit() {
        // two equal lines 1 kHz apart, t = 0.3 ms
        let model = LossModel::new(3e-4, 1e-3);
        let lines = vec![
            line("g", "a", 1.000, Polarization::Pi, 1.0),
            line("g", "b", 1.001, Polarization::Pi, 1.0),
        ];
        let idx = LineIndex::new(&["g".into()], lines.clone());
        let e = audit_frequency(&idx, &["g"], &lines[0], &model).unwrap().unwrap();
        assert!((e.p_loss - 0.41).abs() < 0.01, "{}", e.p_loss);
        assert_eq!(e.spectator, "b");
    }

    #[test]
    fn single_line_has_no_spectators() {
        let model = LossModel::new(5e-6, 1e-4);
        let lines = vec![line("g", "a", 100.0, Polarization::Pi, 1.0)];
        let idx = LineIndex::new(&["g".into()], lines.clone());
        assert!(audit_frequency(&idx, &["g"], &lines[0], &model).unwrap().is_none());
    }

    #[test]
    fn impure_polarization_scales_ratio() {
        let model = LossModel::new(1e-3, 1e-3);
        let d = line("g", "a", 1.0, Polarization::Pi, 1.0);
        let s = line("g", "b", 2.0, Polarization::SigmaPlus, 1.0);
        assert!((model.ratio(&d, &s) - 0.05f64.sqrt()).abs() < 1e-15);
        assert!((model.ratio(&d, &d) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn greedy_prefers_known_auxiliary() {
        // p1 can join via a (already used by p0) or via b (stronger)
        let model = LossModel::new(1e-3, 1e-3);
        let primary: Vec<String> = ["p0", "p1", "p2"].iter().map(|s| s.to_string()).collect();
        let lines = vec![
            line("p0", "a", 10.0, Polarization::Pi, 0.5),
            line("p1", "a", 20.0, Polarization::Pi, 0.5),
            line("p0", "b", 30.0, Polarization::Pi, 0.9),
            line("p1", "b", 40.0, Polarization::Pi, 0.9),
            // p2 only reaches c, which no qudit level reaches
            line("p2", "c", 50.0, Polarization::Pi, 1.0),
        ];
        let idx = LineIndex::new(&primary, lines);
        let sel = select(&idx, &model, &["a".into(), "b".into(), "c".into()]).unwrap();
        assert_eq!(sel.primary, ["p0", "p1"]);
        // nothing is known at the first step, so the stronger b wins
        assert_eq!(sel.auxiliary, ["b"]);
        assert_eq!(sel.diagnostics.len(), 1);
        assert!(sel.diagnostics[0].starts_with("p2"));
    }

    #[test]
    fn weak_lines_are_not_drives() {
        let model = LossModel::new(1e-3, 1e-3);
        let primary: Vec<String> = ["p0", "p1"].iter().map(|s| s.to_string()).collect();
        let lines = vec![
            line("p0", "a", 10.0, Polarization::Pi, 0.005),
            line("p1", "a", 20.0, Polarization::Pi, 1.0),
        ];
        let sel = select(&LineIndex::new(&primary, lines), &model, &[]).unwrap();
        assert_eq!(sel.primary, ["p0"]);
    }
}
