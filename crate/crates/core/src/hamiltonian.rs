//! Effective ground-state Hamiltonian, eigenstates, labels and field scans.
//!
//! The Hamiltonian is assembled once per [`Engine`] in the uncoupled basis
//! as field-independent pieces,
//!
//! ```text
//! H(B, I, β) = H0 + B·Hz + I·(H_iso + H_aniso(β))
//! ```
//!
//! with energies E/h in MHz, B in gauss and I in kW cm⁻². The zero of energy
//! is the lowest N = 0 eigenvalue of H0 (B = 0, I = 0).
//!
//! Eigenvector phases are fixed so that the largest-magnitude component is
//! positive. Degenerate clusters are rotated to diagonalize Hz, then the
//! rank-2 rotational operator, then N², inside the cluster.

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::angmom::{clebsch_gordan, enumerate_basis, recoupling_overlap, wigner3j, BasisState, HalfInt, Scheme};
use crate::error::{Error, Result};
use crate::molecule::{MoleculeSpec, Symmetry};
use crate::units::{BOHR_MAGNETON_MHZ_PER_G, NUCLEAR_MAGNETON_MHZ_PER_G};

/// Magnetic field along z, laser intensity and laser polarization angle to B.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FieldPoint {
    pub b_gauss: f64,
    pub intensity: f64,
    pub beta: f64,
}

impl FieldPoint {
    pub fn new(b_gauss: f64, intensity: f64) -> Self {
        FieldPoint {
            b_gauss,
            intensity,
            beta: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.b_gauss >= 0.0) || !(self.intensity >= 0.0) || !self.beta.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "field point needs B >= 0, I >= 0 and finite angle, got {self:?}"
            )));
        }
        Ok(())
    }

    fn parallel(&self) -> bool {
        self.beta.sin().abs() < 1e-15
    }
}

/// Finite-difference steps for μ = −∂E/∂B and ∂E/∂I.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Steps {
    pub db_gauss: f64,
    pub di_kw_cm2: f64,
}

impl Default for Steps {
    fn default() -> Self {
        Steps {
            db_gauss: 1e-3,
            di_kw_cm2: 1e-3,
        }
    }
}

/// Level label: `(N,mF)i` for ¹Σ, `(N,F[l|u],mF)` for ²Σ.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct LevelLabel {
    pub n: u32,
    pub m_f: HalfInt,
    /// Energy rank within the (N, mF) family, 0 = lowest.
    pub i: usize,
    pub f: Option<HalfInt>,
    pub f_tag: Option<String>,
}

impl fmt::Display for LevelLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.f {
            Some(ff) => write!(f, "({},{}{},{})", self.n, ff, self.f_tag.as_deref().unwrap_or(""), self.m_f),
            None => write!(f, "({},{}){}", self.n, self.m_f, self.i),
        }
    }
}

/// Canonical form used when matching user-supplied label strings.
pub fn normalize_label(s: &str) -> String {
    s.chars().filter(|c| !c.is_whitespace() && *c != '_').collect()
}

#[derive(Clone, Debug)]
pub struct EigenLevel {
    /// Position in the energy-sorted spectrum.
    pub index: usize,
    pub label: LevelLabel,
    /// E/h in MHz relative to the engine's energy zero.
    pub energy: f64,
    /// Eigenvector over the engine's uncoupled basis.
    pub vector: DVector<f64>,
    /// −∂E/∂B in MHz/G (NaN when not computed).
    pub mu: f64,
    /// ∂E/∂I in MHz per kW cm⁻² (NaN when not computed).
    pub dedi: f64,
}

impl EigenLevel {
    pub fn name(&self) -> String {
        self.label.to_string()
    }
}

#[derive(Clone, Debug)]
pub struct Spectrum {
    pub field: FieldPoint,
    pub levels: Vec<EigenLevel>,
    context: u64,
    by_label: HashMap<String, usize>,
}

impl Spectrum {
    pub fn context(&self) -> u64 {
        self.context
    }

    pub fn find(&self, label: &str) -> Result<&EigenLevel> {
        self.by_label
            .get(&normalize_label(label))
            .map(|&i| &self.levels[i])
            .ok_or_else(|| Error::UnknownLevel(label.to_string()))
    }

    /// Levels with rotational quantum number `n`, ascending in energy.
    pub fn manifold(&self, n: u32) -> Vec<&EigenLevel> {
        self.levels.iter().filter(|l| l.label.n == n).collect()
    }
}

/// Axis of a field scan.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScanAxis {
    B,
    Intensity,
}

/// One adiabatically connected level across a scan.
#[derive(Clone, Debug)]
pub struct Curve {
    /// Label at the first grid point.
    pub id: String,
    pub labels: Vec<LevelLabel>,
    pub energy: Vec<f64>,
    pub mu: Vec<f64>,
    pub dedi: Vec<f64>,
}

#[derive(Clone, Debug)]
pub struct LevelMap {
    pub axis: ScanAxis,
    pub grid: Vec<f64>,
    pub curves: Vec<Curve>,
    /// Grid indices where the best overlap fell below the threshold.
    pub flagged: Vec<usize>,
}

impl LevelMap {
    /// CSV with header
    /// `field,level_id,N,mF,i,energy_MHz,mu_MHzperG,dEdI_MHzperkWcm2`.
    pub fn to_csv(&self) -> String {
        let header = ["field", "level_id", "N", "mF", "i", "energy_MHz", "mu_MHzperG", "dEdI_MHzperkWcm2"];
        let rows = self.grid.iter().enumerate().flat_map(|(g, x)| {
            self.curves.iter().map(move |c| {
                let l = &c.labels[g];
                vec![
                    x.to_string(),
                    c.id.clone(),
                    l.n.to_string(),
                    l.m_f.to_string(),
                    l.i.to_string(),
                    format!("{:.9}", c.energy[g]),
                    format!("{:.9e}", c.mu[g]),
                    format!("{:.9e}", c.dedi[g]),
                ]
            })
        });
        crate::io::csv_table(&header, rows)
    }
}

/// Zero-field F (or G) and optional letter tag for one level of an (N, M_F) block.
type ZeroFieldLabel = (HalfInt, Option<String>);

/// Uncoupled-basis Hamiltonian pieces for one molecule and N_max.
#[derive(Clone, Debug)]
pub struct Engine {
    spec: MoleculeSpec,
    n_max: u32,
    basis: Vec<BasisState>,
    h0: DMatrix<f64>,
    hz: DMatrix<f64>,
    h_iso: DMatrix<f64>,
    /// −α⁽²⁾ C²_q for q = −2..2.
    h_aniso: [DMatrix<f64>; 5],
    /// C¹_p for p = −1, 0, +1.
    c1: [DMatrix<f64>; 3],
    n_sq: DMatrix<f64>,
    e_ref: f64,
    zero_field: HashMap<(u32, i32), Vec<ZeroFieldLabel>>,
    context: u64,
    pub steps: Steps,
}

type Mat = DMatrix<f64>;

/// Spherical components [J₋₁, J₀, J₊₁] for angular momentum `j`, basis m descending.
fn spin_vector(j: HalfInt) -> [Mat; 3] {
    let d = j.multiplicity();
    let mut jp = Mat::zeros(d, d);
    let mut jz = Mat::zeros(d, d);
    let jv = j.value();
    for (k, m) in j.projections().enumerate() {
        let mv = m.value();
        jz[(k, k)] = mv;
        if k > 0 {
            jp[(k - 1, k)] = (jv * (jv + 1.0) - mv * (mv + 1.0)).sqrt();
        }
    }
    let jm = jp.transpose();
    let r = std::f64::consts::FRAC_1_SQRT_2;
    [&jm * r, jz, &jp * (-r)]
}

/// Rotational space ordered by N ascending, m_N descending.
fn rot_states(n_max: u32) -> Vec<(u32, HalfInt)> {
    let mut v = Vec::new();
    for n in 0..=n_max {
        for m in HalfInt::from_int(n as i32).projections() {
            v.push((n, m));
        }
    }
    v
}

fn rot_vector(n_max: u32) -> [Mat; 3] {
    let st = rot_states(n_max);
    let d = st.len();
    let mut out = [Mat::zeros(d, d), Mat::zeros(d, d), Mat::zeros(d, d)];
    let mut off = 0;
    for n in 0..=n_max {
        let blk = spin_vector(HalfInt::from_int(n as i32));
        let w = 2 * n as usize + 1;
        for (o, b) in out.iter_mut().zip(blk.iter()) {
            o.view_mut((off, off), (w, w)).copy_from(b);
        }
        off += w;
    }
    out
}

/// ⟨N M|C^k_q|N' M'⟩ on the rotational space.
fn rot_tensor(n_max: u32, k: i32, q: i32) -> Mat {
    let st = rot_states(n_max);
    let d = st.len();
    let kk = HalfInt::from_int(k);
    let qq = HalfInt::from_int(q);
    let mut m = Mat::zeros(d, d);
    for (a, &(n1, m1)) in st.iter().enumerate() {
        for (b, &(n2, m2)) in st.iter().enumerate() {
            if m1 != m2 + qq {
                continue;
            }
            let (h1, h2) = (HalfInt::from_int(n1 as i32), HalfInt::from_int(n2 as i32));
            let red = wigner3j(h1, kk, h2, HalfInt::ZERO, HalfInt::ZERO, HalfInt::ZERO);
            if red == 0.0 {
                continue;
            }
            let sign = if (m1.twice() / 2).rem_euclid(2) == 0 { 1.0 } else { -1.0 };
            m[(a, b)] = sign * (((2 * n1 + 1) * (2 * n2 + 1)) as f64).sqrt() * wigner3j(h1, kk, h2, -m1, qq, m2) * red;
        }
    }
    m
}

/// Normalized quadrupole tensor T²_q(Q) on a single spin, q = −2..2.
fn quad_tensor(i: HalfInt) -> [Mat; 5] {
    let d = i.multiplicity();
    let two = HalfInt::from_int(2);
    let norm = wigner3j(i, two, i, -i, HalfInt::ZERO, i);
    std::array::from_fn(|n| {
        let q = HalfInt::from_int(n as i32 - 2);
        let mut t = Mat::zeros(d, d);
        if norm == 0.0 {
            return t;
        }
        for (a, m1) in i.projections().enumerate() {
            for (b, m2) in i.projections().enumerate() {
                let sign = if ((i - m1).twice() / 2).rem_euclid(2) == 0 { 1.0 } else { -1.0 };
                t[(a, b)] = sign * wigner3j(i, two, i, -m1, q, m2) / norm;
            }
        }
        t
    })
}

/// Rank-2 product [A ⊗ B]²_q, q = −2..2, from spherical vector components.
fn rank2(a: &[Mat; 3], b: &[Mat; 3]) -> [Mat; 5] {
    let one = HalfInt::ONE;
    let two = HalfInt::from_int(2);
    std::array::from_fn(|n| {
        let q = n as i32 - 2;
        let mut t = Mat::zeros(a[0].nrows(), a[0].ncols());
        for q1 in -1..=1i32 {
            let q2 = q - q1;
            if q2.abs() > 1 {
                continue;
            }
            let cg = clebsch_gordan(one, HalfInt::from_int(q1), one, HalfInt::from_int(q2), two, HalfInt::from_int(q));
            t += (&a[(q1 + 1) as usize] * &b[(q2 + 1) as usize]) * cg;
        }
        t
    })
}

fn dot1(a: &[Mat; 3], b: &[Mat; 3]) -> Mat {
    &a[1] * &b[1] - &a[2] * &b[0] - &a[0] * &b[2]
}

/// Σ_q (−1)^q kron(R_q, S_{−q}) for rank-2 tensors on rotation and spin spaces.
fn kron_dot2(r: &[Mat; 5], s: &[Mat; 5]) -> Mat {
    let mut out = Mat::zeros(r[0].nrows() * s[0].nrows(), r[0].ncols() * s[0].ncols());
    for n in 0..5 {
        let q = n as i32 - 2;
        let sign = if q.rem_euclid(2) == 0 { 1.0 } else { -1.0 };
        out += r[n].kronecker(&s[4 - n]) * sign;
    }
    out
}

fn kron_dot1(r: &[Mat; 3], s: &[Mat; 3]) -> Mat {
    r[1].kronecker(&s[1]) - r[2].kronecker(&s[0]) - r[0].kronecker(&s[2])
}

/// Reduced Wigner d²_{q0}(β), q = −2..2.
pub fn small_d2(beta: f64) -> [f64; 5] {
    let (s, c) = beta.sin_cos();
    let d1 = (1.5f64).sqrt() * s * c;
    let d2 = (3.0f64 / 8.0).sqrt() * s * s;
    [d2, d1, 0.5 * (3.0 * c * c - 1.0), -d1, d2]
}

fn embed(n: usize, a: &Mat, pos: usize, dims: &[usize]) -> Mat {
    // identity on every factor except `pos`
    let mut out = Mat::identity(1, 1);
    for (k, &d) in dims.iter().enumerate() {
        let f = if k == pos { a.clone() } else { Mat::identity(d, d) };
        out = out.kronecker(&f);
    }
    debug_assert_eq!(out.nrows(), n);
    out
}

static CONTEXT: std::sync::atomic::AtomicU64 = std::sync::atomic::AtomicU64::new(1);

impl Engine {
    pub fn new(spec: &MoleculeSpec, n_max: u32) -> Result<Self> {
        spec.validate()?;
        let spins = spec.spins;
        let basis = enumerate_basis(spins, n_max as i32, Scheme::Uncoupled)?;
        let rot = rot_states(n_max);
        let dims = [spins.s.multiplicity(), spins.i1.multiplicity(), spins.i2.multiplicity()];
        let ds: usize = dims.iter().product();
        let dim = rot.len() * ds;

        let s_vec: [Mat; 3] = spin_vector(spins.s).map(|m| embed(ds, &m, 0, &dims));
        let i1_vec: [Mat; 3] = spin_vector(spins.i1).map(|m| embed(ds, &m, 1, &dims));
        let i2_vec: [Mat; 3] = spin_vector(spins.i2).map(|m| embed(ds, &m, 2, &dims));
        let n_vec = rot_vector(n_max);
        let c2: [Mat; 5] = std::array::from_fn(|n| rot_tensor(n_max, 2, n as i32 - 2));
        let c1: [Mat; 3] = std::array::from_fn(|n| rot_tensor(n_max, 1, n as i32 - 1));
        let id_r = Mat::identity(rot.len(), rot.len());
        let id_s = Mat::identity(ds, ds);

        let mut n_sq_r = Mat::zeros(rot.len(), rot.len());
        for (k, (n, _)) in rot.iter().enumerate() {
            n_sq_r[(k, k)] = (*n * (*n + 1)) as f64;
        }
        let rot_e = &n_sq_r * spec.b_rot - (&n_sq_r * &n_sq_r) * spec.d_rot;
        let mut h0 = rot_e.kronecker(&id_s);
        let i_vecs = [&i1_vec, &i2_vec];
        let i_vals = [spins.i1, spins.i2];
        for k in 0..2 {
            if spec.c_nsr[k] != 0.0 {
                h0 += kron_dot1(&n_vec, i_vecs[k]) * spec.c_nsr[k];
            }
        }
        match spec.symmetry {
            Symmetry::SingletSigma => {
                if spec.c_scalar != 0.0 {
                    h0 += id_r.kronecker(&dot1(&i1_vec, &i2_vec)) * spec.c_scalar;
                }
                if spec.c_tensor != 0.0 {
                    let t = rank2(&i1_vec, &i2_vec);
                    h0 += kron_dot2(&c2, &t) * (6f64.sqrt() * spec.c_tensor);
                }
                for k in 0..2 {
                    if spec.eqq[k] != 0.0 && i_vals[k].twice() >= 2 {
                        let q = quad_tensor(i_vals[k]).map(|m| embed(ds, &m, k + 1, &dims));
                        h0 += kron_dot2(&c2, &q) * (spec.eqq[k] / 4.0);
                    }
                }
            }
            Symmetry::DoubletSigma => {
                if spec.gamma != 0.0 {
                    h0 += kron_dot1(&n_vec, &s_vec) * spec.gamma;
                }
                for k in 0..2 {
                    if spec.b_fermi[k] != 0.0 {
                        h0 += id_r.kronecker(&dot1(i_vecs[k], &s_vec)) * spec.b_fermi[k];
                    }
                    if spec.c_dipolar[k] != 0.0 {
                        let t = rank2(i_vecs[k], &s_vec);
                        h0 += kron_dot2(&c2, &t) * (6f64.sqrt() / 3.0 * spec.c_dipolar[k]);
                    }
                }
            }
        }

        let mut hz = id_r.kronecker(&s_vec[1]) * (spec.g_s * BOHR_MAGNETON_MHZ_PER_G);
        hz -= n_vec[1].kronecker(&id_s) * (spec.g_r * NUCLEAR_MAGNETON_MHZ_PER_G);
        for k in 0..2 {
            let g = spec.g_nuc[k] * (1.0 - spec.sigma[k]) * NUCLEAR_MAGNETON_MHZ_PER_G;
            hz -= id_r.kronecker(&i_vecs[k][1]) * g;
        }

        let h_iso = Mat::identity(dim, dim) * (-spec.alpha0());
        let h_aniso: [Mat; 5] = std::array::from_fn(|n| c2[n].kronecker(&id_s) * (-spec.alpha2()));
        let c1_full: [Mat; 3] = std::array::from_fn(|n| c1[n].kronecker(&id_s));
        let n_sq = n_sq_r.kronecker(&id_s);

        // permutation from canonical basis order to product order
        let perm: Vec<usize> = basis
            .iter()
            .map(|b| match *b {
                BasisState::Uncoupled { n, m_n, m_s, m_i1, m_i2 } => {
                    let r = rot.iter().position(|&(nn, mm)| nn == n && mm == m_n).expect("rotational state");
                    let s = ((spins.s - m_s).twice() / 2) as usize;
                    let a = ((spins.i1 - m_i1).twice() / 2) as usize;
                    let b2 = ((spins.i2 - m_i2).twice() / 2) as usize;
                    ((r * dims[0] + s) * dims[1] + a) * dims[2] + b2
                }
                BasisState::Coupled { .. } => unreachable!("uncoupled basis requested"),
            })
            .collect();
        let permute = |m: &Mat| Mat::from_fn(dim, dim, |i, j| m[(perm[i], perm[j])]);

        let mut engine = Engine {
            spec: spec.clone(),
            n_max,
            h0: permute(&h0),
            hz: permute(&hz),
            h_iso: permute(&h_iso),
            h_aniso: std::array::from_fn(|n| permute(&h_aniso[n])),
            c1: std::array::from_fn(|n| permute(&c1_full[n])),
            n_sq: permute(&n_sq),
            basis,
            e_ref: 0.0,
            zero_field: HashMap::new(),
            context: CONTEXT.fetch_add(1, std::sync::atomic::Ordering::Relaxed),
            steps: Steps::default(),
        };
        engine.init_reference()?;
        Ok(engine)
    }

    pub fn spec(&self) -> &MoleculeSpec {
        &self.spec
    }

    pub fn n_max(&self) -> u32 {
        self.n_max
    }

    pub fn basis(&self) -> &[BasisState] {
        &self.basis
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn context(&self) -> u64 {
        self.context
    }

    /// Zeeman operator per gauss (MHz/G).
    pub fn zeeman_operator(&self) -> &DMatrix<f64> {
        &self.hz
    }

    /// ∂H/∂I at polarization angle `beta` (MHz per kW cm⁻²).
    pub fn stark_operator(&self, beta: f64) -> DMatrix<f64> {
        let d = small_d2(beta);
        let mut m = self.h_iso.clone();
        for (n, w) in d.iter().enumerate() {
            if *w != 0.0 {
                m += &self.h_aniso[n] * *w;
            }
        }
        m
    }

    /// C¹_p in the uncoupled basis, p = −1, 0, +1.
    pub fn dipole_operator(&self, p: i32) -> &DMatrix<f64> {
        &self.c1[(p + 1) as usize]
    }

    /// Full Hamiltonian at `field`, energies relative to the engine's zero.
    pub fn hamiltonian(&self, field: &FieldPoint) -> DMatrix<f64> {
        let mut h = &self.h0 + &self.hz * field.b_gauss;
        if field.intensity != 0.0 {
            h += self.stark_operator(field.beta) * field.intensity;
        }
        for k in 0..h.nrows() {
            h[(k, k)] -= self.e_ref;
        }
        h
    }

    /// Index sets that diagonalize independently.
    fn blocks(&self, field: &FieldPoint) -> Vec<(String, Vec<usize>)> {
        if field.parallel() {
            let mut by_mf: BTreeMap<HalfInt, Vec<usize>> = BTreeMap::new();
            for (k, b) in self.basis.iter().enumerate() {
                by_mf.entry(b.m_f()).or_default().push(k);
            }
            by_mf.into_iter().map(|(m, v)| (format!("M_F={m}"), v)).collect()
        } else {
            vec![("full".to_string(), (0..self.dim()).collect())]
        }
    }

    /// Raw eigenpairs sorted by energy, with the phase and degeneracy conventions applied.
    fn eigenpairs(&self, h: &DMatrix<f64>, field: &FieldPoint) -> Result<Vec<(f64, DVector<f64>)>> {
        let n = self.dim();
        let mut out = Vec::with_capacity(n);
        let aniso0 = &self.h_aniso[2];
        for (name, idx) in self.blocks(field) {
            let sub = DMatrix::from_fn(idx.len(), idx.len(), |i, j| h[(idx[i], idx[j])]);
            let eig = SymmetricEigen::try_new(sub, f64::EPSILON, 100_000).ok_or_else(|| Error::Eigensolver {
                block: name.clone(),
                message: "no convergence".into(),
            })?;
            if eig.eigenvalues.iter().any(|v| !v.is_finite()) {
                return Err(Error::Eigensolver {
                    block: name,
                    message: "non-finite eigenvalue".into(),
                });
            }
            let mut order: Vec<usize> = (0..idx.len()).collect();
            order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
            let mut vals: Vec<f64> = order.iter().map(|&k| eig.eigenvalues[k]).collect();
            let mut vecs: Vec<DVector<f64>> = order.iter().map(|&k| eig.eigenvectors.column(k).into_owned()).collect();

            let sub_ops: Vec<DMatrix<f64>> = [&self.hz, aniso0, &self.n_sq]
                .iter()
                .map(|m| DMatrix::from_fn(idx.len(), idx.len(), |i, j| m[(idx[i], idx[j])]))
                .collect();
            let mut start = 0;
            while start < vals.len() {
                let mut end = start + 1;
                let tol = 1e-9 * (1.0 + vals[start].abs());
                while end < vals.len() && (vals[end] - vals[start]).abs() < tol {
                    end += 1;
                }
                if end - start > 1 {
                    resolve_cluster(&mut vecs[start..end], &sub_ops);
                    let mean = vals[start..end].iter().sum::<f64>() / (end - start) as f64;
                    for v in &mut vals[start..end] {
                        *v = mean;
                    }
                }
                start = end;
            }
            for (e, v) in vals.into_iter().zip(vecs) {
                let mut full = DVector::zeros(n);
                for (k, &g) in idx.iter().enumerate() {
                    full[g] = v[k];
                }
                fix_phase(&mut full);
                out.push((e, full));
            }
        }
        out.sort_by(|a, b| a.0.total_cmp(&b.0));
        Ok(out)
    }

    fn init_reference(&mut self) -> Result<()> {
        let zero = FieldPoint::new(0.0, 0.0);
        let pairs = self.eigenpairs(&self.h0, &zero)?;
        let nweights: Vec<(u32, HalfInt)> = pairs.iter().map(|(_, v)| self.dominant_n_mf(v)).collect();
        self.e_ref = pairs
            .iter()
            .zip(&nweights)
            .filter(|(_, (n, _))| *n == 0)
            .map(|((e, _), _)| *e)
            .fold(f64::INFINITY, f64::min);
        if self.spec.symmetry != Symmetry::DoubletSigma {
            return Ok(());
        }
        // F by projection onto the coupled basis at zero field
        let coupled = enumerate_basis(self.spec.spins, self.n_max as i32, Scheme::Coupled)?;
        let mut families: BTreeMap<(u32, i32), Vec<(f64, HalfInt)>> = BTreeMap::new();
        for ((e, v), (n, mf)) in pairs.iter().zip(&nweights) {
            let mut w: BTreeMap<HalfInt, f64> = BTreeMap::new();
            for c in coupled.iter().filter(|c| c.n() == *n && c.m_f() == *mf) {
                let BasisState::Coupled { f, .. } = *c else { continue };
                let amp: f64 = self
                    .basis
                    .iter()
                    .enumerate()
                    .filter(|(k, _)| v[*k] != 0.0)
                    .map(|(k, u)| recoupling_overlap(self.spec.spins, c, u) * v[k])
                    .sum();
                *w.entry(f).or_default() += amp * amp;
            }
            let f = w.iter().max_by(|a, b| a.1.total_cmp(b.1)).map(|(f, _)| *f).unwrap_or(HalfInt::ZERO);
            families.entry((*n, mf.twice())).or_default().push((*e, f));
        }
        // how many distinct groups of each (N, F)
        let mut groups: HashMap<(u32, HalfInt), usize> = HashMap::new();
        for ((n, _), lv) in &families {
            let mut count: HashMap<HalfInt, usize> = HashMap::new();
            for (_, f) in lv {
                *count.entry(*f).or_default() += 1;
            }
            for (f, c) in count {
                let g = groups.entry((*n, f)).or_default();
                *g = (*g).max(c);
            }
        }
        for ((n, mf), lv) in families {
            let mut seen: HashMap<HalfInt, usize> = HashMap::new();
            let labels = lv
                .iter()
                .map(|(_, f)| {
                    let k = seen.entry(*f).or_default();
                    let tag = match groups[&(n, *f)] {
                        1 => None,
                        2 => Some(if *k == 0 { "l" } else { "u" }.to_string()),
                        _ => Some(format!("{}", *k)),
                    };
                    *k += 1;
                    (*f, tag)
                })
                .collect();
            self.zero_field.insert((n, mf), labels);
        }
        Ok(())
    }

    fn dominant_n_mf(&self, v: &DVector<f64>) -> (u32, HalfInt) {
        let mut wn = vec![0.0; self.n_max as usize + 1];
        let mut mf = 0.0;
        for (k, b) in self.basis.iter().enumerate() {
            let p = v[k] * v[k];
            wn[b.n() as usize] += p;
            mf += p * b.m_f().twice() as f64;
        }
        let n = wn
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .map(|(k, _)| k as u32)
            .unwrap_or(0);
        (n, HalfInt::from_twice(mf.round() as i32))
    }

    /// Eigenstates at `field` without derivatives (μ and ∂E/∂I are NaN).
    pub fn eigensystem(&self, field: &FieldPoint) -> Result<Spectrum> {
        field_ok(field)?;
        let h = self.hamiltonian(field);
        let pairs = self.eigenpairs(&h, field)?;
        let mut rank: HashMap<(u32, i32), usize> = HashMap::new();
        let mut levels = Vec::with_capacity(pairs.len());
        for (index, (energy, vector)) in pairs.into_iter().enumerate() {
            let (n, m_f) = self.dominant_n_mf(&vector);
            let r = rank.entry((n, m_f.twice())).or_default();
            let i = *r;
            *r += 1;
            let (f, f_tag) = self
                .zero_field
                .get(&(n, m_f.twice()))
                .and_then(|v| v.get(i))
                .cloned()
                .map(|(f, t)| (Some(f), t))
                .unwrap_or((None, None));
            levels.push(EigenLevel {
                index,
                label: LevelLabel { n, m_f, i, f, f_tag },
                energy,
                vector,
                mu: f64::NAN,
                dedi: f64::NAN,
            });
        }
        let by_label = levels.iter().map(|l| (normalize_label(&l.label.to_string()), l.index)).collect();
        Ok(Spectrum {
            field: *field,
            levels,
            context: self.context,
            by_label,
        })
    }

    /// Eigenstates with μ = −∂E/∂B and ∂E/∂I from central differences.
    pub fn diagonalize(&self, field: &FieldPoint) -> Result<Spectrum> {
        let mut spec = self.eigensystem(field)?;
        let db = self.steps.db_gauss;
        let di = self.steps.di_kw_cm2;
        let shifted = |b: f64, i: f64| -> Result<HashMap<String, f64>> {
            let fp = FieldPoint {
                b_gauss: field.b_gauss + b,
                intensity: field.intensity + i,
                beta: field.beta,
            };
            let h = self.hamiltonian(&fp);
            let s = self.eigensystem_raw(&h, &fp)?;
            Ok(s)
        };
        let bp = shifted(db, 0.0)?;
        let bm = shifted(-db, 0.0)?;
        let ip = shifted(0.0, di)?;
        let im = shifted(0.0, -di)?;
        for l in &mut spec.levels {
            let key = l.label.to_string();
            let get = |m: &HashMap<String, f64>| m.get(&key).copied().unwrap_or(f64::NAN);
            l.mu = -(get(&bp) - get(&bm)) / (2.0 * db);
            l.dedi = (get(&ip) - get(&im)) / (2.0 * di);
        }
        Ok(spec)
    }

    /// Label → energy at a field point that may lie outside the physical range
    /// (finite-difference neighbours).
    fn eigensystem_raw(&self, h: &DMatrix<f64>, field: &FieldPoint) -> Result<HashMap<String, f64>> {
        let pairs = self.eigenpairs(h, field)?;
        let mut rank: HashMap<(u32, i32), usize> = HashMap::new();
        let mut out = HashMap::with_capacity(pairs.len());
        for (energy, vector) in pairs {
            let (n, m_f) = self.dominant_n_mf(&vector);
            let r = rank.entry((n, m_f.twice())).or_default();
            let i = *r;
            *r += 1;
            let (f, f_tag) = self
                .zero_field
                .get(&(n, m_f.twice()))
                .and_then(|v| v.get(i))
                .cloned()
                .map(|(f, t)| (Some(f), t))
                .unwrap_or((None, None));
            out.insert(LevelLabel { n, m_f, i, f, f_tag }.to_string(), energy);
        }
        Ok(out)
    }

    /// Hellmann–Feynman magnetic moment −⟨ψ|Hz|ψ⟩.
    pub fn zeeman_expectation(&self, level: &EigenLevel) -> f64 {
        -level.vector.dot(&(&self.hz * &level.vector))
    }

    /// Hellmann–Feynman ac-Stark slope ⟨ψ|∂H/∂I|ψ⟩.
    pub fn stark_expectation(&self, level: &EigenLevel, beta: f64) -> f64 {
        level.vector.dot(&(self.stark_operator(beta) * &level.vector))
    }

    /// Largest `k` components of a level over the uncoupled basis.
    pub fn composition(&self, level: &EigenLevel, k: usize) -> Vec<(BasisState, f64)> {
        let mut c: Vec<(BasisState, f64)> = self
            .basis
            .iter()
            .zip(level.vector.iter())
            .filter(|(_, a)| **a != 0.0)
            .map(|(b, a)| (*b, *a))
            .collect();
        c.sort_by(|a, b| b.1.abs().total_cmp(&a.1.abs()));
        c.truncate(k);
        c
    }

    /// Follows every level across a monotone grid by maximum eigenvector overlap.
    pub fn scan(&self, axis: ScanAxis, grid: &[f64], fixed: &FieldPoint, threshold: f64) -> Result<LevelMap> {
        if grid.len() < 2 {
            return Err(Error::InvalidArgument("scan needs at least two grid points".into()));
        }
        let inc = grid.windows(2).all(|w| w[1] > w[0]);
        let dec = grid.windows(2).all(|w| w[1] < w[0]);
        if !inc && !dec {
            return Err(Error::InvalidArgument("scan grid must be strictly monotone".into()));
        }
        let at = |x: f64| {
            let mut f = *fixed;
            match axis {
                ScanAxis::B => f.b_gauss = x,
                ScanAxis::Intensity => f.intensity = x,
            }
            f
        };
        let first = self.diagonalize(&at(grid[0]))?;
        let mut curves: Vec<Curve> = first
            .levels
            .iter()
            .map(|l| Curve {
                id: l.name(),
                labels: vec![l.label.clone()],
                energy: vec![l.energy],
                mu: vec![l.mu],
                dedi: vec![l.dedi],
            })
            .collect();
        let mut prev: Vec<DVector<f64>> = first.levels.iter().map(|l| l.vector.clone()).collect();
        let mut flagged = Vec::new();
        for (g, &x) in grid.iter().enumerate().skip(1) {
            let s = self.diagonalize(&at(x))?;
            let assign = match_by_overlap(&prev, &s.levels.iter().map(|l| &l.vector).collect::<Vec<_>>());
            let mut worst: f64 = 1.0;
            let mut next = prev.clone();
            for (c, &(k, ov)) in assign.iter().enumerate() {
                let l = &s.levels[k];
                worst = worst.min(ov);
                curves[c].labels.push(l.label.clone());
                curves[c].energy.push(l.energy);
                curves[c].mu.push(l.mu);
                curves[c].dedi.push(l.dedi);
                next[c] = l.vector.clone();
            }
            if worst < threshold {
                flagged.push(g);
            }
            prev = next;
        }
        Ok(LevelMap {
            axis,
            grid: grid.to_vec(),
            curves,
            flagged,
        })
    }
}

fn field_ok(field: &FieldPoint) -> Result<()> {
    field.validate()
}

/// Greedy maximum-overlap assignment; ties broken by lower indices.
/// Returns for each previous vector the matched new index and |overlap|.
fn match_by_overlap(prev: &[DVector<f64>], cur: &[&DVector<f64>]) -> Vec<(usize, f64)> {
    let mut pairs = Vec::new();
    for (a, p) in prev.iter().enumerate() {
        for (b, c) in cur.iter().enumerate() {
            let ov = p.dot(c).abs();
            if ov > 1e-12 {
                pairs.push((ov, a, b));
            }
        }
    }
    pairs.sort_by(|x, y| y.0.total_cmp(&x.0).then(x.1.cmp(&y.1)).then(x.2.cmp(&y.2)));
    let mut out = vec![(usize::MAX, 0.0); prev.len()];
    let mut used = vec![false; cur.len()];
    for (ov, a, b) in pairs {
        if out[a].0 == usize::MAX && !used[b] {
            out[a] = (b, ov);
            used[b] = true;
        }
    }
    // anything left (zero overlap everywhere) pairs up in index order
    let mut free = (0..cur.len()).filter(|b| !used[*b]);
    for o in out.iter_mut().filter(|o| o.0 == usize::MAX) {
        o.0 = free.next().expect("equal dimensions");
    }
    out
}

fn fix_phase(v: &mut DVector<f64>) {
    let mut best = 0;
    for k in 0..v.len() {
        if v[k].abs() > v[best].abs() + 1e-12 {
            best = k;
        }
    }
    if v[best] < 0.0 {
        *v *= -1.0;
    }
}

/// Rotates a degenerate cluster so the tie-break operators are diagonal in it.
fn resolve_cluster(vecs: &mut [DVector<f64>], ops: &[DMatrix<f64>]) {
    let m = vecs.len();
    let mut groups: Vec<Vec<usize>> = vec![(0..m).collect()];
    for op in ops {
        let mut next_groups = Vec::new();
        for g in groups {
            if g.len() < 2 {
                next_groups.push(g);
                continue;
            }
            let k = g.len();
            let proj = DMatrix::from_fn(k, k, |i, j| vecs[g[i]].dot(&(op * &vecs[g[j]])));
            let eig = SymmetricEigen::new(proj);
            let mut order: Vec<usize> = (0..k).collect();
            order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
            let old: Vec<DVector<f64>> = g.iter().map(|&i| vecs[i].clone()).collect();
            for (slot, &c) in order.iter().enumerate() {
                let mut v = DVector::zeros(old[0].len());
                for (r, o) in old.iter().enumerate() {
                    v += o * eig.eigenvectors[(r, c)];
                }
                vecs[g[slot]] = v;
            }
            // split into sub-clusters of equal tie-break value
            let vals: Vec<f64> = order.iter().map(|&c| eig.eigenvalues[c]).collect();
            let mut s = 0;
            while s < k {
                let mut e = s + 1;
                while e < k && (vals[e] - vals[s]).abs() < 1e-9 * (1.0 + vals[s].abs()) {
                    e += 1;
                }
                next_groups.push(g[s..e].to_vec());
                s = e;
            }
        }
        groups = next_groups;
    }
}

/// Hamiltonian at one field point (energy zero as for [`Engine`]).
pub fn build_hamiltonian(spec: &MoleculeSpec, field: &FieldPoint, n_max: u32) -> Result<DMatrix<f64>> {
    field.validate()?;
    Ok(Engine::new(spec, n_max)?.hamiltonian(field))
}

/// Labelled eigenstates with derivatives at one field point.
pub fn diagonalize(spec: &MoleculeSpec, field: &FieldPoint, n_max: u32) -> Result<Spectrum> {
    Engine::new(spec, n_max)?.diagonalize(field)
}
