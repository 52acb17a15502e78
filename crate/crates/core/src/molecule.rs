//! Molecular constants and the dataset file format.
//!
//! Datasets are TOML files with three tables: `[species]` (identity, symmetry
//! and doubled spins), `[constants]` (every entry an inline table
//! `{ value, unit, source }`) and an optional `[defaults]` table holding the
//! working field point and search/noise parameters. See `data/SCHEMA.md`.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::angmom::{HalfInt, Spins};
use crate::error::{Error, Result};
use crate::units;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Symmetry {
    SingletSigma,
    DoubletSigma,
}

impl std::str::FromStr for Symmetry {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "singlet_sigma" => Ok(Symmetry::SingletSigma),
            "doublet_sigma" => Ok(Symmetry::DoubletSigma),
            other => Err(Error::Data(format!("unknown symmetry tag {other:?}"))),
        }
    }
}

/// Working-point and algorithm defaults shipped with a dataset.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Defaults {
    pub b_gauss: f64,
    pub intensity_kw_cm2: f64,
    pub polarization_angle_rad: f64,
    pub n_max: u32,
    pub primary_n: u32,
    pub t_half_pi_s: f64,
    pub p_loss_max: f64,
    pub purity: f64,
    pub strength_min: f64,
    pub noise_b_gauss: f64,
    pub noise_intensity_fraction: f64,
}

impl Default for Defaults {
    fn default() -> Self {
        Defaults {
            b_gauss: 0.0,
            intensity_kw_cm2: 0.0,
            polarization_angle_rad: 0.0,
            n_max: 2,
            primary_n: 0,
            t_half_pi_s: 1e-3,
            p_loss_max: 1e-3,
            purity: 0.95,
            strength_min: 0.01,
            noise_b_gauss: 0.05,
            noise_intensity_fraction: 1e-3,
        }
    }
}

/// All parameters of the effective ground-state Hamiltonian.
///
/// Frequencies are MHz, dipoles debye, polarizabilities MHz per kW cm⁻².
/// Constants that do not apply to the declared symmetry are zero.
/// Per-nucleus arrays are indexed `[nucleus 1, nucleus 2]`.
#[derive(Clone, Debug, PartialEq)]
pub struct MoleculeSpec {
    pub name: String,
    pub symmetry: Symmetry,
    pub spins: Spins,
    pub b_rot: f64,
    pub d_rot: f64,
    /// Electron spin-rotation γ N·S.
    pub gamma: f64,
    /// Fermi contact b_F I_k·S.
    pub b_fermi: [f64; 2],
    /// Electron-nuclear dipolar c_k.
    pub c_dipolar: [f64; 2],
    /// Nuclear spin-rotation c_k N·I_k.
    pub c_nsr: [f64; 2],
    /// Nuclear electric quadrupole (eQq)_k.
    pub eqq: [f64; 2],
    /// Tensor nuclear spin-spin c₃.
    pub c_tensor: f64,
    /// Scalar nuclear spin-spin c₄.
    pub c_scalar: f64,
    pub g_s: f64,
    pub g_r: f64,
    pub g_nuc: [f64; 2],
    pub sigma: [f64; 2],
    pub d0: f64,
    pub alpha_par: f64,
    pub alpha_perp: f64,
    /// Blackbody plus spontaneous decoherence rate (Hz).
    pub external_rate_hz: f64,
    pub defaults: Defaults,
    /// Citation per constant key.
    pub sources: BTreeMap<String, String>,
}

impl MoleculeSpec {
    /// A bare rigid rotor with the given spins; every coupling zero.
    pub fn new(name: &str, symmetry: Symmetry, spins: Spins, b_rot: f64) -> Self {
        MoleculeSpec {
            name: name.to_string(),
            symmetry,
            spins,
            b_rot,
            d_rot: 0.0,
            gamma: 0.0,
            b_fermi: [0.0; 2],
            c_dipolar: [0.0; 2],
            c_nsr: [0.0; 2],
            eqq: [0.0; 2],
            c_tensor: 0.0,
            c_scalar: 0.0,
            g_s: 0.0,
            g_r: 0.0,
            g_nuc: [0.0; 2],
            sigma: [0.0; 2],
            d0: 1.0,
            alpha_par: 0.0,
            alpha_perp: 0.0,
            external_rate_hz: 0.0,
            defaults: Defaults::default(),
            sources: BTreeMap::new(),
        }
    }

    /// Isotropic polarizability (α∥ + 2α⊥)/3.
    pub fn alpha0(&self) -> f64 {
        (self.alpha_par + 2.0 * self.alpha_perp) / 3.0
    }

    /// Anisotropic polarizability (2/3)(α∥ − α⊥).
    pub fn alpha2(&self) -> f64 {
        2.0 / 3.0 * (self.alpha_par - self.alpha_perp)
    }

    pub fn validate(&self) -> Result<()> {
        let s = self.spins;
        for (n, v) in [("S", s.s), ("I1", s.i1), ("I2", s.i2)] {
            if v.twice() < 0 {
                return Err(Error::Data(format!("spin {n} is negative")));
            }
        }
        if !(self.b_rot > 0.0) {
            return Err(Error::Data(format!("B_rot must be positive, got {}", self.b_rot)));
        }
        if !self.alpha_par.is_finite() || !self.alpha_perp.is_finite() {
            return Err(Error::Data("polarizabilities must be finite".into()));
        }
        if self.d0 <= 0.0 {
            return Err(Error::Data("d0 must be positive".into()));
        }
        match self.symmetry {
            Symmetry::SingletSigma => {
                if s.s != HalfInt::ZERO {
                    return Err(Error::Data("singlet_sigma requires S = 0".into()));
                }
                let doublet_only = self.gamma != 0.0
                    || self.b_fermi.iter().any(|v| *v != 0.0)
                    || self.c_dipolar.iter().any(|v| *v != 0.0)
                    || self.g_s != 0.0;
                if doublet_only {
                    return Err(Error::Data("singlet_sigma spec carries doublet-only constants".into()));
                }
            }
            Symmetry::DoubletSigma => {
                if s.s != HalfInt::HALF {
                    return Err(Error::Data("doublet_sigma requires S = 1/2".into()));
                }
                if self.eqq.iter().any(|v| *v != 0.0) || self.c_tensor != 0.0 || self.c_scalar != 0.0 {
                    return Err(Error::Data("doublet_sigma spec carries singlet-only constants".into()));
                }
            }
        }
        Ok(())
    }

    /// Parses a dataset, reporting schema problems with line numbers.
    pub fn from_toml_str(text: &str, path: &Path) -> Result<Self> {
        parse_dataset(text, path)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_toml_str(&text, path)
    }

    /// One of the shipped datasets by short name (`caf`, `rbcs`).
    pub fn builtin(name: &str) -> Result<Self> {
        let (text, file) = match name.to_ascii_lowercase().as_str() {
            "caf" => (CAF_TOML, "caf.toml"),
            "rbcs" => (RBCS_TOML, "rbcs.toml"),
            other => return Err(Error::InvalidArgument(format!("no builtin dataset {other:?}"))),
        };
        Self::from_toml_str(text, &PathBuf::from(file))
    }

    /// A builtin short name or a path to a dataset file.
    pub fn load(name_or_path: &str) -> Result<Self> {
        let p = Path::new(name_or_path);
        if p.exists() {
            Self::from_file(p)
        } else {
            Self::builtin(name_or_path)
        }
    }
}

pub const CAF_TOML: &str = include_str!("../data/caf.toml");
pub const RBCS_TOML: &str = include_str!("../data/rbcs.toml");

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Kind {
    Frequency,
    Dipole,
    Dimensionless,
    Polarizability,
    Rate,
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Applies {
    Both,
    Singlet,
    Doublet,
}

impl Applies {
    fn fits(self, symmetry: Symmetry) -> bool {
        matches!(
            (self, symmetry),
            (Applies::Both, _) | (Applies::Singlet, Symmetry::SingletSigma) | (Applies::Doublet, Symmetry::DoubletSigma)
        )
    }
}

struct Key {
    name: &'static str,
    kind: Kind,
    applies: Applies,
    required: bool,
}

const fn key(name: &'static str, kind: Kind, applies: Applies, required: bool) -> Key {
    Key {
        name,
        kind,
        applies,
        required,
    }
}

const KEYS: &[Key] = &[
    key("B_rot", Kind::Frequency, Applies::Both, true),
    key("D_rot", Kind::Frequency, Applies::Both, false),
    key("d0", Kind::Dipole, Applies::Both, true),
    key("alpha_par", Kind::Polarizability, Applies::Both, true),
    key("alpha_perp", Kind::Polarizability, Applies::Both, true),
    key("g_r", Kind::Dimensionless, Applies::Both, false),
    key("g_1", Kind::Dimensionless, Applies::Both, false),
    key("g_2", Kind::Dimensionless, Applies::Both, false),
    key("sigma_1", Kind::Dimensionless, Applies::Both, false),
    key("sigma_2", Kind::Dimensionless, Applies::Both, false),
    key("c_nsr_1", Kind::Frequency, Applies::Both, false),
    key("c_nsr_2", Kind::Frequency, Applies::Both, false),
    key("external_rate", Kind::Rate, Applies::Both, false),
    key("gamma", Kind::Frequency, Applies::Doublet, true),
    key("g_S", Kind::Dimensionless, Applies::Doublet, true),
    key("b_fermi_1", Kind::Frequency, Applies::Doublet, false),
    key("b_fermi_2", Kind::Frequency, Applies::Doublet, false),
    key("c_dipolar_1", Kind::Frequency, Applies::Doublet, false),
    key("c_dipolar_2", Kind::Frequency, Applies::Doublet, false),
    key("eQq_1", Kind::Frequency, Applies::Singlet, false),
    key("eQq_2", Kind::Frequency, Applies::Singlet, false),
    key("c_tensor", Kind::Frequency, Applies::Singlet, false),
    key("c_scalar", Kind::Frequency, Applies::Singlet, false),
];

fn unit_factor(kind: Kind, unit: &str) -> Option<f64> {
    let u = unit.trim();
    match kind {
        Kind::Frequency => match u {
            "GHz" => Some(1e3),
            "MHz" => Some(1.0),
            "kHz" => Some(1e-3),
            "Hz" => Some(1e-6),
            _ => None,
        },
        Kind::Dipole => match u {
            "D" | "debye" => Some(1.0),
            _ => None,
        },
        Kind::Dimensionless => match u {
            "" | "1" => Some(1.0),
            _ => None,
        },
        Kind::Polarizability => match u {
            "au" | "a.u." => Some(units::au_polarizability_to_mhz_per_kw_cm2()),
            "MHz/(kW/cm2)" => Some(1.0),
            "kHz/(kW/cm2)" => Some(1e-3),
            "Hz/(kW/cm2)" => Some(1e-6),
            _ => None,
        },
        Kind::Rate => match u {
            "Hz" | "1/s" => Some(1.0),
            _ => None,
        },
    }
}

/// 1-based line of the first line that defines `key` (as `key =` or `[key]`).
fn line_of(text: &str, key: &str) -> usize {
    for (i, line) in text.lines().enumerate() {
        let t = line.trim_start();
        if let Some(rest) = t.strip_prefix(key) {
            if rest.trim_start().starts_with('=') {
                return i + 1;
            }
        }
        if t.starts_with('[') && t.trim_end().trim_matches(|c| c == '[' || c == ']') == key {
            return i + 1;
        }
    }
    1
}

pub(crate) fn line_of_offset(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawFile {
    schema: u32,
    species: RawSpecies,
    constants: BTreeMap<String, RawConstant>,
    #[serde(default)]
    defaults: Defaults,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSpecies {
    name: String,
    symmetry: String,
    #[serde(rename = "twice_S")]
    twice_s: i32,
    #[serde(rename = "twice_I1")]
    twice_i1: i32,
    #[serde(rename = "twice_I2")]
    twice_i2: i32,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConstant {
    value: f64,
    #[serde(default)]
    unit: String,
    source: String,
}

fn parse_dataset(text: &str, path: &Path) -> Result<MoleculeSpec> {
    let schema_err = |line: usize, message: String| Error::Schema {
        path: path.to_path_buf(),
        line,
        message,
    };
    let raw: RawFile = toml::from_str(text).map_err(|e| {
        let line = e.span().map(|s| line_of_offset(text, s.start)).unwrap_or(1);
        schema_err(line, e.message().to_string())
    })?;
    if raw.schema != 1 {
        return Err(schema_err(
            line_of(text, "schema"),
            format!("unsupported schema version {}", raw.schema),
        ));
    }
    let symmetry: Symmetry = raw
        .species
        .symmetry
        .parse()
        .map_err(|e: Error| schema_err(line_of(text, "symmetry"), e.to_string()))?;
    for (k, v) in [
        ("twice_S", raw.species.twice_s),
        ("twice_I1", raw.species.twice_i1),
        ("twice_I2", raw.species.twice_i2),
    ] {
        if v < 0 {
            return Err(schema_err(line_of(text, k), format!("{k} must be non-negative")));
        }
    }
    let spins = Spins {
        s: HalfInt::from_twice(raw.species.twice_s),
        i1: HalfInt::from_twice(raw.species.twice_i1),
        i2: HalfInt::from_twice(raw.species.twice_i2),
    };

    let mut values: BTreeMap<&'static str, f64> = BTreeMap::new();
    let mut sources = BTreeMap::new();
    for (name, c) in &raw.constants {
        let line = line_of(text, name);
        let Some(k) = KEYS.iter().find(|k| k.name == name) else {
            return Err(schema_err(line, format!("unknown constant {name:?}")));
        };
        if !k.applies.fits(symmetry) {
            return Err(schema_err(
                line,
                format!("constant {name:?} is not allowed for symmetry {:?}", raw.species.symmetry),
            ));
        }
        let Some(factor) = unit_factor(k.kind, &c.unit) else {
            return Err(schema_err(
                line,
                format!("unit {:?} is not valid for {name:?} ({:?})", c.unit, k.kind),
            ));
        };
        if !c.value.is_finite() {
            return Err(schema_err(line, format!("constant {name:?} is not finite")));
        }
        if c.source.trim().is_empty() {
            return Err(schema_err(line, format!("constant {name:?} has an empty source")));
        }
        values.insert(k.name, c.value * factor);
        sources.insert(name.clone(), c.source.clone());
    }
    for k in KEYS {
        let needed = k.required && k.applies.fits(symmetry);
        if needed && !values.contains_key(k.name) {
            return Err(schema_err(
                line_of(text, "constants"),
                format!("missing required constant {:?}", k.name),
            ));
        }
    }
    let get = |k: &str| values.get(k).copied().unwrap_or(0.0);

    let mut spec = MoleculeSpec::new(&raw.species.name, symmetry, spins, get("B_rot"));
    spec.d_rot = get("D_rot");
    spec.d0 = get("d0");
    spec.alpha_par = get("alpha_par");
    spec.alpha_perp = get("alpha_perp");
    spec.g_r = get("g_r");
    spec.g_nuc = [get("g_1"), get("g_2")];
    spec.sigma = [get("sigma_1"), get("sigma_2")];
    spec.c_nsr = [get("c_nsr_1"), get("c_nsr_2")];
    spec.external_rate_hz = get("external_rate");
    spec.gamma = get("gamma");
    spec.g_s = get("g_S");
    spec.b_fermi = [get("b_fermi_1"), get("b_fermi_2")];
    spec.c_dipolar = [get("c_dipolar_1"), get("c_dipolar_2")];
    spec.eqq = [get("eQq_1"), get("eQq_2")];
    spec.c_tensor = get("c_tensor");
    spec.c_scalar = get("c_scalar");
    spec.defaults = raw.defaults;
    spec.sources = sources;
    spec.validate().map_err(|e| schema_err(line_of(text, "species"), e.to_string()))?;
    Ok(spec)
}
