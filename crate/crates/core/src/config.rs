//! Run configuration shared by the command-line tool and the C ABI.
//!
//! Every setting is optional at each layer. [`RunConfig::over`] stacks
//! layers so that command-line flags override a config file, which overrides
//! the defaults shipped with the dataset.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::budget::NoiseSpec;
use crate::error::{Error, Result};
use crate::hamiltonian::FieldPoint;
use crate::molecule::{line_of_offset, MoleculeSpec};
use crate::search::LossModel;

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Builtin dataset name or path to a dataset file.
    pub molecule: Option<String>,
    pub b_gauss: Option<f64>,
    pub intensity_kw_cm2: Option<f64>,
    pub polarization_angle_rad: Option<f64>,
    pub n_max: Option<u32>,
    pub primary_n: Option<u32>,
    pub aux_n: Option<u32>,
    pub t_half_pi_s: Option<f64>,
    pub p_loss_max: Option<f64>,
    pub purity: Option<f64>,
    pub strength_min: Option<f64>,
    pub noise_b_gauss: Option<f64>,
    pub noise_intensity_fraction: Option<f64>,
    pub external_rate_hz: Option<f64>,
    pub out_dir: Option<PathBuf>,
}

macro_rules! pick {
    ($top:expr, $base:expr, $($f:ident),*) => {
        RunConfig { $($f: $top.$f.or($base.$f)),* }
    };
}

impl RunConfig {
    /// Parses a TOML config file; schema problems carry a line number.
    pub fn from_toml_str(text: &str, path: &Path) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Schema {
            path: path.to_path_buf(),
            line: e.span().map(|s| line_of_offset(text, s.start)).unwrap_or(1),
            message: e.message().to_string(),
        })
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_toml_str(&text, path)
    }

    /// `self` layered on top of `base`: set fields win.
    pub fn over(self, base: RunConfig) -> RunConfig {
        pick!(
            self,
            base,
            molecule,
            b_gauss,
            intensity_kw_cm2,
            polarization_angle_rad,
            n_max,
            primary_n,
            aux_n,
            t_half_pi_s,
            p_loss_max,
            purity,
            strength_min,
            noise_b_gauss,
            noise_intensity_fraction,
            external_rate_hz,
            out_dir
        )
    }

    /// Fills every unset field from the dataset defaults.
    pub fn resolve(&self, spec: &MoleculeSpec) -> Result<Settings> {
        let d = &spec.defaults;
        let field = FieldPoint {
            b_gauss: self.b_gauss.unwrap_or(d.b_gauss),
            intensity: self.intensity_kw_cm2.unwrap_or(d.intensity_kw_cm2),
            beta: self.polarization_angle_rad.unwrap_or(d.polarization_angle_rad),
        };
        field.validate()?;
        let primary_n = self.primary_n.unwrap_or(d.primary_n);
        let aux_n = self.aux_n.unwrap_or(primary_n + 1);
        let n_max = self.n_max.unwrap_or(d.n_max);
        let model = LossModel {
            t_half_pi: self.t_half_pi_s.unwrap_or(d.t_half_pi_s),
            purity: self.purity.unwrap_or(d.purity),
            p_loss_max: self.p_loss_max.unwrap_or(d.p_loss_max),
            s_min: self.strength_min.unwrap_or(d.strength_min),
        };
        model.validate()?;
        let noise = NoiseSpec {
            db_gauss: self.noise_b_gauss.unwrap_or(d.noise_b_gauss),
            di_fraction: self.noise_intensity_fraction.unwrap_or(d.noise_intensity_fraction),
            external_rate_hz: self.external_rate_hz.unwrap_or(spec.external_rate_hz),
        };
        noise.validate()?;
        Ok(Settings {
            field,
            n_max,
            primary_n,
            aux_n,
            model,
            noise,
        })
    }
}

/// Fully resolved settings for one run.
#[derive(Clone, Debug, PartialEq)]
pub struct Settings {
    pub field: FieldPoint,
    /// Rotational cutoff; plan-building callers raise it to cover both manifolds.
    pub n_max: u32,
    pub primary_n: u32,
    pub aux_n: u32,
    pub model: LossModel,
    pub noise: NoiseSpec,
}
