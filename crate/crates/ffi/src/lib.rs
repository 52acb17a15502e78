//! C ABI over `molqudit`.
//!
//! Objects cross the boundary as opaque handles created by `mq_*_new`,
//! `mq_*_load` or `mq_*_compute` and released by the matching `mq_*_free`.
//! Every fallible call returns an [`MqStatus`]; on failure the message is
//! available from [`mq_last_error`] on the same thread. Strings returned to
//! the caller are owned and must be released with [`mq_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use molqudit::budget::{circuit_budget, NoiseSpec};
use molqudit::circuit::{deutsch_run, LogicalMapping, Verdict};
use molqudit::search::search_qudit;
use molqudit::{Engine, Error, FieldPoint, LossModel, MoleculeSpec, QuditPlan, Spectrum};

/// Status codes returned by every fallible call.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MqStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Data = 3,
    Numerical = 4,
    Plan = 5,
    Io = 6,
    Panic = 7,
}

pub struct MqMolecule(MoleculeSpec);
pub struct MqEngine(Engine);
pub struct MqSpectrum(Spectrum);
pub struct MqPlan(QuditPlan);

/// One eigenlevel. Energies in MHz, `mu` in MHz/G, `dedi` in MHz per kW/cm².
#[repr(C)]
#[derive(Clone, Copy, Debug, Default)]
pub struct MqLevel {
    pub energy_mhz: f64,
    pub mu_mhz_per_g: f64,
    pub dedi_mhz_per_kw_cm2: f64,
    pub n: u32,
    pub twice_mf: i32,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, Default)]
pub struct MqDeutschResult {
    pub p_state2: f64,
    /// 1 when the verdict is "constant", 0 for "balanced".
    pub constant: i32,
    /// 1 when the verdict matches the oracle's function class.
    pub correct: i32,
    pub pulse_count: usize,
    pub total_time_s: f64,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, Default)]
pub struct MqBudget {
    /// Limiting coherence time, s; infinity when nothing limits it.
    pub tau_d_s: f64,
    pub decoherence: f64,
    pub off_resonant: f64,
    pub frequency: f64,
    pub total: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("nul bytes removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> MqStatus {
    match e {
        Error::InvalidArgument(_) | Error::UnknownLevel(_) | Error::DimensionMismatch { .. } => MqStatus::InvalidArgument,
        Error::Schema { .. } | Error::Data(_) | Error::Json(_) => MqStatus::Data,
        Error::Eigensolver { .. } | Error::TrackingAmbiguous { .. } => MqStatus::Numerical,
        Error::Plan(_) | Error::RouteNotFound { .. } => MqStatus::Plan,
        Error::Io { .. } => MqStatus::Io,
    }
}

enum Fail {
    Null(&'static str),
    Lib(Error),
}

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail::Lib(e)
    }
}

/// Runs `f`, translating errors and panics into a status plus last-error text.
fn guard(f: impl FnOnce() -> Result<(), Fail>) -> MqStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => MqStatus::Ok,
        Ok(Err(Fail::Null(what))) => {
            set_error(format!("null pointer: {what}"));
            MqStatus::NullPointer
        }
        Ok(Err(Fail::Lib(e))) => {
            set_error(e.to_string());
            status_of(&e)
        }
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(format!("internal panic: {msg}"));
            MqStatus::Panic
        }
    }
}

unsafe fn href<'a, T>(p: *const T, what: &'static str) -> Result<&'a T, Fail> {
    p.as_ref().ok_or(Fail::Null(what))
}

unsafe fn out<'a, T>(p: *mut T, what: &'static str) -> Result<&'a mut T, Fail> {
    p.as_mut().ok_or(Fail::Null(what))
}

unsafe fn text<'a>(p: *const c_char, what: &'static str) -> Result<&'a str, Fail> {
    if p.is_null() {
        return Err(Fail::Null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Fail::Lib(Error::InvalidArgument(format!("{what} is not UTF-8"))))
}

fn owned(s: String) -> *mut c_char {
    CString::new(s.replace('\0', " ")).expect("nul bytes removed").into_raw()
}

/// Message of the last failed call on this thread as an owned string, or
/// NULL when no call has failed. Release with [`mq_string_free`].
#[no_mangle]
pub extern "C" fn mq_last_error() -> *mut c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null_mut(), |c| c.clone().into_raw()))
}

/// Releases a string returned by this library. NULL is ignored.
///
/// # Safety
/// `s` must come from this library and not have been freed already.
#[no_mangle]
pub unsafe extern "C" fn mq_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn mq_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Loads a builtin dataset (`caf`, `rbcs`) or a dataset file.
///
/// # Safety
/// `name_or_path` must be a NUL-terminated string; `out_mol` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mq_molecule_load(name_or_path: *const c_char, out_mol: *mut *mut MqMolecule) -> MqStatus {
    guard(|| {
        let slot = out(out_mol, "out_mol")?;
        let spec = MoleculeSpec::load(text(name_or_path, "name_or_path")?)?;
        *slot = Box::into_raw(Box::new(MqMolecule(spec)));
        Ok(())
    })
}

/// # Safety
/// `mol` must be NULL or a handle from [`mq_molecule_load`].
#[no_mangle]
pub unsafe extern "C" fn mq_molecule_free(mol: *mut MqMolecule) {
    if !mol.is_null() {
        drop(Box::from_raw(mol));
    }
}

/// Species name as an owned string.
///
/// # Safety
/// `mol` must be a live handle; `out_name` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mq_molecule_name(mol: *const MqMolecule, out_name: *mut *mut c_char) -> MqStatus {
    guard(|| {
        let m = href(mol, "mol")?;
        *out(out_name, "out_name")? = owned(m.0.name.clone());
        Ok(())
    })
}

/// Builds the Hamiltonian operators up to rotational level `n_max`.
///
/// # Safety
/// `mol` must be a live handle; `out_engine` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mq_engine_new(mol: *const MqMolecule, n_max: u32, out_engine: *mut *mut MqEngine) -> MqStatus {
    guard(|| {
        let m = href(mol, "mol")?;
        let slot = out(out_engine, "out_engine")?;
        *slot = Box::into_raw(Box::new(MqEngine(Engine::new(&m.0, n_max)?)));
        Ok(())
    })
}

/// # Safety
/// `engine` must be NULL or a handle from [`mq_engine_new`].
#[no_mangle]
pub unsafe extern "C" fn mq_engine_free(engine: *mut MqEngine) {
    if !engine.is_null() {
        drop(Box::from_raw(engine));
    }
}

/// Diagonalizes at field `b_gauss`, intensity `intensity_kw_cm2` and trap
/// polarization angle `beta_rad`, including μ and dE/dI.
///
/// # Safety
/// `engine` must be a live handle; `out_spectrum` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mq_spectrum_compute(
    engine: *const MqEngine,
    b_gauss: f64,
    intensity_kw_cm2: f64,
    beta_rad: f64,
    out_spectrum: *mut *mut MqSpectrum,
) -> MqStatus {
    guard(|| {
        let e = href(engine, "engine")?;
        let slot = out(out_spectrum, "out_spectrum")?;
        let field = FieldPoint {
            b_gauss,
            intensity: intensity_kw_cm2,
            beta: beta_rad,
        };
        *slot = Box::into_raw(Box::new(MqSpectrum(e.0.diagonalize(&field)?)));
        Ok(())
    })
}

/// # Safety
/// `spectrum` must be NULL or a handle from [`mq_spectrum_compute`].
#[no_mangle]
pub unsafe extern "C" fn mq_spectrum_free(spectrum: *mut MqSpectrum) {
    if !spectrum.is_null() {
        drop(Box::from_raw(spectrum));
    }
}

/// Number of levels; 0 for a NULL handle.
///
/// # Safety
/// `spectrum` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn mq_spectrum_len(spectrum: *const MqSpectrum) -> usize {
    spectrum.as_ref().map_or(0, |s| s.0.levels.len())
}

/// Level `index` in energy order.
///
/// # Safety
/// `spectrum` must be a live handle; `out_level` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mq_spectrum_level(spectrum: *const MqSpectrum, index: usize, out_level: *mut MqLevel) -> MqStatus {
    guard(|| {
        let s = href(spectrum, "spectrum")?;
        let slot = out(out_level, "out_level")?;
        let l =
            s.0.levels
                .get(index)
                .ok_or_else(|| Error::InvalidArgument(format!("level index {index} out of range 0..{}", s.0.levels.len())))?;
        *slot = MqLevel {
            energy_mhz: l.energy,
            mu_mhz_per_g: l.mu,
            dedi_mhz_per_kw_cm2: l.dedi,
            n: l.label.n,
            twice_mf: l.label.m_f.twice(),
        };
        Ok(())
    })
}

/// Label of level `index` as an owned string.
///
/// # Safety
/// `spectrum` must be a live handle; `out_label` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mq_spectrum_label(spectrum: *const MqSpectrum, index: usize, out_label: *mut *mut c_char) -> MqStatus {
    guard(|| {
        let s = href(spectrum, "spectrum")?;
        let slot = out(out_label, "out_label")?;
        let l =
            s.0.levels
                .get(index)
                .ok_or_else(|| Error::InvalidArgument(format!("level index {index} out of range 0..{}", s.0.levels.len())))?;
        *slot = owned(l.name());
        Ok(())
    })
}

/// Index of the level with the given label.
///
/// # Safety
/// `spectrum` must be a live handle, `label` NUL-terminated and `out_index` writable.
#[no_mangle]
pub unsafe extern "C" fn mq_spectrum_find(spectrum: *const MqSpectrum, label: *const c_char, out_index: *mut usize) -> MqStatus {
    guard(|| {
        let s = href(spectrum, "spectrum")?;
        let slot = out(out_index, "out_index")?;
        *slot = s.0.find(text(label, "label")?)?.index;
        Ok(())
    })
}

/// Greedy qudit search. `spectrum` must come from `engine`.
///
/// # Safety
/// All handles must be live; `out_plan` must be writable.
#[no_mangle]
#[allow(clippy::too_many_arguments)]
pub unsafe extern "C" fn mq_plan_search(
    engine: *const MqEngine,
    spectrum: *const MqSpectrum,
    primary_n: u32,
    aux_n: u32,
    t_half_pi_s: f64,
    p_loss_max: f64,
    purity: f64,
    strength_min: f64,
    out_plan: *mut *mut MqPlan,
) -> MqStatus {
    guard(|| {
        let e = href(engine, "engine")?;
        let s = href(spectrum, "spectrum")?;
        let slot = out(out_plan, "out_plan")?;
        let model = LossModel {
            t_half_pi: t_half_pi_s,
            purity,
            p_loss_max,
            s_min: strength_min,
        };
        *slot = Box::into_raw(Box::new(MqPlan(search_qudit(&e.0, &s.0, primary_n, aux_n, &model)?)));
        Ok(())
    })
}

/// Parses a plan from its JSON form.
///
/// # Safety
/// `json` must be NUL-terminated; `out_plan` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mq_plan_from_json(json: *const c_char, out_plan: *mut *mut MqPlan) -> MqStatus {
    guard(|| {
        let slot = out(out_plan, "out_plan")?;
        *slot = Box::into_raw(Box::new(MqPlan(QuditPlan::from_json(text(json, "json")?)?)));
        Ok(())
    })
}

/// Serializes a plan to JSON as an owned string.
///
/// # Safety
/// `plan` must be a live handle; `out_json` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mq_plan_to_json(plan: *const MqPlan, out_json: *mut *mut c_char) -> MqStatus {
    guard(|| {
        let p = href(plan, "plan")?;
        let slot = out(out_json, "out_json")?;
        *slot = owned(p.0.to_json()?);
        Ok(())
    })
}

/// # Safety
/// `plan` must be NULL or a plan handle.
#[no_mangle]
pub unsafe extern "C" fn mq_plan_free(plan: *mut MqPlan) {
    if !plan.is_null() {
        drop(Box::from_raw(plan));
    }
}

/// Number of primary levels; 0 for a NULL handle.
///
/// # Safety
/// `plan` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn mq_plan_dimension(plan: *const MqPlan) -> usize {
    plan.as_ref().map_or(0, |p| p.0.dimension())
}

/// Largest audited off-resonant loss; NaN for a NULL handle.
///
/// # Safety
/// `plan` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn mq_plan_worst_loss(plan: *const MqPlan) -> f64 {
    plan.as_ref().map_or(f64::NAN, |p| p.0.worst_p_loss)
}

/// Runs Deutsch's algorithm with oracle 1..=4 on the first four primary levels.
///
/// # Safety
/// `plan` must be a live handle; `out_result` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mq_deutsch_run(plan: *const MqPlan, oracle: u32, out_result: *mut MqDeutschResult) -> MqStatus {
    guard(|| {
        let p = href(plan, "plan")?;
        let slot = out(out_result, "out_result")?;
        let r = deutsch_run(&p.0, &LogicalMapping::from_plan(&p.0), oracle as usize)?;
        *slot = MqDeutschResult {
            p_state2: r.p_state2,
            constant: (r.verdict == Verdict::Constant) as i32,
            correct: (r.verdict == r.expected) as i32,
            pulse_count: r.pulse_count,
            total_time_s: r.total_time_s,
        };
        Ok(())
    })
}

/// Error budget of the Deutsch circuit for `oracle`. Negative noise
/// arguments select the dataset defaults. `spectrum` must be computed at
/// the plan's field point.
///
/// # Safety
/// All handles must be live; `out_budget` must be writable.
#[no_mangle]
#[allow(clippy::too_many_arguments)]
pub unsafe extern "C" fn mq_budget(
    mol: *const MqMolecule,
    spectrum: *const MqSpectrum,
    plan: *const MqPlan,
    oracle: u32,
    noise_b_gauss: f64,
    noise_intensity_fraction: f64,
    external_rate_hz: f64,
    out_budget: *mut MqBudget,
) -> MqStatus {
    guard(|| {
        let m = href(mol, "mol")?;
        let s = href(spectrum, "spectrum")?;
        let p = href(plan, "plan")?;
        let slot = out(out_budget, "out_budget")?;
        let mut noise = NoiseSpec::from_spec(&m.0);
        if noise_b_gauss >= 0.0 {
            noise.db_gauss = noise_b_gauss;
        }
        if noise_intensity_fraction >= 0.0 {
            noise.di_fraction = noise_intensity_fraction;
        }
        if external_rate_hz >= 0.0 {
            noise.external_rate_hz = external_rate_hz;
        }
        let r = deutsch_run(&p.0, &LogicalMapping::from_plan(&p.0), oracle as usize)?;
        let b = circuit_budget(&s.0, &m.0, &p.0, &r.schedule, &noise)?;
        *slot = MqBudget {
            tau_d_s: b.tau_d_s.unwrap_or(f64::INFINITY),
            decoherence: b.decoherence,
            off_resonant: b.off_resonant,
            frequency: b.frequency,
            total: b.total,
        };
        Ok(())
    })
}
