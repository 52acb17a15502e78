//! Physical constants and unit conversions.
//!
//! Internal units: energies as E/h in MHz, magnetic field in gauss, laser
//! intensity in kW cm^-2, dipole moments in debye, time in seconds.

use std::f64::consts::PI;

/// Bohr magneton over h, MHz per gauss.
pub const BOHR_MAGNETON_MHZ_PER_G: f64 = 1.399_624_493_61;

/// Nuclear magneton over h, MHz per gauss.
pub const NUCLEAR_MAGNETON_MHZ_PER_G: f64 = 7.622_593_229e-4;

const PLANCK_J_S: f64 = 6.626_070_15e-34;
const EPSILON_0: f64 = 8.854_187_812_8e-12;
const SPEED_OF_LIGHT: f64 = 299_792_458.0;
const ATOMIC_POLARIZABILITY_SI: f64 = 1.648_777_274_36e-41;

/// Light shift per unit polarizability: one atomic unit of polarizability in
/// a field of 1 kW cm^-2 shifts a level by this many MHz (E = alpha I / 2 eps0 c).
pub fn au_polarizability_to_mhz_per_kw_cm2() -> f64 {
    let intensity_si = 1.0e7; // 1 kW cm^-2 in W m^-2
    ATOMIC_POLARIZABILITY_SI * intensity_si / (2.0 * EPSILON_0 * SPEED_OF_LIGHT) / PLANCK_J_S / 1.0e6
}

/// Angular frequency (rad/s) for a frequency given in MHz.
pub fn mhz_to_angular(f_mhz: f64) -> f64 {
    2.0 * PI * f_mhz * 1.0e6
}

/// Rabi frequency (rad/s) implied by a pi/2 pulse of the given duration.
pub fn rabi_from_half_pi(t_half_pi: f64) -> f64 {
    PI / (2.0 * t_half_pi)
}
