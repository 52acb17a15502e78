//! Level structure, qudit level-set search, microwave gate synthesis and
//! error budgets for ¹Σ and ²Σ diatomic molecules in magnetic and optical
//! trapping fields.
//!
//! The pipeline is
//! dataset ([`molecule`]) → eigenstates ([`hamiltonian`]) → line lists
//! ([`transitions`]) → qudit plan ([`search`]) → pulse sequences ([`gates`])
//! → circuit simulation ([`circuit`]) → error budget ([`budget`]).
//!
//! Energies are E/h in MHz, fields in gauss, intensities in kW cm⁻², dipoles
//! in debye and times in seconds throughout; see [`units`].

// NaN must fail validation, hence `!(x >= 0.0)`; numeric kernels index
// several parallel arrays per loop.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod angmom;
pub mod budget;
pub mod circuit;
pub mod config;
pub mod error;
pub mod gates;
pub mod hamiltonian;
pub mod io;
pub mod molecule;
pub mod search;
pub mod transitions;
pub mod units;

pub use angmom::{clebsch_gordan, enumerate_basis, wigner3j, wigner6j, BasisState, HalfInt, Scheme, Spins};
pub use error::{Error, Result};
pub use hamiltonian::{EigenLevel, Engine, FieldPoint, Spectrum};
pub use molecule::{MoleculeSpec, Symmetry};
pub use search::{LossModel, QuditPlan};
pub use transitions::{Polarization, TransitionLine};
