//! Numerically exact simulation of single- and two-qubit superconducting
//! gate dynamics under non-Markovian 1/f dephasing noise.
//!
//! The crate is organized around the hierarchical equations of motion
//! (HEOM): a 1/f bath model with soft frequency cutoffs ([`bath`]) is
//! reduced to a certified sum-of-exponentials correlation function
//! ([`fit`]), which drives a hierarchy of auxiliary density operators
//! ([`heom`]).  On top of the propagator sit pulse-sequence scheduling
//! ([`control`]), cross-resonance gate calibration ([`crgate`]), quantum
//! process tomography ([`tomography`]), and the analytic oracles and
//! post-processing used to verify all of it ([`analytics`]).
//!
//! # Units
//!
//! Time is in nanoseconds throughout.  Frequencies, rates and energies
//! (ħ = 1) are stored as ordinary-frequency values in 1/ns, i.e. a
//! parameter quoted as "5 GHz" enters the Hamiltonian as the number 5.0
//! and phases evolve as `exp(-i*omega*t)`.  Temperature enters through
//! `beta = h/(k_B T)` in ns; see [`units`].  Config-file values carry
//! explicit unit suffixes and are scaled at the boundary.

pub mod analytics;
pub mod bath;
pub mod control;
pub mod crgate;
pub mod fit;
pub mod heom;
pub mod lindblad;
pub mod pauli;
pub mod pipeline;
pub mod propagate;
pub mod quad;
pub mod series;
pub mod tomography;
pub mod units;

pub use num_complex::Complex64 as C64;

/// Dense complex matrix used at API boundaries (system operators, density
/// matrices, unitaries).  Hot loops work on flat `&[C64]` slices instead.
pub type CMatrix = nalgebra::DMatrix<C64>;

/// Execution mode for the data-parallel inner loops.
///
/// `Parallel` fans the per-ADO work out over a rayon pool.  Every ADO
/// derivative is written to its own slot, so both modes produce
/// bit-identical results.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum ExecMode {
    #[cfg_attr(not(feature = "parallel"), default)]
    Sequential,
    #[cfg(feature = "parallel")]
    #[cfg_attr(feature = "parallel", default)]
    Parallel,
}
