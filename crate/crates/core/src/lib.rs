//! Simulation and fitting toolkit for the boron-vacancy (V_B^-) spin defect in
//! hexagonal boron nitride.
//!
//! The crate covers four things:
//!
//! * the S = 1 ground-state spin Hamiltonian with hyperfine coupling to three
//!   ^14N nuclei and a Stark shift from local electric fields ([`spin`]),
//! * Monte-Carlo sampling of charged defects on the hBN lattice and the
//!   Coulomb field they produce at the spin site ([`bath`]),
//! * ensemble-averaged resonance spectra and charge-density fitting
//!   ([`spectrum`], [`fit`]),
//! * thin-film interference and depth-resolved optical absorption for
//!   hBN/SiO2/Si stacks ([`optics`]).
//!
//! Everything random is driven by one seed; repeated runs with the same
//! configuration are bit-identical, independent of thread count.

pub mod bath;
pub mod commands;
pub mod config;
pub mod eigen;
pub mod error;
pub mod fit;
pub mod optics;
pub mod spectrum;
pub mod spin;
pub mod table;

pub use error::{Error, Result};
