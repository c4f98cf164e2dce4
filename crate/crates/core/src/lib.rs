//! Numerical toolkit for Maxwell-Klein-Gordon initial data on periodic
//! lattices: spectral calculus and dyadic frequency projections,
//! constraint-preserving excision and gluing, a support-preserving
//! divergence solver, Coulomb projection, energy-concentration coverings,
//! gauge patching, space-time dyadic norms, and a temporal-gauge evolver.

pub mod bridge;
pub mod error;
pub mod fft;
pub mod fld;
pub mod lattice;
pub mod quad;
pub mod region;
pub mod spectral;

pub mod charge;
pub mod cutoff;
pub mod data;
pub mod divsolve;
pub mod scales;
pub mod synth;

pub use error::{Error, Result};
pub use lattice::{Field, FieldKind, Lattice, TimeAxis};
pub use region::{Region, Shape};
