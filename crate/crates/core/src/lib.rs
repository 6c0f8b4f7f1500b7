//! Finite element solver for ensembles of heat-conduction problems that share
//! one coefficient matrix across members.
//!
//! Each member `j` solves `T_t - div(kappa_j grad T) = f_j` on the unit square.
//! The ensemble-mean conductivity is treated implicitly and each member's
//! fluctuation about it explicitly, so every timestep is one factorized
//! system with `J` right-hand sides.

pub mod bench;
pub mod ensemble;
pub mod fem;
pub mod field;
pub mod io;
pub mod linsolve;
pub mod mesh;
pub mod scenarios;
pub mod sparse;
pub mod verification;

pub use field::ScalarField;
pub use mesh::{Diagonal, Mesh, Side};
