//! P1/P2 Lagrange finite elements on triangles: dof maps, quadrature, and
//! assembly of mass, variable-coefficient stiffness, load, and boundary terms.

mod assembly;
mod boundary;
mod dirichlet;
mod dofs;
pub mod element;
mod norms;
pub mod quadrature;

use thiserror::Error;

use crate::mesh::{Point, Side};
use crate::sparse::SparseError;

pub use assembly::{
    assemble_load, assemble_mass, assemble_neumann, assemble_neumann_all, assemble_stiffness, integrate, interpolate,
    QuadratureCache,
};
pub use boundary::{BoundaryCondition, BoundarySpec};
pub use dirichlet::{apply_dirichlet, apply_dirichlet_values, dirichlet_values, DirichletLift};
pub use dofs::DofMap;
pub use norms::{h1_seminorm_error, l2_error};

/// Polynomial degree of the Lagrange space.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Degree {
    P1,
    P2,
}

impl Degree {
    pub fn local_dofs(self) -> usize {
        match self {
            Degree::P1 => 3,
            Degree::P2 => 6,
        }
    }

    pub fn order(self) -> usize {
        match self {
            Degree::P1 => 1,
            Degree::P2 => 2,
        }
    }

    pub fn from_order(k: usize) -> Option<Degree> {
        match k {
            1 => Some(Degree::P1),
            2 => Some(Degree::P2),
            _ => None,
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FemError {
    #[error("triangle {triangle} has nonpositive area {area:e}")]
    NonPositiveArea { triangle: usize, area: f64 },
    #[error("field is not finite at ({}, {}) in triangle {triangle}", point[0], point[1])]
    NonFiniteField { triangle: usize, point: Point },
    #[error("side {0} is a Dirichlet segment; Neumann data cannot be assembled there")]
    DirichletSegment(Side),
    #[error("no boundary condition assigned to side {0}")]
    UnassignedSide(Side),
    #[error("at least one boundary side must carry a Dirichlet condition")]
    NoDirichletSegment,
    #[error("vector length {got} does not match {expected} dofs")]
    Dimension { expected: usize, got: usize },
    #[error(transparent)]
    Sparse(#[from] SparseError),
}
