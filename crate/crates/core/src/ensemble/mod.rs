//! Ensemble timestepping with a shared coefficient matrix.
//!
//! First order (backward Euler with lagged fluctuation):
//!
//! ```text
//! (M/dt + A<k>) T_j^{n+1} = (M/dt) T_j^n - A_{k'_j} T_j^n + F_j^{n+1}
//! ```
//!
//! Second order (BDF2 with extrapolated fluctuation):
//!
//! ```text
//! (3M/(2dt) + A<k>) T_j^{n+1} = M (4 T_j^n - T_j^{n-1}) / (2dt)
//!                              - A_{k'_j} (2 T_j^n - T_j^{n-1}) + F_j^{n+1}
//! ```
//!
//! `<k>` is the pointwise member average of the conductivities and `k'_j` the
//! member's deviation from it. The left-hand matrix does not depend on `j`, so
//! it is factorized once and every step is a single multi-right-hand-side solve.

mod config;
mod energy;
mod problem;
mod run;
mod stepper;

use thiserror::Error;

use crate::fem::FemError;
use crate::linsolve::SolveError;
use crate::mesh::{MeshError, Point};

pub use config::{Bootstrap, Order, SchemeConfig, Splitting};
pub use energy::{energy_budget, Arrangement, EnergyCheck, EnergyLedger, EnergyVerdict, MemberLedger, MemberVerdict};
pub use problem::{check_stability_condition, mean_and_fluctuations, EnsembleProblem, Member, StabilityReport};
pub use run::{run, RunMetadata, Snapshot, StepRecord, TrajectoryStats};
pub use stepper::{prepare, EnsembleState};

#[derive(Debug, Error)]
pub enum EnsembleError {
    #[error("ensemble has no members")]
    Empty,
    #[error("invalid scheme configuration: {0}")]
    InvalidConfig(String),
    #[error("conductivity of member {member} is {value} at ({}, {}); it must be positive", point[0], point[1])]
    NonPositiveConductivity { member: usize, point: Point, value: f64 },
    #[error("mean conductivity is {value} at ({}, {}); it must be positive", point[0], point[1])]
    NonPositiveMean { point: Point, value: f64 },
    #[error(
        "stability condition violated: max |k'/<k>| = {ratio} exceeds {threshold} for the {order} scheme \
         (override with allow_unstable)"
    )]
    StabilityViolated { ratio: f64, threshold: f64, order: Order },
    #[error("exact-solution bootstrap requested but member {0} has no exact solution")]
    MissingExactSolution(usize),
    #[error("operation requires a {expected} state, this one is {found}")]
    WrongScheme { expected: &'static str, found: &'static str },
    #[error("the energy inequality is only stated for the ensemble-mean splitting")]
    EnergyNotApplicable,
    #[error("energy ledger was not retained for this run")]
    LedgerMissing,
    #[error("step {step} failed: {source}")]
    Step {
        step: usize,
        #[source]
        source: Box<EnsembleError>,
    },
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error(transparent)]
    Fem(#[from] FemError),
    #[error(transparent)]
    Solve(#[from] SolveError),
}
