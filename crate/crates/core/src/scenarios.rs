//! Ready-made problems: the manufactured convergence case and the laser pulse.

use std::sync::Arc;

use crate::ensemble::{EnsembleError, EnsembleProblem, Member, Order, SchemeConfig};
use crate::fem::{BoundaryCondition, BoundarySpec, Degree};
use crate::field::ScalarField;
use crate::mesh::{Diagonal, Mesh, Side};
use crate::verification::{manufactured_source, ManufacturedCase};

/// Two members `k = 1 +- 0.01` with manufactured sources, homogeneous
/// Dirichlet data on every side, on the `m x m` structured mesh.
pub fn build_convergence_case(m: usize, degree: Degree) -> Result<(EnsembleProblem, ManufacturedCase), EnsembleError> {
    let case = ManufacturedCase::default();
    let mesh = Arc::new(Mesh::structured(m, Diagonal::default())?);
    let members = (0..case.members())
        .map(|j| {
            let exact = case.member_exact(j);
            Member::new(case.conductivity(j), manufactured_source(&case, j), exact.clone()).with_exact(exact)
        })
        .collect();
    let problem = EnsembleProblem::new(mesh, degree, BoundarySpec::homogeneous_dirichlet(), members)?;
    Ok((problem, case))
}

/// `dt = 0.5 / m`, `t* = 1`.
pub fn convergence_config(order: Order, m: usize) -> SchemeConfig {
    SchemeConfig::new(order, 0.5 / m as f64, 1.0)
}

/// Gaussian laser pulse on a plate held at unit temperature on two sides
/// with a prescribed flux on the other two.
#[derive(Debug, Clone, PartialEq)]
pub struct LaserScenario {
    pub conductivities: Vec<f64>,
    pub amplitude: f64,
    pub width: f64,
    pub center: [f64; 2],
    /// The pulse is on for `0 <= t <= cutoff`.
    pub cutoff: f64,
    /// Temperature on the right and bottom sides.
    pub wall_temperature: f64,
    /// `k grad T . n` on the left and top sides.
    pub flux: f64,
    pub initial: f64,
    pub m: usize,
    pub diagonal: Diagonal,
    pub dt: f64,
    pub final_time: f64,
}

impl Default for LaserScenario {
    fn default() -> Self {
        LaserScenario {
            conductivities: vec![110.0, 100.0, 90.0],
            amplitude: 4000.0,
            width: 8.0,
            center: [0.5, 0.5],
            cutoff: 0.005,
            wall_temperature: 1.0,
            flux: 1.0,
            initial: 1.0,
            m: 64,
            diagonal: Diagonal::default(),
            dt: 0.005,
            final_time: 0.01,
        }
    }
}

impl LaserScenario {
    /// `J` conductivities spread evenly over `[90, 110]`; a single member gets 100.
    pub fn with_spread(members: usize) -> Self {
        let conductivities = if members <= 1 {
            vec![100.0; members]
        } else {
            (0..members).map(|j| 100.0 + 10.0 * (2.0 * j as f64 / (members - 1) as f64 - 1.0)).collect()
        };
        LaserScenario { conductivities, ..LaserScenario::default() }
    }

    pub fn pulse(&self) -> ScalarField {
        let (a, w, c, cutoff) = (self.amplitude, self.width, self.center, self.cutoff);
        ScalarField::new(move |p, t| {
            if (0.0..=cutoff).contains(&t) {
                a * (-w * ((p[0] - c[0]).powi(2) + (p[1] - c[1]).powi(2))).exp()
            } else {
                0.0
            }
        })
    }

    pub fn boundary(&self) -> Result<BoundarySpec, EnsembleError> {
        let wall = BoundaryCondition::Dirichlet(ScalarField::constant(self.wall_temperature));
        let flux = BoundaryCondition::Neumann(ScalarField::constant(self.flux));
        Ok(BoundarySpec::new([
            (Side::Right, wall.clone()),
            (Side::Bottom, wall),
            (Side::Left, flux.clone()),
            (Side::Top, flux),
        ])?)
    }

    pub fn build(&self, degree: Degree) -> Result<EnsembleProblem, EnsembleError> {
        let mesh = Arc::new(Mesh::structured(self.m, self.diagonal)?);
        let source = self.pulse();
        let members = self
            .conductivities
            .iter()
            .map(|&k| Member::new(ScalarField::constant(k), source.clone(), ScalarField::constant(self.initial)))
            .collect();
        EnsembleProblem::new(mesh, degree, self.boundary()?, members)
    }

    pub fn config(&self, order: Order) -> SchemeConfig {
        SchemeConfig::new(order, self.dt, self.final_time)
    }
}

/// The laser scenario with its default parameters and quadratic elements.
pub fn build_laser_case() -> Result<EnsembleProblem, EnsembleError> {
    LaserScenario::default().build(Degree::P2)
}
