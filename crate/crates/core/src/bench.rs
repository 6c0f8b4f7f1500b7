//! Shared factorization versus one factorization per member.

use std::time::{Duration, Instant};

use crate::ensemble::{prepare, EnsembleError, EnsembleProblem, Order};
use crate::fem::{
    assemble_load, assemble_mass, assemble_neumann_all, assemble_stiffness, dirichlet_values, interpolate, Degree,
    DirichletLift, DofMap,
};
use crate::linsolve::{FactorizationCounter, LinearSolver, SolverPath};
use crate::scenarios::LaserScenario;

#[derive(Debug, Clone)]
pub struct BenchReport {
    pub members: usize,
    pub m: usize,
    pub steps: usize,
    pub dofs: usize,
    pub shared_factorizations: usize,
    pub independent_factorizations: usize,
    pub shared_time: Duration,
    pub independent_time: Duration,
}

/// Each member stepped by plain backward Euler with its own matrix.
/// Returns the final member vectors and the factorization count.
pub fn run_independent(
    problem: &EnsembleProblem,
    dt: f64,
    steps: usize,
) -> Result<(Vec<Vec<f64>>, usize), EnsembleError> {
    let mesh = &problem.mesh;
    let dofs = DofMap::new(mesh, problem.degree, &problem.boundary);
    let mass = assemble_mass(mesh, &dofs)?;
    let counter = FactorizationCounter::default();
    let mut finals = Vec::with_capacity(problem.len());
    for member in &problem.members {
        let stiffness = assemble_stiffness(mesh, &dofs, &member.conductivity)?;
        let full = mass.lin_comb(1.0 / dt, 1.0, &stiffness).map_err(crate::fem::FemError::from)?;
        let (system, lift) = DirichletLift::eliminate(&full, &dofs.constrained_mask());
        let solver = LinearSolver::prepare(SolverPath::Direct, &system, &counter)?;
        let mut t = interpolate(&dofs, &member.initial, 0.0);
        for n in 1..=steps {
            let time = n as f64 * dt;
            let mut rhs = assemble_load(mesh, &dofs, &member.source, time)?;
            let neumann = assemble_neumann_all(mesh, &dofs, &problem.boundary, time)?;
            mass.mul_vec_acc(1.0 / dt, &t, &mut rhs);
            rhs.iter_mut().zip(&neumann).for_each(|(r, g)| *r += g);
            lift.apply(&mut rhs, &dirichlet_values(&dofs, &problem.boundary, time));
            t = solver.solve(&rhs)?;
        }
        finals.push(t);
    }
    Ok((finals, counter.count()))
}

/// Times both strategies on the laser problem with `members` conductivities
/// spread over `[90, 110]` on an `m x m` mesh.
pub fn bench_multirhs(members: usize, m: usize, steps: usize) -> Result<BenchReport, EnsembleError> {
    if members == 0 {
        return Err(EnsembleError::Empty);
    }
    let scenario = LaserScenario { m, final_time: steps as f64 * 0.005, ..LaserScenario::with_spread(members) };
    let problem = scenario.build(Degree::P2)?;
    let config = scenario.config(Order::First);

    let start = Instant::now();
    let mut state = prepare(&problem, &config)?;
    for _ in 0..steps {
        state.step()?;
    }
    let shared_time = start.elapsed();

    let start = Instant::now();
    let (_, independent_factorizations) = run_independent(&problem, config.dt, steps)?;
    let independent_time = start.elapsed();

    Ok(BenchReport {
        members,
        m,
        steps,
        dofs: state.dofs().num_dofs(),
        shared_factorizations: state.factorization_count(),
        independent_factorizations,
        shared_time,
        independent_time,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn factorization_counts() {
        let r = bench_multirhs(3, 4, 2).unwrap();
        assert_eq!(r.shared_factorizations, 1);
        assert_eq!(r.independent_factorizations, 3);
    }
}
