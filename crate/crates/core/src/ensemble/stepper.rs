use rayon::prelude::*;

use crate::fem::{
    assemble_load, assemble_mass, assemble_neumann_all, assemble_stiffness, dirichlet_values, interpolate, DirichletLift,
    DofMap,
};
use crate::field::ScalarField;
use crate::linsolve::{FactorizationCounter, LinearSolver, SolverPath};
use crate::sparse::CsrMatrix;

use super::problem::{check_stability_condition, mean_and_fluctuations, EnsembleProblem, StabilityReport};
use super::{Bootstrap, EnsembleError, Order, SchemeConfig, Splitting};

/// The shared operator of one scheme, eliminated and ready to solve.
#[derive(Debug)]
struct SharedSystem {
    /// `c M / dt + A_implicit` with Dirichlet rows and columns eliminated.
    matrix: CsrMatrix,
    lift: DirichletLift,
    solver: LinearSolver,
}

impl SharedSystem {
    fn build(
        mass: &CsrMatrix,
        implicit: &CsrMatrix,
        mass_scale: f64,
        dofs: &DofMap,
        path: SolverPath,
        counter: &FactorizationCounter,
    ) -> Result<Self, EnsembleError> {
        let full = mass.lin_comb(mass_scale, 1.0, implicit).map_err(crate::fem::FemError::from)?;
        let (matrix, lift) = DirichletLift::eliminate(&full, &dofs.constrained_mask());
        let solver = LinearSolver::prepare(path, &matrix, counter)?;
        Ok(SharedSystem { matrix, lift, solver })
    }
}

/// Prepared ensemble: assembled operators, one shared factorization, and the
/// member solution history.
///
/// Steps mutate the state in place. Not re-entrant; callers serialize access.
#[derive(Debug)]
pub struct EnsembleState {
    problem: EnsembleProblem,
    config: SchemeConfig,
    dofs: DofMap,
    mass: CsrMatrix,
    /// Stiffness of the implicitly treated conductivity (`<k>` or `k_max`).
    implicit: CsrMatrix,
    /// Stiffness of `<k>`, kept for energy accounting under either splitting.
    mean_stiffness: CsrMatrix,
    /// Per-member stiffness of the explicitly treated part.
    lagged: Vec<CsrMatrix>,
    shared: SharedSystem,
    counter: FactorizationCounter,
    kappa_max: Option<f64>,
    stability: StabilityReport,
    step: usize,
    current: Vec<Vec<f64>>,
    previous: Option<Vec<Vec<f64>>>,
    bootstrap_used: Option<Bootstrap>,
    pool: Option<rayon::ThreadPool>,
}

/// Assembles the operators, factorizes the shared matrix once, and loads
/// the initial data. Second-order states come back with two history levels.
pub fn prepare(problem: &EnsembleProblem, config: &SchemeConfig) -> Result<EnsembleState, EnsembleError> {
    config.validate()?;
    problem.check_conductivities()?;
    let stability = check_stability_condition(problem, config.order)?;
    if !stability.satisfied && !config.allow_unstable && config.splitting == Splitting::EnsembleMean {
        return Err(EnsembleError::StabilityViolated {
            ratio: stability.ratio,
            threshold: stability.threshold,
            order: config.order,
        });
    }
    let bootstrap = match (config.order, config.bootstrap) {
        (Order::First, _) => None,
        (Order::Second, Bootstrap::Auto) if problem.members.iter().all(|m| m.exact.is_some()) => Some(Bootstrap::Exact),
        (Order::Second, Bootstrap::Auto) => Some(Bootstrap::BackwardEuler),
        (Order::Second, b) => Some(b),
    };
    if bootstrap == Some(Bootstrap::Exact) {
        if let Some(j) = problem.members.iter().position(|m| m.exact.is_none()) {
            return Err(EnsembleError::MissingExactSolution(j));
        }
    }

    let pool = if config.workers > 1 {
        Some(
            rayon::ThreadPoolBuilder::new()
                .num_threads(config.workers)
                .build()
                .map_err(|e| EnsembleError::InvalidConfig(format!("cannot start worker pool: {e}")))?,
        )
    } else {
        None
    };

    let mesh = &problem.mesh;
    let dofs = DofMap::new(mesh, problem.degree, &problem.boundary);
    let mass = assemble_mass(mesh, &dofs)?;
    let (mean, fluct) = mean_and_fluctuations(problem);
    let mean_stiffness = assemble_stiffness(mesh, &dofs, &mean)?;

    let (implicit, lagged_coeffs, kappa_max) = match config.splitting {
        Splitting::EnsembleMean => (mean_stiffness.clone(), fluct, None),
        Splitting::KappaMax => {
            let kmax = problem.kappa_max();
            let coeffs = problem
                .members
                .iter()
                .map(|m| match m.conductivity.as_constant() {
                    Some(c) => ScalarField::constant(c - kmax),
                    None => {
                        let k = m.conductivity.clone();
                        ScalarField::new(move |p, t| k.eval(p, t) - kmax)
                    }
                })
                .collect::<Vec<_>>();
            (assemble_stiffness(mesh, &dofs, &ScalarField::constant(kmax))?, coeffs, Some(kmax))
        }
    };
    let assemble_lagged = |k: &ScalarField| assemble_stiffness(mesh, &dofs, k);
    let lagged = match &pool {
        Some(p) => p.install(|| lagged_coeffs.par_iter().map(assemble_lagged).collect::<Result<Vec<_>, _>>())?,
        None => lagged_coeffs.iter().map(assemble_lagged).collect::<Result<Vec<_>, _>>()?,
    };

    let counter = FactorizationCounter::default();
    let mass_scale = match config.order {
        Order::First => 1.0 / config.dt,
        Order::Second => 1.5 / config.dt,
    };
    let shared = SharedSystem::build(&mass, &implicit, mass_scale, &dofs, config.solver, &counter)?;
    let current = problem.members.iter().map(|m| interpolate(&dofs, &m.initial, 0.0)).collect();

    let mut state = EnsembleState {
        problem: problem.clone(),
        config: config.clone(),
        dofs,
        mass,
        implicit,
        mean_stiffness,
        lagged,
        shared,
        counter,
        kappa_max,
        stability,
        step: 0,
        current,
        previous: None,
        bootstrap_used: bootstrap,
        pool,
    };
    match bootstrap {
        Some(Bootstrap::Exact) => {
            let t1 = state.time_at(1);
            let next = state
                .problem
                .members
                .iter()
                .map(|m| interpolate(&state.dofs, m.exact.as_ref().expect("checked above"), t1))
                .collect();
            state.advance(next);
        }
        Some(_) => {
            let be = SharedSystem::build(
                &state.mass,
                &state.implicit,
                1.0 / config.dt,
                &state.dofs,
                config.solver,
                &state.counter,
            )?;
            let next = state.solve_step(&be, |s, j, rhs| s.first_order_history(j, rhs));
            let next = next.map_err(|e| EnsembleError::Step { step: 1, source: Box::new(e) })?;
            state.advance(next);
        }
        None => {}
    }
    Ok(state)
}

impl EnsembleState {
    fn time_at(&self, n: usize) -> f64 {
        n as f64 * self.config.dt
    }

    fn advance(&mut self, next: Vec<Vec<f64>>) {
        let prev = std::mem::replace(&mut self.current, next);
        self.previous = Some(prev);
        self.step += 1;
    }

    /// `M T^n / dt - L_j T^n`.
    fn first_order_history(&self, j: usize, rhs: &mut [f64]) {
        let t = &self.current[j];
        self.mass.mul_vec_into(t, rhs);
        rhs.iter_mut().for_each(|r| *r /= self.config.dt);
        self.lagged[j].mul_vec_acc(-1.0, t, rhs);
    }

    /// `M (4 T^n - T^{n-1}) / (2 dt) - L_j (2 T^n - T^{n-1})`.
    fn second_order_history(&self, j: usize, rhs: &mut [f64]) {
        let t = &self.current[j];
        let tp = &self.previous.as_ref().expect("second-order state has two levels")[j];
        let bdf: Vec<f64> = t.iter().zip(tp).map(|(a, b)| (4.0 * a - b) / (2.0 * self.config.dt)).collect();
        let extrap: Vec<f64> = t.iter().zip(tp).map(|(a, b)| 2.0 * a - b).collect();
        self.mass.mul_vec_into(&bdf, rhs);
        self.lagged[j].mul_vec_acc(-1.0, &extrap, rhs);
    }

    /// Builds every member's right-hand side for level `n + 1` and solves
    /// them against `system` in one multi-right-hand-side call.
    fn solve_step(
        &self,
        system: &SharedSystem,
        history: impl Fn(&Self, usize, &mut [f64]) + Sync,
    ) -> Result<Vec<Vec<f64>>, EnsembleError> {
        let t_next = self.time_at(self.step + 1);
        let mesh = &self.problem.mesh;
        let neumann = assemble_neumann_all(mesh, &self.dofs, &self.problem.boundary, t_next)?;
        let values = dirichlet_values(&self.dofs, &self.problem.boundary, t_next);
        let member_rhs = |j: usize| -> Result<Vec<f64>, EnsembleError> {
            let mut rhs = assemble_load(mesh, &self.dofs, &self.problem.members[j].source, t_next)?;
            let mut hist = vec![0.0; rhs.len()];
            history(self, j, &mut hist);
            for ((r, h), g) in rhs.iter_mut().zip(&hist).zip(&neumann) {
                *r += h + g;
            }
            system.lift.apply(&mut rhs, &values);
            Ok(rhs)
        };
        let count = self.current.len();
        match &self.pool {
            Some(pool) => pool.install(|| {
                let rhs = (0..count).into_par_iter().map(member_rhs).collect::<Result<Vec<_>, _>>()?;
                Ok(system.solver.solve_multi(&rhs, true)?)
            }),
            None => {
                let rhs = (0..count).map(member_rhs).collect::<Result<Vec<_>, _>>()?;
                Ok(system.solver.solve_multi(&rhs, false)?)
            }
        }
    }

    fn wrap(&self, e: EnsembleError) -> EnsembleError {
        EnsembleError::Step { step: self.step + 1, source: Box::new(e) }
    }

    fn scheme_name(&self) -> &'static str {
        match (self.config.order, self.config.splitting) {
            (Order::First, Splitting::EnsembleMean) => "first-order",
            (Order::Second, _) => "second-order",
            (Order::First, Splitting::KappaMax) => "kappa-max",
        }
    }

    fn expect_scheme(&self, expected: &'static str) -> Result<(), EnsembleError> {
        let found = self.scheme_name();
        if found == expected {
            Ok(())
        } else {
            Err(EnsembleError::WrongScheme { expected, found })
        }
    }

    pub fn step_first_order(&mut self) -> Result<(), EnsembleError> {
        self.expect_scheme("first-order")?;
        let next = self.solve_step(&self.shared, |s, j, rhs| s.first_order_history(j, rhs)).map_err(|e| self.wrap(e))?;
        self.advance(next);
        Ok(())
    }

    pub fn step_second_order(&mut self) -> Result<(), EnsembleError> {
        self.expect_scheme("second-order")?;
        let next = self.solve_step(&self.shared, |s, j, rhs| s.second_order_history(j, rhs)).map_err(|e| self.wrap(e))?;
        self.advance(next);
        Ok(())
    }

    pub fn step_kappa_max(&mut self) -> Result<(), EnsembleError> {
        self.expect_scheme("kappa-max")?;
        let next = self.solve_step(&self.shared, |s, j, rhs| s.first_order_history(j, rhs)).map_err(|e| self.wrap(e))?;
        self.advance(next);
        Ok(())
    }

    /// Advances one step with whichever scheme the state was prepared for.
    pub fn step(&mut self) -> Result<(), EnsembleError> {
        match (self.config.order, self.config.splitting) {
            (Order::First, Splitting::EnsembleMean) => self.step_first_order(),
            (Order::First, Splitting::KappaMax) => self.step_kappa_max(),
            (Order::Second, _) => self.step_second_order(),
        }
    }

    pub fn problem(&self) -> &EnsembleProblem {
        &self.problem
    }

    pub fn config(&self) -> &SchemeConfig {
        &self.config
    }

    pub fn dofs(&self) -> &DofMap {
        &self.dofs
    }

    pub fn step_index(&self) -> usize {
        self.step
    }

    pub fn time(&self) -> f64 {
        self.time_at(self.step)
    }

    /// Member coefficient vectors at the current level.
    pub fn current(&self) -> &[Vec<f64>] {
        &self.current
    }

    pub fn previous(&self) -> Option<&[Vec<f64>]> {
        self.previous.as_deref()
    }

    pub fn mass(&self) -> &CsrMatrix {
        &self.mass
    }

    pub fn implicit_stiffness(&self) -> &CsrMatrix {
        &self.implicit
    }

    pub fn mean_stiffness(&self) -> &CsrMatrix {
        &self.mean_stiffness
    }

    pub fn lagged_matrices(&self) -> &[CsrMatrix] {
        &self.lagged
    }

    /// The eliminated matrix that was factorized; identical for all members.
    pub fn shared_matrix(&self) -> &CsrMatrix {
        &self.shared.matrix
    }

    pub fn factorization_count(&self) -> usize {
        self.counter.count()
    }

    pub fn kappa_max(&self) -> Option<f64> {
        self.kappa_max
    }

    pub fn stability(&self) -> StabilityReport {
        self.stability
    }

    /// Bootstrap actually used for a second-order state.
    pub fn bootstrap_used(&self) -> Option<Bootstrap> {
        self.bootstrap_used
    }

    pub fn solver_path(&self) -> SolverPath {
        self.shared.solver.path()
    }
}
