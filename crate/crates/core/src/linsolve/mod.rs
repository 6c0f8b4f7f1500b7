//! Direct sparse SPD factorization reused across many right-hand sides,
//! with a conjugate-gradient fallback.

mod cg;
mod cholesky;
pub mod ordering;

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;

use rayon::prelude::*;
use thiserror::Error;

use crate::sparse::CsrMatrix;

pub use cg::ConjugateGradient;
pub use ordering::{reverse_cuthill_mckee, Permutation};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolveError {
    #[error("matrix is not positive definite: pivot {value:e} at row {pivot}")]
    NotPositiveDefinite { pivot: usize, value: f64 },
    #[error("right-hand side has length {got}, expected {expected}")]
    Dimension { expected: usize, got: usize },
    #[error("conjugate gradients stalled after {iterations} iterations at relative residual {residual:e}")]
    NotConverged { iterations: usize, residual: f64 },
}

/// Shared count of numeric factorizations; clones observe the same counter.
#[derive(Debug, Clone, Default)]
pub struct FactorizationCounter(Arc<AtomicUsize>);

impl FactorizationCounter {
    pub fn count(&self) -> usize {
        self.0.load(Ordering::SeqCst)
    }

    fn bump(&self) {
        self.0.fetch_add(1, Ordering::SeqCst);
    }
}

/// `P A P^T = L L^T` with a reverse Cuthill-McKee permutation `P`.
///
/// Immutable once built; any number of threads may solve against it.
#[derive(Debug, Clone)]
pub struct Factorization {
    perm: Permutation,
    factor: cholesky::CholeskyFactor,
}

/// Factorizes an SPD matrix and bumps `counter`.
pub fn factorize(a: &CsrMatrix, counter: &FactorizationCounter) -> Result<Factorization, SolveError> {
    let perm = reverse_cuthill_mckee(a);
    let factor = cholesky::factor(a, &perm)?;
    counter.bump();
    Ok(Factorization { perm, factor })
}

impl Factorization {
    pub fn dim(&self) -> usize {
        self.factor.n
    }

    pub fn permutation(&self) -> &Permutation {
        &self.perm
    }

    /// Nonzeros in the factor, diagonal included.
    pub fn factor_nnz(&self) -> usize {
        self.factor.nnz()
    }

    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>, SolveError> {
        let n = self.dim();
        if b.len() != n {
            return Err(SolveError::Dimension { expected: n, got: b.len() });
        }
        let mut y: Vec<f64> = self.perm.perm.iter().map(|&old| b[old]).collect();
        self.factor.solve_in_place(&mut y);
        let mut x = vec![0.0; n];
        for (new, &old) in self.perm.perm.iter().enumerate() {
            x[old] = y[new];
        }
        Ok(x)
    }

    /// Solves every column independently; identical to repeated [`Factorization::solve`].
    pub fn solve_multi(&self, rhs: &[Vec<f64>]) -> Result<Vec<Vec<f64>>, SolveError> {
        rhs.iter().map(|b| self.solve(b)).collect()
    }

    /// As [`Factorization::solve_multi`], columns spread over the current rayon pool.
    pub fn par_solve_multi(&self, rhs: &[Vec<f64>]) -> Result<Vec<Vec<f64>>, SolveError> {
        rhs.par_iter().map(|b| self.solve(b)).collect()
    }

    /// Dense `P^T L L^T P`, for reconstruction checks.
    pub fn reconstruct_dense(&self) -> Vec<Vec<f64>> {
        let n = self.dim();
        let l = self.factor.to_dense();
        let mut out = vec![vec![0.0; n]; n];
        for i in 0..n {
            for j in 0..=i {
                let s: f64 = (0..=j).map(|k| l[i][k] * l[j][k]).sum();
                let (oi, oj) = (self.perm.perm[i], self.perm.perm[j]);
                out[oi][oj] = s;
                out[oj][oi] = s;
            }
        }
        out
    }
}

/// Which solver backs the shared system.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SolverPath {
    #[default]
    Direct,
    ConjugateGradient,
}

impl SolverPath {
    pub fn name(self) -> &'static str {
        match self {
            SolverPath::Direct => "direct",
            SolverPath::ConjugateGradient => "cg",
        }
    }
}

/// A prepared solver for one fixed SPD matrix.
#[derive(Debug, Clone)]
pub enum LinearSolver {
    Direct(Factorization),
    Iterative(ConjugateGradient),
}

impl LinearSolver {
    /// Only the direct path factorizes and counts.
    pub fn prepare(path: SolverPath, a: &CsrMatrix, counter: &FactorizationCounter) -> Result<Self, SolveError> {
        match path {
            SolverPath::Direct => factorize(a, counter).map(LinearSolver::Direct),
            SolverPath::ConjugateGradient => ConjugateGradient::new(a.clone()).map(LinearSolver::Iterative),
        }
    }

    pub fn path(&self) -> SolverPath {
        match self {
            LinearSolver::Direct(_) => SolverPath::Direct,
            LinearSolver::Iterative(_) => SolverPath::ConjugateGradient,
        }
    }

    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>, SolveError> {
        match self {
            LinearSolver::Direct(f) => f.solve(b),
            LinearSolver::Iterative(cg) => cg.solve(b),
        }
    }

    pub fn solve_multi(&self, rhs: &[Vec<f64>], parallel: bool) -> Result<Vec<Vec<f64>>, SolveError> {
        if parallel {
            rhs.par_iter().map(|b| self.solve(b)).collect()
        } else {
            rhs.iter().map(|b| self.solve(b)).collect()
        }
    }
}
