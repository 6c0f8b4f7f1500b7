use crate::sparse::{dot, norm2, CsrMatrix};

use super::SolveError;

/// Jacobi-preconditioned conjugate gradients on an SPD matrix.
#[derive(Debug, Clone)]
pub struct ConjugateGradient {
    matrix: CsrMatrix,
    inv_diag: Vec<f64>,
    pub rel_tol: f64,
    pub max_iter: usize,
}

impl ConjugateGradient {
    /// Defaults: relative residual `1e-10`, at most `10 n` iterations.
    pub fn new(matrix: CsrMatrix) -> Result<Self, SolveError> {
        let n = matrix.dim();
        let mut inv_diag = Vec::with_capacity(n);
        for i in 0..n {
            let d = matrix.get(i, i);
            if d.is_nan() || d <= 0.0 {
                return Err(SolveError::NotPositiveDefinite { pivot: i, value: d });
            }
            inv_diag.push(1.0 / d);
        }
        Ok(ConjugateGradient { matrix, inv_diag, rel_tol: 1e-10, max_iter: 10 * n.max(1) })
    }

    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>, SolveError> {
        let n = self.dim();
        if b.len() != n {
            return Err(SolveError::Dimension { expected: n, got: b.len() });
        }
        let mut x = vec![0.0; n];
        let bnorm = norm2(b);
        if bnorm == 0.0 {
            return Ok(x);
        }
        let mut r = b.to_vec();
        let mut z: Vec<f64> = r.iter().zip(&self.inv_diag).map(|(r, d)| r * d).collect();
        let mut p = z.clone();
        let mut rz = dot(&r, &z);
        let mut ap = vec![0.0; n];
        for it in 0..self.max_iter {
            self.matrix.mul_vec_into(&p, &mut ap);
            let pap = dot(&p, &ap);
            if pap.is_nan() || pap <= 0.0 {
                return Err(SolveError::NotPositiveDefinite { pivot: it, value: pap });
            }
            let alpha = rz / pap;
            for i in 0..n {
                x[i] += alpha * p[i];
                r[i] -= alpha * ap[i];
            }
            if norm2(&r) <= self.rel_tol * bnorm {
                return Ok(x);
            }
            for i in 0..n {
                z[i] = r[i] * self.inv_diag[i];
            }
            let rz_new = dot(&r, &z);
            let beta = rz_new / rz;
            rz = rz_new;
            for i in 0..n {
                p[i] = z[i] + beta * p[i];
            }
        }
        Err(SolveError::NotConverged { iterations: self.max_iter, residual: norm2(&r) / bnorm })
    }
}
