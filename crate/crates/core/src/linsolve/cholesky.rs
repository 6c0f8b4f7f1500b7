//! Up-looking sparse Cholesky factorization `P A P^T = L L^T`.
//!
//! The symbolic phase builds the elimination tree of the permuted matrix and
//! counts the nonzeros of each column of `L`; the numeric phase computes `L`
//! one row at a time, each row pattern obtained by walking the tree from the
//! nonzeros of the corresponding column of the upper triangle.

use crate::sparse::CsrMatrix;

use super::ordering::Permutation;
use super::SolveError;

const NONE: usize = usize::MAX;

/// Upper triangle of `P A P^T` stored by columns: `cols[k]` holds `(i, C_ik)` for `i <= k`.
fn permuted_upper(a: &CsrMatrix, p: &Permutation) -> Vec<Vec<(usize, f64)>> {
    let n = a.dim();
    (0..n)
        .map(|k| {
            let (cols, vals) = a.row(p.perm[k]);
            let mut col: Vec<(usize, f64)> = cols
                .iter()
                .zip(vals)
                .map(|(&j, &v)| (p.inverse[j], v))
                .filter(|&(i, _)| i <= k)
                .collect();
            col.sort_unstable_by_key(|e| e.0);
            col
        })
        .collect()
}

fn elimination_tree(upper: &[Vec<(usize, f64)>]) -> Vec<usize> {
    let n = upper.len();
    let mut parent = vec![NONE; n];
    let mut ancestor = vec![NONE; n];
    for (k, row) in upper.iter().enumerate() {
        for &(mut i, _) in row {
            while i != NONE && i < k {
                let next = ancestor[i];
                ancestor[i] = k;
                if next == NONE {
                    parent[i] = k;
                }
                i = next;
            }
        }
    }
    parent
}

/// Nonzero pattern of row `k` of `L` (excluding the diagonal), written to
/// `stack[top..]` in topological order. Returns `top`.
fn row_pattern(k: usize, upper_k: &[(usize, f64)], parent: &[usize], mark: &mut [usize], stack: &mut [usize]) -> usize {
    let n = stack.len();
    let mut top = n;
    mark[k] = k;
    for &(start, _) in upper_k {
        let mut i = start;
        let mut len = 0;
        while mark[i] != k {
            stack[len] = i;
            len += 1;
            mark[i] = k;
            i = parent[i];
        }
        while len > 0 {
            len -= 1;
            top -= 1;
            stack[top] = stack[len];
        }
    }
    top
}

/// Lower-triangular factor in compressed columns, diagonal entry first.
#[derive(Debug, Clone)]
pub struct CholeskyFactor {
    pub n: usize,
    pub col_ptr: Vec<usize>,
    pub row_idx: Vec<usize>,
    pub values: Vec<f64>,
}

pub fn factor(a: &CsrMatrix, p: &Permutation) -> Result<CholeskyFactor, SolveError> {
    let n = a.dim();
    let upper = permuted_upper(a, p);
    let parent = elimination_tree(&upper);

    let mut mark = vec![NONE; n];
    let mut stack = vec![0usize; n];
    let mut counts = vec![1usize; n];
    for (k, row) in upper.iter().enumerate() {
        let top = row_pattern(k, row, &parent, &mut mark, &mut stack);
        for &i in &stack[top..] {
            counts[i] += 1;
        }
    }
    let mut col_ptr = Vec::with_capacity(n + 1);
    col_ptr.push(0);
    for c in &counts {
        col_ptr.push(col_ptr.last().unwrap() + c);
    }
    let nnz = col_ptr[n];
    let mut row_idx = vec![0usize; nnz];
    let mut values = vec![0.0f64; nnz];
    // Next free slot per column; slot col_ptr[j] is reserved for the diagonal.
    let mut next: Vec<usize> = col_ptr[..n].iter().map(|&c| c + 1).collect();

    mark.iter_mut().for_each(|m| *m = NONE);
    let mut x = vec![0.0f64; n];
    for k in 0..n {
        let top = row_pattern(k, &upper[k], &parent, &mut mark, &mut stack);
        for &(i, v) in &upper[k] {
            x[i] = v;
        }
        let mut d = x[k];
        x[k] = 0.0;
        for &i in &stack[top..] {
            let lki = x[i] / values[col_ptr[i]];
            x[i] = 0.0;
            for q in col_ptr[i] + 1..next[i] {
                x[row_idx[q]] -= values[q] * lki;
            }
            d -= lki * lki;
            let q = next[i];
            next[i] += 1;
            row_idx[q] = k;
            values[q] = lki;
        }
        if !(d > 0.0 && d.is_finite()) {
            return Err(SolveError::NotPositiveDefinite { pivot: p.perm[k], value: d });
        }
        row_idx[col_ptr[k]] = k;
        values[col_ptr[k]] = d.sqrt();
    }
    debug_assert!((0..n).all(|j| next[j] == col_ptr[j + 1]));
    Ok(CholeskyFactor { n, col_ptr, row_idx, values })
}

impl CholeskyFactor {
    /// Solves `L L^T y = y` in place.
    pub fn solve_in_place(&self, y: &mut [f64]) {
        for j in 0..self.n {
            let start = self.col_ptr[j];
            y[j] /= self.values[start];
            let yj = y[j];
            for q in start + 1..self.col_ptr[j + 1] {
                y[self.row_idx[q]] -= self.values[q] * yj;
            }
        }
        for j in (0..self.n).rev() {
            let start = self.col_ptr[j];
            let mut s = y[j];
            for q in start + 1..self.col_ptr[j + 1] {
                s -= self.values[q] * y[self.row_idx[q]];
            }
            y[j] = s / self.values[start];
        }
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// Dense `L`, for tests and diagnostics.
    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut d = vec![vec![0.0; self.n]; self.n];
        for (j, w) in self.col_ptr.windows(2).enumerate() {
            for q in w[0]..w[1] {
                d[self.row_idx[q]][j] = self.values[q];
            }
        }
        d
    }
}
