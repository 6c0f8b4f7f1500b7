//! Reverse Cuthill-McKee ordering of a symmetric sparsity pattern.

use std::collections::VecDeque;

use crate::sparse::CsrMatrix;

/// Permutation as `perm[new] = old`, together with its inverse.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Permutation {
    pub perm: Vec<usize>,
    pub inverse: Vec<usize>,
}

impl Permutation {
    pub fn identity(n: usize) -> Self {
        Permutation { perm: (0..n).collect(), inverse: (0..n).collect() }
    }

    pub fn from_perm(perm: Vec<usize>) -> Self {
        let mut inverse = vec![usize::MAX; perm.len()];
        for (new, &old) in perm.iter().enumerate() {
            inverse[old] = new;
        }
        debug_assert!(inverse.iter().all(|&i| i != usize::MAX), "not a permutation");
        Permutation { perm, inverse }
    }

    pub fn len(&self) -> usize {
        self.perm.len()
    }

    pub fn is_empty(&self) -> bool {
        self.perm.is_empty()
    }
}

fn neighbors(a: &CsrMatrix, i: usize) -> impl Iterator<Item = usize> + '_ {
    a.row(i).0.iter().copied().filter(move |&j| j != i)
}

/// BFS level structure from `root`; returns the levels in visit order.
fn levels(a: &CsrMatrix, root: usize, degree: &[usize], seen: &mut [u32], stamp: u32) -> Vec<Vec<usize>> {
    let mut out = vec![vec![root]];
    seen[root] = stamp;
    loop {
        let mut next = Vec::new();
        for &v in out.last().unwrap() {
            for w in neighbors(a, v) {
                if seen[w] != stamp {
                    seen[w] = stamp;
                    next.push(w);
                }
            }
        }
        if next.is_empty() {
            return out;
        }
        next.sort_unstable_by_key(|&w| (degree[w], w));
        out.push(next);
    }
}

/// Reverse Cuthill-McKee ordering. Each connected component starts from a
/// pseudo-peripheral node (George-Liu); ties break on index so the result
/// is deterministic.
pub fn reverse_cuthill_mckee(a: &CsrMatrix) -> Permutation {
    let n = a.dim();
    let degree: Vec<usize> = (0..n).map(|i| neighbors(a, i).count()).collect();
    let mut placed = vec![false; n];
    let mut seen = vec![0u32; n];
    let mut stamp = 0u32;
    let mut order = Vec::with_capacity(n);

    let mut candidates: Vec<usize> = (0..n).collect();
    candidates.sort_unstable_by_key(|&v| (degree[v], v));

    for &seed in &candidates {
        if placed[seed] {
            continue;
        }
        // Pseudo-peripheral node search.
        let mut root = seed;
        stamp += 1;
        let mut ls = levels(a, root, &degree, &mut seen, stamp);
        loop {
            let last = ls.last().unwrap();
            let &cand = last.iter().min_by_key(|&&v| (degree[v], v)).unwrap();
            stamp += 1;
            let cand_ls = levels(a, cand, &degree, &mut seen, stamp);
            if cand_ls.len() > ls.len() {
                root = cand;
                ls = cand_ls;
            } else {
                break;
            }
        }

        let mut queue = VecDeque::from([root]);
        placed[root] = true;
        while let Some(v) = queue.pop_front() {
            order.push(v);
            let mut next: Vec<usize> = neighbors(a, v).filter(|&w| !placed[w]).collect();
            next.sort_unstable_by_key(|&w| (degree[w], w));
            for w in next {
                placed[w] = true;
                queue.push_back(w);
            }
        }
    }
    order.reverse();
    Permutation::from_perm(order)
}

/// Half-bandwidth of `P A P^T`.
pub fn bandwidth(a: &CsrMatrix, p: &Permutation) -> usize {
    let mut bw = 0;
    for i in 0..a.dim() {
        for &j in a.row(i).0 {
            bw = bw.max(p.inverse[i].abs_diff(p.inverse[j]));
        }
    }
    bw
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid_laplacian(nx: usize, ny: usize, scramble: bool) -> CsrMatrix {
        let n = nx * ny;
        // Row-major numbering, optionally scrambled by a fixed stride map.
        let label = |i: usize| if scramble { (i * 7919) % n } else { i };
        let mut t = Vec::new();
        for y in 0..ny {
            for x in 0..nx {
                let i = label(y * nx + x);
                t.push((i, i, 4.0));
                if x + 1 < nx {
                    let j = label(y * nx + x + 1);
                    t.push((i, j, -1.0));
                    t.push((j, i, -1.0));
                }
                if y + 1 < ny {
                    let j = label((y + 1) * nx + x);
                    t.push((i, j, -1.0));
                    t.push((j, i, -1.0));
                }
            }
        }
        CsrMatrix::from_triplets(n, &t)
    }

    #[test]
    fn is_a_permutation() {
        let a = grid_laplacian(7, 5, true);
        let p = reverse_cuthill_mckee(&a);
        let mut sorted = p.perm.clone();
        sorted.sort_unstable();
        assert_eq!(sorted, (0..35).collect::<Vec<_>>());
        for (new, &old) in p.perm.iter().enumerate() {
            assert_eq!(p.inverse[old], new);
        }
    }

    #[test]
    fn reduces_bandwidth_of_scrambled_grid() {
        let a = grid_laplacian(20, 20, true);
        let before = bandwidth(&a, &Permutation::identity(400));
        let after = bandwidth(&a, &reverse_cuthill_mckee(&a));
        assert!(after <= 21, "bandwidth {after}");
        assert!(after < before / 4);
    }

    #[test]
    fn handles_disconnected_and_isolated_nodes() {
        let mut t = vec![(0, 0, 1.0), (1, 1, 2.0), (2, 2, 2.0), (3, 3, 1.0), (4, 4, 2.0)];
        t.extend([(1, 2, -1.0), (2, 1, -1.0), (2, 4, -1.0), (4, 2, -1.0)]);
        let a = CsrMatrix::from_triplets(5, &t);
        let p = reverse_cuthill_mckee(&a);
        assert_eq!(p.len(), 5);
        assert_eq!(p, reverse_cuthill_mckee(&a));
    }
}
