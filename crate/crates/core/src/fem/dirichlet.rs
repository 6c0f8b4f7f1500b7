//! Symmetric elimination of Dirichlet dofs.

use crate::field::ScalarField;
use crate::sparse::CsrMatrix;

use super::{BoundarySpec, DofMap, FemError};

/// Couplings between free rows and constrained columns of the original matrix,
/// kept so the right-hand side can be lifted at every time step while the
/// eliminated matrix and its factorization stay fixed.
#[derive(Debug, Clone)]
pub struct DirichletLift {
    constrained: Vec<bool>,
    /// Per free row: (constrained column, original entry).
    couplings: Vec<Vec<(usize, f64)>>,
}

impl DirichletLift {
    /// Zeroes constrained rows and columns and puts 1 on their diagonal.
    /// The returned matrix drops the eliminated entries from its pattern.
    pub fn eliminate(matrix: &CsrMatrix, constrained: &[bool]) -> (CsrMatrix, DirichletLift) {
        let n = matrix.dim();
        assert_eq!(constrained.len(), n);
        let mut triplets = Vec::with_capacity(matrix.nnz());
        let mut couplings = vec![Vec::new(); n];
        for i in 0..n {
            if constrained[i] {
                triplets.push((i, i, 1.0));
                continue;
            }
            let (cols, vals) = matrix.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                if constrained[j] {
                    couplings[i].push((j, v));
                } else {
                    triplets.push((i, j, v));
                }
            }
        }
        (CsrMatrix::from_triplets(n, &triplets), DirichletLift { constrained: constrained.to_vec(), couplings })
    }

    /// Moves known values to the right-hand side and pins constrained entries.
    /// `values` is full length; only constrained entries are read.
    pub fn apply(&self, rhs: &mut [f64], values: &[f64]) {
        assert_eq!(rhs.len(), self.constrained.len());
        assert_eq!(values.len(), self.constrained.len());
        for (i, r) in rhs.iter_mut().enumerate() {
            if self.constrained[i] {
                *r = values[i];
            } else {
                for &(j, a) in &self.couplings[i] {
                    *r -= a * values[j];
                }
            }
        }
    }

    pub fn constrained(&self) -> &[bool] {
        &self.constrained
    }
}

/// Full-length vector of prescribed values at time `t`: the boundary data on
/// constrained dofs, zero elsewhere. Corner dofs take the value of the first
/// Dirichlet side in tag order.
pub fn dirichlet_values(dofs: &DofMap, boundary: &BoundarySpec, t: f64) -> Vec<f64> {
    dofs.coords()
        .iter()
        .zip(dofs.dirichlet_sides())
        .map(|(&p, side)| side.and_then(|s| boundary.dirichlet_value(s, p, t)).unwrap_or(0.0))
        .collect()
}

/// Eliminates constrained dofs with prescribed per-dof `values`.
pub fn apply_dirichlet_values(
    system: &CsrMatrix,
    rhs: &[f64],
    dofs: &DofMap,
    values: &[f64],
) -> Result<(CsrMatrix, Vec<f64>), FemError> {
    let n = dofs.num_dofs();
    for len in [system.dim(), rhs.len(), values.len()] {
        if len != n {
            return Err(FemError::Dimension { expected: n, got: len });
        }
    }
    let (reduced, lift) = DirichletLift::eliminate(system, &dofs.constrained_mask());
    let mut b = rhs.to_vec();
    lift.apply(&mut b, values);
    Ok((reduced, b))
}

/// Eliminates constrained dofs with values sampled from `values` at time `t`.
pub fn apply_dirichlet(
    system: &CsrMatrix,
    rhs: &[f64],
    dofs: &DofMap,
    values: &ScalarField,
    t: f64,
) -> Result<(CsrMatrix, Vec<f64>), FemError> {
    let g: Vec<f64> = dofs
        .coords()
        .iter()
        .enumerate()
        .map(|(d, &p)| if dofs.is_dirichlet(d) { values.eval(p, t) } else { 0.0 })
        .collect();
    apply_dirichlet_values(system, rhs, dofs, &g)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::{assemble_load, assemble_stiffness, interpolate, BoundarySpec, Degree};
    use crate::linsolve::{factorize, FactorizationCounter};
    use crate::mesh::{Diagonal, Mesh};

    fn solve(a: &CsrMatrix, b: &[f64]) -> Vec<f64> {
        let fact = factorize(a, &FactorizationCounter::default()).unwrap();
        fact.solve(b).unwrap()
    }

    fn laplace_setup(m: usize) -> (Mesh, DofMap, CsrMatrix) {
        let mesh = Mesh::structured(m, Diagonal::default()).unwrap();
        let dofs = DofMap::new(&mesh, Degree::P2, &BoundarySpec::homogeneous_dirichlet());
        let a = assemble_stiffness(&mesh, &dofs, &ScalarField::constant(1.0)).unwrap();
        (mesh, dofs, a)
    }

    #[test]
    fn zero_data_gives_zero_solution() {
        let (_, dofs, a) = laplace_setup(4);
        let (ar, b) = apply_dirichlet(&a, &vec![0.0; dofs.num_dofs()], &dofs, &ScalarField::zero(), 0.0).unwrap();
        assert!(solve(&ar, &b).iter().all(|&v| v == 0.0));
    }

    #[test]
    fn constant_boundary_gives_constant_solution() {
        let (_, dofs, a) = laplace_setup(5);
        let (ar, b) = apply_dirichlet(&a, &vec![0.0; dofs.num_dofs()], &dofs, &ScalarField::constant(1.0), 0.0).unwrap();
        assert!(ar.symmetry_defect() < 1e-14);
        let u = solve(&ar, &b);
        assert!(u.iter().all(|v| (v - 1.0).abs() < 1e-10));
    }

    #[test]
    fn lifting_matches_shifted_problem() {
        // Solve -lap u = f, u = g on the boundary, directly and as u = w + G
        // with G the interpolant of g and w solving a homogeneous problem.
        let (mesh, dofs, a) = laplace_setup(6);
        let g = ScalarField::spatial(|p| 1.0 + p[0] * p[0] - 0.5 * p[1]);
        let f = ScalarField::spatial(|p| (3.0 * p[0]).sin() + p[1]);
        let load = assemble_load(&mesh, &dofs, &f, 0.0).unwrap();

        let (ar, b) = apply_dirichlet(&a, &load, &dofs, &g, 0.0).unwrap();
        let direct = solve(&ar, &b);

        let lift = interpolate(&dofs, &g, 0.0);
        let mut shifted = load.clone();
        a.mul_vec_acc(-1.0, &lift, &mut shifted);
        let (ar0, b0) = apply_dirichlet(&a, &shifted, &dofs, &ScalarField::zero(), 0.0).unwrap();
        let w = solve(&ar0, &b0);
        for d in 0..dofs.num_dofs() {
            assert!((direct[d] - (w[d] + lift[d])).abs() < 1e-10);
            if dofs.is_dirichlet(d) {
                assert_eq!(direct[d], lift[d]);
            }
        }
    }

    #[test]
    fn dimension_checked() {
        let (_, dofs, a) = laplace_setup(2);
        assert!(matches!(
            apply_dirichlet(&a, &[0.0; 3], &dofs, &ScalarField::zero(), 0.0),
            Err(FemError::Dimension { .. })
        ));
    }
}
