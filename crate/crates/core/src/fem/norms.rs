use crate::mesh::{Mesh, Point};

use super::assembly::{geometry, QuadratureCache};
use super::element::shape_gradients;
use super::{DofMap, FemError};

/// `|| u_h - u ||_{L2}` with `u` evaluated analytically at quadrature points.
pub fn l2_error(mesh: &Mesh, dofs: &DofMap, coeffs: &[f64], exact: impl Fn(Point) -> f64) -> Result<f64, FemError> {
    check_len(dofs, coeffs)?;
    let cache = QuadratureCache::new(dofs.degree());
    let mut sum = 0.0;
    for t in 0..mesh.num_triangles() {
        let geom = geometry(mesh, t)?;
        let cell = dofs.cell(t);
        for (q, (&l, w)) in cache.rule.points.iter().zip(&cache.rule.weights).enumerate() {
            let uh: f64 = cell.iter().zip(&cache.values[q]).map(|(&d, phi)| coeffs[d] * phi).sum();
            let e = uh - exact(geom.map(l));
            sum += w * geom.area * e * e;
        }
    }
    Ok(sum.sqrt())
}

/// `|| grad u_h - grad u ||_{L2}`.
pub fn h1_seminorm_error(
    mesh: &Mesh,
    dofs: &DofMap,
    coeffs: &[f64],
    exact_grad: impl Fn(Point) -> [f64; 2],
) -> Result<f64, FemError> {
    check_len(dofs, coeffs)?;
    let cache = QuadratureCache::new(dofs.degree());
    let mut sum = 0.0;
    for t in 0..mesh.num_triangles() {
        let geom = geometry(mesh, t)?;
        let cell = dofs.cell(t);
        for (q, (&l, w)) in cache.rule.points.iter().zip(&cache.rule.weights).enumerate() {
            let g = shape_gradients(dofs.degree(), &cache.lambda_derivatives[q], &geom);
            let mut gh = [0.0; 2];
            for (k, &d) in cell.iter().enumerate() {
                gh[0] += coeffs[d] * g[k][0];
                gh[1] += coeffs[d] * g[k][1];
            }
            let ge = exact_grad(geom.map(l));
            sum += w * geom.area * ((gh[0] - ge[0]).powi(2) + (gh[1] - ge[1]).powi(2));
        }
    }
    Ok(sum.sqrt())
}

fn check_len(dofs: &DofMap, coeffs: &[f64]) -> Result<(), FemError> {
    if coeffs.len() != dofs.num_dofs() {
        return Err(FemError::Dimension { expected: dofs.num_dofs(), got: coeffs.len() });
    }
    Ok(())
}
