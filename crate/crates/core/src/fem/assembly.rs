use crate::field::ScalarField;
use crate::mesh::{Mesh, Point, Side};
use crate::sparse::CsrMatrix;

use super::element::{edge_shape_values, shape_gradients, shape_lambda_derivatives, shape_values, Geometry};
use super::quadrature::{EdgeRule, TriangleRule};
use super::{BoundarySpec, Degree, DofMap, FemError};

/// Shape function values and barycentric derivatives at the quadrature points.
#[derive(Debug, Clone)]
pub struct QuadratureCache {
    pub degree: Degree,
    pub rule: TriangleRule,
    pub values: Vec<[f64; 6]>,
    pub lambda_derivatives: Vec<[[f64; 3]; 6]>,
}

impl QuadratureCache {
    pub fn new(degree: Degree) -> Self {
        let rule = TriangleRule::degree4();
        let values = rule.points.iter().map(|&l| shape_values(degree, l)).collect();
        let lambda_derivatives = rule.points.iter().map(|&l| shape_lambda_derivatives(degree, l)).collect();
        QuadratureCache { degree, rule, values, lambda_derivatives }
    }
}

pub(crate) fn geometry(mesh: &Mesh, t: usize) -> Result<Geometry, FemError> {
    let geom = Geometry::new(mesh.triangle_points(t));
    if geom.area > 0.0 {
        Ok(geom)
    } else {
        Err(FemError::NonPositiveArea { triangle: t, area: geom.area })
    }
}

fn checked(value: f64, triangle: usize, point: Point) -> Result<f64, FemError> {
    if value.is_finite() {
        Ok(value)
    } else {
        Err(FemError::NonFiniteField { triangle, point })
    }
}

fn scatter(a: &mut CsrMatrix, cell: &[usize], local: &[[f64; 6]; 6]) -> Result<(), FemError> {
    for (r, &i) in cell.iter().enumerate() {
        for (c, &j) in cell.iter().enumerate() {
            a.add_to(i, j, local[r][c])?;
        }
    }
    Ok(())
}

/// Consistent mass matrix `M_ij = (phi_i, phi_j)`.
pub fn assemble_mass(mesh: &Mesh, dofs: &DofMap) -> Result<CsrMatrix, FemError> {
    let cache = QuadratureCache::new(dofs.degree());
    let nloc = dofs.degree().local_dofs();
    let mut a = dofs.zero_matrix();
    for t in 0..mesh.num_triangles() {
        let geom = geometry(mesh, t)?;
        let mut local = [[0.0; 6]; 6];
        for (q, w) in cache.rule.weights.iter().enumerate() {
            let phi = &cache.values[q];
            let wa = w * geom.area;
            for r in 0..nloc {
                for c in 0..nloc {
                    local[r][c] += wa * phi[r] * phi[c];
                }
            }
        }
        scatter(&mut a, dofs.cell(t), &local)?;
    }
    Ok(a)
}

/// Stiffness matrix `A_ij = (coeff grad phi_i, grad phi_j)`, with `coeff`
/// evaluated pointwise at quadrature nodes. No sign condition on `coeff`.
pub fn assemble_stiffness(mesh: &Mesh, dofs: &DofMap, coeff: &ScalarField) -> Result<CsrMatrix, FemError> {
    let cache = QuadratureCache::new(dofs.degree());
    let degree = dofs.degree();
    let nloc = degree.local_dofs();
    let mut a = dofs.zero_matrix();
    for t in 0..mesh.num_triangles() {
        let geom = geometry(mesh, t)?;
        let mut local = [[0.0; 6]; 6];
        for (q, (&l, w)) in cache.rule.points.iter().zip(&cache.rule.weights).enumerate() {
            let x = geom.map(l);
            let k = checked(coeff.eval(x, 0.0), t, x)?;
            let g = shape_gradients(degree, &cache.lambda_derivatives[q], &geom);
            let wk = w * geom.area * k;
            for r in 0..nloc {
                for c in 0..nloc {
                    local[r][c] += wk * (g[r][0] * g[c][0] + g[r][1] * g[c][1]);
                }
            }
        }
        scatter(&mut a, dofs.cell(t), &local)?;
    }
    Ok(a)
}

/// Load vector `F_i = (f(., t), phi_i)`.
pub fn assemble_load(mesh: &Mesh, dofs: &DofMap, f: &ScalarField, t: f64) -> Result<Vec<f64>, FemError> {
    let mut out = vec![0.0; dofs.num_dofs()];
    if f.as_constant() == Some(0.0) {
        return Ok(out);
    }
    let cache = QuadratureCache::new(dofs.degree());
    for tri in 0..mesh.num_triangles() {
        let geom = geometry(mesh, tri)?;
        let cell = dofs.cell(tri);
        for (q, (&l, w)) in cache.rule.points.iter().zip(&cache.rule.weights).enumerate() {
            let x = geom.map(l);
            let fx = checked(f.eval(x, t), tri, x)? * w * geom.area;
            for (r, &i) in cell.iter().enumerate() {
                out[i] += fx * cache.values[q][r];
            }
        }
    }
    Ok(out)
}

/// Boundary load `integral over side tag of g phi_i`.
pub fn assemble_neumann(mesh: &Mesh, dofs: &DofMap, tag: Side, g: &ScalarField, t: f64) -> Result<Vec<f64>, FemError> {
    let mut out = vec![0.0; dofs.num_dofs()];
    add_neumann(mesh, dofs, tag, g, t, &mut out)?;
    Ok(out)
}

/// Sum of the boundary loads over every Neumann side of `boundary`.
pub fn assemble_neumann_all(mesh: &Mesh, dofs: &DofMap, boundary: &BoundarySpec, t: f64) -> Result<Vec<f64>, FemError> {
    let mut out = vec![0.0; dofs.num_dofs()];
    for (side, g) in boundary.neumann_sides() {
        add_neumann(mesh, dofs, side, g, t, &mut out)?;
    }
    Ok(out)
}

fn add_neumann(mesh: &Mesh, dofs: &DofMap, tag: Side, g: &ScalarField, t: f64, out: &mut [f64]) -> Result<(), FemError> {
    if dofs.is_dirichlet_side(tag) {
        return Err(FemError::DirichletSegment(tag));
    }
    if g.as_constant() == Some(0.0) {
        return Ok(());
    }
    let rule = EdgeRule::gauss3();
    for be in mesh.boundary_edges.iter().filter(|e| e.tag == tag) {
        let [a, b] = be.vertices;
        let (p, q) = (mesh.vertices[a], mesh.vertices[b]);
        let len = ((q[0] - p[0]).powi(2) + (q[1] - p[1]).powi(2)).sqrt();
        let (edofs, n) = dofs.boundary_edge_dofs([a, b]);
        for (&s, &w) in rule.points.iter().zip(&rule.weights) {
            let x = [p[0] + s * (q[0] - p[0]), p[1] + s * (q[1] - p[1])];
            let gx = g.eval(x, t);
            if !gx.is_finite() {
                return Err(FemError::NonFiniteField { triangle: usize::MAX, point: x });
            }
            let phi = edge_shape_values(dofs.degree(), s);
            for k in 0..n {
                out[edofs[k]] += w * len * gx * phi[k];
            }
        }
    }
    Ok(())
}

/// Nodal interpolant of `field(., t)`.
pub fn interpolate(dofs: &DofMap, field: &ScalarField, t: f64) -> Vec<f64> {
    dofs.coords().iter().map(|&p| field.eval(p, t)).collect()
}

/// `integral over the mesh of g` using the degree-4 rule.
pub fn integrate(mesh: &Mesh, g: impl Fn(Point) -> f64) -> f64 {
    let rule = TriangleRule::degree4();
    let mut total = 0.0;
    for t in 0..mesh.num_triangles() {
        let geom = Geometry::new(mesh.triangle_points(t));
        let s: f64 = rule.points.iter().zip(&rule.weights).map(|(&l, w)| w * g(geom.map(l))).sum();
        total += geom.area * s;
    }
    total
}
