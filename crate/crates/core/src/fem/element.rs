//! Lagrange shape functions on a triangle in barycentric coordinates.

use crate::mesh::Point;

use super::Degree;

/// Affine geometry of one triangle.
#[derive(Debug, Clone, Copy)]
pub struct Geometry {
    pub points: [Point; 3],
    pub area: f64,
    /// Constant gradients of the barycentric coordinates.
    pub grad_lambda: [[f64; 2]; 3],
}

impl Geometry {
    pub fn new(points: [Point; 3]) -> Self {
        let [p0, p1, p2] = points;
        let det = (p1[0] - p0[0]) * (p2[1] - p0[1]) - (p2[0] - p0[0]) * (p1[1] - p0[1]);
        let grad_lambda = [
            [(p1[1] - p2[1]) / det, (p2[0] - p1[0]) / det],
            [(p2[1] - p0[1]) / det, (p0[0] - p2[0]) / det],
            [(p0[1] - p1[1]) / det, (p1[0] - p0[0]) / det],
        ];
        Geometry { points, area: 0.5 * det, grad_lambda }
    }

    pub fn map(&self, l: [f64; 3]) -> Point {
        let [p0, p1, p2] = self.points;
        [l[0] * p0[0] + l[1] * p1[0] + l[2] * p2[0], l[0] * p0[1] + l[1] * p1[1] + l[2] * p2[1]]
    }
}

/// Local vertex pairs of the P2 edge dofs, in local dof order 3, 4, 5.
pub const P2_EDGES: [[usize; 2]; 3] = [[0, 1], [1, 2], [2, 0]];

/// Shape function values at barycentric point `l`; entries past `degree.local_dofs()` are zero.
pub fn shape_values(degree: Degree, l: [f64; 3]) -> [f64; 6] {
    match degree {
        Degree::P1 => [l[0], l[1], l[2], 0.0, 0.0, 0.0],
        Degree::P2 => [
            l[0] * (2.0 * l[0] - 1.0),
            l[1] * (2.0 * l[1] - 1.0),
            l[2] * (2.0 * l[2] - 1.0),
            4.0 * l[0] * l[1],
            4.0 * l[1] * l[2],
            4.0 * l[2] * l[0],
        ],
    }
}

/// Derivatives of each shape function with respect to the three barycentric coordinates.
pub fn shape_lambda_derivatives(degree: Degree, l: [f64; 3]) -> [[f64; 3]; 6] {
    let mut d = [[0.0; 3]; 6];
    match degree {
        Degree::P1 => {
            for (i, row) in d.iter_mut().take(3).enumerate() {
                row[i] = 1.0;
            }
        }
        Degree::P2 => {
            for (i, row) in d.iter_mut().take(3).enumerate() {
                row[i] = 4.0 * l[i] - 1.0;
            }
            for (k, [a, b]) in P2_EDGES.into_iter().enumerate() {
                d[3 + k][a] = 4.0 * l[b];
                d[3 + k][b] = 4.0 * l[a];
            }
        }
    }
    d
}

/// Physical gradients from barycentric derivatives.
pub fn shape_gradients(degree: Degree, dl: &[[f64; 3]; 6], geom: &Geometry) -> [[f64; 2]; 6] {
    let mut g = [[0.0; 2]; 6];
    for i in 0..degree.local_dofs() {
        for (k, gl) in geom.grad_lambda.iter().enumerate() {
            g[i][0] += dl[i][k] * gl[0];
            g[i][1] += dl[i][k] * gl[1];
        }
    }
    g
}

/// 1D Lagrange basis on an edge at parameter `s` in [0, 1]: the two end
/// vertices, then the midpoint for P2.
pub fn edge_shape_values(degree: Degree, s: f64) -> [f64; 3] {
    match degree {
        Degree::P1 => [1.0 - s, s, 0.0],
        Degree::P2 => [(1.0 - s) * (1.0 - 2.0 * s), s * (2.0 * s - 1.0), 4.0 * s * (1.0 - s)],
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn partition_of_unity_and_nodality() {
        let nodes: [[f64; 3]; 6] =
            [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0], [0.5, 0.5, 0.0], [0.0, 0.5, 0.5], [0.5, 0.0, 0.5]];
        for (i, l) in nodes.iter().enumerate() {
            let v = shape_values(Degree::P2, *l);
            for (j, vj) in v.iter().enumerate() {
                assert!((vj - if i == j { 1.0 } else { 0.0 }).abs() < 1e-15);
            }
        }
        let l = [0.2, 0.3, 0.5];
        assert!((shape_values(Degree::P2, l).iter().sum::<f64>() - 1.0).abs() < 1e-15);
        assert!((shape_values(Degree::P1, l).iter().sum::<f64>() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn gradients_sum_to_zero() {
        let geom = Geometry::new([[0.1, 0.0], [1.0, 0.2], [0.3, 0.9]]);
        for degree in [Degree::P1, Degree::P2] {
            let g = shape_gradients(degree, &shape_lambda_derivatives(degree, [0.1, 0.6, 0.3]), &geom);
            let sx: f64 = g.iter().map(|v| v[0]).sum();
            let sy: f64 = g.iter().map(|v| v[1]).sum();
            assert!(sx.abs() < 1e-13 && sy.abs() < 1e-13);
        }
    }

    #[test]
    fn gradient_matches_finite_difference() {
        let geom = Geometry::new([[0.0, 0.0], [0.7, 0.1], [0.2, 0.8]]);
        let l = [0.25, 0.35, 0.4];
        let g = shape_gradients(Degree::P2, &shape_lambda_derivatives(Degree::P2, l), &geom);
        // Move in physical x: dl_k = grad_lambda_k[0] * h.
        let h = 1e-6;
        let lp: [f64; 3] = std::array::from_fn(|k| l[k] + geom.grad_lambda[k][0] * h);
        let lm: [f64; 3] = std::array::from_fn(|k| l[k] - geom.grad_lambda[k][0] * h);
        let (vp, vm) = (shape_values(Degree::P2, lp), shape_values(Degree::P2, lm));
        for i in 0..6 {
            assert!(((vp[i] - vm[i]) / (2.0 * h) - g[i][0]).abs() < 1e-8);
        }
    }
}
