use std::collections::HashMap;

use crate::mesh::{Mesh, Point, Side};
use crate::sparse::CsrMatrix;

use super::element::P2_EDGES;
use super::{BoundarySpec, Degree};

/// Global numbering of Lagrange degrees of freedom.
///
/// Vertex dofs come first and reuse vertex indices; P2 edge-midpoint dofs
/// follow in the mesh's first-visit edge order.
#[derive(Debug, Clone)]
pub struct DofMap {
    degree: Degree,
    num_vertices: usize,
    cells: Vec<[usize; 6]>,
    coords: Vec<Point>,
    dirichlet: Vec<Option<Side>>,
    edge_dofs: HashMap<[usize; 2], usize>,
    dirichlet_side: [bool; 4],
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
}

impl DofMap {
    pub fn new(mesh: &Mesh, degree: Degree, boundary: &BoundarySpec) -> Self {
        let nv = mesh.num_vertices();
        let mut coords = mesh.vertices.clone();
        let mut edge_dofs = HashMap::new();
        let mut cells = Vec::with_capacity(mesh.num_triangles());
        for tri in &mesh.triangles {
            let mut cell = [0usize; 6];
            cell[..3].copy_from_slice(tri);
            if degree == Degree::P2 {
                for (k, [a, b]) in P2_EDGES.into_iter().enumerate() {
                    let (va, vb) = (tri[a], tri[b]);
                    let key = if va < vb { [va, vb] } else { [vb, va] };
                    cell[3 + k] = *edge_dofs.entry(key).or_insert_with(|| {
                        let (p, q) = (mesh.vertices[va], mesh.vertices[vb]);
                        coords.push([0.5 * (p[0] + q[0]), 0.5 * (p[1] + q[1])]);
                        coords.len() - 1
                    });
                }
            }
            cells.push(cell);
        }

        let mut dirichlet: Vec<Option<Side>> = vec![None; coords.len()];
        let mut flag = |dof: usize, side: Side| {
            let slot = &mut dirichlet[dof];
            if slot.is_none_or(|s| side < s) {
                *slot = Some(side);
            }
        };
        for be in &mesh.boundary_edges {
            if !boundary.is_dirichlet(be.tag) {
                continue;
            }
            let [a, b] = be.vertices;
            flag(a, be.tag);
            flag(b, be.tag);
            if degree == Degree::P2 {
                let key = if a < b { [a, b] } else { [b, a] };
                if let Some(&d) = edge_dofs.get(&key) {
                    flag(d, be.tag);
                }
            }
        }

        let n = coords.len();
        let nloc = degree.local_dofs();
        let mut rows: Vec<Vec<usize>> = vec![Vec::new(); n];
        for cell in &cells {
            for &i in &cell[..nloc] {
                rows[i].extend_from_slice(&cell[..nloc]);
            }
        }
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut col_idx = Vec::new();
        row_ptr.push(0);
        for mut row in rows {
            row.sort_unstable();
            row.dedup();
            col_idx.extend(row);
            row_ptr.push(col_idx.len());
        }

        let dirichlet_side = Side::ALL.map(|s| boundary.is_dirichlet(s));
        DofMap { degree, num_vertices: nv, cells, coords, dirichlet, edge_dofs, dirichlet_side, row_ptr, col_idx }
    }

    pub fn degree(&self) -> Degree {
        self.degree
    }

    pub fn num_dofs(&self) -> usize {
        self.coords.len()
    }

    pub fn num_vertices(&self) -> usize {
        self.num_vertices
    }

    /// Global dofs of triangle `t` in local order.
    pub fn cell(&self, t: usize) -> &[usize] {
        &self.cells[t][..self.degree.local_dofs()]
    }

    pub fn coords(&self) -> &[Point] {
        &self.coords
    }

    /// Dirichlet side owning each dof, `None` for free dofs.
    pub fn dirichlet_sides(&self) -> &[Option<Side>] {
        &self.dirichlet
    }

    pub fn is_dirichlet(&self, dof: usize) -> bool {
        self.dirichlet[dof].is_some()
    }

    /// Whether `side` was Dirichlet in the boundary conditions this map was built from.
    pub fn is_dirichlet_side(&self, side: Side) -> bool {
        self.dirichlet_side[side as usize]
    }

    pub fn constrained_mask(&self) -> Vec<bool> {
        self.dirichlet.iter().map(Option::is_some).collect()
    }

    pub fn num_constrained(&self) -> usize {
        self.dirichlet.iter().filter(|d| d.is_some()).count()
    }

    /// Midpoint dof of the edge between vertices `a` and `b` (P2 only).
    pub fn edge_dof(&self, a: usize, b: usize) -> Option<usize> {
        let key = if a < b { [a, b] } else { [b, a] };
        self.edge_dofs.get(&key).copied()
    }

    /// Dofs along a boundary edge: the two vertices, then the midpoint for P2.
    pub fn boundary_edge_dofs(&self, [a, b]: [usize; 2]) -> ([usize; 3], usize) {
        match self.degree {
            Degree::P1 => ([a, b, usize::MAX], 2),
            Degree::P2 => ([a, b, self.edge_dof(a, b).expect("boundary edge belongs to a triangle")], 3),
        }
    }

    /// Zero matrix over the dof coupling pattern. All assembled operators share it.
    pub fn zero_matrix(&self) -> CsrMatrix {
        CsrMatrix::from_pattern(self.num_dofs(), self.row_ptr.clone(), self.col_idx.clone())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::BoundaryCondition;
    use crate::mesh::Diagonal;

    fn mixed_layout() -> BoundarySpec {
        BoundarySpec::new([
            (Side::Left, BoundaryCondition::Neumann(1.0.into())),
            (Side::Top, BoundaryCondition::Neumann(1.0.into())),
            (Side::Right, BoundaryCondition::Dirichlet(1.0.into())),
            (Side::Bottom, BoundaryCondition::Dirichlet(1.0.into())),
        ])
        .unwrap()
    }

    #[test]
    fn dof_counts() {
        for m in [1, 3, 8] {
            let mesh = Mesh::structured(m, Diagonal::default()).unwrap();
            let (edges, _) = mesh.edges();
            let layout = BoundarySpec::homogeneous_dirichlet();
            assert_eq!(DofMap::new(&mesh, Degree::P1, &layout).num_dofs(), mesh.num_vertices());
            assert_eq!(DofMap::new(&mesh, Degree::P2, &layout).num_dofs(), mesh.num_vertices() + edges.len());
            assert_eq!(DofMap::new(&mesh, Degree::P2, &layout).num_dofs(), (2 * m + 1) * (2 * m + 1));
        }
    }

    #[test]
    fn all_boundary_dofs_constrained_for_full_dirichlet() {
        let m = 4;
        let mesh = Mesh::structured(m, Diagonal::default()).unwrap();
        let dofs = DofMap::new(&mesh, Degree::P2, &BoundarySpec::homogeneous_dirichlet());
        assert_eq!(dofs.num_constrained(), 4 * 2 * m);
    }

    #[test]
    fn dirichlet_dofs_lie_on_dirichlet_sides() {
        let mesh = Mesh::structured(6, Diagonal::NorthWestSouthEast).unwrap();
        let layout = mixed_layout();
        for degree in [Degree::P1, Degree::P2] {
            let dofs = DofMap::new(&mesh, degree, &layout);
            for (d, side) in dofs.dirichlet_sides().iter().enumerate() {
                if let Some(side) = side {
                    assert!(layout.is_dirichlet(*side));
                    assert!(side.contains(dofs.coords()[d], 1e-14));
                }
            }
            // Right and bottom sides, sharing the corner (1, 0).
            let per_side = 6 * degree.order() + 1;
            assert_eq!(dofs.num_constrained(), 2 * per_side - 1);
        }
    }

    #[test]
    fn pattern_is_symmetric() {
        let mesh = Mesh::structured(3, Diagonal::default()).unwrap();
        let dofs = DofMap::new(&mesh, Degree::P2, &BoundarySpec::homogeneous_dirichlet());
        let a = dofs.zero_matrix();
        for i in 0..a.dim() {
            for &j in a.row(i).0 {
                assert!(a.row(j).0.binary_search(&i).is_ok());
            }
        }
    }
}
