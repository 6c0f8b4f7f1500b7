//! Structured triangulations of the unit square with side-tagged boundaries.
//!
//! Vertices of a structured `m x m` mesh are numbered row by row,
//! `index = j * (m + 1) + i` for the vertex at `(i / m, j / m)`. Every
//! square cell is split into two counterclockwise triangles along a single
//! diagonal direction shared by the whole mesh.

use std::collections::HashMap;
use std::fmt;

use thiserror::Error;

pub type Point = [f64; 2];

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MeshError {
    #[error("structured mesh needs at least one cell per side, got m = {0}")]
    ZeroResolution(usize),
    #[error("mesh is invalid: {0} violation(s), first: {1}")]
    Invalid(usize, Violation),
}

/// Side of the unit square a boundary edge lies on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Side {
    Left,
    Right,
    Bottom,
    Top,
}

impl Side {
    pub const ALL: [Side; 4] = [Side::Left, Side::Right, Side::Bottom, Side::Top];

    pub fn name(self) -> &'static str {
        match self {
            Side::Left => "left",
            Side::Right => "right",
            Side::Bottom => "bottom",
            Side::Top => "top",
        }
    }

    pub fn from_name(name: &str) -> Option<Side> {
        Side::ALL.into_iter().find(|s| s.name() == name)
    }

    /// Whether `p` lies on this side (to within `tol`).
    pub fn contains(self, p: Point, tol: f64) -> bool {
        let [x, y] = p;
        let on_segment = |v: f64| (-tol..=1.0 + tol).contains(&v);
        match self {
            Side::Left => x.abs() <= tol && on_segment(y),
            Side::Right => (x - 1.0).abs() <= tol && on_segment(y),
            Side::Bottom => y.abs() <= tol && on_segment(x),
            Side::Top => (y - 1.0).abs() <= tol && on_segment(x),
        }
    }
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Direction of the diagonal splitting each square cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Diagonal {
    /// From the lower-left to the upper-right corner of each cell.
    #[default]
    SouthWestNorthEast,
    /// From the upper-left to the lower-right corner of each cell.
    NorthWestSouthEast,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BoundaryEdge {
    pub vertices: [usize; 2],
    pub tag: Side,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mesh {
    pub vertices: Vec<Point>,
    /// Counterclockwise vertex triples.
    pub triangles: Vec<[usize; 3]>,
    pub boundary_edges: Vec<BoundaryEdge>,
}

/// A single invariant violation found by [`Mesh::validate`].
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    VertexOutOfRange { triangle: usize, vertex: usize },
    NonPositiveArea { triangle: usize, area: f64 },
    /// Edge used by more than two triangles.
    OverSharedEdge { edge: [usize; 2], count: usize },
    /// Interior edge whose two triangles traverse it in the same direction.
    InconsistentOrientation { edge: [usize; 2] },
    /// Edge belonging to a single triangle that does not lie on the square's boundary.
    HangingEdge { edge: [usize; 2] },
    UntaggedBoundaryEdge { edge: [usize; 2] },
    MultiplyTaggedEdge { edge: [usize; 2] },
    /// Tagged edge that is interior or does not lie on its tagged side.
    MisplacedTag { edge: [usize; 2], tag: Side },
    SideNotCovered { side: Side, covered_length: f64 },
    AreaMismatch { total: f64 },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::VertexOutOfRange { triangle, vertex } => {
                write!(f, "triangle {triangle} references missing vertex {vertex}")
            }
            Violation::NonPositiveArea { triangle, area } => {
                write!(f, "triangle {triangle} has signed area {area:e}")
            }
            Violation::OverSharedEdge { edge, count } => {
                write!(f, "edge {edge:?} is shared by {count} triangles")
            }
            Violation::InconsistentOrientation { edge } => {
                write!(f, "edge {edge:?} is traversed in the same direction twice")
            }
            Violation::HangingEdge { edge } => {
                write!(f, "edge {edge:?} has one neighbor but is not on the boundary")
            }
            Violation::UntaggedBoundaryEdge { edge } => {
                write!(f, "boundary edge {edge:?} carries no tag")
            }
            Violation::MultiplyTaggedEdge { edge } => {
                write!(f, "boundary edge {edge:?} carries more than one tag")
            }
            Violation::MisplacedTag { edge, tag } => {
                write!(f, "edge {edge:?} is tagged {tag} but does not lie on that side")
            }
            Violation::SideNotCovered { side, covered_length } => {
                write!(f, "tagged edges cover {covered_length} of side {side}")
            }
            Violation::AreaMismatch { total } => {
                write!(f, "triangle areas sum to {total}, expected 1")
            }
        }
    }
}

const GEOM_TOL: f64 = 1e-12;

fn sorted(a: usize, b: usize) -> [usize; 2] {
    if a < b {
        [a, b]
    } else {
        [b, a]
    }
}

impl Mesh {
    /// Uniform `m x m` triangulation of `[0,1]^2`, boundary edges tagged by side.
    pub fn structured(m: usize, diagonal: Diagonal) -> Result<Mesh, MeshError> {
        if m == 0 {
            return Err(MeshError::ZeroResolution(m));
        }
        let n = m + 1;
        let h = 1.0 / m as f64;
        let mut vertices = Vec::with_capacity(n * n);
        for j in 0..n {
            for i in 0..n {
                // Exact endpoints so boundary vertices sit on the sides.
                let x = if i == m { 1.0 } else { i as f64 * h };
                let y = if j == m { 1.0 } else { j as f64 * h };
                vertices.push([x, y]);
            }
        }
        let idx = |i: usize, j: usize| j * n + i;
        let mut triangles = Vec::with_capacity(2 * m * m);
        for j in 0..m {
            for i in 0..m {
                let (v00, v10, v01, v11) = (idx(i, j), idx(i + 1, j), idx(i, j + 1), idx(i + 1, j + 1));
                match diagonal {
                    Diagonal::SouthWestNorthEast => {
                        triangles.push([v00, v10, v11]);
                        triangles.push([v00, v11, v01]);
                    }
                    Diagonal::NorthWestSouthEast => {
                        triangles.push([v00, v10, v01]);
                        triangles.push([v10, v11, v01]);
                    }
                }
            }
        }
        let mut boundary_edges = Vec::with_capacity(4 * m);
        for k in 0..m {
            boundary_edges.push(BoundaryEdge { vertices: [idx(k, 0), idx(k + 1, 0)], tag: Side::Bottom });
            boundary_edges.push(BoundaryEdge { vertices: [idx(m, k), idx(m, k + 1)], tag: Side::Right });
            boundary_edges.push(BoundaryEdge { vertices: [idx(k + 1, m), idx(k, m)], tag: Side::Top });
            boundary_edges.push(BoundaryEdge { vertices: [idx(0, k + 1), idx(0, k)], tag: Side::Left });
        }
        Ok(Mesh { vertices, triangles, boundary_edges })
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn num_triangles(&self) -> usize {
        self.triangles.len()
    }

    pub fn triangle_points(&self, t: usize) -> [Point; 3] {
        let [a, b, c] = self.triangles[t];
        [self.vertices[a], self.vertices[b], self.vertices[c]]
    }

    /// Signed area, positive for counterclockwise ordering.
    pub fn signed_area(&self, t: usize) -> f64 {
        signed_area(self.triangle_points(t))
    }

    pub fn total_area(&self) -> f64 {
        (0..self.num_triangles()).map(|t| self.signed_area(t)).sum()
    }

    /// Largest triangle diameter.
    pub fn max_diameter(&self) -> f64 {
        let dist = |p: Point, q: Point| ((p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2)).sqrt();
        (0..self.num_triangles())
            .map(|t| {
                let [a, b, c] = self.triangle_points(t);
                dist(a, b).max(dist(b, c)).max(dist(c, a))
            })
            .fold(0.0, f64::max)
    }

    /// Unique edges as sorted vertex pairs, numbered in first-visit order over
    /// triangles and local edges (0,1), (1,2), (2,0).
    pub fn edges(&self) -> (Vec<[usize; 2]>, HashMap<[usize; 2], usize>) {
        let mut list = Vec::new();
        let mut index = HashMap::with_capacity(3 * self.triangles.len() / 2 + 4);
        for tri in &self.triangles {
            for k in 0..3 {
                let e = sorted(tri[k], tri[(k + 1) % 3]);
                index.entry(e).or_insert_with(|| {
                    list.push(e);
                    list.len() - 1
                });
            }
        }
        (list, index)
    }

    /// Reports every invariant violation; an empty report means the mesh is valid.
    pub fn validate(&self) -> Vec<Violation> {
        let mut report = Vec::new();
        let nv = self.vertices.len();

        let mut in_range = true;
        for (t, tri) in self.triangles.iter().enumerate() {
            for &v in tri {
                if v >= nv {
                    report.push(Violation::VertexOutOfRange { triangle: t, vertex: v });
                    in_range = false;
                }
            }
        }
        if !in_range {
            return report;
        }

        for t in 0..self.triangles.len() {
            let area = self.signed_area(t);
            if area <= 0.0 {
                report.push(Violation::NonPositiveArea { triangle: t, area });
            }
        }

        // Directed traversals per undirected edge.
        let mut uses: HashMap<[usize; 2], Vec<[usize; 2]>> = HashMap::new();
        for tri in &self.triangles {
            for k in 0..3 {
                let (a, b) = (tri[k], tri[(k + 1) % 3]);
                uses.entry(sorted(a, b)).or_default().push([a, b]);
            }
        }
        let mut keys: Vec<_> = uses.keys().copied().collect();
        keys.sort_unstable();

        let mut tags: HashMap<[usize; 2], Vec<Side>> = HashMap::new();
        for be in &self.boundary_edges {
            let [a, b] = be.vertices;
            tags.entry(sorted(a, b)).or_default().push(be.tag);
        }

        let on_boundary = |e: [usize; 2]| {
            Side::ALL.into_iter().any(|s| s.contains(self.vertices[e[0]], GEOM_TOL) && s.contains(self.vertices[e[1]], GEOM_TOL))
        };

        for e in &keys {
            let dirs = &uses[e];
            match dirs.len() {
                1 => {
                    if !on_boundary(*e) {
                        report.push(Violation::HangingEdge { edge: *e });
                    } else {
                        match tags.get(e).map(Vec::len).unwrap_or(0) {
                            0 => report.push(Violation::UntaggedBoundaryEdge { edge: *e }),
                            1 => {}
                            _ => report.push(Violation::MultiplyTaggedEdge { edge: *e }),
                        }
                    }
                }
                2 => {
                    if dirs[0] == dirs[1] {
                        report.push(Violation::InconsistentOrientation { edge: *e });
                    }
                }
                count => report.push(Violation::OverSharedEdge { edge: *e, count }),
            }
        }

        let mut tagged: Vec<_> = tags.iter().collect();
        tagged.sort_unstable_by_key(|(e, _)| **e);
        let mut covered = [0.0f64; 4];
        for (e, sides) in tagged {
            let is_boundary = uses.get(e).map(|d| d.len() == 1).unwrap_or(false);
            let (p, q) = (self.vertices[e[0]], self.vertices[e[1]]);
            for &side in sides {
                if !is_boundary || !side.contains(p, GEOM_TOL) || !side.contains(q, GEOM_TOL) {
                    report.push(Violation::MisplacedTag { edge: *e, tag: side });
                } else if sides.len() == 1 {
                    let len = ((p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2)).sqrt();
                    covered[side as usize] += len;
                }
            }
        }
        for side in Side::ALL {
            let len = covered[side as usize];
            if (len - 1.0).abs() > 1e-10 {
                report.push(Violation::SideNotCovered { side, covered_length: len });
            }
        }

        let total = self.total_area();
        if (total - 1.0).abs() > 1e-12 {
            report.push(Violation::AreaMismatch { total });
        }
        report
    }

    pub fn ensure_valid(&self) -> Result<(), MeshError> {
        let report = self.validate();
        match report.first() {
            None => Ok(()),
            Some(v) => Err(MeshError::Invalid(report.len(), v.clone())),
        }
    }
}

pub fn signed_area([a, b, c]: [Point; 3]) -> f64 {
    0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_cell() {
        let mesh = Mesh::structured(1, Diagonal::SouthWestNorthEast).unwrap();
        assert_eq!(mesh.num_triangles(), 2);
        assert_eq!(mesh.num_vertices(), 4);
        assert!(mesh.validate().is_empty());
    }

    #[test]
    fn laser_resolution_counts() {
        let mesh = Mesh::structured(64, Diagonal::SouthWestNorthEast).unwrap();
        assert_eq!(mesh.num_triangles(), 8192);
        assert_eq!(mesh.num_vertices(), 4225);
    }

    #[test]
    fn rejects_zero() {
        assert_eq!(Mesh::structured(0, Diagonal::default()), Err(MeshError::ZeroResolution(0)));
    }

    #[test]
    fn area_sums_to_one() {
        let mesh = Mesh::structured(2, Diagonal::NorthWestSouthEast).unwrap();
        assert!((mesh.total_area() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn counts_and_validity_over_range() {
        for m in 1..=128 {
            for diag in [Diagonal::SouthWestNorthEast, Diagonal::NorthWestSouthEast] {
                let mesh = Mesh::structured(m, diag).unwrap();
                assert_eq!(mesh.num_vertices(), (m + 1) * (m + 1));
                assert_eq!(mesh.num_triangles(), 2 * m * m);
                assert_eq!(mesh.boundary_edges.len(), 4 * m);
                assert!((mesh.total_area() - 1.0).abs() <= 1e-12, "m = {m}");
                if m <= 24 || m % 32 == 0 {
                    assert!(mesh.validate().is_empty(), "m = {m}");
                }
            }
        }
    }

    #[test]
    fn interior_edges_shared_twice() {
        let m = 5;
        let mesh = Mesh::structured(m, Diagonal::default()).unwrap();
        let mut count: HashMap<[usize; 2], usize> = HashMap::new();
        for tri in &mesh.triangles {
            for k in 0..3 {
                *count.entry(sorted(tri[k], tri[(k + 1) % 3])).or_default() += 1;
            }
        }
        let boundary = count.values().filter(|&&c| c == 1).count();
        let interior = count.values().filter(|&&c| c == 2).count();
        assert_eq!(boundary, 4 * m);
        assert_eq!(boundary + interior, count.len());
        // Euler: E = V + T - 1 for a disk.
        assert_eq!(count.len(), mesh.num_vertices() + mesh.num_triangles() - 1);
    }

    #[test]
    fn swapped_vertices_reported() {
        let mut mesh = Mesh::structured(4, Diagonal::default()).unwrap();
        mesh.triangles[3].swap(1, 2);
        let report = mesh.validate();
        assert!(report.iter().any(|v| matches!(v, Violation::NonPositiveArea { triangle: 3, .. })));
        assert!(mesh.ensure_valid().is_err());
    }

    #[test]
    fn untagged_edge_reported() {
        let mut mesh = Mesh::structured(4, Diagonal::default()).unwrap();
        let removed = mesh.boundary_edges.remove(5);
        let report = mesh.validate();
        let [a, b] = removed.vertices;
        assert!(report.contains(&Violation::UntaggedBoundaryEdge { edge: sorted(a, b) }));
        assert!(report.iter().any(|v| matches!(v, Violation::SideNotCovered { side, .. } if *side == removed.tag)));
    }

    #[test]
    fn wrong_side_tag_reported() {
        let mut mesh = Mesh::structured(3, Diagonal::default()).unwrap();
        let e = mesh.boundary_edges.iter_mut().find(|e| e.tag == Side::Bottom).unwrap();
        e.tag = Side::Top;
        assert!(mesh.validate().iter().any(|v| matches!(v, Violation::MisplacedTag { tag: Side::Top, .. })));
    }

    #[test]
    fn hanging_node_reported() {
        // Lower-right half split at the diagonal midpoint, upper-left half not.
        let vertices = vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0], [0.5, 0.5]];
        let triangles = vec![[0, 1, 4], [1, 2, 4], [0, 2, 3]];
        let mesh = Mesh { vertices, triangles, boundary_edges: vec![] };
        let report = mesh.validate();
        assert!(report.iter().any(|v| matches!(v, Violation::HangingEdge { .. })));
    }
}
