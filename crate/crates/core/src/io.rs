//! Text artifacts: mesh dumps, VTK fields, trajectory and convergence CSV,
//! run metadata. Files are written atomically.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::Path;

use thiserror::Error;

use crate::ensemble::{RunMetadata, TrajectoryStats};
use crate::fem::{Degree, DofMap};
use crate::mesh::Mesh;
use crate::sparse::CsrMatrix;

#[derive(Debug, Error)]
pub enum IoError {
    #[error("cannot write {path}: {source}")]
    Write {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("field `{name}` has {got} values, expected {expected}")]
    FieldLength { name: String, expected: usize, got: usize },
}

/// Writes through a temporary file in the target directory, then renames it
/// into place, so readers see either the whole file or none.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<(), IoError> {
    let err = |source| IoError::Write { path: path.display().to_string(), source };
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    std::fs::create_dir_all(dir).map_err(err)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(err)?;
    tmp.write_all(contents).map_err(err)?;
    tmp.as_file().sync_all().map_err(err)?;
    tmp.persist(path).map_err(|e| err(e.error))?;
    Ok(())
}

/// Vertex, triangle, and tagged boundary-edge blocks, 0-based.
pub fn mesh_text(mesh: &Mesh) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "vertices {}", mesh.num_vertices());
    for v in &mesh.vertices {
        let _ = writeln!(out, "{:.16e} {:.16e}", v[0], v[1]);
    }
    let _ = writeln!(out, "triangles {}", mesh.num_triangles());
    for t in &mesh.triangles {
        let _ = writeln!(out, "{} {} {}", t[0], t[1], t[2]);
    }
    let _ = writeln!(out, "boundary_edges {}", mesh.boundary_edges.len());
    for e in &mesh.boundary_edges {
        let _ = writeln!(out, "{} {} {}", e.vertices[0], e.vertices[1], e.tag.name());
    }
    out
}

/// Legacy ASCII unstructured grid with one point per dof. P2 cells use the
/// quadratic triangle with vertices first, then the midpoints of edges
/// 0-1, 1-2, 2-0.
pub fn vtk_text(mesh: &Mesh, dofs: &DofMap, title: &str, fields: &[(&str, &[f64])]) -> Result<String, IoError> {
    let n = dofs.num_dofs();
    for (name, values) in fields {
        if values.len() != n {
            return Err(IoError::FieldLength { name: name.to_string(), expected: n, got: values.len() });
        }
    }
    let (nloc, cell_type) = match dofs.degree() {
        Degree::P1 => (3, 5),
        Degree::P2 => (6, 22),
    };
    let mut out = String::new();
    let _ = writeln!(out, "# vtk DataFile Version 3.0\n{title}\nASCII\nDATASET UNSTRUCTURED_GRID");
    let _ = writeln!(out, "POINTS {n} double");
    for p in dofs.coords() {
        let _ = writeln!(out, "{:.16e} {:.16e} 0", p[0], p[1]);
    }
    let nt = mesh.num_triangles();
    let _ = writeln!(out, "CELLS {nt} {}", nt * (nloc + 1));
    for t in 0..nt {
        let cell = dofs.cell(t);
        let _ = write!(out, "{nloc}");
        for d in &cell[..nloc] {
            let _ = write!(out, " {d}");
        }
        out.push('\n');
    }
    let _ = writeln!(out, "CELL_TYPES {nt}");
    for _ in 0..nt {
        let _ = writeln!(out, "{cell_type}");
    }
    if !fields.is_empty() {
        let _ = writeln!(out, "POINT_DATA {n}");
        for (name, values) in fields {
            let _ = writeln!(out, "SCALARS {name} double 1\nLOOKUP_TABLE default");
            for v in values.iter() {
                let _ = writeln!(out, "{v:.16e}");
            }
        }
    }
    Ok(out)
}

/// One row per level and member plus a `mean` row: step, time, member, L2 norm, min, max.
pub fn trajectory_csv(stats: &TrajectoryStats) -> String {
    let mut out = String::from("step,time,member,l2_norm,min,max\n");
    for r in &stats.records {
        for j in 0..r.member_norms.len() {
            let _ = writeln!(
                out,
                "{},{:.16e},{},{:.16e},{:.16e},{:.16e}",
                r.step, r.time, j, r.member_norms[j], r.member_min[j], r.member_max[j]
            );
        }
        let _ = writeln!(
            out,
            "{},{:.16e},mean,{:.16e},{:.16e},{:.16e}",
            r.step, r.time, r.mean_norm, r.mean_min, r.mean_max
        );
    }
    out
}

pub fn metadata_text(meta: &RunMetadata) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "order = {}", meta.order.as_int());
    let _ = writeln!(out, "splitting = {}", meta.splitting.name());
    let _ = writeln!(out, "solver = {}", meta.solver.name());
    let bootstrap = match meta.bootstrap {
        None => "none",
        Some(crate::ensemble::Bootstrap::Exact) => "exact",
        Some(_) => "backward-euler",
    };
    let _ = writeln!(out, "bootstrap = {bootstrap}");
    let _ = writeln!(out, "variance_estimator = {}", meta.variance_estimator);
    let _ = writeln!(out, "factorizations = {}", meta.factorizations);
    let _ = writeln!(out, "steps = {}", meta.steps);
    let _ = writeln!(out, "dt = {:.16e}", meta.dt);
    let _ = writeln!(out, "final_time = {:.16e}", meta.final_time);
    let _ = writeln!(out, "members = {}", meta.members);
    let _ = writeln!(out, "dofs = {}", meta.dofs);
    let _ = writeln!(out, "stability_ratio = {:.16e}", meta.stability_ratio);
    let _ = writeln!(out, "stability_threshold = {:.16e}", meta.stability_threshold);
    if let Some(k) = meta.kappa_max {
        let _ = writeln!(out, "kappa_max = {k:.16e}");
    }
    let _ = writeln!(out, "workers = {}", meta.workers);
    out
}

pub fn matrix_text(matrix: &CsrMatrix) -> String {
    let mut buf = Vec::new();
    matrix.write_coordinate(&mut buf).expect("writing to memory");
    String::from_utf8(buf).expect("ascii output")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::BoundarySpec;
    use crate::mesh::Diagonal;

    #[test]
    fn mesh_text_blocks() {
        let mesh = Mesh::structured(1, Diagonal::default()).unwrap();
        let text = mesh_text(&mesh);
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "vertices 4");
        assert_eq!(lines[5], "triangles 2");
        assert_eq!(lines[8], "boundary_edges 4");
        assert_eq!(lines.len(), 13);
        assert!(text.ends_with('\n') && !text.contains('\r'));
    }

    #[test]
    fn vtk_counts_and_types() {
        let mesh = Mesh::structured(2, Diagonal::default()).unwrap();
        for (degree, ty, nloc) in [(Degree::P1, "5", 3), (Degree::P2, "22", 6)] {
            let dofs = DofMap::new(&mesh, degree, &BoundarySpec::homogeneous_dirichlet());
            let f = vec![1.0; dofs.num_dofs()];
            let text = vtk_text(&mesh, &dofs, "t", &[("T", &f)]).unwrap();
            assert!(text.contains(&format!("POINTS {} double", dofs.num_dofs())));
            assert!(text.contains(&format!("CELLS 8 {}", 8 * (nloc + 1))));
            assert_eq!(text.lines().filter(|l| *l == ty).count(), 8);
        }
        let dofs = DofMap::new(&mesh, Degree::P1, &BoundarySpec::homogeneous_dirichlet());
        assert!(matches!(vtk_text(&mesh, &dofs, "t", &[("T", &[0.0])]), Err(IoError::FieldLength { .. })));
    }

    #[test]
    fn atomic_write_replaces_whole_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("sub").join("a.csv");
        write_atomic(&path, b"first\n").unwrap();
        write_atomic(&path, b"second\n").unwrap();
        assert_eq!(std::fs::read_to_string(&path).unwrap(), "second\n");
        assert_eq!(std::fs::read_dir(path.parent().unwrap()).unwrap().count(), 1);
    }
}
