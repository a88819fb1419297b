use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::linalg;
use crate::sphere::{SphericalGrid, SurfaceGrid};

/// Triangle mesh of a surface grid: grid samples plus one vertex per pole.
#[derive(Debug, Clone, PartialEq)]
pub struct TriMesh {
    pub vertices: Vec<[f64; 3]>,
    /// Zero-based vertex indices, counter-clockwise seen from outside for
    /// surfaces parametrized like the unit sphere.
    pub faces: Vec<[usize; 3]>,
}

impl TriMesh {
    /// Quads between neighbouring rows are split along one diagonal; the
    /// first and last rows are closed with fans around pole vertices placed
    /// by linear extrapolation of the row means to `φ = 0` and `φ = π`.
    pub fn from_grid(grid: &SphericalGrid, f: &SurfaceGrid) -> Result<Self> {
        f.check_grid(grid)?;
        let (nt, np) = grid.dims();
        let row_mean = |i: usize| {
            let mut m = [0.0; 3];
            for j in 0..nt {
                linalg::axpy(&mut m, 1.0 / nt as f64, &f.get(i, j));
            }
            m
        };
        let extrapolate = |a: [f64; 3], b: [f64; 3]| linalg::sub(&linalg::scale(&a, 1.5), &linalg::scale(&b, 0.5));
        let north = extrapolate(row_mean(0), row_mean(1));
        let south = extrapolate(row_mean(np - 1), row_mean(np - 2));
        let mut vertices = f.points().to_vec();
        let n_idx = vertices.len();
        vertices.push(north);
        vertices.push(south);
        let s_idx = n_idx + 1;
        let v = |i: usize, j: usize| i * nt + (j % nt);
        let mut faces = Vec::with_capacity(2 * nt * np);
        for j in 0..nt {
            faces.push([n_idx, v(0, j), v(0, j + 1)]);
        }
        for i in 0..np - 1 {
            for j in 0..nt {
                faces.push([v(i, j), v(i + 1, j), v(i + 1, j + 1)]);
                faces.push([v(i, j), v(i + 1, j + 1), v(i, j + 1)]);
            }
        }
        for j in 0..nt {
            faces.push([s_idx, v(np - 1, j + 1), v(np - 1, j)]);
        }
        Ok(TriMesh { vertices, faces })
    }

    pub fn euler_characteristic(&self) -> i64 {
        let mut edges = std::collections::HashSet::new();
        for f in &self.faces {
            for k in 0..3 {
                let (a, b) = (f[k], f[(k + 1) % 3]);
                edges.insert((a.min(b), a.max(b)));
            }
        }
        self.vertices.len() as i64 - edges.len() as i64 + self.faces.len() as i64
    }

    /// Every directed edge appears exactly once and its reverse exactly once.
    pub fn is_closed_oriented(&self) -> bool {
        let mut directed = std::collections::HashMap::new();
        for f in &self.faces {
            for k in 0..3 {
                *directed.entry((f[k], f[(k + 1) % 3])).or_insert(0usize) += 1;
            }
        }
        directed
            .iter()
            .all(|(&(a, b), &n)| n == 1 && directed.get(&(b, a)) == Some(&1))
    }

    /// `(1/6) Σ a·(b × c)`: the enclosed volume, positive for outward faces.
    pub fn signed_volume(&self) -> f64 {
        self.faces
            .iter()
            .map(|f| {
                let [a, b, c] = f.map(|i| self.vertices[i]);
                linalg::dot(&a, &linalg::cross(&b, &c)) / 6.0
            })
            .sum()
    }

    pub fn to_obj(&self) -> String {
        let mut s = String::with_capacity(40 * (self.vertices.len() + self.faces.len()));
        for p in &self.vertices {
            let _ = writeln!(s, "v {:.17e} {:.17e} {:.17e}", p[0], p[1], p[2]);
        }
        for f in &self.faces {
            let _ = writeln!(s, "f {} {} {}", f[0] + 1, f[1] + 1, f[2] + 1);
        }
        s
    }
}

/// Writes `f` as a Wavefront OBJ file.
pub fn write_obj(path: impl AsRef<Path>, grid: &SphericalGrid, f: &SurfaceGrid) -> Result<()> {
    let path = path.as_ref();
    let mesh = TriMesh::from_grid(grid, f)?;
    fs::write(path, mesh.to_obj()).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn sphere_mesh_is_a_closed_outward_genus_zero_surface() {
        for (nt, np) in [(4, 3), (12, 25), (9, 10)] {
            let g = SphericalGrid::new(nt, np).unwrap();
            let m = TriMesh::from_grid(&g, &SurfaceGrid::unit_sphere(&g)).unwrap();
            assert_eq!(m.vertices.len(), nt * np + 2);
            assert_eq!(m.faces.len(), 2 * nt * np);
            assert_eq!(m.euler_characteristic(), 2);
            assert!(m.is_closed_oriented());
            assert!(m.signed_volume() > 0.0);
        }
        let g = SphericalGrid::new(64, 65).unwrap();
        let m = TriMesh::from_grid(&g, &SurfaceGrid::unit_sphere(&g)).unwrap();
        assert!((m.signed_volume() - 4.0 * PI / 3.0).abs() < 1e-2);
        assert!(linalg::norm(&linalg::sub(&m.vertices[64 * 65], &[0.0, 0.0, 1.0])) < 1e-3);
    }

    #[test]
    fn obj_text_uses_one_based_indices() {
        let g = SphericalGrid::new(4, 3).unwrap();
        let s = TriMesh::from_grid(&g, &SurfaceGrid::unit_sphere(&g)).unwrap().to_obj();
        assert_eq!(s.lines().filter(|l| l.starts_with("v ")).count(), 14);
        assert_eq!(s.lines().filter(|l| l.starts_with("f ")).count(), 24);
        let max = s
            .lines()
            .filter_map(|l| l.strip_prefix("f "))
            .flat_map(|l| l.split(' ').map(|x| x.parse::<usize>().unwrap()))
            .collect::<Vec<_>>();
        assert_eq!(*max.iter().min().unwrap(), 1);
        assert_eq!(*max.iter().max().unwrap(), 14);
    }
}
