//! Grids on the sphere, spherical-harmonic bases and the discrete differential.

mod basis;
mod differential;
mod grid;
pub mod harmonics;

pub use basis::{
    field_labels, raw_field_jet, FieldJet, FieldKind, HarmonicBasis, VectorFieldBasis,
    VectorFieldLabel,
};
pub use differential::{
    differential, differential_adjoint, scalar_differential, scalar_differential_adjoint,
};
pub use grid::SphericalGrid;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, Vec3};

/// Samples of a map `f: S² → ℝ³` on a [`SphericalGrid`], in the grid's flat
/// point order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurfaceGrid {
    n_theta: usize,
    n_phi: usize,
    points: Vec<[f64; 3]>,
}

impl SurfaceGrid {
    pub fn new(grid: &SphericalGrid, points: Vec<[f64; 3]>) -> Result<Self> {
        if points.len() != grid.n_points() {
            return Err(Error::invalid(
                "points",
                format!("expected {} samples, got {}", grid.n_points(), points.len()),
            ));
        }
        if let Some(p) = points.iter().position(|x| x.iter().any(|c| !c.is_finite())) {
            let (row, col) = grid.row_col(p);
            return Err(Error::Invariant {
                what: "finite samples",
                row,
                col,
                detail: "non-finite coordinate".into(),
            });
        }
        Ok(SurfaceGrid {
            n_theta: grid.n_theta(),
            n_phi: grid.n_phi(),
            points,
        })
    }

    pub fn zeros(grid: &SphericalGrid) -> Self {
        SurfaceGrid {
            n_theta: grid.n_theta(),
            n_phi: grid.n_phi(),
            points: vec![[0.0; 3]; grid.n_points()],
        }
    }

    /// Samples `f(θ, φ)` at every grid point.
    pub fn from_fn(grid: &SphericalGrid, f: impl Fn(f64, f64) -> [f64; 3]) -> Self {
        let points = grid.points().map(|(_, t, p)| f(t, p)).collect();
        SurfaceGrid {
            n_theta: grid.n_theta(),
            n_phi: grid.n_phi(),
            points,
        }
    }

    /// The identity embedding of the unit sphere.
    pub fn unit_sphere(grid: &SphericalGrid) -> Self {
        Self::from_fn(grid, |t, p| linalg::frame(t, p)[0])
    }

    #[inline]
    pub fn dims(&self) -> (usize, usize) {
        (self.n_theta, self.n_phi)
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.points.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[[f64; 3]] {
        &self.points
    }

    pub fn points_mut(&mut self) -> &mut [[f64; 3]] {
        &mut self.points
    }

    pub fn into_points(self) -> Vec<[f64; 3]> {
        self.points
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> [f64; 3] {
        self.points[row * self.n_theta + col]
    }

    pub fn check_grid(&self, grid: &SphericalGrid) -> Result<()> {
        if self.dims() != grid.dims() {
            return Err(Error::GridMismatch {
                expected: grid.dims(),
                found: self.dims(),
            });
        }
        Ok(())
    }

    fn zip_with(&self, other: &SurfaceGrid, f: impl Fn(&Vec3, &Vec3) -> Vec3) -> SurfaceGrid {
        assert_eq!(self.dims(), other.dims(), "surface grids differ in shape");
        SurfaceGrid {
            n_theta: self.n_theta,
            n_phi: self.n_phi,
            points: self
                .points
                .iter()
                .zip(&other.points)
                .map(|(a, b)| f(a, b))
                .collect(),
        }
    }

    pub fn map(&self, f: impl Fn(&[f64; 3]) -> [f64; 3]) -> SurfaceGrid {
        SurfaceGrid {
            n_theta: self.n_theta,
            n_phi: self.n_phi,
            points: self.points.iter().map(f).collect(),
        }
    }

    /// Pointwise sum. Panics if the shapes differ.
    pub fn add(&self, other: &SurfaceGrid) -> SurfaceGrid {
        self.zip_with(other, linalg::add)
    }

    /// Pointwise difference. Panics if the shapes differ.
    pub fn sub(&self, other: &SurfaceGrid) -> SurfaceGrid {
        self.zip_with(other, linalg::sub)
    }

    pub fn scaled(&self, s: f64) -> SurfaceGrid {
        self.map(|p| linalg::scale(p, s))
    }

    /// `self += s * other`.
    pub fn axpy(&mut self, s: f64, other: &SurfaceGrid) {
        assert_eq!(self.dims(), other.dims(), "surface grids differ in shape");
        for (a, b) in self.points.iter_mut().zip(&other.points) {
            linalg::axpy(a, s, b);
        }
    }

    /// `(1 - t) a + t b`.
    pub fn lerp(a: &SurfaceGrid, b: &SurfaceGrid, t: f64) -> SurfaceGrid {
        a.zip_with(b, |x, y| {
            [
                (1.0 - t) * x[0] + t * y[0],
                (1.0 - t) * x[1] + t * y[1],
                (1.0 - t) * x[2] + t * y[2],
            ]
        })
    }

    pub fn translated(&self, v: [f64; 3]) -> SurfaceGrid {
        self.map(|p| linalg::add(p, &v))
    }

    /// Applies the linear map `R` (row-major) to every sample.
    pub fn transformed(&self, r: &[[f64; 3]; 3]) -> SurfaceGrid {
        self.map(|p| linalg::mat_vec(r, p))
    }

    /// Quadrature-weighted mean of the samples.
    pub fn parameter_centroid(&self, grid: &SphericalGrid) -> [f64; 3] {
        let mut c = [0.0; 3];
        for (p, x) in self.points.iter().enumerate() {
            linalg::axpy(&mut c, grid.weight_at(p), x);
        }
        linalg::scale(&c, 1.0 / grid.total_weight())
    }

    /// Area-weighted centroid `∫ f dA / ∫ dA`.
    pub fn centroid(&self, grid: &SphericalGrid) -> [f64; 3] {
        let dens = differential(grid, self).area_density();
        let mut c = [0.0; 3];
        let mut total = 0.0;
        for (p, x) in self.points.iter().enumerate() {
            let w = dens[p] * grid.weight_at(p);
            linalg::axpy(&mut c, w, x);
            total += w;
        }
        linalg::scale(&c, 1.0 / total)
    }

    /// Surface area `∫ √det(αᵀα) μ`.
    pub fn area(&self, grid: &SphericalGrid) -> f64 {
        grid.integrate(&differential(grid, self).area_density())
    }

    /// Largest distance between two samples.
    pub fn diameter(&self) -> f64 {
        let mut best: f64 = 0.0;
        for (i, a) in self.points.iter().enumerate() {
            for b in &self.points[i + 1..] {
                best = best.max(linalg::norm(&linalg::sub(a, b)));
            }
        }
        best
    }

    /// Translates the area centroid to the origin and scales to unit area.
    pub fn normalized_unit_area(&self, grid: &SphericalGrid) -> SurfaceGrid {
        let c = self.centroid(grid);
        let s = 1.0 / self.area(grid).sqrt();
        self.map(|p| linalg::scale(&linalg::sub(p, &c), s))
    }

    /// Discrete `L²` inner product `Σ ⟨a, b⟩ w`.
    pub fn inner(grid: &SphericalGrid, a: &SurfaceGrid, b: &SurfaceGrid) -> f64 {
        a.points
            .iter()
            .zip(&b.points)
            .enumerate()
            .map(|(p, (x, y))| linalg::dot(x, y) * grid.weight_at(p))
            .sum()
    }

    /// Largest pointwise Euclidean distance between two samplings.
    pub fn max_distance(&self, other: &SurfaceGrid) -> f64 {
        self.points
            .iter()
            .zip(&other.points)
            .map(|(a, b)| linalg::norm(&linalg::sub(a, b)))
            .fold(0.0, f64::max)
    }
}
