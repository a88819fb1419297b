use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, Vec3};

/// A regular `(θ, φ)` grid on the unit sphere.
///
/// Columns are equispaced in `θ ∈ [0, 2π)` and stored without the duplicate
/// seam column; rows sit at cell midpoints `φ_i = (i + ½)π / n_phi`, so no
/// sample lies on a pole. Point `(i, j)` (row `i`, column `j`) has flat index
/// `i * n_theta + j`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GridDims", into = "GridDims")]
pub struct SphericalGrid {
    n_theta: usize,
    n_phi: usize,
    theta: Vec<f64>,
    phi: Vec<f64>,
    sin_phi: Vec<f64>,
    cos_phi: Vec<f64>,
    row_weight: Vec<f64>,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
struct GridDims {
    n_theta: usize,
    n_phi: usize,
}

impl TryFrom<GridDims> for SphericalGrid {
    type Error = Error;

    fn try_from(d: GridDims) -> Result<Self> {
        SphericalGrid::new(d.n_theta, d.n_phi)
    }
}

impl From<SphericalGrid> for GridDims {
    fn from(g: SphericalGrid) -> Self {
        GridDims {
            n_theta: g.n_theta,
            n_phi: g.n_phi,
        }
    }
}

impl SphericalGrid {
    pub const MIN_THETA: usize = 4;
    pub const MIN_PHI: usize = 3;

    pub fn new(n_theta: usize, n_phi: usize) -> Result<Self> {
        if n_theta < Self::MIN_THETA || n_phi < Self::MIN_PHI {
            return Err(Error::GridTooSmall { n_theta, n_phi });
        }
        let d_theta = TAU / n_theta as f64;
        let d_phi = PI / n_phi as f64;
        let theta: Vec<f64> = (0..n_theta).map(|j| j as f64 * d_theta).collect();
        let phi: Vec<f64> = (0..n_phi).map(|i| (i as f64 + 0.5) * d_phi).collect();
        let sin_phi: Vec<f64> = phi.iter().map(|p| p.sin()).collect();
        let cos_phi: Vec<f64> = phi.iter().map(|p| p.cos()).collect();
        let row_weight = sin_phi.iter().map(|s| s * d_theta * d_phi).collect();
        Ok(SphericalGrid {
            n_theta,
            n_phi,
            theta,
            phi,
            sin_phi,
            cos_phi,
            row_weight,
        })
    }

    #[inline]
    pub fn n_theta(&self) -> usize {
        self.n_theta
    }

    #[inline]
    pub fn n_phi(&self) -> usize {
        self.n_phi
    }

    #[inline]
    pub fn dims(&self) -> (usize, usize) {
        (self.n_theta, self.n_phi)
    }

    #[inline]
    pub fn n_points(&self) -> usize {
        self.n_theta * self.n_phi
    }

    #[inline]
    pub fn d_theta(&self) -> f64 {
        TAU / self.n_theta as f64
    }

    #[inline]
    pub fn d_phi(&self) -> f64 {
        PI / self.n_phi as f64
    }

    #[inline]
    pub fn index(&self, row: usize, col: usize) -> usize {
        row * self.n_theta + col
    }

    /// `(row, col)` of a flat index.
    #[inline]
    pub fn row_col(&self, p: usize) -> (usize, usize) {
        (p / self.n_theta, p % self.n_theta)
    }

    pub fn theta(&self) -> &[f64] {
        &self.theta
    }

    pub fn phi(&self) -> &[f64] {
        &self.phi
    }

    pub fn sin_phi(&self) -> &[f64] {
        &self.sin_phi
    }

    pub fn cos_phi(&self) -> &[f64] {
        &self.cos_phi
    }

    /// Quadrature weight `sin φ_i Δθ Δφ` of point `(row, col)`.
    #[inline]
    pub fn weight(&self, row: usize, _col: usize) -> f64 {
        self.row_weight[row]
    }

    /// Quadrature weight of a flat index.
    #[inline]
    pub fn weight_at(&self, p: usize) -> f64 {
        self.row_weight[p / self.n_theta]
    }

    pub fn total_weight(&self) -> f64 {
        self.row_weight.iter().sum::<f64>() * self.n_theta as f64
    }

    /// `Σ field · weight`; the field is indexed by flat point index.
    pub fn integrate(&self, field: &[f64]) -> f64 {
        assert_eq!(field.len(), self.n_points(), "field length");
        field
            .chunks(self.n_theta)
            .zip(&self.row_weight)
            .map(|(row, w)| row.iter().sum::<f64>() * w)
            .sum()
    }

    /// Integrates a closure of `(θ, φ)` over the grid.
    pub fn integrate_fn(&self, f: impl Fn(f64, f64) -> f64) -> f64 {
        let mut total = 0.0;
        for (i, &phi) in self.phi.iter().enumerate() {
            let row: f64 = self.theta.iter().map(|&t| f(t, phi)).sum();
            total += row * self.row_weight[i];
        }
        total
    }

    /// Spherical frame `(e1, e2, e3)` at a grid point.
    pub fn frame(&self, row: usize, col: usize) -> [Vec3; 3] {
        linalg::frame(self.theta[col], self.phi[row])
    }

    /// Unit vector of a grid point (the identity embedding).
    pub fn unit_point(&self, p: usize) -> Vec3 {
        let (i, j) = self.row_col(p);
        self.frame(i, j)[0]
    }

    /// Iterator over `(flat index, θ, φ)`.
    pub fn points(&self) -> impl Iterator<Item = (usize, f64, f64)> + '_ {
        (0..self.n_points()).map(move |p| {
            let (i, j) = self.row_col(p);
            (p, self.theta[j], self.phi[i])
        })
    }
}
