use super::{OneFormField, RANK_TOL};
use crate::error::{Error, Result};
use crate::linalg;
use crate::sphere::{differential, SphericalGrid, SurfaceGrid};

/// Square root normal function `q = √A n` sampled on a grid.
///
/// `A = √det(αᵀα)` and `n` is the unit normal `∂φ f × ∂θ f / |·|`, which
/// points outward for the standard embedding of the sphere.
#[derive(Debug, Clone, PartialEq)]
pub struct SrnfField {
    n_theta: usize,
    n_phi: usize,
    q: Vec<[f64; 3]>,
}

impl SrnfField {
    pub fn values(&self) -> &[[f64; 3]] {
        &self.q
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.n_theta, self.n_phi)
    }

    /// `∫ |q|² μ`, the area of the surface.
    pub fn squared_norm(&self, grid: &SphericalGrid) -> f64 {
        grid.integrate(&self.q.iter().map(|v| linalg::dot(v, v)).collect::<Vec<_>>())
    }

    /// The field as a surface-shaped grid, for export.
    pub fn to_surface(&self, grid: &SphericalGrid) -> Result<SurfaceGrid> {
        SurfaceGrid::new(grid, self.q.clone())
    }
}

/// SRNF of a one-form field.
pub fn srnf_of_form(alpha: &OneFormField) -> Result<SrnfField> {
    let (n_theta, n_phi) = alpha.dims();
    let dets = alpha.gram_dets();
    let mean = dets.iter().sum::<f64>() / dets.len() as f64;
    let mut q = Vec::with_capacity(dets.len());
    for (p, m) in alpha.mats().iter().enumerate() {
        let c0 = [m[0][0], m[1][0], m[2][0]];
        let c1 = [m[0][1], m[1][1], m[2][1]];
        let n = linalg::cross(&c1, &c0);
        let len2 = linalg::dot(&n, &n);
        if !(len2 > RANK_TOL * mean) || !len2.is_finite() {
            return Err(Error::DegenerateNormal {
                row: p / n_theta,
                col: p % n_theta,
            });
        }
        // |n| = A, so √A · n/|n| = n / A^{1/2}
        q.push(linalg::scale(&n, len2.powf(-0.25)));
    }
    Ok(SrnfField { n_theta, n_phi, q })
}

/// SRNF of a surface.
pub fn srnf(grid: &SphericalGrid, f: &SurfaceGrid) -> Result<SrnfField> {
    f.check_grid(grid)?;
    srnf_of_form(&differential(grid, f))
}

/// `√∫ |q1 − q2|² μ`.
pub fn srnf_l2_distance(grid: &SphericalGrid, q1: &SrnfField, q2: &SrnfField) -> f64 {
    assert_eq!(q1.dims(), q2.dims(), "SRNF fields differ in shape");
    let d: Vec<f64> = q1
        .q
        .iter()
        .zip(&q2.q)
        .map(|(a, b)| {
            let e = linalg::sub(a, b);
            linalg::dot(&e, &e)
        })
        .collect();
    grid.integrate(&d).max(0.0).sqrt()
}
