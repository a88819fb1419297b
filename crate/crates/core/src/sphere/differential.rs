//! Finite-difference differential `f ↦ df` in the spherical frame.
//!
//! Column 0 of every 3×2 matrix is `(1/sin φ) ∂θ f`, column 1 is `∂φ f`.
//! The `θ` derivative is a periodic central difference. The `φ` derivative is
//! central on interior rows and uses the second-order one-sided stencil on the
//! first and last rows, so no value beyond the sampled band is ever needed.

use super::{SphericalGrid, SurfaceGrid};
use crate::metric::OneFormField;

/// Scalar version of [`differential`]: returns `((1/sinφ)∂θ h, ∂φ h)`.
pub fn scalar_differential(grid: &SphericalGrid, h: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let (nt, np) = grid.dims();
    assert_eq!(h.len(), nt * np, "field length");
    let mut dt = vec![0.0; nt * np];
    let mut dp = vec![0.0; nt * np];
    let ct = 1.0 / (2.0 * grid.d_theta());
    let cp = 1.0 / (2.0 * grid.d_phi());
    for i in 0..np {
        let inv_s = 1.0 / grid.sin_phi()[i];
        let row = &h[i * nt..(i + 1) * nt];
        for j in 0..nt {
            let jp = if j + 1 == nt { 0 } else { j + 1 };
            let jm = if j == 0 { nt - 1 } else { j - 1 };
            dt[i * nt + j] = (row[jp] - row[jm]) * ct * inv_s;
        }
    }
    for i in 0..np {
        for j in 0..nt {
            let at = |r: usize| h[r * nt + j];
            dp[i * nt + j] = if i == 0 {
                (-3.0 * at(0) + 4.0 * at(1) - at(2)) * cp
            } else if i + 1 == np {
                (3.0 * at(i) - 4.0 * at(i - 1) + at(i - 2)) * cp
            } else {
                (at(i + 1) - at(i - 1)) * cp
            };
        }
    }
    (dt, dp)
}

/// Transpose of [`scalar_differential`]: given cotangents `(gt, gp)` of the
/// two output columns, accumulates the cotangent of the input field.
pub fn scalar_differential_adjoint(grid: &SphericalGrid, gt: &[f64], gp: &[f64]) -> Vec<f64> {
    let (nt, np) = grid.dims();
    let mut out = vec![0.0; nt * np];
    let ct = 1.0 / (2.0 * grid.d_theta());
    let cp = 1.0 / (2.0 * grid.d_phi());
    for i in 0..np {
        let inv_s = 1.0 / grid.sin_phi()[i];
        for j in 0..nt {
            let g = gt[i * nt + j] * ct * inv_s;
            let jp = if j + 1 == nt { 0 } else { j + 1 };
            let jm = if j == 0 { nt - 1 } else { j - 1 };
            out[i * nt + jp] += g;
            out[i * nt + jm] -= g;
        }
    }
    for i in 0..np {
        for j in 0..nt {
            let g = gp[i * nt + j] * cp;
            let mut put = |r: usize, c: f64| out[r * nt + j] += c * g;
            if i == 0 {
                put(0, -3.0);
                put(1, 4.0);
                put(2, -1.0);
            } else if i + 1 == np {
                put(i, 3.0);
                put(i - 1, -4.0);
                put(i - 2, 1.0);
            } else {
                put(i + 1, 1.0);
                put(i - 1, -1.0);
            }
        }
    }
    out
}

fn component(f: &[[f64; 3]], k: usize) -> Vec<f64> {
    f.iter().map(|p| p[k]).collect()
}

/// The discrete differential of a surface: one 3×2 matrix per grid point.
pub fn differential(grid: &SphericalGrid, f: &SurfaceGrid) -> OneFormField {
    assert_eq!(f.dims(), grid.dims(), "surface does not live on this grid");
    let mut mats = vec![[[0.0; 2]; 3]; grid.n_points()];
    for k in 0..3 {
        let (dt, dp) = scalar_differential(grid, &component(f.points(), k));
        for (p, m) in mats.iter_mut().enumerate() {
            m[k] = [dt[p], dp[p]];
        }
    }
    OneFormField::from_mats(grid, mats)
}

/// Transpose of [`differential`] acting on a field of matrix cotangents.
pub fn differential_adjoint(grid: &SphericalGrid, g: &OneFormField) -> SurfaceGrid {
    let mut pts = vec![[0.0; 3]; grid.n_points()];
    for k in 0..3 {
        let gt: Vec<f64> = g.mats().iter().map(|m| m[k][0]).collect();
        let gp: Vec<f64> = g.mats().iter().map(|m| m[k][1]).collect();
        let out = scalar_differential_adjoint(grid, &gt, &gp);
        for (p, v) in out.into_iter().enumerate() {
            pts[p][k] = v;
        }
    }
    SurfaceGrid::new(grid, pts).expect("adjoint of finite cotangents is finite")
}
