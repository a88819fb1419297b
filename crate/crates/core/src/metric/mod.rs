//! The base metric on one-forms, its four-way split, pullback norms and the
//! square root normal function.

pub mod kernel;
mod srnf;

pub use srnf::{srnf, srnf_l2_distance, SrnfField};

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sphere::{differential, SphericalGrid, SurfaceGrid};
use kernel::Mat32;

/// A field of 3×2 matrices on a grid: a differential `α = df` or a tangent
/// `ξ`. Column 0 pairs with `e3` (`(1/sinφ)∂θ`), column 1 with `e2` (`∂φ`).
#[derive(Debug, Clone, PartialEq)]
pub struct OneFormField {
    n_theta: usize,
    n_phi: usize,
    mats: Vec<Mat32<f64>>,
}

impl OneFormField {
    pub fn from_mats(grid: &SphericalGrid, mats: Vec<[[f64; 2]; 3]>) -> Self {
        assert_eq!(mats.len(), grid.n_points(), "one matrix per grid point");
        OneFormField {
            n_theta: grid.n_theta(),
            n_phi: grid.n_phi(),
            mats,
        }
    }

    pub fn zeros(grid: &SphericalGrid) -> Self {
        Self::from_mats(grid, vec![[[0.0; 2]; 3]; grid.n_points()])
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.n_theta, self.n_phi)
    }

    pub fn mats(&self) -> &[[[f64; 2]; 3]] {
        &self.mats
    }

    pub fn mats_mut(&mut self) -> &mut [[[f64; 2]; 3]] {
        &mut self.mats
    }

    pub fn into_mats(self) -> Vec<[[f64; 2]; 3]> {
        self.mats
    }

    pub fn get(&self, row: usize, col: usize) -> [[f64; 2]; 3] {
        self.mats[row * self.n_theta + col]
    }

    fn zip_map(&self, other: &OneFormField, f: impl Fn(f64, f64) -> f64) -> OneFormField {
        assert_eq!(self.dims(), other.dims(), "one-form fields differ in shape");
        let mats = self
            .mats
            .iter()
            .zip(&other.mats)
            .map(|(a, b)| {
                let mut m = [[0.0; 2]; 3];
                for k in 0..3 {
                    for j in 0..2 {
                        m[k][j] = f(a[k][j], b[k][j]);
                    }
                }
                m
            })
            .collect();
        OneFormField {
            n_theta: self.n_theta,
            n_phi: self.n_phi,
            mats,
        }
    }

    pub fn add(&self, other: &OneFormField) -> OneFormField {
        self.zip_map(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &OneFormField) -> OneFormField {
        self.zip_map(other, |a, b| a - b)
    }

    pub fn scaled(&self, s: f64) -> OneFormField {
        self.zip_map(self, |a, _| a * s)
    }

    /// Left multiplication `R α` at every point.
    pub fn rotated(&self, r: &[[f64; 3]; 3]) -> OneFormField {
        let mats = self
            .mats
            .iter()
            .map(|m| {
                let mut out = [[0.0; 2]; 3];
                for k in 0..3 {
                    for j in 0..2 {
                        out[k][j] = (0..3).map(|l| r[k][l] * m[l][j]).sum();
                    }
                }
                out
            })
            .collect();
        OneFormField {
            n_theta: self.n_theta,
            n_phi: self.n_phi,
            mats,
        }
    }

    /// `det(αᵀα)` at every point.
    pub fn gram_dets(&self) -> Vec<f64> {
        self.mats.iter().map(kernel::gram_det).collect()
    }

    /// Local area factor `√det(αᵀα)`.
    pub fn area_density(&self) -> Vec<f64> {
        self.mats.iter().map(|m| kernel::gram_det(m).max(0.0).sqrt()).collect()
    }

    /// Fails with the first point where `det(αᵀα) ≤ 1e−14 · mean det`.
    pub fn check_rank(&self) -> Result<()> {
        let dets = self.gram_dets();
        let mean = dets.iter().sum::<f64>() / dets.len() as f64;
        let tol = RANK_TOL * mean;
        for (p, &det) in dets.iter().enumerate() {
            if !(det > tol) || !det.is_finite() {
                return Err(Error::RankDeficient {
                    row: p / self.n_theta,
                    col: p % self.n_theta,
                    det,
                    step: None,
                });
            }
        }
        Ok(())
    }

    fn check_same(&self, other: &OneFormField) -> Result<()> {
        if self.dims() != other.dims() {
            return Err(Error::GridMismatch {
                expected: self.dims(),
                found: other.dims(),
            });
        }
        Ok(())
    }
}

/// Relative threshold on `det(αᵀα)` below which a base point is rejected.
pub const RANK_TOL: f64 = 1e-14;

/// Weights `(a, b, c, d)` of the shear, scale, bending and local
/// reparametrization parts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[f64; 4]", into = "[f64; 4]")]
pub struct MetricWeights {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
}

impl MetricWeights {
    pub fn new(a: f64, b: f64, c: f64, d: f64) -> Result<Self> {
        let all = [a, b, c, d];
        if all.iter().any(|x| !x.is_finite() || *x < 0.0) {
            return Err(Error::invalid("weights", format!("{all:?} must be finite and nonnegative")));
        }
        if all.iter().all(|x| *x == 0.0) {
            return Err(Error::invalid("weights", "at least one weight must be positive"));
        }
        Ok(MetricWeights { a, b, c, d })
    }

    /// `(0, ½, 1, 0)`, the weights under which the split metric is the
    /// pullback of the `L²` metric through the SRNF map.
    pub const SRNF: MetricWeights = MetricWeights {
        a: 0.0,
        b: 0.5,
        c: 1.0,
        d: 0.0,
    };

    /// `(1, 1, 1, 1)`: the unsplit base metric.
    pub const BASE: MetricWeights = MetricWeights {
        a: 1.0,
        b: 1.0,
        c: 1.0,
        d: 1.0,
    };

    pub fn as_array(&self) -> [f64; 4] {
        [self.a, self.b, self.c, self.d]
    }
}

impl Default for MetricWeights {
    fn default() -> Self {
        Self::SRNF
    }
}

impl TryFrom<[f64; 4]> for MetricWeights {
    type Error = Error;

    fn try_from(v: [f64; 4]) -> Result<Self> {
        MetricWeights::new(v[0], v[1], v[2], v[3])
    }
}

impl From<MetricWeights> for [f64; 4] {
    fn from(w: MetricWeights) -> Self {
        w.as_array()
    }
}

impl fmt::Display for MetricWeights {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{},{},{},{}", self.a, self.b, self.c, self.d)
    }
}

impl FromStr for MetricWeights {
    type Err = Error;

    /// Parses `"a,b,c,d"`.
    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(',').map(str::trim).collect();
        if parts.len() != 4 {
            return Err(Error::Parse {
                key: "weights".into(),
                message: format!("expected four comma-separated numbers, got `{s}`"),
            });
        }
        let mut v = [0.0; 4];
        for (slot, p) in v.iter_mut().zip(&parts) {
            *slot = p.parse().map_err(|e| Error::Parse {
                key: "weights".into(),
                message: format!("`{p}`: {e}"),
            })?;
        }
        MetricWeights::try_from(v)
    }
}

/// The four parts of a tangent field.
#[derive(Debug, Clone, PartialEq)]
pub struct SplitTangent {
    pub xi_m: OneFormField,
    pub xi_scale: OneFormField,
    pub xi_perp: OneFormField,
    pub xi_0: OneFormField,
}

impl SplitTangent {
    /// Parts in weight order `(m, scale, ⊥, 0)`.
    pub fn parts(&self) -> [&OneFormField; 4] {
        [&self.xi_m, &self.xi_scale, &self.xi_perp, &self.xi_0]
    }

    pub fn sum(&self) -> OneFormField {
        self.xi_m.add(&self.xi_scale).add(&self.xi_perp).add(&self.xi_0)
    }
}

/// `G_α(ξ, η) = ∫ tr(ξ Λ ηᵀ) √det(αᵀα) μ`.
pub fn base_metric(
    grid: &SphericalGrid,
    alpha: &OneFormField,
    xi: &OneFormField,
    eta: &OneFormField,
) -> Result<f64> {
    alpha.check_same(xi)?;
    alpha.check_same(eta)?;
    alpha.check_rank()?;
    Ok((0..grid.n_points())
        .map(|p| kernel::base_density(&alpha.mats[p], &xi.mats[p], &eta.mats[p]) * grid.weight_at(p))
        .sum())
}

/// Splits `ξ` into its shear, scale, normal and rotational parts at `α`.
pub fn decompose(alpha: &OneFormField, xi: &OneFormField) -> Result<SplitTangent> {
    alpha.check_same(xi)?;
    alpha.check_rank()?;
    let n = alpha.mats.len();
    let mut parts: [Vec<Mat32<f64>>; 4] = std::array::from_fn(|_| Vec::with_capacity(n));
    for (a, x) in alpha.mats.iter().zip(&xi.mats) {
        for (dst, part) in parts.iter_mut().zip(kernel::split(a, x)) {
            dst.push(part);
        }
    }
    let wrap = |mats| OneFormField {
        n_theta: alpha.n_theta,
        n_phi: alpha.n_phi,
        mats,
    };
    let [m, s, p, z] = parts;
    Ok(SplitTangent {
        xi_m: wrap(m),
        xi_scale: wrap(s),
        xi_perp: wrap(p),
        xi_0: wrap(z),
    })
}

/// The polarized split metric: both arguments are decomposed and the
/// weighted part-wise base inner products summed.
pub fn split_metric(
    grid: &SphericalGrid,
    w: &MetricWeights,
    alpha: &OneFormField,
    xi: &OneFormField,
    eta: &OneFormField,
) -> Result<f64> {
    alpha.check_same(xi)?;
    alpha.check_same(eta)?;
    alpha.check_rank()?;
    let wts = w.as_array();
    let mut total = 0.0;
    for p in 0..grid.n_points() {
        let a = &alpha.mats[p];
        let px = kernel::split(a, &xi.mats[p]);
        let pe = kernel::split(a, &eta.mats[p]);
        let mut s = 0.0;
        for i in 0..4 {
            if wts[i] != 0.0 {
                s += wts[i] * kernel::base_density(a, &px[i], &pe[i]);
            }
        }
        total += s * grid.weight_at(p);
    }
    Ok(total)
}

/// Quadratic form `G^{a,b,c,d}_α(ξ, ξ)` from the closed-form part norms.
pub fn split_energy(
    grid: &SphericalGrid,
    w: &MetricWeights,
    alpha: &OneFormField,
    xi: &OneFormField,
) -> Result<f64> {
    alpha.check_same(xi)?;
    alpha.check_rank()?;
    Ok((0..grid.n_points())
        .map(|p| kernel::split_energy(w, &alpha.mats[p], &xi.mats[p]) * grid.weight_at(p))
        .sum())
}

/// `‖u‖_f = √G_{df}(du, du)`.
pub fn pullback_norm(
    grid: &SphericalGrid,
    w: &MetricWeights,
    f: &SurfaceGrid,
    u: &SurfaceGrid,
) -> Result<f64> {
    f.check_grid(grid)?;
    u.check_grid(grid)?;
    let alpha = differential(grid, f);
    let xi = differential(grid, u);
    Ok(split_energy(grid, w, &alpha, &xi)?.max(0.0).sqrt())
}
