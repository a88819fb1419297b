//! Diffeomorphisms of the sphere of the form `γ = Proj(Id + tU)`.
//!
//! `U = Σ x_k v_k` is a combination of [`VectorFieldBasis`] elements. For
//! `|t|` below [`step_bound`] the map is certified to be an orientation
//! preserving diffeomorphism; larger deformations are built by composing
//! several such steps ([`ComposedMap`]).

mod compose;
pub mod interp;

pub use compose::{ComposedMap, MapStep};
pub use interp::{InterpJet, Interpolation, SurfaceInterpolant};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, Vec3};
use crate::sphere::{FieldJet, SphericalGrid, SurfaceGrid, VectorFieldBasis};

/// Coefficients `X^v` of a displacement field in a [`VectorFieldBasis`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiffeoCoefficients {
    deg_bar: usize,
    xv: Vec<f64>,
}

impl DiffeoCoefficients {
    pub fn new(basis: &VectorFieldBasis, xv: Vec<f64>) -> Result<Self> {
        if xv.len() != basis.len() {
            return Err(Error::invalid(
                "coefficients",
                format!("expected {} entries, got {}", basis.len(), xv.len()),
            ));
        }
        if xv.iter().any(|x| !x.is_finite()) {
            return Err(Error::invalid("coefficients", "non-finite entry"));
        }
        Ok(DiffeoCoefficients {
            deg_bar: basis.deg_bar(),
            xv,
        })
    }

    pub fn zeros(basis: &VectorFieldBasis) -> Self {
        DiffeoCoefficients {
            deg_bar: basis.deg_bar(),
            xv: vec![0.0; basis.len()],
        }
    }

    pub fn deg_bar(&self) -> usize {
        self.deg_bar
    }

    pub fn values(&self) -> &[f64] {
        &self.xv
    }

    pub fn is_zero(&self) -> bool {
        self.xv.iter().all(|&x| x == 0.0)
    }

    fn check(&self, basis: &VectorFieldBasis) {
        assert_eq!(self.xv.len(), basis.len(), "coefficients do not match the basis");
    }

    /// `U` and its first derivatives on the basis grid.
    pub fn field(&self, basis: &VectorFieldBasis) -> Vec<FieldJet> {
        self.check(basis);
        basis.combine(&self.xv)
    }
}

/// Entries of `∇U` in the frame `{e2, e3}`, one value per grid point.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientTensor {
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    pub c: Vec<f64>,
    pub d: Vec<f64>,
}

/// `∇U` at one point from the field jet.
#[inline]
pub fn gradient_entries(j: &FieldJet, sin_phi: f64, cos_phi: f64) -> [f64; 4] {
    [
        j.u_p,
        j.v_p,
        (j.u_t - j.v * cos_phi) / sin_phi,
        (j.v_t + j.u * cos_phi) / sin_phi,
    ]
}

/// Smaller eigenvalue of the symmetric part of `[[a, c], [b, d]]`.
#[inline]
pub fn lambda_min(m: &[f64; 4]) -> f64 {
    let [a, b, c, d] = *m;
    0.5 * ((a + d) - ((a - d).powi(2) + (b + c).powi(2)).sqrt())
}

impl GradientTensor {
    pub fn new(grid: &SphericalGrid, field: &[FieldJet]) -> Self {
        assert_eq!(field.len(), grid.n_points(), "field does not live on this grid");
        let n = field.len();
        let mut out = GradientTensor {
            a: Vec::with_capacity(n),
            b: Vec::with_capacity(n),
            c: Vec::with_capacity(n),
            d: Vec::with_capacity(n),
        };
        for (p, j) in field.iter().enumerate() {
            let (row, _) = grid.row_col(p);
            let [a, b, c, d] = gradient_entries(j, grid.sin_phi()[row], grid.cos_phi()[row]);
            out.a.push(a);
            out.b.push(b);
            out.c.push(c);
            out.d.push(d);
        }
        out
    }

    /// `tr ∇U = div U`.
    pub fn divergence(&self) -> Vec<f64> {
        self.a.iter().zip(&self.d).map(|(a, d)| a + d).collect()
    }

    pub fn lambda_min(&self) -> Vec<f64> {
        (0..self.a.len())
            .map(|p| lambda_min(&[self.a[p], self.b[p], self.c[p], self.d[p]]))
            .collect()
    }
}

/// Largest `t` certified by the eigenvalue criterion: `−1 / inf λ₁`, or
/// infinity when `λ₁` never goes below zero (up to rounding).
pub fn step_bound(grid: &SphericalGrid, basis: &VectorFieldBasis, coeffs: &DiffeoCoefficients) -> f64 {
    let field = coeffs.field(basis);
    let g = GradientTensor::new(grid, &field);
    let lam = g.lambda_min();
    let inf = lam.iter().copied().fold(f64::INFINITY, f64::min);
    let scale = (0..lam.len())
        .map(|p| g.a[p].abs().max(g.b[p].abs()).max(g.c[p].abs()).max(g.d[p].abs()))
        .fold(0.0, f64::max);
    if inf > -1e-12 * scale.max(f64::MIN_POSITIVE) || inf >= 0.0 {
        f64::INFINITY
    } else {
        -1.0 / inf
    }
}

/// `D = det(1 + tM) + t²⟨JU, (1 + tM)JU⟩` at one point.
#[inline]
pub fn det_algebraic(j: &FieldJet, sin_phi: f64, cos_phi: f64, t: f64) -> f64 {
    let [a, b, c, d] = gradient_entries(j, sin_phi, cos_phi);
    let (u, v) = (j.u, j.v);
    let det = (1.0 + t * a) * (1.0 + t * d) - t * t * b * c;
    det + t * t * (u * u * (1.0 + t * d) + v * v * (1.0 + t * a) - t * u * v * (b + c))
}

/// The same quantity as the triple product `W·(W_φ × W_θ) / sinφ` with
/// `W = x + tU`, computed in the frame `(e1, e2, e3)`.
#[inline]
pub fn det_geometric(j: &FieldJet, sin_phi: f64, cos_phi: f64, t: f64) -> f64 {
    let [a, b, c, d] = gradient_entries(j, sin_phi, cos_phi);
    let w = [1.0, t * j.u, t * j.v];
    let w_p = [-t * j.u, 1.0 + t * a, t * b];
    let w_t = [-t * j.v, t * c, 1.0 + t * d];
    linalg::dot(&w, &linalg::cross(&w_p, &w_t))
}

fn per_point(
    grid: &SphericalGrid,
    basis: &VectorFieldBasis,
    coeffs: &DiffeoCoefficients,
    f: impl Fn(&FieldJet, f64, f64) -> f64,
) -> Vec<f64> {
    coeffs
        .field(basis)
        .iter()
        .enumerate()
        .map(|(p, j)| {
            let (row, _) = grid.row_col(p);
            f(j, grid.sin_phi()[row], grid.cos_phi()[row])
        })
        .collect()
}

/// `D` at every grid point (algebraic form).
pub fn jacobian_det(
    grid: &SphericalGrid,
    basis: &VectorFieldBasis,
    coeffs: &DiffeoCoefficients,
    t: f64,
) -> Vec<f64> {
    per_point(grid, basis, coeffs, |j, s, c| det_algebraic(j, s, c, t))
}

/// `D` at every grid point (triple-product form).
pub fn jacobian_det_geometric(
    grid: &SphericalGrid,
    basis: &VectorFieldBasis,
    coeffs: &DiffeoCoefficients,
    t: f64,
) -> Vec<f64> {
    per_point(grid, basis, coeffs, |j, s, c| det_geometric(j, s, c, t))
}

/// Area factor of `γ` itself: `D / |W|³`.
pub fn area_factor(
    grid: &SphericalGrid,
    basis: &VectorFieldBasis,
    coeffs: &DiffeoCoefficients,
    t: f64,
) -> Vec<f64> {
    per_point(grid, basis, coeffs, |j, s, c| {
        let w2 = 1.0 + t * t * (j.u * j.u + j.v * j.v);
        det_algebraic(j, s, c, t) / w2.powf(1.5)
    })
}

/// Samples of a map `γ: S² → S²` at the grid points.
#[derive(Debug, Clone, PartialEq)]
pub struct SphereMap {
    n_theta: usize,
    n_phi: usize,
    points: Vec<Vec3>,
    identity: bool,
}

impl SphereMap {
    pub fn identity(grid: &SphericalGrid) -> Self {
        SphereMap {
            n_theta: grid.n_theta(),
            n_phi: grid.n_phi(),
            points: (0..grid.n_points()).map(|p| grid.unit_point(p)).collect(),
            identity: true,
        }
    }

    /// Wraps image points, normalizing each to unit length.
    pub fn from_points(grid: &SphericalGrid, points: Vec<Vec3>) -> Result<Self> {
        if points.len() != grid.n_points() {
            return Err(Error::invalid(
                "points",
                format!("expected {} samples, got {}", grid.n_points(), points.len()),
            ));
        }
        let mut out = Vec::with_capacity(points.len());
        for (p, x) in points.iter().enumerate() {
            let n = linalg::norm(x);
            if !(n >= 1e-9) || !n.is_finite() {
                let (row, col) = grid.row_col(p);
                return Err(Error::ZeroVector { row, col });
            }
            out.push(linalg::scale(x, 1.0 / n));
        }
        Ok(SphereMap {
            n_theta: grid.n_theta(),
            n_phi: grid.n_phi(),
            points: out,
            identity: false,
        })
    }

    /// `x ↦ R x`.
    pub fn rotation(grid: &SphericalGrid, r: &[[f64; 3]; 3]) -> Self {
        SphereMap {
            n_theta: grid.n_theta(),
            n_phi: grid.n_phi(),
            points: (0..grid.n_points())
                .map(|p| linalg::mat_vec(r, &grid.unit_point(p)))
                .collect(),
            identity: false,
        }
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.n_theta, self.n_phi)
    }

    pub fn points(&self) -> &[Vec3] {
        &self.points
    }

    pub fn is_identity(&self) -> bool {
        self.identity
    }

    /// Largest geodesic distance between `γ(x)` and `x`, in radians.
    pub fn max_displacement(&self, grid: &SphericalGrid) -> f64 {
        self.points
            .iter()
            .enumerate()
            .map(|(p, y)| {
                let x = grid.unit_point(p);
                linalg::norm(&linalg::cross(&x, y)).atan2(linalg::dot(&x, y))
            })
            .fold(0.0, f64::max)
    }
}

/// `γ = Proj(Id + tU)` at the grid points.
pub fn build_map(
    grid: &SphericalGrid,
    basis: &VectorFieldBasis,
    coeffs: &DiffeoCoefficients,
    t: f64,
) -> Result<SphereMap> {
    if t == 0.0 || coeffs.is_zero() {
        return Ok(SphereMap::identity(grid));
    }
    let field = coeffs.field(basis);
    let mut points = Vec::with_capacity(field.len());
    for (p, j) in field.iter().enumerate() {
        let (row, col) = grid.row_col(p);
        let w = displaced(&grid.frame(row, col), j, t);
        let n = linalg::norm(&w);
        if !(n >= 1e-9) {
            return Err(Error::ZeroVector { row, col });
        }
        points.push(linalg::scale(&w, 1.0 / n));
    }
    Ok(SphereMap {
        n_theta: grid.n_theta(),
        n_phi: grid.n_phi(),
        points,
        identity: false,
    })
}

/// Like [`build_map`] but refuses steps at or beyond the certified bound.
pub fn certified_map(
    grid: &SphericalGrid,
    basis: &VectorFieldBasis,
    coeffs: &DiffeoCoefficients,
    t: f64,
) -> Result<SphereMap> {
    let bound = step_bound(grid, basis, coeffs);
    if t.abs() >= bound {
        return Err(Error::StepBound { t, bound });
    }
    build_map(grid, basis, coeffs, t)
}

/// `W = e1 + t(u e2 + v e3)`.
#[inline]
pub(crate) fn displaced(frame: &[Vec3; 3], j: &FieldJet, t: f64) -> Vec3 {
    let mut w = frame[0];
    linalg::axpy(&mut w, t * j.u, &frame[1]);
    linalg::axpy(&mut w, t * j.v, &frame[2]);
    w
}

/// `f∘γ` with the default interpolant. The identity map returns `f` unchanged.
pub fn resample(grid: &SphericalGrid, f: &SurfaceGrid, gamma: &SphereMap) -> Result<SurfaceGrid> {
    resample_with(grid, f, gamma, Interpolation::default())
}

pub fn resample_with(
    grid: &SphericalGrid,
    f: &SurfaceGrid,
    gamma: &SphereMap,
    method: Interpolation,
) -> Result<SurfaceGrid> {
    f.check_grid(grid)?;
    if gamma.dims() != grid.dims() {
        return Err(Error::GridMismatch {
            expected: grid.dims(),
            found: gamma.dims(),
        });
    }
    if gamma.is_identity() {
        return Ok(f.clone());
    }
    let interp = SurfaceInterpolant::new(grid, f, method);
    Ok(resample_interpolant(grid, &interp, gamma))
}

/// `f∘γ` from a prepared interpolant.
pub fn resample_interpolant(grid: &SphericalGrid, interp: &SurfaceInterpolant, gamma: &SphereMap) -> SurfaceGrid {
    use rayon::prelude::*;
    let points = gamma
        .points()
        .par_iter()
        .map(|y| {
            let (t, p) = linalg::angles(y);
            interp.eval(t, p)
        })
        .collect();
    SurfaceGrid::new(grid, points).expect("interpolated samples are finite")
}

/// `f∘Proj(Id + tU)` together with the pieces needed to pull cotangents back
/// to the coefficients: the interpolant jets at `γ(x)` and `|W|`.
#[derive(Debug, Clone)]
pub struct ReparamEval {
    pub surface: SurfaceGrid,
    t: f64,
    jets: Vec<InterpJet>,
    images: Vec<Vec3>,
    w_norm: Vec<f64>,
}

impl ReparamEval {
    pub fn new(
        grid: &SphericalGrid,
        basis: &VectorFieldBasis,
        interp: &SurfaceInterpolant,
        xv: &[f64],
        t: f64,
    ) -> Result<Self> {
        use rayon::prelude::*;
        assert_eq!(xv.len(), basis.len(), "coefficient length");
        let field = basis.combine(xv);
        let rows: Vec<Result<(InterpJet, Vec3, f64)>> = field
            .par_iter()
            .enumerate()
            .map(|(p, j)| {
                let (row, col) = grid.row_col(p);
                let w = displaced(&grid.frame(row, col), j, t);
                let n = linalg::norm(&w);
                if !(n >= 1e-9) {
                    return Err(Error::ZeroVector { row, col });
                }
                let y = linalg::scale(&w, 1.0 / n);
                let (th, ph) = linalg::angles(&y);
                Ok((interp.eval_jet(th, ph), y, n))
            })
            .collect();
        let mut jets = Vec::with_capacity(rows.len());
        let mut images = Vec::with_capacity(rows.len());
        let mut w_norm = Vec::with_capacity(rows.len());
        for r in rows {
            let (j, y, n) = r?;
            jets.push(j);
            images.push(y);
            w_norm.push(n);
        }
        let surface = SurfaceGrid::new(grid, jets.iter().map(|j| j.value).collect())?;
        Ok(ReparamEval {
            surface,
            t,
            jets,
            images,
            w_norm,
        })
    }

    /// Given `g = ∂E/∂(f∘γ)` per point, returns `∂E/∂X^v`.
    pub fn pullback(&self, grid: &SphericalGrid, basis: &VectorFieldBasis, g: &[[f64; 3]]) -> Vec<f64> {
        let n = grid.n_points();
        assert_eq!(g.len(), n, "cotangent length");
        let mut qu = ndarray::Array1::zeros(n);
        let mut qv = ndarray::Array1::zeros(n);
        for p in 0..n {
            let y = &self.images[p];
            let (th, ph) = linalg::angles(y);
            let fr = linalg::frame(th, ph);
            let s = ph.sin().max(1e-300);
            let j = &self.jets[p];
            let a = linalg::dot(&g[p], &j.d_theta) / (self.w_norm[p] * s);
            let b = linalg::dot(&g[p], &j.d_phi) / self.w_norm[p];
            let mut q = linalg::scale(&fr[2], self.t * a);
            linalg::axpy(&mut q, self.t * b, &fr[1]);
            let (row, col) = grid.row_col(p);
            let base = grid.frame(row, col);
            qu[p] = linalg::dot(&q, &base[1]);
            qv[p] = linalg::dot(&q, &base[2]);
        }
        (basis.u.dot(&qu) + basis.v.dot(&qv)).to_vec()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sphere::{harmonics::sh_index, FieldKind};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn random_coeffs(basis: &VectorFieldBasis, rng: &mut ChaCha8Rng, amp: f64) -> DiffeoCoefficients {
        let xv = (0..basis.len()).map(|_| amp * rng.random_range(-1.0..1.0)).collect();
        DiffeoCoefficients::new(basis, xv).unwrap()
    }

    fn single(basis: &VectorFieldBasis, l: usize, m: i64, kind: FieldKind, raw: f64) -> DiffeoCoefficients {
        let mut xv = vec![0.0; basis.len()];
        let k = basis
            .labels()
            .iter()
            .position(|lab| lab.l == l && lab.m == m && lab.kind == kind)
            .unwrap();
        xv[k] = raw * basis.labels()[k].norm;
        DiffeoCoefficients::new(basis, xv).unwrap()
    }

    // Y_1^0 = N cosφ with N = √(3/4π)
    fn y10_norm() -> f64 {
        (3.0 / (4.0 * PI)).sqrt()
    }

    #[test]
    fn zero_coefficients_give_identity() {
        let g = SphericalGrid::new(8, 7).unwrap();
        let b = VectorFieldBasis::new(&g, 2).unwrap();
        let m = build_map(&g, &b, &DiffeoCoefficients::zeros(&b), 0.7).unwrap();
        assert!(m.is_identity());
        let f = SurfaceGrid::from_fn(&g, |t, p| [t, p, 1.0]);
        assert_eq!(resample(&g, &f, &m).unwrap(), f);
        assert_eq!(sh_index(1, 0), 2);
    }

    #[test]
    fn rotation_field_has_infinite_bound_and_shifts_azimuth() {
        let g = SphericalGrid::new(16, 15).unwrap();
        let b = VectorFieldBasis::new(&g, 3).unwrap();
        // skew gradient of −cosφ/N is sinφ e3
        let c = single(&b, 1, 0, FieldKind::Skew, -1.0 / y10_norm());
        assert_eq!(step_bound(&g, &b, &c), f64::INFINITY);
        let t = 0.3;
        let m = build_map(&g, &b, &c, t).unwrap();
        for (p, y) in m.points().iter().enumerate() {
            let (row, col) = g.row_col(p);
            let (th, _) = linalg::angles(y);
            let shift = (th - g.theta()[col]).rem_euclid(2.0 * PI);
            assert!((shift - t.atan()).abs() < 1e-12);
            assert!((linalg::norm(y) - 1.0).abs() < 1e-12);
            let _ = row;
        }
        for d in jacobian_det(&g, &b, &c, t) {
            assert!((d - (1.0 + t * t)).abs() < 1e-12);
        }
    }

    #[test]
    fn gradient_of_cos_phi_has_unit_bound_and_closed_form_det() {
        let g = SphericalGrid::new(12, 25).unwrap();
        let b = VectorFieldBasis::new(&g, 2).unwrap();
        let c = single(&b, 1, 0, FieldKind::Gradient, 1.0 / y10_norm());
        let field = c.field(&b);
        for (p, j) in field.iter().enumerate() {
            let (row, _) = g.row_col(p);
            assert!((j.u + g.sin_phi()[row]).abs() < 1e-12 && j.v.abs() < 1e-12);
        }
        let lam = GradientTensor::new(&g, &field).lambda_min();
        for (p, l) in lam.iter().enumerate() {
            let (row, _) = g.row_col(p);
            assert!((l + g.cos_phi()[row]).abs() < 1e-12);
        }
        let bound = step_bound(&g, &b, &c);
        assert!((bound - 1.0 / g.cos_phi()[0]).abs() < 1e-12);
        assert!(bound > 1.0 && bound < 1.01);
        let d = jacobian_det(&g, &b, &c, 0.5);
        for (p, v) in d.iter().enumerate() {
            let (row, _) = g.row_col(p);
            let (s, co) = (g.sin_phi()[row], g.cos_phi()[row]);
            let e = (1.0 - 0.5 * co).powi(2) + 0.25 * s * s * (1.0 - 0.5 * co);
            assert!((v - e).abs() < 1e-9);
        }
    }

    #[test]
    fn algebraic_and_geometric_determinants_agree() {
        let g = SphericalGrid::new(12, 11).unwrap();
        let b = VectorFieldBasis::new(&g, 4).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..10 {
            let c = random_coeffs(&b, &mut rng, 0.3);
            let t = rng.random_range(-2.0..2.0);
            let alg = jacobian_det(&g, &b, &c, t);
            let geo = jacobian_det_geometric(&g, &b, &c, t);
            for (x, y) in alg.iter().zip(&geo) {
                assert!((x - y).abs() <= 1e-9 * x.abs().max(1.0), "{x} {y}");
            }
        }
        assert!(jacobian_det(&g, &b, &random_coeffs(&b, &mut rng, 1.0), 0.0).iter().all(|&d| d == 1.0));
    }

    #[test]
    fn determinant_dominates_eigenvalue_bound() {
        let g = SphericalGrid::new(12, 11).unwrap();
        let b = VectorFieldBasis::new(&g, 3).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..10 {
            let c = random_coeffs(&b, &mut rng, 0.5);
            let bound = step_bound(&g, &b, &c);
            let t = 0.99 * bound.min(5.0);
            let field = c.field(&b);
            let lam = GradientTensor::new(&g, &field).lambda_min();
            let d = jacobian_det(&g, &b, &c, t);
            for (dv, l) in d.iter().zip(&lam) {
                assert!(*dv > 0.0);
                let lo = 1.0 + l * t;
                if lo > 0.0 {
                    assert!(*dv >= lo * lo * (1.0 - 1e-12));
                }
            }
        }
    }

    #[test]
    fn divergence_integrates_to_zero() {
        let g = SphericalGrid::new(24, 49).unwrap();
        let b = VectorFieldBasis::new(&g, 4).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let c = random_coeffs(&b, &mut rng, 1.0);
        let div = GradientTensor::new(&g, &c.field(&b)).divergence();
        let abs: f64 = g.integrate(&div.iter().map(|x| x.abs()).collect::<Vec<_>>());
        assert!(g.integrate(&div).abs() < 1e-3 * abs);
    }

    #[test]
    fn unit_sphere_resampled_is_the_map() {
        let g = SphericalGrid::new(16, 31).unwrap();
        let b = VectorFieldBasis::new(&g, 3).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let c = random_coeffs(&b, &mut rng, 0.2);
        let m = build_map(&g, &b, &c, 0.5).unwrap();
        let f = SurfaceGrid::unit_sphere(&g);
        let r = resample(&g, &f, &m).unwrap();
        for (x, y) in r.points().iter().zip(m.points()) {
            assert!(linalg::norm(&linalg::sub(x, y)) < 1e-6);
            assert!((linalg::norm(y) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn certified_map_rejects_large_steps() {
        let g = SphericalGrid::new(12, 25).unwrap();
        let b = VectorFieldBasis::new(&g, 2).unwrap();
        let c = single(&b, 1, 0, FieldKind::Gradient, 1.0 / y10_norm());
        assert!(certified_map(&g, &b, &c, 0.9).is_ok());
        assert!(matches!(certified_map(&g, &b, &c, 1.5), Err(Error::StepBound { .. })));
    }

    #[test]
    fn rotation_preserves_area() {
        let g = SphericalGrid::new(24, 49).unwrap();
        let f = SurfaceGrid::from_fn(&g, |t, p| {
            let r = 1.0 + 0.2 * p.cos() * p.sin() * t.sin();
            linalg::scale(&linalg::frame(t, p)[0], r)
        });
        let (s, c) = 0.4f64.sin_cos();
        let rot = [[c, 0.0, s], [0.0, 1.0, 0.0], [-s, 0.0, c]];
        let r = resample(&g, &f, &SphereMap::rotation(&g, &rot)).unwrap();
        let (a0, a1) = (f.area(&g), r.area(&g));
        assert!((a0 - a1).abs() / a0 < 5e-3, "{a0} {a1}");
    }

    #[test]
    fn pullback_matches_finite_differences() {
        let g = SphericalGrid::new(10, 11).unwrap();
        let b = VectorFieldBasis::new(&g, 2).unwrap();
        let f = SurfaceGrid::from_fn(&g, |t, p| {
            [1.1 * p.sin() * t.cos(), p.sin() * t.sin() + 0.1 * p.cos(), 0.8 * p.cos()]
        });
        let interp = SurfaceInterpolant::new(&g, &f, Interpolation::Spectral);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let xv: Vec<f64> = (0..b.len()).map(|_| rng.random_range(-0.2..0.2)).collect();
        let cot: Vec<[f64; 3]> = (0..g.n_points())
            .map(|_| [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)])
            .collect();
        let obj = |x: &[f64]| {
            let e = ReparamEval::new(&g, &b, &interp, x, 0.7).unwrap();
            e.surface.points().iter().zip(&cot).map(|(a, c)| linalg::dot(a, c)).sum::<f64>()
        };
        let ev = ReparamEval::new(&g, &b, &interp, &xv, 0.7).unwrap();
        let grad = ev.pullback(&g, &b, &cot);
        let h = 1e-6;
        for k in 0..b.len() {
            let mut xp = xv.clone();
            let mut xm = xv.clone();
            xp[k] += h;
            xm[k] -= h;
            let fd = (obj(&xp) - obj(&xm)) / (2.0 * h);
            assert!((fd - grad[k]).abs() < 1e-6 * fd.abs().max(1.0), "{k}: {fd} {}", grad[k]);
        }
    }
}
