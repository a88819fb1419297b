use ndarray::{Array2, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use super::differential::scalar_differential;
use super::harmonics::{harmonic_jets, sh_count, sh_index};
use super::{SphericalGrid, SurfaceGrid};
use crate::error::{Error, Result};
use crate::metric::OneFormField;

/// Deformation basis for path interiors.
///
/// Element `j = 3h + c` places scalar field `h` (harmonic order: degree-major,
/// order-minor, `m = -l..=l`, degrees `1..=deg`) in coordinate slot `c`.
///
/// The scalar fields are the real harmonics orthonormalized under the grid
/// quadrature by modified Gram–Schmidt in that frozen order, so the span of
/// the first `k` elements is the span of the first `k` harmonics and a
/// degree-`d` basis is a prefix of every higher-degree basis.
#[derive(Debug, Clone)]
pub struct HarmonicBasis {
    deg: usize,
    dims: (usize, usize),
    values: Array2<f64>,
    d_theta: Array2<f64>,
    d_phi: Array2<f64>,
}

impl HarmonicBasis {
    pub fn new(grid: &SphericalGrid, deg: usize) -> Result<Self> {
        if deg == 0 {
            return Err(Error::invalid("deg", "must be at least 1"));
        }
        let n_h = sh_count(deg) - 1;
        let npts = grid.n_points();
        let mut values = Array2::<f64>::zeros((n_h, npts));
        for (p, t, ph) in grid.points() {
            let jets = harmonic_jets(deg, t, ph);
            for (h, jet) in jets.iter().skip(1).enumerate() {
                values[[h, p]] = jet.y;
            }
        }
        let weights: Vec<f64> = (0..npts).map(|p| grid.weight_at(p)).collect();
        let inner = |a: &[f64], b: &[f64]| -> f64 {
            a.iter().zip(b).zip(&weights).map(|((x, y), w)| x * y * w).sum()
        };
        for h in 0..n_h {
            let mut v = values.row(h).to_vec();
            let original = inner(&v, &v).sqrt();
            for _pass in 0..2 {
                for k in 0..h {
                    let prev = values.row(k);
                    let prev = prev.as_slice().expect("row-major rows are contiguous");
                    let c = inner(&v, prev);
                    for (x, y) in v.iter_mut().zip(prev) {
                        *x -= c * y;
                    }
                }
            }
            let norm = inner(&v, &v).sqrt();
            if norm <= 1e-8 * original {
                return Err(Error::invalid(
                    "deg",
                    format!("degree {deg} harmonics are not resolved by a {}x{} grid", grid.n_theta(), grid.n_phi()),
                ));
            }
            for (dst, x) in values.row_mut(h).iter_mut().zip(&v) {
                *dst = x / norm;
            }
        }
        let mut d_theta = Array2::<f64>::zeros((n_h, npts));
        let mut d_phi = Array2::<f64>::zeros((n_h, npts));
        for h in 0..n_h {
            let row = values.row(h).to_vec();
            let (dt, dp) = scalar_differential(grid, &row);
            d_theta.row_mut(h).assign(&ndarray::Array1::from(dt));
            d_phi.row_mut(h).assign(&ndarray::Array1::from(dp));
        }
        Ok(HarmonicBasis {
            deg,
            dims: grid.dims(),
            values,
            d_theta,
            d_phi,
        })
    }

    pub fn deg(&self) -> usize {
        self.deg
    }

    /// `L = 3((deg + 1)² − 1)`.
    pub fn len(&self) -> usize {
        3 * self.n_scalar()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn n_scalar(&self) -> usize {
        self.values.nrows()
    }

    pub fn dims(&self) -> (usize, usize) {
        self.dims
    }

    /// Scalar fields, one row per harmonic.
    pub fn scalar_values(&self) -> ArrayView2<'_, f64> {
        self.values.view()
    }

    /// `(1/sinφ)∂θ` of each scalar field.
    pub fn scalar_d_theta(&self) -> ArrayView2<'_, f64> {
        self.d_theta.view()
    }

    /// `∂φ` of each scalar field.
    pub fn scalar_d_phi(&self) -> ArrayView2<'_, f64> {
        self.d_phi.view()
    }

    /// Degree and order of scalar field `h`.
    pub fn scalar_label(h: usize) -> (usize, i64) {
        let idx = h + 1;
        let l = (idx as f64).sqrt().floor() as usize;
        let l = if (l + 1) * (l + 1) <= idx { l + 1 } else { l };
        (l, idx as i64 - (l * l) as i64 - l as i64)
    }

    /// Element `j` as a surface.
    pub fn element(&self, grid: &SphericalGrid, j: usize) -> SurfaceGrid {
        let (h, c) = (j / 3, j % 3);
        let mut s = SurfaceGrid::zeros(grid);
        for (p, x) in s.points_mut().iter_mut().enumerate() {
            x[c] = self.values[[h, p]];
        }
        s
    }

    fn coeff_matrix(&self, coeffs: &[f64]) -> Array2<f64> {
        assert_eq!(coeffs.len(), self.len(), "coefficient length");
        Array2::from_shape_vec((self.n_scalar(), 3), coeffs.to_vec()).expect("shape checked")
    }

    /// `Σ_j c_j S_j`.
    pub fn combine(&self, coeffs: &[f64]) -> Vec<[f64; 3]> {
        let c = self.coeff_matrix(coeffs);
        let f = self.values.t().dot(&c);
        f.axis_iter(Axis(0)).map(|r| [r[0], r[1], r[2]]).collect()
    }

    /// `d(Σ_j c_j S_j)` built from the stored discrete differentials.
    pub fn combine_differential(&self, coeffs: &[f64]) -> Vec<[[f64; 2]; 3]> {
        let c = self.coeff_matrix(coeffs);
        let dt = self.d_theta.t().dot(&c);
        let dp = self.d_phi.t().dot(&c);
        dt.axis_iter(Axis(0))
            .zip(dp.axis_iter(Axis(0)))
            .map(|(a, b)| [[a[0], b[0]], [a[1], b[1]], [a[2], b[2]]])
            .collect()
    }

    /// Adds `Σ_j c_j S_j` and its differential to a surface and its one-form.
    pub fn add_combination(&self, coeffs: &[f64], f: &mut [[f64; 3]], df: &mut OneFormField) {
        for (x, y) in f.iter_mut().zip(self.combine(coeffs)) {
            for k in 0..3 {
                x[k] += y[k];
            }
        }
        for (m, d) in df.mats_mut().iter_mut().zip(self.combine_differential(coeffs)) {
            for k in 0..3 {
                m[k][0] += d[k][0];
                m[k][1] += d[k][1];
            }
        }
    }

    /// Pulls cotangents of a surface value and of its one-form back onto
    /// coefficients: `∂E/∂c_j = ⟨g_f, S_j⟩ + ⟨g_α, dS_j⟩` (plain sums, no
    /// quadrature weights).
    pub fn project_cotangent(
        &self,
        g_f: Option<&[[f64; 3]]>,
        g_alpha: Option<&[[[f64; 2]; 3]]>,
    ) -> Vec<f64> {
        let npts = self.values.ncols();
        let mut out = Array2::<f64>::zeros((self.n_scalar(), 3));
        if let Some(g) = g_f {
            let gm = Array2::from_shape_fn((npts, 3), |(p, k)| g[p][k]);
            out += &self.values.dot(&gm);
        }
        if let Some(g) = g_alpha {
            let g0 = Array2::from_shape_fn((npts, 3), |(p, k)| g[p][k][0]);
            let g1 = Array2::from_shape_fn((npts, 3), |(p, k)| g[p][k][1]);
            out += &self.d_theta.dot(&g0);
            out += &self.d_phi.dot(&g1);
        }
        out.into_raw_vec_and_offset().0
    }

    /// Discrete `L²` Gram matrix of the `L` elements.
    pub fn gram(&self, grid: &SphericalGrid) -> Array2<f64> {
        let w = ndarray::Array1::from_shape_fn(self.values.ncols(), |p| grid.weight_at(p));
        let scaled = &self.values * &w;
        let g = scaled.dot(&self.values.t());
        let n = self.len();
        Array2::from_shape_fn((n, n), |(a, b)| {
            if a % 3 == b % 3 {
                g[[a / 3, b / 3]]
            } else {
                0.0
            }
        })
    }
}

/// Gradient or skew gradient.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FieldKind {
    Gradient,
    Skew,
}

/// Identifies one element of a [`VectorFieldBasis`]: `kind` applied to the
/// harmonic `Y_l^m`, then divided by `norm`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VectorFieldLabel {
    pub l: usize,
    pub m: i64,
    pub kind: FieldKind,
    pub norm: f64,
}

/// Frame components of one vector field and their first derivatives at a
/// point: `U = u e2 + v e3`.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct FieldJet {
    pub u: f64,
    pub v: f64,
    pub u_t: f64,
    pub u_p: f64,
    pub v_t: f64,
    pub v_p: f64,
}

/// Tangent vector fields for reparametrizations: gradients and skew
/// gradients (`e1 × grad`) of the real harmonics of degree `1..=deg_bar`,
/// each scaled to unit discrete `L²` norm. Order: degree-major, order-minor,
/// gradient before skew gradient.
#[derive(Debug, Clone)]
pub struct VectorFieldBasis {
    deg_bar: usize,
    dims: (usize, usize),
    labels: Vec<VectorFieldLabel>,
    pub(crate) u: Array2<f64>,
    pub(crate) v: Array2<f64>,
    pub(crate) u_t: Array2<f64>,
    pub(crate) u_p: Array2<f64>,
    pub(crate) v_t: Array2<f64>,
    pub(crate) v_p: Array2<f64>,
}

pub(crate) fn raw_jet(jet: &super::harmonics::HarmonicJet, kind: FieldKind, s: f64, c: f64) -> FieldJet {
    let gv = jet.y_t / s;
    let gv_t = jet.y_tt / s;
    let gv_p = jet.y_tp / s - jet.y_t * c / (s * s);
    match kind {
        FieldKind::Gradient => FieldJet {
            u: jet.y_p,
            v: gv,
            u_t: jet.y_tp,
            u_p: jet.y_pp,
            v_t: gv_t,
            v_p: gv_p,
        },
        FieldKind::Skew => FieldJet {
            u: -gv,
            v: jet.y_p,
            u_t: -gv_t,
            u_p: -gv_p,
            v_t: jet.y_tp,
            v_p: jet.y_pp,
        },
    }
}

impl VectorFieldBasis {
    pub fn new(grid: &SphericalGrid, deg_bar: usize) -> Result<Self> {
        if deg_bar == 0 {
            return Err(Error::invalid("deg_bar", "must be at least 1"));
        }
        let n = 2 * sh_count(deg_bar) - 2;
        let npts = grid.n_points();
        let mut arrays: [Array2<f64>; 6] = std::array::from_fn(|_| Array2::zeros((n, npts)));
        let mut labels: Vec<VectorFieldLabel> = field_labels(deg_bar)
            .into_iter()
            .map(|(l, m, kind)| VectorFieldLabel { l, m, kind, norm: 1.0 })
            .collect();
        for (p, t, ph) in grid.points() {
            let (s, c) = ph.sin_cos();
            let jets = harmonic_jets(deg_bar, t, ph);
            for (k, lab) in labels.iter().enumerate() {
                let fj = raw_jet(&jets[sh_index(lab.l, lab.m)], lab.kind, s, c);
                for (arr, val) in arrays.iter_mut().zip([fj.u, fj.v, fj.u_t, fj.u_p, fj.v_t, fj.v_p]) {
                    arr[[k, p]] = val;
                }
            }
        }
        for (k, lab) in labels.iter_mut().enumerate() {
            let norm2: f64 = (0..npts)
                .map(|p| (arrays[0][[k, p]].powi(2) + arrays[1][[k, p]].powi(2)) * grid.weight_at(p))
                .sum();
            let norm = norm2.sqrt();
            lab.norm = norm;
            for arr in arrays.iter_mut() {
                arr.row_mut(k).mapv_inplace(|x| x / norm);
            }
        }
        let [u, v, u_t, u_p, v_t, v_p] = arrays;
        Ok(VectorFieldBasis {
            deg_bar,
            dims: grid.dims(),
            labels,
            u,
            v,
            u_t,
            u_p,
            v_t,
            v_p,
        })
    }

    pub fn deg_bar(&self) -> usize {
        self.deg_bar
    }

    /// `L̄ = 2(deg_bar + 1)² − 2`.
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn dims(&self) -> (usize, usize) {
        self.dims
    }

    pub fn labels(&self) -> &[VectorFieldLabel] {
        &self.labels
    }

    /// Frame components `(u, v)` of element `k` on the grid.
    pub fn element(&self, k: usize) -> (Vec<f64>, Vec<f64>) {
        (self.u.row(k).to_vec(), self.v.row(k).to_vec())
    }

    /// `Σ_k x_k v_k` and its first derivatives at every grid point.
    pub fn combine(&self, xv: &[f64]) -> Vec<FieldJet> {
        assert_eq!(xv.len(), self.len(), "coefficient length");
        let x = ndarray::ArrayView1::from(xv);
        let u = x.dot(&self.u);
        let v = x.dot(&self.v);
        let u_t = x.dot(&self.u_t);
        let u_p = x.dot(&self.u_p);
        let v_t = x.dot(&self.v_t);
        let v_p = x.dot(&self.v_p);
        (0..u.len())
            .map(|p| FieldJet {
                u: u[p],
                v: v[p],
                u_t: u_t[p],
                u_p: u_p[p],
                v_t: v_t[p],
                v_p: v_p[p],
            })
            .collect()
    }

    /// `Σ_k x_k v_k` evaluated analytically at an arbitrary `(θ, φ)`.
    pub fn eval_at(&self, xv: &[f64], theta: f64, phi: f64) -> FieldJet {
        raw_field_jet(self.deg_bar, &self.raw_coefficients(xv), theta, phi)
    }

    /// Coefficients with the normalization folded in, so that
    /// `Σ x_k v_k = Σ raw_k · kind_k(Y_{l_k}^{m_k})` independently of the grid.
    pub fn raw_coefficients(&self, xv: &[f64]) -> Vec<f64> {
        assert_eq!(xv.len(), self.len(), "coefficient length");
        xv.iter().zip(&self.labels).map(|(x, l)| x / l.norm).collect()
    }

    /// Values `(u_k, v_k)` of every element at `(θ, φ)`, without derivatives.
    pub fn elements_at(&self, theta: f64, phi: f64) -> Vec<(f64, f64)> {
        let (s, c) = phi.sin_cos();
        let jets = harmonic_jets(self.deg_bar, theta, phi);
        self.labels
            .iter()
            .map(|lab| {
                let fj = raw_jet(&jets[sh_index(lab.l, lab.m)], lab.kind, s, c);
                (fj.u / lab.norm, fj.v / lab.norm)
            })
            .collect()
    }

    /// Discrete `L²` Gram matrix `Σ (u_a u_b + v_a v_b) w`.
    pub fn gram(&self, grid: &SphericalGrid) -> Array2<f64> {
        let w = ndarray::Array1::from_shape_fn(self.u.ncols(), |p| grid.weight_at(p));
        let uw = &self.u * &w;
        let vw = &self.v * &w;
        uw.dot(&self.u.t()) + vw.dot(&self.v.t())
    }
}

/// `(l, m, kind)` of every element of a degree-`deg_bar` vector-field basis
/// in frozen order.
pub fn field_labels(deg_bar: usize) -> Vec<(usize, i64, FieldKind)> {
    let mut out = Vec::with_capacity(2 * sh_count(deg_bar) - 2);
    for l in 1..=deg_bar {
        for m in -(l as i64)..=(l as i64) {
            for kind in [FieldKind::Gradient, FieldKind::Skew] {
                out.push((l, m, kind));
            }
        }
    }
    out
}

/// Evaluates `Σ raw_k · kind_k(Y_{l_k}^{m_k})` and its first derivatives at
/// `(θ, φ)`, given coefficients from [`VectorFieldBasis::raw_coefficients`].
pub fn raw_field_jet(deg_bar: usize, raw: &[f64], theta: f64, phi: f64) -> FieldJet {
    let labels = field_labels(deg_bar);
    assert_eq!(raw.len(), labels.len(), "coefficient length");
    let (s, c) = phi.sin_cos();
    let jets = harmonic_jets(deg_bar, theta, phi);
    let mut out = FieldJet::default();
    for (&(l, m, kind), &x) in labels.iter().zip(raw) {
        if x == 0.0 {
            continue;
        }
        let fj = raw_jet(&jets[sh_index(l, m)], kind, s, c);
        out.u += x * fj.u;
        out.v += x * fj.v;
        out.u_t += x * fj.u_t;
        out.u_p += x * fj.u_p;
        out.v_t += x * fj.v_t;
        out.v_p += x * fj.v_p;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn surface_basis_counts() {
        let g = SphericalGrid::new(12, 25).unwrap();
        for deg in 1..=5 {
            let b = HarmonicBasis::new(&g, deg).unwrap();
            assert_eq!(b.len(), 3 * ((deg + 1) * (deg + 1) - 1));
        }
        let g = SphericalGrid::new(25, 49).unwrap();
        assert_eq!(HarmonicBasis::new(&g, 7).unwrap().len(), 189);
        assert!(HarmonicBasis::new(&g, 0).is_err());
    }

    #[test]
    fn surface_basis_gram_is_identity() {
        let g = SphericalGrid::new(25, 49).unwrap();
        let b = HarmonicBasis::new(&g, 5).unwrap();
        assert_eq!(b.len(), 105);
        let gram = b.gram(&g);
        for i in 0..105 {
            for j in 0..105 {
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((gram[[i, j]] - expect).abs() < 1e-10, "({i},{j}) {}", gram[[i, j]]);
            }
        }
    }

    #[test]
    fn lower_degree_basis_is_a_prefix() {
        let g = SphericalGrid::new(12, 25).unwrap();
        let b3 = HarmonicBasis::new(&g, 3).unwrap();
        let b5 = HarmonicBasis::new(&g, 5).unwrap();
        for h in 0..b3.n_scalar() {
            for p in 0..g.n_points() {
                assert!((b3.scalar_values()[[h, p]] - b5.scalar_values()[[h, p]]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn degree_one_fields_are_coordinate_functions() {
        // GS leaves the l = 1 harmonics (already orthogonal) as rescaled x, y, z
        let g = SphericalGrid::new(25, 49).unwrap();
        let b = HarmonicBasis::new(&g, 1).unwrap();
        for (h, axis) in [(0usize, 1usize), (1, 2), (2, 0)] {
            let row = b.scalar_values().row(h).to_vec();
            let ratio: Vec<f64> = g
                .points()
                .filter(|&(p, _, _)| g.unit_point(p)[axis].abs() > 0.3)
                .map(|(p, _, _)| row[p] / g.unit_point(p)[axis])
                .collect();
            let r0 = ratio[0];
            assert!(ratio.iter().all(|r| (r - r0).abs() < 1e-10 * r0.abs()));
        }
    }

    #[test]
    fn scalar_labels_follow_frozen_order() {
        assert_eq!(HarmonicBasis::scalar_label(0), (1, -1));
        assert_eq!(HarmonicBasis::scalar_label(2), (1, 1));
        assert_eq!(HarmonicBasis::scalar_label(3), (2, -2));
        assert_eq!(HarmonicBasis::scalar_label(7), (2, 2));
        assert_eq!(HarmonicBasis::scalar_label(8), (3, -3));
    }

    #[test]
    fn combine_and_project_are_adjoint() {
        let g = SphericalGrid::new(12, 25).unwrap();
        let b = HarmonicBasis::new(&g, 3).unwrap();
        let c: Vec<f64> = (0..b.len()).map(|j| ((j * 7) % 11) as f64 / 11.0 - 0.5).collect();
        let gf: Vec<[f64; 3]> = (0..g.n_points())
            .map(|p| [(p % 5) as f64, (p % 3) as f64 - 1.0, 0.25])
            .collect();
        let f = b.combine(&c);
        let lhs: f64 = f.iter().zip(&gf).map(|(a, b)| a[0] * b[0] + a[1] * b[1] + a[2] * b[2]).sum();
        let proj = b.project_cotangent(Some(&gf), None);
        let rhs: f64 = proj.iter().zip(&c).map(|(a, b)| a * b).sum();
        assert!((lhs - rhs).abs() < 1e-9 * lhs.abs().max(1.0));
    }

    #[test]
    fn combined_differential_matches_direct_differential() {
        let g = SphericalGrid::new(12, 25).unwrap();
        let b = HarmonicBasis::new(&g, 3).unwrap();
        let c: Vec<f64> = (0..b.len()).map(|j| (j as f64).sin()).collect();
        let f = SurfaceGrid::new(&g, b.combine(&c)).unwrap();
        let direct = super::super::differential(&g, &f);
        let fast = b.combine_differential(&c);
        for (a, m) in direct.mats().iter().zip(&fast) {
            for k in 0..3 {
                for col in 0..2 {
                    assert!((a[k][col] - m[k][col]).abs() < 1e-11);
                }
            }
        }
    }

    #[test]
    fn vector_basis_counts_and_norms() {
        let g = SphericalGrid::new(25, 49).unwrap();
        for deg_bar in 1..=7 {
            let b = VectorFieldBasis::new(&g, deg_bar).unwrap();
            assert_eq!(b.len(), 2 * (deg_bar + 1) * (deg_bar + 1) - 2);
        }
        let b = VectorFieldBasis::new(&g, 7).unwrap();
        assert_eq!(b.len(), 126);
        let gram = b.gram(&g);
        for k in 0..b.len() {
            assert!((gram[[k, k]] - 1.0).abs() < 1e-12);
        }
        for k in (0..b.len()).step_by(2) {
            assert!(gram[[k, k + 1]].abs() < 1e-12, "pair {k}");
        }
    }

    #[test]
    fn gradient_of_zonal_degree_one_points_south() {
        let g = SphericalGrid::new(25, 49).unwrap();
        let b = VectorFieldBasis::new(&g, 1).unwrap();
        let k = b
            .labels()
            .iter()
            .position(|l| l.l == 1 && l.m == 0 && l.kind == FieldKind::Gradient)
            .unwrap();
        let (u, v) = b.element(k);
        let scale = u[0] / -g.sin_phi()[0];
        for (p, _, ph) in g.points() {
            assert!((u[p] - scale * -ph.sin()).abs() < 1e-12);
            assert!(v[p].abs() < 1e-12);
        }
    }

    #[test]
    fn analytic_evaluation_matches_grid_arrays() {
        let g = SphericalGrid::new(12, 25).unwrap();
        let b = VectorFieldBasis::new(&g, 4).unwrap();
        let x: Vec<f64> = (0..b.len()).map(|k| ((k as f64) * 0.37).cos()).collect();
        let on_grid = b.combine(&x);
        for (p, t, ph) in g.points().step_by(7) {
            let e = b.eval_at(&x, t, ph);
            let q = on_grid[p];
            for (a, c) in [(e.u, q.u), (e.v, q.v), (e.u_t, q.u_t), (e.u_p, q.u_p), (e.v_t, q.v_t), (e.v_p, q.v_p)] {
                assert!((a - c).abs() < 1e-10 * (1.0 + c.abs()));
            }
        }
    }
}
