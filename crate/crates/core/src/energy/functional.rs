use crate::diffeo::{Interpolation, ReparamEval, SurfaceInterpolant};
use crate::error::{Error, Result};
use crate::metric::kernel::{split_energy, split_energy_grad, Mat32};
use crate::metric::{MetricWeights, OneFormField};
use crate::optim::Objective;
use crate::sphere::{differential, differential_adjoint, HarmonicBasis, SphericalGrid, SurfaceGrid, VectorFieldBasis};

use super::rotation::{Mat3, RotationParams};
use super::{forms_energy, forms_energy_grad, DerivativeMode, DiscretePath};

/// Which surface the interior frames interpolate from.
#[derive(Debug, Clone, PartialEq)]
pub enum Anchor {
    /// A fixed surface, typically the original source `f1`.
    Surface(SurfaceGrid),
    /// Whatever the first frame currently is (including its reparametrization).
    Start,
}

struct Reparam<'a> {
    basis: &'a VectorFieldBasis,
    interp: SurfaceInterpolant,
}

/// The path energy as a function of a flat parameter vector
/// `[r (3, if rigid); X^v (L̄, if reparametrized); Coeff (L·(T−1))]`.
///
/// The first frame is `start`, or `start∘γ` when reparametrized; the last is
/// `end`, or `R·end` when rigid. Interior frames are
/// `(1 − t_i) anchor + t_i f(t_T) + Σ_j Coeff(j, i) S_j`.
pub struct PathFunctional<'a> {
    grid: &'a SphericalGrid,
    basis: &'a HarmonicBasis,
    w: MetricWeights,
    t_count: usize,
    mode: DerivativeMode,
    start: SurfaceGrid,
    end: SurfaceGrid,
    anchor: Anchor,
    reparam: Option<Reparam<'a>>,
    rigid: bool,
    alpha_start: OneFormField,
    alpha_end: OneFormField,
    alpha_anchor: Option<OneFormField>,
}

/// The parameter vector split into its blocks.
#[derive(Debug, Clone, PartialEq)]
pub struct PathParams<'x> {
    pub rotation: RotationParams,
    pub xv: &'x [f64],
    pub coeff: &'x [f64],
}

impl<'a> PathFunctional<'a> {
    /// A parametrized functional between `start` and `end`, anchored at
    /// `start`.
    pub fn new(
        grid: &'a SphericalGrid,
        basis: &'a HarmonicBasis,
        w: MetricWeights,
        t_count: usize,
        start: &SurfaceGrid,
        end: &SurfaceGrid,
    ) -> Result<Self> {
        if t_count < 2 {
            return Err(Error::invalid("T", "need at least 2 time steps"));
        }
        start.check_grid(grid)?;
        end.check_grid(grid)?;
        Ok(PathFunctional {
            grid,
            basis,
            w,
            t_count,
            mode: DerivativeMode::Forward,
            start: start.clone(),
            end: end.clone(),
            anchor: Anchor::Surface(start.clone()),
            reparam: None,
            rigid: false,
            alpha_start: differential(grid, start),
            alpha_end: differential(grid, end),
            alpha_anchor: Some(differential(grid, start)),
        })
    }

    pub fn mode(mut self, mode: DerivativeMode) -> Self {
        self.mode = mode;
        self
    }

    pub fn anchor(mut self, anchor: Anchor) -> Result<Self> {
        self.alpha_anchor = match &anchor {
            Anchor::Surface(s) => {
                s.check_grid(self.grid)?;
                Some(differential(self.grid, s))
            }
            Anchor::Start => None,
        };
        self.anchor = anchor;
        Ok(self)
    }

    /// Frees the first frame to `start∘Proj(Id + Σ X^v_k v_k)`.
    pub fn reparametrize(mut self, basis: &'a VectorFieldBasis, method: Interpolation) -> Self {
        self.reparam = Some(Reparam {
            basis,
            interp: SurfaceInterpolant::new(self.grid, &self.start, method),
        });
        self
    }

    /// Frees a rotation `R` of the last frame.
    pub fn rigid(mut self) -> Self {
        self.rigid = true;
        self
    }

    pub fn intervals(&self) -> usize {
        self.t_count
    }

    pub fn coeff_len(&self) -> usize {
        self.basis.len() * (self.t_count - 1)
    }

    pub fn xv_len(&self) -> usize {
        self.reparam.as_ref().map_or(0, |r| r.basis.len())
    }

    fn rot_len(&self) -> usize {
        if self.rigid {
            3
        } else {
            0
        }
    }

    /// Offset of the `Coeff` block.
    pub fn coeff_offset(&self) -> usize {
        self.rot_len() + self.xv_len()
    }

    pub fn split<'x>(&self, x: &'x [f64]) -> PathParams<'x> {
        assert_eq!(x.len(), self.dim(), "parameter vector has the wrong length");
        let r0 = self.rot_len();
        let rotation = if self.rigid {
            RotationParams::new([x[0], x[1], x[2]])
        } else {
            RotationParams::identity()
        };
        PathParams {
            rotation,
            xv: &x[r0..r0 + self.xv_len()],
            coeff: &x[self.coeff_offset()..],
        }
    }

    /// Concatenates blocks into a parameter vector.
    pub fn join(&self, rotation: &RotationParams, xv: &[f64], coeff: &[f64]) -> Vec<f64> {
        assert_eq!(xv.len(), self.xv_len(), "X^v length");
        assert_eq!(coeff.len(), self.coeff_len(), "Coeff length");
        let mut out = Vec::with_capacity(self.dim());
        if self.rigid {
            out.extend_from_slice(&rotation.r);
        }
        out.extend_from_slice(xv);
        out.extend_from_slice(coeff);
        out
    }

    fn start_frame(&self, xv: &[f64]) -> Result<(SurfaceGrid, OneFormField, Option<ReparamEval>)> {
        match &self.reparam {
            Some(rp) if xv.iter().any(|&v| v != 0.0) => {
                let ev = ReparamEval::new(self.grid, rp.basis, &rp.interp, xv, 1.0)?;
                let a = differential(self.grid, &ev.surface);
                Ok((ev.surface.clone(), a, Some(ev)))
            }
            Some(rp) => {
                let ev = ReparamEval::new(self.grid, rp.basis, &rp.interp, xv, 1.0)?;
                Ok((self.start.clone(), self.alpha_start.clone(), Some(ev)))
            }
            None => Ok((self.start.clone(), self.alpha_start.clone(), None)),
        }
    }

    fn frame_forms(&self, alpha_s: &OneFormField, alpha_e: &OneFormField, coeff: &[f64]) -> Vec<OneFormField> {
        let l = self.basis.len();
        let anchor = self.alpha_anchor.as_ref().unwrap_or(alpha_s);
        let mut out = Vec::with_capacity(self.t_count + 1);
        out.push(alpha_s.clone());
        for i in 1..self.t_count {
            let t = i as f64 / self.t_count as f64;
            let d = self.basis.combine_differential(&coeff[(i - 1) * l..i * l]);
            let mats = anchor
                .mats()
                .iter()
                .zip(alpha_e.mats())
                .zip(d)
                .map(|((a, e), c)| {
                    let mut m = [[0.0; 2]; 3];
                    for r in 0..3 {
                        for j in 0..2 {
                            m[r][j] = (1.0 - t) * a[r][j] + t * e[r][j] + c[r][j];
                        }
                    }
                    m
                })
                .collect();
            out.push(OneFormField::from_mats(self.grid, mats));
        }
        out.push(alpha_e.clone());
        out
    }

    fn end_frame(&self, r: &Mat3) -> (SurfaceGrid, OneFormField) {
        if self.rigid {
            (self.end.transformed(r), self.alpha_end.rotated(r))
        } else {
            (self.end.clone(), self.alpha_end.clone())
        }
    }

    /// The path for parameters `x`.
    pub fn path(&self, x: &[f64]) -> Result<DiscretePath> {
        let p = self.split(x);
        let (s, _, _) = self.start_frame(p.xv)?;
        let (e, _) = self.end_frame(&p.rotation.matrix());
        let anchor = match &self.anchor {
            Anchor::Surface(a) => a,
            Anchor::Start => &s,
        };
        DiscretePath::from_coefficients(self.grid, self.basis, &s, anchor, &e, self.t_count, p.coeff)
    }

    /// Energy at `x`, with rank failures reported by time step.
    pub fn energy(&self, x: &[f64]) -> Result<f64> {
        let p = self.split(x);
        let (_, a_s, _) = self.start_frame(p.xv)?;
        let (_, a_e) = self.end_frame(&p.rotation.matrix());
        forms_energy(self.grid, &self.w, self.mode, &self.frame_forms(&a_s, &a_e, p.coeff))
    }

    /// Energy and its exact gradient at `x`.
    pub fn energy_grad(&self, x: &[f64]) -> Result<(f64, Vec<f64>)> {
        let p = self.split(x);
        let (rm, drm) = p.rotation.matrix_with_derivatives();
        let (_, a_s, ev) = self.start_frame(p.xv)?;
        let (_, a_e) = self.end_frame(&rm);
        let forms = self.frame_forms(&a_s, &a_e, p.coeff);
        let (val, grads) = forms_energy_grad(self.grid, &self.w, self.mode, &forms)?;

        let mut out = Vec::with_capacity(self.dim());
        let tc = self.t_count as f64;
        if self.rigid {
            // α_e = R α_f2 enters frame i with weight t_i
            let n = self.grid.n_points();
            let mut gr = [[0.0; 3]; 3];
            for (i, g) in grads.iter().enumerate().skip(1) {
                let t = i as f64 / tc;
                for p in 0..n {
                    let af = &self.alpha_end.mats()[p];
                    for a in 0..3 {
                        for b in 0..3 {
                            gr[a][b] += t * (g[p][a][0] * af[b][0] + g[p][a][1] * af[b][1]);
                        }
                    }
                }
            }
            for d in &drm {
                out.push((0..3).flat_map(|a| (0..3).map(move |b| (a, b))).map(|(a, b)| d[a][b] * gr[a][b]).sum());
            }
        }
        if let (Some(rp), Some(ev)) = (&self.reparam, &ev) {
            let mut g0 = grads[0].clone();
            if self.alpha_anchor.is_none() {
                for (i, g) in grads.iter().enumerate().take(self.t_count).skip(1) {
                    super::add_scaled(&mut g0, g, 1.0 - i as f64 / tc);
                }
            }
            let gf = differential_adjoint(self.grid, &OneFormField::from_mats(self.grid, g0));
            out.extend(ev.pullback(self.grid, rp.basis, gf.points()));
        }
        for g in &grads[1..self.t_count] {
            out.extend(self.basis.project_cotangent(None, Some(g)));
        }
        Ok((val, out))
    }
}

impl Objective for PathFunctional<'_> {
    fn dim(&self) -> usize {
        self.coeff_offset() + self.coeff_len()
    }

    fn eval(&self, x: &[f64]) -> (f64, Vec<f64>) {
        match self.energy_grad(x) {
            Ok(r) if r.0.is_finite() => r,
            _ => (f64::INFINITY, vec![0.0; self.dim()]),
        }
    }

    fn value(&self, x: &[f64]) -> f64 {
        self.energy(x).unwrap_or(f64::INFINITY)
    }
}

/// `F_r(X^v) = ‖f_next − f̄∘γ‖²_{f̄∘γ}`: the first-step mismatch after
/// reparametrizing `f̄`.
pub struct ReparamFunctional<'a> {
    grid: &'a SphericalGrid,
    basis: &'a VectorFieldBasis,
    w: MetricWeights,
    interp: SurfaceInterpolant,
    alpha_next: OneFormField,
}

impl<'a> ReparamFunctional<'a> {
    pub fn new(
        grid: &'a SphericalGrid,
        basis: &'a VectorFieldBasis,
        w: MetricWeights,
        f_bar: &SurfaceGrid,
        f_next: &SurfaceGrid,
        method: Interpolation,
    ) -> Result<Self> {
        f_bar.check_grid(grid)?;
        f_next.check_grid(grid)?;
        Ok(ReparamFunctional {
            grid,
            basis,
            w,
            interp: SurfaceInterpolant::new(grid, f_bar, method),
            alpha_next: differential(grid, f_next),
        })
    }

    /// `f̄∘γ` for coefficients `xv`.
    pub fn reparametrized(&self, xv: &[f64]) -> Result<SurfaceGrid> {
        Ok(ReparamEval::new(self.grid, self.basis, &self.interp, xv, 1.0)?.surface)
    }

    fn base(&self, xv: &[f64]) -> Result<(ReparamEval, OneFormField)> {
        let ev = ReparamEval::new(self.grid, self.basis, &self.interp, xv, 1.0)?;
        let a = differential(self.grid, &ev.surface);
        a.check_rank()?;
        Ok((ev, a))
    }

    fn tangent(&self, a: &Mat32<f64>, p: usize) -> Mat32<f64> {
        let n = &self.alpha_next.mats()[p];
        let mut xi = [[0.0; 2]; 3];
        for r in 0..3 {
            for j in 0..2 {
                xi[r][j] = n[r][j] - a[r][j];
            }
        }
        xi
    }

    pub fn energy(&self, xv: &[f64]) -> Result<f64> {
        let (_, a) = self.base(xv)?;
        Ok(a.mats()
            .iter()
            .enumerate()
            .map(|(p, m)| split_energy(&self.w, m, &self.tangent(m, p)) * self.grid.weight_at(p))
            .sum())
    }

    pub fn energy_grad(&self, xv: &[f64]) -> Result<(f64, Vec<f64>)> {
        let (ev, a) = self.base(xv)?;
        let mut val = 0.0;
        let mut cot = Vec::with_capacity(a.mats().len());
        for (p, m) in a.mats().iter().enumerate() {
            let wp = self.grid.weight_at(p);
            let (e, ga, gx) = split_energy_grad(&self.w, m, &self.tangent(m, p));
            val += wp * e;
            let mut c = [[0.0; 2]; 3];
            for r in 0..3 {
                for j in 0..2 {
                    c[r][j] = wp * (ga[r][j] - gx[r][j]);
                }
            }
            cot.push(c);
        }
        let gf = differential_adjoint(self.grid, &OneFormField::from_mats(self.grid, cot));
        Ok((val, ev.pullback(self.grid, self.basis, gf.points())))
    }
}

impl Objective for ReparamFunctional<'_> {
    fn dim(&self) -> usize {
        self.basis.len()
    }

    fn eval(&self, x: &[f64]) -> (f64, Vec<f64>) {
        match self.energy_grad(x) {
            Ok(r) if r.0.is_finite() => r,
            _ => (f64::INFINITY, vec![0.0; self.dim()]),
        }
    }

    fn value(&self, x: &[f64]) -> f64 {
        self.energy(x).unwrap_or(f64::INFINITY)
    }
}
