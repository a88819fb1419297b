//! Discrete paths of surfaces and their energies.
//!
//! A path has `T + 1` frames at `t_i = i/T`. Its energy is a weighted sum of
//! squared split-metric norms of finite-difference velocities, each measured
//! at a base frame. In [`DerivativeMode::Forward`] the terms are
//! `‖(f_i − f_{i−1})/ΔT‖²_{f_{i−1}} ΔT` for `i = 1..T`. In
//! [`DerivativeMode::Central`] interior frames use central differences and
//! the two endpoints one-sided differences with half weight, which makes the
//! energy invariant under reversing the path.

mod functional;
mod rotation;

pub use functional::{Anchor, PathFunctional, ReparamFunctional};
pub use rotation::{frobenius_gap, mat_mul, rotation_matrix, transpose, Mat3, RotationParams};

use ndarray::Array2;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metric::kernel::{split_energy, split_energy_grad, Mat32};
use crate::metric::{MetricWeights, OneFormField};
use crate::sphere::{differential, HarmonicBasis, SphericalGrid, SurfaceGrid};

/// Finite-difference scheme for path velocities.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DerivativeMode {
    #[default]
    Forward,
    Central,
}

/// One summand: `weight · ‖Σ c_k f_k‖²_{f_base}`.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Term {
    pub base: usize,
    pub velocity: Vec<(usize, f64)>,
    pub weight: f64,
}

pub(crate) fn terms(t_count: usize, mode: DerivativeMode) -> Vec<Term> {
    let dt = 1.0 / t_count as f64;
    let fwd = |i: usize| vec![(i, 1.0 / dt), (i - 1, -1.0 / dt)];
    match mode {
        DerivativeMode::Forward => (1..=t_count)
            .map(|i| Term {
                base: i - 1,
                velocity: fwd(i),
                weight: dt,
            })
            .collect(),
        DerivativeMode::Central if t_count == 1 => vec![Term {
            base: 0,
            velocity: fwd(1),
            weight: dt,
        }],
        DerivativeMode::Central => {
            let mut out = vec![Term {
                base: 0,
                velocity: fwd(1),
                weight: 0.5 * dt,
            }];
            for i in 1..t_count {
                out.push(Term {
                    base: i,
                    velocity: vec![(i + 1, 0.5 / dt), (i - 1, -0.5 / dt)],
                    weight: dt,
                });
            }
            out.push(Term {
                base: t_count,
                velocity: fwd(t_count),
                weight: 0.5 * dt,
            });
            out
        }
    }
}

/// Per-frame cotangents `∂E/∂α_i`, one matrix per grid point.
pub(crate) type FormGrads = Vec<Vec<Mat32<f64>>>;

fn velocity_form(alphas: &[OneFormField], term: &Term, p: usize) -> Mat32<f64> {
    let mut xi = [[0.0; 2]; 3];
    for &(k, c) in &term.velocity {
        let m = &alphas[k].mats()[p];
        for r in 0..3 {
            xi[r][0] += c * m[r][0];
            xi[r][1] += c * m[r][1];
        }
    }
    xi
}

fn check_frames(alphas: &[OneFormField], t: &[Term]) -> Result<()> {
    let mut bases: Vec<usize> = t.iter().map(|t| t.base).collect();
    bases.dedup();
    for b in bases {
        alphas[b].check_rank().map_err(|e| e.at_step(b))?;
    }
    Ok(())
}

/// Energy of a path given by its frame one-forms.
pub(crate) fn forms_energy(
    grid: &SphericalGrid,
    w: &MetricWeights,
    mode: DerivativeMode,
    alphas: &[OneFormField],
) -> Result<f64> {
    let t = terms(alphas.len() - 1, mode);
    check_frames(alphas, &t)?;
    let parts: Vec<f64> = t
        .par_iter()
        .map(|term| {
            let base = alphas[term.base].mats();
            let s: f64 = (0..grid.n_points())
                .map(|p| split_energy(w, &base[p], &velocity_form(alphas, term, p)) * grid.weight_at(p))
                .sum();
            term.weight * s
        })
        .collect();
    Ok(parts.iter().sum())
}

/// Energy and `∂E/∂α_i` for every frame.
pub(crate) fn forms_energy_grad(
    grid: &SphericalGrid,
    w: &MetricWeights,
    mode: DerivativeMode,
    alphas: &[OneFormField],
) -> Result<(f64, FormGrads)> {
    let t = terms(alphas.len() - 1, mode);
    check_frames(alphas, &t)?;
    let n = grid.n_points();
    let parts: Vec<(f64, Vec<Mat32<f64>>, Vec<Mat32<f64>>)> = t
        .par_iter()
        .map(|term| {
            let base = alphas[term.base].mats();
            let mut val = 0.0;
            let mut gb = vec![[[0.0; 2]; 3]; n];
            let mut gx = vec![[[0.0; 2]; 3]; n];
            for p in 0..n {
                let xi = velocity_form(alphas, term, p);
                let (e, ga, gxi) = split_energy_grad(w, &base[p], &xi);
                let s = term.weight * grid.weight_at(p);
                val += s * e;
                for r in 0..3 {
                    for j in 0..2 {
                        gb[p][r][j] = s * ga[r][j];
                        gx[p][r][j] = s * gxi[r][j];
                    }
                }
            }
            (val, gb, gx)
        })
        .collect();
    let mut grads: FormGrads = vec![vec![[[0.0; 2]; 3]; n]; alphas.len()];
    let mut total = 0.0;
    for (term, (val, gb, gx)) in t.iter().zip(parts) {
        total += val;
        add_scaled(&mut grads[term.base], &gb, 1.0);
        for &(k, c) in &term.velocity {
            add_scaled(&mut grads[k], &gx, c);
        }
    }
    Ok((total, grads))
}

pub(crate) fn add_scaled(dst: &mut [Mat32<f64>], src: &[Mat32<f64>], s: f64) {
    for (d, m) in dst.iter_mut().zip(src) {
        for r in 0..3 {
            d[r][0] += s * m[r][0];
            d[r][1] += s * m[r][1];
        }
    }
}

/// `Σ weight · ‖velocity‖`: the length of the path.
pub(crate) fn forms_length(
    grid: &SphericalGrid,
    w: &MetricWeights,
    mode: DerivativeMode,
    alphas: &[OneFormField],
) -> Result<f64> {
    let t = terms(alphas.len() - 1, mode);
    check_frames(alphas, &t)?;
    let parts: Vec<f64> = t
        .par_iter()
        .map(|term| {
            let base = alphas[term.base].mats();
            let s: f64 = (0..grid.n_points())
                .map(|p| split_energy(w, &base[p], &velocity_form(alphas, term, p)) * grid.weight_at(p))
                .sum();
            term.weight * s.max(0.0).sqrt()
        })
        .collect();
    Ok(parts.iter().sum())
}

/// `T + 1` surfaces at `t_i = i/T` with the interior coefficients that
/// produced them.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscretePath {
    frames: Vec<SurfaceGrid>,
    coeff: Vec<f64>,
    n_basis: usize,
}

impl DiscretePath {
    /// `f(t_i) = (1 − t_i) f1 + t_i f2`.
    pub fn linear(grid: &SphericalGrid, f1: &SurfaceGrid, f2: &SurfaceGrid, t_count: usize) -> Result<Self> {
        f1.check_grid(grid)?;
        f2.check_grid(grid)?;
        if t_count < 2 {
            return Err(Error::invalid("T", "need at least 2 time steps"));
        }
        let frames = (0..=t_count)
            .map(|i| SurfaceGrid::lerp(f1, f2, i as f64 / t_count as f64))
            .collect();
        Ok(DiscretePath {
            frames,
            coeff: Vec::new(),
            n_basis: 0,
        })
    }

    /// Endpoints `start`, `end`; interior frames
    /// `(1 − t_i) anchor + t_i end + Σ_j Coeff(j, i) S_j`.
    ///
    /// `coeff` holds the columns `Coeff(·, i)` for `i = 1..T−1` back to back.
    pub fn from_coefficients(
        grid: &SphericalGrid,
        basis: &HarmonicBasis,
        start: &SurfaceGrid,
        anchor: &SurfaceGrid,
        end: &SurfaceGrid,
        t_count: usize,
        coeff: &[f64],
    ) -> Result<Self> {
        for s in [start, anchor, end] {
            s.check_grid(grid)?;
        }
        if t_count < 2 {
            return Err(Error::invalid("T", "need at least 2 time steps"));
        }
        let l = basis.len();
        if coeff.len() != l * (t_count - 1) {
            return Err(Error::invalid(
                "Coeff",
                format!("expected {}x{} entries, got {}", l, t_count - 1, coeff.len()),
            ));
        }
        let mut frames = Vec::with_capacity(t_count + 1);
        frames.push(start.clone());
        for i in 1..t_count {
            let t = i as f64 / t_count as f64;
            let mut f = SurfaceGrid::lerp(anchor, end, t);
            for (x, y) in f.points_mut().iter_mut().zip(basis.combine(&coeff[(i - 1) * l..i * l])) {
                for k in 0..3 {
                    x[k] += y[k];
                }
            }
            frames.push(f);
        }
        frames.push(end.clone());
        Ok(DiscretePath {
            frames,
            coeff: coeff.to_vec(),
            n_basis: l,
        })
    }

    /// Number of intervals `T`.
    pub fn intervals(&self) -> usize {
        self.frames.len() - 1
    }

    pub fn frames(&self) -> &[SurfaceGrid] {
        &self.frames
    }

    pub fn frame(&self, i: usize) -> Result<&SurfaceGrid> {
        self.frames.get(i).ok_or(Error::Index {
            index: i,
            min: 0,
            max: self.intervals(),
        })
    }

    /// Interior coefficients, columns back to back (empty for linear paths).
    pub fn coefficients(&self) -> &[f64] {
        &self.coeff
    }

    /// `Coeff` as an `L × (T − 1)` matrix.
    pub fn coefficient_matrix(&self) -> Array2<f64> {
        let cols = self.intervals() - 1;
        if self.n_basis == 0 {
            return Array2::zeros((0, cols));
        }
        Array2::from_shape_fn((self.n_basis, cols), |(j, i)| self.coeff[i * self.n_basis + j])
    }

    /// `f_t(t_{i−1}) = (f(t_i) − f(t_{i−1})) / ΔT` for `1 ≤ i ≤ T`.
    pub fn velocity(&self, i: usize) -> Result<SurfaceGrid> {
        if i == 0 || i > self.intervals() {
            return Err(Error::Index {
                index: i,
                min: 1,
                max: self.intervals(),
            });
        }
        let t = self.intervals() as f64;
        Ok(self.frames[i].sub(&self.frames[i - 1]).scaled(t))
    }

    /// `(f(t_{i+1}) − f(t_{i−1})) / 2ΔT` for `1 ≤ i ≤ T − 1`.
    pub fn central_velocity(&self, i: usize) -> Result<SurfaceGrid> {
        if i == 0 || i >= self.intervals() {
            return Err(Error::Index {
                index: i,
                min: 1,
                max: self.intervals() - 1,
            });
        }
        let t = self.intervals() as f64;
        Ok(self.frames[i + 1].sub(&self.frames[i - 1]).scaled(0.5 * t))
    }

    /// The same frames in reverse order.
    pub fn reversed(&self) -> DiscretePath {
        let mut frames = self.frames.clone();
        frames.reverse();
        DiscretePath {
            frames,
            coeff: Vec::new(),
            n_basis: 0,
        }
    }

    /// Adds one vector to every frame.
    pub fn translated(&self, v: [f64; 3]) -> DiscretePath {
        DiscretePath {
            frames: self.frames.iter().map(|f| f.translated(v)).collect(),
            coeff: self.coeff.clone(),
            n_basis: self.n_basis,
        }
    }

    fn forms(&self, grid: &SphericalGrid) -> Result<Vec<OneFormField>> {
        for f in &self.frames {
            f.check_grid(grid)?;
        }
        Ok(self.frames.iter().map(|f| differential(grid, f)).collect())
    }

    pub fn energy(&self, grid: &SphericalGrid, w: &MetricWeights, mode: DerivativeMode) -> Result<f64> {
        forms_energy(grid, w, mode, &self.forms(grid)?)
    }

    pub fn length(&self, grid: &SphericalGrid, w: &MetricWeights, mode: DerivativeMode) -> Result<f64> {
        forms_length(grid, w, mode, &self.forms(grid)?)
    }
}

/// `f(t_i) = (1 − t_i) f1 + t_i f2`, `Coeff = 0`.
pub fn linear_path(grid: &SphericalGrid, f1: &SurfaceGrid, f2: &SurfaceGrid, t_count: usize) -> Result<DiscretePath> {
    DiscretePath::linear(grid, f1, f2, t_count)
}

/// Forward-difference energy `Σ ‖f_t(t_{i−1})‖²_{f(t_{i−1})} ΔT` (or its
/// central variant).
pub fn energy_parametrized(
    grid: &SphericalGrid,
    w: &MetricWeights,
    path: &DiscretePath,
    mode: DerivativeMode,
) -> Result<f64> {
    path.energy(grid, w, mode)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg;
    use std::f64::consts::PI;

    fn bumpy(g: &SphericalGrid, a: f64) -> SurfaceGrid {
        SurfaceGrid::from_fn(g, |t, p| {
            let r = 1.0 + a * (2.0 * t).cos() * p.sin().powi(2) + 0.1 * a * p.cos();
            linalg::scale(&linalg::frame(t, p)[0], r)
        })
    }

    #[test]
    fn term_weights_sum_to_one() {
        for mode in [DerivativeMode::Forward, DerivativeMode::Central] {
            for t in [1, 2, 5, 13] {
                let s: f64 = terms(t, mode).iter().map(|x| x.weight).sum();
                assert!((s - 1.0).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn linear_sphere_path_radii_and_velocity() {
        let g = SphericalGrid::new(8, 9).unwrap();
        let s1 = SurfaceGrid::unit_sphere(&g);
        let s2 = s1.scaled(2.0);
        let p = linear_path(&g, &s1, &s2, 4).unwrap();
        for (i, f) in p.frames().iter().enumerate() {
            let r = 1.0 + 0.25 * i as f64;
            assert!(f.max_distance(&s1.scaled(r)) < 1e-15);
        }
        for i in 1..=4 {
            let v = p.velocity(i).unwrap();
            assert!(v.max_distance(&s1) < 1e-14);
        }
        assert!(p.velocity(0).is_err() && p.velocity(5).is_err());
        assert!(matches!(linear_path(&g, &s1, &s2, 1), Err(Error::InvalidParameter { .. })));
    }

    #[test]
    fn linear_sphere_energy_is_four_pi_for_every_t() {
        let g = SphericalGrid::new(50, 99).unwrap();
        let s1 = SurfaceGrid::unit_sphere(&g);
        let s2 = s1.scaled(2.0);
        let w = MetricWeights::SRNF;
        let mut values = Vec::new();
        for t in [5, 13, 25] {
            let p = linear_path(&g, &s1, &s2, t).unwrap();
            let e = energy_parametrized(&g, &w, &p, DerivativeMode::Forward).unwrap();
            assert!((e - 4.0 * PI).abs() / (4.0 * PI) < 5e-3, "{e}");
            values.push(e);
        }
        for v in &values {
            assert!((v - values[0]).abs() < 1e-10 * values[0]);
        }
    }

    #[test]
    fn constant_path_has_zero_energy() {
        let g = SphericalGrid::new(8, 9).unwrap();
        let f = bumpy(&g, 0.2);
        let p = linear_path(&g, &f, &f, 3).unwrap();
        assert!(p.energy(&g, &MetricWeights::BASE, DerivativeMode::Forward).unwrap() < 1e-25);
    }

    #[test]
    fn central_energy_is_reversal_symmetric() {
        let g = SphericalGrid::new(12, 13).unwrap();
        let f1 = bumpy(&g, 0.1);
        let f2 = bumpy(&g, -0.2).scaled(1.3);
        let b = HarmonicBasis::new(&g, 2).unwrap();
        let coeff: Vec<f64> = (0..b.len() * 3).map(|k| 0.01 * (k as f64).sin()).collect();
        let p = DiscretePath::from_coefficients(&g, &b, &f1, &f1, &f2, 4, &coeff).unwrap();
        let w = MetricWeights::new(1.0, 0.5, 0.3, 0.2).unwrap();
        let a = p.energy(&g, &w, DerivativeMode::Central).unwrap();
        let r = p.reversed().energy(&g, &w, DerivativeMode::Central).unwrap();
        assert!((a - r).abs() <= 1e-10 * a);
        let fa = p.energy(&g, &w, DerivativeMode::Forward).unwrap();
        let fr = p.reversed().energy(&g, &w, DerivativeMode::Forward).unwrap();
        assert!((fa - fr).abs() > 1e-6 * fa);
    }

    #[test]
    fn reconstruction_identity_and_translation_invariance() {
        let g = SphericalGrid::new(10, 11).unwrap();
        let f1 = bumpy(&g, 0.1);
        let f2 = bumpy(&g, 0.3);
        let b = HarmonicBasis::new(&g, 2).unwrap();
        let coeff: Vec<f64> = (0..b.len() * 2).map(|k| 0.02 * (k as f64).cos()).collect();
        let p = DiscretePath::from_coefficients(&g, &b, &f1, &f1, &f2, 3, &coeff).unwrap();
        assert_eq!(p.frame(0).unwrap(), &f1);
        assert_eq!(p.frame(3).unwrap(), &f2);
        let mut expect = SurfaceGrid::lerp(&f1, &f2, 2.0 / 3.0);
        for j in 0..b.len() {
            expect.axpy(coeff[b.len() + j], &b.element(&g, j));
        }
        assert!(p.frame(2).unwrap().max_distance(&expect) < 1e-13);
        assert_eq!(p.coefficient_matrix().dim(), (b.len(), 2));
        let w = MetricWeights::new(1.0, 1.0, 1.0, 1.0).unwrap();
        let e0 = p.energy(&g, &w, DerivativeMode::Forward).unwrap();
        let e1 = p.translated([3.0, -1.0, 2.0]).energy(&g, &w, DerivativeMode::Forward).unwrap();
        assert!((e0 - e1).abs() <= 1e-12 * e0);
    }

    #[test]
    fn forward_and_central_differ_at_first_order() {
        // stretching the x axis by 1 + t² on a coarse grid: the forward sum
        // measures each velocity at the left frame, so it is off by O(ΔT)
        let g = SphericalGrid::new(8, 9).unwrap();
        let s = SurfaceGrid::unit_sphere(&g);
        let gap = |t: usize| {
            let frames: Vec<SurfaceGrid> = (0..=t)
                .map(|i| {
                    let x = i as f64 / t as f64;
                    s.map(|p| [(1.0 + x * x) * p[0], p[1], p[2]])
                })
                .collect();
            let p = DiscretePath {
                frames,
                coeff: Vec::new(),
                n_basis: 0,
            };
            let w = MetricWeights::new(1.0, 1.0, 1.0, 1.0).unwrap();
            (p.energy(&g, &w, DerivativeMode::Forward).unwrap() - p.energy(&g, &w, DerivativeMode::Central).unwrap())
                .abs()
        };
        let r = gap(10) / gap(20);
        assert!(r > 1.7 && r < 2.3, "{r}");
    }

    #[test]
    fn rank_failure_names_the_step() {
        let g = SphericalGrid::new(8, 9).unwrap();
        let f1 = SurfaceGrid::unit_sphere(&g);
        let f2 = f1.scaled(-1.0);
        // the midpoint of x ↦ −x collapses to a point
        let p = linear_path(&g, &f1, &f2, 2).unwrap();
        match p.energy(&g, &MetricWeights::SRNF, DerivativeMode::Central) {
            Err(Error::RankDeficient { step: Some(1), .. }) => {}
            other => panic!("{other:?}"),
        }
    }
}
