use serde::{Deserialize, Serialize};

use super::{det_algebraic, displaced, DiffeoCoefficients, Interpolation, SphereMap, SurfaceInterpolant};
use crate::error::{Error, Result};
use crate::linalg::{self, Vec3};
use crate::sphere::{raw_field_jet, SphericalGrid, SurfaceGrid, VectorFieldBasis};

/// One factor of a [`ComposedMap`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum MapStep {
    /// `x ↦ R x` (row-major `R`).
    Rotation { matrix: [[f64; 3]; 3] },
    /// `Proj(Id + tU)` with `U` given by grid-independent raw coefficients.
    Field { deg_bar: usize, raw: Vec<f64>, t: f64 },
}

impl MapStep {
    /// Image of `x` and the local area factor of this step at `x`.
    pub fn apply(&self, x: &Vec3) -> Option<(Vec3, f64)> {
        match self {
            MapStep::Rotation { matrix } => Some((linalg::mat_vec(matrix, x), 1.0)),
            MapStep::Field { deg_bar, raw, t } => {
                let (th, ph) = linalg::angles(x);
                let fr = linalg::frame(th, ph);
                let j = raw_field_jet(*deg_bar, raw, th, ph);
                let w = displaced(&fr, &j, *t);
                let n = linalg::norm(&w);
                if !(n >= 1e-9) {
                    return None;
                }
                let (s, c) = ph.sin_cos();
                let jac = det_algebraic(&j, s, c, *t) / (n * n * n);
                Some((linalg::scale(&w, 1.0 / n), jac))
            }
        }
    }
}

/// `γ = s₁ ∘ s₂ ∘ … ∘ s_k`, evaluated exactly (no resampling between
/// steps). New steps are appended on the right, i.e. applied first.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ComposedMap {
    steps: Vec<MapStep>,
}

impl ComposedMap {
    pub fn identity() -> Self {
        Self::default()
    }

    pub fn is_identity(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn steps(&self) -> &[MapStep] {
        &self.steps
    }

    pub fn push(&mut self, step: MapStep) {
        self.steps.push(step);
    }

    pub fn push_rotation(&mut self, matrix: [[f64; 3]; 3]) {
        self.steps.push(MapStep::Rotation { matrix });
    }

    /// Appends `Proj(Id + tU)`; zero fields and `t = 0` are skipped.
    pub fn push_field(&mut self, basis: &VectorFieldBasis, coeffs: &DiffeoCoefficients, t: f64) {
        if t == 0.0 || coeffs.is_zero() {
            return;
        }
        self.steps.push(MapStep::Field {
            deg_bar: basis.deg_bar(),
            raw: basis.raw_coefficients(coeffs.values()),
            t,
        });
    }

    /// `γ(x)` and the area factor (product of the per-step factors).
    pub fn apply(&self, x: &Vec3) -> Option<(Vec3, f64)> {
        let mut y = *x;
        let mut jac = 1.0;
        for s in self.steps.iter().rev() {
            let (z, j) = s.apply(&y)?;
            y = z;
            jac *= j;
        }
        Some((y, jac))
    }

    fn eval_grid(&self, grid: &SphericalGrid) -> Result<Vec<(Vec3, f64)>> {
        use rayon::prelude::*;
        (0..grid.n_points())
            .into_par_iter()
            .map(|p| {
                self.apply(&grid.unit_point(p)).ok_or_else(|| {
                    let (row, col) = grid.row_col(p);
                    Error::ZeroVector { row, col }
                })
            })
            .collect()
    }

    /// The map sampled at the grid points.
    pub fn to_map(&self, grid: &SphericalGrid) -> Result<SphereMap> {
        if self.is_identity() {
            return Ok(SphereMap::identity(grid));
        }
        let pts = self.eval_grid(grid)?.into_iter().map(|(y, _)| y).collect();
        SphereMap::from_points(grid, pts)
    }

    /// Area factor of the composition at every grid point.
    pub fn jacobian(&self, grid: &SphericalGrid) -> Result<Vec<f64>> {
        Ok(self.eval_grid(grid)?.into_iter().map(|(_, j)| j).collect())
    }

    /// `f∘γ`, interpolating `f` once.
    pub fn resample(&self, grid: &SphericalGrid, f: &SurfaceGrid, method: Interpolation) -> Result<SurfaceGrid> {
        f.check_grid(grid)?;
        if self.is_identity() {
            return Ok(f.clone());
        }
        let interp = SurfaceInterpolant::new(grid, f, method);
        Ok(super::resample_interpolant(grid, &interp, &self.to_map(grid)?))
    }
}
