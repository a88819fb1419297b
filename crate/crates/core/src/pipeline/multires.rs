use serde::{Deserialize, Serialize};

use super::{MatchConfig, MatchMode, MatchResult, Matcher};
use crate::diffeo::{Interpolation, SurfaceInterpolant};
use crate::energy::RotationParams;
use crate::error::{Error, Result};
use crate::metric::MetricWeights;
use crate::sphere::{SphericalGrid, SurfaceGrid};

/// One stage of a coarse-to-fine schedule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Level {
    pub n_theta: usize,
    pub n_phi: usize,
    pub deg: usize,
    pub deg_bar: usize,
    pub t_count: usize,
}

/// Samples `f` (given on `src`) at the points of `dst`.
pub fn resample_to_grid(
    src: &SphericalGrid,
    f: &SurfaceGrid,
    dst: &SphericalGrid,
    method: Interpolation,
) -> Result<SurfaceGrid> {
    f.check_grid(src)?;
    if src == dst {
        return Ok(f.clone());
    }
    let interp = SurfaceInterpolant::new(src, f, method);
    let pts = (0..dst.n_points())
        .map(|p| {
            let (row, col) = dst.row_col(p);
            interp.eval(dst.theta()[col], dst.phi()[row])
        })
        .collect();
    SurfaceGrid::new(dst, pts)
}

/// Carries a `Coeff` block to a new basis size and time resolution: columns
/// are interpolated linearly in time (with zero columns at `t = 0, 1`) and
/// basis indices present in both bases are copied.
fn upsample_coeff(coeff: &[f64], l_old: usize, t_old: usize, l_new: usize, t_new: usize) -> Vec<f64> {
    let col = |i: usize| -> Vec<f64> {
        if i == 0 || i >= t_old {
            vec![0.0; l_old]
        } else {
            coeff[(i - 1) * l_old..i * l_old].to_vec()
        }
    };
    let mut out = vec![0.0; l_new * (t_new - 1)];
    for i in 1..t_new {
        let s = i as f64 / t_new as f64 * t_old as f64;
        let k = (s.floor() as usize).min(t_old - 1);
        let a = s - k as f64;
        let (c0, c1) = (col(k), col(k + 1));
        for j in 0..l_old.min(l_new) {
            out[(i - 1) * l_new + j] = (1.0 - a) * c0[j] + a * c1[j];
        }
    }
    out
}

/// Runs `mode` on each level in turn, warm-starting every level from the
/// previous one's reparametrization, rotation and coefficients. Returns the
/// result of the finest level along with its grid and the results of all
/// levels.
pub fn multires_match(
    w: MetricWeights,
    src_grid: &SphericalGrid,
    f1: &SurfaceGrid,
    f2: &SurfaceGrid,
    mode: MatchMode,
    base: &MatchConfig,
    levels: &[Level],
) -> Result<(SphericalGrid, Vec<MatchResult>)> {
    if levels.is_empty() {
        return Err(Error::invalid("levels", "need at least one level"));
    }
    let mut results: Vec<MatchResult> = Vec::with_capacity(levels.len());
    let mut prev: Option<(usize, usize)> = None;
    let mut grid = src_grid.clone();
    for lev in levels {
        grid = SphericalGrid::new(lev.n_theta, lev.n_phi)?;
        let cfg = MatchConfig {
            t_count: lev.t_count,
            deg: lev.deg,
            deg_bar: lev.deg_bar,
            ..base.clone()
        };
        let a = resample_to_grid(src_grid, f1, &grid, base.interpolation)?;
        let b = resample_to_grid(src_grid, f2, &grid, base.interpolation)?;
        let m = Matcher::new(&grid, w, cfg)?;
        let res = match (results.last(), prev) {
            (Some(r), Some((l_old, t_old))) => {
                let coeff = upsample_coeff(
                    r.geodesic.coefficients(),
                    l_old,
                    t_old,
                    m.surface_basis().len(),
                    lev.t_count,
                );
                let rot: RotationParams = r.rotation;
                m.run_from(mode, &a, &b, Some((&r.gamma_total, &rot, &coeff)))?
            }
            _ => m.run(mode, &a, &b)?,
        };
        prev = Some((m.surface_basis().len(), lev.t_count));
        results.push(res);
    }
    Ok((grid, results))
}
