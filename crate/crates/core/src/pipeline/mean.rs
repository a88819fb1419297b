use log::info;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{MatchConfig, MatchMode, Matcher};
use crate::energy::transpose;
use crate::error::{Error, Result};
use crate::metric::MetricWeights;
use crate::sphere::{SphericalGrid, SurfaceGrid};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MeanConfig {
    /// How each sample is matched to the current mean.
    pub mode: MatchMode,
    pub matching: MatchConfig,
    pub max_iter: usize,
    /// Stop once the `L²` norm of the update falls below this.
    pub tol: f64,
    /// Initial step along the averaged velocity.
    pub step: f64,
}

impl Default for MeanConfig {
    fn default() -> Self {
        MeanConfig {
            mode: MatchMode::Param,
            matching: MatchConfig::default(),
            max_iter: 20,
            tol: 1e-6,
            step: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MeanResult {
    pub mean: SurfaceGrid,
    /// Distance from each sample to `mean`.
    pub distances: Vec<f64>,
    /// Number of mean evaluations performed.
    pub iterations: usize,
    /// `Σ d_k²` at every evaluated iterate.
    pub history: Vec<f64>,
    /// Norm of every update taken.
    pub updates: Vec<f64>,
    pub converged: bool,
}

/// Fixed-point iteration for the Karcher mean.
///
/// Each sample is matched to the current mean `μ` (the sample is the source,
/// so any reparametrization acts on it and `μ` keeps its parametrization).
/// The velocity of each geodesic at `μ`, pointing towards the sample, is
/// averaged and `μ` moves by `step` times the average. If the sum of squared
/// distances grows, the step is halved and the move is retried from the best
/// iterate. The best iterate is returned.
pub fn karcher_mean(
    grid: &SphericalGrid,
    w: MetricWeights,
    samples: &[SurfaceGrid],
    cfg: &MeanConfig,
) -> Result<MeanResult> {
    if samples.len() < 2 {
        return Err(Error::invalid("samples", "need at least two surfaces"));
    }
    if !(cfg.step > 0.0) || !(cfg.tol >= 0.0) {
        return Err(Error::invalid("step", "step must be positive and tol nonnegative"));
    }
    for s in samples {
        s.check_grid(grid)?;
    }
    let matcher = Matcher::new(grid, w, cfg.matching.clone())?;
    let t = cfg.matching.t_count as f64;
    let mut mu = samples[0].clone();
    let mut step = cfg.step;
    let mut best: Option<(SurfaceGrid, f64, Vec<f64>, SurfaceGrid)> = None;
    let mut history = Vec::new();
    let mut updates = Vec::new();
    let mut converged = false;
    let mut iterations = 0;
    while iterations < cfg.max_iter {
        iterations += 1;
        let matches: Vec<Result<(f64, SurfaceGrid)>> = samples
            .par_iter()
            .map(|f| {
                let m = matcher.run(cfg.mode, f, &mu)?;
                let frames = m.geodesic.frames();
                let n = frames.len();
                // velocity at the mean pointing back along the geodesic
                let mut v = frames[n - 2].sub(&frames[n - 1]).scaled(t);
                if m.rotation.r != [0.0; 3] {
                    v = v.transformed(&transpose(&m.rotation.matrix()));
                }
                Ok((m.distance, v))
            })
            .collect();
        let mut dists = Vec::with_capacity(samples.len());
        let mut avg = SurfaceGrid::zeros(grid);
        for r in matches {
            let (d, v) = r?;
            dists.push(d);
            avg.axpy(1.0 / samples.len() as f64, &v);
        }
        let sumsq: f64 = dists.iter().map(|d| d * d).sum();
        history.push(sumsq);
        info!("mean iteration {iterations}: Σd² = {sumsq:.6e}");
        if let Some((prev_mu, prev_sum, _, prev_avg)) = &best {
            if sumsq > *prev_sum {
                step *= 0.5;
                let upd = prev_avg.scaled(step);
                updates.push(SurfaceGrid::inner(grid, &upd, &upd).sqrt());
                mu = prev_mu.add(&upd);
                continue;
            }
        }
        let upd = avg.scaled(step);
        let norm = SurfaceGrid::inner(grid, &upd, &upd).sqrt();
        best = Some((mu.clone(), sumsq, dists, avg));
        if norm <= cfg.tol {
            converged = true;
            break;
        }
        updates.push(norm);
        mu = mu.add(&upd);
    }
    let (mean, _, distances, _) = best.ok_or_else(|| Error::invalid("max_iter", "must be at least 1"))?;
    Ok(MeanResult {
        mean,
        distances,
        iterations,
        history,
        updates,
        converged,
    })
}
