//! Matching algorithms built on the path functionals.
//!
//! All four modes share one [`Matcher`], which owns the surface and vector
//! field bases for a grid:
//!
//! - [`MatchMode::Param`]: minimize the path energy over the interior
//!   coefficients with both endpoints fixed.
//! - [`MatchMode::Joint`]: `N` outer rounds, each minimizing jointly over a
//!   small reparametrization of the source and the interior coefficients,
//!   then composing the reparametrization into the source.
//! - [`MatchMode::Cd`]: alternate a parametrized solve with a minimization of
//!   the first-step mismatch over the reparametrization.
//! - [`MatchMode::Rigid`]: the joint scheme with an additional rotation of
//!   the target.
//!
//! Every outer round clips the reparametrization step to a fraction of its
//! certified bound and is only accepted if the recomputed energy does not
//! increase, so the outer energies are nonincreasing.

mod compare;
mod init;
mod mean;
mod multires;

pub use compare::{srnf_comparison, ComparisonRow, ComparisonTable};
pub use init::{icosahedral_rotations, initialize_reparam, initialize_rotation, rotation_log, RotationInit};
pub use mean::{karcher_mean, MeanConfig, MeanResult};
pub use multires::{multires_match, resample_to_grid, Level};

use std::fmt;
use std::str::FromStr;

use log::{debug, info};
use serde::{Deserialize, Serialize};

use crate::diffeo::{step_bound, ComposedMap, DiffeoCoefficients, Interpolation};
use crate::energy::{Anchor, DerivativeMode, DiscretePath, PathFunctional, ReparamFunctional, RotationParams};
use crate::error::{Error, Result};
use crate::metric::MetricWeights;
use crate::optim::{minimize, Objective, OptimizeReport, OptimizerConfig};
use crate::sphere::{HarmonicBasis, SphericalGrid, SurfaceGrid, VectorFieldBasis};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MatchMode {
    #[default]
    Param,
    Joint,
    Cd,
    Rigid,
}

impl fmt::Display for MatchMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MatchMode::Param => "param",
            MatchMode::Joint => "joint",
            MatchMode::Cd => "cd",
            MatchMode::Rigid => "rigid",
        })
    }
}

impl FromStr for MatchMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "param" => Ok(MatchMode::Param),
            "joint" => Ok(MatchMode::Joint),
            "cd" => Ok(MatchMode::Cd),
            "rigid" => Ok(MatchMode::Rigid),
            other => Err(Error::Parse {
                key: "mode".into(),
                message: format!("unknown mode `{other}` (expected param, joint, cd or rigid)"),
            }),
        }
    }
}

/// What the interior frames interpolate from once the source has been
/// reparametrized.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InteriorAnchor {
    /// The original, unreparametrized source `f1`.
    #[default]
    Original,
    /// The current reparametrized source.
    Current,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MatchConfig {
    /// Number of time intervals `T`.
    pub t_count: usize,
    /// Maximal harmonic degree of the surface basis.
    pub deg: usize,
    /// Maximal harmonic degree of the vector-field basis.
    pub deg_bar: usize,
    /// Number of outer rounds `N`.
    pub outer: usize,
    pub derivative: DerivativeMode,
    pub interpolation: Interpolation,
    pub anchor: InteriorAnchor,
    /// Reparametrization steps are clipped to this fraction of the bound.
    pub step_fraction: f64,
    /// Start the reparametrization (or rotation) from the best icosahedral
    /// element when `N > 0`.
    pub init: bool,
    pub optimizer: OptimizerConfig,
}

impl Default for MatchConfig {
    fn default() -> Self {
        MatchConfig {
            t_count: 5,
            deg: 5,
            deg_bar: 5,
            outer: 5,
            derivative: DerivativeMode::Forward,
            interpolation: Interpolation::Spectral,
            anchor: InteriorAnchor::Original,
            step_fraction: 0.9,
            init: true,
            optimizer: OptimizerConfig::default(),
        }
    }
}

impl MatchConfig {
    pub fn validate(&self) -> Result<()> {
        if self.t_count < 2 {
            return Err(Error::invalid("T", "need at least 2 time steps"));
        }
        if self.deg == 0 {
            return Err(Error::invalid("deg", "must be at least 1"));
        }
        if self.deg_bar == 0 {
            return Err(Error::invalid("deg_bar", "must be at least 1"));
        }
        if !(self.step_fraction > 0.0 && self.step_fraction < 1.0) {
            return Err(Error::invalid("step_fraction", "must lie in (0, 1)"));
        }
        Ok(())
    }
}

/// Output of a matching run.
#[derive(Debug, Clone, PartialEq)]
pub struct MatchResult {
    pub mode: MatchMode,
    pub geodesic: DiscretePath,
    /// `√energy`.
    pub distance: f64,
    pub energy: f64,
    /// `Σ ‖f_t‖ ΔT` along the geodesic.
    pub length: f64,
    /// The reparametrization applied to the source: `geodesic(0) = f1∘γ`.
    pub gamma_total: ComposedMap,
    /// The rotation applied to the target: `geodesic(T) = R f2`.
    pub rotation: RotationParams,
    /// Every inner optimization, in order.
    pub reports: Vec<OptimizeReport>,
    /// Energy after each accepted outer round, starting with the initial one.
    pub outer_energies: Vec<f64>,
    /// Whether the final inner optimization met its tolerance.
    pub converged: bool,
    /// The interior frames of `geodesic` are offsets from the segment
    /// between `geodesic(0)` and `geodesic(T)` rather than from the
    /// configured anchor.
    pub start_anchored: bool,
    /// Index of the icosahedral initialization, if one was used.
    pub init_index: Option<usize>,
}

/// Bases and settings for matching surfaces on one grid.
pub struct Matcher<'g> {
    grid: &'g SphericalGrid,
    w: MetricWeights,
    cfg: MatchConfig,
    hb: HarmonicBasis,
    vb: VectorFieldBasis,
}

#[derive(Clone)]
struct State {
    gamma: ComposedMap,
    fbar: SurfaceGrid,
    rotation: RotationParams,
    coeff: Vec<f64>,
    energy: f64,
    /// Interior frames are offsets from the segment between `fbar` and the
    /// target instead of the configured anchor.
    at_start: bool,
}

impl<'g> Matcher<'g> {
    pub fn new(grid: &'g SphericalGrid, w: MetricWeights, cfg: MatchConfig) -> Result<Self> {
        cfg.validate()?;
        Ok(Matcher {
            grid,
            w,
            hb: HarmonicBasis::new(grid, cfg.deg)?,
            vb: VectorFieldBasis::new(grid, cfg.deg_bar)?,
            cfg,
        })
    }

    pub fn grid(&self) -> &SphericalGrid {
        self.grid
    }

    pub fn config(&self) -> &MatchConfig {
        &self.cfg
    }

    pub fn weights(&self) -> MetricWeights {
        self.w
    }

    pub fn surface_basis(&self) -> &HarmonicBasis {
        &self.hb
    }

    pub fn field_basis(&self) -> &VectorFieldBasis {
        &self.vb
    }

    pub fn run(&self, mode: MatchMode, f1: &SurfaceGrid, f2: &SurfaceGrid) -> Result<MatchResult> {
        self.run_from(mode, f1, f2, None)
    }

    /// As [`run`](Self::run), optionally warm-started from a previous
    /// reparametrization, rotation and coefficient block.
    pub fn run_from(
        &self,
        mode: MatchMode,
        f1: &SurfaceGrid,
        f2: &SurfaceGrid,
        warm: Option<(&ComposedMap, &RotationParams, &[f64])>,
    ) -> Result<MatchResult> {
        f1.check_grid(self.grid)?;
        f2.check_grid(self.grid)?;
        info!("matching in {mode} mode, T = {}, N = {}", self.cfg.t_count, self.cfg.outer);
        match mode {
            MatchMode::Param => self.parametrized(f1, f2, warm),
            MatchMode::Joint | MatchMode::Rigid => self.joint(mode, f1, f2, warm),
            MatchMode::Cd => self.coordinate_descent(f1, f2, warm),
        }
    }

    fn anchor(&self, f1: &SurfaceGrid) -> Anchor {
        match self.cfg.anchor {
            InteriorAnchor::Original => Anchor::Surface(f1.clone()),
            InteriorAnchor::Current => Anchor::Start,
        }
    }

    fn functional(&self, fbar: &SurfaceGrid, f1: &SurfaceGrid, f2: &SurfaceGrid) -> Result<PathFunctional<'_>> {
        PathFunctional::new(self.grid, &self.hb, self.w, self.cfg.t_count, fbar, f2)?
            .mode(self.cfg.derivative)
            .anchor(self.anchor(f1))
    }

    fn state_functional(&self, st: &State, f1: &SurfaceGrid, end: &SurfaceGrid) -> Result<PathFunctional<'_>> {
        if st.at_start {
            PathFunctional::new(self.grid, &self.hb, self.w, self.cfg.t_count, &st.fbar, end)?
                .mode(self.cfg.derivative)
                .anchor(Anchor::Start)
        } else {
            self.functional(&st.fbar, f1, end)
        }
    }

    fn zero_coeff(&self) -> Vec<f64> {
        vec![0.0; self.hb.len() * (self.cfg.t_count - 1)]
    }

    fn initial_state(
        &self,
        mode: MatchMode,
        f1: &SurfaceGrid,
        f2: &SurfaceGrid,
        warm: Option<(&ComposedMap, &RotationParams, &[f64])>,
        init_index: &mut Option<usize>,
    ) -> Result<State> {
        let (mut gamma, mut rotation, coeff) = match warm {
            Some((g, r, c)) => (g.clone(), *r, c.to_vec()),
            None => (ComposedMap::identity(), RotationParams::identity(), self.zero_coeff()),
        };
        if coeff.len() != self.hb.len() * (self.cfg.t_count - 1) {
            return Err(Error::invalid("Coeff", "warm start has the wrong length"));
        }
        if warm.is_none() && self.cfg.init && self.cfg.outer > 0 {
            match mode {
                MatchMode::Rigid => {
                    let init = initialize_rotation(self.grid, f1, f2)?;
                    rotation = RotationParams::new(rotation_log(&init.matrix));
                    *init_index = Some(init.index);
                }
                MatchMode::Joint | MatchMode::Cd => {
                    let init = initialize_reparam(self.grid, f1, f2, self.cfg.interpolation)?;
                    gamma = init.to_map();
                    *init_index = Some(init.index);
                }
                MatchMode::Param => {}
            }
        }
        let fbar = gamma.resample(self.grid, f1, self.cfg.interpolation)?;
        let mut st = State {
            gamma,
            fbar,
            rotation,
            coeff,
            energy: 0.0,
            at_start: false,
        };
        st.energy = self.state_energy(&st, f1, f2)?;
        if warm.is_some() && !st.gamma.is_identity() {
            // warm coefficients may come from a registered-start solve
            let mut alt = State { at_start: true, ..st.clone() };
            if let Ok(e) = self.state_energy(&alt, f1, f2) {
                if e < st.energy {
                    alt.energy = e;
                    st = alt;
                }
            }
        }
        if init_index.is_some() {
            // keep the initialization only if it beats the identity
            let mut plain = State {
                gamma: ComposedMap::identity(),
                fbar: f1.clone(),
                rotation: RotationParams::identity(),
                coeff: st.coeff.clone(),
                energy: 0.0,
                at_start: false,
            };
            plain.energy = self.state_energy(&plain, f1, f2)?;
            if plain.energy <= st.energy {
                *init_index = Some(0);
                return Ok(plain);
            }
        }
        Ok(st)
    }

    fn end_surface(&self, f2: &SurfaceGrid, r: &RotationParams) -> SurfaceGrid {
        if r.r == [0.0; 3] {
            f2.clone()
        } else {
            f2.transformed(&r.matrix())
        }
    }

    fn state_energy(&self, st: &State, f1: &SurfaceGrid, f2: &SurfaceGrid) -> Result<f64> {
        let end = self.end_surface(f2, &st.rotation);
        self.state_functional(st, f1, &end)?.energy(&st.coeff)
    }

    fn param_solve(&self, st: &mut State, f1: &SurfaceGrid, f2: &SurfaceGrid, reports: &mut Vec<OptimizeReport>) -> Result<()> {
        let end = self.end_surface(f2, &st.rotation);
        let f = self.state_functional(st, f1, &end)?;
        let rep = minimize(&f, &st.coeff, &self.cfg.optimizer);
        debug!("parametrized solve: {} iterations, E = {:e}", rep.iterations, rep.f);
        if rep.f <= st.energy {
            st.coeff = rep.x.clone();
            st.energy = rep.f;
        }
        reports.push(rep);
        Ok(())
    }

    /// Solves the parametrized problem between the registered start and the
    /// target from the straight segment joining them, keeping it if it
    /// lowers the energy.
    fn polish(&self, st: &mut State, f2: &SurfaceGrid, reports: &mut Vec<OptimizeReport>) -> Result<()> {
        if st.at_start || self.cfg.anchor == InteriorAnchor::Current || st.gamma.is_identity() {
            return Ok(());
        }
        let end = self.end_surface(f2, &st.rotation);
        let f = PathFunctional::new(self.grid, &self.hb, self.w, self.cfg.t_count, &st.fbar, &end)?
            .mode(self.cfg.derivative)
            .anchor(Anchor::Start)?;
        let rep = minimize(&f, &self.zero_coeff(), &self.cfg.optimizer);
        debug!("registered-start solve: {} iterations, E = {:e}", rep.iterations, rep.f);
        if rep.f < st.energy {
            st.coeff = rep.x.clone();
            st.energy = rep.f;
            st.at_start = true;
        }
        reports.push(rep);
        Ok(())
    }

    /// Tries `γ ∘ Proj(Id + tU)` for decreasing `t`, keeping the first
    /// candidate whose recomputed energy does not exceed the current one.
    fn accept(
        &self,
        st: &mut State,
        f1: &SurfaceGrid,
        f2: &SurfaceGrid,
        xv: &[f64],
        rotation: RotationParams,
        coeff: &[f64],
    ) -> Result<bool> {
        let c = DiffeoCoefficients::new(&self.vb, xv.to_vec())?;
        let bound = step_bound(self.grid, &self.vb, &c);
        let t0 = (self.cfg.step_fraction * bound).min(1.0);
        for t in [t0, 0.5 * t0, 0.25 * t0, 0.0] {
            let mut gamma = st.gamma.clone();
            gamma.push_field(&self.vb, &c, t);
            let fbar = if t == 0.0 {
                st.fbar.clone()
            } else {
                match gamma.resample(self.grid, f1, self.cfg.interpolation) {
                    Ok(s) => s,
                    Err(_) => continue,
                }
            };
            let cand = State {
                gamma,
                fbar,
                rotation,
                coeff: coeff.to_vec(),
                energy: 0.0,
                at_start: st.at_start,
            };
            let Ok(e) = self.state_energy(&cand, f1, f2) else {
                continue;
            };
            if e <= st.energy {
                debug!("accepted step t = {t:.4} (bound {bound:.4}), E = {e:e}");
                *st = State { energy: e, ..cand };
                return Ok(t > 0.0);
            }
        }
        Ok(false)
    }

    fn finish(
        &self,
        mode: MatchMode,
        st: State,
        f1: &SurfaceGrid,
        f2: &SurfaceGrid,
        reports: Vec<OptimizeReport>,
        outer_energies: Vec<f64>,
        init_index: Option<usize>,
    ) -> Result<MatchResult> {
        let end = self.end_surface(f2, &st.rotation);
        let f = self.state_functional(&st, f1, &end)?;
        let geodesic = f.path(&st.coeff)?;
        let energy = f.energy(&st.coeff)?;
        let length = geodesic.length(self.grid, &self.w, self.cfg.derivative)?;
        let converged = reports.last().is_none_or(|r| r.converged);
        info!("{mode}: distance {:.6}, {} inner solves", energy.sqrt(), reports.len());
        Ok(MatchResult {
            mode,
            geodesic,
            distance: energy.max(0.0).sqrt(),
            energy,
            length,
            gamma_total: st.gamma,
            rotation: st.rotation,
            reports,
            outer_energies,
            converged,
            start_anchored: st.at_start,
            init_index,
        })
    }

    fn parametrized(
        &self,
        f1: &SurfaceGrid,
        f2: &SurfaceGrid,
        warm: Option<(&ComposedMap, &RotationParams, &[f64])>,
    ) -> Result<MatchResult> {
        let mut idx = None;
        let mut st = self.initial_state(MatchMode::Param, f1, f2, warm, &mut idx)?;
        let mut reports = Vec::new();
        let mut energies = vec![st.energy];
        self.param_solve(&mut st, f1, f2, &mut reports)?;
        energies.push(st.energy);
        self.finish(MatchMode::Param, st, f1, f2, reports, energies, idx)
    }

    fn joint(
        &self,
        mode: MatchMode,
        f1: &SurfaceGrid,
        f2: &SurfaceGrid,
        warm: Option<(&ComposedMap, &RotationParams, &[f64])>,
    ) -> Result<MatchResult> {
        let mut idx = None;
        let mut st = self.initial_state(mode, f1, f2, warm, &mut idx)?;
        let mut reports = Vec::new();
        let mut energies = vec![st.energy];
        let rigid = mode == MatchMode::Rigid;
        if self.cfg.outer == 0 {
            self.param_solve(&mut st, f1, f2, &mut reports)?;
            energies.push(st.energy);
        }
        for k in 0..self.cfg.outer {
            let mut f = self
                .functional(&st.fbar, f1, f2)?
                .reparametrize(&self.vb, self.cfg.interpolation);
            if rigid {
                f = f.rigid();
            }
            let x0 = f.join(&st.rotation, &vec![0.0; self.vb.len()], &st.coeff);
            let rep = minimize(&f, &x0, &self.cfg.optimizer);
            let p = f.split(&rep.x);
            let (xv, coeff, rot) = (p.xv.to_vec(), p.coeff.to_vec(), p.rotation);
            reports.push(rep);
            let before = st.energy;
            let moved = self.accept(&mut st, f1, f2, &xv, rot, &coeff)?;
            energies.push(st.energy);
            debug!("outer round {k}: E {before:e} -> {:e}", st.energy);
            if !moved || before - st.energy <= 1e-10 * before.max(f64::MIN_POSITIVE) {
                break;
            }
        }
        if self.cfg.outer > 0 {
            // the accepted step may be clipped; re-solve the path for it
            self.param_solve(&mut st, f1, f2, &mut reports)?;
            self.polish(&mut st, f2, &mut reports)?;
            energies.push(st.energy);
        }
        self.finish(mode, st, f1, f2, reports, energies, idx)
    }

    fn coordinate_descent(
        &self,
        f1: &SurfaceGrid,
        f2: &SurfaceGrid,
        warm: Option<(&ComposedMap, &RotationParams, &[f64])>,
    ) -> Result<MatchResult> {
        let mut idx = None;
        let mut st = self.initial_state(MatchMode::Cd, f1, f2, warm, &mut idx)?;
        let mut reports = Vec::new();
        let mut energies = vec![st.energy];
        self.param_solve(&mut st, f1, f2, &mut reports)?;
        energies.push(st.energy);
        for k in 0..self.cfg.outer {
            let end = self.end_surface(f2, &st.rotation);
            let next = self.state_functional(&st, f1, &end)?.path(&st.coeff)?.frame(1)?.clone();
            let fr = ReparamFunctional::new(self.grid, &self.vb, self.w, &st.fbar, &next, self.cfg.interpolation)?;
            let rep = minimize(&fr, &vec![0.0; fr.dim()], &self.cfg.optimizer);
            let xv = rep.x.clone();
            reports.push(rep);
            let before = st.energy;
            let coeff = st.coeff.clone();
            let rotation = st.rotation;
            let moved = self.accept(&mut st, f1, f2, &xv, rotation, &coeff)?;
            if !moved {
                break;
            }
            self.param_solve(&mut st, f1, f2, &mut reports)?;
            energies.push(st.energy);
            debug!("outer round {k}: E {before:e} -> {:e}", st.energy);
            if before - st.energy <= 1e-10 * before.max(f64::MIN_POSITIVE) {
                break;
            }
        }
        if self.cfg.outer > 0 {
            self.polish(&mut st, f2, &mut reports)?;
            energies.push(st.energy);
        }
        self.finish(MatchMode::Cd, st, f1, f2, reports, energies, idx)
    }
}

/// Parametrized matching with default settings apart from `T` and `deg`.
pub fn match_parametrized(
    grid: &SphericalGrid,
    w: MetricWeights,
    f1: &SurfaceGrid,
    f2: &SurfaceGrid,
    t_count: usize,
    deg: usize,
) -> Result<MatchResult> {
    let cfg = MatchConfig {
        t_count,
        deg,
        deg_bar: 1,
        outer: 0,
        ..MatchConfig::default()
    };
    Matcher::new(grid, w, cfg)?.run(MatchMode::Param, f1, f2)
}

/// Joint optimization over reparametrization and path.
pub fn match_unparametrized_joint(
    grid: &SphericalGrid,
    w: MetricWeights,
    f1: &SurfaceGrid,
    f2: &SurfaceGrid,
    cfg: MatchConfig,
) -> Result<MatchResult> {
    Matcher::new(grid, w, cfg)?.run(MatchMode::Joint, f1, f2)
}

/// Coordinate descent between path and reparametrization.
pub fn match_unparametrized_cd(
    grid: &SphericalGrid,
    w: MetricWeights,
    f1: &SurfaceGrid,
    f2: &SurfaceGrid,
    cfg: MatchConfig,
) -> Result<MatchResult> {
    Matcher::new(grid, w, cfg)?.run(MatchMode::Cd, f1, f2)
}

/// Joint optimization including a rotation of the target.
pub fn match_mod_rigid(
    grid: &SphericalGrid,
    w: MetricWeights,
    f1: &SurfaceGrid,
    f2: &SurfaceGrid,
    cfg: MatchConfig,
) -> Result<MatchResult> {
    Matcher::new(grid, w, cfg)?.run(MatchMode::Rigid, f1, f2)
}

#[cfg(test)]
mod tests;
