//! Files in and out: the grid format, OBJ export, run configuration,
//! geodesic archives and synthetic shapes.
//!
//! # Grid file layout
//!
//! A grid file starts with one line of JSON,
//!
//! ```text
//! {"format":"esurf-grid","version":1,"n_theta":24,"n_phi":25,"units":"mm","encoding":"f64le"}
//! ```
//!
//! followed by `3·n_phi·n_theta` numbers in row-major order: row `i`
//! (`φ_i = (i + ½)π/n_phi`) holds columns `j` (`θ_j = 2πj/n_theta`), each
//! sample stored as `x y z`. With `"encoding":"f64le"` the numbers are raw
//! little-endian doubles directly after the newline; with `"csv"` there is
//! one `x,y,z` line per sample.
//!
//! Files converted from tools that repeat the seam or sample the poles may
//! set `"seam_column":true` (an extra column at `θ = 2π`) and
//! `"pole_rows":true` (an extra row at `φ = 0` before the data and one at
//! `φ = π` after it). Those samples are checked against the rest of the
//! grid to `1e−8` times the bounding-box diagonal and then dropped.

mod archive;
mod grid_file;
mod obj;
mod synth;

pub use archive::{export_geodesic, read_summary, read_trace, GeodesicArchive, Summary, TraceRow, VERSION};
pub use grid_file::{load_surface, read_surface, save_surface, write_surface, Encoding, GridHeader, FORMAT_NAME};
pub use obj::{write_obj, TriMesh};
pub use synth::{synth_named, synth_shape, ShapeSpec};

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metric::MetricWeights;
use crate::pipeline::{resample_to_grid, Level, MatchConfig, MatchMode};
use crate::sphere::{SphericalGrid, SurfaceGrid};

/// When inputs are rescaled to unit area (after moving the area centroid to
/// the origin).
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Normalization {
    /// Unit area for distances, means and comparisons; untouched for
    /// geodesics.
    #[default]
    Auto,
    UnitArea,
    None,
}

impl Normalization {
    pub fn applies(self, distance_like: bool) -> bool {
        match self {
            Normalization::Auto => distance_like,
            Normalization::UnitArea => true,
            Normalization::None => false,
        }
    }
}

/// Grid used for synthetic inputs when the configuration does not name one.
pub const DEFAULT_SYNTH_GRID: [usize; 2] = [24, 25];

/// Everything needed to repeat a run.
///
/// Inputs are grid file paths or `synth:` followed by a shape description
/// (see [`ShapeSpec`]).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub inputs: Vec<String>,
    pub weights: MetricWeights,
    /// `[n_theta, n_phi]`; inputs on other grids are resampled to it.
    pub grid: Option<[usize; 2]>,
    pub mode: MatchMode,
    pub matching: MatchConfig,
    pub normalization: Normalization,
    /// Coarse-to-fine schedule; empty runs a single level.
    pub multires: Vec<Level>,
    pub output: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            inputs: Vec::new(),
            weights: MetricWeights::SRNF,
            grid: None,
            mode: MatchMode::Param,
            matching: MatchConfig::default(),
            normalization: Normalization::Auto,
            multires: Vec::new(),
            output: None,
        }
    }
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| {
            let msg = e.to_string();
            let key = msg
                .split('`')
                .nth(1)
                .filter(|_| msg.contains("field"))
                .unwrap_or("config")
                .to_string();
            Error::Parse { key, message: msg }
        })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_json()).map_err(|e| Error::io(path, e))
    }

    /// Checks every setting before any computation.
    pub fn validate(&self) -> Result<()> {
        self.matching.validate()?;
        if let Some([nt, np]) = self.grid {
            SphericalGrid::new(nt, np)?;
        }
        for lev in &self.multires {
            SphericalGrid::new(lev.n_theta, lev.n_phi)?;
            MatchConfig {
                t_count: lev.t_count,
                deg: lev.deg,
                deg_bar: lev.deg_bar,
                ..self.matching.clone()
            }
            .validate()?;
        }
        for s in &self.inputs {
            if let Some(spec) = s.strip_prefix("synth:") {
                spec.parse::<ShapeSpec>()?;
            }
        }
        Ok(())
    }

    /// Loads (or synthesizes) input `k`, resamples it to the configured grid
    /// and normalizes it if the policy applies.
    pub fn load_input(&self, k: usize, distance_like: bool) -> Result<(SphericalGrid, SurfaceGrid)> {
        let src = self.inputs.get(k).ok_or_else(|| Error::Index {
            index: k,
            min: 0,
            max: self.inputs.len().saturating_sub(1),
        })?;
        let (grid, f) = match src.strip_prefix("synth:") {
            Some(spec) => {
                let [nt, np] = self.grid.unwrap_or(DEFAULT_SYNTH_GRID);
                let g = SphericalGrid::new(nt, np)?;
                let f = synth_named(&g, spec)?;
                (g, f)
            }
            None => {
                let (g, f) = load_surface(src)?;
                match self.grid {
                    Some([nt, np]) if [nt, np] != [g.n_theta(), g.n_phi()] => {
                        let dst = SphericalGrid::new(nt, np)?;
                        let f = resample_to_grid(&g, &f, &dst, self.matching.interpolation)?;
                        (dst, f)
                    }
                    _ => (g, f),
                }
            }
        };
        crate::sphere::differential(&grid, &f).check_rank()?;
        let f = if self.normalization.applies(distance_like) {
            f.normalized_unit_area(&grid)
        } else {
            f
        };
        Ok((grid, f))
    }
}


/// Vector-field coefficients for the `bound-check` command.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoefficientFile {
    pub deg_bar: usize,
    pub xv: Vec<f64>,
}

/// Reads `{"deg_bar": d, "xv": [...]}`, a bare JSON array, or plain numbers
/// separated by whitespace or commas. For the last two forms `deg_bar` is
/// recovered from the length `2(deg_bar + 1)² − 2`.
pub fn load_coefficients(path: impl AsRef<Path>) -> Result<CoefficientFile> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_coefficients(&text)
}

pub fn parse_coefficients(text: &str) -> Result<CoefficientFile> {
    let t = text.trim();
    let xv: Vec<f64> = if t.starts_with('{') {
        let c: CoefficientFile = serde_json::from_str(t).map_err(|e| Error::Parse {
            key: if e.to_string().contains("deg_bar") { "deg_bar" } else { "xv" }.into(),
            message: e.to_string(),
        })?;
        let expected = 2 * (c.deg_bar + 1).pow(2) - 2;
        if c.xv.len() != expected {
            return Err(Error::Parse {
                key: "xv".into(),
                message: format!("deg_bar {} needs {expected} coefficients, found {}", c.deg_bar, c.xv.len()),
            });
        }
        return Ok(c);
    } else if t.starts_with('[') {
        serde_json::from_str(t).map_err(|e| Error::Parse {
            key: "xv".into(),
            message: e.to_string(),
        })?
    } else {
        t.split(|c: char| c.is_whitespace() || c == ',')
            .filter(|s| !s.is_empty())
            .map(|s| {
                s.parse::<f64>().map_err(|e| Error::Parse {
                    key: "xv".into(),
                    message: format!("`{s}`: {e}"),
                })
            })
            .collect::<Result<_>>()?
    };
    let deg_bar = (1..=64)
        .find(|d| 2 * (d + 1) * (d + 1) - 2 == xv.len())
        .ok_or_else(|| Error::Parse {
            key: "xv".into(),
            message: format!("{} is not a vector-field basis size 2(d+1)²−2", xv.len()),
        })?;
    Ok(CoefficientFile { deg_bar, xv })
}
