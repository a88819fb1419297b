use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::obj::write_obj;
use super::RunConfig;
use crate::error::{Error, Result};
use crate::pipeline::{MatchMode, MatchResult};
use crate::sphere::SphericalGrid;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// What `summary.json` records about a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub version: String,
    pub mode: MatchMode,
    pub distance: f64,
    pub energy: f64,
    pub length: f64,
    pub t_count: usize,
    pub converged: bool,
    pub outer_energies: Vec<f64>,
    pub init_index: Option<usize>,
    pub rotation: [f64; 3],
    pub grid: [usize; 2],
}

/// Files written by [`export_geodesic`].
#[derive(Debug, Clone, PartialEq)]
pub struct GeodesicArchive {
    pub dir: PathBuf,
    /// `frame_000.obj` … `frame_{T}.obj`.
    pub frames: Vec<PathBuf>,
    /// One row per optimizer iterate: `solve,iteration,energy,step,gradient_norm`.
    pub trace: PathBuf,
    pub config: PathBuf,
    pub summary: PathBuf,
    pub distance: f64,
    pub version: &'static str,
}

/// One row of `trace.csv`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRow {
    pub solve: usize,
    pub iteration: usize,
    pub energy: f64,
    pub step: f64,
    pub gradient_norm: f64,
}

fn write(path: &Path, contents: impl AsRef<[u8]>) -> Result<()> {
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

/// Writes the frames of `result.geodesic` as OBJ meshes together with the
/// optimizer trace, the configuration and a summary into `dir` (created if
/// missing).
pub fn export_geodesic(
    result: &MatchResult,
    grid: &SphericalGrid,
    config: &RunConfig,
    dir: impl AsRef<Path>,
) -> Result<GeodesicArchive> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let width = result.geodesic.intervals().to_string().len().max(3);
    let mut frames = Vec::with_capacity(result.geodesic.frames().len());
    for (i, f) in result.geodesic.frames().iter().enumerate() {
        let p = dir.join(format!("frame_{i:0width$}.obj"));
        write_obj(&p, grid, f)?;
        frames.push(p);
    }

    let mut csv = String::from("solve,iteration,energy,step,gradient_norm\n");
    for (k, rep) in result.reports.iter().enumerate() {
        for e in &rep.trace {
            let _ = writeln!(csv, "{k},{},{:e},{:e},{:e}", e.iteration, e.value, e.step, e.gradient_norm);
        }
    }
    let trace = dir.join("trace.csv");
    write(&trace, csv)?;

    let config_path = dir.join("config.json");
    config.save(&config_path)?;

    let summary = Summary {
        version: VERSION.to_string(),
        mode: result.mode,
        distance: result.distance,
        energy: result.energy,
        length: result.length,
        t_count: result.geodesic.intervals(),
        converged: result.converged,
        outer_energies: result.outer_energies.clone(),
        init_index: result.init_index,
        rotation: result.rotation.r,
        grid: [grid.n_theta(), grid.n_phi()],
    };
    let summary_path = dir.join("summary.json");
    write(&summary_path, serde_json::to_string_pretty(&summary).expect("summary serializes"))?;

    Ok(GeodesicArchive {
        dir: dir.to_path_buf(),
        frames,
        trace,
        config: config_path,
        summary: summary_path,
        distance: result.distance,
        version: VERSION,
    })
}

/// Reads back a `trace.csv` written by [`export_geodesic`].
pub fn read_trace(path: impl AsRef<Path>) -> Result<Vec<TraceRow>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let bad = |n: usize, m: String| Error::Parse {
        key: format!("trace line {n}"),
        message: m,
    };
    text.lines()
        .enumerate()
        .skip(1)
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(n, l)| {
            let c: Vec<&str> = l.split(',').collect();
            if c.len() != 5 {
                return Err(bad(n + 1, format!("expected 5 columns, found {}", c.len())));
            }
            let u = |s: &str| s.parse::<usize>().map_err(|e| bad(n + 1, e.to_string()));
            let f = |s: &str| s.parse::<f64>().map_err(|e| bad(n + 1, e.to_string()));
            Ok(TraceRow {
                solve: u(c[0])?,
                iteration: u(c[1])?,
                energy: f(c[2])?,
                step: f(c[3])?,
                gradient_norm: f(c[4])?,
            })
        })
        .collect()
}

/// Reads `summary.json` from an archive directory.
pub fn read_summary(dir: impl AsRef<Path>) -> Result<Summary> {
    let path = dir.as_ref().join("summary.json");
    let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::Parse {
        key: "summary".into(),
        message: e.to_string(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pipeline::{MatchConfig, Matcher};

    #[test]
    fn archive_layout() {
        let g = SphericalGrid::new(8, 9).unwrap();
        let cfg = RunConfig {
            inputs: vec!["synth:sphere".into(), "synth:ellipsoid".into()],
            grid: Some([8, 9]),
            matching: MatchConfig {
                t_count: 4,
                deg: 2,
                deg_bar: 2,
                ..MatchConfig::default()
            },
            ..RunConfig::default()
        };
        let (_, f1) = cfg.load_input(0, false).unwrap();
        let (_, f2) = cfg.load_input(1, false).unwrap();
        let r = Matcher::new(&g, cfg.weights, cfg.matching.clone())
            .unwrap()
            .run(cfg.mode, &f1, &f2)
            .unwrap();
        let dir = tempfile::tempdir().unwrap();
        let a = export_geodesic(&r, &g, &cfg, dir.path().join("out")).unwrap();
        assert_eq!(a.frames.len(), 5);
        assert!(a.frames.iter().all(|p| p.exists()));
        assert!(a.frames[4].ends_with("frame_004.obj"));
        let rows = read_trace(&a.trace).unwrap();
        let iters: usize = r.reports.iter().map(|r| r.iterations).sum();
        assert_eq!(rows.iter().filter(|r| r.iteration > 0).count(), iters);
        assert_eq!(rows.len(), iters + r.reports.len());
        assert_eq!(RunConfig::load(&a.config).unwrap(), cfg);
        let s = read_summary(&a.dir).unwrap();
        assert_eq!(s.distance.to_bits(), r.distance.to_bits());
        assert_eq!(s.version, VERSION);
    }

    #[test]
    fn unwritable_directory_reports_the_path() {
        let dir = tempfile::tempdir().unwrap();
        let blocker = dir.path().join("file");
        fs::write(&blocker, "x").unwrap();
        let g = SphericalGrid::new(6, 5).unwrap();
        let f = crate::sphere::SurfaceGrid::unit_sphere(&g);
        let cfg = MatchConfig {
            t_count: 2,
            deg: 1,
            deg_bar: 1,
            outer: 0,
            ..MatchConfig::default()
        };
        let r = Matcher::new(&g, crate::MetricWeights::SRNF, cfg).unwrap().run(MatchMode::Param, &f, &f).unwrap();
        match export_geodesic(&r, &g, &RunConfig::default(), blocker.join("sub")) {
            Err(Error::Io { path, .. }) => assert!(path.starts_with(&blocker)),
            other => panic!("{other:?}"),
        }
    }
}
