//! Subcommand implementations. Each returns `Ok(converged)`.

use std::fs;
use std::path::{Path, PathBuf};

use log::info;
use serde_json::json;

use crate::args::{parse_grid, BoundArgs, CompareArgs, MatchArgs, MeanArgs, PairArgs, SynthArgs};
use elastic_surfaces::diffeo::{jacobian_det, step_bound, DiffeoCoefficients};
use elastic_surfaces::energy::DerivativeMode;
use elastic_surfaces::io::{
    export_geodesic, load_coefficients, save_surface, synth_named, write_obj, Encoding, RunConfig,
};
use elastic_surfaces::pipeline::{
    karcher_mean, multires_match, srnf_comparison, Level, MatchResult, Matcher, MeanConfig,
};
use elastic_surfaces::sphere::VectorFieldBasis;
use elastic_surfaces::{Error, Result, SphericalGrid, SurfaceGrid};

type Outcome = Result<bool>;

fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}

fn io_err(path: &Path, source: std::io::Error) -> Error {
    Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Multiresolution request before the final grid is known.
enum Schedule {
    Auto,
    Levels(Vec<Level>),
}

/// Parses `NTxNP/deg/deg_bar/T` entries separated by commas.
fn parse_schedule(s: &str) -> Result<Schedule> {
    if s.trim().eq_ignore_ascii_case("auto") {
        return Ok(Schedule::Auto);
    }
    let bad = |m: String| Error::Parse {
        key: "multires".into(),
        message: m,
    };
    let levels = s
        .split(',')
        .map(|item| {
            let parts: Vec<&str> = item.trim().split('/').collect();
            if parts.len() != 4 {
                return Err(bad(format!("expected NTxNP/deg/deg_bar/T, got `{item}`")));
            }
            let [n_theta, n_phi] = parse_grid(parts[0]).map_err(bad)?;
            let num = |v: &str| v.trim().parse::<usize>().map_err(|e| bad(format!("`{v}`: {e}")));
            Ok(Level {
                n_theta,
                n_phi,
                deg: num(parts[1])?,
                deg_bar: num(parts[2])?,
                t_count: num(parts[3])?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Schedule::Levels(levels))
}

/// Halves the grid, the degrees and `T` once, then finishes at full size.
fn auto_schedule(grid: &SphericalGrid, cfg: &RunConfig) -> Vec<Level> {
    let m = &cfg.matching;
    let fine = Level {
        n_theta: grid.n_theta(),
        n_phi: grid.n_phi(),
        deg: m.deg,
        deg_bar: m.deg_bar,
        t_count: m.t_count,
    };
    let coarse = Level {
        n_theta: (grid.n_theta() / 2).max(8),
        n_phi: (grid.n_phi() / 2).max(7),
        deg: (m.deg / 2).max(1),
        deg_bar: (m.deg_bar / 2).max(1),
        t_count: (m.t_count / 2).max(2),
    };
    if coarse.n_theta >= fine.n_theta && coarse.n_phi >= fine.n_phi {
        vec![fine]
    } else {
        vec![coarse, fine]
    }
}

/// Merges `--config` with the flags given on the command line.
fn run_config(inputs: &[String], a: &MatchArgs) -> Result<(RunConfig, Option<Schedule>)> {
    let mut cfg = match &a.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if !inputs.is_empty() {
        cfg.inputs = inputs.to_vec();
    }
    if let Some(w) = a.weights {
        cfg.weights = w;
    }
    let m = &mut cfg.matching;
    if let Some(t) = a.t_count {
        m.t_count = t;
    }
    if let Some(d) = a.deg {
        m.deg = d;
    }
    if let Some(d) = a.deg_bar {
        m.deg_bar = d;
    }
    if let Some(n) = a.outer {
        m.outer = n;
    }
    if a.central_diff {
        m.derivative = DerivativeMode::Central;
    }
    if a.no_init {
        m.init = false;
    }
    if let Some(it) = a.max_iter {
        m.optimizer.max_iter = it;
    }
    if let Some(mode) = a.mode {
        cfg.mode = mode.into();
    }
    if let Some(g) = a.grid {
        cfg.grid = Some(g);
    }
    if let Some(n) = a.normalize {
        cfg.normalization = n.into();
    }
    let schedule = match &a.multires {
        Some(s) => Some(parse_schedule(s)?),
        None => None,
    };
    if let Some(Schedule::Levels(l)) = &schedule {
        cfg.multires = l.clone();
    }
    cfg.validate()?;
    Ok((cfg, schedule))
}

fn load_pair(cfg: &RunConfig, distance_like: bool) -> Result<(SphericalGrid, SurfaceGrid, SurfaceGrid)> {
    if cfg.inputs.len() != 2 {
        return Err(invalid(
            "inputs",
            format!("need a source and a target, got {}", cfg.inputs.len()),
        ));
    }
    let (g1, f1) = cfg.load_input(0, distance_like)?;
    let (g2, f2) = cfg.load_input(1, distance_like)?;
    if g1 != g2 {
        return Err(Error::GridMismatch {
            expected: (g1.n_theta(), g1.n_phi()),
            found: (g2.n_theta(), g2.n_phi()),
        });
    }
    Ok((g1, f1, f2))
}

/// Runs the configured match, resolving an `auto` schedule against the
/// input grid. Returns the grid of the final level.
fn run_match(cfg: &mut RunConfig, schedule: Option<&Schedule>, distance_like: bool) -> Result<(SphericalGrid, MatchResult)> {
    let (grid, f1, f2) = load_pair(cfg, distance_like)?;
    if let Some(Schedule::Auto) = schedule {
        cfg.multires = auto_schedule(&grid, cfg);
        cfg.validate()?;
    }
    if cfg.multires.is_empty() {
        let m = Matcher::new(&grid, cfg.weights, cfg.matching.clone())?;
        let r = m.run(cfg.mode, &f1, &f2)?;
        Ok((grid, r))
    } else {
        info!("multiresolution schedule: {:?}", cfg.multires);
        let (g, mut rs) = multires_match(cfg.weights, &grid, &f1, &f2, cfg.mode, &cfg.matching, &cfg.multires)?;
        let r = rs.pop().expect("at least one level");
        Ok((g, r))
    }
}

fn result_json(r: &MatchResult) -> serde_json::Value {
    json!({
        "mode": r.mode.to_string(),
        "distance": r.distance,
        "energy": r.energy,
        "length": r.length,
        "converged": r.converged,
        "outer_energies": r.outer_energies,
        "init_index": r.init_index,
        "rotation": r.rotation.r,
    })
}

pub fn geodesic(a: &PairArgs) -> Outcome {
    let (mut cfg, schedule) = run_config(&a.inputs, &a.matching)?;
    if let Some(o) = &a.out {
        cfg.output = Some(o.clone());
    }
    let dir = cfg.output.clone().unwrap_or_else(|| PathBuf::from("esurf-geodesic"));
    let (grid, r) = run_match(&mut cfg, schedule.as_ref(), false)?;
    let archive = export_geodesic(&r, &grid, &cfg, &dir)?;
    if a.json {
        let mut v = result_json(&r);
        v["archive"] = json!(archive.dir);
        v["frames"] = json!(archive.frames.len());
        println!("{v}");
    } else {
        println!("distance {:.10e}", r.distance);
        println!("wrote {} frames to {}", archive.frames.len(), archive.dir.display());
    }
    Ok(r.converged)
}

pub fn distance(a: &PairArgs) -> Outcome {
    let (mut cfg, schedule) = run_config(&a.inputs, &a.matching)?;
    let (_, r) = run_match(&mut cfg, schedule.as_ref(), true)?;
    if a.json {
        println!("{}", result_json(&r));
    } else {
        println!("{:.10e}", r.distance);
    }
    Ok(r.converged)
}

pub fn mean(a: &MeanArgs) -> Outcome {
    let (cfg, schedule) = run_config(&a.inputs, &a.matching)?;
    if schedule.is_some() || !cfg.multires.is_empty() {
        return Err(invalid("multires", "not available for means"));
    }
    if cfg.inputs.len() < 2 {
        return Err(invalid("inputs", "need at least two surfaces"));
    }
    let mut grid = None;
    let mut samples = Vec::with_capacity(cfg.inputs.len());
    for k in 0..cfg.inputs.len() {
        let (g, f) = cfg.load_input(k, true)?;
        match &grid {
            None => grid = Some(g),
            Some(g0) if *g0 != g => {
                return Err(Error::GridMismatch {
                    expected: (g0.n_theta(), g0.n_phi()),
                    found: (g.n_theta(), g.n_phi()),
                })
            }
            Some(_) => {}
        }
        samples.push(f);
    }
    let grid = grid.expect("at least two inputs");
    let mcfg = MeanConfig {
        mode: cfg.mode,
        matching: cfg.matching.clone(),
        max_iter: a.iterations,
        ..MeanConfig::default()
    };
    let res = karcher_mean(&grid, cfg.weights, &samples, &mcfg)?;

    let dir = a.out.clone().or_else(|| cfg.output.clone()).unwrap_or_else(|| PathBuf::from("esurf-mean"));
    fs::create_dir_all(&dir).map_err(|e| io_err(&dir, e))?;
    save_surface(dir.join("mean.grid"), &grid, &res.mean, Encoding::F64le)?;
    write_obj(dir.join("mean.obj"), &grid, &res.mean)?;
    cfg.save(dir.join("config.json"))?;
    let summary = json!({
        "distances": res.distances,
        "iterations": res.iterations,
        "history": res.history,
        "updates": res.updates,
        "converged": res.converged,
    });
    let sp = dir.join("summary.json");
    fs::write(&sp, serde_json::to_string_pretty(&summary).expect("json")).map_err(|e| io_err(&sp, e))?;
    if a.json {
        println!("{summary}");
    } else {
        let ss: f64 = res.distances.iter().map(|d| d * d).sum();
        println!("sum of squared distances {ss:.10e} after {} iterations", res.iterations);
        println!("wrote {}", dir.join("mean.grid").display());
    }
    Ok(res.converged)
}

pub fn srnf_compare(a: &CompareArgs) -> Outcome {
    let (cfg, _) = run_config(&a.inputs, &a.matching)?;
    let (grid, f1, f2) = load_pair(&cfg, true)?;
    let geodesic = a.geodesic.then_some(&cfg.matching);
    let table = srnf_comparison(&grid, &f1, &f2, &a.t_list, geodesic)?;
    let mut csv = table.to_csv();
    csv.push_str(&format!("# srnf_distance {:e}\n", table.srnf_distance));
    if let Some(d) = table.geodesic_distance {
        csv.push_str(&format!("# geodesic_distance {d:e}\n"));
    }
    match &a.out {
        Some(p) => fs::write(p, &csv).map_err(|e| io_err(p, e))?,
        None => print!("{csv}"),
    }
    Ok(true)
}

pub fn bound_check(a: &BoundArgs) -> Outcome {
    let file = load_coefficients(&a.coefficients)?;
    let [nt, np] = a.grid;
    let grid = SphericalGrid::new(nt, np)?;
    let basis = VectorFieldBasis::new(&grid, file.deg_bar)?;
    let coeffs = DiffeoCoefficients::new(&basis, file.xv)?;
    let bound = step_bound(&grid, &basis, &coeffs);
    let rows: Vec<(f64, f64)> = a
        .t_values
        .iter()
        .map(|&t| {
            let dmin = jacobian_det(&grid, &basis, &coeffs, t).into_iter().fold(f64::INFINITY, f64::min);
            (t, dmin)
        })
        .collect();
    if a.json {
        let list: Vec<_> = rows
            .iter()
            .map(|&(t, d)| json!({"t": t, "min_jacobian": d, "certified": t.abs() < bound}))
            .collect();
        println!("{}", json!({"deg_bar": file.deg_bar, "bound": bound, "steps": list}));
    } else {
        println!("bound {bound:.10e}");
        for (t, d) in rows {
            let tag = if t.abs() < bound { "certified" } else { "uncertified" };
            println!("t {t:e} min_jacobian {d:.10e} {tag}");
        }
    }
    Ok(true)
}

pub fn synth(a: &SynthArgs) -> Outcome {
    let [nt, np] = a.grid;
    let grid = SphericalGrid::new(nt, np)?;
    let f = synth_named(&grid, &a.shape)?;
    let enc = if a.csv { Encoding::Csv } else { Encoding::F64le };
    save_surface(&a.out, &grid, &f, enc)?;
    if a.obj {
        write_obj(a.out.with_extension("obj"), &grid, &f)?;
    }
    Ok(true)
}
