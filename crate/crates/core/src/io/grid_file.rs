use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;
use crate::sphere::{SphericalGrid, SurfaceGrid};

/// Encoding of the data block that follows the header line.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Encoding {
    /// Little-endian `f64`, `x y z` per sample.
    #[default]
    F64le,
    /// One `x,y,z` line per sample.
    Csv,
}

/// First line of a grid file.
///
/// Samples are stored row by row (rows run from `φ` near 0 to `φ` near `π`,
/// columns over `θ`). With `seam_column` the block has `n_theta + 1` columns
/// and the last repeats `θ = 2π`; with `pole_rows` it has an extra row at
/// each pole. Both are verified on load and then dropped.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridHeader {
    pub format: String,
    pub version: u32,
    pub n_theta: usize,
    pub n_phi: usize,
    #[serde(default)]
    pub units: String,
    #[serde(default)]
    pub encoding: Encoding,
    #[serde(default)]
    pub seam_column: bool,
    #[serde(default)]
    pub pole_rows: bool,
}

pub const FORMAT_NAME: &str = "esurf-grid";

impl GridHeader {
    pub fn new(grid: &SphericalGrid, encoding: Encoding) -> Self {
        GridHeader {
            format: FORMAT_NAME.into(),
            version: 1,
            n_theta: grid.n_theta(),
            n_phi: grid.n_phi(),
            units: String::new(),
            encoding,
            seam_column: false,
            pole_rows: false,
        }
    }

    fn rows(&self) -> usize {
        self.n_phi + if self.pole_rows { 2 } else { 0 }
    }

    fn cols(&self) -> usize {
        self.n_theta + usize::from(self.seam_column)
    }
}

fn parse_err(key: &str, message: impl Into<String>) -> Error {
    Error::Parse {
        key: key.into(),
        message: message.into(),
    }
}

fn parse_header(line: &str) -> Result<GridHeader> {
    let v: serde_json::Value = serde_json::from_str(line).map_err(|e| parse_err("header", e.to_string()))?;
    let obj = v.as_object().ok_or_else(|| parse_err("header", "expected a JSON object"))?;
    for key in ["format", "version", "n_theta", "n_phi"] {
        if !obj.contains_key(key) {
            return Err(parse_err(key, "missing"));
        }
    }
    let h: GridHeader = serde_json::from_value(v.clone()).map_err(|e| {
        let msg = e.to_string();
        let key = ["format", "version", "n_theta", "n_phi", "units", "encoding", "seam_column", "pole_rows"]
            .into_iter()
            .find(|k| obj.get(*k).is_some_and(|val| serde_json::from_value::<GridHeaderProbe>(probe(k, val)).is_err()))
            .unwrap_or("header");
        parse_err(key, msg)
    })?;
    if h.format != FORMAT_NAME {
        return Err(parse_err("format", format!("expected `{FORMAT_NAME}`, found `{}`", h.format)));
    }
    if h.version != 1 {
        return Err(parse_err("version", format!("unsupported version {}", h.version)));
    }
    Ok(h)
}

#[derive(Deserialize)]
#[allow(dead_code)]
struct GridHeaderProbe {
    #[serde(default)]
    format: Option<String>,
    #[serde(default)]
    version: Option<u32>,
    #[serde(default)]
    n_theta: Option<usize>,
    #[serde(default)]
    n_phi: Option<usize>,
    #[serde(default)]
    units: Option<String>,
    #[serde(default)]
    encoding: Option<Encoding>,
    #[serde(default)]
    seam_column: Option<bool>,
    #[serde(default)]
    pole_rows: Option<bool>,
}

fn probe(key: &str, val: &serde_json::Value) -> serde_json::Value {
    let mut m = serde_json::Map::new();
    m.insert(key.to_string(), val.clone());
    serde_json::Value::Object(m)
}

/// Writes `f` as a grid file.
pub fn save_surface(path: impl AsRef<Path>, grid: &SphericalGrid, f: &SurfaceGrid, encoding: Encoding) -> Result<()> {
    f.check_grid(grid)?;
    let path = path.as_ref();
    let mut buf = Vec::new();
    write_surface(&mut buf, grid, f, encoding).map_err(|e| Error::io(path, e))?;
    fs::write(path, buf).map_err(|e| Error::io(path, e))
}

pub fn write_surface(out: &mut impl Write, grid: &SphericalGrid, f: &SurfaceGrid, encoding: Encoding) -> std::io::Result<()> {
    let header = GridHeader::new(grid, encoding);
    writeln!(out, "{}", serde_json::to_string(&header).expect("header serializes"))?;
    match encoding {
        Encoding::F64le => {
            for p in f.points() {
                for v in p {
                    out.write_all(&v.to_le_bytes())?;
                }
            }
        }
        Encoding::Csv => {
            for p in f.points() {
                writeln!(out, "{:?},{:?},{:?}", p[0], p[1], p[2])?;
            }
        }
    }
    Ok(())
}

/// Reads a grid file, checking the seam column and pole rows if present.
pub fn load_surface(path: impl AsRef<Path>) -> Result<(SphericalGrid, SurfaceGrid)> {
    let path = path.as_ref();
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_surface(&mut BufReader::new(file)).map_err(|e| match e {
        Error::Io { source, .. } => Error::io(path, source),
        other => other,
    })
}

pub fn read_surface(input: &mut impl BufRead) -> Result<(SphericalGrid, SurfaceGrid)> {
    let mut line = String::new();
    input.read_line(&mut line).map_err(|e| Error::io("<input>", e))?;
    let h = parse_header(line.trim_end())?;
    let grid = SphericalGrid::new(h.n_theta, h.n_phi)?;
    let count = h.rows() * h.cols();
    let raw: Vec<[f64; 3]> = match h.encoding {
        Encoding::F64le => {
            let mut bytes = Vec::new();
            input.read_to_end(&mut bytes).map_err(|e| Error::io("<input>", e))?;
            if bytes.len() != count * 24 {
                return Err(parse_err(
                    "data",
                    format!("expected {} bytes, found {}", count * 24, bytes.len()),
                ));
            }
            bytes
                .chunks_exact(24)
                .map(|c| {
                    let v = |k: usize| f64::from_le_bytes(c[8 * k..8 * k + 8].try_into().expect("8 bytes"));
                    [v(0), v(1), v(2)]
                })
                .collect()
        }
        Encoding::Csv => {
            let mut pts = Vec::with_capacity(count);
            for (n, l) in input.lines().enumerate() {
                let l = l.map_err(|e| Error::io("<input>", e))?;
                if l.trim().is_empty() {
                    continue;
                }
                let vals: Vec<f64> = l
                    .split(',')
                    .map(|s| s.trim().parse::<f64>())
                    .collect::<std::result::Result<_, _>>()
                    .map_err(|e| parse_err("data", format!("line {}: {e}", n + 2)))?;
                if vals.len() != 3 {
                    return Err(parse_err("data", format!("line {}: expected 3 values", n + 2)));
                }
                pts.push([vals[0], vals[1], vals[2]]);
            }
            if pts.len() != count {
                return Err(parse_err("data", format!("expected {count} samples, found {}", pts.len())));
            }
            pts
        }
    };
    if let Some(p) = raw.iter().position(|p| p.iter().any(|v| !v.is_finite())) {
        return Err(Error::Invariant {
            what: "finite samples",
            row: p / h.cols(),
            col: p % h.cols(),
            detail: "non-finite coordinate".into(),
        });
    }
    let tol = 1e-8 * diameter_estimate(&raw);
    let cols = h.cols();
    let first_row = usize::from(h.pole_rows);
    if h.pole_rows {
        for (row, name) in [(0, "north pole"), (h.rows() - 1, "south pole")] {
            let base = raw[row * cols];
            for col in 1..cols {
                let d = linalg::norm(&linalg::sub(&raw[row * cols + col], &base));
                if d > tol {
                    return Err(Error::Invariant {
                        what: "pole consistency",
                        row,
                        col,
                        detail: format!("{name} samples differ by {d:e} (tolerance {tol:e})"),
                    });
                }
            }
        }
    }
    if h.seam_column {
        for row in 0..h.rows() {
            let d = linalg::norm(&linalg::sub(&raw[row * cols + h.n_theta], &raw[row * cols]));
            if d > tol {
                return Err(Error::Invariant {
                    what: "seam closure",
                    row,
                    col: h.n_theta,
                    detail: format!("θ = 2π differs from θ = 0 by {d:e} (tolerance {tol:e})"),
                });
            }
        }
    }
    let mut pts = Vec::with_capacity(grid.n_points());
    for row in first_row..first_row + h.n_phi {
        pts.extend_from_slice(&raw[row * cols..row * cols + h.n_theta]);
    }
    let f = SurfaceGrid::new(&grid, pts)?;
    Ok((grid, f))
}

/// Bounding-box diagonal: within a factor `√3` of the true diameter and
/// linear in the number of samples.
fn diameter_estimate(pts: &[[f64; 3]]) -> f64 {
    let mut lo = [f64::INFINITY; 3];
    let mut hi = [f64::NEG_INFINITY; 3];
    for p in pts {
        for k in 0..3 {
            lo[k] = lo[k].min(p[k]);
            hi[k] = hi[k].max(p[k]);
        }
    }
    linalg::norm(&linalg::sub(&hi, &lo))
}
