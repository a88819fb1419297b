use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;
use crate::sphere::{SphericalGrid, SurfaceGrid};

/// Built-in test surfaces.
///
/// Text form: `kind` or `kind:key=value,...`, e.g. `ellipsoid:a=1,b=1,c=1.3`
/// or `cylinder:bend=0.5,twist=1`. Omitted keys keep their defaults.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ShapeSpec {
    Sphere {
        radius: f64,
    },
    Ellipsoid {
        a: f64,
        b: f64,
        c: f64,
    },
    /// Capped cylinder of the given radius along the z axis, `|z| ≤
    /// half_length`. `twist` turns each cross-section by `twist·z` radians
    /// and `bend` is the curvature of the bent axis in the xz plane.
    Cylinder {
        radius: f64,
        half_length: f64,
        bend: f64,
        twist: f64,
        /// Flatness of the caps: the profile radius is
        /// `radius·√(1 − cos^{2·cap}φ)`.
        cap: u32,
    },
    /// Unit sphere with radial bumps `amplitude·sin^k φ·cos(kθ)`.
    Bumpy {
        amplitude: f64,
        frequency: u32,
    },
}

impl ShapeSpec {
    pub fn kind(&self) -> &'static str {
        match self {
            ShapeSpec::Sphere { .. } => "sphere",
            ShapeSpec::Ellipsoid { .. } => "ellipsoid",
            ShapeSpec::Cylinder { .. } => "cylinder",
            ShapeSpec::Bumpy { .. } => "bumpy",
        }
    }

    pub fn default_for(kind: &str) -> Result<Self> {
        Ok(match kind {
            "sphere" => ShapeSpec::Sphere { radius: 1.0 },
            "ellipsoid" => ShapeSpec::Ellipsoid { a: 1.0, b: 1.0, c: 1.3 },
            "cylinder" => ShapeSpec::Cylinder {
                radius: 0.4,
                half_length: 1.5,
                bend: 0.0,
                twist: 0.0,
                cap: 4,
            },
            "bumpy" => ShapeSpec::Bumpy {
                amplitude: 0.1,
                frequency: 3,
            },
            other => return Err(Error::UnknownShape(other.to_string())),
        })
    }

    fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let bad = |m: String| Error::Parse {
            key: key.to_string(),
            message: m,
        };
        let num = || value.parse::<f64>().map_err(|e| bad(format!("`{value}`: {e}")));
        let int = || value.parse::<u32>().map_err(|e| bad(format!("`{value}`: {e}")));
        match (self, key) {
            (ShapeSpec::Sphere { radius }, "radius" | "r") => *radius = num()?,
            (ShapeSpec::Ellipsoid { a, .. }, "a") => *a = num()?,
            (ShapeSpec::Ellipsoid { b, .. }, "b") => *b = num()?,
            (ShapeSpec::Ellipsoid { c, .. }, "c") => *c = num()?,
            (ShapeSpec::Cylinder { radius, .. }, "radius" | "r") => *radius = num()?,
            (ShapeSpec::Cylinder { half_length, .. }, "half_length" | "h") => *half_length = num()?,
            (ShapeSpec::Cylinder { bend, .. }, "bend") => *bend = num()?,
            (ShapeSpec::Cylinder { twist, .. }, "twist") => *twist = num()?,
            (ShapeSpec::Cylinder { cap, .. }, "cap") => *cap = int()?,
            (ShapeSpec::Bumpy { amplitude, .. }, "amplitude" | "a") => *amplitude = num()?,
            (ShapeSpec::Bumpy { frequency, .. }, "frequency" | "k") => *frequency = int()?,
            (s, _) => return Err(bad(format!("not a parameter of `{}`", s.kind()))),
        }
        Ok(())
    }

    fn validate(&self) -> Result<()> {
        let positive = |name: &'static str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(Error::invalid(name, format!("must be positive, got {v}")))
            }
        };
        match *self {
            ShapeSpec::Sphere { radius } => positive("radius", radius),
            ShapeSpec::Ellipsoid { a, b, c } => {
                positive("a", a)?;
                positive("b", b)?;
                positive("c", c)
            }
            ShapeSpec::Cylinder {
                radius,
                half_length,
                bend,
                twist,
                cap,
            } => {
                positive("radius", radius)?;
                positive("half_length", half_length)?;
                if !twist.is_finite() {
                    return Err(Error::invalid("twist", "must be finite"));
                }
                if !bend.is_finite() || bend.abs() * radius >= 1.0 {
                    return Err(Error::invalid("bend", "need |bend|·radius < 1"));
                }
                if cap == 0 {
                    return Err(Error::invalid("cap", "must be at least 1"));
                }
                Ok(())
            }
            ShapeSpec::Bumpy { amplitude, frequency } => {
                if !(amplitude.is_finite() && amplitude.abs() < 1.0) {
                    return Err(Error::invalid("amplitude", "need |amplitude| < 1"));
                }
                if frequency == 0 {
                    return Err(Error::invalid("frequency", "must be at least 1"));
                }
                Ok(())
            }
        }
    }

    /// Point on the surface at parameter `(θ, φ)`.
    pub fn eval(&self, theta: f64, phi: f64) -> [f64; 3] {
        let (st, ct) = theta.sin_cos();
        let (sp, cp) = phi.sin_cos();
        match *self {
            ShapeSpec::Sphere { radius } => [radius * sp * ct, radius * sp * st, radius * cp],
            ShapeSpec::Ellipsoid { a, b, c } => [a * sp * ct, b * sp * st, c * cp],
            ShapeSpec::Cylinder {
                radius,
                half_length,
                bend,
                twist,
                cap,
            } => {
                // sin φ · √(Σ_{k<cap} cos^{2k} φ) = √(1 − cos^{2·cap} φ), smooth at the poles
                let s: f64 = (0..cap).map(|k| cp.powi(2 * k as i32)).sum();
                let rho = radius * sp * s.sqrt();
                let z = half_length * cp;
                let (sw, cw) = (twist * z).sin_cos();
                let (x, y) = (rho * (ct * cw - st * sw), rho * (st * cw + ct * sw));
                if bend == 0.0 {
                    [x, y, z]
                } else {
                    let k = bend;
                    let (sa, ca) = (k * z).sin_cos();
                    [(x - 1.0 / k) * ca + 1.0 / k, y, (1.0 / k - x) * sa]
                }
            }
            ShapeSpec::Bumpy { amplitude, frequency } => {
                let k = frequency as f64;
                let r = 1.0 + amplitude * sp.powi(frequency as i32) * (k * theta).cos();
                linalg::scale(&[sp * ct, sp * st, cp], r)
            }
        }
    }
}

impl FromStr for ShapeSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (kind, rest) = s.split_once(':').unwrap_or((s, ""));
        let mut spec = ShapeSpec::default_for(kind.trim())?;
        for kv in rest.split(',').map(str::trim).filter(|kv| !kv.is_empty()) {
            let (k, v) = kv.split_once('=').ok_or_else(|| Error::Parse {
                key: kv.to_string(),
                message: "expected key=value".into(),
            })?;
            spec.set(k.trim(), v.trim())?;
        }
        spec.validate()?;
        Ok(spec)
    }
}

impl fmt::Display for ShapeSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            ShapeSpec::Sphere { radius } => write!(f, "sphere:radius={radius}"),
            ShapeSpec::Ellipsoid { a, b, c } => write!(f, "ellipsoid:a={a},b={b},c={c}"),
            ShapeSpec::Cylinder {
                radius,
                half_length,
                bend,
                twist,
                cap,
            } => write!(
                f,
                "cylinder:radius={radius},half_length={half_length},bend={bend},twist={twist},cap={cap}"
            ),
            ShapeSpec::Bumpy { amplitude, frequency } => write!(f, "bumpy:amplitude={amplitude},frequency={frequency}"),
        }
    }
}

/// Samples a built-in shape on `grid`, checking that the result is immersed.
pub fn synth_shape(grid: &SphericalGrid, spec: &ShapeSpec) -> Result<SurfaceGrid> {
    spec.validate()?;
    let f = SurfaceGrid::from_fn(grid, |t, p| spec.eval(t, p));
    crate::sphere::differential(grid, &f).check_rank()?;
    Ok(f)
}

/// Parses `spec` (see [`ShapeSpec`]) and samples it.
pub fn synth_named(grid: &SphericalGrid, spec: &str) -> Result<SurfaceGrid> {
    synth_shape(grid, &spec.parse()?)
}
