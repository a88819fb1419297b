//! Evaluation of grid-sampled surfaces at arbitrary sphere points.
//!
//! Both interpolants treat `θ` as periodic and cross the poles by reflection:
//! the meridian through `θ` continues past `φ = 0` (or `π`) into the meridian
//! through `θ + π`, so row `-1 - k` is row `k` read at `θ + π`. Along a full
//! great circle the samples are then equispaced and `2π`-periodic.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::sphere::{SphericalGrid, SurfaceGrid};

/// Interpolation scheme used by resampling.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Interpolation {
    /// Trigonometric interpolation on the doubled sphere; exact for
    /// band-limited data.
    #[default]
    Spectral,
    /// Keys cubic convolution (`a = -0.5`) in `(θ, φ)`.
    Bicubic,
}

/// Value and angular derivatives of an interpolated surface.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct InterpJet {
    pub value: [f64; 3],
    pub d_theta: [f64; 3],
    pub d_phi: [f64; 3],
}

/// A surface prepared for evaluation at arbitrary `(θ, φ)`.
#[derive(Debug, Clone)]
pub struct SurfaceInterpolant {
    inner: Inner,
}

#[derive(Debug, Clone)]
enum Inner {
    Spectral(Spectral),
    Bicubic(Bicubic),
}

impl SurfaceInterpolant {
    pub fn new(grid: &SphericalGrid, f: &SurfaceGrid, method: Interpolation) -> Self {
        assert_eq!(f.dims(), grid.dims(), "surface does not live on this grid");
        let inner = match method {
            Interpolation::Spectral => Inner::Spectral(Spectral::new(grid, f)),
            Interpolation::Bicubic => Inner::Bicubic(Bicubic::new(grid, f)),
        };
        SurfaceInterpolant { inner }
    }

    pub fn eval(&self, theta: f64, phi: f64) -> [f64; 3] {
        self.eval_jet(theta, phi).value
    }

    pub fn eval_jet(&self, theta: f64, phi: f64) -> InterpJet {
        match &self.inner {
            Inner::Spectral(s) => s.eval(theta, phi),
            Inner::Bicubic(b) => b.eval(theta, phi),
        }
    }
}

/// Symmetric mode list for `n` equispaced samples: `(frequency, weight)`,
/// with the Nyquist pair split in half when `n` is even.
fn modes(n: usize) -> Vec<(i64, f64)> {
    let half = (n / 2) as i64;
    if n % 2 == 0 {
        (-half..=half)
            .map(|m| (m, if m.abs() == half { 0.5 } else { 1.0 }))
            .collect()
    } else {
        (-half..=half).map(|m| (m, 1.0)).collect()
    }
}

#[derive(Debug, Clone)]
struct Spectral {
    m_modes: Vec<(i64, f64)>,
    n_modes: Vec<(i64, f64)>,
    // [component][m][n]
    coef: Vec<Complex64>,
}

impl Spectral {
    fn new(grid: &SphericalGrid, f: &SurfaceGrid) -> Self {
        let (nt, np) = grid.dims();
        let n2 = 2 * np;
        let m_modes = modes(nt);
        let n_modes = modes(n2);
        let (nm, nn) = (m_modes.len(), n_modes.len());

        let row_kernel: Vec<Complex64> = m_modes
            .iter()
            .flat_map(|&(m, _)| {
                grid.theta()
                    .iter()
                    .map(move |&t| Complex64::from_polar(1.0 / nt as f64, -(m as f64) * t))
            })
            .collect();
        let d_phi = grid.d_phi();
        let col_kernel: Vec<Complex64> = n_modes
            .iter()
            .flat_map(|&(n, _)| {
                (0..n2).map(move |k| {
                    let ph = (k as f64 + 0.5) * d_phi;
                    Complex64::from_polar(1.0 / n2 as f64, -(n as f64) * ph)
                })
            })
            .collect();

        let mut coef = vec![Complex64::new(0.0, 0.0); 3 * nm * nn];
        let mut rows = vec![Complex64::new(0.0, 0.0); np * nm];
        for comp in 0..3 {
            for i in 0..np {
                for mi in 0..nm {
                    let ker = &row_kernel[mi * nt..(mi + 1) * nt];
                    let mut acc = Complex64::new(0.0, 0.0);
                    for (j, k) in ker.iter().enumerate() {
                        acc += k * f.get(i, j)[comp];
                    }
                    rows[i * nm + mi] = acc;
                }
            }
            for (mi, &(m, _)) in m_modes.iter().enumerate() {
                let parity = if m.rem_euclid(2) == 0 { 1.0 } else { -1.0 };
                let ext = |k: usize| -> Complex64 {
                    if k < np {
                        rows[k * nm + mi]
                    } else {
                        rows[(n2 - 1 - k) * nm + mi] * parity
                    }
                };
                for ni in 0..nn {
                    let ker = &col_kernel[ni * n2..(ni + 1) * n2];
                    let mut acc = Complex64::new(0.0, 0.0);
                    for (k, c) in ker.iter().enumerate() {
                        acc += c * ext(k);
                    }
                    coef[(comp * nm + mi) * nn + ni] = acc;
                }
            }
        }
        Spectral {
            m_modes,
            n_modes,
            coef,
        }
    }

    fn eval(&self, theta: f64, phi: f64) -> InterpJet {
        let (nm, nn) = (self.m_modes.len(), self.n_modes.len());
        let et: Vec<Complex64> = self
            .m_modes
            .iter()
            .map(|&(m, w)| Complex64::from_polar(w, m as f64 * theta))
            .collect();
        let ep: Vec<Complex64> = self
            .n_modes
            .iter()
            .map(|&(n, w)| Complex64::from_polar(w, n as f64 * phi))
            .collect();
        let i = Complex64::new(0.0, 1.0);
        let mut out = InterpJet::default();
        for comp in 0..3 {
            let mut v = Complex64::new(0.0, 0.0);
            let mut dt = Complex64::new(0.0, 0.0);
            let mut dp = Complex64::new(0.0, 0.0);
            for mi in 0..nm {
                let row = &self.coef[(comp * nm + mi) * nn..(comp * nm + mi + 1) * nn];
                let mut a = Complex64::new(0.0, 0.0);
                let mut b = Complex64::new(0.0, 0.0);
                for ((c, e), &(n, _)) in row.iter().zip(&ep).zip(&self.n_modes) {
                    let t = c * e;
                    a += t;
                    b += t * n as f64;
                }
                let m = self.m_modes[mi].0 as f64;
                v += et[mi] * a;
                dt += et[mi] * a * m;
                dp += et[mi] * b;
            }
            out.value[comp] = v.re;
            out.d_theta[comp] = (i * dt).re;
            out.d_phi[comp] = (i * dp).re;
        }
        out
    }
}

#[derive(Debug, Clone)]
struct Bicubic {
    nt: usize,
    np: usize,
    d_theta: f64,
    d_phi: f64,
    points: Vec<[f64; 3]>,
}

#[inline]
fn keys(s: f64) -> ([f64; 4], [f64; 4]) {
    let s2 = s * s;
    let s3 = s2 * s;
    (
        [
            0.5 * (-s3 + 2.0 * s2 - s),
            0.5 * (3.0 * s3 - 5.0 * s2 + 2.0),
            0.5 * (-3.0 * s3 + 4.0 * s2 + s),
            0.5 * (s3 - s2),
        ],
        [
            0.5 * (-3.0 * s2 + 4.0 * s - 1.0),
            0.5 * (9.0 * s2 - 10.0 * s),
            0.5 * (-9.0 * s2 + 8.0 * s + 1.0),
            0.5 * (3.0 * s2 - 2.0 * s),
        ],
    )
}

impl Bicubic {
    fn new(grid: &SphericalGrid, f: &SurfaceGrid) -> Self {
        Bicubic {
            nt: grid.n_theta(),
            np: grid.n_phi(),
            d_theta: grid.d_theta(),
            d_phi: grid.d_phi(),
            points: f.points().to_vec(),
        }
    }

    /// Row `row` interpolated at fractional column `x`: value and `∂/∂x`.
    fn row_eval(&self, row: usize, x: f64) -> ([f64; 3], [f64; 3]) {
        let j0 = x.floor();
        let (w, dw) = keys(x - j0);
        let nt = self.nt as i64;
        let mut v = [0.0; 3];
        let mut d = [0.0; 3];
        for a in 0..4 {
            let j = (j0 as i64 - 1 + a as i64).rem_euclid(nt) as usize;
            let p = self.points[row * self.nt + j];
            for k in 0..3 {
                v[k] += w[a] * p[k];
                d[k] += dw[a] * p[k];
            }
        }
        (v, d)
    }

    fn eval(&self, theta: f64, phi: f64) -> InterpJet {
        let x = theta / self.d_theta;
        let y = phi / self.d_phi - 0.5;
        let i0 = y.floor();
        let (wy, dwy) = keys(y - i0);
        let np = self.np as i64;
        let mut out = InterpJet::default();
        for a in 0..4 {
            let r = i0 as i64 - 1 + a as i64;
            let (row, xr) = if r < 0 {
                ((-1 - r) as usize, x + self.nt as f64 / 2.0)
            } else if r >= np {
                ((2 * np - 1 - r) as usize, x + self.nt as f64 / 2.0)
            } else {
                (r as usize, x)
            };
            let (v, d) = self.row_eval(row.min(self.np - 1), xr);
            for k in 0..3 {
                out.value[k] += wy[a] * v[k];
                out.d_theta[k] += wy[a] * d[k] / self.d_theta;
                out.d_phi[k] += dwy[a] * v[k] / self.d_phi;
            }
        }
        out
    }
}
