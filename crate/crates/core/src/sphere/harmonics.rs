//! Real spherical harmonics and their angular derivatives.
//!
//! Harmonics are orthonormal on the unit sphere, carry no Condon–Shortley
//! phase, and use the colatitude convention `φ ∈ (0, π)`:
//!
//! ```text
//! Y_l^0  = Q_l^0(φ)
//! Y_l^m  = √2 Q_l^m(φ) cos(mθ)     m > 0
//! Y_l^-m = √2 Q_l^m(φ) sin(mθ)     m > 0
//! ```
//!
//! where `Q_l^m` are normalized associated Legendre functions of `cos φ`.

use std::f64::consts::PI;

/// Flat index of harmonic `(l, m)` with `-l ≤ m ≤ l`, ordered degree-major
/// and order-minor.
#[inline]
pub fn sh_index(l: usize, m: i64) -> usize {
    (l * l) as usize + (m + l as i64) as usize
}

/// Number of harmonics of degree `0..=lmax`.
#[inline]
pub fn sh_count(lmax: usize) -> usize {
    (lmax + 1) * (lmax + 1)
}

#[inline]
fn legendre_index(l: usize, m: usize) -> usize {
    l * (l + 1) / 2 + m
}

/// Normalized associated Legendre values `Q_l^m(φ)` and first two
/// `φ`-derivatives for `0 ≤ m ≤ l ≤ lmax`, stored triangularly.
#[derive(Debug, Clone)]
pub struct LegendreTable {
    lmax: usize,
    q: Vec<f64>,
    dq: Vec<f64>,
    d2q: Vec<f64>,
}

impl LegendreTable {
    pub fn new(lmax: usize, phi: f64) -> Self {
        let n = legendre_index(lmax, lmax) + 1;
        let mut q = vec![0.0; n];
        let (s, c) = phi.sin_cos();

        q[0] = (1.0 / (4.0 * PI)).sqrt();
        for m in 1..=lmax {
            let prev = q[legendre_index(m - 1, m - 1)];
            let mf = m as f64;
            q[legendre_index(m, m)] = ((2.0 * mf + 1.0) / (2.0 * mf)).sqrt() * s * prev;
        }
        for m in 0..lmax {
            let mf = m as f64;
            q[legendre_index(m + 1, m)] = (2.0 * mf + 3.0).sqrt() * c * q[legendre_index(m, m)];
        }
        for m in 0..=lmax {
            let mf = m as f64;
            for l in (m + 2)..=lmax {
                let lf = l as f64;
                let a = ((4.0 * lf * lf - 1.0) / (lf * lf - mf * mf)).sqrt();
                let lm1 = lf - 1.0;
                let b = ((lm1 * lm1 - mf * mf) / (4.0 * lm1 * lm1 - 1.0)).sqrt();
                q[legendre_index(l, m)] =
                    a * (c * q[legendre_index(l - 1, m)] - b * q[legendre_index(l - 2, m)]);
            }
        }

        let mut dq = vec![0.0; n];
        let mut d2q = vec![0.0; n];
        for l in 0..=lmax {
            let lf = l as f64;
            for m in 0..=l {
                let mf = m as f64;
                let k = legendre_index(l, m);
                let lower = if l > m {
                    let coef = ((2.0 * lf + 1.0) / (2.0 * lf - 1.0) * (lf - mf) * (lf + mf)).sqrt();
                    coef * q[legendre_index(l - 1, m)]
                } else {
                    0.0
                };
                dq[k] = (lf * c * q[k] - lower) / s;
                d2q[k] = -(c / s) * dq[k] - (lf * (lf + 1.0) - mf * mf / (s * s)) * q[k];
            }
        }
        LegendreTable { lmax, q, dq, d2q }
    }

    pub fn lmax(&self) -> usize {
        self.lmax
    }

    /// `(Q, ∂φ Q, ∂φφ Q)` for degree `l`, order `m ≥ 0`.
    #[inline]
    pub fn get(&self, l: usize, m: usize) -> (f64, f64, f64) {
        let k = legendre_index(l, m);
        (self.q[k], self.dq[k], self.d2q[k])
    }
}

/// A real harmonic and its angular derivatives at one point.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct HarmonicJet {
    pub y: f64,
    pub y_t: f64,
    pub y_p: f64,
    pub y_tt: f64,
    pub y_tp: f64,
    pub y_pp: f64,
}

/// All real harmonics of degree `0..=lmax` at `(θ, φ)`, indexed by
/// [`sh_index`].
pub fn harmonic_jets(lmax: usize, theta: f64, phi: f64) -> Vec<HarmonicJet> {
    let table = LegendreTable::new(lmax, phi);
    let mut out = vec![HarmonicJet::default(); sh_count(lmax)];
    let sqrt2 = std::f64::consts::SQRT_2;
    for l in 0..=lmax {
        let (q, dq, d2q) = table.get(l, 0);
        out[sh_index(l, 0)] = HarmonicJet {
            y: q,
            y_t: 0.0,
            y_p: dq,
            y_tt: 0.0,
            y_tp: 0.0,
            y_pp: d2q,
        };
        for m in 1..=l {
            let (q, dq, d2q) = table.get(l, m);
            let mf = m as f64;
            let (sm, cm) = (mf * theta).sin_cos();
            let (q, dq, d2q) = (sqrt2 * q, sqrt2 * dq, sqrt2 * d2q);
            out[sh_index(l, m as i64)] = HarmonicJet {
                y: q * cm,
                y_t: -mf * q * sm,
                y_p: dq * cm,
                y_tt: -mf * mf * q * cm,
                y_tp: -mf * dq * sm,
                y_pp: d2q * cm,
            };
            out[sh_index(l, -(m as i64))] = HarmonicJet {
                y: q * sm,
                y_t: mf * q * cm,
                y_p: dq * sm,
                y_tt: -mf * mf * q * sm,
                y_tp: mf * dq * cm,
                y_pp: d2q * sm,
            };
        }
    }
    out
}

/// Values only; cheaper than [`harmonic_jets`] when derivatives are unused.
pub fn harmonic_values(lmax: usize, theta: f64, phi: f64) -> Vec<f64> {
    harmonic_jets(lmax, theta, phi).into_iter().map(|j| j.y).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn low_degree_closed_forms() {
        let (t, p) = (0.7, 1.1);
        let y = harmonic_values(2, t, p);
        let c0 = (1.0 / (4.0 * PI)).sqrt();
        let c1 = (3.0 / (4.0 * PI)).sqrt();
        assert_relative_eq!(y[sh_index(0, 0)], c0, epsilon = 1e-15);
        assert_relative_eq!(y[sh_index(1, 0)], c1 * p.cos(), epsilon = 1e-15);
        assert_relative_eq!(y[sh_index(1, 1)], c1 * p.sin() * t.cos(), epsilon = 1e-15);
        assert_relative_eq!(y[sh_index(1, -1)], c1 * p.sin() * t.sin(), epsilon = 1e-15);
        let c20 = (5.0 / (16.0 * PI)).sqrt();
        assert_relative_eq!(
            y[sh_index(2, 0)],
            c20 * (3.0 * p.cos().powi(2) - 1.0),
            epsilon = 1e-14
        );
        let c22 = (15.0 / (16.0 * PI)).sqrt();
        assert_relative_eq!(
            y[sh_index(2, 2)],
            c22 * p.sin().powi(2) * (2.0 * t).cos(),
            epsilon = 1e-14
        );
    }

    #[test]
    fn orthonormal_under_fine_quadrature() {
        // A 64x400 midpoint grid integrates products of degree <= 8 to about 1e-5.
        let lmax = 4;
        let (nt, np) = (64, 400);
        let n = sh_count(lmax);
        let mut gram = vec![0.0; n * n];
        for i in 0..np {
            let p = (i as f64 + 0.5) * PI / np as f64;
            let w = p.sin() * (2.0 * PI / nt as f64) * (PI / np as f64);
            for j in 0..nt {
                let t = j as f64 * 2.0 * PI / nt as f64;
                let y = harmonic_values(lmax, t, p);
                for a in 0..n {
                    for b in 0..n {
                        gram[a * n + b] += y[a] * y[b] * w;
                    }
                }
            }
        }
        for a in 0..n {
            for b in 0..n {
                let expect = if a == b { 1.0 } else { 0.0 };
                assert!((gram[a * n + b] - expect).abs() < 1e-4, "{a} {b} {}", gram[a * n + b]);
            }
        }
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let lmax = 6;
        let (t, p) = (2.3, 0.9);
        let h = 1e-5;
        let jets = harmonic_jets(lmax, t, p);
        let tp = harmonic_jets(lmax, t + h, p);
        let tm = harmonic_jets(lmax, t - h, p);
        let pp = harmonic_jets(lmax, t, p + h);
        let pm = harmonic_jets(lmax, t, p - h);
        for k in 0..sh_count(lmax) {
            let fd_t = (tp[k].y - tm[k].y) / (2.0 * h);
            let fd_p = (pp[k].y - pm[k].y) / (2.0 * h);
            let fd_tt = (tp[k].y_t - tm[k].y_t) / (2.0 * h);
            let fd_tp = (pp[k].y_t - pm[k].y_t) / (2.0 * h);
            let fd_pp = (pp[k].y_p - pm[k].y_p) / (2.0 * h);
            assert!((jets[k].y_t - fd_t).abs() < 1e-7, "y_t {k}");
            assert!((jets[k].y_p - fd_p).abs() < 1e-7, "y_p {k}");
            assert!((jets[k].y_tt - fd_tt).abs() < 1e-6, "y_tt {k}");
            assert!((jets[k].y_tp - fd_tp).abs() < 1e-6, "y_tp {k}");
            assert!((jets[k].y_pp - fd_pp).abs() < 1e-6, "y_pp {k}");
        }
    }

    #[test]
    fn addition_theorem_holds() {
        // Σ_m Y_l^m(x)² = (2l+1)/4π at every point.
        let lmax = 10;
        for &(t, p) in &[(0.1, 0.05), (1.0, 1.5), (5.0, 3.1)] {
            let y = harmonic_values(lmax, t, p);
            for l in 0..=lmax {
                let s: f64 = (-(l as i64)..=l as i64)
                    .map(|m| y[sh_index(l, m)].powi(2))
                    .sum();
                assert_relative_eq!(s, (2 * l + 1) as f64 / (4.0 * PI), max_relative = 1e-12);
            }
        }
    }
}
