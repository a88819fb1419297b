//! Pointwise formulas on 3×2 matrices.
//!
//! With `g = αᵀα`, `Λ = g⁻¹`, `φ = √det g`, `A = αᵀξ`, `t = tr(ΛA)`,
//! `S = sym A`, `K = skew A` and `S' = S − ½ t g`, the four parts of a tangent
//! `ξ` at `α` are
//!
//! ```text
//! ξ_m     = α Λ S'
//! ξ_scale = ½ t α
//! ξ_0     = α Λ K
//! ξ⊥      = ξ − α Λ A
//! ```
//!
//! and their squared base-metric densities reduce to
//! `tr(ΛS'ΛS')φ`, `½t²φ`, `tr(ΛKΛKᵀ)φ` and `tr(ξ⊥Λξ⊥ᵀ)φ`.

use num_dual::{DualNum, DualSVec64};

use super::MetricWeights;

pub type Mat32<T> = [[T; 2]; 3];
type Mat22<T> = [[T; 2]; 2];

#[inline]
fn gram<T: DualNum<Primitive = f64> + Copy>(a: &Mat32<T>, b: &Mat32<T>) -> Mat22<T> {
    let mut out = [[T::zero(); 2]; 2];
    for (i, row) in out.iter_mut().enumerate() {
        for (j, v) in row.iter_mut().enumerate() {
            *v = a[0][i] * b[0][j] + a[1][i] * b[1][j] + a[2][i] * b[2][j];
        }
    }
    out
}

#[inline]
fn mul22<T: DualNum<Primitive = f64> + Copy>(a: &Mat22<T>, b: &Mat22<T>) -> Mat22<T> {
    [
        [
            a[0][0] * b[0][0] + a[0][1] * b[1][0],
            a[0][0] * b[0][1] + a[0][1] * b[1][1],
        ],
        [
            a[1][0] * b[0][0] + a[1][1] * b[1][0],
            a[1][0] * b[0][1] + a[1][1] * b[1][1],
        ],
    ]
}

#[inline]
fn tr_mul<T: DualNum<Primitive = f64> + Copy>(a: &Mat22<T>, b: &Mat22<T>) -> T {
    a[0][0] * b[0][0] + a[0][1] * b[1][0] + a[1][0] * b[0][1] + a[1][1] * b[1][1]
}

/// `det(αᵀα)`.
#[inline]
pub fn gram_det(a: &Mat32<f64>) -> f64 {
    let g = gram(a, a);
    g[0][0] * g[1][1] - g[0][1] * g[1][0]
}

struct Frame<T> {
    lambda: Mat22<T>,
    g: Mat22<T>,
    phi: T,
}

#[inline]
fn frame<T: DualNum<Primitive = f64> + Copy>(a: &Mat32<T>) -> Frame<T> {
    let g = gram(a, a);
    let det = g[0][0] * g[1][1] - g[0][1] * g[1][0];
    let inv = det.recip();
    let lambda = [
        [g[1][1] * inv, -g[0][1] * inv],
        [-g[1][0] * inv, g[0][0] * inv],
    ];
    Frame {
        lambda,
        g,
        phi: det.sqrt(),
    }
}

/// Density of the base metric `tr(ξΛηᵀ)√det g`.
pub fn base_density(a: &Mat32<f64>, xi: &Mat32<f64>, eta: &Mat32<f64>) -> f64 {
    let fr = frame(a);
    let mut s = 0.0;
    for k in 0..3 {
        for i in 0..2 {
            for j in 0..2 {
                s += xi[k][i] * fr.lambda[i][j] * eta[k][j];
            }
        }
    }
    s * fr.phi
}

/// The four parts `[ξ_m, ξ_scale, ξ⊥, ξ_0]` of `ξ` at `α`.
pub fn split(a: &Mat32<f64>, xi: &Mat32<f64>) -> [Mat32<f64>; 4] {
    let fr = frame(a);
    let am = gram(a, xi);
    let t = tr_mul(&fr.lambda, &am);
    let sym = [
        [am[0][0], 0.5 * (am[0][1] + am[1][0])],
        [0.5 * (am[0][1] + am[1][0]), am[1][1]],
    ];
    let skew = [[0.0, 0.5 * (am[0][1] - am[1][0])], [0.5 * (am[1][0] - am[0][1]), 0.0]];
    let mut sp = sym;
    for i in 0..2 {
        for j in 0..2 {
            sp[i][j] -= 0.5 * t * fr.g[i][j];
        }
    }
    let right = |m: &Mat22<f64>| -> Mat32<f64> {
        let lm = mul22(&fr.lambda, m);
        let mut out = [[0.0; 2]; 3];
        for k in 0..3 {
            for j in 0..2 {
                out[k][j] = a[k][0] * lm[0][j] + a[k][1] * lm[1][j];
            }
        }
        out
    };
    let xi_m = right(&sp);
    let xi_0 = right(&skew);
    let tangential = right(&am);
    let mut xi_s = [[0.0; 2]; 3];
    let mut xi_p = [[0.0; 2]; 3];
    for k in 0..3 {
        for j in 0..2 {
            xi_s[k][j] = 0.5 * t * a[k][j];
            xi_p[k][j] = xi[k][j] - tangential[k][j];
        }
    }
    [xi_m, xi_s, xi_p, xi_0]
}

/// Weighted split-metric density `G^{a,b,c,d}_α(ξ, ξ)` at one point, written
/// for any dual-number type so derivatives come from the same code.
pub fn split_energy<T: DualNum<Primitive = f64> + Copy>(w: &MetricWeights, a: &Mat32<T>, xi: &Mat32<T>) -> T {
    let fr = frame(a);
    let am = gram(a, xi);
    let t = tr_mul(&fr.lambda, &am);
    let half = T::from(0.5);
    let off = (am[0][1] + am[1][0]) * half;
    let k = (am[0][1] - am[1][0]) * half;
    let sp = [
        [am[0][0] - half * t * fr.g[0][0], off - half * t * fr.g[0][1]],
        [off - half * t * fr.g[1][0], am[1][1] - half * t * fr.g[1][1]],
    ];
    let mut total = T::zero();
    if w.a != 0.0 {
        let ls = mul22(&fr.lambda, &sp);
        total += tr_mul(&ls, &ls) * w.a;
    }
    if w.b != 0.0 {
        total += half * t * t * w.b;
    }
    if w.d != 0.0 {
        // tr(ΛKΛKᵀ) for K = [[0, k], [−k, 0]] equals 2k² det Λ.
        let det_l = fr.lambda[0][0] * fr.lambda[1][1] - fr.lambda[0][1] * fr.lambda[1][0];
        total += k * k * det_l * T::from(2.0 * w.d);
    }
    if w.c != 0.0 {
        // ξ⊥ = ξ − αΛA
        let la = mul22(&fr.lambda, &am);
        let mut perp = [[T::zero(); 2]; 3];
        for r in 0..3 {
            for j in 0..2 {
                perp[r][j] = xi[r][j] - (a[r][0] * la[0][j] + a[r][1] * la[1][j]);
            }
        }
        let pp = gram(&perp, &perp);
        total += tr_mul(&fr.lambda, &pp) * w.c;
    }
    total * fr.phi
}

/// Density value and its gradients with respect to `α` and `ξ`.
pub fn split_energy_grad(
    w: &MetricWeights,
    a: &Mat32<f64>,
    xi: &Mat32<f64>,
) -> (f64, Mat32<f64>, Mat32<f64>) {
    type D = DualSVec64<12>;
    let mut ad = [[D::from_re(0.0); 2]; 3];
    let mut xd = [[D::from_re(0.0); 2]; 3];
    for k in 0..3 {
        for j in 0..2 {
            ad[k][j] = D::from_re(a[k][j]).derivative(2 * k + j);
            xd[k][j] = D::from_re(xi[k][j]).derivative(6 + 2 * k + j);
        }
    }
    let e = split_energy(w, &ad, &xd);
    let mut ga = [[0.0; 2]; 3];
    let mut gx = [[0.0; 2]; 3];
    if let Some(eps) = &e.eps.0 {
        for k in 0..3 {
            for j in 0..2 {
                ga[k][j] = eps[2 * k + j];
                gx[k][j] = eps[6 + 2 * k + j];
            }
        }
    }
    (e.re, ga, gx)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> (Mat32<f64>, Mat32<f64>) {
        (
            [[1.0, 0.2], [0.3, -0.9], [0.5, 0.4]],
            [[0.7, -0.1], [0.2, 0.6], [-0.3, 1.1]],
        )
    }

    #[test]
    fn parts_resum_to_tangent() {
        let (a, x) = sample();
        let parts = split(&a, &x);
        for k in 0..3 {
            for j in 0..2 {
                let s: f64 = parts.iter().map(|p| p[k][j]).sum();
                assert!((s - x[k][j]).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn trace_formulas_match_part_norms() {
        let (a, x) = sample();
        let parts = split(&a, &x);
        let unit = [
            MetricWeights::new(1.0, 0.0, 0.0, 0.0).unwrap(),
            MetricWeights::new(0.0, 1.0, 0.0, 0.0).unwrap(),
            MetricWeights::new(0.0, 0.0, 1.0, 0.0).unwrap(),
            MetricWeights::new(0.0, 0.0, 0.0, 1.0).unwrap(),
        ];
        for (w, p) in unit.iter().zip(&parts) {
            let direct = base_density(&a, p, p);
            let formula = split_energy(w, &a, &x);
            assert!((direct - formula).abs() < 1e-13 * direct.abs().max(1.0), "{direct} {formula}");
        }
    }

    #[test]
    fn dual_gradient_matches_finite_differences() {
        let (a, x) = sample();
        let w = MetricWeights::new(0.3, 0.7, 1.1, 0.4).unwrap();
        let (_, ga, gx) = split_energy_grad(&w, &a, &x);
        let h = 1e-6;
        for k in 0..3 {
            for j in 0..2 {
                let mut ap = a;
                let mut am = a;
                ap[k][j] += h;
                am[k][j] -= h;
                let fd = (split_energy(&w, &ap, &x) - split_energy(&w, &am, &x)) / (2.0 * h);
                assert!((fd - ga[k][j]).abs() < 1e-7);
                let mut xp = x;
                let mut xm = x;
                xp[k][j] += h;
                xm[k][j] -= h;
                let fd = (split_energy(&w, &a, &xp) - split_energy(&w, &a, &xm)) / (2.0 * h);
                assert!((fd - gx[k][j]).abs() < 1e-7);
            }
        }
    }
}
