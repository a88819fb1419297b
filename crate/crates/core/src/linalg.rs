//! Small fixed-size helpers for `[f64; 3]` points.

pub(crate) type Vec3 = [f64; 3];

#[inline]
pub(crate) fn dot(a: &Vec3, b: &Vec3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

#[inline]
pub(crate) fn cross(a: &Vec3, b: &Vec3) -> Vec3 {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

#[inline]
pub(crate) fn norm(a: &Vec3) -> f64 {
    dot(a, a).sqrt()
}

#[inline]
pub(crate) fn add(a: &Vec3, b: &Vec3) -> Vec3 {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

#[inline]
pub(crate) fn sub(a: &Vec3, b: &Vec3) -> Vec3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

#[inline]
pub(crate) fn scale(a: &Vec3, s: f64) -> Vec3 {
    [a[0] * s, a[1] * s, a[2] * s]
}

#[inline]
pub(crate) fn axpy(y: &mut Vec3, s: f64, x: &Vec3) {
    y[0] += s * x[0];
    y[1] += s * x[1];
    y[2] += s * x[2];
}

#[inline]
pub(crate) fn mat_vec(m: &[[f64; 3]; 3], v: &Vec3) -> Vec3 {
    [dot(&m[0], v), dot(&m[1], v), dot(&m[2], v)]
}

/// Spherical angles `(θ, φ)` of a nonzero vector, `θ ∈ [0, 2π)`.
#[inline]
pub(crate) fn angles(p: &Vec3) -> (f64, f64) {
    let rho = (p[0] * p[0] + p[1] * p[1]).sqrt();
    let phi = rho.atan2(p[2]);
    let mut theta = p[1].atan2(p[0]);
    if theta < 0.0 {
        theta += std::f64::consts::TAU;
    }
    (theta, phi)
}

/// The spherical frame `(e1, e2, e3)` at `(θ, φ)`: radial, `∂φ`, `∂θ/sinφ`.
#[inline]
pub(crate) fn frame(theta: f64, phi: f64) -> [Vec3; 3] {
    let (st, ct) = theta.sin_cos();
    let (sp, cp) = phi.sin_cos();
    [
        [sp * ct, sp * st, cp],
        [cp * ct, cp * st, -sp],
        [-st, ct, 0.0],
    ]
}
