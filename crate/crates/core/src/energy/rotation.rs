use num_dual::{DualNum, DualSVec64};
use serde::{Deserialize, Serialize};

/// A rotation in axis-angle form, `R = exp(skew(r))`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct RotationParams {
    pub r: [f64; 3],
}

pub type Mat3 = [[f64; 3]; 3];

/// Rodrigues' formula, switching to Taylor coefficients near `r = 0` so the
/// derivative stays finite there.
pub fn rotation_matrix<T: DualNum<Primitive = f64> + Copy>(r: &[T; 3]) -> [[T; 3]; 3] {
    let th2 = r[0] * r[0] + r[1] * r[1] + r[2] * r[2];
    let (a, b) = if th2.re() < 1e-8 {
        let th4 = th2 * th2;
        (
            T::one() - th2 / 6.0 + th4 / 120.0,
            T::from(0.5) - th2 / 24.0 + th4 / 720.0,
        )
    } else {
        let th = th2.sqrt();
        (th.sin() / th, (T::one() - th.cos()) / th2)
    };
    let z = T::zero();
    let k = [[z, -r[2], r[1]], [r[2], z, -r[0]], [-r[1], r[0], z]];
    let mut out = [[z; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            let k2: T = (0..3).fold(z, |acc, l| acc + k[i][l] * k[l][j]);
            out[i][j] = a * k[i][j] + b * k2 + if i == j { T::one() } else { z };
        }
    }
    out
}

impl RotationParams {
    pub fn new(r: [f64; 3]) -> Self {
        RotationParams { r }
    }

    pub fn identity() -> Self {
        Self::default()
    }

    pub fn matrix(&self) -> Mat3 {
        rotation_matrix(&self.r)
    }

    /// Rotation angle in radians.
    pub fn angle(&self) -> f64 {
        (self.r[0] * self.r[0] + self.r[1] * self.r[1] + self.r[2] * self.r[2]).sqrt()
    }

    /// `R` and `∂R/∂r_k` for `k = 0, 1, 2`.
    pub fn matrix_with_derivatives(&self) -> (Mat3, [Mat3; 3]) {
        type D = DualSVec64<3>;
        let rd = [0, 1, 2].map(|k| D::from_re(self.r[k]).derivative(k));
        let m = rotation_matrix(&rd);
        let mut val = [[0.0; 3]; 3];
        let mut der = [[[0.0; 3]; 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                val[i][j] = m[i][j].re;
                if let Some(eps) = &m[i][j].eps.0 {
                    for (k, d) in der.iter_mut().enumerate() {
                        d[i][j] = eps[k];
                    }
                }
            }
        }
        (val, der)
    }
}

/// Frobenius norm of `A − B`.
pub fn frobenius_gap(a: &Mat3, b: &Mat3) -> f64 {
    let mut s = 0.0;
    for i in 0..3 {
        for j in 0..3 {
            s += (a[i][j] - b[i][j]).powi(2);
        }
    }
    s.sqrt()
}

pub fn mat_mul(a: &Mat3, b: &Mat3) -> Mat3 {
    let mut out = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            out[i][j] = (0..3).map(|l| a[i][l] * b[l][j]).sum();
        }
    }
    out
}

pub fn transpose(a: &Mat3) -> Mat3 {
    let mut out = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            out[i][j] = a[j][i];
        }
    }
    out
}
