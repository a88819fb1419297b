use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{dot, Objective};

/// Outcome of comparing directional derivatives with central differences.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GradCheckReport {
    pub step: f64,
    /// `(analytic, finite difference, relative error)` per direction.
    pub directions: Vec<(f64, f64, f64)>,
    pub max_rel_error: f64,
}

impl GradCheckReport {
    pub fn passes(&self, tol: f64) -> bool {
        self.max_rel_error <= tol
    }
}

/// Checks `∇f(x)·v` against `(f(x + hv) − f(x − hv)) / 2h` along `n_dirs`
/// random unit directions, with `h = rel_step · max(1, ‖x‖∞)`.
///
/// The relative error is `|fd − an| / max(|fd|, |an|, 1e−8 · max(1, |f|))`;
/// the floor keeps directions along which `f` is flat from dividing noise by
/// noise.
pub fn check_gradient(obj: &dyn Objective, x: &[f64], n_dirs: usize, seed: u64, rel_step: f64) -> GradCheckReport {
    let n = obj.dim();
    assert_eq!(x.len(), n, "point has the wrong dimension");
    let (f, g) = obj.eval(x);
    let scale = x.iter().fold(1.0f64, |m, v| m.max(v.abs()));
    let h = rel_step * scale;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let floor = 1e-8 * f.abs().max(1.0);
    let mut directions = Vec::with_capacity(n_dirs);
    let mut worst: f64 = 0.0;
    for _ in 0..n_dirs {
        let mut v: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let vn = dot(&v, &v).sqrt().max(f64::MIN_POSITIVE);
        v.iter_mut().for_each(|c| *c /= vn);
        let xp: Vec<f64> = x.iter().zip(&v).map(|(a, b)| a + h * b).collect();
        let xm: Vec<f64> = x.iter().zip(&v).map(|(a, b)| a - h * b).collect();
        let fd = (obj.value(&xp) - obj.value(&xm)) / (2.0 * h);
        let an = dot(&g, &v);
        let rel = (fd - an).abs() / fd.abs().max(an.abs()).max(floor);
        let rel = if rel.is_finite() { rel } else { f64::INFINITY };
        worst = worst.max(rel);
        directions.push((an, fd, rel));
    }
    GradCheckReport {
        step: h,
        directions,
        max_rel_error: worst,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::optim::FnObjective;

    #[test]
    fn exact_gradient_passes_and_wrong_one_fails() {
        let good = FnObjective::new(3, |x: &[f64]| {
            let f = x[0].sin() * x[1] + x[2].powi(3);
            (f, vec![x[0].cos() * x[1], x[0].sin(), 3.0 * x[2] * x[2]])
        });
        let x = [0.3, -1.2, 0.8];
        assert!(check_gradient(&good, &x, 20, 1, 1e-5).passes(1e-6));
        let bad = FnObjective::new(3, |x: &[f64]| {
            let f = x[0].sin() * x[1] + x[2].powi(3);
            (f, vec![x[0].cos() * x[1], x[0].sin(), 2.9 * x[2] * x[2]])
        });
        assert!(!check_gradient(&bad, &x, 20, 1, 1e-5).passes(1e-3));
    }
}
