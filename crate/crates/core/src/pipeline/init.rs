use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::diffeo::{ComposedMap, Interpolation};
use crate::energy::{frobenius_gap, mat_mul, Mat3};
use crate::error::Result;
use crate::metric::{srnf, srnf_l2_distance};
use crate::sphere::{SphericalGrid, SurfaceGrid};

/// The 60 orientation-preserving symmetries of the icosahedron.
///
/// Generated by closing a 5-fold turn about `(0, 1, φ)`, the coordinate
/// half-turns and the cyclic axis permutation; the identity comes first and
/// the order is fixed.
pub fn icosahedral_rotations() -> Vec<Mat3> {
    let gold = (1.0 + 5f64.sqrt()) / 2.0;
    let axis = {
        let n = (1.0 + gold * gold).sqrt();
        [0.0, 1.0 / n, gold / n]
    };
    let five = crate::energy::rotation_matrix(&axis.map(|a| a * std::f64::consts::TAU / 5.0));
    let gens: [Mat3; 3] = [
        five,
        [[0.0, 1.0, 0.0], [0.0, 0.0, 1.0], [1.0, 0.0, 0.0]],
        [[1.0, 0.0, 0.0], [0.0, -1.0, 0.0], [0.0, 0.0, -1.0]],
    ];
    let mut out: Vec<Mat3> = vec![[[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]];
    let mut k = 0;
    while k < out.len() {
        for g in &gens {
            let m = mat_mul(g, &out[k]);
            if !out.iter().any(|e| frobenius_gap(e, &m) < 1e-9) {
                out.push(m);
            }
        }
        k += 1;
    }
    debug_assert_eq!(out.len(), 60);
    out
}

/// Result of the 60-way search.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RotationInit {
    /// Index into [`icosahedral_rotations`].
    pub index: usize,
    pub matrix: Mat3,
    /// SRNF mismatch of every candidate.
    pub scores: Vec<f64>,
}

impl RotationInit {
    /// The selected rotation as a reparametrization.
    pub fn to_map(&self) -> ComposedMap {
        let mut m = ComposedMap::identity();
        if self.index != 0 {
            m.push_rotation(self.matrix);
        }
        m
    }
}

/// Picks the icosahedral rotation `h` minimizing `‖q(f1∘h) − q(f2)‖`, where
/// `h` acts on the parameter sphere. Ties go to the lowest index.
pub fn initialize_reparam(
    grid: &SphericalGrid,
    f1: &SurfaceGrid,
    f2: &SurfaceGrid,
    method: Interpolation,
) -> Result<RotationInit> {
    let q2 = srnf(grid, f2)?;
    let rots = icosahedral_rotations();
    let scores: Vec<f64> = rots
        .par_iter()
        .map(|r| {
            let mut m = ComposedMap::identity();
            m.push_rotation(*r);
            m.resample(grid, f1, method)
                .and_then(|s| srnf(grid, &s))
                .map(|q| srnf_l2_distance(grid, &q, &q2))
                .unwrap_or(f64::INFINITY)
        })
        .collect();
    let index = argmin(&scores);
    Ok(RotationInit {
        index,
        matrix: rots[index],
        scores,
    })
}

/// Picks the icosahedral rotation `R` minimizing `‖q(f1) − R q(f2)‖`, i.e.
/// the ambient rotation of `f2` that best aligns it with `f1`.
pub fn initialize_rotation(grid: &SphericalGrid, f1: &SurfaceGrid, f2: &SurfaceGrid) -> Result<RotationInit> {
    let q1 = srnf(grid, f1)?;
    let q2 = srnf(grid, f2)?;
    let rots = icosahedral_rotations();
    let scores: Vec<f64> = rots
        .iter()
        .map(|r| {
            let s: f64 = q1
                .values()
                .iter()
                .zip(q2.values())
                .enumerate()
                .map(|(p, (a, b))| {
                    let rb = crate::linalg::mat_vec(r, b);
                    let d = crate::linalg::sub(a, &rb);
                    crate::linalg::dot(&d, &d) * grid.weight_at(p)
                })
                .sum();
            s.sqrt()
        })
        .collect();
    let index = argmin(&scores);
    Ok(RotationInit {
        index,
        matrix: rots[index],
        scores,
    })
}

fn argmin(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, &s) in v.iter().enumerate() {
        if s < v[best] {
            best = i;
        }
    }
    best
}

/// Axis-angle vector of a rotation matrix.
pub fn rotation_log(r: &Mat3) -> [f64; 3] {
    let v = [r[2][1] - r[1][2], r[0][2] - r[2][0], r[1][0] - r[0][1]];
    let s2 = crate::linalg::norm(&v);
    let c = (r[0][0] + r[1][1] + r[2][2] - 1.0) / 2.0;
    let th = (0.5 * s2).atan2(c);
    if th < 1e-8 {
        return v.map(|x| x / 2.0);
    }
    if s2 > 1e-10 {
        return v.map(|x| x / s2 * th);
    }
    // a half-turn: R = 2nnᵀ − I
    let k = (0..3).max_by(|&a, &b| r[a][a].total_cmp(&r[b][b])).unwrap_or(0);
    let nk = ((r[k][k] + 1.0) / 2.0).max(0.0).sqrt();
    let mut axis = [0.0; 3];
    for (i, a) in axis.iter_mut().enumerate() {
        *a = if i == k { nk } else { (r[k][i] + r[i][k]) / (4.0 * nk) };
    }
    let n = crate::linalg::norm(&axis);
    axis.map(|a| a / n * th)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::energy::{transpose, RotationParams};
    use crate::linalg;

    #[test]
    fn sixty_distinct_rotations_closed_under_products() {
        let rots = icosahedral_rotations();
        assert_eq!(rots.len(), 60);
        let eye = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
        assert!(frobenius_gap(&rots[0], &eye) < 1e-15);
        for a in rots.iter().step_by(7) {
            assert!(frobenius_gap(&mat_mul(a, &transpose(a)), &eye) < 1e-12);
            for b in rots.iter().step_by(5) {
                let m = mat_mul(a, b);
                assert!(rots.iter().any(|e| frobenius_gap(e, &m) < 1e-9));
            }
        }
        // the traces of the 60 elements: 1 + 2cos(angle)
        let mut counts = std::collections::BTreeMap::new();
        for r in &rots {
            let t = ((r[0][0] + r[1][1] + r[2][2]) * 1e6).round() as i64;
            *counts.entry(t).or_insert(0) += 1;
        }
        assert_eq!(counts.values().copied().collect::<Vec<_>>().iter().sum::<i32>(), 60);
        assert_eq!(counts.get(&3_000_000), Some(&1));
        assert_eq!(counts.get(&-1_000_000), Some(&15));
        assert_eq!(counts.get(&0), Some(&20));
    }

    #[test]
    fn log_inverts_exp() {
        for r in [[0.1, -0.2, 0.3], [1.0, 2.0, -0.5], [0.0, 0.0, 3.1], [1e-9, 0.0, 0.0], [0.0, 3.14159, 0.0], [0.0, std::f64::consts::PI, 0.0]] {
            let m = RotationParams::new(r).matrix();
            let back = RotationParams::new(rotation_log(&m)).matrix();
            assert!(frobenius_gap(&m, &back) < 1e-6, "{r:?} {:?}", rotation_log(&m));
        }
    }

    fn lumpy(g: &SphericalGrid) -> SurfaceGrid {
        SurfaceGrid::from_fn(g, |t, p| {
            let x = linalg::frame(t, p)[0];
            let r = 1.0 + 0.3 * x[0] + 0.2 * x[1] * x[1] - 0.15 * x[2] * x[1] + 0.1 * x[2].powi(3);
            linalg::scale(&x, r)
        })
    }

    #[test]
    fn identity_selected_for_identical_inputs() {
        let g = SphericalGrid::new(16, 17).unwrap();
        let f = lumpy(&g);
        let init = initialize_reparam(&g, &f, &f, Interpolation::Spectral).unwrap();
        assert_eq!(init.index, 0);
        assert!(init.to_map().is_identity());
    }

    #[test]
    fn recovers_a_group_element() {
        let g = SphericalGrid::new(24, 25).unwrap();
        let f = lumpy(&g);
        let rots = icosahedral_rotations();
        for k in [5, 23, 41] {
            let mut m = ComposedMap::identity();
            m.push_rotation(rots[k]);
            let f2 = m.resample(&g, &f, Interpolation::Spectral).unwrap();
            let init = initialize_reparam(&g, &f, &f2, Interpolation::Spectral).unwrap();
            assert_eq!(init.index, k);
        }
    }

    #[test]
    fn ambient_rotation_alignment() {
        let g = SphericalGrid::new(16, 17).unwrap();
        let f = lumpy(&g);
        let rots = icosahedral_rotations();
        let f2 = f.transformed(&rots[17]);
        let init = initialize_rotation(&g, &f, &f2).unwrap();
        assert!(frobenius_gap(&mat_mul(&init.matrix, &rots[17]), &rots[0]) < 1e-9);
    }
}
