use elastic_surfaces::diffeo::{jacobian_det, step_bound, DiffeoCoefficients};
use elastic_surfaces::energy::{linear_path, DerivativeMode, RotationParams};
use elastic_surfaces::io::{read_surface, write_surface, Encoding, ShapeSpec, TriMesh};
use elastic_surfaces::metric::kernel::{base_density, gram_det, split, split_energy, Mat32};
use elastic_surfaces::sphere::VectorFieldBasis;
use elastic_surfaces::{MetricWeights, SphericalGrid, SurfaceGrid};
use proptest::prelude::*;
use std::io::Cursor;

fn mat32() -> impl Strategy<Value = Mat32<f64>> {
    prop::array::uniform3(prop::array::uniform2(-2.0f64..2.0))
}

fn well_conditioned() -> impl Strategy<Value = Mat32<f64>> {
    mat32().prop_filter("full rank", |a| gram_det(a) > 1e-2)
}

fn weights() -> impl Strategy<Value = MetricWeights> {
    (0.0f64..2.0, 0.01f64..2.0, 0.0f64..2.0, 0.0f64..2.0).prop_map(|(a, b, c, d)| MetricWeights::new(a, b, c, d).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn split_parts_resum_and_are_orthogonal(a in well_conditioned(), xi in mat32()) {
        let parts = split(&a, &xi);
        for r in 0..3 {
            for c in 0..2 {
                let s: f64 = parts.iter().map(|p| p[r][c]).sum();
                prop_assert!((s - xi[r][c]).abs() <= 1e-10 * (1.0 + xi[r][c].abs()));
            }
        }
        let n: Vec<f64> = parts.iter().map(|p| base_density(&a, p, p)).collect();
        for i in 0..4 {
            for j in i + 1..4 {
                let cross = base_density(&a, &parts[i], &parts[j]);
                prop_assert!(cross.abs() <= 1e-9 * (n[i] * n[j]).sqrt().max(1e-12));
            }
        }
    }

    #[test]
    fn split_energy_is_the_weighted_sum_of_part_norms(a in well_conditioned(), xi in mat32(), w in weights()) {
        let parts = split(&a, &xi);
        let wts = w.as_array();
        let direct: f64 = (0..4).map(|i| wts[i] * base_density(&a, &parts[i], &parts[i])).sum();
        let closed = split_energy(&w, &a, &xi);
        prop_assert!((direct - closed).abs() <= 1e-9 * direct.abs().max(1e-12));
        prop_assert!(closed >= -1e-12);
    }

    #[test]
    fn split_energy_is_rotation_and_scale_invariant(a in well_conditioned(), xi in mat32(), r in prop::array::uniform3(-3.0f64..3.0), s in 0.2f64..5.0) {
        let w = MetricWeights::new(1.0, 0.7, 0.4, 0.3).unwrap();
        let m = RotationParams::new(r).matrix();
        let rot = |x: &Mat32<f64>| -> Mat32<f64> {
            std::array::from_fn(|i| std::array::from_fn(|c| (0..3).map(|k| m[i][k] * x[k][c]).sum()))
        };
        let e = split_energy(&w, &a, &xi);
        let er = split_energy(&w, &rot(&a), &rot(&xi));
        prop_assert!((e - er).abs() <= 1e-10 * e.abs().max(1e-12));
        // G is invariant under α → sα together with ξ → sξ up to the area factor s²
        let sa: Mat32<f64> = a.map(|row| row.map(|v| s * v));
        let sx: Mat32<f64> = xi.map(|row| row.map(|v| s * v));
        let es = split_energy(&w, &sa, &sx);
        prop_assert!((es - s * s * e).abs() <= 1e-9 * (s * s * e).abs().max(1e-12));
    }

    #[test]
    fn rotations_are_orthogonal(r in prop::array::uniform3(-4.0f64..4.0)) {
        let m = RotationParams::new(r).matrix();
        for i in 0..3 {
            for j in 0..3 {
                let d: f64 = (0..3).map(|k| m[i][k] * m[j][k]).sum();
                let expected = if i == j { 1.0 } else { 0.0 };
                prop_assert!((d - expected).abs() < 1e-12);
            }
        }
        let det = m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
        prop_assert!((det - 1.0).abs() < 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn grid_indexing_round_trips(nt in 4usize..40, np in 3usize..40) {
        let g = SphericalGrid::new(nt, np).unwrap();
        for p in 0..g.n_points() {
            let (i, j) = g.row_col(p);
            prop_assert_eq!(g.index(i, j), p);
        }
        let total: f64 = (0..g.n_points()).map(|p| g.weight_at(p)).sum();
        prop_assert!((total - g.total_weight()).abs() < 1e-12);
    }

    #[test]
    fn grid_files_round_trip_bit_identically(nt in 4usize..12, np in 3usize..10, seed in any::<u64>(), csv in any::<bool>()) {
        let g = SphericalGrid::new(nt, np).unwrap();
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let pts = (0..g.n_points())
            .map(|_| std::array::from_fn(|_| rng.random_range(-1e3..1e3) * rng.random::<f64>()))
            .collect();
        let f = SurfaceGrid::new(&g, pts).unwrap();
        let enc = if csv { Encoding::Csv } else { Encoding::F64le };
        let mut buf = Vec::new();
        write_surface(&mut buf, &g, &f, enc).unwrap();
        let (g2, f2) = read_surface(&mut Cursor::new(buf)).unwrap();
        prop_assert_eq!(g2, g);
        prop_assert_eq!(f2, f);
    }

    #[test]
    fn meshes_are_closed_genus_zero(nt in 4usize..30, np in 3usize..30) {
        let g = SphericalGrid::new(nt, np).unwrap();
        let m = TriMesh::from_grid(&g, &SurfaceGrid::unit_sphere(&g)).unwrap();
        prop_assert_eq!(m.euler_characteristic(), 2);
        prop_assert!(m.is_closed_oriented());
    }

    #[test]
    fn shape_specs_round_trip(a in 0.2f64..3.0, b in 0.2f64..3.0, c in 0.2f64..3.0, bend in -0.5f64..0.5, twist in -2.0f64..2.0) {
        for spec in [
            ShapeSpec::Ellipsoid { a, b, c },
            ShapeSpec::Cylinder { radius: 0.4, half_length: a, bend, twist, cap: 3 },
            ShapeSpec::Sphere { radius: b },
        ] {
            prop_assert_eq!(spec.to_string().parse::<ShapeSpec>().unwrap(), spec);
        }
    }

    #[test]
    fn certified_steps_keep_the_jacobian_positive(seed in any::<u64>(), amp in 0.05f64..3.0) {
        use rand::{Rng, SeedableRng};
        let g = SphericalGrid::new(10, 11).unwrap();
        let vb = VectorFieldBasis::new(&g, 3).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let xv: Vec<f64> = (0..vb.len()).map(|_| amp * rng.random_range(-1.0..1.0)).collect();
        let c = DiffeoCoefficients::new(&vb, xv).unwrap();
        let t = 0.99 * step_bound(&g, &vb, &c);
        prop_assert!(jacobian_det(&g, &vb, &c, t).iter().all(|d| *d > 0.0));
    }

    #[test]
    fn linear_path_energy_is_translation_invariant_and_reversible(s in 0.5f64..2.0, v in prop::array::uniform3(-3.0f64..3.0)) {
        let g = SphericalGrid::new(8, 9).unwrap();
        let w = MetricWeights::new(1.0, 0.5, 1.0, 0.2).unwrap();
        let f1 = SurfaceGrid::from_fn(&g, |t, p| [p.sin() * t.cos(), 0.8 * p.sin() * t.sin(), 1.2 * p.cos()]);
        let f2 = f1.scaled(s).map(|x| [x[0] + 0.1 * x[2] * x[2], x[1], x[2]]);
        let path = linear_path(&g, &f1, &f2, 4).unwrap();
        let e = path.energy(&g, &w, DerivativeMode::Central).unwrap();
        let moved = linear_path(&g, &f1.translated(v), &f2.translated(v), 4).unwrap();
        prop_assert!((moved.energy(&g, &w, DerivativeMode::Central).unwrap() - e).abs() <= 1e-10 * e.max(1e-12));
        let back = path.reversed().energy(&g, &w, DerivativeMode::Central).unwrap();
        prop_assert!((back - e).abs() <= 1e-10 * e.max(1e-12));
    }
}
