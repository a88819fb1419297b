use super::*;
use crate::linalg;
use std::f64::consts::PI;

fn ellipsoid(g: &SphericalGrid, a: f64, b: f64, c: f64) -> SurfaceGrid {
    SurfaceGrid::from_fn(g, |t, p| [a * p.sin() * t.cos(), b * p.sin() * t.sin(), c * p.cos()])
}

fn lumpy(g: &SphericalGrid, s: f64) -> SurfaceGrid {
    SurfaceGrid::from_fn(g, |t, p| {
        let x = linalg::frame(t, p)[0];
        let r = 1.0 + s * (0.3 * x[0] * x[1] + 0.2 * x[2] - 0.1 * x[0] * x[2] * x[2]);
        linalg::scale(&x, r)
    })
}

fn small_cfg() -> MatchConfig {
    MatchConfig {
        t_count: 3,
        deg: 2,
        deg_bar: 2,
        outer: 2,
        ..MatchConfig::default()
    }
}

#[test]
fn mode_parsing_round_trips() {
    for m in [MatchMode::Param, MatchMode::Joint, MatchMode::Cd, MatchMode::Rigid] {
        assert_eq!(m.to_string().parse::<MatchMode>().unwrap(), m);
    }
    assert!(matches!("nope".parse::<MatchMode>(), Err(Error::Parse { .. })));
}

#[test]
fn config_validation() {
    let g = SphericalGrid::new(6, 5).unwrap();
    for bad in [
        MatchConfig { t_count: 1, ..small_cfg() },
        MatchConfig { deg: 0, ..small_cfg() },
        MatchConfig { step_fraction: 1.0, ..small_cfg() },
    ] {
        assert!(matches!(Matcher::new(&g, MetricWeights::SRNF, bad), Err(Error::InvalidParameter { .. })));
    }
}

#[test]
fn identical_inputs_have_zero_distance() {
    let g = SphericalGrid::new(8, 9).unwrap();
    let f = lumpy(&g, 1.0);
    for mode in [MatchMode::Param, MatchMode::Joint, MatchMode::Cd, MatchMode::Rigid] {
        let r = Matcher::new(&g, MetricWeights::BASE, small_cfg()).unwrap().run(mode, &f, &f).unwrap();
        assert!(r.distance < 1e-8, "{mode}: {}", r.distance);
        assert_eq!(r.init_index.unwrap_or(0), 0);
        assert_eq!(r.geodesic.frame(0).unwrap(), &f);
    }
}

#[test]
fn sphere_scaling_distance_and_optimality() {
    let g = SphericalGrid::new(24, 25).unwrap();
    let s1 = SurfaceGrid::unit_sphere(&g);
    let s2 = s1.scaled(2.0);
    let r = match_parametrized(&g, MetricWeights::SRNF, &s1, &s2, 4, 3).unwrap();
    let target = (4.0 * PI).sqrt();
    assert!((r.distance - target).abs() / target < 0.01, "{}", r.distance);
    assert!((r.distance * r.distance - r.energy).abs() <= 1e-12 * r.energy);
    let lin = linear_path_energy(&g, &s1, &s2, 4);
    assert!(r.energy <= lin);
    assert_eq!(r.geodesic.frame(0).unwrap(), &s1);
    assert_eq!(r.geodesic.frame(4).unwrap(), &s2);
}

fn linear_path_energy(g: &SphericalGrid, a: &SurfaceGrid, b: &SurfaceGrid, t: usize) -> f64 {
    crate::energy::linear_path(g, a, b, t)
        .unwrap()
        .energy(g, &MetricWeights::SRNF, DerivativeMode::Forward)
        .unwrap()
}

#[test]
fn outer_rounds_never_increase_energy() {
    let g = SphericalGrid::new(10, 11).unwrap();
    let f1 = lumpy(&g, 1.0);
    let f2 = ellipsoid(&g, 1.0, 0.9, 1.2);
    for mode in [MatchMode::Joint, MatchMode::Cd, MatchMode::Rigid] {
        let r = Matcher::new(&g, MetricWeights::SRNF, small_cfg()).unwrap().run(mode, &f1, &f2).unwrap();
        for w in r.outer_energies.windows(2) {
            assert!(w[1] <= w[0], "{mode}: {:?}", r.outer_energies);
        }
        assert!(r.gamma_total.jacobian(&g).unwrap().iter().all(|j| *j > 0.0));
    }
}

#[test]
fn zero_outer_rounds_reduce_to_parametrized() {
    let g = SphericalGrid::new(8, 9).unwrap();
    let f1 = lumpy(&g, 1.0);
    let f2 = ellipsoid(&g, 1.0, 0.9, 1.2);
    let cfg = MatchConfig { outer: 0, ..small_cfg() };
    let m = Matcher::new(&g, MetricWeights::SRNF, cfg).unwrap();
    let p = m.run(MatchMode::Param, &f1, &f2).unwrap();
    for mode in [MatchMode::Cd, MatchMode::Joint, MatchMode::Rigid] {
        let r = m.run(mode, &f1, &f2).unwrap();
        assert_eq!(r.distance, p.distance, "{mode}");
        assert!(r.gamma_total.is_identity());
    }
}

#[test]
fn unparametrized_distance_never_exceeds_parametrized() {
    let g = SphericalGrid::new(10, 11).unwrap();
    let f1 = lumpy(&g, 1.0);
    let f2 = lumpy(&g, -0.5).scaled(1.1);
    let m = Matcher::new(&g, MetricWeights::SRNF, small_cfg()).unwrap();
    let p = m.run(MatchMode::Param, &f1, &f2).unwrap();
    for mode in [MatchMode::Joint, MatchMode::Cd] {
        let r = m.run(mode, &f1, &f2).unwrap();
        assert!(r.distance <= p.distance * (1.0 + 1e-9), "{mode}: {} > {}", r.distance, p.distance);
    }
}
