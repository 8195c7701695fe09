//! Weighted averages: linearity, positivity, the pairing identity, lifting round trips
//! and the space-time error norms.

use std::f64::consts::TAU;

use proptest::prelude::*;
use thinfilm::averaging::{self, AveragedSnapshot, AveragedTrace};
use thinfilm::curve::CurveFamily;
use thinfilm::geometry;
use thinfilm::surface::{SurfaceState, SurfaceTrajectory};
use thinfilm::thin::ThinGrid;
use thinfilm::time::TimeGrid;
use thinfilm::{Error, Scenario, ScenarioSpec};

fn ellipse_band() -> Scenario {
    ScenarioSpec::new("e", CurveFamily::Ellipse { a: 1.3, b: 0.8 }, 3.0, 1.0)
        .band("-0.4 + 0.1*sin(theta)", "0.6 + 0.05*cos(2*theta)")
        .initial("1 + 0.4*cos(theta) - 0.2*sin(3*theta)")
        .build()
        .unwrap()
}

fn field(grid: &ThinGrid, coeffs: &[f64]) -> Vec<f64> {
    (0..grid.dofs())
        .map(|k| {
            let (i, j) = (k / grid.n_sigma, k % grid.n_sigma);
            let (th, s) = (grid.theta(i), grid.sigma(j));
            coeffs[0] + coeffs[1] * th.cos() + coeffs[2] * s + coeffs[3] * (3.0 * th).sin() * s * s
        })
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn pairing_identity(coeffs in prop::collection::vec(-2.0..2.0f64, 4), eta in prop::array::uniform3(-1.0..1.0f64), eps in 0.05..0.4f64) {
        let sc = ellipse_band();
        let grid = ThinGrid::new(20, 5, eps).unwrap();
        let u = field(&grid, &coeffs);
        let (band, curve) = averaging::pairing_sides(&sc, &grid, &u, 0.0, |th| {
            eta[0] + eta[1] * th.sin() + eta[2] * (2.0 * th).cos()
        })
        .unwrap();
        prop_assert!((band - curve).abs() <= 1e-10 * band.abs().max(1.0), "{} vs {}", band, curve);
    }

    #[test]
    fn average_is_linear(c1 in prop::collection::vec(-2.0..2.0f64, 4), c2 in prop::collection::vec(-2.0..2.0f64, 4), alpha in -3.0..3.0f64) {
        let sc = ellipse_band();
        let grid = ThinGrid::new(16, 4, 0.2).unwrap();
        let (u1, u2) = (field(&grid, &c1), field(&grid, &c2));
        let mix: Vec<f64> = u1.iter().zip(&u2).map(|(a, b)| alpha * a + b).collect();
        let m1 = averaging::weighted_average(&sc, &grid, &u1, 0.0).unwrap();
        let m2 = averaging::weighted_average(&sc, &grid, &u2, 0.0).unwrap();
        let mm = averaging::weighted_average(&sc, &grid, &mix, 0.0).unwrap();
        for i in 0..grid.n_theta {
            prop_assert!((mm[i] - (alpha * m1[i] + m2[i])).abs() <= 1e-12 * (1.0 + mm[i].abs()));
        }
    }

    #[test]
    fn average_is_positive(values in prop::collection::vec(0.0..5.0f64, 64)) {
        let sc = ellipse_band();
        let grid = ThinGrid::new(16, 4, 0.3).unwrap();
        let avg = averaging::weighted_average(&sc, &grid, &values, 0.0).unwrap();
        prop_assert!(avg.iter().all(|v| *v >= 0.0));
    }

    #[test]
    fn lifting_round_trip(c in prop::collection::vec(-1.0..1.0f64, 4), eps in 0.05..0.4f64) {
        let text = format!("{} + {}*theta + {}*theta^2 + {}*theta^3", 1.0 + c[0].abs(), c[1], c[2], c[3] / 10.0);
        let sc = ScenarioSpec::new("l", CurveFamily::Ellipse { a: 1.3, b: 0.8 }, 3.0, 1.0)
            .band(-0.4, "0.6 + 0.1*cos(theta)")
            .initial(text.as_str())
            .build()
            .unwrap();
        let thetas: Vec<f64> = (0..24).map(|i| i as f64 * TAU / 24.0).collect();
        let back = averaging::weighted_average_fn(&sc, eps, 0.0, &thetas, |th, s| {
            averaging::lift_initial(&sc, eps, th, s).unwrap()
        })
        .unwrap();
        for (th, v) in thetas.iter().zip(back) {
            prop_assert!((v - sc.initial_value(*th)).abs() <= 1e-12);
        }
    }
}

/// `M_ε` of a constant extension differs from the extended function by `O(ε)`.
#[test]
fn constant_extension_error_halves_with_eps() {
    let sc = ellipse_band();
    let eta = |th: f64| 1.0 + 0.5 * th.sin();
    let thetas: Vec<f64> = (0..32).map(|i| i as f64 * TAU / 32.0).collect();
    let err = |eps: f64| {
        averaging::weighted_average_fn(&sc, eps, 0.0, &thetas, |th, _| eta(th))
            .unwrap()
            .iter()
            .zip(&thetas)
            .map(|(m, th)| (m - eta(*th)).abs())
            .fold(0.0, f64::max)
    };
    let ladder: Vec<f64> = [0.4, 0.2, 0.1, 0.05].iter().map(|&e| err(e)).collect();
    for w in ladder.windows(2) {
        let ratio = w[1] / w[0];
        assert!((ratio - 0.5).abs() < 0.02, "{ladder:?}");
    }
}

#[test]
fn normal_derivative_of_the_distance_is_the_average_of_one() {
    let sc = ellipse_band();
    let grid = ThinGrid::new(16, 6, 0.2).unwrap();
    let mut d = vec![0.0; grid.dofs()];
    for i in 0..grid.n_theta {
        for j in 0..grid.n_sigma {
            d[grid.node(i, j)] = geometry::thin_map(&sc, 0.2, grid.theta(i), grid.sigma(j), 0.0).unwrap().r;
        }
    }
    let zeta = averaging::normal_average(&sc, &grid, &d, 0.0).unwrap();
    let ones = averaging::weighted_average(&sc, &grid, &vec![1.0; grid.dofs()], 0.0).unwrap();
    for (z, o) in zeta.iter().zip(ones) {
        assert!((z - o).abs() < 1e-12);
    }
}

fn unit_circle() -> Scenario {
    ScenarioSpec::new("u", CurveFamily::Circle { radius: 1.0 }, 3.0, 1.0)
        .band(0.0, 1.0)
        .build()
        .unwrap()
}

fn traces(n: usize, shift: f64, times: &[f64]) -> (AveragedTrace, SurfaceTrajectory) {
    let v: Vec<f64> = (0..n).map(|i| (i as f64).cos()).collect();
    let snaps = times
        .iter()
        .map(|&t| AveragedSnapshot {
            t,
            v: v.iter().map(|x| x + shift).collect(),
            zeta: vec![0.0; n],
            flux: vec![[0.0; 2]; n],
            flux_diagnostic: vec![0.0; n],
        })
        .collect();
    let states = times
        .iter()
        .map(|&t| SurfaceState {
            t,
            v: v.clone(),
            zeta: vec![0.0; 2 * n],
            zeta_nodal: vec![0.0; n],
            picard_iterations: 0,
            picard_update: 0.0,
            zeta_residual: 0.0,
        })
        .collect();
    (
        AveragedTrace { n_theta: n, eps: 0.1, snapshots: snaps },
        SurfaceTrajectory {
            n_theta: n,
            time: TimeGrid::new(1.0, 0.1).unwrap(),
            p: 3.0,
            snapshots: states,
            records: Vec::new(),
        },
    )
}

#[test]
fn error_norm_examples() {
    let sc = unit_circle();
    let times: Vec<f64> = (0..=10).map(|k| k as f64 / 10.0).collect();
    let (same, limit) = traces(32, 0.0, &times);
    let e = averaging::error_norms(&sc, &same, &limit).unwrap();
    assert_eq!((e.v_l2, e.zeta_l2, e.flux_diagnostic_l2), (0.0, 0.0, 0.0));

    let c = 0.37;
    let (shifted, limit) = traces(32, c, &times);
    let e = averaging::error_norms(&sc, &shifted, &limit).unwrap();
    assert!((e.v_l2 - c * TAU.sqrt()).abs() < 1e-12, "{}", e.v_l2);
    assert!((e.v_sup_l2 - c * TAU.sqrt()).abs() < 1e-12);
}

#[test]
fn misaligned_snapshots_are_refused() {
    let sc = unit_circle();
    let (trace, _) = traces(16, 0.0, &[0.0, 0.5, 1.0]);
    let (_, limit) = traces(16, 0.0, &[0.0, 0.4, 1.0]);
    assert!(matches!(averaging::error_norms(&sc, &trace, &limit), Err(Error::Misaligned(_))));
    let (_, short) = traces(16, 0.0, &[0.0, 1.0]);
    assert!(matches!(averaging::error_norms(&sc, &trace, &short), Err(Error::Misaligned(_))));
    let (_, coarse) = traces(8, 0.0, &[0.0, 0.5, 1.0]);
    assert!(averaging::error_norms(&sc, &trace, &coarse).is_err());
}
