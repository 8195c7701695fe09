//! Curve solver: exact solutions, conservation, the p = 2 reduction and Picard
//! initialization independence.

use std::f64::consts::{PI, TAU};

use proptest::prelude::*;
use thinfilm::curve::CurveFamily;
use thinfilm::surface::{solve_zeta, zeta_residual, SurfaceSolver};
use thinfilm::time::Snapshots;
use thinfilm::{Scenario, ScenarioSpec};

fn pulsating(p: f64, t_end: f64) -> Scenario {
    ScenarioSpec::new(
        "pe",
        CurveFamily::PulsatingEllipse {
            a: 1.2,
            b: 0.9,
            amplitude: 0.15,
            omega: TAU,
        },
        p,
        t_end,
    )
    .band(-0.5, "0.5 + 0.25*cos(theta)")
    .initial("1 + 0.5*cos(theta) + 0.3*sin(2*theta)")
    .build()
    .unwrap()
}

#[test]
fn expanding_circle_follows_the_ode() {
    let sc = ScenarioSpec::new(
        "x",
        CurveFamily::ExpandingCircle {
            radius: 1.0,
            rate: 0.5,
        },
        3.0,
        1.0,
    )
    .band(0.0, 1.0)
    .initial(3.0)
    .build()
    .unwrap();
    let traj = SurfaceSolver::new(&sc, 32).unwrap().solve(0.01, &Snapshots::Every(10)).unwrap();
    for s in &traj.snapshots {
        let exact = 3.0 / (1.0 + 0.5 * s.t);
        assert!(s.v.iter().all(|v| (v - exact).abs() < 1e-3), "t = {}", s.t);
    }
    let last = traj.final_state();
    assert!(last.zeta.iter().all(|z| (z + 1.0).abs() < 1e-3));
    for r in &traj.records {
        // v · 2πR(t) = 6π
        assert!((r.conserved - 6.0 * PI).abs() <= 1e-10 * 6.0 * PI);
    }
}

#[test]
fn static_geometry_has_zero_zeta() {
    let sc = ScenarioSpec::new("e", CurveFamily::Ellipse { a: 1.3, b: 0.7 }, 3.0, 0.05)
        .band(0.0, 1.0)
        .initial("1 + cos(theta)")
        .build()
        .unwrap();
    let traj = SurfaceSolver::new(&sc, 32).unwrap().solve(0.01, &Snapshots::Every(1)).unwrap();
    assert!(traj.snapshots.iter().all(|s| s.zeta.iter().all(|&z| z == 0.0)));
}

#[test]
fn conserved_quantity_on_moving_curves() {
    for p in [2.0, 3.0, 4.5] {
        let sc = pulsating(p, 0.2);
        let traj = SurfaceSolver::new(&sc, 48).unwrap().solve(0.002, &Snapshots::Every(50)).unwrap();
        assert!(traj.conservation_drift() <= 1e-10, "p = {p}: {}", traj.conservation_drift());
        assert!(traj.max_zeta_residual() <= 1e-12, "p = {p}");
    }
}

#[test]
fn zeta_residual_holds_after_every_step() {
    let sc = pulsating(3.0, 0.1);
    let traj = SurfaceSolver::new(&sc, 32).unwrap().solve(0.005, &Snapshots::Every(1)).unwrap();
    for s in &traj.snapshots {
        assert!(s.zeta_residual <= 1e-12, "t = {}: {}", s.t, s.zeta_residual);
    }
}

#[test]
fn picard_result_does_not_depend_on_the_initial_guess() {
    let sc = pulsating(3.0, 0.5);
    let solver = SurfaceSolver::new(&sc, 48).unwrap();
    let mut state = solver.initial_state().unwrap();
    for _ in 0..5 {
        state = solver.step(&state, 0.01).unwrap();
    }
    let a = solver.step_with_guess(&state, 0.01, &state.v).unwrap();
    let wild: Vec<f64> = state.v.iter().enumerate().map(|(i, v)| v + (i as f64).sin()).collect();
    let b = solver.step_with_guess(&state, 0.01, &wild).unwrap();
    let gap = a.v.iter().zip(&b.v).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
    assert!(gap <= 1e-9, "{gap}");
}

#[test]
fn trajectories_are_deterministic() {
    let sc = pulsating(3.0, 0.05);
    let run = || SurfaceSolver::new(&sc, 32).unwrap().solve(0.005, &Snapshots::Every(1)).unwrap();
    assert_eq!(run().snapshots, run().snapshots);
}

/// Periodic P1 heat equation on the static unit circle, assembled in closed form and
/// solved densely: `(M + Δt K) v⁺ = M v`.
fn heat_oracle(n: usize, dt: f64, steps: usize) -> Vec<f64> {
    let h = TAU / n as f64;
    let mut a = vec![vec![0.0; n]; n];
    for e in 0..n {
        let (i, j) = (e, (e + 1) % n);
        a[i][i] += 2.0 * h / 6.0 + dt / h;
        a[j][j] += 2.0 * h / 6.0 + dt / h;
        a[i][j] += h / 6.0 - dt / h;
        a[j][i] += h / 6.0 - dt / h;
    }
    let mass = |v: &[f64]| -> Vec<f64> {
        (0..n)
            .map(|i| h / 6.0 * (4.0 * v[i] + v[(i + 1) % n] + v[(i + n - 1) % n]))
            .collect()
    };
    let mut v: Vec<f64> = (0..n).map(|i| (i as f64 * h).cos()).collect();
    for _ in 0..steps {
        let mut m = a.clone();
        let mut b = mass(&v);
        for k in 0..n {
            let piv = (k..n).max_by(|&x, &y| m[x][k].abs().total_cmp(&m[y][k].abs())).unwrap();
            m.swap(k, piv);
            b.swap(k, piv);
            for r in k + 1..n {
                let f = m[r][k] / m[k][k];
                let pivot_row = m[k].clone();
                for (x, y) in m[r][k..].iter_mut().zip(&pivot_row[k..]) {
                    *x -= f * y;
                }
                b[r] -= f * b[k];
            }
        }
        for k in (0..n).rev() {
            let s: f64 = (k + 1..n).map(|c| m[k][c] * b[c]).sum();
            b[k] = (b[k] - s) / m[k][k];
        }
        v = b;
    }
    v
}

#[test]
fn p2_matches_an_independent_heat_solve() {
    let sc = ScenarioSpec::new("h", CurveFamily::Circle { radius: 1.0 }, 2.0, 0.2)
        .band(0.0, 1.0)
        .initial("cos(theta)")
        .build()
        .unwrap();
    let traj = SurfaceSolver::new(&sc, 32).unwrap().solve(0.002, &Snapshots::Every(100)).unwrap();
    let oracle = heat_oracle(32, 0.002, 100);
    let got = &traj.final_state().v;
    let gap = got.iter().zip(&oracle).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    assert!(gap <= 1e-10, "{gap}");
    // and both are close to e^{-t} cos θ
    assert!((got[0] - (-0.2f64).exp()).abs() < 1e-3);
}

/// Plain bisection on the monotone residual.
fn bisect_zeta(a: f64, b: f64, p: f64) -> f64 {
    let m = b.abs().powf(1.0 / (p - 1.0));
    let (mut lo, mut hi) = (-m - 1e-300, m + 1e-300);
    for _ in 0..400 {
        let mid = 0.5 * (lo + hi);
        if zeta_residual(a, b, p, mid) > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn zeta_agrees_with_bisection(a in 0.0..10.0f64, b in -10.0..10.0f64, p in 2.1..6.0f64) {
        let z = solve_zeta(a, b, p);
        prop_assert!((z - bisect_zeta(a, b, p)).abs() <= 1e-10);
    }

    #[test]
    fn zeta_is_odd(a in 0.0..10.0f64, b in -10.0..10.0f64, p in 2.0..6.0f64) {
        prop_assert!((solve_zeta(a, -b, p) + solve_zeta(a, b, p)).abs() <= 1e-12);
    }

    #[test]
    fn zeta_is_decreasing(a in 0.0..10.0f64, b in prop::array::uniform2(-10.0..10.0f64), p in 2.0..6.0f64) {
        let (b1, b2) = (b[0].min(b[1]), b[0].max(b[1]));
        prop_assume!(b1 < b2);
        prop_assert!(solve_zeta(a, b1, p) > solve_zeta(a, b2, p));
    }
}
