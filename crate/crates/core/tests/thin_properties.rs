//! Band solver: assembly identities, conservation, dissipation and determinism.

use std::f64::consts::PI;

use proptest::prelude::*;
use thinfilm::curve::CurveFamily;
use thinfilm::exec::Exec;
use thinfilm::thin::{DofMap, ThinGrid, ThinSolver, ThinState};
use thinfilm::time::Snapshots;
use thinfilm::{Scenario, ScenarioSpec};

fn static_circle(g0: f64, g1: f64, u0: &str, p: f64, t_end: f64) -> Scenario {
    ScenarioSpec::new("c", CurveFamily::Circle { radius: 1.0 }, p, t_end)
        .band(g0, g1)
        .thin_initial(u0)
        .build()
        .unwrap()
}

fn pulsating(u0: &str, t_end: f64) -> Scenario {
    ScenarioSpec::new(
        "pe",
        CurveFamily::PulsatingEllipse {
            a: 1.2,
            b: 0.9,
            amplitude: 0.15,
            omega: 2.0 * PI,
        },
        3.0,
        t_end,
    )
    .band(-0.5, "0.5 + 0.25*cos(theta)")
    .initial("1 + 0.5*cos(theta) + 0.3*sin(2*theta)")
    .thin_initial(u0)
    .build()
    .unwrap()
}

#[test]
fn mass_matrix_total_is_annulus_area() {
    let eps = 0.1;
    let sc = static_circle(0.0, 1.0, "1", 3.0, 1.0);
    let solver = ThinSolver::new(&sc, ThinGrid::new(32, 4, eps).unwrap()).unwrap();
    let geo = solver.geometry(0.0).unwrap();
    let sys = solver.assemble(&geo, None);
    let area = PI * ((1.0 + eps).powi(2) - 1.0);
    assert!((sys.mass.total() - area).abs() <= 1e-8 * area);
}

#[test]
fn stiffness_and_advection_annihilate_constant_tests() {
    let sc = pulsating("1 + sigma*cos(theta)", 1.0);
    let grid = ThinGrid::new(16, 5, 0.3).unwrap();
    let solver = ThinSolver::new(&sc, grid).unwrap();
    let geo = solver.geometry(0.37).unwrap();
    let u: Vec<f64> = (0..grid.dofs()).map(|k| (k as f64 * 0.61).sin()).collect();
    let sys = solver.assemble(&geo, Some(&u));
    // Column sums are the rows applied to the test function ψ ≡ 1.
    assert!(sys.advection.column_sums().iter().all(|s| s.abs() <= 1e-13));
    assert!(sys.stiffness.column_sums().iter().all(|s| s.abs() <= 1e-13));
}

#[test]
fn degenerate_coefficient_gives_zero_stiffness() {
    let sc = static_circle(0.0, 1.0, "2", 3.0, 1.0);
    let grid = ThinGrid::new(16, 4, 0.2).unwrap();
    let solver = ThinSolver::new(&sc, grid).unwrap();
    let geo = solver.geometry(0.0).unwrap();
    let sys = solver.assemble(&geo, Some(&vec![2.0; grid.dofs()]));
    assert_eq!(sys.stiffness.max_abs(), 0.0);
}

#[test]
fn constants_are_steady_on_static_bands() {
    let sc = static_circle(-0.5, 0.5, "1.75", 3.0, 0.1);
    let solver = ThinSolver::new(&sc, ThinGrid::new(16, 4, 0.2).unwrap()).unwrap();
    let s0 = solver.initial_state().unwrap();
    let s1 = solver.step(&s0, 0.01).unwrap();
    assert!(s1.u.iter().all(|u| (u - 1.75).abs() <= 1e-12));
}

#[test]
fn zero_data_gives_zero_trajectory() {
    let sc = pulsating("0", 0.05);
    let traj = ThinSolver::new(&sc, ThinGrid::new(16, 4, 0.2).unwrap())
        .unwrap()
        .solve(0.01, &Snapshots::Every(1))
        .unwrap();
    assert!(traj.snapshots.iter().all(|s| s.u.iter().all(|&u| u == 0.0)));
}

#[test]
fn mass_balance_with_a_source() {
    let sc = ScenarioSpec::new("src", CurveFamily::Ellipse { a: 1.3, b: 0.9 }, 2.5, 0.05)
        .band(-0.4, "0.6 + 0.1*sin(theta)")
        .initial("1 + 0.2*cos(theta)")
        .source("1 + sin(theta) * t")
        .build()
        .unwrap();
    let traj = ThinSolver::new(&sc, ThinGrid::new(16, 4, 0.2).unwrap())
        .unwrap()
        .solve(0.005, &Snapshots::Every(5))
        .unwrap();
    assert!(traj.mass_balance_drift() <= 1e-8, "{}", traj.mass_balance_drift());
}

#[test]
fn energy_does_not_increase_on_static_geometry() {
    let sc = static_circle(0.0, 1.0, "1 + exp(-(sigma-0.4)^2/0.05)*cos(theta)", 3.0, 0.05);
    let traj = ThinSolver::new(&sc, ThinGrid::new(16, 8, 0.5).unwrap())
        .unwrap()
        .solve(0.001, &Snapshots::Every(10))
        .unwrap();
    for w in traj.records.windows(2) {
        assert!(w[1].energy <= w[0].energy + 1e-10, "{} -> {}", w[0].energy, w[1].energy);
    }
}

#[test]
fn runs_are_bit_identical_across_policies_and_repeats() {
    let sc = pulsating("1 + 0.3*sigma*sin(theta)", 0.02);
    let grid = ThinGrid::new(16, 4, 0.2).unwrap();
    let run = |exec| {
        ThinSolver::new(&sc, grid)
            .unwrap()
            .with_exec(exec)
            .solve(0.005, &Snapshots::Every(1))
            .unwrap()
    };
    let a = run(Exec::Parallel);
    let b = run(Exec::Parallel);
    let c = run(Exec::Sequential);
    assert_eq!(a.snapshots, b.snapshots);
    assert_eq!(a.snapshots, c.snapshots);
    assert_eq!(a.records, c.records);
}

#[test]
fn step_rejects_bad_steps() {
    let sc = static_circle(0.0, 1.0, "1", 3.0, 0.1);
    let solver = ThinSolver::new(&sc, ThinGrid::new(16, 4, 0.2).unwrap()).unwrap();
    let s = solver.initial_state().unwrap();
    assert!(solver.step(&s, 0.0).is_err());
    assert!(solver.step(&s, 0.5).is_err());
}

#[test]
fn self_intersecting_band_is_refused() {
    // inward band reaching past the centre of the unit circle
    let sc = static_circle(-1.0, 0.0, "1", 3.0, 0.1);
    assert!(ThinSolver::new(&sc, ThinGrid::new(16, 4, 1.5).unwrap()).is_err());
    assert!(ThinSolver::new(&sc, ThinGrid::new(16, 4, 0.5).unwrap()).is_ok());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    /// Every step moves the total mass by exactly `Δt ∫ f`, here zero.
    #[test]
    fn each_step_conserves_mass(coeffs in prop::collection::vec(-1.0..1.0f64, 4), t0 in 0.0..0.4f64) {
        let sc = pulsating("1", 1.0);
        let grid = ThinGrid::new(12, 4, 0.25).unwrap();
        let solver = ThinSolver::new(&sc, grid).unwrap();
        let u: Vec<f64> = (0..grid.dofs())
            .map(|k| {
                let (i, j) = (k / grid.n_sigma, k % grid.n_sigma);
                let (th, s) = (grid.theta(i), grid.sigma(j));
                1.5 + coeffs[0] * th.cos() + coeffs[1] * s + coeffs[2] * (2.0 * th).sin() * s + coeffs[3] * s * s
            })
            .collect();
        let state = ThinState { t: t0, u, picard_iterations: 0, picard_update: 0.0 };
        let next = solver.step(&state, 0.01).unwrap();
        let before = solver.mass(&solver.geometry(t0).unwrap(), &state.u);
        let after = solver.mass(&solver.geometry(t0 + 0.01).unwrap(), &next.u);
        prop_assert!((after - before).abs() <= 1e-10 * before.abs());
    }

    #[test]
    fn band_ordering_round_trips(n_theta in 8usize..20, n_sigma in 3usize..7) {
        let grid = ThinGrid::new(n_theta, n_sigma, 0.1).unwrap();
        let map = DofMap::new(&grid);
        let v: Vec<f64> = (0..grid.dofs()).map(|k| k as f64).collect();
        prop_assert_eq!(map.from_band(&map.to_band(&v)), v);
    }
}
