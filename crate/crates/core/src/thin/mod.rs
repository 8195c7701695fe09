//! The band problem, pulled back to the fixed periodic reference rectangle.
//!
//! With test functions that are fixed in reference coordinates, the weak form reads
//! `d/dt ∫ u ψ + ∫ |∇u|^{p−2} ∇u·∇ψ + ∫ u w·∇ψ = ∫ f ψ`, where `w = ∂_t Ψ` is the
//! velocity of the reference map. The flux condition on both faces is natural, so no
//! boundary integral appears. Implicit Euler gives
//! `M(t⁺) U⁺ + Δt [A(U⁺) + B(t⁺)] U⁺ = M(t) U + Δt F(t⁺)`,
//! solved by lagging the coefficient `|∇u|^{p−2}`. Because constants lie in the test
//! space and both `A` and `B` annihilate them, total mass changes by exactly `Δt ΣF`.

mod assembly;
mod grid;

pub use assembly::{LevelGeometry, QuadPoint, ThinSystem};
pub use grid::{DofMap, ThinField, ThinGrid};

use serde::Serialize;

use crate::averaging;
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::geometry;
use crate::scenario::Scenario;
use crate::time::{PicardOptions, Snapshots, TimeGrid};

/// Nodal solution `U = u ∘ Ψ` at one time level.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ThinState {
    pub t: f64,
    pub u: Vec<f64>,
    pub picard_iterations: usize,
    pub picard_update: f64,
}

/// Per-level diagnostics of a thin solve.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ThinStepRecord {
    pub t: f64,
    /// `∫ u dx`
    pub mass: f64,
    /// `∫ |∇u|^p / p dx`
    pub energy: f64,
    /// `∫ f dx` at this level
    pub source_total: f64,
    pub picard_iterations: usize,
    pub picard_update: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct ThinTrajectory {
    pub grid: ThinGrid,
    pub time: TimeGrid,
    pub p: f64,
    pub snapshots: Vec<ThinState>,
    pub records: Vec<ThinStepRecord>,
}

impl ThinTrajectory {
    /// Relative violation of `mass(T) = mass(0) + Σ Δt ∫f`.
    pub fn mass_balance_drift(&self) -> f64 {
        relative_balance(&self.records, self.time.dt, |r| (r.mass, r.source_total))
    }

    pub fn max_picard_iterations(&self) -> usize {
        self.records.iter().map(|r| r.picard_iterations).max().unwrap_or(0)
    }

    pub fn final_state(&self) -> &ThinState {
        self.snapshots.last().expect("trajectory has the initial snapshot")
    }

    pub fn snapshot_times(&self) -> Vec<f64> {
        self.snapshots.iter().map(|s| s.t).collect()
    }
}

/// Relative drift of a conserved quantity `q` with production rate `s`:
/// `|q(T) − q(0) − Σ Δt s(t_n)|`, scaled by `max(|q(0)|, Δt Σ|s|, tiny)`.
pub(crate) fn relative_balance<R>(records: &[R], dt: f64, f: impl Fn(&R) -> (f64, f64)) -> f64 {
    let Some(first) = records.first() else {
        return 0.0;
    };
    let (q0, _) = f(first);
    let (qn, _) = f(records.last().unwrap());
    let produced: f64 = records[1..].iter().map(|r| dt * f(r).1).sum();
    let produced_abs: f64 = records[1..].iter().map(|r| dt * f(r).1.abs()).sum();
    let scale = q0.abs().max(produced_abs);
    let residual = (qn - q0 - produced).abs();
    if scale == 0.0 {
        residual
    } else {
        residual / scale
    }
}

pub struct ThinSolver<'a> {
    scenario: &'a Scenario,
    grid: ThinGrid,
    dofs: DofMap,
    picard: PicardOptions,
    exec: Exec,
}

impl<'a> ThinSolver<'a> {
    pub fn new(scenario: &'a Scenario, grid: ThinGrid) -> Result<Self> {
        geometry::check_band(scenario, grid.eps, grid.n_theta.max(64), 17)?;
        Ok(ThinSolver {
            scenario,
            grid,
            dofs: DofMap::new(&grid),
            picard: PicardOptions::default(),
            exec: Exec::default(),
        })
    }

    pub fn with_picard(mut self, picard: PicardOptions) -> Result<Self> {
        picard.check()?;
        self.picard = picard;
        Ok(self)
    }

    pub fn with_exec(mut self, exec: Exec) -> Self {
        self.exec = exec;
        self
    }

    pub fn grid(&self) -> &ThinGrid {
        &self.grid
    }

    pub fn scenario(&self) -> &Scenario {
        self.scenario
    }

    /// Nodal initial data: the scenario's thin data if given, else the lifting `v0 / J`.
    pub fn initial_state(&self) -> Result<ThinState> {
        let g = &self.grid;
        let mut u = vec![0.0; g.dofs()];
        for i in 0..g.n_theta {
            let theta = g.theta(i);
            let fr = geometry::frame(self.scenario, theta, 0.0)?;
            for j in 0..g.n_sigma {
                let sigma = g.sigma(j);
                u[g.node(i, j)] = match self.scenario.thin_initial() {
                    Some(e) => {
                        let r = g.eps * (fr.band.g0 + sigma * fr.band.g());
                        e.eval(theta, sigma, r, 0.0)
                    }
                    None => averaging::lift_initial_from_frame(self.scenario, &fr, g.eps, sigma)?,
                };
            }
        }
        if u.iter().any(|v| !v.is_finite()) {
            return Err(Error::Scenario("non-finite thin initial data".into()));
        }
        Ok(ThinState {
            t: 0.0,
            u,
            picard_iterations: 0,
            picard_update: 0.0,
        })
    }

    pub fn geometry(&self, t: f64) -> Result<LevelGeometry> {
        LevelGeometry::build(self.scenario, &self.grid, t, self.exec)
    }

    /// Mass, stiffness (with coefficient lagged at `u_coeff`, or `|∇u|^{p−2} ≡ 0` data
    /// when `None`), advection and load at the level of `geo`.
    pub fn assemble(&self, geo: &LevelGeometry, u_coeff: Option<&[f64]>) -> ThinSystem {
        let zero;
        let u = match u_coeff {
            Some(u) => u,
            None => {
                zero = vec![0.0; self.grid.dofs()];
                &zero
            }
        };
        ThinSystem {
            mass: assembly::mass_matrix(&self.grid, &self.dofs, geo, self.exec),
            stiffness: assembly::stiffness_matrix(
                &self.grid,
                &self.dofs,
                geo,
                u,
                self.scenario.p(),
                self.exec,
            ),
            advection: assembly::advection_matrix(&self.grid, &self.dofs, geo, self.exec),
            load: assembly::load_vector(&self.grid, geo),
        }
    }

    pub fn mass(&self, geo: &LevelGeometry, u: &[f64]) -> f64 {
        assembly::integrate(&self.grid, geo, u, |v, _| v)
    }

    pub fn energy(&self, geo: &LevelGeometry, u: &[f64]) -> f64 {
        let p = self.scenario.p();
        assembly::integrate(&self.grid, geo, u, |_, g2| g2.powf(0.5 * p) / p)
    }

    pub fn source_total(&self, geo: &LevelGeometry) -> f64 {
        geo.points.iter().flatten().map(|q| q.weight * q.source).sum()
    }

    /// One implicit Euler step of size `dt` from `state`.
    pub fn step(&self, state: &ThinState, dt: f64) -> Result<ThinState> {
        if !(dt > 0.0) {
            return Err(Error::Config(format!("time step must be positive, got {dt}")));
        }
        if state.t + dt > self.scenario.final_time() * (1.0 + 1e-12) {
            return Err(Error::Config(format!(
                "step to t = {} passes the final time {}",
                state.t + dt,
                self.scenario.final_time()
            )));
        }
        let old = self.geometry(state.t)?;
        let new = self.geometry(state.t + dt)?;
        self.step_between(state, &old, &new)
    }

    fn step_between(
        &self,
        state: &ThinState,
        old: &LevelGeometry,
        new: &LevelGeometry,
    ) -> Result<ThinState> {
        let dt = new.t - old.t;
        let g = &self.grid;
        let p = self.scenario.p();

        // M(t) U + Δt F(t⁺), assembled directly by quadrature.
        let mut rhs = assembly::mass_times(g, old, &state.u);
        let load = assembly::load_vector(g, new);
        for (r, f) in rhs.iter_mut().zip(&load) {
            *r += dt * f;
        }
        let rhs_band = self.dofs.to_band(&rhs);

        let mut base = assembly::mass_matrix(g, &self.dofs, new, self.exec);
        base.add_scaled(dt, &assembly::advection_matrix(g, &self.dofs, new, self.exec));

        let mut current = state.u.clone();
        let mut history = Vec::new();
        for it in 1..=self.picard.max_iter {
            let mut system = base.clone();
            system.add_scaled(
                dt,
                &assembly::stiffness_matrix(g, &self.dofs, new, &current, p, self.exec),
            );
            let lu = system.factorize()?;
            let mut x = rhs_band.clone();
            lu.solve_in_place(&mut x);
            let next = self.dofs.from_band(&x);
            let update = self.picard.relax(it, &mut current, &next);
            history.push(update);
            // The coefficient is constant for p = 2: the first solve is exact.
            if update <= self.picard.tol || p == 2.0 {
                return Ok(ThinState {
                    t: new.t,
                    u: current,
                    picard_iterations: it,
                    picard_update: update,
                });
            }
            if !update.is_finite() {
                break;
            }
        }
        Err(Error::PicardDivergence { t: new.t, history })
    }

    fn record(&self, geo: &LevelGeometry, state: &ThinState) -> ThinStepRecord {
        ThinStepRecord {
            t: state.t,
            mass: self.mass(geo, &state.u),
            energy: self.energy(geo, &state.u),
            source_total: self.source_total(geo),
            picard_iterations: state.picard_iterations,
            picard_update: state.picard_update,
        }
    }

    /// Runs from the initial data to the scenario's final time.
    pub fn solve(&self, dt: f64, snapshots: &Snapshots) -> Result<ThinTrajectory> {
        let initial = self.initial_state()?;
        self.solve_from(initial, dt, snapshots)
    }

    pub fn solve_from(
        &self,
        initial: ThinState,
        dt: f64,
        snapshots: &Snapshots,
    ) -> Result<ThinTrajectory> {
        let time = TimeGrid::new(self.scenario.final_time(), dt)?;
        let keep = snapshots.steps(&time)?;
        let mut old = self.geometry(0.0)?;
        let mut state = initial;
        let mut records = vec![self.record(&old, &state)];
        let mut kept = vec![state.clone()];
        for n in 1..=time.steps {
            let new = self.geometry(time.time(n))?;
            state = self.step_between(&state, &old, &new)?;
            records.push(self.record(&new, &state));
            if keep.binary_search(&n).is_ok() {
                kept.push(state.clone());
            }
            old = new;
        }
        Ok(ThinTrajectory {
            grid: self.grid,
            time,
            p: self.scenario.p(),
            snapshots: kept,
            records,
        })
    }
}
