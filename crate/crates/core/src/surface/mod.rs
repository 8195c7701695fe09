//! The limit problem on the moving curve.
//!
//! The combined weak form is discretized with periodic linear elements in `θ` and
//! 2-point Gauss quadrature, with `ζ` eliminated at every quadrature point:
//! `d/dt ∫ g v η + ∫ g c ∂_s v ∂_s η + ∫ g v vτ ∂_s η = ∫ f g η`, where
//! `c = (|∂_s v|² + ζ²)^{(p−2)/2}` and `ζ` solves `(|∂_s v|² + ζ²)^{(p−2)/2} ζ + V v = 0`.
//! Time stepping and Picard lagging follow the band solver.

mod zeta;

pub use zeta::{solve_zeta, zeta_residual};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry;
use crate::linalg::{BandMatrix, PeriodicOrdering};
use crate::quadrature::GAUSS2;
use crate::scenario::Scenario;
use crate::thin::relative_balance;
use crate::time::{PicardOptions, Snapshots, TimeGrid};

/// Geometric data at one quadrature point of a curve element.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CurvePoint {
    /// Gauss weight times the element length in `θ`.
    pub weight: f64,
    pub arclen: f64,
    pub g: f64,
    pub normal_velocity: f64,
    pub tangential_velocity: f64,
    pub source: f64,
}

/// Nodal geometric data used for the nodal `ζ` reconstruction.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CurveNode {
    pub arclen: f64,
    pub normal_velocity: f64,
}

/// Everything the assembly needs at one time level.
#[derive(Clone, Debug)]
pub struct CurveLevel {
    pub t: f64,
    pub n_theta: usize,
    pub points: Vec<[CurvePoint; 2]>,
    pub nodes: Vec<CurveNode>,
}

impl CurveLevel {
    pub fn build(sc: &Scenario, n_theta: usize, t: f64) -> Result<Self> {
        let h = std::f64::consts::TAU / n_theta as f64;
        let mut points = Vec::with_capacity(n_theta);
        let mut nodes = Vec::with_capacity(n_theta);
        for e in 0..n_theta {
            let theta = e as f64 * h;
            let fr = geometry::frame(sc, theta, t)?;
            nodes.push(CurveNode {
                arclen: fr.arclen,
                normal_velocity: fr.normal_velocity,
            });
            let mut pts = [None, None];
            for (k, &(x, w)) in GAUSS2.iter().enumerate() {
                let fr = geometry::frame(sc, theta + x * h, t)?;
                pts[k] = Some(CurvePoint {
                    weight: w * h,
                    arclen: fr.arclen,
                    g: fr.band.g(),
                    normal_velocity: fr.normal_velocity,
                    tangential_velocity: fr.tangential_velocity,
                    source: sc.source(fr.theta0, t),
                });
            }
            points.push(pts.map(Option::unwrap));
        }
        Ok(CurveLevel {
            t,
            n_theta,
            points,
            nodes,
        })
    }

    fn dtheta(&self) -> f64 {
        std::f64::consts::TAU / self.n_theta as f64
    }

    /// Value and arclength derivative of a nodal field at quadrature point `k` of element `e`.
    fn eval(&self, v: &[f64], e: usize, k: usize) -> (f64, f64) {
        let (a, b) = (v[e], v[(e + 1) % self.n_theta]);
        let x = GAUSS2[k].0;
        let value = a * (1.0 - x) + b * x;
        let slope = (b - a) / (self.dtheta() * self.points[e][k].arclen);
        (value, slope)
    }

    /// `ζ` at every quadrature point for the nodal field `v`, element-major.
    pub fn zeta_at_points(&self, v: &[f64], p: f64) -> Vec<f64> {
        let mut out = Vec::with_capacity(2 * self.n_theta);
        for (e, pts) in self.points.iter().enumerate() {
            for (k, q) in pts.iter().enumerate() {
                let (value, slope) = self.eval(v, e, k);
                out.push(solve_zeta(slope * slope, q.normal_velocity * value, p));
            }
        }
        out
    }

    /// `ζ` at the nodes, from the centred arclength derivative of `v`.
    pub fn zeta_at_nodes(&self, v: &[f64], p: f64) -> Vec<f64> {
        let n = self.n_theta;
        (0..n)
            .map(|i| {
                let node = &self.nodes[i];
                let slope = (v[(i + 1) % n] - v[(i + n - 1) % n]) / (2.0 * self.dtheta() * node.arclen);
                solve_zeta(slope * slope, node.normal_velocity * v[i], p)
            })
            .collect()
    }

    /// Largest scaled residual `|(a + ζ²)^{(p−2)/2} ζ + b| / (1 + |b|)` over the
    /// quadrature points, for `ζ` values stored element-major.
    pub fn max_zeta_residual(&self, v: &[f64], zeta: &[f64], p: f64) -> f64 {
        let mut worst: f64 = 0.0;
        for (e, pts) in self.points.iter().enumerate() {
            for (k, q) in pts.iter().enumerate() {
                let (value, slope) = self.eval(v, e, k);
                let b = q.normal_velocity * value;
                let r = zeta_residual(slope * slope, b, p, zeta[2 * e + k]);
                worst = worst.max(r.abs() / (1.0 + b.abs()));
            }
        }
        worst
    }

    /// `∫ g v ds`.
    pub fn conserved(&self, v: &[f64]) -> f64 {
        let mut acc = 0.0;
        for (e, pts) in self.points.iter().enumerate() {
            for (k, q) in pts.iter().enumerate() {
                acc += q.weight * q.arclen * q.g * self.eval(v, e, k).0;
            }
        }
        acc
    }

    /// `∫ g f ds`.
    pub fn source_total(&self) -> f64 {
        self.points.iter().flatten().map(|q| q.weight * q.arclen * q.g * q.source).sum()
    }
}

/// Shape functions of a linear element at the two Gauss points.
fn shape(k: usize) -> [f64; 2] {
    let x = GAUSS2[k].0;
    [1.0 - x, x]
}

/// Periodic tridiagonal `g`-weighted curve mass matrix; `off[i]` couples `i` and `i+1`.
#[derive(Clone, Debug, PartialEq)]
pub struct CurveMass {
    pub diag: Vec<f64>,
    pub off: Vec<f64>,
}

impl CurveMass {
    pub fn total(&self) -> f64 {
        self.diag.iter().sum::<f64>() + 2.0 * self.off.iter().sum::<f64>()
    }

    /// `eᵀ M e`.
    pub fn norm_sq(&self, e: &[f64]) -> f64 {
        let n = self.diag.len();
        assert_eq!(e.len(), n);
        (0..n)
            .map(|i| self.diag[i] * e[i] * e[i] + 2.0 * self.off[i] * e[i] * e[(i + 1) % n])
            .sum()
    }
}

fn curve_mass(level: &CurveLevel) -> CurveMass {
    let n = level.n_theta;
    let mut diag = vec![0.0; n];
    let mut off = vec![0.0; n];
    for (e, pts) in level.points.iter().enumerate() {
        for (k, q) in pts.iter().enumerate() {
            let [a, b] = shape(k);
            let w = q.weight * q.arclen * q.g;
            diag[e] += w * a * a;
            diag[(e + 1) % n] += w * b * b;
            off[e] += w * a * b;
        }
    }
    CurveMass { diag, off }
}

/// The `g`-weighted curve mass matrix at time `t` on `n_theta` periodic nodes.
pub fn weighted_mass(sc: &Scenario, n_theta: usize, t: f64) -> Result<CurveMass> {
    Ok(curve_mass(&CurveLevel::build(sc, n_theta, t)?))
}

/// Assembled matrices of one level; `zeta` holds the eliminated values used in `stiffness`.
#[derive(Clone, Debug)]
pub struct SurfaceSystem {
    pub mass: BandMatrix,
    pub stiffness: BandMatrix,
    pub advection: BandMatrix,
    pub load: Vec<f64>,
    pub zeta: Vec<f64>,
}

/// Nodal curve solution and `ζ` at the quadrature points (element-major).
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SurfaceState {
    pub t: f64,
    pub v: Vec<f64>,
    pub zeta: Vec<f64>,
    pub zeta_nodal: Vec<f64>,
    pub picard_iterations: usize,
    pub picard_update: f64,
    pub zeta_residual: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SurfaceStepRecord {
    pub t: f64,
    /// `∫ g v ds`
    pub conserved: f64,
    /// `∫ g f ds`
    pub source_total: f64,
    pub picard_iterations: usize,
    pub picard_update: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct SurfaceTrajectory {
    pub n_theta: usize,
    pub time: TimeGrid,
    pub p: f64,
    pub snapshots: Vec<SurfaceState>,
    pub records: Vec<SurfaceStepRecord>,
}

impl SurfaceTrajectory {
    /// Relative violation of `∫gv(T) = ∫gv(0) + Σ Δt ∫gf`.
    pub fn conservation_drift(&self) -> f64 {
        relative_balance(&self.records, self.time.dt, |r| (r.conserved, r.source_total))
    }

    pub fn final_state(&self) -> &SurfaceState {
        self.snapshots.last().expect("trajectory has the initial snapshot")
    }

    pub fn node_thetas(&self) -> Vec<f64> {
        let h = std::f64::consts::TAU / self.n_theta as f64;
        (0..self.n_theta).map(|i| i as f64 * h).collect()
    }

    pub fn quad_thetas(&self) -> Vec<f64> {
        let h = std::f64::consts::TAU / self.n_theta as f64;
        (0..self.n_theta)
            .flat_map(|e| GAUSS2.iter().map(move |&(x, _)| (e as f64 + x) * h))
            .collect()
    }

    pub fn max_zeta_residual(&self) -> f64 {
        self.snapshots.iter().map(|s| s.zeta_residual).fold(0.0, f64::max)
    }
}

pub struct SurfaceSolver<'a> {
    scenario: &'a Scenario,
    n_theta: usize,
    ordering: PeriodicOrdering,
    picard: PicardOptions,
}

impl<'a> SurfaceSolver<'a> {
    pub fn new(scenario: &'a Scenario, n_theta: usize) -> Result<Self> {
        if n_theta < 8 {
            return Err(Error::Grid(format!("curve grid needs at least 8 nodes, got {n_theta}")));
        }
        Ok(SurfaceSolver {
            scenario,
            n_theta,
            ordering: PeriodicOrdering::new(n_theta),
            picard: PicardOptions::default(),
        })
    }

    pub fn with_picard(mut self, picard: PicardOptions) -> Result<Self> {
        picard.check()?;
        self.picard = picard;
        Ok(self)
    }

    pub fn n_theta(&self) -> usize {
        self.n_theta
    }

    pub fn level(&self, t: f64) -> Result<CurveLevel> {
        CurveLevel::build(self.scenario, self.n_theta, t)
    }

    fn scatter(&self, locals: &[[[f64; 2]; 2]]) -> BandMatrix {
        let n = self.n_theta;
        let mut m = BandMatrix::zeros(n, 2, 2);
        for (e, local) in locals.iter().enumerate() {
            let nodes = [e, (e + 1) % n];
            for (a, row) in local.iter().enumerate() {
                for (b, v) in row.iter().enumerate() {
                    m.add(self.ordering.position(nodes[a]), self.ordering.position(nodes[b]), *v);
                }
            }
        }
        m
    }

    fn to_band(&self, natural: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; natural.len()];
        for (i, v) in natural.iter().enumerate() {
            out[self.ordering.position(i)] = *v;
        }
        out
    }

    fn to_natural(&self, band: &[f64]) -> Vec<f64> {
        (0..band.len()).map(|i| band[self.ordering.position(i)]).collect()
    }

    /// Matrices at `level`, with the diffusion coefficient and `ζ` lagged at `v_coeff`.
    pub fn assemble(&self, level: &CurveLevel, v_coeff: &[f64]) -> SurfaceSystem {
        let p = self.scenario.p();
        let h = level.dtheta();
        let n = self.n_theta;
        let zeta = level.zeta_at_points(v_coeff, p);
        let mut mass = Vec::with_capacity(n);
        let mut stiff = Vec::with_capacity(n);
        let mut adv = Vec::with_capacity(n);
        let mut load = vec![0.0; n];
        for (e, pts) in level.points.iter().enumerate() {
            let (mut m, mut a, mut b) = ([[0.0; 2]; 2], [[0.0; 2]; 2], [[0.0; 2]; 2]);
            for (k, q) in pts.iter().enumerate() {
                let phi = shape(k);
                // d/ds of the two shape functions
                let dphi = [-1.0 / (h * q.arclen), 1.0 / (h * q.arclen)];
                let ds = q.weight * q.arclen * q.g;
                let (_, slope) = level.eval(v_coeff, e, k);
                let z = zeta[2 * e + k];
                let c = if p == 2.0 {
                    1.0
                } else {
                    (slope * slope + z * z).powf(0.5 * (p - 2.0))
                };
                for i in 0..2 {
                    for j in 0..2 {
                        m[i][j] += ds * phi[i] * phi[j];
                        a[i][j] += ds * c * dphi[i] * dphi[j];
                        b[i][j] += ds * q.tangential_velocity * phi[j] * dphi[i];
                    }
                    load[(e + i) % n] += ds * q.source * phi[i];
                }
            }
            mass.push(m);
            stiff.push(a);
            adv.push(b);
        }
        SurfaceSystem {
            mass: self.scatter(&mass),
            stiffness: self.scatter(&stiff),
            advection: self.scatter(&adv),
            load,
            zeta,
        }
    }

    fn finish(&self, level: &CurveLevel, v: Vec<f64>, iterations: usize, update: f64) -> SurfaceState {
        let p = self.scenario.p();
        let zeta = level.zeta_at_points(&v, p);
        SurfaceState {
            t: level.t,
            zeta_nodal: level.zeta_at_nodes(&v, p),
            zeta_residual: level.max_zeta_residual(&v, &zeta, p),
            zeta,
            v,
            picard_iterations: iterations,
            picard_update: update,
        }
    }

    pub fn initial_state(&self) -> Result<SurfaceState> {
        let level = self.level(0.0)?;
        let h = level.dtheta();
        let v: Vec<f64> = (0..self.n_theta)
            .map(|i| self.scenario.initial_value(i as f64 * h))
            .collect();
        if v.iter().any(|x| !x.is_finite()) {
            return Err(Error::Scenario("non-finite initial curve data".into()));
        }
        Ok(self.finish(&level, v, 0, 0.0))
    }

    pub fn step(&self, state: &SurfaceState, dt: f64) -> Result<SurfaceState> {
        self.step_with_guess(state, dt, &state.v)
    }

    /// One implicit Euler step, starting the Picard iteration from `guess`.
    pub fn step_with_guess(&self, state: &SurfaceState, dt: f64, guess: &[f64]) -> Result<SurfaceState> {
        if !(dt > 0.0) {
            return Err(Error::Config(format!("time step must be positive, got {dt}")));
        }
        if guess.len() != self.n_theta || state.v.len() != self.n_theta {
            return Err(Error::Grid("curve state does not match the solver grid".into()));
        }
        let old = self.level(state.t)?;
        let new = self.level(state.t + dt)?;
        self.step_between(state, &old, &new, guess.to_vec())
    }

    fn step_between(
        &self,
        state: &SurfaceState,
        old: &CurveLevel,
        new: &CurveLevel,
        mut current: Vec<f64>,
    ) -> Result<SurfaceState> {
        let dt = new.t - old.t;
        let p = self.scenario.p();
        let before = self.assemble(old, &state.v);
        let mut rhs = before.mass.mul_vec(&self.to_band(&state.v));
        let mut history = Vec::new();
        for it in 1..=self.picard.max_iter {
            let sys = self.assemble(new, &current);
            if it == 1 {
                for (r, f) in rhs.iter_mut().zip(self.to_band(&sys.load)) {
                    *r += dt * f;
                }
            }
            let mut matrix = sys.mass;
            matrix.add_scaled(dt, &sys.advection);
            matrix.add_scaled(dt, &sys.stiffness);
            let mut x = rhs.clone();
            matrix.factorize()?.solve_in_place(&mut x);
            let next = self.to_natural(&x);
            let update = self.picard.relax(it, &mut current, &next);
            history.push(update);
            if update <= self.picard.tol || p == 2.0 {
                return Ok(self.finish(new, current, it, update));
            }
            if !update.is_finite() {
                break;
            }
        }
        Err(Error::PicardDivergence { t: new.t, history })
    }

    fn record(&self, level: &CurveLevel, s: &SurfaceState) -> SurfaceStepRecord {
        SurfaceStepRecord {
            t: s.t,
            conserved: level.conserved(&s.v),
            source_total: level.source_total(),
            picard_iterations: s.picard_iterations,
            picard_update: s.picard_update,
        }
    }

    pub fn solve(&self, dt: f64, snapshots: &Snapshots) -> Result<SurfaceTrajectory> {
        let initial = self.initial_state()?;
        self.solve_from(initial, dt, snapshots)
    }

    pub fn solve_from(
        &self,
        initial: SurfaceState,
        dt: f64,
        snapshots: &Snapshots,
    ) -> Result<SurfaceTrajectory> {
        let time = TimeGrid::new(self.scenario.final_time(), dt)?;
        let keep = snapshots.steps(&time)?;
        let mut old = self.level(0.0)?;
        let mut state = initial;
        let mut records = vec![self.record(&old, &state)];
        let mut kept = vec![state.clone()];
        for n in 1..=time.steps {
            let new = self.level(time.time(n))?;
            let guess = state.v.clone();
            state = self.step_between(&state, &old, &new, guess)?;
            records.push(self.record(&new, &state));
            if keep.binary_search(&n).is_ok() {
                kept.push(state.clone());
            }
            old = new;
        }
        Ok(SurfaceTrajectory {
            n_theta: self.n_theta,
            time,
            p: self.scenario.p(),
            snapshots: kept,
            records,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curve::CurveFamily;
    use crate::scenario::ScenarioSpec;
    use std::f64::consts::PI;

    fn circle(r: f64, p: f64, v0: &str) -> Scenario {
        ScenarioSpec::new("c", CurveFamily::Circle { radius: r }, p, 1.0)
            .band(0.0, 1.0)
            .initial(v0)
            .build()
            .unwrap()
    }

    #[test]
    fn mass_total_is_band_weighted_length() {
        let sc = ScenarioSpec::new("c", CurveFamily::Circle { radius: 1.5 }, 3.0, 1.0)
            .band(-0.25, 0.5)
            .build()
            .unwrap();
        let m = weighted_mass(&sc, 32, 0.0).unwrap();
        assert!((m.total() - 2.0 * PI * 1.5 * 0.75).abs() < 1e-10);
    }

    #[test]
    fn constants_are_annihilated_on_a_static_circle() {
        let sc = circle(1.0, 3.0, "2");
        let solver = SurfaceSolver::new(&sc, 16).unwrap();
        let level = solver.level(0.0).unwrap();
        let v = vec![2.0; 16];
        let sys = solver.assemble(&level, &v);
        let vb = solver.to_band(&v);
        assert!(sys.stiffness.mul_vec(&vb).iter().all(|x| x.abs() < 1e-13));
        assert!(sys.advection.mul_vec(&vb).iter().all(|x| x.abs() < 1e-13));
        assert!(sys.load.iter().all(|&f| f == 0.0));
        assert!(sys.zeta.iter().all(|&z| z == 0.0));
    }

    #[test]
    fn p2_coefficient_is_one() {
        let sc = ScenarioSpec::new("e", CurveFamily::PulsatingEllipse { a: 1.2, b: 0.9, amplitude: 0.1, omega: 3.0 }, 2.0, 1.0)
            .band(0.0, 1.0)
            .initial("cos(theta)")
            .build()
            .unwrap();
        let solver = SurfaceSolver::new(&sc, 16).unwrap();
        let level = solver.level(0.3).unwrap();
        let v: Vec<f64> = (0..16).map(|i| (i as f64).sin() * 3.0).collect();
        let zero = vec![0.0; 16];
        let a = solver.assemble(&level, &v).stiffness;
        let b = solver.assemble(&level, &zero).stiffness;
        assert_eq!(a.max_abs(), b.max_abs());
        let x: Vec<f64> = (0..16).map(|i| (i as f64 * 0.7).cos()).collect();
        assert_eq!(a.mul_vec(&x), b.mul_vec(&x));
    }

    #[test]
    fn zero_data_stays_zero() {
        let sc = circle(1.0, 3.0, "0");
        let traj = SurfaceSolver::new(&sc, 16)
            .unwrap()
            .solve(0.05, &Snapshots::Every(5))
            .unwrap();
        assert!(traj.snapshots.iter().all(|s| s.v.iter().all(|&x| x == 0.0)));
    }

    #[test]
    fn rejects_tiny_grid() {
        let sc = circle(1.0, 3.0, "1");
        assert!(matches!(SurfaceSolver::new(&sc, 4), Err(Error::Grid(_))));
    }
}
