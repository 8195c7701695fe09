//! Independent 1D reference for radially symmetric band problems.
//!
//! Solves `∂_t u = ρ⁻¹ ∂_ρ(ρ |∂_ρ u|^{p−2} ∂_ρ u) + f` on the moving interval
//! `[R(t) + ε g0(t), R(t) + ε g1(t)]` with the no-flux condition
//! `|∂_ρ u|^{p−2} ∂_ρ u · n + V u = 0` at both ends. The discretization is a
//! cell-centred finite-volume scheme on cells that move with a linear map of the
//! interval. Cell contents `∫ u ρ dρ` are updated by implicit Euler with the face
//! fluxes `ρ (F + u ẋ)`; the boundary fluxes vanish by the boundary condition, so
//! `∫ u ρ dρ` changes only through the source. The scheme shares nothing with the
//! band solver on purpose.

use serde::Serialize;

use crate::curve::MovingCurve;
use crate::error::{Error, Result};
use crate::scenario::Scenario;
use crate::time::PicardOptions;

/// Interval ends and their velocities at time `t`.
#[derive(Clone, Copy, Debug, PartialEq)]
struct Ends {
    inner: f64,
    outer: f64,
    inner_rate: f64,
    outer_rate: f64,
}

/// A radially symmetric problem extracted from a scenario.
#[derive(Clone, Debug)]
pub struct RadialProblem<'a> {
    scenario: &'a Scenario,
    eps: f64,
    radius: f64,
    rate: f64,
}

const SYMMETRY_SAMPLES: usize = 7;
const SYMMETRY_TOL: f64 = 1e-12;

impl<'a> RadialProblem<'a> {
    /// Accepts only circles with `θ`-independent band profiles and data.
    pub fn new(scenario: &'a Scenario, eps: f64) -> Result<Self> {
        let Some((radius, rate)) = scenario.curve().as_circle() else {
            return Err(Error::NotRadial(format!(
                "curve family '{}' is not a circle",
                scenario.curve().name()
            )));
        };
        if !(eps > 0.0) {
            return Err(Error::Config(format!("thickness must be positive, got {eps}")));
        }
        let prob = RadialProblem {
            scenario,
            eps,
            radius,
            rate,
        };
        prob.check_symmetry()?;
        Ok(prob)
    }

    fn check_symmetry(&self) -> Result<()> {
        let sc = self.scenario;
        let thetas: Vec<f64> = (0..SYMMETRY_SAMPLES)
            .map(|k| 0.3 + k as f64 * std::f64::consts::TAU / SYMMETRY_SAMPLES as f64)
            .collect();
        let same = |name: &str, f: &dyn Fn(f64) -> f64| -> Result<()> {
            let base = f(0.0);
            for &th in &thetas {
                let v = f(th);
                if (v - base).abs() > SYMMETRY_TOL * (1.0 + base.abs()) {
                    return Err(Error::NotRadial(format!(
                        "{name} depends on theta ({base} at 0, {v} at {th})"
                    )));
                }
            }
            Ok(())
        };
        let t_end = sc.final_time();
        for &t in &[0.0, 0.5 * t_end, t_end] {
            same("g0", &|th| sc.band(th, t).g0)?;
            same("g1", &|th| sc.band(th, t).g1)?;
            same("f", &|th| sc.source(th, t))?;
            for &s in &[0.0, 0.5, 1.0] {
                same("f_thin", &|th| self.source(th, s, t))?;
            }
        }
        same("v0", &|th| sc.initial_value(th))?;
        for &s in &[0.0, 0.25, 0.5, 0.75, 1.0] {
            same("u0_thin", &|th| self.initial(th, s))?;
        }
        Ok(())
    }

    fn radius(&self, t: f64) -> f64 {
        self.radius + self.rate * t
    }

    fn ends(&self, t: f64) -> Ends {
        let b = self.scenario.band(0.0, t);
        Ends {
            inner: self.radius(t) + self.eps * b.g0,
            outer: self.radius(t) + self.eps * b.g1,
            inner_rate: self.rate + self.eps * b.g0_t,
            outer_rate: self.rate + self.eps * b.g1_t,
        }
    }

    fn sigma_of(&self, rho: f64, t: f64) -> (f64, f64) {
        let b = self.scenario.band(0.0, t);
        let r = rho - self.radius(t);
        ((r / self.eps - b.g0) / (b.g1 - b.g0), r)
    }

    /// Initial value in band coordinates `(θ, σ)`.
    fn initial(&self, theta: f64, sigma: f64) -> f64 {
        let b = self.scenario.band(theta, 0.0);
        let r = self.eps * (b.g0 + sigma * (b.g1 - b.g0));
        match self.scenario.thin_initial() {
            Some(e) => e.eval(theta, sigma, r, 0.0),
            // v0 / J with J = 1 + r / R on a circle
            None => self.scenario.initial_value(theta) / (1.0 + r / self.radius),
        }
    }

    fn source(&self, theta: f64, sigma: f64, t: f64) -> f64 {
        match self.scenario.thin_source() {
            Some(e) => {
                let b = self.scenario.band(theta, t);
                let r = self.eps * (b.g0 + sigma * (b.g1 - b.g0));
                e.eval(theta, sigma, r, t)
            }
            None => self.scenario.source(theta, t),
        }
    }
}

/// Cell averages at one time.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RadialSnapshot {
    pub t: f64,
    pub inner: f64,
    pub outer: f64,
    pub u: Vec<f64>,
}

impl RadialSnapshot {
    /// Piecewise-linear interpolation between cell centres, constant beyond the
    /// outermost centres.
    pub fn value_at(&self, rho: f64) -> f64 {
        let n = self.u.len();
        let h = (self.outer - self.inner) / n as f64;
        let x = (rho - self.inner) / h - 0.5;
        if x <= 0.0 {
            return self.u[0];
        }
        if x >= (n - 1) as f64 {
            return self.u[n - 1];
        }
        let k = x.floor() as usize;
        let w = x - k as f64;
        self.u[k] * (1.0 - w) + self.u[k + 1] * w
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct RadialTrajectory {
    pub eps: f64,
    pub cells: usize,
    pub dt: f64,
    pub snapshots: Vec<RadialSnapshot>,
    /// `2π ∫ u ρ dρ` after every step, starting with the initial data.
    pub mass: Vec<f64>,
    /// `2π ∫ f ρ dρ` at every level.
    pub source_total: Vec<f64>,
}

impl RadialTrajectory {
    pub fn mass_drift(&self) -> f64 {
        let produced: f64 = self.source_total[1..].iter().map(|s| self.dt * s).sum();
        let m0 = self.mass[0];
        let residual = (self.mass[self.mass.len() - 1] - m0 - produced).abs();
        if m0 == 0.0 {
            residual
        } else {
            residual / m0.abs()
        }
    }

    /// The snapshot taken at time `t`, if any.
    pub fn at(&self, t: f64) -> Option<&RadialSnapshot> {
        self.snapshots.iter().find(|s| (s.t - t).abs() <= 1e-9 * self.dt)
    }
}

/// Solves a prescribed number of steps of size `dt`, keeping snapshots at `times`.
pub fn radial_oracle(
    sc: &Scenario,
    eps: f64,
    cells: usize,
    dt: f64,
    times: &[f64],
) -> Result<RadialTrajectory> {
    let prob = RadialProblem::new(sc, eps)?;
    if cells < 4 {
        return Err(Error::Grid(format!("radial oracle needs at least 4 cells, got {cells}")));
    }
    let steps_f = sc.final_time() / dt;
    let steps = steps_f.round() as usize;
    if !(dt > 0.0) || (steps_f - steps as f64).abs() > 1e-9 * steps_f.max(1.0) {
        return Err(Error::Config(format!(
            "oracle step {dt} does not divide the final time {}",
            sc.final_time()
        )));
    }
    let mut keep = Vec::with_capacity(times.len());
    for &t in times {
        let k = t / dt;
        if (k - k.round()).abs() > 1e-9 * k.max(1.0) || k.round() as usize > steps {
            return Err(Error::Config(format!("snapshot time {t} is not on the oracle grid")));
        }
        keep.push(k.round() as usize);
    }
    let picard = PicardOptions::default();
    let p = sc.p();
    let tau = std::f64::consts::TAU;

    let mut ends = prob.ends(0.0);
    let mut u: Vec<f64> = {
        // cell averages of the initial data by 3-point Gauss-Legendre in ρ, weighted by ρ
        let nodes = [(-(0.6f64).sqrt(), 5.0 / 9.0), (0.0, 8.0 / 9.0), ((0.6f64).sqrt(), 5.0 / 9.0)];
        let h = (ends.outer - ends.inner) / cells as f64;
        (0..cells)
            .map(|k| {
                let c = ends.inner + (k as f64 + 0.5) * h;
                let (mut num, mut den) = (0.0, 0.0);
                for (x, w) in nodes {
                    let rho = c + 0.5 * h * x;
                    let (s, _) = prob.sigma_of(rho, 0.0);
                    num += w * rho * prob.initial(0.0, s);
                    den += w * rho;
                }
                num / den
            })
            .collect()
    };

    let volumes = |e: &Ends| -> Vec<f64> {
        let h = (e.outer - e.inner) / cells as f64;
        (0..cells)
            .map(|k| {
                let (l, r) = (e.inner + k as f64 * h, e.inner + (k + 1) as f64 * h);
                0.5 * (r * r - l * l)
            })
            .collect()
    };
    let cell_source = |e: &Ends, t: f64| -> Vec<f64> {
        let h = (e.outer - e.inner) / cells as f64;
        (0..cells)
            .map(|k| {
                let c = e.inner + (k as f64 + 0.5) * h;
                let (s, _) = prob.sigma_of(c, t);
                prob.source(0.0, s, t)
            })
            .collect()
    };

    let mut vol = volumes(&ends);
    let mass_of = |u: &[f64], vol: &[f64]| tau * u.iter().zip(vol).map(|(a, b)| a * b).sum::<f64>();
    let source_of = |f: &[f64], vol: &[f64]| tau * f.iter().zip(vol).map(|(a, b)| a * b).sum::<f64>();
    let mut mass = vec![mass_of(&u, &vol)];
    let mut source_total = vec![source_of(&cell_source(&ends, 0.0), &vol)];
    let mut snapshots = Vec::new();
    let snap = |t: f64, e: &Ends, u: &[f64]| RadialSnapshot {
        t,
        inner: e.inner,
        outer: e.outer,
        u: u.to_vec(),
    };
    if keep.contains(&0) {
        snapshots.push(snap(0.0, &ends, &u));
    }

    for n in 1..=steps {
        let t = n as f64 * dt;
        let new_ends = prob.ends(t);
        let new_vol = volumes(&new_ends);
        let f = cell_source(&new_ends, t);
        let h = (new_ends.outer - new_ends.inner) / cells as f64;
        let rhs: Vec<f64> = (0..cells)
            .map(|k| u[k] * vol[k] + dt * f[k] * new_vol[k])
            .collect();
        let mut current = u.clone();
        let mut history = Vec::new();
        let mut converged = false;
        for it in 1..=picard.max_iter {
            // interior face k+1/2 between cells k and k+1
            let mut lower = vec![0.0; cells];
            let mut diag = new_vol.clone();
            let mut upper = vec![0.0; cells];
            for k in 0..cells - 1 {
                let xi = (k + 1) as f64 / cells as f64;
                let rho = new_ends.inner + xi * (new_ends.outer - new_ends.inner);
                let speed = new_ends.inner_rate + xi * (new_ends.outer_rate - new_ends.inner_rate);
                let slope = (current[k + 1] - current[k]) / h;
                let coeff = if p == 2.0 { 1.0 } else { slope.abs().powf(p - 2.0) };
                // face flux ρ (c (u_{k+1} − u_k)/h + ẋ (u_k + u_{k+1})/2): out of k, into k+1
                let d = dt * rho * coeff / h;
                let a = dt * rho * speed * 0.5;
                diag[k] += d - a;
                upper[k] += -d - a;
                diag[k + 1] += d + a;
                lower[k + 1] += -d + a;
            }
            let next = thomas(&lower, &diag, &upper, &rhs)?;
            let update = picard.relax(it, &mut current, &next);
            history.push(update);
            if update <= picard.tol || p == 2.0 {
                converged = true;
                break;
            }
            if !update.is_finite() {
                break;
            }
        }
        if !converged {
            return Err(Error::PicardDivergence { t, history });
        }
        u = current;
        ends = new_ends;
        vol = new_vol;
        mass.push(mass_of(&u, &vol));
        source_total.push(source_of(&f, &vol));
        if keep.contains(&n) {
            snapshots.push(snap(t, &ends, &u));
        }
    }
    Ok(RadialTrajectory {
        eps,
        cells,
        dt,
        snapshots,
        mass,
        source_total,
    })
}

/// Tridiagonal solve without pivoting; the oracle matrices are diagonally dominant
/// for the step sizes it is used with, and a vanishing pivot is reported.
fn thomas(lower: &[f64], diag: &[f64], upper: &[f64], rhs: &[f64]) -> Result<Vec<f64>> {
    let n = diag.len();
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    let mut beta = diag[0];
    if beta == 0.0 {
        return Err(Error::Singular { column: 0 });
    }
    c[0] = upper[0] / beta;
    d[0] = rhs[0] / beta;
    for k in 1..n {
        beta = diag[k] - lower[k] * c[k - 1];
        if beta == 0.0 {
            return Err(Error::Singular { column: k });
        }
        c[k] = upper[k] / beta;
        d[k] = (rhs[k] - lower[k] * d[k - 1]) / beta;
    }
    for k in (0..n - 1).rev() {
        d[k] -= c[k] * d[k + 1];
    }
    Ok(d)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curve::CurveFamily;
    use crate::scenario::ScenarioSpec;

    fn annulus(u0: &str) -> Scenario {
        ScenarioSpec::new("a", CurveFamily::Circle { radius: 1.0 }, 3.0, 0.02)
            .band(-1.0, 1.0)
            .thin_initial(u0)
            .build()
            .unwrap()
    }

    #[test]
    fn constants_stay_constant() {
        let sc = annulus("2");
        let traj = radial_oracle(&sc, 0.4, 50, 1e-3, &[0.0, 0.02]).unwrap();
        for s in &traj.snapshots {
            assert!(s.u.iter().all(|v| (v - 2.0).abs() < 1e-13));
        }
    }

    #[test]
    fn conserves_mass_on_a_moving_interval() {
        let sc = ScenarioSpec::new("x", CurveFamily::ExpandingCircle { radius: 1.0, rate: 0.5 }, 3.0, 0.1)
            .band("0", "1 + 0.5*t")
            .thin_initial("1 + exp(-(sigma - 0.5)^2 / 0.02)")
            .build()
            .unwrap();
        let traj = radial_oracle(&sc, 0.3, 200, 1e-3, &[0.1]).unwrap();
        assert!(traj.mass_drift() < 1e-9, "{}", traj.mass_drift());
    }

    #[test]
    fn thomas_matches_known_solution() {
        let lower = [0.0, -1.0, -1.0, -1.0];
        let diag = [2.0, 2.0, 2.0, 2.0];
        let upper = [-1.0, -1.0, -1.0, 0.0];
        let x = [1.0, -2.0, 0.5, 3.0];
        let rhs: Vec<f64> = (0..4)
            .map(|k| {
                diag[k] * x[k]
                    + if k > 0 { lower[k] * x[k - 1] } else { 0.0 }
                    + if k < 3 { upper[k] * x[k + 1] } else { 0.0 }
            })
            .collect();
        let got = thomas(&lower, &diag, &upper, &rhs).unwrap();
        for (a, b) in got.iter().zip(x) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn refuses_non_radial_problems() {
        let ell = ScenarioSpec::new("e", CurveFamily::Ellipse { a: 1.2, b: 1.0 }, 3.0, 0.1)
            .band(0.0, 1.0)
            .build()
            .unwrap();
        assert!(matches!(radial_oracle(&ell, 0.1, 20, 1e-2, &[]), Err(Error::NotRadial(_))));
        let wobbly = ScenarioSpec::new("w", CurveFamily::Circle { radius: 1.0 }, 3.0, 0.1)
            .band(0.0, "1 + 0.1*cos(theta)")
            .build()
            .unwrap();
        assert!(matches!(radial_oracle(&wobbly, 0.1, 20, 1e-2, &[]), Err(Error::NotRadial(_))));
        let data = annulus("cos(theta)");
        assert!(matches!(radial_oracle(&data, 0.1, 20, 1e-3, &[]), Err(Error::NotRadial(_))));
    }
}
