//! Weighted thickness averages of band fields, data lifting from the curve to the
//! band, and error norms pairing averaged band solutions with curve solutions.
//!
//! In reference coordinates the weighted average is
//! `M_ε φ(θ) = ∫₀¹ φ(θ, σ) J(θ, r(σ)) dσ` with `r(σ) = ε (g0 + σ g)`; the factor
//! `1 / (ε g)` cancels against `dr = ε g dσ`.

use serde::Serialize;

use crate::curve::Vec2;
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::geometry::{self, GeoFrame};
use crate::quadrature::{GAUSS2, GAUSS4};
use crate::scenario::Scenario;
use crate::surface::{self, SurfaceTrajectory};
use crate::thin::{ThinField, ThinGrid, ThinTrajectory};

/// Lifted initial value `v0(θ) / J(θ, r(σ))` at time 0.
pub fn lift_initial(sc: &Scenario, eps: f64, theta: f64, sigma: f64) -> Result<f64> {
    let fr = geometry::frame(sc, theta, 0.0)?;
    lift_initial_from_frame(sc, &fr, eps, sigma)
}

pub(crate) fn lift_initial_from_frame(
    sc: &Scenario,
    fr: &GeoFrame,
    eps: f64,
    sigma: f64,
) -> Result<f64> {
    let r = eps * (fr.band.g0 + sigma * fr.band.g());
    Ok(sc.initial_value(fr.theta0) / geometry::jacobian(fr, r)?)
}

/// Band source built from the curve source: its constant normal extension.
pub fn lift_source(sc: &Scenario, theta: f64, t: f64) -> f64 {
    sc.source(theta, t)
}

/// `M_ε φ` at each `theta` for a pointwise function `φ(θ, σ)`, by 4-point Gauss in `σ`.
pub fn weighted_average_fn(
    sc: &Scenario,
    eps: f64,
    t: f64,
    thetas: &[f64],
    phi: impl Fn(f64, f64) -> f64,
) -> Result<Vec<f64>> {
    thetas
        .iter()
        .map(|&theta| {
            let fr = geometry::frame(sc, theta, t)?;
            let mut acc = 0.0;
            for &(s, w) in &GAUSS4 {
                let r = eps * (fr.band.g0 + s * fr.band.g());
                acc += w * phi(theta, s) * geometry::jacobian(&fr, r)?;
            }
            Ok(acc)
        })
        .collect()
}

/// `∫₀¹ h(σ) J dσ` along the column `theta`, split at the grid's `σ` nodes.
fn column_integral(
    fr: &GeoFrame,
    grid: &ThinGrid,
    mut h: impl FnMut(usize, f64) -> f64,
) -> Result<f64> {
    let hs = grid.dsigma();
    let mut acc = 0.0;
    for j in 0..grid.n_sigma - 1 {
        for &(x, w) in &GAUSS4 {
            let s = grid.sigma(j) + x * hs;
            let r = grid.eps * (fr.band.g0 + s * fr.band.g());
            acc += w * hs * h(j, s) * geometry::jacobian(fr, r)?;
        }
    }
    Ok(acc)
}

fn check_field(grid: &ThinGrid, u: &[f64]) -> Result<()> {
    ThinField::new(grid, u).map(|_| ())
}

/// `M_ε u` at arbitrary `theta` positions for a nodal band field.
pub fn weighted_average_at(
    sc: &Scenario,
    grid: &ThinGrid,
    u: &[f64],
    t: f64,
    thetas: &[f64],
) -> Result<Vec<f64>> {
    let field = ThinField::new(grid, u)?;
    thetas
        .iter()
        .map(|&theta| {
            let fr = geometry::frame(sc, theta, t)?;
            column_integral(&fr, grid, |_, s| field.value(theta, s))
        })
        .collect()
}

fn column(grid: &ThinGrid, u: &[f64], i: usize) -> Vec<f64> {
    (0..grid.n_sigma).map(|j| u[grid.node(i, j)]).collect()
}

fn lerp_column(col: &[f64], grid: &ThinGrid, j: usize, s: f64) -> f64 {
    let x = (s - grid.sigma(j)) / grid.dsigma();
    col[j] * (1.0 - x) + col[j + 1] * x
}

/// `M_ε u` at the `theta` nodes of the band grid.
pub fn weighted_average(sc: &Scenario, grid: &ThinGrid, u: &[f64], t: f64) -> Result<Vec<f64>> {
    check_field(grid, u)?;
    (0..grid.n_theta)
        .map(|i| {
            let fr = geometry::frame(sc, grid.theta(i), t)?;
            let col = column(grid, u, i);
            column_integral(&fr, grid, |j, s| lerp_column(&col, grid, j, s))
        })
        .collect()
}

/// `M_ε(∂_ν u)` at the `theta` nodes, using `∂_ν u = ∂_σ U / (ε g)`.
pub fn normal_average(sc: &Scenario, grid: &ThinGrid, u: &[f64], t: f64) -> Result<Vec<f64>> {
    check_field(grid, u)?;
    (0..grid.n_theta)
        .map(|i| {
            let fr = geometry::frame(sc, grid.theta(i), t)?;
            let col = column(grid, u, i);
            let scale = 1.0 / (grid.eps * fr.band.g() * grid.dsigma());
            column_integral(&fr, grid, |j, _| (col[j + 1] - col[j]) * scale)
        })
        .collect()
}

/// Averaged flux `M_ε(|∇u|^{p−2} ∇u)` and the normal-balance diagnostic
/// `w·ν + V_Γ M_ε u` at the `theta` nodes.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FluxAverage {
    pub flux: Vec<Vec2>,
    pub diagnostic: Vec<f64>,
}

pub fn flux_average(sc: &Scenario, grid: &ThinGrid, u: &[f64], t: f64) -> Result<FluxAverage> {
    check_field(grid, u)?;
    let p = sc.p();
    let n = grid.n_theta;
    let mut flux = Vec::with_capacity(n);
    let mut diagnostic = Vec::with_capacity(n);
    for i in 0..n {
        let fr = geometry::frame(sc, grid.theta(i), t)?;
        let col = column(grid, u, i);
        let next = column(grid, u, (i + 1) % n);
        let prev = column(grid, u, (i + n - 1) % n);
        let mut w = [0.0; 2];
        for k in 0..2 {
            w[k] = column_integral(&fr, grid, |j, s| {
                let dth = (lerp_column(&next, grid, j, s) - lerp_column(&prev, grid, j, s))
                    / (2.0 * grid.dtheta());
                let ds = (col[j + 1] - col[j]) / grid.dsigma();
                let Ok(map) = geometry::thin_map_from_frame(&fr, grid.eps, s) else {
                    return f64::NAN;
                };
                let grad = map.spatial_gradient(dth, ds);
                let c = p_power(grad[0] * grad[0] + grad[1] * grad[1], p);
                c * grad[k]
            })?;
        }
        let avg = column_integral(&fr, grid, |j, s| lerp_column(&col, grid, j, s))?;
        diagnostic.push(geometry::dot(w, fr.nu) + fr.normal_velocity * avg);
        flux.push(w);
    }
    Ok(FluxAverage { flux, diagnostic })
}

fn p_power(grad_sq: f64, p: f64) -> f64 {
    if p == 2.0 {
        1.0
    } else {
        grad_sq.powf(0.5 * (p - 2.0))
    }
}

/// Both sides of `∫_Ω φ η̄ dx = ε ∫_Γ g M_ε φ η ds` for a nodal band field `φ` and a
/// curve function `η`, each computed with its own quadrature.
pub fn pairing_sides(
    sc: &Scenario,
    grid: &ThinGrid,
    u: &[f64],
    t: f64,
    eta: impl Fn(f64) -> f64,
) -> Result<(f64, f64)> {
    let field = ThinField::new(grid, u)?;
    let (ht, hs) = (grid.dtheta(), grid.dsigma());
    let mut band = 0.0;
    let mut curve = 0.0;
    for i in 0..grid.n_theta {
        for &(xt, wt) in &GAUSS2 {
            let theta = grid.theta(i) + xt * ht;
            let fr = geometry::frame(sc, theta, t)?;
            // band side: area element over the reference cell, 2x2 Gauss
            for j in 0..grid.n_sigma - 1 {
                for &(xs, ws) in &GAUSS2 {
                    let s = grid.sigma(j) + xs * hs;
                    let map = geometry::thin_map_from_frame(&fr, grid.eps, s)?;
                    band += wt * ht * ws * hs * map.det * field.value(theta, s) * eta(theta);
                }
            }
            // curve side: ε ∫ g M_ε φ η |y_θ| dθ
            let avg = column_integral(&fr, grid, |_, s| field.value(theta, s))?;
            curve += wt * ht * grid.eps * fr.band.g() * avg * eta(theta) * fr.arclen;
        }
    }
    Ok((band, curve))
}

/// Averaged quantities of one band snapshot at the `theta` nodes.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AveragedSnapshot {
    pub t: f64,
    pub v: Vec<f64>,
    pub zeta: Vec<f64>,
    pub flux: Vec<Vec2>,
    pub flux_diagnostic: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AveragedTrace {
    pub n_theta: usize,
    pub eps: f64,
    pub snapshots: Vec<AveragedSnapshot>,
}

impl AveragedTrace {
    pub fn times(&self) -> Vec<f64> {
        self.snapshots.iter().map(|s| s.t).collect()
    }
}

/// Averages every snapshot of a band trajectory; snapshots are independent tasks.
pub fn average_trajectory(
    sc: &Scenario,
    traj: &ThinTrajectory,
    exec: Exec,
) -> Result<AveragedTrace> {
    let grid = traj.grid;
    let snaps: Vec<Result<AveragedSnapshot>> = exec.map(&traj.snapshots, |s| {
        let fl = flux_average(sc, &grid, &s.u, s.t)?;
        Ok(AveragedSnapshot {
            t: s.t,
            v: weighted_average(sc, &grid, &s.u, s.t)?,
            zeta: normal_average(sc, &grid, &s.u, s.t)?,
            flux: fl.flux,
            flux_diagnostic: fl.diagnostic,
        })
    });
    Ok(AveragedTrace {
        n_theta: grid.n_theta,
        eps: grid.eps,
        snapshots: snaps.into_iter().collect::<Result<_>>()?,
    })
}

/// Space-time errors between an averaged band trace and a curve trajectory.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct ErrorNorms {
    /// `‖M_ε u − v‖` in `L²(S_T)`.
    pub v_l2: f64,
    /// `‖M_ε ∂_ν u − ζ‖` in `L²(S_T)`.
    pub zeta_l2: f64,
    /// `‖w·ν + V_Γ M_ε u‖` in `L²(S_T)`.
    pub flux_diagnostic_l2: f64,
    /// `max_t ‖M_ε u − v‖_{L²(Γ_t)}`.
    pub v_sup_l2: f64,
    pub zeta_sup_l2: f64,
}

/// Composite trapezoid in time of `g`-weighted curve mass-matrix norms.
pub fn error_norms(
    sc: &Scenario,
    trace: &AveragedTrace,
    limit: &SurfaceTrajectory,
) -> Result<ErrorNorms> {
    if trace.n_theta != limit.n_theta {
        return Err(Error::Grid(format!(
            "averaged trace has {} nodes, curve solution has {}",
            trace.n_theta, limit.n_theta
        )));
    }
    if trace.snapshots.len() != limit.snapshots.len() {
        return Err(Error::Misaligned(format!(
            "{} averaged snapshots vs {} curve snapshots",
            trace.snapshots.len(),
            limit.snapshots.len()
        )));
    }
    let mut rows = Vec::with_capacity(trace.snapshots.len());
    for (a, s) in trace.snapshots.iter().zip(&limit.snapshots) {
        if (a.t - s.t).abs() > 1e-12 * (1.0 + s.t.abs()) {
            return Err(Error::Misaligned(format!("snapshot at t = {} vs t = {}", a.t, s.t)));
        }
        let mass = surface::weighted_mass(sc, limit.n_theta, s.t)?;
        let ev: Vec<f64> = a.v.iter().zip(&s.v).map(|(x, y)| x - y).collect();
        let ez: Vec<f64> = a.zeta.iter().zip(&s.zeta_nodal).map(|(x, y)| x - y).collect();
        rows.push((
            a.t,
            mass.norm_sq(&ev),
            mass.norm_sq(&ez),
            mass.norm_sq(&a.flux_diagnostic),
        ));
    }
    let trapz = |k: usize| -> f64 {
        rows.windows(2)
            .map(|w| {
                let (a, b) = (&w[0], &w[1]);
                let (fa, fb) = match k {
                    0 => (a.1, b.1),
                    1 => (a.2, b.2),
                    _ => (a.3, b.3),
                };
                0.5 * (b.0 - a.0) * (fa + fb)
            })
            .sum::<f64>()
            .sqrt()
    };
    Ok(ErrorNorms {
        v_l2: trapz(0),
        zeta_l2: trapz(1),
        flux_diagnostic_l2: trapz(2),
        v_sup_l2: rows.iter().map(|r| r.1.sqrt()).fold(0.0, f64::max),
        zeta_sup_l2: rows.iter().map(|r| r.2.sqrt()).fold(0.0, f64::max),
    })
}
