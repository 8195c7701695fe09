//! Pointwise geometry of the moving curve and of the thin band around it.
//!
//! The band is parametrized over the fixed reference rectangle
//! `(theta, sigma) ∈ [0, 2π) × [0, 1]` by
//! `Ψ(theta, sigma, t) = y(theta, t) + r ν(theta, t)` with `r = ε (g0 + sigma g)`.
//! Sign conventions: the curve runs counterclockwise, `ν` is the tangent rotated by
//! −90° (outward), and the mean curvature is `H = −div_Γ ν`, so a circle of radius `R`
//! has `H = −1/R`.

use std::f64::consts::TAU;

use crate::curve::{CurveJet, MovingCurve, Vec2};
use crate::error::{Error, Result};
use crate::scenario::{BandProfile, Scenario, FD_STEP};

const MIN_SPEED: f64 = 1e-10;

#[inline]
pub fn dot(a: Vec2, b: Vec2) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

#[inline]
pub fn cross(a: Vec2, b: Vec2) -> f64 {
    a[0] * b[1] - a[1] * b[0]
}

#[inline]
fn axpy(alpha: f64, x: Vec2, y: Vec2) -> Vec2 {
    [alpha * x[0] + y[0], alpha * x[1] + y[1]]
}

#[inline]
fn scale(alpha: f64, x: Vec2) -> Vec2 {
    [alpha * x[0], alpha * x[1]]
}

/// Geometric quantities of Γ_t at one material point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GeoFrame {
    pub theta0: f64,
    pub t: f64,
    pub y: Vec2,
    pub tau: Vec2,
    pub nu: Vec2,
    /// Mean curvature, `H = −div_Γ ν`.
    pub mean_curvature: f64,
    /// Metric factor `|∂_θ y|`.
    pub arclen: f64,
    /// Total velocity `∂_t y` at fixed `theta0`.
    pub velocity: Vec2,
    pub normal_velocity: f64,
    pub tangential_velocity: f64,
    /// Surface divergence of the total velocity.
    pub div_velocity: f64,
    /// `∂_θ ∂_t y`, kept for the thin-map velocity.
    pub d_theta_velocity: Vec2,
    pub band: BandProfile,
}

impl GeoFrame {
    pub fn dg0dt(&self) -> f64 {
        self.band.g0_t
    }

    pub fn dg1dt(&self) -> f64 {
        self.band.g1_t
    }
}

fn frame_from_jet(jet: &CurveJet, band: BandProfile, theta0: f64, t: f64) -> Result<GeoFrame> {
    let arclen = jet.y_th[0].hypot(jet.y_th[1]);
    if !(arclen >= MIN_SPEED) {
        return Err(Error::DegenerateCurve {
            theta0,
            t,
            speed: arclen,
        });
    }
    let tau = scale(1.0 / arclen, jet.y_th);
    let nu = [tau[1], -tau[0]];
    let mean_curvature = -cross(jet.y_th, jet.y_thth) / arclen.powi(3);
    let velocity = jet.y_t;
    Ok(GeoFrame {
        theta0,
        t,
        y: jet.y,
        tau,
        nu,
        mean_curvature,
        arclen,
        velocity,
        normal_velocity: dot(velocity, nu),
        tangential_velocity: dot(velocity, tau),
        div_velocity: dot(tau, jet.y_tht) / arclen,
        d_theta_velocity: jet.y_tht,
        band,
    })
}

pub fn frame(sc: &Scenario, theta0: f64, t: f64) -> Result<GeoFrame> {
    frame_from_jet(&sc.jet(theta0, t), sc.band(theta0, t), theta0, t)
}

/// Area factor `J = 1 − r H` of the normal coordinates.
pub fn jacobian(frame: &GeoFrame, r: f64) -> Result<f64> {
    let j = 1.0 - r * frame.mean_curvature;
    if j > 0.0 {
        Ok(j)
    } else {
        Err(Error::SelfIntersection {
            theta0: frame.theta0,
            t: frame.t,
            r,
            jacobian: j,
        })
    }
}

/// Thin-band map and its first derivatives at one reference point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ThinMap {
    pub position: Vec2,
    /// Columns `∂_θ Ψ` and `∂_σ Ψ`.
    pub d_theta: Vec2,
    pub d_sigma: Vec2,
    /// Area element `(1 − rH) |y_θ| ε g`.
    pub det: f64,
    /// `(DΨᵀ DΨ)⁻¹` as `[[g^θθ, g^θσ], [g^θσ, g^σσ]]`.
    pub inverse_metric: [[f64; 2]; 2],
    /// Normal offset `r` and Jacobian `J(r)`.
    pub r: f64,
    pub jacobian: f64,
}

impl ThinMap {
    /// Spatial gradient from a reference gradient: `DΨ⁻ᵀ ∇_ref`.
    pub fn spatial_gradient(&self, d_theta: f64, d_sigma: f64) -> Vec2 {
        // DΨ = [a b]; DΨ⁻ᵀ = (1/det_signed) [ b⊥-ish ]; solve a·x = dθ, b·x = dσ.
        let (a, b) = (self.d_theta, self.d_sigma);
        let det = cross(a, b);
        [
            (d_theta * b[1] - d_sigma * a[1]) / det,
            (d_sigma * a[0] - d_theta * b[0]) / det,
        ]
    }

    /// Reference-coordinate components of a spatial vector: `DΨ⁻¹ v`.
    pub fn to_reference(&self, v: Vec2) -> Vec2 {
        let (a, b) = (self.d_theta, self.d_sigma);
        let det = cross(a, b);
        [cross(v, b) / det, cross(a, v) / det]
    }

    /// `|∇u|²` from a reference gradient.
    pub fn grad_norm_sq(&self, d_theta: f64, d_sigma: f64) -> f64 {
        let g = &self.inverse_metric;
        g[0][0] * d_theta * d_theta + 2.0 * g[0][1] * d_theta * d_sigma + g[1][1] * d_sigma * d_sigma
    }
}

/// Thin map built from a precomputed frame.
pub fn thin_map_from_frame(frame: &GeoFrame, eps: f64, sigma: f64) -> Result<ThinMap> {
    let b = &frame.band;
    let g = b.g();
    let r = eps * (b.g0 + sigma * g);
    let r_theta = eps * (b.g0_theta + sigma * b.g_theta());
    let jac = jacobian(frame, r)?;
    let y_th = scale(frame.arclen, frame.tau);
    let d_theta = axpy(r_theta, frame.nu, scale(jac, y_th));
    let d_sigma = scale(eps * g, frame.nu);
    let det = jac * frame.arclen * eps * g;
    if !(det > 0.0) {
        return Err(Error::SelfIntersection {
            theta0: frame.theta0,
            t: frame.t,
            r,
            jacobian: jac,
        });
    }
    let g11 = dot(d_theta, d_theta);
    let g12 = dot(d_theta, d_sigma);
    let g22 = dot(d_sigma, d_sigma);
    let det_g = det * det;
    Ok(ThinMap {
        position: axpy(r, frame.nu, frame.y),
        d_theta,
        d_sigma,
        det,
        inverse_metric: [[g22 / det_g, -g12 / det_g], [-g12 / det_g, g11 / det_g]],
        r,
        jacobian: jac,
    })
}

pub fn thin_map(sc: &Scenario, eps: f64, theta0: f64, sigma: f64, t: f64) -> Result<ThinMap> {
    thin_map_from_frame(&frame(sc, theta0, t)?, eps, sigma)
}

/// `∂_t Ψ` at fixed reference point, from a precomputed frame.
pub fn material_velocity_from_frame(frame: &GeoFrame, eps: f64, sigma: f64) -> Vec2 {
    let b = &frame.band;
    let r = eps * (b.g0 + sigma * b.g());
    let r_t = eps * (b.g0_t + sigma * b.g_t());
    let nu_t = scale(-dot(frame.nu, frame.d_theta_velocity) / frame.arclen, frame.tau);
    axpy(r, nu_t, axpy(r_t, frame.nu, frame.velocity))
}

pub fn material_velocity(sc: &Scenario, eps: f64, theta0: f64, sigma: f64, t: f64) -> Result<Vec2> {
    let fr = frame(sc, theta0, t)?;
    thin_map_from_frame(&fr, eps, sigma)?;
    Ok(material_velocity_from_frame(&fr, eps, sigma))
}

/// Checks `1 − rH > 0` over both faces on a sample grid.
pub fn check_band(sc: &Scenario, eps: f64, n_theta: usize, n_time: usize) -> Result<()> {
    if !(eps.is_finite() && eps > 0.0) {
        return Err(Error::Config(format!("thickness must be positive, got {eps}")));
    }
    for k in 0..n_time.max(2) {
        let t = sc.final_time() * k as f64 / (n_time.max(2) - 1) as f64;
        for i in 0..n_theta {
            let theta = TAU * i as f64 / n_theta as f64;
            let fr = frame(sc, theta, t)?;
            jacobian(&fr, eps * fr.band.g0)?;
            jacobian(&fr, eps * fr.band.g1)?;
        }
    }
    Ok(())
}

/// Worst discrepancy of one checked quantity.
#[derive(Clone, Debug, PartialEq, serde::Serialize)]
pub struct Discrepancy {
    pub quantity: String,
    pub max: f64,
    pub theta0: f64,
    pub t: f64,
}

#[derive(Clone, Debug, PartialEq, serde::Serialize)]
pub struct FrameValidation {
    pub samples_theta: usize,
    pub samples_time: usize,
    pub tolerance: f64,
    pub checks: Vec<Discrepancy>,
}

impl FrameValidation {
    pub fn worst(&self) -> Option<&Discrepancy> {
        self.checks.iter().max_by(|a, b| a.max.total_cmp(&b.max))
    }

    pub fn max_discrepancy(&self) -> f64 {
        self.worst().map_or(0.0, |d| d.max)
    }

    pub fn passed(&self) -> bool {
        self.max_discrepancy() <= self.tolerance
    }
}

/// Default tolerance of [`validate_frames`].
pub const FRAME_TOLERANCE: f64 = 1e-6;

fn fd_vec(f: impl Fn(f64) -> Vec2, x: f64) -> Vec2 {
    let (p, m) = (f(x + FD_STEP), f(x - FD_STEP));
    [(p[0] - m[0]) / (2.0 * FD_STEP), (p[1] - m[1]) / (2.0 * FD_STEP)]
}

fn rel_err(a: Vec2, b: Vec2) -> f64 {
    let d = (a[0] - b[0]).hypot(a[1] - b[1]);
    d / (1.0 + b[0].hypot(b[1]))
}

struct Tracker {
    checks: Vec<Discrepancy>,
}

impl Tracker {
    fn record(&mut self, quantity: &str, value: f64, theta0: f64, t: f64) {
        let value = if value.is_nan() { f64::INFINITY } else { value };
        match self.checks.iter_mut().find(|d| d.quantity == quantity) {
            Some(d) if value > d.max => {
                d.max = value;
                d.theta0 = theta0;
                d.t = t;
            }
            Some(_) => {}
            None => self.checks.push(Discrepancy {
                quantity: quantity.to_owned(),
                max: value,
                theta0,
                t,
            }),
        }
    }
}

/// Compares the analytic derivatives of a curve against central differences.
pub fn curve_discrepancies(
    curve: &dyn MovingCurve,
    t_max: f64,
    n_theta: usize,
    n_time: usize,
) -> Vec<Discrepancy> {
    let mut tr = Tracker { checks: Vec::new() };
    for k in 0..n_time {
        let t = t_max * k as f64 / (n_time.max(2) - 1) as f64;
        for i in 0..n_theta {
            let th = TAU * i as f64 / n_theta as f64;
            let jet = curve.jet(th, t);
            tr.record("y_theta", rel_err(jet.y_th, fd_vec(|x| curve.jet(x, t).y, th)), th, t);
            tr.record(
                "y_theta_theta",
                rel_err(jet.y_thth, fd_vec(|x| curve.jet(x, t).y_th, th)),
                th,
                t,
            );
            tr.record("y_t", rel_err(jet.y_t, fd_vec(|x| curve.jet(th, x).y, t)), th, t);
            tr.record(
                "y_theta_t",
                rel_err(jet.y_tht, fd_vec(|x| curve.jet(th, x).y_th, t)),
                th,
                t,
            );
            tr.record(
                "y_theta_t_sym",
                rel_err(jet.y_tht, fd_vec(|x| curve.jet(x, t).y_t, th)),
                th,
                t,
            );
        }
    }
    tr.checks
}

/// Compares every analytic derivative the solvers use against central differences on an
/// `n_theta × n_time` sample grid, including the thin-map velocity at `eps`.
pub fn frame_discrepancies(
    sc: &Scenario,
    eps: f64,
    n_theta: usize,
    n_time: usize,
) -> Result<FrameValidation> {
    let mut tr = Tracker {
        checks: curve_discrepancies(sc.curve(), sc.final_time(), n_theta, n_time),
    };
    for k in 0..n_time {
        let t = sc.final_time() * k as f64 / (n_time.max(2) - 1) as f64;
        for i in 0..n_theta {
            let th = TAU * i as f64 / n_theta as f64;
            let fr = frame(sc, th, t)?;
            // ν and H against differentiated tangents: ∂_θ ν = −H ∂_θ y.
            let dnu = fd_vec(|x| frame(sc, x, t).map(|f| f.nu).unwrap_or([f64::NAN; 2]), th);
            let y_th = scale(fr.arclen, fr.tau);
            tr.record("d_theta_nu", rel_err(dnu, scale(-fr.mean_curvature, y_th)), th, t);
            let dnu_t = fd_vec(|x| frame(sc, th, x).map(|f| f.nu).unwrap_or([f64::NAN; 2]), t);
            let nu_t = scale(-dot(fr.nu, fr.d_theta_velocity) / fr.arclen, fr.tau);
            tr.record("d_t_nu", rel_err(dnu_t, nu_t), th, t);
            if sc.has_explicit_band_rates() {
                let (d0, d1) = sc.band_time_derivative_fd(th, t);
                tr.record("dg0_dt", rel_err([fr.band.g0_t, 0.0], [d0, 0.0]), th, t);
                tr.record("dg1_dt", rel_err([fr.band.g1_t, 0.0], [d1, 0.0]), th, t);
            }
            for sigma in [0.0, 0.5, 1.0] {
                let fd = fd_vec(
                    |x| {
                        thin_map(sc, eps, th, sigma, x)
                            .map(|m| m.position)
                            .unwrap_or([f64::NAN; 2])
                    },
                    t,
                );
                let v = material_velocity_from_frame(&fr, eps, sigma);
                tr.record("material_velocity", rel_err(v, fd), th, t);
                let m = thin_map_from_frame(&fr, eps, sigma)?;
                let dpos = fd_vec(
                    |x| {
                        thin_map(sc, eps, x, sigma, t)
                            .map(|m| m.position)
                            .unwrap_or([f64::NAN; 2])
                    },
                    th,
                );
                tr.record("d_theta_psi", rel_err(m.d_theta, dpos), th, t);
            }
        }
    }
    Ok(FrameValidation {
        samples_theta: n_theta,
        samples_time: n_time,
        tolerance: FRAME_TOLERANCE,
        checks: tr.checks,
    })
}

/// [`frame_discrepancies`] turned into a pass/fail result at [`FRAME_TOLERANCE`].
pub fn validate_frames(
    sc: &Scenario,
    eps: f64,
    n_theta: usize,
    n_time: usize,
) -> Result<FrameValidation> {
    let report = frame_discrepancies(sc, eps, n_theta, n_time)?;
    match report.worst() {
        Some(w) if w.max > report.tolerance => Err(Error::Validation(format!(
            "{} differs from finite differences by {:e} at theta0 = {}, t = {}",
            w.quantity, w.max, w.theta0, w.t
        ))),
        _ => Ok(report),
    }
}
