//! Built-in families of moving closed plane curves with closed-form derivatives.
//!
//! All families are parametrized counterclockwise by the material parameter
//! `theta` in [0, 2π), so `∂_t y` at fixed `theta` is the total velocity of the curve.

use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;

pub type Vec2 = [f64; 2];

/// Position and derivatives of a moving curve at one material point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CurveJet {
    pub y: Vec2,
    /// ∂_θ y
    pub y_th: Vec2,
    /// ∂_θθ y
    pub y_thth: Vec2,
    /// ∂_t y
    pub y_t: Vec2,
    /// ∂_θ ∂_t y
    pub y_tht: Vec2,
}

pub trait MovingCurve: Send + Sync {
    fn jet(&self, theta: f64, t: f64) -> CurveJet;

    /// Radius and its rate when the curve is a circle centred at the origin.
    fn as_circle(&self) -> Option<(f64, f64)> {
        None
    }

    fn radius_at(&self, _t: f64) -> Option<f64> {
        None
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum CurveFamily {
    /// Static circle of the given radius.
    Circle { radius: f64 },
    /// Circle with radius `radius + rate * t`.
    ExpandingCircle { radius: f64, rate: f64 },
    /// Static ellipse with semi-axes `a`, `b`.
    Ellipse { a: f64, b: f64 },
    /// Ellipse with semi-axes `a (1 + amplitude sin(omega t))` and
    /// `b (1 - amplitude sin(omega t))`.
    PulsatingEllipse {
        a: f64,
        b: f64,
        amplitude: f64,
        omega: f64,
    },
    /// Polar curve `radius (1 + amplitude cos(lobes theta - omega t))`.
    Star {
        radius: f64,
        amplitude: f64,
        lobes: u32,
        #[serde(default)]
        omega: f64,
    },
}

fn polar_jet(rho: [f64; 5], theta: f64) -> CurveJet {
    // rho = [ρ, ρ_θ, ρ_θθ, ρ_t, ρ_θt]
    let (s, c) = theta.sin_cos();
    let e = [c, s];
    let ep = [-s, c];
    let comb = |a: f64, b: f64| [a * e[0] + b * ep[0], a * e[1] + b * ep[1]];
    CurveJet {
        y: comb(rho[0], 0.0),
        y_th: comb(rho[1], rho[0]),
        y_thth: comb(rho[2] - rho[0], 2.0 * rho[1]),
        y_t: comb(rho[3], 0.0),
        y_tht: comb(rho[4], rho[3]),
    }
}

impl CurveFamily {
    pub fn name(&self) -> &'static str {
        match self {
            CurveFamily::Circle { .. } => "circle",
            CurveFamily::ExpandingCircle { .. } => "expanding_circle",
            CurveFamily::Ellipse { .. } => "ellipse",
            CurveFamily::PulsatingEllipse { .. } => "pulsating_ellipse",
            CurveFamily::Star { .. } => "star",
        }
    }

    /// Parameter sanity that does not need sampling.
    pub fn check_parameters(&self) -> Result<(), String> {
        let positive = |name: &str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(format!("{} parameter `{name}` must be positive, got {v}", self.name()))
            }
        };
        let finite = |name: &str, v: f64| {
            if v.is_finite() {
                Ok(())
            } else {
                Err(format!("{} parameter `{name}` must be finite", self.name()))
            }
        };
        match *self {
            CurveFamily::Circle { radius } => positive("radius", radius),
            CurveFamily::ExpandingCircle { radius, rate } => {
                positive("radius", radius)?;
                finite("rate", rate)
            }
            CurveFamily::Ellipse { a, b } => {
                positive("a", a)?;
                positive("b", b)
            }
            CurveFamily::PulsatingEllipse {
                a,
                b,
                amplitude,
                omega,
            } => {
                positive("a", a)?;
                positive("b", b)?;
                finite("omega", omega)?;
                if !(0.0..1.0).contains(&amplitude.abs()) {
                    return Err("pulsating_ellipse amplitude must satisfy |amplitude| < 1".into());
                }
                Ok(())
            }
            CurveFamily::Star {
                radius,
                amplitude,
                lobes,
                omega,
            } => {
                positive("radius", radius)?;
                finite("omega", omega)?;
                if lobes == 0 {
                    return Err("star needs at least one lobe".into());
                }
                if !(0.0..1.0).contains(&amplitude.abs()) {
                    return Err("star amplitude must satisfy |amplitude| < 1".into());
                }
                Ok(())
            }
        }
    }
}

impl MovingCurve for CurveFamily {
    fn jet(&self, theta: f64, t: f64) -> CurveJet {
        match *self {
            CurveFamily::Circle { radius } => polar_jet([radius, 0.0, 0.0, 0.0, 0.0], theta),
            CurveFamily::ExpandingCircle { radius, rate } => {
                polar_jet([radius + rate * t, 0.0, 0.0, rate, 0.0], theta)
            }
            CurveFamily::Ellipse { a, b } => ellipse_jet(a, b, 0.0, 0.0, theta),
            CurveFamily::PulsatingEllipse {
                a,
                b,
                amplitude,
                omega,
            } => {
                let (s, c) = (omega * t).sin_cos();
                let at = a * (1.0 + amplitude * s);
                let bt = b * (1.0 - amplitude * s);
                let da = a * amplitude * omega * c;
                let db = -b * amplitude * omega * c;
                ellipse_jet(at, bt, da, db, theta)
            }
            CurveFamily::Star {
                radius,
                amplitude,
                lobes,
                omega,
            } => {
                let k = lobes as f64;
                let (s, c) = (k * theta - omega * t).sin_cos();
                polar_jet(
                    [
                        radius * (1.0 + amplitude * c),
                        -radius * amplitude * k * s,
                        -radius * amplitude * k * k * c,
                        radius * amplitude * omega * s,
                        radius * amplitude * omega * k * c,
                    ],
                    theta,
                )
            }
        }
    }

    fn as_circle(&self) -> Option<(f64, f64)> {
        match *self {
            CurveFamily::Circle { radius } => Some((radius, 0.0)),
            CurveFamily::ExpandingCircle { radius, rate } => Some((radius, rate)),
            _ => None,
        }
    }

    fn radius_at(&self, t: f64) -> Option<f64> {
        self.as_circle().map(|(r0, rate)| r0 + rate * t)
    }
}

fn ellipse_jet(a: f64, b: f64, da: f64, db: f64, theta: f64) -> CurveJet {
    let (s, c) = theta.sin_cos();
    CurveJet {
        y: [a * c, b * s],
        y_th: [-a * s, b * c],
        y_thth: [-a * c, -b * s],
        y_t: [da * c, db * s],
        y_tht: [-da * s, db * c],
    }
}

/// Signed enclosed area, positive for counterclockwise curves.
pub fn signed_area(curve: &dyn MovingCurve, t: f64, samples: usize) -> f64 {
    let h = TAU / samples as f64;
    (0..samples)
        .map(|i| {
            let j = curve.jet(i as f64 * h, t);
            0.5 * (j.y[0] * j.y_th[1] - j.y[1] * j.y_th[0]) * h
        })
        .sum()
}
