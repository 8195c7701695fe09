//! Problem instances: moving curve, band profiles, data, exponent and horizon.
//!
//! A scenario file is a JSON object:
//!
//! ```json
//! {
//!   "name": "pulsating_ellipse",
//!   "p": 3.0,
//!   "T": 0.5,
//!   "curve": { "family": "pulsating_ellipse", "a": 1.2, "b": 0.9, "amplitude": 0.15, "omega": 6.283 },
//!   "g0": -0.5,
//!   "g1": "0.5 + 0.25*cos(theta)",
//!   "f": 0,
//!   "v0": "1 + 0.5*cos(theta)"
//! }
//! ```
//!
//! Optional keys: `g0_t`, `g1_t` (explicit time derivatives of the profiles; central
//! differences are used otherwise), `f_thin` (thin-band source in `theta, sigma, r, t`;
//! defaults to the constant normal extension of `f`) and `u0_thin` (thin-band initial
//! data in `theta, sigma, r`; defaults to the lifting `v0 / J`). Unknown keys are
//! rejected.

use std::f64::consts::TAU;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::curve::{signed_area, CurveFamily, CurveJet, MovingCurve};
use crate::error::{Error, Result};
use crate::expr::{ExprText, ScalarExpr};

/// Central-difference step for derivatives the scenario does not supply.
pub const FD_STEP: f64 = 1e-5;

const LOAD_SAMPLES_THETA: usize = 256;
const LOAD_SAMPLES_TIME: usize = 9;
const RICHARDSON_TOL: f64 = 1e-6;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSpec {
    pub name: String,
    pub p: f64,
    #[serde(rename = "T")]
    pub final_time: f64,
    pub curve: CurveFamily,
    pub g0: ExprText,
    pub g1: ExprText,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub g0_t: Option<ExprText>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub g1_t: Option<ExprText>,
    #[serde(default = "zero_expr")]
    pub f: ExprText,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub f_thin: Option<ExprText>,
    pub v0: ExprText,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub u0_thin: Option<ExprText>,
}

fn zero_expr() -> ExprText {
    ExprText::Number(0.0)
}

impl ScenarioSpec {
    /// Band `0 < r < ε`, zero source, zero data.
    pub fn new(name: &str, curve: CurveFamily, p: f64, final_time: f64) -> Self {
        ScenarioSpec {
            name: name.to_owned(),
            p,
            final_time,
            curve,
            g0: ExprText::Number(0.0),
            g1: ExprText::Number(1.0),
            g0_t: None,
            g1_t: None,
            f: zero_expr(),
            f_thin: None,
            v0: ExprText::Number(0.0),
            u0_thin: None,
        }
    }

    pub fn band(mut self, g0: impl Into<ExprText>, g1: impl Into<ExprText>) -> Self {
        self.g0 = g0.into();
        self.g1 = g1.into();
        self
    }

    pub fn initial(mut self, v0: impl Into<ExprText>) -> Self {
        self.v0 = v0.into();
        self
    }

    pub fn source(mut self, f: impl Into<ExprText>) -> Self {
        self.f = f.into();
        self
    }

    pub fn thin_initial(mut self, u0: impl Into<ExprText>) -> Self {
        self.u0_thin = Some(u0.into());
        self
    }

    pub fn build(self) -> Result<Scenario> {
        Scenario::from_spec(self)
    }
}

/// Band profiles and their derivatives at one material point and time.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BandProfile {
    pub g0: f64,
    pub g1: f64,
    pub g0_theta: f64,
    pub g1_theta: f64,
    pub g0_t: f64,
    pub g1_t: f64,
}

impl BandProfile {
    pub fn g(&self) -> f64 {
        self.g1 - self.g0
    }

    pub fn g_theta(&self) -> f64 {
        self.g1_theta - self.g0_theta
    }

    pub fn g_t(&self) -> f64 {
        self.g1_t - self.g0_t
    }
}

#[derive(Clone, Debug)]
struct Fields {
    g0: ScalarExpr,
    g1: ScalarExpr,
    g0_t: Option<ScalarExpr>,
    g1_t: Option<ScalarExpr>,
    f: ScalarExpr,
    f_thin: Option<ScalarExpr>,
    v0: ScalarExpr,
    u0_thin: Option<ScalarExpr>,
}

/// A validated, immutable problem instance.
#[derive(Clone, Debug)]
pub struct Scenario {
    spec: ScenarioSpec,
    fields: Fields,
}

fn central(f: impl Fn(f64) -> f64, x: f64) -> f64 {
    central_with(&f, x, FD_STEP)
}

fn central_with(f: &impl Fn(f64) -> f64, x: f64, h: f64) -> f64 {
    (f(x + h) - f(x - h)) / (2.0 * h)
}

/// Richardson estimate of the error of [`central`]: the steps `h` and `2h` differ by
/// about three times the error at `h` when `f` is smooth.
fn central_error_estimate(f: impl Fn(f64) -> f64, x: f64) -> (f64, f64) {
    let fine = central_with(&f, x, FD_STEP);
    let coarse = central_with(&f, x, 2.0 * FD_STEP);
    (fine, (fine - coarse).abs() / 3.0)
}

impl Scenario {
    pub fn from_spec(spec: ScenarioSpec) -> Result<Self> {
        let on_curve = ["theta", "t"];
        let thin = ["theta", "sigma", "r", "t"];
        let opt = |e: &Option<ExprText>, vars: &[&str]| -> Result<Option<ScalarExpr>> {
            e.as_ref().map(|e| ScalarExpr::parse(e, vars)).transpose()
        };
        let fields = Fields {
            g0: ScalarExpr::parse(&spec.g0, &on_curve)?,
            g1: ScalarExpr::parse(&spec.g1, &on_curve)?,
            g0_t: opt(&spec.g0_t, &on_curve)?,
            g1_t: opt(&spec.g1_t, &on_curve)?,
            f: ScalarExpr::parse(&spec.f, &on_curve)?,
            f_thin: opt(&spec.f_thin, &thin)?,
            v0: ScalarExpr::parse(&spec.v0, &["theta"])?,
            u0_thin: opt(&spec.u0_thin, &["theta", "sigma", "r"])?,
        };
        let sc = Scenario { spec, fields };
        sc.validate()?;
        Ok(sc)
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        let spec: ScenarioSpec = serde_json::from_str(text)
            .map_err(|e| Error::Scenario(format!("schema violation: {e}")))?;
        Self::from_spec(spec)
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json_str(&text)
            .map_err(|e| Error::Scenario(format!("{}: {e}", path.display())))
    }

    fn validate(&self) -> Result<()> {
        let s = &self.spec;
        let bad = |m: String| Err(Error::Scenario(format!("{}: {m}", s.name)));
        if s.name.is_empty() {
            return bad("empty name".into());
        }
        if !(s.p.is_finite() && s.p >= 2.0) {
            return bad(format!("exponent p must satisfy p >= 2, got {}", s.p));
        }
        if !(s.final_time.is_finite() && s.final_time > 0.0) {
            return bad(format!("final time T must be positive, got {}", s.final_time));
        }
        if let Err(m) = s.curve.check_parameters() {
            return bad(m);
        }
        let mut min_g = f64::INFINITY;
        for k in 0..LOAD_SAMPLES_TIME {
            let t = s.final_time * k as f64 / (LOAD_SAMPLES_TIME - 1) as f64;
            if signed_area(&s.curve, t, LOAD_SAMPLES_THETA) <= 0.0 {
                return bad(format!("curve is not counterclockwise at t = {t}"));
            }
            for i in 0..LOAD_SAMPLES_THETA {
                let theta = TAU * i as f64 / LOAD_SAMPLES_THETA as f64;
                let jet = s.curve.jet(theta, t);
                let speed = jet.y_th[0].hypot(jet.y_th[1]);
                if !(speed > 1e-10) {
                    return Err(Error::DegenerateCurve {
                        theta0: theta,
                        t,
                        speed,
                    });
                }
                let band = self.band(theta, t);
                let values = [band.g0, band.g1, band.g0_t, band.g1_t, self.source(theta, t)];
                if values.iter().any(|v| !v.is_finite()) {
                    return bad(format!("non-finite band or source at theta = {theta}, t = {t}"));
                }
                min_g = min_g.min(band.g());
                self.check_differences(theta, t)?;
            }
        }
        if !(min_g > 1e-8) {
            return bad(format!("g = g1 - g0 must be positive everywhere, min is {min_g}"));
        }
        Ok(())
    }

    /// Cross-checks every differenced band derivative against a step-doubled one.
    fn check_differences(&self, theta: f64, t: f64) -> Result<()> {
        let fl = &self.fields;
        let profiles = [("g0", &fl.g0, &fl.g0_t), ("g1", &fl.g1, &fl.g1_t)];
        for (name, e, explicit) in profiles {
            if e.as_constant().is_some() {
                continue;
            }
            let mut estimates = vec![central_error_estimate(|x| e.eval(x, 0.0, 0.0, t), theta)];
            if explicit.is_none() {
                estimates.push(central_error_estimate(|x| e.eval(theta, 0.0, 0.0, x), t));
            }
            for (d, err) in estimates {
                if !(err <= RICHARDSON_TOL * (1.0 + d.abs())) {
                    return Err(Error::Scenario(format!(
                        "{}: {name} is not smooth enough to difference at theta = {theta}, t = {t} \
                         (estimated derivative error {err:e})",
                        self.spec.name
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn spec(&self) -> &ScenarioSpec {
        &self.spec
    }

    pub fn name(&self) -> &str {
        &self.spec.name
    }

    pub fn p(&self) -> f64 {
        self.spec.p
    }

    pub fn final_time(&self) -> f64 {
        self.spec.final_time
    }

    pub fn curve(&self) -> &CurveFamily {
        &self.spec.curve
    }

    pub fn jet(&self, theta: f64, t: f64) -> CurveJet {
        self.spec.curve.jet(theta, t)
    }

    pub fn band(&self, theta: f64, t: f64) -> BandProfile {
        let fl = &self.fields;
        let at = |e: &ScalarExpr, th: f64, tt: f64| e.eval(th, 0.0, 0.0, tt);
        let d_theta = |e: &ScalarExpr| match e.as_constant() {
            Some(_) => 0.0,
            None => central(|x| at(e, x, t), theta),
        };
        let d_t = |e: &ScalarExpr, explicit: &Option<ScalarExpr>| match (explicit, e.as_constant()) {
            (Some(d), _) => at(d, theta, t),
            (None, Some(_)) => 0.0,
            (None, None) => central(|x| at(e, theta, x), t),
        };
        BandProfile {
            g0: at(&fl.g0, theta, t),
            g1: at(&fl.g1, theta, t),
            g0_theta: d_theta(&fl.g0),
            g1_theta: d_theta(&fl.g1),
            g0_t: d_t(&fl.g0, &fl.g0_t),
            g1_t: d_t(&fl.g1, &fl.g1_t),
        }
    }

    /// Time derivatives of the profiles by central differences, ignoring any explicit
    /// expressions. Used to cross-check them.
    pub fn band_time_derivative_fd(&self, theta: f64, t: f64) -> (f64, f64) {
        let fl = &self.fields;
        (
            central(|x| fl.g0.eval(theta, 0.0, 0.0, x), t),
            central(|x| fl.g1.eval(theta, 0.0, 0.0, x), t),
        )
    }

    pub fn has_explicit_band_rates(&self) -> bool {
        self.fields.g0_t.is_some() || self.fields.g1_t.is_some()
    }

    /// Source of the curve problem.
    pub fn source(&self, theta: f64, t: f64) -> f64 {
        self.fields.f.eval(theta, 0.0, 0.0, t)
    }

    pub fn source_is_zero(&self) -> bool {
        self.fields.f.as_constant() == Some(0.0)
            && self
                .fields
                .f_thin
                .as_ref()
                .is_none_or(|e| e.as_constant() == Some(0.0))
    }

    /// Explicit thin-band source, if the scenario gives one.
    pub fn thin_source(&self) -> Option<&ScalarExpr> {
        self.fields.f_thin.as_ref()
    }

    pub fn initial_value(&self, theta: f64) -> f64 {
        self.fields.v0.eval(theta, 0.0, 0.0, 0.0)
    }

    /// Explicit thin-band initial data, if the scenario gives one.
    pub fn thin_initial(&self) -> Option<&ScalarExpr> {
        self.fields.u0_thin.as_ref()
    }

    /// Copy with a different exponent.
    pub fn with_p(&self, p: f64) -> Result<Self> {
        let mut spec = self.spec.clone();
        spec.p = p;
        Self::from_spec(spec)
    }

    /// Copy with both sources set to zero.
    pub fn without_source(&self) -> Result<Self> {
        let mut spec = self.spec.clone();
        spec.f = zero_expr();
        spec.f_thin = None;
        Self::from_spec(spec)
    }

    pub fn with_final_time(&self, final_time: f64) -> Result<Self> {
        let mut spec = self.spec.clone();
        spec.final_time = final_time;
        Self::from_spec(spec)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base() -> ScenarioSpec {
        ScenarioSpec::new("c", CurveFamily::Circle { radius: 1.0 }, 3.0, 1.0)
    }

    #[test]
    fn parses_documented_example() {
        let text = r#"{
          "name": "pulsating_ellipse", "p": 3.0, "T": 0.5,
          "curve": { "family": "pulsating_ellipse", "a": 1.2, "b": 0.9, "amplitude": 0.15, "omega": 6.283 },
          "g0": -0.5, "g1": "0.5 + 0.25*cos(theta)", "f": 0, "v0": "1 + 0.5*cos(theta)"
        }"#;
        let sc = Scenario::from_json_str(text).unwrap();
        let b = sc.band(0.0, 0.1);
        assert_eq!(b.g0, -0.5);
        assert!((b.g1 - 0.75).abs() < 1e-15);
        assert!(b.g1_theta.abs() < 1e-9);
        assert!((sc.band(std::f64::consts::FRAC_PI_2, 0.0).g1_theta + 0.25).abs() < 1e-9);
        assert!(sc.source_is_zero());
    }

    #[test]
    fn rejects_unknown_keys_and_bad_values() {
        let text = r#"{"name":"x","p":3,"T":1,"curve":{"family":"circle","radius":1},
                       "g0":0,"g1":1,"v0":1,"colour":"red"}"#;
        assert!(matches!(Scenario::from_json_str(text), Err(Error::Scenario(_))));
        assert!(base().band(0.5, 0.5).build().is_err());
        assert!(base().band(0.0, "cos(theta)").build().is_err());
        let mut low_p = base();
        low_p.p = 1.5;
        assert!(low_p.build().is_err());
        let mut no_time = base();
        no_time.final_time = 0.0;
        assert!(no_time.build().is_err());
        assert!(base().initial("sigma").build().is_err());
        // oscillation on the scale of the differencing step defeats the derivatives
        assert!(base().band(0.0, "1 + 1e-3*sin(2000*theta)").build().is_err());
        assert!(base().band(0.0, "1 + 1e-3*sin(20*theta)").build().is_ok());
    }

    #[test]
    fn explicit_rates_take_precedence() {
        let mut spec = base().band(0.0, "1 + 0.1*t");
        let sc = spec.clone().build().unwrap();
        assert!((sc.band(0.0, 0.3).g1_t - 0.1).abs() < 1e-9);
        spec.g1_t = Some("0.25".into());
        let sc = spec.build().unwrap();
        assert_eq!(sc.band(0.0, 0.3).g1_t, 0.25);
        assert!((sc.band_time_derivative_fd(0.0, 0.3).1 - 0.1).abs() < 1e-9);
    }
}
