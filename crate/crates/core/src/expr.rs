//! Scalar fields given as arithmetic expressions in scenario files.
//!
//! Expressions use the usual infix syntax with `sin`, `cos`, `exp`, `sqrt`, `abs`, ...
//! and the constants `pi` and `e`. Every field is evaluated with the variables
//! `theta` (material parameter), `sigma` (thickness coordinate in [0, 1]),
//! `r` (signed normal offset) and `t`; which of them a field may mention is fixed
//! per field.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const VARIABLES: [&str; 4] = ["theta", "sigma", "r", "t"];

thread_local! {
    static BUILTIN: meval::Context<'static> = meval::Context::new();
}

/// Expression text as it appears in a scenario file: a string or a bare number.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ExprText {
    Number(f64),
    Text(String),
}

impl ExprText {
    pub fn as_source(&self) -> String {
        match self {
            ExprText::Number(v) => format!("{v:?}"),
            ExprText::Text(s) => s.clone(),
        }
    }
}

impl From<&str> for ExprText {
    fn from(s: &str) -> Self {
        ExprText::Text(s.to_owned())
    }
}

impl From<f64> for ExprText {
    fn from(v: f64) -> Self {
        ExprText::Number(v)
    }
}

#[derive(Clone)]
pub struct ScalarExpr {
    source: String,
    expr: meval::Expr,
    constant: Option<f64>,
}

impl fmt::Debug for ScalarExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ScalarExpr({:?})", self.source)
    }
}

impl ScalarExpr {
    /// Parses `text`, rejecting any variable outside `allowed`.
    pub fn parse(text: &ExprText, allowed: &[&str]) -> Result<Self> {
        let source = text.as_source();
        let err = |message: String| Error::Expression {
            source_text: source.clone(),
            message,
        };
        let expr: meval::Expr = source.parse().map_err(|e| err(format!("{e}")))?;
        // Binding fails exactly when the expression mentions an unknown name.
        if let Err(e) = expr.clone().bindn_with_context(meval::Context::new(), allowed) {
            return Err(err(format!("{e} (allowed variables: {})", allowed.join(", "))));
        }
        let constant = BUILTIN
            .with(|ctx| expr.eval_with_context(ctx))
            .ok()
            .filter(|v| v.is_finite());
        Ok(ScalarExpr {
            source,
            expr,
            constant,
        })
    }

    pub fn constant(value: f64) -> Self {
        Self::parse(&ExprText::Number(value), &[]).expect("number literal")
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    /// `Some(c)` when the expression mentions no variables.
    pub fn as_constant(&self) -> Option<f64> {
        self.constant
    }

    pub fn eval(&self, theta: f64, sigma: f64, r: f64, t: f64) -> f64 {
        if let Some(c) = self.constant {
            return c;
        }
        let vars = [
            (VARIABLES[0], theta),
            (VARIABLES[1], sigma),
            (VARIABLES[2], r),
            (VARIABLES[3], t),
        ];
        BUILTIN
            .with(|ctx| self.expr.eval_with_context((vars, ctx)))
            .unwrap_or(f64::NAN)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn evaluates_with_builtins() {
        let e = ScalarExpr::parse(&"1 + 0.5*cos(theta) + t*pi".into(), &["theta", "t"]).unwrap();
        let v = e.eval(0.0, 0.3, 0.2, 2.0);
        assert!((v - (1.5 + 2.0 * std::f64::consts::PI)).abs() < 1e-14);
        assert!(e.as_constant().is_none());
    }

    #[test]
    fn numbers_are_constants() {
        let e = ScalarExpr::parse(&ExprText::Number(-0.5), &[]).unwrap();
        assert_eq!(e.as_constant(), Some(-0.5));
        assert_eq!(e.eval(1.0, 2.0, 3.0, 4.0), -0.5);
    }

    #[test]
    fn rejects_unknown_variable() {
        let err = ScalarExpr::parse(&"sigma + 1".into(), &["theta", "t"]).unwrap_err();
        assert!(matches!(err, Error::Expression { .. }), "{err}");
        assert!(ScalarExpr::parse(&"1 +* 2".into(), &[]).is_err());
    }
}
