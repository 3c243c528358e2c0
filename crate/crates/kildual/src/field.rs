//! Differentiable coefficient fields on the chart.
//!
//! [`C1Field`] bundles a scalar field with its precomputed exact partials;
//! [`C2Field`] adds the second-order partials needed by graph calculus.
//! The [`Field`] trait abstracts over symbolic fields and quadrature-backed
//! fields (Calabi connection functions), which both expose exact first
//! derivatives.

use crate::expr::{EvalError, ScalarField, Var};

/// A real field on the chart with exact first partial derivatives.
pub trait Field: Send + Sync {
    fn value(&self, x: f64, y: f64) -> Result<f64, EvalError>;
    fn dx(&self, x: f64, y: f64) -> Result<f64, EvalError>;
    fn dy(&self, x: f64, y: f64) -> Result<f64, EvalError>;

    /// Unchecked value; panics on domain errors. For fields smooth by
    /// construction on the sampled region.
    fn v(&self, x: f64, y: f64) -> f64 {
        self.value(x, y)
            .unwrap_or_else(|e| panic!("field evaluation failed at ({x}, {y}): {e}"))
    }
}

/// Symbolic field with cached first partials.
#[derive(Debug, Clone)]
pub struct C1Field {
    pub f: ScalarField,
    pub fx: ScalarField,
    pub fy: ScalarField,
}

impl C1Field {
    pub fn new(f: ScalarField) -> C1Field {
        let fx = f.differentiate(Var::X);
        let fy = f.differentiate(Var::Y);
        C1Field { f, fx, fy }
    }

    pub fn constant(c: f64) -> C1Field {
        C1Field::new(ScalarField::constant(c))
    }
}

impl Field for C1Field {
    fn value(&self, x: f64, y: f64) -> Result<f64, EvalError> {
        self.f.eval(x, y)
    }

    fn dx(&self, x: f64, y: f64) -> Result<f64, EvalError> {
        self.fx.eval(x, y)
    }

    fn dy(&self, x: f64, y: f64) -> Result<f64, EvalError> {
        self.fy.eval(x, y)
    }
}

/// A field with exact second partials, the regularity the divergence-form
/// mean curvature operator needs.
pub trait FieldC2: Field {
    fn dxx(&self, x: f64, y: f64) -> Result<f64, EvalError>;
    fn dxy(&self, x: f64, y: f64) -> Result<f64, EvalError>;
    fn dyy(&self, x: f64, y: f64) -> Result<f64, EvalError>;
}

/// Symbolic field with first and second partials, the regularity needed by
/// the divergence-form mean curvature operator.
#[derive(Debug, Clone)]
pub struct C2Field {
    pub f: ScalarField,
    pub fx: ScalarField,
    pub fy: ScalarField,
    pub fxx: ScalarField,
    pub fxy: ScalarField,
    pub fyy: ScalarField,
}

impl C2Field {
    pub fn new(f: ScalarField) -> C2Field {
        let fx = f.differentiate(Var::X);
        let fy = f.differentiate(Var::Y);
        let fxx = fx.differentiate(Var::X);
        let fxy = fx.differentiate(Var::Y);
        let fyy = fy.differentiate(Var::Y);
        C2Field {
            f,
            fx,
            fy,
            fxx,
            fxy,
            fyy,
        }
    }
}

impl Field for C2Field {
    fn value(&self, x: f64, y: f64) -> Result<f64, EvalError> {
        self.f.eval(x, y)
    }

    fn dx(&self, x: f64, y: f64) -> Result<f64, EvalError> {
        self.fx.eval(x, y)
    }

    fn dy(&self, x: f64, y: f64) -> Result<f64, EvalError> {
        self.fy.eval(x, y)
    }
}

impl FieldC2 for C2Field {
    fn dxx(&self, x: f64, y: f64) -> Result<f64, EvalError> {
        self.fxx.eval(x, y)
    }

    fn dxy(&self, x: f64, y: f64) -> Result<f64, EvalError> {
        self.fxy.eval(x, y)
    }

    fn dyy(&self, x: f64, y: f64) -> Result<f64, EvalError> {
        self.fyy.eval(x, y)
    }
}
