//! Numerical differential geometry of Killing submersions.
//!
//! The crate models Riemannian and Lorentzian 3-manifolds fibered over a
//! coordinate chart by a Killing field, computes the mean curvature of
//! sections (Killing graphs) in conservative divergence form, executes the
//! conformal duality that exchanges mean curvature and bundle curvature
//! while inverting the Killing length, solves the prescribed-mean-curvature
//! Dirichlet problem on disks, and classifies rotationally invariant
//! constant-mean-curvature surfaces (entire graph / sphere / cigar) together
//! with the associated weighted Cheeger constant.

pub mod config;
pub mod curvature;
pub mod duality;
pub mod expr;
pub mod field;
pub mod geometry;
pub mod graphs;
pub mod linalg;
pub mod quad;
pub mod report;
pub mod rotational;
pub mod sampling;
pub mod solver;

pub use expr::{EvalError, ParseError, ScalarField, Var};
pub use geometry::{
    AmbientModel, Axis, BaseChart, ChartDomain, Epsilon, GeoError, SubmersionSpec,
};
