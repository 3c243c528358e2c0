//! Killing submersion models over a coordinate chart.
//!
//! A simply connected Riemannian or Lorentzian 3-manifold carrying a Killing
//! submersion is modeled as `Ω × ℝ` with the metric
//!
//! ```text
//! ds² = λ₁² dx² + λ₂² dy² + ε μ² (dz − λ₁ a dx − λ₂ b dy)²
//! ```
//!
//! determined by the base chart `(Ω, λ₁² dx² + λ₂² dy²)`, the Killing length
//! `μ > 0`, the causal character `ε = ±1` and connection functions `(a, b)`
//! realizing the bundle curvature `τ`. On a star-shaped chart `(a, b)` can
//! always be produced from `τ` by radially integrating a potential.

use std::sync::Arc;

use thiserror::Error;

use crate::expr::{EvalError, ParseError, ScalarField};
use crate::field::{C1Field, Field};
use crate::linalg::{det3, Mat3, Vec3};
use crate::quad::{adaptive_simpson, gl8, QuadControl, QuadError};

pub type ChartPoint = (f64, f64);
pub type AmbientPoint = (f64, f64, f64);

#[derive(Debug, Clone, Error)]
pub enum GeoError {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Quad(#[from] QuadError),
    #[error("domain is not star-shaped with respect to the origin")]
    NotStarShaped,
    #[error("point ({0}, {1}) outside the chart domain")]
    OutsideDomain(f64, f64),
    #[error("validation failed: {0}")]
    Validation(String),
}

/// Causal character of the Killing direction: `+1` Riemannian, `−1`
/// Lorentzian (timelike fibers).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Epsilon {
    Riemannian,
    Lorentzian,
}

impl Epsilon {
    pub fn sign(self) -> f64 {
        match self {
            Epsilon::Riemannian => 1.0,
            Epsilon::Lorentzian => -1.0,
        }
    }

    pub fn flip(self) -> Epsilon {
        match self {
            Epsilon::Riemannian => Epsilon::Lorentzian,
            Epsilon::Lorentzian => Epsilon::Riemannian,
        }
    }

    pub fn from_value(v: f64) -> Option<Epsilon> {
        if v == 1.0 {
            Some(Epsilon::Riemannian)
        } else if v == -1.0 {
            Some(Epsilon::Lorentzian)
        } else {
            None
        }
    }
}

/// Direction a strip runs along.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    X,
    Y,
}

/// Chart domains used by the toolkit. Disks are centered at the origin;
/// rectangles and strips are required to contain the origin when a Calabi
/// potential is requested.
#[derive(Debug, Clone)]
pub enum ChartDomain {
    /// `x² + y² < R²`, `R` possibly infinite.
    Disk { radius: f64 },
    /// Open coordinate rectangle, extents possibly infinite.
    Rectangle { x: (f64, f64), y: (f64, f64) },
    /// Strip of the given width running along `axis`; the cross-section is
    /// centered at 0.
    Strip { width: f64, axis: Axis },
}

impl ChartDomain {
    pub fn plane() -> ChartDomain {
        ChartDomain::Disk {
            radius: f64::INFINITY,
        }
    }

    pub fn contains(&self, p: ChartPoint) -> bool {
        let (x, y) = p;
        match self {
            ChartDomain::Disk { radius } => x.hypot(y) < *radius,
            ChartDomain::Rectangle { x: xr, y: yr } => {
                x > xr.0 && x < xr.1 && y > yr.0 && y < yr.1
            }
            ChartDomain::Strip { width, axis } => {
                let cross = match axis {
                    Axis::X => y,
                    Axis::Y => x,
                };
                cross.abs() < 0.5 * width
            }
        }
    }

    /// All three kinds are convex, so star-shapedness with respect to the
    /// origin reduces to containing the origin.
    pub fn star_shaped(&self) -> bool {
        self.contains((0.0, 0.0))
    }

    /// Finite sampling window for validation grids; infinite extents are
    /// clipped to `[-window, window]`.
    pub fn sample_grid(&self, n: usize, window: f64) -> Vec<ChartPoint> {
        let clip = |lo: f64, hi: f64| -> (f64, f64) {
            (lo.max(-window), hi.min(window))
        };
        let mut pts = Vec::new();
        match self {
            ChartDomain::Disk { radius } => {
                let r = radius.min(window) * 0.98;
                for i in 1..=n {
                    let rho = r * i as f64 / n as f64;
                    for j in 0..n {
                        let th = 2.0 * std::f64::consts::PI * j as f64 / n as f64;
                        pts.push((rho * th.cos(), rho * th.sin()));
                    }
                }
                pts.push((0.0, 0.0));
            }
            ChartDomain::Rectangle { x: xr, y: yr } => {
                let (x0, x1) = clip(xr.0, xr.1);
                let (y0, y1) = clip(yr.0, yr.1);
                for i in 0..n {
                    for j in 0..n {
                        let fx = (i as f64 + 0.5) / n as f64;
                        let fy = (j as f64 + 0.5) / n as f64;
                        pts.push((x0 + fx * (x1 - x0), y0 + fy * (y1 - y0)));
                    }
                }
            }
            ChartDomain::Strip { width, axis } => {
                let half = 0.49 * width.min(2.0 * window);
                for i in 0..n {
                    for j in 0..n {
                        let cross = -half + 2.0 * half * (i as f64 + 0.5) / n as f64;
                        let along = -window + 2.0 * window * (j as f64 + 0.5) / n as f64;
                        pts.push(match axis {
                            Axis::X => (along, cross),
                            Axis::Y => (cross, along),
                        });
                    }
                }
            }
        }
        pts
    }
}

/// The base surface in orthogonal coordinates: `λ₁² dx² + λ₂² dy²`.
#[derive(Debug, Clone)]
pub struct BaseChart {
    pub domain: ChartDomain,
    pub lambda1: C1Field,
    pub lambda2: C1Field,
}

impl BaseChart {
    pub fn new(domain: ChartDomain, lambda1: ScalarField, lambda2: ScalarField) -> BaseChart {
        BaseChart {
            domain,
            lambda1: C1Field::new(lambda1),
            lambda2: C1Field::new(lambda2),
        }
    }

    pub fn conformal(domain: ChartDomain, lambda: ScalarField) -> BaseChart {
        BaseChart::new(domain, lambda.clone(), lambda)
    }

    /// Chart area form `λ₁ λ₂` at a point.
    pub fn area_factor(&self, p: ChartPoint) -> Result<f64, EvalError> {
        Ok(self.lambda1.value(p.0, p.1)? * self.lambda2.value(p.0, p.1)?)
    }

    /// Spot-check positivity of the metric factors on a validation grid.
    pub fn validate(&self, window: f64) -> Result<(), GeoError> {
        for p in self.domain.sample_grid(12, window) {
            let l1 = self.lambda1.value(p.0, p.1)?;
            let l2 = self.lambda2.value(p.0, p.1)?;
            if l1 <= 0.0 || l2 <= 0.0 {
                return Err(GeoError::Validation(format!(
                    "metric factor non-positive at ({}, {}): λ₁={l1}, λ₂={l2}",
                    p.0, p.1
                )));
            }
        }
        Ok(())
    }
}

/// Full prescription of a Killing submersion total space over the chart:
/// bundle curvature `τ`, Killing length `μ > 0`, causal sign `ε`.
#[derive(Debug, Clone)]
pub struct SubmersionSpec {
    pub chart: BaseChart,
    pub tau: C1Field,
    pub mu: C1Field,
    pub epsilon: Epsilon,
}

impl SubmersionSpec {
    pub fn new(
        chart: BaseChart,
        tau: ScalarField,
        mu: ScalarField,
        epsilon: Epsilon,
    ) -> SubmersionSpec {
        SubmersionSpec {
            chart,
            tau: C1Field::new(tau),
            mu: C1Field::new(mu),
            epsilon,
        }
    }

    /// Space form base of curvature `κ` with constant bundle curvature and
    /// unit Killing length: the homogeneous spaces with 4-dimensional
    /// isometry group in their standard submersion.
    pub fn homogeneous(kappa: f64, tau: f64, epsilon: Epsilon) -> SubmersionSpec {
        let radius = if kappa < 0.0 {
            2.0 / (-kappa).sqrt()
        } else {
            f64::INFINITY
        };
        let lambda = ScalarField::parse(&format!("1/(1+({kappa})*(x^2+y^2)/4)")).unwrap();
        let chart = BaseChart::conformal(ChartDomain::Disk { radius }, lambda);
        SubmersionSpec::new(
            chart,
            ScalarField::constant(tau),
            ScalarField::one(),
            epsilon,
        )
    }

    /// Flat total space over the plane: `ℝ³` or `𝕃³`.
    pub fn flat(epsilon: Epsilon) -> SubmersionSpec {
        SubmersionSpec::over_plane(ScalarField::zero(), epsilon)
    }

    /// Flat base, unit Killing length, prescribed bundle curvature.
    pub fn over_plane(tau: ScalarField, epsilon: Epsilon) -> SubmersionSpec {
        let chart = BaseChart::conformal(ChartDomain::plane(), ScalarField::one());
        SubmersionSpec::new(chart, tau, ScalarField::one(), epsilon)
    }

    pub fn validate(&self, window: f64) -> Result<(), GeoError> {
        self.chart.validate(window)?;
        for p in self.chart.domain.sample_grid(12, window) {
            let mu = self.mu.value(p.0, p.1)?;
            if mu <= 0.0 {
                return Err(GeoError::Validation(format!(
                    "Killing length non-positive at ({}, {}): μ={mu}",
                    p.0, p.1
                )));
            }
        }
        Ok(())
    }
}

/// Calabi potential of a spec: the radial-line integral
/// `C(x,y) = 2 ∫₀¹ s τ(sx,sy) λ₁(sx,sy) λ₂(sx,sy) / μ(sx,sy) ds`
/// on a star-shaped chart, with exact derivative quadratures.
#[derive(Debug, Clone)]
pub struct CalabiPotential {
    integrand: C1Field,
    ctl: QuadControl,
}

impl CalabiPotential {
    pub fn of_spec(spec: &SubmersionSpec, ctl: QuadControl) -> Result<CalabiPotential, GeoError> {
        if !spec.chart.domain.star_shaped() {
            return Err(GeoError::NotStarShaped);
        }
        let integrand = spec
            .tau
            .f
            .mul(&spec.chart.lambda1.f)
            .mul(&spec.chart.lambda2.f)
            .div(&spec.mu.f);
        Ok(CalabiPotential {
            integrand: C1Field::new(integrand),
            ctl,
        })
    }

    /// Build directly from an integrand field `τ λ₁ λ₂ / μ`.
    pub fn from_integrand(integrand: ScalarField, ctl: QuadControl) -> CalabiPotential {
        CalabiPotential {
            integrand: C1Field::new(integrand),
            ctl,
        }
    }

    pub fn eval(&self, x: f64, y: f64) -> Result<f64, QuadError> {
        if x == 0.0 && y == 0.0 {
            return self
                .integrand
                .value(0.0, 0.0)
                .map_err(|e| QuadError::Integrand(e.to_string()));
        }
        let f = |s: f64| {
            self.integrand
                .value(s * x, s * y)
                .map(|v| 2.0 * s * v)
                .map_err(|e| QuadError::Integrand(e.to_string()))
        };
        adaptive_simpson(f, 0.0, 1.0, self.ctl)
    }

    pub fn dx(&self, x: f64, y: f64) -> Result<f64, QuadError> {
        let f = |s: f64| {
            self.integrand
                .dx(s * x, s * y)
                .map(|v| 2.0 * s * s * v)
                .map_err(|e| QuadError::Integrand(e.to_string()))
        };
        adaptive_simpson(f, 0.0, 1.0, self.ctl)
    }

    pub fn dy(&self, x: f64, y: f64) -> Result<f64, QuadError> {
        let f = |s: f64| {
            self.integrand
                .dy(s * x, s * y)
                .map(|v| 2.0 * s * s * v)
                .map_err(|e| QuadError::Integrand(e.to_string()))
        };
        adaptive_simpson(f, 0.0, 1.0, self.ctl)
    }

    /// Evaluate the potential at every radius of a ray `θ = const` in one
    /// cumulative sweep: `C(ρ) = (2/ρ²) ∫₀^ρ t I(t cosθ, t sinθ) dt`.
    /// `rhos` must be sorted ascending and non-negative.
    pub fn eval_on_ray(&self, theta: f64, rhos: &[f64]) -> Result<Vec<f64>, QuadError> {
        let (ct, st) = (theta.cos(), theta.sin());
        let f = |t: f64| {
            self.integrand
                .value(t * ct, t * st)
                .map(|v| t * v)
                .map_err(|e| QuadError::Integrand(e.to_string()))
        };
        let mut out = Vec::with_capacity(rhos.len());
        let mut acc = 0.0;
        let mut prev = 0.0;
        for &rho in rhos {
            debug_assert!(rho >= prev);
            if rho > prev {
                // two GL8 panels per grid interval keep smooth integrands at
                // machine precision
                acc += gl8(f, prev, 0.5 * (prev + rho))?;
                acc += gl8(f, 0.5 * (prev + rho), rho)?;
                prev = rho;
            }
            if rho == 0.0 {
                out.push(
                    self.integrand
                        .value(0.0, 0.0)
                        .map_err(|e| QuadError::Integrand(e.to_string()))?,
                );
            } else {
                out.push(2.0 * acc / (rho * rho));
            }
        }
        Ok(out)
    }
}

/// Connection functions `(a, b)` of a model. Either prescribed symbolically
/// or reconstructed from the Calabi potential of a spec.
#[derive(Clone)]
pub enum ModelField {
    Symbolic(C1Field),
    /// `a = −ε y C / λ₁`
    CalabiA {
        pot: Arc<CalabiPotential>,
        lambda1: C1Field,
        eps: f64,
    },
    /// `b = ε x C / λ₂`
    CalabiB {
        pot: Arc<CalabiPotential>,
        lambda2: C1Field,
        eps: f64,
    },
    /// externally supplied differentiable field (quadrature-backed
    /// connection functions of special models).
    Custom(Arc<dyn Field>),
}

impl std::fmt::Debug for ModelField {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ModelField::Symbolic(c) => write!(f, "Symbolic({})", c.f),
            ModelField::CalabiA { .. } => write!(f, "CalabiA"),
            ModelField::CalabiB { .. } => write!(f, "CalabiB"),
            ModelField::Custom(_) => write!(f, "Custom"),
        }
    }
}

fn quad_to_eval(e: QuadError) -> EvalError {
    // quadrature failures surface as non-finite evaluations of the field
    let _ = e;
    EvalError::NonFinite
}

impl Field for ModelField {
    fn value(&self, x: f64, y: f64) -> Result<f64, EvalError> {
        match self {
            ModelField::Symbolic(f) => f.value(x, y),
            ModelField::CalabiA { pot, lambda1, eps } => {
                let c = pot.eval(x, y).map_err(quad_to_eval)?;
                Ok(-eps * y * c / lambda1.value(x, y)?)
            }
            ModelField::CalabiB { pot, lambda2, eps } => {
                let c = pot.eval(x, y).map_err(quad_to_eval)?;
                Ok(eps * x * c / lambda2.value(x, y)?)
            }
            ModelField::Custom(f) => f.value(x, y),
        }
    }

    fn dx(&self, x: f64, y: f64) -> Result<f64, EvalError> {
        match self {
            ModelField::Symbolic(f) => f.dx(x, y),
            ModelField::CalabiA { pot, lambda1, eps } => {
                let c = pot.eval(x, y).map_err(quad_to_eval)?;
                let cx = pot.dx(x, y).map_err(quad_to_eval)?;
                let l = lambda1.value(x, y)?;
                let lx = lambda1.dx(x, y)?;
                Ok(-eps * y * (cx * l - c * lx) / (l * l))
            }
            ModelField::CalabiB { pot, lambda2, eps } => {
                let c = pot.eval(x, y).map_err(quad_to_eval)?;
                let cx = pot.dx(x, y).map_err(quad_to_eval)?;
                let l = lambda2.value(x, y)?;
                let lx = lambda2.dx(x, y)?;
                Ok(eps * ((c + x * cx) * l - x * c * lx) / (l * l))
            }
            ModelField::Custom(f) => f.dx(x, y),
        }
    }

    fn dy(&self, x: f64, y: f64) -> Result<f64, EvalError> {
        match self {
            ModelField::Symbolic(f) => f.dy(x, y),
            ModelField::CalabiA { pot, lambda1, eps } => {
                let c = pot.eval(x, y).map_err(quad_to_eval)?;
                let cy = pot.dy(x, y).map_err(quad_to_eval)?;
                let l = lambda1.value(x, y)?;
                let ly = lambda1.dy(x, y)?;
                Ok(-eps * ((c + y * cy) * l - y * c * ly) / (l * l))
            }
            ModelField::CalabiB { pot, lambda2, eps } => {
                let c = pot.eval(x, y).map_err(quad_to_eval)?;
                let cy = pot.dy(x, y).map_err(quad_to_eval)?;
                let l = lambda2.value(x, y)?;
                let ly = lambda2.dy(x, y)?;
                Ok(eps * x * (cy * l - c * ly) / (l * l))
            }
            ModelField::Custom(f) => f.dy(x, y),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Provenance {
    FromCalabiPotential,
    UserSupplied,
}

/// Connection functions realizing the bundle curvature; houses the chart
/// field `Z = a e₁ + b e₂`.
#[derive(Debug, Clone)]
pub struct AmbientModel {
    pub a: ModelField,
    pub b: ModelField,
    pub provenance: Provenance,
}

impl AmbientModel {
    pub fn symbolic(a: ScalarField, b: ScalarField) -> AmbientModel {
        AmbientModel {
            a: ModelField::Symbolic(C1Field::new(a)),
            b: ModelField::Symbolic(C1Field::new(b)),
            provenance: Provenance::UserSupplied,
        }
    }

    pub fn trivial() -> AmbientModel {
        AmbientModel::symbolic(ScalarField::zero(), ScalarField::zero())
    }

    /// Symbolic connection functions, when available.
    pub fn symbolic_fields(&self) -> Option<(&ScalarField, &ScalarField)> {
        match (&self.a, &self.b) {
            (ModelField::Symbolic(a), ModelField::Symbolic(b)) => Some((&a.f, &b.f)),
            _ => None,
        }
    }
}

/// The Calabi potential of the spec at a chart point.
pub fn calabi_potential(
    spec: &SubmersionSpec,
    p: ChartPoint,
    ctl: QuadControl,
) -> Result<f64, GeoError> {
    if !spec.chart.domain.contains(p) && p != (0.0, 0.0) {
        return Err(GeoError::OutsideDomain(p.0, p.1));
    }
    let pot = CalabiPotential::of_spec(spec, ctl)?;
    Ok(pot.eval(p.0, p.1)?)
}

/// Connection functions from the Calabi potential:
/// `a = −ε y C/λ₁`, `b = ε x C/λ₂`.
pub fn connection_from_potential(
    spec: &SubmersionSpec,
    ctl: QuadControl,
) -> Result<AmbientModel, GeoError> {
    // zero bundle curvature needs no potential and no star-shape assumption
    if spec.tau.f.as_constant() == Some(0.0) {
        let mut model = AmbientModel::trivial();
        model.provenance = Provenance::FromCalabiPotential;
        return Ok(model);
    }
    let pot = Arc::new(CalabiPotential::of_spec(spec, ctl)?);
    let eps = spec.epsilon.sign();
    Ok(AmbientModel {
        a: ModelField::CalabiA {
            pot: pot.clone(),
            lambda1: spec.chart.lambda1.clone(),
            eps,
        },
        b: ModelField::CalabiB {
            pot,
            lambda2: spec.chart.lambda2.clone(),
            eps,
        },
        provenance: Provenance::FromCalabiPotential,
    })
}

/// Bundle curvature reconstructed from the connection functions:
/// `τ = ε μ / (2 λ₁ λ₂) ((λ₂ b)_x − (λ₁ a)_y)`.
pub fn bundle_curvature_from_ab(
    chart: &BaseChart,
    mu: &C1Field,
    model: &AmbientModel,
    epsilon: Epsilon,
    p: ChartPoint,
) -> Result<f64, GeoError> {
    let (x, y) = p;
    let l1 = chart.lambda1.value(x, y)?;
    let l2 = chart.lambda2.value(x, y)?;
    let l1y = chart.lambda1.dy(x, y)?;
    let l2x = chart.lambda2.dx(x, y)?;
    let a = model.a.value(x, y)?;
    let b = model.b.value(x, y)?;
    let ay = model.a.dy(x, y)?;
    let bx = model.b.dx(x, y)?;
    let curl = (l2x * b + l2 * bx) - (l1y * a + l1 * ay);
    Ok(epsilon.sign() * mu.value(x, y)? / (2.0 * l1 * l2) * curl)
}

/// Chart divergence of `J Z = −b e₁ + a e₂`; satisfies
/// `div(JZ) = −2 ε τ / μ`.
pub fn div_jz(
    chart: &BaseChart,
    model: &AmbientModel,
    p: ChartPoint,
) -> Result<f64, GeoError> {
    let (x, y) = p;
    let l1 = chart.lambda1.value(x, y)?;
    let l2 = chart.lambda2.value(x, y)?;
    let l1y = chart.lambda1.dy(x, y)?;
    let l2x = chart.lambda2.dx(x, y)?;
    let a = model.a.value(x, y)?;
    let b = model.b.value(x, y)?;
    let ay = model.a.dy(x, y)?;
    let bx = model.b.dx(x, y)?;
    // div(X₁ e₁ + X₂ e₂) = ((λ₂ X₁)_x + (λ₁ X₂)_y) / (λ₁ λ₂)
    Ok(((-(l2x * b + l2 * bx)) + (l1y * a + l1 * ay)) / (l1 * l2))
}

/// The ambient metric matrix at a point, in coordinates `(x, y, z)`.
#[derive(Debug, Clone)]
pub struct MetricAtPoint {
    pub g: Mat3,
    pub epsilon: Epsilon,
}

impl MetricAtPoint {
    pub fn det(&self) -> f64 {
        det3(&self.g)
    }
}

/// Assemble the line element at the projection of an ambient point. The
/// metric is independent of the fiber coordinate.
pub fn metric_at(
    spec: &SubmersionSpec,
    model: &AmbientModel,
    p3: AmbientPoint,
) -> Result<MetricAtPoint, GeoError> {
    let (x, y, _z) = p3;
    let l1 = spec.chart.lambda1.value(x, y)?;
    let l2 = spec.chart.lambda2.value(x, y)?;
    let mu = spec.mu.value(x, y)?;
    let a = model.a.value(x, y)?;
    let b = model.b.value(x, y)?;
    let eps = spec.epsilon.sign();
    let em2 = eps * mu * mu;
    // expand λ₁²dx² + λ₂²dy² + εμ²(dz − λ₁ a dx − λ₂ b dy)²
    let g = [
        [
            l1 * l1 + em2 * l1 * l1 * a * a,
            em2 * l1 * l2 * a * b,
            -em2 * l1 * a,
        ],
        [
            em2 * l1 * l2 * a * b,
            l2 * l2 + em2 * l2 * l2 * b * b,
            -em2 * l2 * b,
        ],
        [-em2 * l1 * a, -em2 * l2 * b, em2],
    ];
    Ok(MetricAtPoint {
        g,
        epsilon: spec.epsilon,
    })
}

/// The adapted orthonormal frame at a point, rows = coordinate components
/// of `E₁, E₂, E₃`:
/// `E₁ = λ₁⁻¹ ∂x + a ∂z`, `E₂ = λ₂⁻¹ ∂y + b ∂z`, `E₃ = μ⁻¹ ∂z`.
#[derive(Debug, Clone)]
pub struct Frame {
    pub e: Mat3,
    pub epsilon: Epsilon,
    lambda1: f64,
    lambda2: f64,
    mu: f64,
    a: f64,
    b: f64,
}

impl Frame {
    /// Frame components of a coordinate vector.
    pub fn coord_to_frame(&self, v: &Vec3) -> Vec3 {
        let v1 = self.lambda1 * v[0];
        let v2 = self.lambda2 * v[1];
        let v3 = self.mu * (v[2] - self.a * self.lambda1 * v[0] - self.b * self.lambda2 * v[1]);
        [v1, v2, v3]
    }

    /// Coordinate components of a frame vector.
    pub fn frame_to_coord(&self, w: &Vec3) -> Vec3 {
        [
            w[0] * self.e[0][0] + w[1] * self.e[1][0] + w[2] * self.e[2][0],
            w[0] * self.e[0][1] + w[1] * self.e[1][1] + w[2] * self.e[2][1],
            w[0] * self.e[0][2] + w[1] * self.e[1][2] + w[2] * self.e[2][2],
        ]
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }
}

pub fn frame_at(
    spec: &SubmersionSpec,
    model: &AmbientModel,
    p3: AmbientPoint,
) -> Result<Frame, GeoError> {
    let (x, y, _z) = p3;
    let l1 = spec.chart.lambda1.value(x, y)?;
    let l2 = spec.chart.lambda2.value(x, y)?;
    let mu = spec.mu.value(x, y)?;
    let a = model.a.value(x, y)?;
    let b = model.b.value(x, y)?;
    Ok(Frame {
        e: [
            [1.0 / l1, 0.0, a],
            [0.0, 1.0 / l2, b],
            [0.0, 0.0, 1.0 / mu],
        ],
        epsilon: spec.epsilon,
        lambda1: l1,
        lambda2: l2,
        mu,
        a,
        b,
    })
}

/// Signature-aware inner product of frame components: `diag(1, 1, ε)`.
pub fn frame_ip(u: &Vec3, v: &Vec3, eps: f64) -> f64 {
    u[0] * v[0] + u[1] * v[1] + eps * u[2] * v[2]
}

/// Cross product in frame components, fixed by `E₁×E₂ = εE₃`,
/// `E₂×E₃ = E₁`, `E₃×E₁ = E₂`.
pub fn frame_cross(u: &Vec3, v: &Vec3, eps: f64) -> Vec3 {
    [
        u[1] * v[2] - u[2] * v[1],
        u[2] * v[0] - u[0] * v[2],
        eps * (u[0] * v[1] - u[1] * v[0]),
    ]
}
