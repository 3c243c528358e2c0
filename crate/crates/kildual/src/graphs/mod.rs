//! Killing graphs: generalized gradient, area element, angle function, mean
//! curvature in conservative divergence form, induced metric, area and flux
//! integrals.
//!
//! A graph is a section `z = u(x,y)` of the submersion. Its pointwise data
//! are carried by `α = u_x/λ₁ − a`, `β = u_y/λ₂ − b` (the frame components
//! of the generalized gradient `Gu = ∇u − Z`), the area element
//! `ω = √(1 + εμ²(α²+β²))` and the angle function `ν = εμ/ω`.

pub(crate) mod grid;

pub use grid::{
    mean_curvature_grid, polar_coeffs, CartesianCoeffs, CartesianMesh, FaceStencil, GraphGrid,
    PolarCoeffs, PolarMesh, SPACELIKE_MARGIN,
};

use thiserror::Error;

use crate::expr::{EvalError, ScalarField, Var};
use crate::field::{Field, FieldC2};
use crate::geometry::{AmbientModel, ChartPoint, GeoError, SubmersionSpec};
use crate::linalg::{Mat2, Vec3};
use crate::quad::{adaptive_simpson, gl8, QuadControl, QuadError};

#[derive(Debug, Clone, Error)]
pub enum GraphError {
    #[error("spacelike condition violated at ({x}, {y}): μ²‖Gu‖² = {value}")]
    Spacelike { x: f64, y: f64, value: f64 },
    #[error("induced metric not positive definite at ({0}, {1})")]
    NotPositiveDefinite(f64, f64),
    #[error(transparent)]
    Geo(#[from] GeoError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Quad(#[from] QuadError),
    #[error("{0}")]
    Invalid(String),
}

/// Pointwise graph data: generalized gradient components, area element,
/// angle function.
#[derive(Debug, Clone, Copy)]
pub struct PointwiseGraphData {
    pub alpha: f64,
    pub beta: f64,
    pub omega: f64,
    pub nu: f64,
}

impl PointwiseGraphData {
    /// `α, β → (ω, ν)` for causal sign `eps`; errors when the Lorentzian
    /// spacelike condition fails.
    pub fn from_gradient(
        mu: f64,
        eps: f64,
        alpha: f64,
        beta: f64,
        p: ChartPoint,
    ) -> Result<PointwiseGraphData, GraphError> {
        let g2 = mu * mu * (alpha * alpha + beta * beta);
        let w2 = 1.0 + eps * g2;
        if w2 <= 0.0 {
            return Err(GraphError::Spacelike {
                x: p.0,
                y: p.1,
                value: g2,
            });
        }
        let omega = w2.sqrt();
        Ok(PointwiseGraphData {
            alpha,
            beta,
            omega,
            nu: eps * mu / omega,
        })
    }
}

/// `α, β, ω, ν` of the graph of `u` at a chart point.
pub fn pointwise_data(
    spec: &SubmersionSpec,
    model: &AmbientModel,
    u: &dyn Field,
    p: ChartPoint,
) -> Result<PointwiseGraphData, GraphError> {
    let (x, y) = p;
    let l1 = spec.chart.lambda1.value(x, y)?;
    let l2 = spec.chart.lambda2.value(x, y)?;
    let mu = spec.mu.value(x, y)?;
    let alpha = u.dx(x, y)? / l1 - model.a.value(x, y)?;
    let beta = u.dy(x, y)? / l2 - model.b.value(x, y)?;
    PointwiseGraphData::from_gradient(mu, spec.epsilon.sign(), alpha, beta, p)
}

/// Everything the divergence-form operator needs at one point, computed
/// with exact derivatives.
struct GraphDerivatives {
    p_x: f64,
    q_y: f64,
    mu: f64,
    l1: f64,
    l2: f64,
}

fn graph_derivatives(
    spec: &SubmersionSpec,
    model: &AmbientModel,
    u: &dyn FieldC2,
    p: ChartPoint,
) -> Result<GraphDerivatives, GraphError> {
    let (x, y) = p;
    let eps = spec.epsilon.sign();
    let l1 = spec.chart.lambda1.value(x, y)?;
    let l2 = spec.chart.lambda2.value(x, y)?;
    let l1x = spec.chart.lambda1.dx(x, y)?;
    let l1y = spec.chart.lambda1.dy(x, y)?;
    let l2x = spec.chart.lambda2.dx(x, y)?;
    let l2y = spec.chart.lambda2.dy(x, y)?;
    let mu = spec.mu.value(x, y)?;
    let mu_x = spec.mu.dx(x, y)?;
    let mu_y = spec.mu.dy(x, y)?;
    let a = model.a.value(x, y)?;
    let a_x = model.a.dx(x, y)?;
    let a_y = model.a.dy(x, y)?;
    let b = model.b.value(x, y)?;
    let b_x = model.b.dx(x, y)?;
    let b_y = model.b.dy(x, y)?;
    let ux = u.dx(x, y)?;
    let uy = u.dy(x, y)?;
    let uxx = u.dxx(x, y)?;
    let uxy = u.dxy(x, y)?;
    let uyy = u.dyy(x, y)?;

    let alpha = ux / l1 - a;
    let beta = uy / l2 - b;
    let alpha_x = uxx / l1 - ux * l1x / (l1 * l1) - a_x;
    let alpha_y = uxy / l1 - ux * l1y / (l1 * l1) - a_y;
    let beta_x = uxy / l2 - uy * l2x / (l2 * l2) - b_x;
    let beta_y = uyy / l2 - uy * l2y / (l2 * l2) - b_y;

    let g2 = mu * mu * (alpha * alpha + beta * beta);
    let w2 = 1.0 + eps * g2;
    if w2 <= 0.0 {
        return Err(GraphError::Spacelike {
            x,
            y,
            value: g2,
        });
    }
    let omega = w2.sqrt();
    let omega_x =
        (eps * mu * mu_x * (alpha * alpha + beta * beta)
            + eps * mu * mu * (alpha * alpha_x + beta * beta_x))
            / omega;
    let omega_y =
        (eps * mu * mu_y * (alpha * alpha + beta * beta)
            + eps * mu * mu * (alpha * alpha_y + beta * beta_y))
            / omega;

    // P = μ²λ₂α/ω, Q = μ²λ₁β/ω
    let p_x = 2.0 * mu * mu_x * l2 * alpha / omega + mu * mu * l2x * alpha / omega
        + mu * mu * l2 * alpha_x / omega
        - mu * mu * l2 * alpha * omega_x / (omega * omega);
    let q_y = 2.0 * mu * mu_y * l1 * beta / omega + mu * mu * l1y * beta / omega
        + mu * mu * l1 * beta_y / omega
        - mu * mu * l1 * beta * omega_y / (omega * omega);

    Ok(GraphDerivatives { p_x, q_y, mu, l1, l2 })
}

/// Mean curvature of the graph of an analytic `u` at a point, from the
/// conservative form `2H = (∂x(μ²λ₂α/ω) + ∂y(μ²λ₁β/ω)) / (μλ₁λ₂)` with all
/// derivatives exact.
pub fn mean_curvature(
    spec: &SubmersionSpec,
    model: &AmbientModel,
    u: &dyn FieldC2,
    p: ChartPoint,
) -> Result<f64, GraphError> {
    let d = graph_derivatives(spec, model, u, p)?;
    Ok((d.p_x + d.q_y) / (2.0 * d.mu * d.l1 * d.l2))
}

/// Mean curvature as a symbolic field. Demands a symbolic ambient model.
pub fn mean_curvature_field(
    spec: &SubmersionSpec,
    model: &AmbientModel,
    u: &ScalarField,
) -> Option<ScalarField> {
    let (a, b) = model.symbolic_fields()?;
    let l1 = &spec.chart.lambda1.f;
    let l2 = &spec.chart.lambda2.f;
    let mu = &spec.mu.f;
    let eps = spec.epsilon.sign();
    let alpha = u.differentiate(Var::X).div(l1).sub(a);
    let beta = u.differentiate(Var::Y).div(l2).sub(b);
    let g2 = alpha.mul(&alpha).add(&beta.mul(&beta));
    let omega = ScalarField::one()
        .add(&mu.mul(mu).mul(&g2).scale(eps))
        .sqrt();
    let p_flux = mu.mul(mu).mul(l2).mul(&alpha).div(&omega);
    let q_flux = mu.mul(mu).mul(l1).mul(&beta).div(&omega);
    let div = p_flux
        .differentiate(Var::X)
        .add(&q_flux.differentiate(Var::Y));
    Some(div.div(&mu.mul(l1).mul(l2).scale(2.0)))
}

/// Induced metric of the graph on the chart:
/// `λ₁²(1+εμ²α²) dx² + 2ελ₁λ₂μ²αβ dx dy + λ₂²(1+εμ²β²) dy²`.
pub fn induced_metric(
    spec: &SubmersionSpec,
    model: &AmbientModel,
    u: &dyn Field,
    p: ChartPoint,
) -> Result<Mat2, GraphError> {
    let d = pointwise_data(spec, model, u, p)?;
    let (x, y) = p;
    let l1 = spec.chart.lambda1.value(x, y)?;
    let l2 = spec.chart.lambda2.value(x, y)?;
    let mu = spec.mu.value(x, y)?;
    let eps = spec.epsilon.sign();
    let m = induced_metric_from_data(l1, l2, mu, eps, &d);
    // positive definiteness signals the spacelike condition
    if m[0][0] <= 0.0 || crate::linalg::det2(&m) <= 0.0 {
        return Err(GraphError::NotPositiveDefinite(x, y));
    }
    Ok(m)
}

pub fn induced_metric_from_data(
    l1: f64,
    l2: f64,
    mu: f64,
    eps: f64,
    d: &PointwiseGraphData,
) -> Mat2 {
    let m2 = mu * mu;
    [
        [
            l1 * l1 * (1.0 + eps * m2 * d.alpha * d.alpha),
            eps * l1 * l2 * m2 * d.alpha * d.beta,
        ],
        [
            eps * l1 * l2 * m2 * d.alpha * d.beta,
            l2 * l2 * (1.0 + eps * m2 * d.beta * d.beta),
        ],
    ]
}

/// Upward unit normal in frame components:
/// `N = −(εμα/ω)E₁ − (εμβ/ω)E₂ + (1/ω)E₃` (which reduces to the familiar
/// `−(α/ω)E₁ − (β/ω)E₂ + (1/ω)E₃` when μ ≡ 1).
pub fn unit_normal_frame(
    spec: &SubmersionSpec,
    model: &AmbientModel,
    u: &dyn Field,
    p: ChartPoint,
) -> Result<Vec3, GraphError> {
    let d = pointwise_data(spec, model, u, p)?;
    let mu = spec.mu.value(p.0, p.1)?;
    let eps = spec.epsilon.sign();
    Ok([
        -eps * mu * d.alpha / d.omega,
        -eps * mu * d.beta / d.omega,
        1.0 / d.omega,
    ])
}

/// Integration region with piecewise-smooth boundary.
#[derive(Debug, Clone)]
pub enum Region {
    Disk { center: ChartPoint, radius: f64 },
    Polygon(Vec<ChartPoint>),
}

impl Region {
    pub fn unit_disk() -> Region {
        Region::Disk {
            center: (0.0, 0.0),
            radius: 1.0,
        }
    }

    /// Chart-area integral `∫∫ f dx dy` over the region.
    pub fn integrate<F>(&self, f: F, tol: f64) -> Result<f64, QuadError>
    where
        F: Fn(ChartPoint) -> Result<f64, QuadError>,
    {
        match self {
            Region::Disk { center, radius } => {
                let (cx, cy) = *center;
                // inner: trapezoid in θ (spectrally accurate for periodic
                // smooth integrands); outer: adaptive in ρ
                let n_theta = 96;
                let inner = |rho: f64| -> Result<f64, QuadError> {
                    let mut acc = 0.0;
                    for j in 0..n_theta {
                        let th = 2.0 * std::f64::consts::PI * j as f64 / n_theta as f64;
                        acc += f((cx + rho * th.cos(), cy + rho * th.sin()))?;
                    }
                    Ok(acc * 2.0 * std::f64::consts::PI / n_theta as f64)
                };
                adaptive_simpson(
                    |rho| Ok(rho * inner(rho)?),
                    0.0,
                    *radius,
                    QuadControl {
                        tol,
                        max_depth: 24,
                    },
                )
            }
            Region::Polygon(pts) => {
                if pts.len() < 3 {
                    return Err(QuadError::Integrand("degenerate polygon".into()));
                }
                let cx = pts.iter().map(|p| p.0).sum::<f64>() / pts.len() as f64;
                let cy = pts.iter().map(|p| p.1).sum::<f64>() / pts.len() as f64;
                let mut acc = 0.0;
                for k in 0..pts.len() {
                    let v1 = pts[k];
                    let v2 = pts[(k + 1) % pts.len()];
                    acc += integrate_triangle((cx, cy), v1, v2, &f)?;
                }
                Ok(acc)
            }
        }
    }

    /// Boundary integral with respect to Euclidean chart arclength; the
    /// integrand receives the point and the unit (Euclidean) tangent of the
    /// positively oriented boundary.
    pub fn boundary_integrate<G>(&self, g: G) -> Result<f64, QuadError>
    where
        G: Fn(ChartPoint, (f64, f64)) -> Result<f64, QuadError>,
    {
        match self {
            Region::Disk { center, radius } => {
                let (cx, cy) = *center;
                let n = 256;
                let mut acc = 0.0;
                // trapezoid on the periodic parametrization
                for j in 0..n {
                    let th = 2.0 * std::f64::consts::PI * j as f64 / n as f64;
                    let p = (cx + radius * th.cos(), cy + radius * th.sin());
                    let t = (-th.sin(), th.cos());
                    acc += g(p, t)?;
                }
                Ok(acc * 2.0 * std::f64::consts::PI * radius / n as f64)
            }
            Region::Polygon(pts) => {
                let mut acc = 0.0;
                for k in 0..pts.len() {
                    let v1 = pts[k];
                    let v2 = pts[(k + 1) % pts.len()];
                    let len = (v2.0 - v1.0).hypot(v2.1 - v1.1);
                    if len == 0.0 {
                        return Err(QuadError::Integrand("degenerate boundary segment".into()));
                    }
                    let t = ((v2.0 - v1.0) / len, (v2.1 - v1.1) / len);
                    acc += gl8(
                        |s| g((v1.0 + s * (v2.0 - v1.0), v1.1 + s * (v2.1 - v1.1)), t),
                        0.0,
                        1.0,
                    )? * len;
                }
                Ok(acc)
            }
        }
    }
}

fn integrate_triangle<F>(
    v0: ChartPoint,
    v1: ChartPoint,
    v2: ChartPoint,
    f: &F,
) -> Result<f64, QuadError>
where
    F: Fn(ChartPoint) -> Result<f64, QuadError>,
{
    // Duffy map of the unit square onto the triangle
    let jac0 = (v1.0 - v0.0) * (v2.1 - v1.1) - (v2.0 - v1.0) * (v1.1 - v0.1);
    let mut acc = 0.0;
    for (ns, ws) in crate::quad::GL8 {
        let s = 0.5 * (ns + 1.0);
        for (nt, wt) in crate::quad::GL8 {
            let t = 0.5 * (nt + 1.0);
            let x = v0.0 + s * (v1.0 - v0.0) + s * t * (v2.0 - v1.0);
            let y = v0.1 + s * (v1.1 - v0.1) + s * t * (v2.1 - v1.1);
            acc += ws * wt * 0.25 * s * jac0.abs() * f((x, y))?;
        }
    }
    Ok(acc)
}

/// Area of the graph over a region: `∫ ω λ₁λ₂ dx dy`.
pub fn graph_area(
    spec: &SubmersionSpec,
    model: &AmbientModel,
    u: &dyn Field,
    region: &Region,
    tol: f64,
) -> Result<f64, GraphError> {
    let value = region.integrate(
        |p| {
            let d = pointwise_data(spec, model, u, p)
                .map_err(|e| QuadError::Integrand(e.to_string()))?;
            let lam = spec
                .chart
                .area_factor(p)
                .map_err(|e| QuadError::Integrand(e.to_string()))?;
            Ok(d.omega * lam)
        },
        tol,
    )?;
    Ok(value)
}

/// Flux report of the mean curvature field through a region boundary.
#[derive(Debug, Clone, Copy)]
pub struct FluxReport {
    /// `∮ μ ⟨μ Gu/ω, η⟩ ds` over the boundary (metric arclength).
    pub flux: f64,
    /// `∮ μ ds` over the boundary.
    pub perimeter_mu: f64,
    /// `2 ∫_D H μ dA_M`, which must reproduce `flux` by the divergence
    /// theorem.
    pub twice_integral_h_mu: f64,
}

/// Boundary flux of `μ²Gu/ω` and the μ-perimeter of a subdomain, together
/// with the interior integral `2∫Hμ`. The strict Heinz bound
/// `|flux| < perimeter_mu` holds for any Riemannian graph.
pub fn flux_bound_check(
    spec: &SubmersionSpec,
    model: &AmbientModel,
    u: &dyn FieldC2,
    region: &Region,
    tol: f64,
) -> Result<FluxReport, GraphError> {
    if spec.epsilon != crate::geometry::Epsilon::Riemannian {
        return Err(GraphError::Invalid(
            "flux bound check applies to the Riemannian case".into(),
        ));
    }
    let metric_stretch = |p: ChartPoint, t: (f64, f64)| -> Result<(f64, (f64, f64)), EvalError> {
        let l1 = spec.chart.lambda1.value(p.0, p.1)?;
        let l2 = spec.chart.lambda2.value(p.0, p.1)?;
        let tf = (l1 * t.0, l2 * t.1);
        let norm = tf.0.hypot(tf.1);
        Ok((norm, (tf.0 / norm, tf.1 / norm)))
    };
    let flux = region.boundary_integrate(|p, t| {
        let (stretch, that) = metric_stretch(p, t).map_err(|e| QuadError::Integrand(e.to_string()))?;
        // outward unit conormal in the orthonormal frame of the chart
        let eta = (that.1, -that.0);
        let d =
            pointwise_data(spec, model, u, p).map_err(|e| QuadError::Integrand(e.to_string()))?;
        let mu = spec
            .mu
            .value(p.0, p.1)
            .map_err(|e| QuadError::Integrand(e.to_string()))?;
        Ok(mu * mu * (d.alpha * eta.0 + d.beta * eta.1) / d.omega * stretch)
    })?;
    let perimeter_mu = region.boundary_integrate(|p, t| {
        let (stretch, _) = metric_stretch(p, t).map_err(|e| QuadError::Integrand(e.to_string()))?;
        let mu = spec
            .mu
            .value(p.0, p.1)
            .map_err(|e| QuadError::Integrand(e.to_string()))?;
        Ok(mu * stretch)
    })?;
    let twice_integral_h_mu = region.integrate(
        |p| {
            let h = mean_curvature(spec, model, u, p)
                .map_err(|e| QuadError::Integrand(e.to_string()))?;
            let mu = spec
                .mu
                .value(p.0, p.1)
                .map_err(|e| QuadError::Integrand(e.to_string()))?;
            let lam = spec
                .chart
                .area_factor(p)
                .map_err(|e| QuadError::Integrand(e.to_string()))?;
            Ok(2.0 * h * mu * lam)
        },
        tol,
    )?;
    Ok(FluxReport {
        flux,
        perimeter_mu,
        twice_integral_h_mu,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::ScalarField;
    use crate::field::C2Field;
    use crate::geometry::Epsilon;

    fn c2(src: &str) -> C2Field {
        C2Field::new(ScalarField::parse(src).unwrap())
    }

    #[test]
    fn zero_section_trivial_model() {
        let spec = SubmersionSpec::flat(Epsilon::Riemannian);
        let model = AmbientModel::trivial();
        let u = c2("0");
        let d = pointwise_data(&spec, &model, &u, (0.3, 0.4)).unwrap();
        assert_eq!(d.alpha, 0.0);
        assert_eq!(d.beta, 0.0);
        assert_eq!(d.omega, 1.0);
        assert_eq!(d.nu, 1.0);

        let lspec = SubmersionSpec::flat(Epsilon::Lorentzian);
        let dl = pointwise_data(&lspec, &model, &u, (0.3, 0.4)).unwrap();
        assert_eq!(dl.nu, -1.0);
    }

    #[test]
    fn lorentzian_angle_function_values() {
        // ε=−1, μ=1, ‖Gu‖² = 0.64 ⟹ ω = 0.6, ν = −5/3
        let d = PointwiseGraphData::from_gradient(1.0, -1.0, 0.8, 0.0, (0.0, 0.0)).unwrap();
        assert!((d.omega - 0.6).abs() < 1e-15);
        assert!((d.nu + 5.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn jacobian_of_projection_identity() {
        // |Jac(π|Σ)| = |ν|/μ = 1/ω and ν·ω = ε·μ
        let spec = SubmersionSpec::homogeneous(1.0, 0.3, Epsilon::Riemannian);
        let model = crate::geometry::connection_from_potential(&spec, Default::default()).unwrap();
        let u = c2("x^2/4-y/3");
        for &p in &[(0.2, 0.3), (-0.5, 0.8)] {
            let d = pointwise_data(&spec, &model, &u, p).unwrap();
            let mu = spec.mu.value(p.0, p.1).unwrap();
            assert!((d.nu.abs() / mu - 1.0 / d.omega).abs() < 1e-14);
            assert!((d.nu * d.omega - spec.epsilon.sign() * mu).abs() < 1e-14);
        }
    }

    #[test]
    fn spacelike_violation_detected() {
        let spec = SubmersionSpec::flat(Epsilon::Lorentzian);
        let model = AmbientModel::trivial();
        let u = c2("2*x");
        let err = pointwise_data(&spec, &model, &u, (0.0, 0.0));
        assert!(matches!(err, Err(GraphError::Spacelike { .. })));
    }

    #[test]
    fn mean_curvature_of_plane_sections() {
        let spec = SubmersionSpec::flat(Epsilon::Riemannian);
        let model = AmbientModel::trivial();
        for src in ["0", "0.3*x-0.8*y+2"] {
            let u = c2(src);
            let h = mean_curvature(&spec, &model, &u, (0.4, -0.2)).unwrap();
            assert!(h.abs() < 1e-14, "H = {h} for u = {src}");
        }
    }

    #[test]
    fn hemisphere_mean_curvature_sign_convention() {
        // upper hemisphere of radius r₀ in flat space: H = −1/r₀ with the
        // upward normal (mean curvature vector points to the center)
        let spec = SubmersionSpec::flat(Epsilon::Riemannian);
        let model = AmbientModel::trivial();
        let r0 = 2.0;
        let u = c2(&format!("sqrt({}-x^2-y^2)", r0 * r0));
        for &p in &[(0.0, 0.0), (0.5, 0.4), (-1.0, 0.3)] {
            let h = mean_curvature(&spec, &model, &u, p).unwrap();
            assert!((h + 1.0 / r0).abs() < 1e-10, "H = {h} at {p:?}");
        }
    }

    #[test]
    fn scherk_graph_is_minimal() {
        let spec = SubmersionSpec::flat(Epsilon::Riemannian);
        let model = AmbientModel::trivial();
        let u = c2("log(cos(x)/cos(y))");
        for &p in &[(0.0, 0.0), (0.4, 0.2), (-0.7, 0.6)] {
            let h = mean_curvature(&spec, &model, &u, p).unwrap();
            assert!(h.abs() < 1e-11, "H = {h} at {p:?}");
        }
    }

    #[test]
    fn symbolic_mean_curvature_matches_pointwise() {
        let spec = SubmersionSpec::homogeneous(-1.0, 0.4, Epsilon::Riemannian);
        // symbolic model of the homogeneous space: a = −ετy, b = ετx
        let model = AmbientModel::symbolic(
            ScalarField::parse("-0.4*y").unwrap(),
            ScalarField::parse("0.4*x").unwrap(),
        );
        let u = ScalarField::parse("x^2/5+sin(y)/3").unwrap();
        let hfield = mean_curvature_field(&spec, &model, &u).unwrap();
        let uc2 = C2Field::new(u);
        for &p in &[(0.1, 0.2), (-0.4, 0.5), (0.8, -0.3)] {
            let h1 = hfield.eval(p.0, p.1).unwrap();
            let h2 = mean_curvature(&spec, &model, &uc2, p).unwrap();
            assert!((h1 - h2).abs() < 1e-11, "{h1} vs {h2}");
        }
    }

    #[test]
    fn induced_metric_determinant_identity() {
        // det = λ₁²λ₂²ω²
        let spec = SubmersionSpec::homogeneous(1.0, 0.5, Epsilon::Riemannian);
        let model = crate::geometry::connection_from_potential(&spec, Default::default()).unwrap();
        let u = c2("x*y/3");
        for &p in &[(0.3, -0.2), (0.9, 0.9)] {
            let m = induced_metric(&spec, &model, &u, p).unwrap();
            let d = pointwise_data(&spec, &model, &u, p).unwrap();
            let l1 = spec.chart.lambda1.value(p.0, p.1).unwrap();
            let l2 = spec.chart.lambda2.value(p.0, p.1).unwrap();
            let expect = l1 * l1 * l2 * l2 * d.omega * d.omega;
            let det = crate::linalg::det2(&m);
            assert!((det - expect).abs() < 1e-12 * expect, "{det} vs {expect}");
        }
    }

    #[test]
    fn flat_induced_metric_is_identity_for_zero_section() {
        let spec = SubmersionSpec::flat(Epsilon::Riemannian);
        let m = induced_metric(&spec, &AmbientModel::trivial(), &c2("0"), (0.1, 0.1)).unwrap();
        assert_eq!(m, [[1.0, 0.0], [0.0, 1.0]]);
    }

    #[test]
    fn normal_of_tilted_plane() {
        // u = x in flat space: N = (−1/√2, 0, 1/√2)
        let spec = SubmersionSpec::flat(Epsilon::Riemannian);
        let n = unit_normal_frame(&spec, &AmbientModel::trivial(), &c2("x"), (0.0, 0.0)).unwrap();
        let s = 1.0 / 2.0f64.sqrt();
        assert!((n[0] + s).abs() < 1e-14);
        assert!(n[1].abs() < 1e-14);
        assert!((n[2] - s).abs() < 1e-14);
    }

    #[test]
    fn graph_area_flat_disk_and_hemisphere() {
        let spec = SubmersionSpec::flat(Epsilon::Riemannian);
        let model = AmbientModel::trivial();
        let area0 = graph_area(&spec, &model, &c2("0"), &Region::unit_disk(), 1e-9).unwrap();
        assert!((area0 - std::f64::consts::PI).abs() < 1e-8, "{area0}");

        // spherical cap: r₀ = 1 over the disk of radius 1−δ has area
        // 2π(1−√(2δ−δ²))
        let delta = 0.1;
        let u = c2("sqrt(1-x^2-y^2)");
        let cap = graph_area(
            &spec,
            &model,
            &u,
            &Region::Disk {
                center: (0.0, 0.0),
                radius: 1.0 - delta,
            },
            1e-9,
        )
        .unwrap();
        let expect = 2.0 * std::f64::consts::PI * (1.0 - (2.0 * delta - delta * delta).sqrt());
        assert!((cap - expect).abs() < 1e-7, "{cap} vs {expect}");
    }

    #[test]
    fn lorentzian_graph_area_is_smaller() {
        // for ε=−1 and μ=1, ω ≤ 1, so graph area ≤ chart area
        let spec = SubmersionSpec::flat(Epsilon::Lorentzian);
        let model = AmbientModel::trivial();
        let u = c2("0.3*sqrt(1+x^2+y^2)");
        let area = graph_area(&spec, &model, &u, &Region::unit_disk(), 1e-9).unwrap();
        assert!(area < std::f64::consts::PI);
    }

    #[test]
    fn flux_of_zero_section_vanishes() {
        let spec = SubmersionSpec::flat(Epsilon::Riemannian);
        let model = AmbientModel::trivial();
        let rep =
            flux_bound_check(&spec, &model, &c2("0"), &Region::unit_disk(), 1e-9).unwrap();
        assert!(rep.flux.abs() < 1e-12);
        assert!((rep.perimeter_mu - 2.0 * std::f64::consts::PI).abs() < 1e-9);
    }

    #[test]
    fn hemisphere_flux_divergence_identity() {
        let spec = SubmersionSpec::flat(Epsilon::Riemannian);
        let model = AmbientModel::trivial();
        let u = c2("sqrt(4-x^2-y^2)");
        let region = Region::Disk {
            center: (0.0, 0.0),
            radius: 1.2,
        };
        let rep = flux_bound_check(&spec, &model, &u, &region, 1e-10).unwrap();
        // H = −1/2, μ = 1: 2∫H = −π r²
        let expect = -std::f64::consts::PI * 1.2 * 1.2 / 2.0 * 2.0;
        assert!((rep.twice_integral_h_mu - expect).abs() < 1e-7);
        assert!((rep.flux - rep.twice_integral_h_mu).abs() < 1e-7);
        assert!(rep.flux.abs() < rep.perimeter_mu);
    }

    #[test]
    fn polygon_region_quadrature() {
        // unit square: area 1, perimeter 4
        let square = Region::Polygon(vec![(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0)]);
        let area = square.integrate(|_| Ok(1.0), 1e-10).unwrap();
        assert!((area - 1.0).abs() < 1e-12);
        let per = square.boundary_integrate(|_, _| Ok(1.0)).unwrap();
        assert!((per - 4.0).abs() < 1e-12);
        // ∫∫ x over the square = 1/2
        let m = square.integrate(|p| Ok(p.0), 1e-10).unwrap();
        assert!((m - 0.5).abs() < 1e-12);
    }
}
