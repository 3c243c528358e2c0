//! Dirichlet solver for the prescribed-mean-curvature equation on disks in
//! the Riemannian case: the conservative finite-volume operator of the
//! grid module balanced against `∫ 2Hμλ₁λ₂` per cell, solved by damped
//! Newton with BiCGStab/ring-preconditioned linear steps and continuation
//! in `H` as a fallback.
//!
//! On top of the solver sit the boundary-data family indexed by the closed
//! upper hemisphere, the prescribed-normal root finder (a degree-one
//! fixed-point on the hemisphere parameter), and the disk-exhaustion
//! runner with its divergence-line diagnostic.

mod linsolve;

pub use linsolve::{bicgstab, Csr, LinSolveError, RingLayout, RingPreconditioner};

use thiserror::Error;

use crate::expr::{EvalError, ScalarField};
use crate::field::{C1Field, Field};
use crate::geometry::{AmbientModel, Epsilon, GeoError, SubmersionSpec};
use crate::graphs::{polar_coeffs, GraphError, GraphGrid, PolarCoeffs, PolarMesh};
use crate::linalg::Vec3;

#[derive(Debug, Clone, Error)]
pub enum SolverError {
    #[error("Newton did not converge: residual {residual} after {iters} iterations")]
    NewtonDiverged { residual: f64, iters: usize },
    #[error(transparent)]
    LinSolve(#[from] LinSolveError),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Geo(#[from] GeoError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("normal prescription did not converge: residual {0}")]
    NormalSearch(f64),
    #[error("{0}")]
    Invalid(String),
}

type Result<T> = std::result::Result<T, SolverError>;

/// The Dirichlet problem on the disk of radius `r`.
#[derive(Clone)]
pub struct DirichletProblem {
    pub spec: SubmersionSpec,
    pub model: AmbientModel,
    /// prescribed mean curvature
    pub h: C1Field,
    pub radius: f64,
    /// boundary values per boundary node angle
    pub boundary: BoundaryData,
    pub mesh: PolarMesh,
    pub controls: SolveControls,
}

#[derive(Clone)]
pub enum BoundaryData {
    /// analytic trace
    Field(ScalarField),
    /// nodal values on the boundary ring, length `n_theta`
    Values(Vec<f64>),
}

impl BoundaryData {
    fn nodal(&self, mesh: &PolarMesh) -> std::result::Result<Vec<f64>, EvalError> {
        match self {
            BoundaryData::Field(f) => (0..mesh.n_theta)
                .map(|j| {
                    let p = mesh.point(mesh.n_rho, j);
                    f.eval(p.0, p.1)
                })
                .collect(),
            BoundaryData::Values(v) => {
                assert_eq!(v.len(), mesh.n_theta);
                Ok(v.clone())
            }
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct SolveControls {
    /// sup-norm tolerance on the residual in mean-curvature units
    pub tol: f64,
    pub max_newton: usize,
    pub lin_rtol: f64,
    pub lin_max_iters: usize,
    /// continuation stages in `s·H` tried when plain Newton fails
    pub continuation: usize,
}

impl Default for SolveControls {
    fn default() -> Self {
        SolveControls {
            tol: 1e-8,
            max_newton: 40,
            lin_rtol: 1e-10,
            lin_max_iters: 4000,
            continuation: 4,
        }
    }
}

/// Outcome of a Dirichlet solve.
#[derive(Debug, Clone)]
pub struct SolveReport {
    pub u: GraphGrid,
    /// sup of the residual in mean-curvature units
    pub residual_sup: f64,
    pub newton_iters: usize,
    /// sup of `‖Gu‖` over interior nodes
    pub gradient_sup: f64,
    pub divergence_line: Option<DivergenceDiagnostic>,
}

/// Heuristic divergence-line flag: locus of extreme generalized gradient
/// fitted by a straight line.
#[derive(Debug, Clone)]
pub struct DivergenceDiagnostic {
    pub max_gradient: f64,
    /// points with `‖Gu‖` above the threshold
    pub locus: Vec<(f64, f64)>,
    /// maximum perpendicular deviation of the locus from its fitted line
    pub line_fit_residual: f64,
    pub is_straight: bool,
}

struct Discretization<'a> {
    coeffs: &'a PolarCoeffs,
    /// flattened unknown index per node (center + interior rings)
    unknown_of_node: Vec<Option<usize>>,
    node_of_unknown: Vec<usize>,
    /// cell (i, j) per unknown
    cell_of_unknown: Vec<(usize, usize)>,
    /// source integrals ∫ 2Hμλ₁λ₂ dA per unknown
    source: Vec<f64>,
    /// scale to mean-curvature units per unknown: 2·cell_weight
    scale: Vec<f64>,
}

impl<'a> Discretization<'a> {
    fn new(
        coeffs: &'a PolarCoeffs,
        spec: &SubmersionSpec,
        h: &C1Field,
    ) -> std::result::Result<Discretization<'a>, SolverError> {
        let mesh = &coeffs.mesh;
        let n = mesh.n_rho;
        let m = mesh.n_theta;
        let mut unknown_of_node = vec![None; mesh.node_count()];
        let mut node_of_unknown = Vec::new();
        let mut cell_of_unknown = Vec::new();
        unknown_of_node[0] = Some(0);
        node_of_unknown.push(0);
        cell_of_unknown.push((0, 0));
        for i in 1..n {
            for j in 0..m {
                let node = mesh.idx(i, j as isize);
                unknown_of_node[node] = Some(node_of_unknown.len());
                node_of_unknown.push(node);
                cell_of_unknown.push((i, j));
            }
        }
        let mut source = Vec::with_capacity(node_of_unknown.len());
        let mut scale = Vec::with_capacity(node_of_unknown.len());
        // center cell: midpoint rule on the disk of radius h/2
        {
            let h0 = h.value(0.0, 0.0)?;
            let w = coeffs.cell_weight[0];
            source.push(2.0 * h0 * w);
            scale.push(2.0 * w);
        }
        for k in 1..node_of_unknown.len() {
            let (i, j) = cell_of_unknown[k];
            let pts = coeffs.cell_source_points(i, j);
            let s = [
                2.0 * h.value(pts[0].0, pts[0].1)?,
                2.0 * h.value(pts[1].0, pts[1].1)?,
                2.0 * h.value(pts[2].0, pts[2].1)?,
            ];
            source.push(coeffs.cell_source(i, j, s));
            let node = node_of_unknown[k];
            scale.push(2.0 * coeffs.cell_weight[node]);
        }
        let _ = spec;
        Ok(Discretization {
            coeffs,
            unknown_of_node,
            node_of_unknown,
            cell_of_unknown,
            source,
            scale,
        })
    }

    fn n_unknowns(&self) -> usize {
        self.node_of_unknown.len()
    }

    /// Residual in mean-curvature units per unknown.
    fn residual(&self, u: &[f64], out: &mut [f64]) -> std::result::Result<(), GraphError> {
        for k in 0..self.n_unknowns() {
            let (i, j) = self.cell_of_unknown[k];
            let net = self.coeffs.net_flux(u, i, j)?;
            out[k] = (net - self.source[k]) / self.scale[k];
        }
        Ok(())
    }

    /// Jacobian rows (columns restricted to unknowns) in the same scaling.
    fn jacobian(&self, u: &[f64]) -> std::result::Result<Csr, GraphError> {
        let mesh = &self.coeffs.mesh;
        let m = mesh.n_theta;
        let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::with_capacity(16); self.n_unknowns()];
        for k in 0..self.n_unknowns() {
            let (i, j) = self.cell_of_unknown[k];
            let inv_scale = 1.0 / self.scale[k];
            let mut emit = |node: usize, d: f64, sign: f64| {
                if let Some(col) = self.unknown_of_node[node] {
                    rows[k].push((col, sign * d * inv_scale));
                }
            };
            if i == 0 {
                for jj in 0..m {
                    let face = &self.coeffs.rho_faces[self.coeffs.rho_face_index(0, jj)];
                    face.flux_with_derivs(self.coeffs.eps, u, |n, d| emit(n, d, 1.0))?;
                }
            } else {
                let jprev = (j + m - 1) % m;
                let faces = [
                    (1.0, &self.coeffs.rho_faces[self.coeffs.rho_face_index(i, j)]),
                    (
                        -1.0,
                        &self.coeffs.rho_faces[self.coeffs.rho_face_index(i - 1, j)],
                    ),
                    (
                        1.0,
                        &self.coeffs.theta_faces[self.coeffs.theta_face_index(i, j)],
                    ),
                    (
                        -1.0,
                        &self.coeffs.theta_faces[self.coeffs.theta_face_index(i, jprev)],
                    ),
                ];
                for (sign, face) in faces {
                    face.flux_with_derivs(self.coeffs.eps, u, |n, d| emit(n, d, sign))?;
                }
            }
        }
        Ok(Csr::from_rows(rows))
    }
}

fn sup_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |a, &x| a.max(x.abs()))
}

/// Solve the Dirichlet problem by damped Newton; on failure, retry with
/// continuation `s·H`, `s: 1/k, 2/k, …, 1`, warm-starting each stage.
pub fn solve_dirichlet(problem: &DirichletProblem) -> Result<SolveReport> {
    if problem.spec.epsilon != Epsilon::Riemannian {
        return Err(SolverError::Invalid(
            "the Dirichlet solver handles the Riemannian case".into(),
        ));
    }
    let mesh = &problem.mesh;
    let coeffs = polar_coeffs(&problem.spec, &problem.model, mesh)?;
    let boundary = problem.boundary.nodal(mesh)?;

    // initial guess: the boundary mean everywhere, boundary values pinned
    let b_mean = boundary.iter().sum::<f64>() / boundary.len() as f64;
    let mut u = vec![b_mean; mesh.node_count()];
    for j in 0..mesh.n_theta {
        u[mesh.idx(mesh.n_rho, j as isize)] = boundary[j];
    }

    let mut total_iters = 0usize;
    match newton_loop(problem, &coeffs, &mut u, &problem.h, &mut total_iters) {
        Ok(()) => {}
        Err(first_err) => {
            // continuation in H from the flat problem
            let stages = problem.controls.continuation.max(1);
            let mut recovered = false;
            let mut u_stage = u.clone();
            for s in 1..=stages {
                let factor = s as f64 / stages as f64;
                let h_scaled = C1Field::new(problem.h.f.scale(factor));
                if newton_loop(problem, &coeffs, &mut u_stage, &h_scaled, &mut total_iters)
                    .is_err()
                {
                    recovered = false;
                    break;
                }
                recovered = true;
            }
            if !recovered {
                return Err(first_err);
            }
            u = u_stage;
        }
    }

    // final diagnostics
    let disc = Discretization::new(&coeffs, &problem.spec, &problem.h)?;
    let mut res = vec![0.0; disc.n_unknowns()];
    disc.residual(&u, &mut res)?;
    let residual_sup = sup_norm(&res);
    let grid = GraphGrid::Polar {
        mesh: mesh.clone(),
        u,
    };
    let (gradient_sup, divergence_line) =
        gradient_diagnostics(&problem.spec, &problem.model, &grid)?;
    Ok(SolveReport {
        u: grid,
        residual_sup,
        newton_iters: total_iters,
        gradient_sup,
        divergence_line,
    })
}

fn newton_loop(
    problem: &DirichletProblem,
    coeffs: &PolarCoeffs,
    u: &mut [f64],
    h: &C1Field,
    total_iters: &mut usize,
) -> Result<()> {
    let disc = Discretization::new(coeffs, &problem.spec, h)?;
    let layout = RingLayout {
        rings: coeffs.mesh.n_rho - 1,
        ring_len: coeffs.mesh.n_theta,
    };
    let ctl = problem.controls;
    let n = disc.n_unknowns();
    let mut res = vec![0.0; n];
    disc.residual(u, &mut res)?;
    let mut merit = sup_norm(&res);
    for _ in 0..ctl.max_newton {
        if merit <= ctl.tol {
            return Ok(());
        }
        *total_iters += 1;
        let jac = disc.jacobian(u)?;
        let pre = RingPreconditioner::build(&jac, layout)?;
        let rhs: Vec<f64> = res.iter().map(|r| -r).collect();
        let step = bicgstab(&jac, &rhs, &vec![0.0; n], &pre, ctl.lin_rtol, ctl.lin_max_iters)?;
        // Armijo backtracking on the residual sup norm
        let mut lambda = 1.0f64;
        let mut accepted = false;
        for _ in 0..30 {
            let mut trial = u.to_vec();
            for k in 0..n {
                trial[disc.node_of_unknown[k]] += lambda * step[k];
            }
            match disc.residual(&trial, &mut res) {
                Ok(()) => {
                    let new_merit = sup_norm(&res);
                    if new_merit <= (1.0 - 1e-4 * lambda) * merit || new_merit <= ctl.tol {
                        u.copy_from_slice(&trial);
                        merit = new_merit;
                        accepted = true;
                        break;
                    }
                }
                Err(GraphError::Spacelike { .. }) => {}
                Err(e) => return Err(e.into()),
            }
            lambda *= 0.5;
        }
        if !accepted {
            return Err(SolverError::NewtonDiverged {
                residual: merit,
                iters: *total_iters,
            });
        }
    }
    if merit <= ctl.tol {
        Ok(())
    } else {
        Err(SolverError::NewtonDiverged {
            residual: merit,
            iters: *total_iters,
        })
    }
}

/// Gradient threshold of the divergence-line heuristic.
pub const DIVERGENCE_GRADIENT_THRESHOLD: f64 = 1e3;

fn gradient_diagnostics(
    spec: &SubmersionSpec,
    model: &AmbientModel,
    grid: &GraphGrid,
) -> Result<(f64, Option<DivergenceDiagnostic>)> {
    let GraphGrid::Polar { mesh, .. } = grid else {
        return Ok((0.0, None));
    };
    let mut sup: f64 = 0.0;
    let mut locus = Vec::new();
    for i in 0..mesh.n_rho {
        let jrange = if i == 0 { 1 } else { mesh.n_theta };
        for j in 0..jrange {
            let p = if i == 0 { (0.0, 0.0) } else { mesh.point(i, j) };
            let Some((ux, uy)) = grid.node_gradient(i, j) else {
                continue;
            };
            let l1 = spec.chart.lambda1.value(p.0, p.1)?;
            let l2 = spec.chart.lambda2.value(p.0, p.1)?;
            let alpha = ux / l1 - model.a.value(p.0, p.1)?;
            let beta = uy / l2 - model.b.value(p.0, p.1)?;
            let g = alpha.hypot(beta);
            sup = sup.max(g);
            if g > DIVERGENCE_GRADIENT_THRESHOLD {
                locus.push(p);
            }
        }
    }
    if locus.len() < 3 {
        return Ok((sup, None));
    }
    // total-least-squares line fit of the locus
    let nloc = locus.len() as f64;
    let cx = locus.iter().map(|p| p.0).sum::<f64>() / nloc;
    let cy = locus.iter().map(|p| p.1).sum::<f64>() / nloc;
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for p in &locus {
        sxx += (p.0 - cx) * (p.0 - cx);
        sxy += (p.0 - cx) * (p.1 - cy);
        syy += (p.1 - cy) * (p.1 - cy);
    }
    // principal direction of the scatter
    let theta = 0.5 * (2.0 * sxy).atan2(sxx - syy);
    let (dx, dy) = (theta.cos(), theta.sin());
    let mut max_dev: f64 = 0.0;
    for p in &locus {
        let px = p.0 - cx;
        let py = p.1 - cy;
        let perp = (-dy * px + dx * py).abs();
        max_dev = max_dev.max(perp);
    }
    let cell = mesh.h_rho().max(mesh.radius * mesh.h_theta());
    Ok((
        sup,
        Some(DivergenceDiagnostic {
            max_gradient: sup,
            locus,
            line_fit_residual: max_dev,
            is_straight: max_dev < cell,
        }),
    ))
}

// ---------------------------------------------------------------------------
// boundary family and normal prescription
// ---------------------------------------------------------------------------

/// Boundary data of the hemisphere family: the half-circles where
/// `⟨(x, y), (φ₁, φ₂)⟩ ≷ 0` carry the values `±(φ₃⁻² − 1)`, with the jump
/// mollified linearly over one boundary cell. `φ = (0, 0, 1)` assigns 0.
pub fn boundary_family(phi: &Vec3, mesh: &PolarMesh) -> Vec<f64> {
    let horiz = phi[0].hypot(phi[1]);
    let m = mesh.n_theta;
    if horiz == 0.0 {
        return vec![0.0; m];
    }
    let value = 1.0 / (phi[2] * phi[2]) - 1.0;
    let psi = phi[1].atan2(phi[0]);
    let h_theta = mesh.h_theta();
    (0..m)
        .map(|j| {
            let theta = mesh.theta(j);
            // signed distance to the jump circle in units of the cell;
            // cos(θ−ψ) vanishes linearly there
            let s = (theta - psi).cos();
            value * (s / h_theta).clamp(-1.0, 1.0)
        })
        .collect()
}

/// Upward unit normal at the origin of a solved grid, in frame components.
pub fn normal_at_origin(
    spec: &SubmersionSpec,
    model: &AmbientModel,
    grid: &GraphGrid,
) -> Result<Vec3> {
    let Some((ux, uy)) = grid.node_gradient(0, 0) else {
        return Err(SolverError::Invalid("grid without a center node".into()));
    };
    let l1 = spec.chart.lambda1.value(0.0, 0.0)?;
    let l2 = spec.chart.lambda2.value(0.0, 0.0)?;
    let mu = spec.mu.value(0.0, 0.0)?;
    let eps = spec.epsilon.sign();
    let alpha = ux / l1 - model.a.value(0.0, 0.0)?;
    let beta = uy / l2 - model.b.value(0.0, 0.0)?;
    let d = crate::graphs::PointwiseGraphData::from_gradient(mu, eps, alpha, beta, (0.0, 0.0))?;
    Ok([
        -eps * mu * d.alpha / d.omega,
        -eps * mu * d.beta / d.omega,
        1.0 / d.omega,
    ])
}

/// Result of the prescribed-normal search.
#[derive(Debug)]
pub struct NormalSearchResult {
    pub phi: Vec3,
    pub report: SolveReport,
    pub residual: f64,
    pub iterations: usize,
}

/// Find boundary data in the hemisphere family whose solution has the
/// given upward unit normal (frame components, positive third component)
/// at the origin: damped fixed-point/Newton on `(φ₁, φ₂)` with a
/// finite-difference Jacobian. The hemisphere map fixes the boundary
/// circle, which is what makes the target attainable.
pub fn prescribe_normal(
    spec: &SubmersionSpec,
    model: &AmbientModel,
    h: &ScalarField,
    mesh: &PolarMesh,
    target: &Vec3,
    controls: SolveControls,
    tol: f64,
) -> Result<NormalSearchResult> {
    if target[2] <= 0.0 {
        return Err(SolverError::Invalid(
            "target normal must lie in the open upper hemisphere".into(),
        ));
    }
    let solve_for = |phi: &Vec3| -> Result<(SolveReport, Vec3)> {
        let problem = DirichletProblem {
            spec: spec.clone(),
            model: model.clone(),
            h: C1Field::new(h.clone()),
            radius: mesh.radius,
            boundary: BoundaryData::Values(boundary_family(phi, mesh)),
            mesh: mesh.clone(),
            controls,
        };
        let report = solve_dirichlet(&problem)?;
        let normal = normal_at_origin(spec, model, &report.u)?;
        Ok((report, normal))
    };
    let clamp_phi = |p: (f64, f64)| -> Vec3 {
        let norm = p.0.hypot(p.1).min(0.985);
        let (x, y) = if p.0.hypot(p.1) > 0.985 {
            let s = 0.985 / p.0.hypot(p.1);
            (p.0 * s, p.1 * s)
        } else {
            (p.0, p.1)
        };
        let _ = norm;
        [x, y, (1.0 - x * x - y * y).max(1e-6).sqrt()]
    };

    // initial guess: the target's horizontal part (the hemisphere map is a
    // perturbation of the identity)
    let mut phi_h = (target[0], target[1]);
    let mut best: Option<NormalSearchResult> = None;
    for it in 0..30 {
        let phi = clamp_phi(phi_h);
        let (report, normal) = solve_for(&phi)?;
        let g = (normal[0] - target[0], normal[1] - target[1]);
        let res = g.0.hypot(g.1);
        if best.as_ref().map(|b| res < b.residual).unwrap_or(true) {
            best = Some(NormalSearchResult {
                phi,
                report,
                residual: res,
                iterations: it + 1,
            });
        }
        if res < tol {
            return Ok(best.unwrap());
        }
        // finite-difference Jacobian of the normal map
        let dstep = 1e-4;
        let (_, n_dx) = solve_for(&clamp_phi((phi_h.0 + dstep, phi_h.1)))?;
        let (_, n_dy) = solve_for(&clamp_phi((phi_h.0, phi_h.1 + dstep)))?;
        let j11 = (n_dx[0] - normal[0]) / dstep;
        let j21 = (n_dx[1] - normal[1]) / dstep;
        let j12 = (n_dy[0] - normal[0]) / dstep;
        let j22 = (n_dy[1] - normal[1]) / dstep;
        let det = j11 * j22 - j12 * j21;
        let (dx, dy) = if det.abs() > 1e-12 {
            (
                -(j22 * g.0 - j12 * g.1) / det,
                -(-j21 * g.0 + j11 * g.1) / det,
            )
        } else {
            // fixed-point fallback: the hemisphere map is near the identity
            (-g.0, -g.1)
        };
        // damping
        let step_norm = dx.hypot(dy);
        let damp = if step_norm > 0.5 { 0.5 / step_norm } else { 1.0 };
        phi_h = (phi_h.0 + damp * dx, phi_h.1 + damp * dy);
    }
    let best = best.unwrap();
    if best.residual < tol {
        Ok(best)
    } else {
        Err(SolverError::NormalSearch(best.residual))
    }
}

/// One step of the disk exhaustion.
#[derive(Debug)]
pub struct ExhaustionStep {
    pub radius: f64,
    pub phi: Vec3,
    pub report: SolveReport,
    /// sup of `‖Gu‖` on the half-radius disk
    pub gradient_half_disk: f64,
    /// sup over the previous half-disk samples of the change of
    /// `u − u(0)` against the previous step
    pub cauchy_delta: Option<f64>,
}

/// Exhaustion by growing disks with the vertical normal prescribed at the
/// origin. Reports per-radius gradients, Cauchy-type stabilization of
/// `u − u(0)` on compacta, and the divergence-line diagnostic.
pub fn disk_exhaustion(
    spec: &SubmersionSpec,
    model: &AmbientModel,
    h: &ScalarField,
    radii: &[f64],
    n_rho: usize,
    n_theta: usize,
    controls: SolveControls,
) -> Result<Vec<ExhaustionStep>> {
    let mut steps: Vec<ExhaustionStep> = Vec::new();
    for &r in radii {
        let mesh = PolarMesh::new(r, n_rho, n_theta);
        let search = prescribe_normal(
            spec,
            model,
            h,
            &mesh,
            &[0.0, 0.0, 1.0],
            controls,
            1e-6,
        )?;
        // gradient sup on the half disk
        let mut grad_half: f64 = 0.0;
        let grid = &search.report.u;
        for i in 0..=n_rho / 2 {
            for j in 0..n_theta {
                if let Some((ux, uy)) = grid.node_gradient(i, j) {
                    let p = mesh.point(i, j);
                    let l1 = spec.chart.lambda1.value(p.0, p.1)?;
                    let l2 = spec.chart.lambda2.value(p.0, p.1)?;
                    let alpha = ux / l1 - model.a.value(p.0, p.1)?;
                    let beta = uy / l2 - model.b.value(p.0, p.1)?;
                    grad_half = grad_half.max(alpha.hypot(beta));
                }
            }
        }
        let cauchy_delta = steps.last().map(|prev| {
            let r_cmp = 0.5 * prev.radius;
            let prev_center = prev.report.u.values()[0];
            let this_center = grid.values()[0];
            let mut sup: f64 = 0.0;
            for k in 0..64 {
                let th = 2.0 * std::f64::consts::PI * k as f64 / 64.0;
                for frac in [0.3, 0.6, 0.9] {
                    let p = (r_cmp * frac * th.cos(), r_cmp * frac * th.sin());
                    if let (Some(a), Some(b)) = (grid.sample(p), prev.report.u.sample(p)) {
                        sup = sup.max(((a - this_center) - (b - prev_center)).abs());
                    }
                }
            }
            sup
        });
        steps.push(ExhaustionStep {
            radius: r,
            phi: search.phi,
            report: search.report,
            gradient_half_disk: grad_half,
            cauchy_delta,
        });
    }
    Ok(steps)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::ScalarField;
    use crate::field::C2Field;
    use crate::geometry::connection_from_potential;
    use crate::graphs::mean_curvature;

    fn controls() -> SolveControls {
        SolveControls::default()
    }

    fn flat_problem(
        boundary: BoundaryData,
        h: ScalarField,
        r: f64,
        n: usize,
        m: usize,
    ) -> DirichletProblem {
        DirichletProblem {
            spec: SubmersionSpec::flat(Epsilon::Riemannian),
            model: AmbientModel::trivial(),
            h: C1Field::new(h),
            radius: r,
            boundary,
            mesh: PolarMesh::new(r, n, m),
            controls: controls(),
        }
    }

    #[test]
    fn plane_recovery_is_exact() {
        // boundary trace of an affine function solves the flat minimal
        // equation exactly on the discrete level
        let trace = ScalarField::parse("0.6*x-0.3*y+0.2").unwrap();
        let problem = flat_problem(
            BoundaryData::Field(trace.clone()),
            ScalarField::zero(),
            1.0,
            12,
            28,
        );
        let report = solve_dirichlet(&problem).unwrap();
        assert!(report.residual_sup < 1e-12, "residual {}", report.residual_sup);
        let mesh = &problem.mesh;
        for i in 0..=mesh.n_rho {
            for j in 0..mesh.n_theta {
                let p = mesh.point(i, j);
                let expect = trace.eval(p.0, p.1).unwrap();
                let got = report.u.values()[mesh.idx(i, j as isize)];
                assert!(
                    (got - expect).abs() < 1e-10,
                    "node ({i},{j}): {got} vs {expect}"
                );
            }
        }
    }

    #[test]
    fn scherk_patch_interior_convergence() {
        // Dirichlet data from the Scherk graph; interior error decays at
        // second order
        let scherk = ScalarField::parse("log(cos(x)/cos(y))").unwrap();
        let mut errors = Vec::new();
        for n in [8usize, 16, 32] {
            let problem = flat_problem(
                BoundaryData::Field(scherk.clone()),
                ScalarField::zero(),
                0.8,
                n,
                4 * n,
            );
            let report = solve_dirichlet(&problem).unwrap();
            let mesh = &problem.mesh;
            let mut max_err: f64 = 0.0;
            for i in 0..mesh.n_rho {
                let jr = if i == 0 { 1 } else { mesh.n_theta };
                for j in 0..jr {
                    let p = if i == 0 { (0.0, 0.0) } else { mesh.point(i, j) };
                    let expect = scherk.eval(p.0, p.1).unwrap();
                    let got = report.u.values()[mesh.idx(i, j as isize)];
                    max_err = max_err.max((got - expect).abs());
                }
            }
            errors.push(max_err);
        }
        let order1 = (errors[0] / errors[1]).log2();
        let order2 = (errors[1] / errors[2]).log2();
        assert!(
            order1 > 1.8 && order2 > 1.8,
            "orders {order1:.2}, {order2:.2}, errors {errors:?}"
        );
    }

    #[test]
    fn cmc_solve_in_bundle_curvature_space() {
        // E(R², 1/2, 1) with prescribed H = 1/2 and zero boundary data
        let spec = SubmersionSpec::over_plane(ScalarField::constant(0.5), Epsilon::Riemannian);
        let model = connection_from_potential(&spec, Default::default()).unwrap();
        let problem = DirichletProblem {
            spec: spec.clone(),
            model: model.clone(),
            h: C1Field::new(ScalarField::constant(0.5)),
            radius: 1.0,
            boundary: BoundaryData::Values(vec![0.0; 48]),
            mesh: PolarMesh::new(1.0, 12, 48),
            controls: controls(),
        };
        let report = solve_dirichlet(&problem).unwrap();
        assert!(report.residual_sup < 1e-8, "residual {}", report.residual_sup);
        // self-residual: the discrete mean curvature of the solution
        // reproduces H at interior nodes
        let hs = crate::graphs::mean_curvature_grid(&spec, &model, &report.u).unwrap();
        let mesh = &problem.mesh;
        for i in 1..mesh.n_rho - 1 {
            for j in 0..mesh.n_theta {
                if let Some(hv) = hs[mesh.idx(i, j as isize)] {
                    assert!((hv - 0.5).abs() < 2e-3, "H at ({i},{j}) = {hv}");
                }
            }
        }
    }

    #[test]
    fn maximum_principle_and_comparison() {
        // minimal solutions stay within the boundary bounds, and raising
        // the boundary raises the solution
        let b1 = ScalarField::parse("0.3*sin(2*y)*cos(x)").unwrap();
        let problem = flat_problem(BoundaryData::Field(b1), ScalarField::zero(), 1.0, 10, 24);
        let report = solve_dirichlet(&problem).unwrap();
        let (lo, hi) = report
            .u
            .values()
            .iter()
            .fold((f64::MAX, f64::MIN), |(lo, hi), &v| (lo.min(v), hi.max(v)));
        let boundary = problem.boundary.nodal(&problem.mesh).unwrap();
        let (blo, bhi) = boundary
            .iter()
            .fold((f64::MAX, f64::MIN), |(lo, hi), &v| (lo.min(v), hi.max(v)));
        assert!(lo >= blo - 1e-8 && hi <= bhi + 1e-8, "[{lo},{hi}] vs [{blo},{bhi}]");

        let shifted: Vec<f64> = boundary.iter().map(|v| v + 0.25).collect();
        let problem2 = flat_problem(
            BoundaryData::Values(shifted),
            ScalarField::zero(),
            1.0,
            10,
            24,
        );
        let report2 = solve_dirichlet(&problem2).unwrap();
        for (a, b) in report2.u.values().iter().zip(report.u.values()) {
            assert!(*a >= *b - 1e-8);
        }
    }

    #[test]
    fn boundary_family_values() {
        let mesh = PolarMesh::new(1.0, 8, 32);
        // vertical pole: all zeros
        let z = boundary_family(&[0.0, 0.0, 1.0], &mesh);
        assert!(z.iter().all(|&v| v == 0.0));
        // φ₃ = 1/√2 pointing along +x: values ±1 on the half circles
        let s = 1.0 / 2.0f64.sqrt();
        let f = boundary_family(&[s, 0.0, s], &mesh);
        assert!((f[0] - 1.0).abs() < 1e-12, "front value {}", f[0]);
        assert!((f[mesh.n_theta / 2] + 1.0).abs() < 1e-12);
        // the family degenerates to huge values as φ₃→0
        let tiny = boundary_family(&[(1.0f64 - 1e-8).sqrt(), 0.0, 1e-4], &mesh);
        assert!(tiny[0] > 1e7);
    }

    #[test]
    fn normal_of_solved_plane() {
        let trace = ScalarField::parse("x").unwrap();
        let problem = flat_problem(BoundaryData::Field(trace), ScalarField::zero(), 1.0, 10, 24);
        let report = solve_dirichlet(&problem).unwrap();
        let n = normal_at_origin(&problem.spec, &problem.model, &report.u).unwrap();
        let s = 1.0 / 2.0f64.sqrt();
        assert!((n[0] + s).abs() < 1e-6 && n[1].abs() < 1e-6 && (n[2] - s).abs() < 1e-6);
        // unit length in the frame metric
        let len2 = n[0] * n[0] + n[1] * n[1] + n[2] * n[2];
        assert!((len2 - 1.0).abs() < 1e-10);
    }

    #[test]
    fn prescribe_vertical_normal_flat() {
        // flat minimal problem: the vertical target is met by φ = (0,0,1)
        let spec = SubmersionSpec::flat(Epsilon::Riemannian);
        let model = AmbientModel::trivial();
        let mesh = PolarMesh::new(1.0, 10, 24);
        let result = prescribe_normal(
            &spec,
            &model,
            &ScalarField::zero(),
            &mesh,
            &[0.0, 0.0, 1.0],
            controls(),
            1e-6,
        )
        .unwrap();
        assert!(result.residual < 1e-6);
        assert!(result.phi[0].abs() < 1e-6 && result.phi[1].abs() < 1e-6);
        assert!(result.report.u.values().iter().all(|v| v.abs() < 1e-8));
    }

    #[test]
    fn exhaustion_is_stable_for_symmetric_data() {
        // flat minimal exhaustion: every disk returns the zero graph
        let spec = SubmersionSpec::flat(Epsilon::Riemannian);
        let model = AmbientModel::trivial();
        let steps = disk_exhaustion(
            &spec,
            &model,
            &ScalarField::zero(),
            &[0.5, 1.0],
            8,
            24,
            controls(),
        )
        .unwrap();
        assert_eq!(steps.len(), 2);
        for s in &steps {
            assert!(s.gradient_half_disk < 1e-8);
            assert!(s.report.divergence_line.is_none());
        }
        assert!(steps[1].cauchy_delta.unwrap() < 1e-8);

        // bundle curvature 1/2: the zero section stays the symmetric
        // minimal solution on every disk, so the exhaustion stabilizes
        let spec = SubmersionSpec::over_plane(ScalarField::constant(0.5), Epsilon::Riemannian);
        let model = connection_from_potential(&spec, Default::default()).unwrap();
        let steps = disk_exhaustion(
            &spec,
            &model,
            &ScalarField::zero(),
            &[0.75, 1.5],
            10,
            32,
            controls(),
        )
        .unwrap();
        assert!(steps[1].cauchy_delta.unwrap() < 1e-4);
    }

    #[test]
    fn hemisphere_boundary_data_solve() {
        // Dirichlet data of the upper hemisphere of radius 2 recovers the
        // spherical cap with H = −1/2 (upward normal convention)
        let cap = C2Field::new(ScalarField::parse("sqrt(4-x^2-y^2)").unwrap());
        let problem = flat_problem(
            BoundaryData::Field(cap.f.clone()),
            ScalarField::constant(-0.5),
            1.0,
            16,
            48,
        );
        let report = solve_dirichlet(&problem).unwrap();
        let mesh = &problem.mesh;
        let mut max_err: f64 = 0.0;
        for i in 0..mesh.n_rho {
            let jr = if i == 0 { 1 } else { mesh.n_theta };
            for j in 0..jr {
                let p = if i == 0 { (0.0, 0.0) } else { mesh.point(i, j) };
                let expect = cap.f.eval(p.0, p.1).unwrap();
                let got = report.u.values()[mesh.idx(i, j as isize)];
                max_err = max_err.max((got - expect).abs());
            }
        }
        assert!(max_err < 5e-4, "cap error {max_err}");
        let h_interior =
            mean_curvature(&problem.spec, &problem.model, &cap, (0.3, 0.1)).unwrap();
        assert!((h_interior + 0.5).abs() < 1e-10);
    }
}
