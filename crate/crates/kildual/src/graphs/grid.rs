//! Discrete Killing graphs on tensor-product grids.
//!
//! The divergence-form operator is discretized by a conservative
//! finite-volume scheme: fluxes `P = μ²λ₂α/ω`, `Q = μ²λ₁β/ω` are evaluated
//! at half-nodes (cell faces) from face-reconstructed gradients, and the
//! net flux of each dual cell balances the cell integral of `2Hμλ₁λ₂`.
//! Interior fluxes cancel pairwise, so summing cell residuals over any
//! patch reproduces the discrete boundary flux exactly.
//!
//! Polar grids need some care around the coordinate center:
//! * tangential differences reconstruct the smooth quantity `u_θ/ρ`
//!   ring-by-ring instead of `u_θ` at the face, so nothing is amplified
//!   by `1/ρ`;
//! * radial faces integrate their flux with a 3-point Simpson rule whose
//!   endpoint gradients live at the cell corners;
//! * arc faces carry the measure `2ρ sin(h_θ/2)` and the angular central
//!   differences are rescaled by `1/sinc`, making them exact on the first
//!   angular harmonic.
//!
//! Together these make affine graphs over a flat chart exact solutions of
//! the discrete minimal equation and keep the truncation error `O(h²)`
//! uniformly in the ring index.

use rayon::prelude::*;

use crate::expr::EvalError;
use crate::field::Field;
use crate::geometry::{AmbientModel, ChartPoint, ModelField, SubmersionSpec};
use crate::graphs::{GraphError, PointwiseGraphData};

/// Margin for the discrete spacelike safeguard: grid operations demand
/// `μ²(α²+β²) ≤ 1 − SPACELIKE_MARGIN` in the Lorentzian case.
pub const SPACELIKE_MARGIN: f64 = 1e-8;

fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-8 {
        1.0 - x * x / 6.0
    } else {
        x.sin() / x
    }
}

// ---------------------------------------------------------------------------
// meshes
// ---------------------------------------------------------------------------

/// Tensor-product polar mesh over a disk: rings `ρ_i = i h_ρ`,
/// `i = 0..=n_rho` (ring `n_rho` is the boundary circle), angles
/// `θ_j = j h_θ` periodic.
#[derive(Debug, Clone, PartialEq)]
pub struct PolarMesh {
    pub radius: f64,
    pub n_rho: usize,
    pub n_theta: usize,
}

impl PolarMesh {
    pub fn new(radius: f64, n_rho: usize, n_theta: usize) -> PolarMesh {
        assert!(radius > 0.0 && n_rho >= 4 && n_theta >= 8 && n_theta % 2 == 0);
        PolarMesh {
            radius,
            n_rho,
            n_theta,
        }
    }

    pub fn h_rho(&self) -> f64 {
        self.radius / self.n_rho as f64
    }

    pub fn h_theta(&self) -> f64 {
        2.0 * std::f64::consts::PI / self.n_theta as f64
    }

    /// Largest spacing, the `h` of the O(h²) estimates.
    pub fn h_max(&self) -> f64 {
        self.h_rho().max(self.radius * self.h_theta())
    }

    pub fn node_count(&self) -> usize {
        1 + self.n_rho * self.n_theta
    }

    /// Flat index of node `(i, j)`; `i = 0` is the center (any `j`).
    pub fn idx(&self, i: usize, j: isize) -> usize {
        if i == 0 {
            return 0;
        }
        let m = self.n_theta as isize;
        let j = j.rem_euclid(m) as usize;
        1 + (i - 1) * self.n_theta + j
    }

    pub fn rho(&self, i: usize) -> f64 {
        i as f64 * self.h_rho()
    }

    pub fn theta(&self, j: usize) -> f64 {
        j as f64 * self.h_theta()
    }

    pub fn point(&self, i: usize, j: usize) -> ChartPoint {
        let rho = self.rho(i);
        let th = self.theta(j);
        (rho * th.cos(), rho * th.sin())
    }
}

/// Uniform Cartesian mesh over a rectangle.
#[derive(Debug, Clone, PartialEq)]
pub struct CartesianMesh {
    pub x0: f64,
    pub y0: f64,
    pub hx: f64,
    pub hy: f64,
    pub nx: usize,
    pub ny: usize,
}

impl CartesianMesh {
    pub fn new(x_range: (f64, f64), y_range: (f64, f64), nx: usize, ny: usize) -> CartesianMesh {
        assert!(nx >= 2 && ny >= 2);
        CartesianMesh {
            x0: x_range.0,
            y0: y_range.0,
            hx: (x_range.1 - x_range.0) / nx as f64,
            hy: (y_range.1 - y_range.0) / ny as f64,
            nx,
            ny,
        }
    }

    pub fn node_count(&self) -> usize {
        (self.nx + 1) * (self.ny + 1)
    }

    pub fn idx(&self, i: usize, j: usize) -> usize {
        j * (self.nx + 1) + i
    }

    pub fn point(&self, i: usize, j: usize) -> ChartPoint {
        (self.x0 + i as f64 * self.hx, self.y0 + j as f64 * self.hy)
    }

    pub fn h_max(&self) -> f64 {
        self.hx.max(self.hy)
    }
}

// ---------------------------------------------------------------------------
// face stencils and coefficients
// ---------------------------------------------------------------------------

/// Geometry/coefficient values frozen at one quadrature sample.
#[derive(Debug, Clone, Copy, Default)]
pub struct FaceCoef {
    pub l1: f64,
    pub l2: f64,
    pub mu: f64,
    pub a: f64,
    pub b: f64,
}

/// One gradient-reconstruction sample on a face:
/// `u_x = Σ wx[k] u[nodes[k]]`, `u_y = Σ wy[k] u[nodes[k]]`.
#[derive(Debug, Clone)]
pub struct GradSample {
    pub nodes: [usize; 12],
    pub wx: [f64; 12],
    pub wy: [f64; 12],
    pub len: usize,
    pub point: ChartPoint,
    /// quadrature weight; the sample weights of a face sum to 1
    pub qw: f64,
    pub coef: FaceCoef,
}

impl GradSample {
    pub fn gradient(&self, u: &[f64]) -> (f64, f64) {
        let mut ux = 0.0;
        let mut uy = 0.0;
        for k in 0..self.len {
            let v = u[self.nodes[k]];
            ux += self.wx[k] * v;
            uy += self.wy[k] * v;
        }
        (ux, uy)
    }
}

/// A cell face: quadrature samples, outward normal, measure.
#[derive(Debug, Clone)]
pub struct FaceStencil {
    pub samples: Vec<GradSample>,
    pub normal: (f64, f64),
    pub measure: f64,
}

/// Flux density `P n_x + Q n_y` and its gradient-derivatives at one sample.
fn flux_density(
    c: &FaceCoef,
    eps: f64,
    normal: (f64, f64),
    ux: f64,
    uy: f64,
    at: ChartPoint,
) -> Result<(f64, f64, f64, PointwiseGraphData), GraphError> {
    let alpha = ux / c.l1 - c.a;
    let beta = uy / c.l2 - c.b;
    let m2 = c.mu * c.mu;
    let g2 = m2 * (alpha * alpha + beta * beta);
    if eps < 0.0 && g2 > 1.0 - SPACELIKE_MARGIN {
        return Err(GraphError::Spacelike {
            x: at.0,
            y: at.1,
            value: g2,
        });
    }
    let w2 = 1.0 + eps * g2;
    let omega = w2.sqrt();
    let p = m2 * c.l2 * alpha / omega;
    let q = m2 * c.l1 * beta / omega;
    let w3 = omega * w2;
    let dp_da = m2 * c.l2 * (1.0 / omega - eps * m2 * alpha * alpha / w3);
    let dp_db = -m2 * c.l2 * alpha * eps * m2 * beta / w3;
    let dq_da = -m2 * c.l1 * beta * eps * m2 * alpha / w3;
    let dq_db = m2 * c.l1 * (1.0 / omega - eps * m2 * beta * beta / w3);
    let fd = p * normal.0 + q * normal.1;
    let dfd_dux = (dp_da * normal.0 + dq_da * normal.1) / c.l1;
    let dfd_duy = (dp_db * normal.0 + dq_db * normal.1) / c.l2;
    let data = PointwiseGraphData {
        alpha,
        beta,
        omega,
        nu: eps * c.mu / omega,
    };
    Ok((fd, dfd_dux, dfd_duy, data))
}

impl FaceStencil {
    /// Total flux through the face.
    pub fn flux(&self, eps: f64, u: &[f64]) -> Result<f64, GraphError> {
        let mut acc = 0.0;
        for s in &self.samples {
            let (ux, uy) = s.gradient(u);
            let (fd, _, _, _) = flux_density(&s.coef, eps, self.normal, ux, uy, s.point)?;
            acc += s.qw * fd;
        }
        Ok(acc * self.measure)
    }

    /// Flux and its derivatives with respect to the stencil nodes; the
    /// callback receives `(node, ∂flux/∂u_node)` contributions.
    pub fn flux_with_derivs<F>(
        &self,
        eps: f64,
        u: &[f64],
        mut emit: F,
    ) -> Result<f64, GraphError>
    where
        F: FnMut(usize, f64),
    {
        let mut acc = 0.0;
        for s in &self.samples {
            let (ux, uy) = s.gradient(u);
            let (fd, dd_ux, dd_uy, _) = flux_density(&s.coef, eps, self.normal, ux, uy, s.point)?;
            acc += s.qw * fd;
            let scale = s.qw * self.measure;
            for k in 0..s.len {
                emit(s.nodes[k], scale * (dd_ux * s.wx[k] + dd_uy * s.wy[k]));
            }
        }
        Ok(acc * self.measure)
    }

    /// Pointwise graph data at the face midpoint sample.
    pub fn midpoint_data(&self, eps: f64, u: &[f64]) -> Result<PointwiseGraphData, GraphError> {
        let s = &self.samples[self.samples.len() / 2];
        let (ux, uy) = s.gradient(u);
        let (_, _, _, data) = flux_density(&s.coef, eps, self.normal, ux, uy, s.point)?;
        Ok(data)
    }
}

fn eval_coef(
    spec: &SubmersionSpec,
    model: &AmbientModel,
    p: ChartPoint,
) -> Result<FaceCoef, EvalError> {
    Ok(FaceCoef {
        l1: spec.chart.lambda1.value(p.0, p.1)?,
        l2: spec.chart.lambda2.value(p.0, p.1)?,
        mu: spec.mu.value(p.0, p.1)?,
        a: model.a.value(p.0, p.1)?,
        b: model.b.value(p.0, p.1)?,
    })
}

/// Connection values along a ray, batching the Calabi potential when both
/// fields come from one.
pub(crate) fn ab_on_ray(
    model: &AmbientModel,
    theta: f64,
    rhos: &[f64],
    l1: &[f64],
    l2: &[f64],
) -> Result<Vec<(f64, f64)>, GraphError> {
    if let (
        ModelField::CalabiA {
            pot, eps: eps_a, ..
        },
        ModelField::CalabiB { pot: pot_b, .. },
    ) = (&model.a, &model.b)
    {
        if std::sync::Arc::ptr_eq(pot, pot_b) {
            let c = pot.eval_on_ray(theta, rhos)?;
            let (ct, st) = (theta.cos(), theta.sin());
            return Ok(rhos
                .iter()
                .enumerate()
                .map(|(k, &rho)| {
                    let x = rho * ct;
                    let y = rho * st;
                    let a = -eps_a * y * c[k] / l1[k];
                    let b = eps_a * x * c[k] / l2[k];
                    (a, b)
                })
                .collect());
        }
    }
    let (ct, st) = (theta.cos(), theta.sin());
    rhos.iter()
        .map(|&rho| {
            let p = (rho * ct, rho * st);
            Ok((model.a.value(p.0, p.1)?, model.b.value(p.0, p.1)?))
        })
        .collect()
}

/// All face stencils with frozen coefficients of a polar mesh.
pub struct PolarCoeffs {
    pub mesh: PolarMesh,
    pub eps: f64,
    /// ρ-faces (arcs) `(i+1/2, j)`, `i = 0..n_rho-1`, row-major in `i`.
    pub rho_faces: Vec<FaceStencil>,
    /// θ-faces (radial segments) `(i, j+1/2)`, `i = 1..n_rho-1`.
    pub theta_faces: Vec<FaceStencil>,
    /// `μ λ₁ λ₂` at every node.
    pub node_mu_lam: Vec<f64>,
    /// chart area of each interior cell, indexed like nodes.
    pub cell_area: Vec<f64>,
    /// `∫_cell μλ₁λ₂ dA` by radial Simpson, indexed like nodes. The exact
    /// ρ-weighted moment matters near the center, where midpoint-in-ρ cell
    /// integrals are only `O(h²/ρ)` accurate.
    pub cell_weight: Vec<f64>,
    /// `μλ₁λ₂` at the radial Simpson stations `ρ_i − h/2, ρ_i, ρ_i + h/2`
    /// of each interior ring cell, for source-term integrals.
    pub cell_mu_lam_samples: Vec<[f64; 3]>,
}

impl PolarCoeffs {
    pub fn rho_face_index(&self, i: usize, j: usize) -> usize {
        i * self.mesh.n_theta + j
    }

    pub fn theta_face_index(&self, i: usize, j: usize) -> usize {
        (i - 1) * self.mesh.n_theta + j
    }

    /// Net outward flux of the dual cell of node `(i, j)`; `i = 0` is the
    /// center cell.
    pub fn net_flux(&self, u: &[f64], i: usize, j: usize) -> Result<f64, GraphError> {
        let m = self.mesh.n_theta;
        if i == 0 {
            let mut acc = 0.0;
            for jj in 0..m {
                acc += self.rho_faces[self.rho_face_index(0, jj)].flux(self.eps, u)?;
            }
            return Ok(acc);
        }
        debug_assert!(i < self.mesh.n_rho);
        let jprev = (j + m - 1) % m;
        let mut acc = self.rho_faces[self.rho_face_index(i, j)].flux(self.eps, u)?;
        acc -= self.rho_faces[self.rho_face_index(i - 1, j)].flux(self.eps, u)?;
        acc += self.theta_faces[self.theta_face_index(i, j)].flux(self.eps, u)?;
        acc -= self.theta_faces[self.theta_face_index(i, jprev)].flux(self.eps, u)?;
        Ok(acc)
    }

    /// Cell-averaged discrete mean curvature,
    /// `2H̄ = net_flux / ∫_cell μλ₁λ₂ dA`; the average sits at the radial
    /// centroid `ρ_i + h²/(12ρ_i)` rather than at the node.
    pub fn mean_curvature_cell(&self, u: &[f64], i: usize, j: usize) -> Result<f64, GraphError> {
        let idx = self.mesh.idx(i, j as isize);
        let net = self.net_flux(u, i, j)?;
        Ok(net / (2.0 * self.cell_weight[idx]))
    }

    /// Source integral `∫_cell s μλ₁λ₂ dA` of a scalar sampled at the three
    /// radial Simpson stations of ring cell `(i, j)`.
    pub fn cell_source(&self, i: usize, j: usize, s: [f64; 3]) -> f64 {
        debug_assert!(i >= 1);
        let idx = self.mesh.idx(i, j as isize);
        let g = &self.cell_mu_lam_samples[idx];
        let h_rho = self.mesh.h_rho();
        let rho = self.mesh.rho(i);
        let h_theta = self.mesh.h_theta();
        h_theta * h_rho / 6.0
            * (s[0] * g[0] * (rho - 0.5 * h_rho)
                + 4.0 * s[1] * g[1] * rho
                + s[2] * g[2] * (rho + 0.5 * h_rho))
    }

    /// Radial Simpson station points of ring cell `(i, j)`.
    pub fn cell_source_points(&self, i: usize, j: usize) -> [ChartPoint; 3] {
        let th = self.mesh.theta(j);
        let (ct, st) = (th.cos(), th.sin());
        let rho = self.mesh.rho(i);
        let h = self.mesh.h_rho();
        [
            ((rho - 0.5 * h) * ct, (rho - 0.5 * h) * st),
            (rho * ct, rho * st),
            ((rho + 0.5 * h) * ct, (rho + 0.5 * h) * st),
        ]
    }
}

/// Build face stencils and freeze all geometric coefficients of
/// `(spec, model)` on the mesh. Rays are swept in parallel and the Calabi
/// potential, when the model carries one, is integrated cumulatively per
/// ray.
pub fn polar_coeffs(
    spec: &SubmersionSpec,
    model: &AmbientModel,
    mesh: &PolarMesh,
) -> Result<PolarCoeffs, GraphError> {
    let n = mesh.n_rho;
    let m = mesh.n_theta;
    let h_rho = mesh.h_rho();
    let h_theta = mesh.h_theta();
    let eps = spec.epsilon.sign();
    // central differences rescaled to be exact on the first angular harmonic
    let full_step = 2.0 * h_theta * sinc(h_theta);
    let half_step = h_theta * sinc(0.5 * h_theta);
    let cos_half = (0.5 * h_theta).cos();

    // coefficients on node rays θ_j at radii h/2, h, 3h/2, …, R
    let node_ray_radii: Vec<f64> = (1..=2 * n).map(|k| 0.5 * k as f64 * h_rho).collect();
    let coef_ray = |theta: f64, radii: &[f64]| -> Result<Vec<FaceCoef>, GraphError> {
        let (ct, st) = (theta.cos(), theta.sin());
        let mut l1v = Vec::with_capacity(radii.len());
        let mut l2v = Vec::with_capacity(radii.len());
        let mut muv = Vec::with_capacity(radii.len());
        for &rho in radii {
            let p = (rho * ct, rho * st);
            l1v.push(spec.chart.lambda1.value(p.0, p.1)?);
            l2v.push(spec.chart.lambda2.value(p.0, p.1)?);
            muv.push(spec.mu.value(p.0, p.1)?);
        }
        let ab = ab_on_ray(model, theta, radii, &l1v, &l2v)?;
        Ok((0..radii.len())
            .map(|k| FaceCoef {
                l1: l1v[k],
                l2: l2v[k],
                mu: muv[k],
                a: ab[k].0,
                b: ab[k].1,
            })
            .collect())
    };
    let node_rays: Vec<Vec<FaceCoef>> = (0..m)
        .into_par_iter()
        .map(|j| coef_ray(mesh.theta(j), &node_ray_radii))
        .collect::<Result<Vec<_>, _>>()?;
    // θ-face rays at θ_{j+1/2}, radii h/2, h, …, R − h/2
    let tface_radii: Vec<f64> = (1..2 * n).map(|k| 0.5 * k as f64 * h_rho).collect();
    let tface_rays: Vec<Vec<FaceCoef>> = (0..m)
        .into_par_iter()
        .map(|j| coef_ray((j as f64 + 0.5) * h_theta, &tface_radii))
        .collect::<Result<Vec<_>, _>>()?;

    // -- reconstruction weight helpers -------------------------------------
    // Radial derivative and tangential (u_θ/ρ) reconstructions are built
    // one order higher than the O(h²) a conservative scheme nominally
    // needs: every reconstruction error is later divided by a cell weight
    // ~ ρ h² near the axis, which eats one order at ρ = O(h). Rings at
    // negative radius are reached through the center via the antipodal
    // identification u(−ρ, θ) = u(ρ, θ+π), which is why the mesh demands
    // an even angular count.
    let half_m = (m / 2) as isize;
    // node of "ring" r (possibly negative or the center) at angular column c
    let ring_node = |r: isize, c: isize| -> usize {
        if r == 0 {
            mesh.idx(0, 0)
        } else if r < 0 {
            mesh.idx((-r) as usize, c + half_m)
        } else {
            mesh.idx(r as usize, c)
        }
    };
    // u_ρ at the face radius ρ_{i+1/2}, along the nodal column c:
    // 4th-order staggered stencil, one-sided cubic at the outer boundary
    let u_rho_face = |i: usize, c: isize| -> Vec<(usize, f64)> {
        if i + 2 <= n {
            let rings = [i as isize - 1, i as isize, i as isize + 1, i as isize + 2];
            let w = [1.0, -27.0, 27.0, -1.0];
            rings
                .iter()
                .zip(w.iter())
                .map(|(&r, &wk)| (ring_node(r, c), wk / (24.0 * h_rho)))
                .collect()
        } else {
            // i = n−1: cubic through rings n−3..n, derivative at ρ_{n−1/2}
            let rings = [n - 3, n - 2, n - 1, n];
            let w = [1.0, -3.0, -21.0, 23.0];
            rings
                .iter()
                .zip(w.iter())
                .map(|(&r, &wk)| (ring_node(r as isize, c), wk / (24.0 * h_rho)))
                .collect()
        }
    };
    // u_ρ at the node radius ρ_i, along column c: 4th-order central,
    // one-sided cubic at the outer boundary
    let u_rho_node = |i: usize, c: isize| -> Vec<(usize, f64)> {
        if i + 2 <= n {
            let rings = [i as isize - 2, i as isize - 1, i as isize + 1, i as isize + 2];
            let w = [1.0, -8.0, 8.0, -1.0];
            rings
                .iter()
                .zip(w.iter())
                .map(|(&r, &wk)| (ring_node(r, c), wk / (12.0 * h_rho)))
                .collect()
        } else {
            let rings = [n - 3, n - 2, n - 1, n];
            let w = [1.0 / 6.0, -1.0, 0.5, 1.0 / 3.0];
            rings
                .iter()
                .zip(w.iter())
                .map(|(&r, &wk)| (ring_node(r as isize, c), wk / h_rho))
                .collect()
        }
    };
    // rings and Lagrange weights of the quadratic u_θ/ρ reconstruction at
    // the face radius ρ_{i+1/2}
    let v_quad_rings = |i: usize| -> [(usize, f64); 3] {
        if i == 0 {
            [(1, 15.0 / 8.0), (2, -5.0 / 4.0), (3, 3.0 / 8.0)]
        } else if i + 2 <= n {
            [(i, 3.0 / 8.0), (i + 1, 3.0 / 4.0), (i + 2, -1.0 / 8.0)]
        } else {
            [(n - 2, -1.0 / 8.0), (n - 1, 3.0 / 4.0), (n, 3.0 / 8.0)]
        }
    };

    // accumulates (u_ρ-weight, u_θ/ρ-weight) pairs per node, then rotates
    // them into chart-gradient weights
    struct Builder {
        entries: Vec<(usize, f64, f64)>,
    }
    impl Builder {
        fn new() -> Builder {
            Builder {
                entries: Vec::with_capacity(12),
            }
        }
        fn add_rho(&mut self, node: usize, w: f64) {
            for e in &mut self.entries {
                if e.0 == node {
                    e.1 += w;
                    return;
                }
            }
            self.entries.push((node, w, 0.0));
        }
        fn add_v(&mut self, node: usize, w: f64) {
            for e in &mut self.entries {
                if e.0 == node {
                    e.2 += w;
                    return;
                }
            }
            self.entries.push((node, 0.0, w));
        }
        fn finish(self, theta: f64, point: ChartPoint, qw: f64, coef: FaceCoef) -> GradSample {
            let (ct, st) = (theta.cos(), theta.sin());
            let mut nodes = [0usize; 12];
            let mut wx = [0.0f64; 12];
            let mut wy = [0.0f64; 12];
            assert!(self.entries.len() <= 12);
            for (k, (node, wr, wv)) in self.entries.iter().enumerate() {
                nodes[k] = *node;
                wx[k] = ct * wr - st * wv;
                wy[k] = st * wr + ct * wv;
            }
            GradSample {
                nodes,
                wx,
                wy,
                len: self.entries.len(),
                point,
                qw,
                coef,
            }
        }
    }

    // ρ-face (arc) stencils: single angular-midpoint sample
    let mut rho_faces = Vec::with_capacity(n * m);
    for i in 0..n {
        for j in 0..m {
            let theta = mesh.theta(j);
            let rho_f = (i as f64 + 0.5) * h_rho;
            let jm = j as isize;
            let mut b = Builder::new();
            for (node, w) in u_rho_face(i, jm) {
                b.add_rho(node, w);
            }
            for (ring, lw) in v_quad_rings(i) {
                let vw = lw / (full_step * mesh.rho(ring));
                b.add_v(mesh.idx(ring, jm + 1), vw);
                b.add_v(mesh.idx(ring, jm - 1), -vw);
            }
            let (ct, st) = (theta.cos(), theta.sin());
            let sample = b.finish(
                theta,
                (rho_f * ct, rho_f * st),
                1.0,
                node_rays[j][2 * i],
            );
            rho_faces.push(FaceStencil {
                samples: vec![sample],
                normal: (ct, st),
                measure: 2.0 * rho_f * (0.5 * h_theta).sin(),
            });
        }
    }

    // θ-face (radial segment) stencils: Simpson over the segment with
    // corner endpoint samples
    let mut theta_faces = Vec::with_capacity((n - 1) * m);
    for i in 1..n {
        for j in 0..m {
            let theta = (j as f64 + 0.5) * h_theta;
            let (ct, st) = (theta.cos(), theta.sin());
            let jm = j as isize;
            let mut samples = Vec::with_capacity(3);
            // corner sample at radius ρ_{i_lo+1/2}
            let corner = |i_lo: usize, qw: f64| -> GradSample {
                let rho_c = (i_lo as f64 + 0.5) * h_rho;
                let mut b = Builder::new();
                // u_ρ: mean over the two angular columns, first harmonic
                // restored by 1/cos
                for c in [jm, jm + 1] {
                    for (node, w) in u_rho_face(i_lo, c) {
                        b.add_rho(node, 0.5 * w / cos_half);
                    }
                }
                // u_θ/ρ by half-step differences, quadratic in ρ
                for (ring, lw) in v_quad_rings(i_lo) {
                    let vw = lw / (half_step * mesh.rho(ring));
                    b.add_v(mesh.idx(ring, jm + 1), vw);
                    b.add_v(mesh.idx(ring, jm), -vw);
                }
                b.finish(
                    theta,
                    (rho_c * ct, rho_c * st),
                    qw,
                    tface_rays[j][2 * i_lo],
                )
            };
            samples.push(corner(i - 1, 1.0 / 6.0));
            // midpoint sample at ρ_i
            {
                let rho_i = mesh.rho(i);
                let mut b = Builder::new();
                for c in [jm, jm + 1] {
                    for (node, w) in u_rho_node(i, c) {
                        b.add_rho(node, 0.5 * w / cos_half);
                    }
                }
                let vw = 1.0 / (half_step * rho_i);
                b.add_v(mesh.idx(i, jm + 1), vw);
                b.add_v(mesh.idx(i, jm), -vw);
                samples.push(b.finish(
                    theta,
                    (rho_i * ct, rho_i * st),
                    4.0 / 6.0,
                    tface_rays[j][2 * i - 1],
                ));
            }
            samples.push(corner(i, 1.0 / 6.0));
            theta_faces.push(FaceStencil {
                samples,
                normal: (-st, ct),
                measure: h_rho,
            });
        }
    }

    // node values of μ λ₁λ₂ and cell areas
    let mut node_mu_lam = vec![0.0; mesh.node_count()];
    node_mu_lam[0] = spec.mu.value(0.0, 0.0)?
        * spec.chart.lambda1.value(0.0, 0.0)?
        * spec.chart.lambda2.value(0.0, 0.0)?;
    for i in 1..=n {
        for j in 0..m {
            let c = node_rays[j][2 * i - 1];
            node_mu_lam[mesh.idx(i, j as isize)] = c.mu * c.l1 * c.l2;
        }
    }
    let mut cell_area = vec![0.0; mesh.node_count()];
    cell_area[0] = std::f64::consts::PI * (0.5 * h_rho) * (0.5 * h_rho);
    for i in 1..n {
        for j in 0..m {
            cell_area[mesh.idx(i, j as isize)] = mesh.rho(i) * h_rho * h_theta;
        }
    }
    let mut cell_weight = vec![0.0; mesh.node_count()];
    let mut cell_mu_lam_samples = vec![[0.0; 3]; mesh.node_count()];
    cell_weight[0] = node_mu_lam[0] * cell_area[0];
    for i in 1..n {
        for j in 0..m {
            let idx = mesh.idx(i, j as isize);
            // node-ray radii (k+1)h/2: ρ_i ∓ h/2 at 2i−2 and 2i, ρ_i at 2i−1
            let g = |k: usize| {
                let c = node_rays[j][k];
                c.mu * c.l1 * c.l2
            };
            let samples = [g(2 * i - 2), g(2 * i - 1), g(2 * i)];
            cell_mu_lam_samples[idx] = samples;
            let rho = mesh.rho(i);
            cell_weight[idx] = h_theta * h_rho / 6.0
                * (samples[0] * (rho - 0.5 * h_rho)
                    + 4.0 * samples[1] * rho
                    + samples[2] * (rho + 0.5 * h_rho));
        }
    }

    Ok(PolarCoeffs {
        mesh: mesh.clone(),
        eps,
        rho_faces,
        theta_faces,
        node_mu_lam,
        cell_area,
        cell_weight,
        cell_mu_lam_samples,
    })
}

/// Cartesian analogue of [`PolarCoeffs`].
pub struct CartesianCoeffs {
    pub mesh: CartesianMesh,
    pub eps: f64,
    /// x-faces `(i+1/2, j)`, `i = 0..nx`, `j = 1..ny-1`.
    pub x_faces: Vec<FaceStencil>,
    /// y-faces `(i, j+1/2)`, `i = 1..nx-1`, `j = 0..ny`.
    pub y_faces: Vec<FaceStencil>,
    pub node_mu_lam: Vec<f64>,
    pub cell_area: f64,
}

impl CartesianCoeffs {
    pub fn x_face_index(&self, i: usize, j: usize) -> usize {
        debug_assert!(j >= 1 && j <= self.mesh.ny - 1);
        (j - 1) * self.mesh.nx + i
    }

    pub fn y_face_index(&self, i: usize, j: usize) -> usize {
        debug_assert!(i >= 1 && i <= self.mesh.nx - 1);
        j * (self.mesh.nx - 1) + (i - 1)
    }

    pub fn net_flux(&self, u: &[f64], i: usize, j: usize) -> Result<f64, GraphError> {
        debug_assert!(i >= 1 && i < self.mesh.nx && j >= 1 && j < self.mesh.ny);
        let mut acc = self.x_faces[self.x_face_index(i, j)].flux(self.eps, u)?;
        acc -= self.x_faces[self.x_face_index(i - 1, j)].flux(self.eps, u)?;
        acc += self.y_faces[self.y_face_index(i, j)].flux(self.eps, u)?;
        acc -= self.y_faces[self.y_face_index(i, j - 1)].flux(self.eps, u)?;
        Ok(acc)
    }

    pub fn mean_curvature_node(&self, u: &[f64], i: usize, j: usize) -> Result<f64, GraphError> {
        let idx = self.mesh.idx(i, j);
        let net = self.net_flux(u, i, j)?;
        Ok(net / (2.0 * self.cell_area * self.node_mu_lam[idx]))
    }
}

pub fn cartesian_coeffs(
    spec: &SubmersionSpec,
    model: &AmbientModel,
    mesh: &CartesianMesh,
) -> Result<CartesianCoeffs, GraphError> {
    let eps = spec.epsilon.sign();
    let mut x_faces = Vec::with_capacity(mesh.nx * mesh.ny.saturating_sub(1));
    for j in 1..mesh.ny {
        for i in 0..mesh.nx {
            let p = (
                mesh.x0 + (i as f64 + 0.5) * mesh.hx,
                mesh.y0 + j as f64 * mesh.hy,
            );
            let mut nodes = [0usize; 12];
            nodes[..6].copy_from_slice(&[
                mesh.idx(i, j),
                mesh.idx(i + 1, j),
                mesh.idx(i, j + 1),
                mesh.idx(i, j - 1),
                mesh.idx(i + 1, j + 1),
                mesh.idx(i + 1, j - 1),
            ]);
            let mut wx = [0.0f64; 12];
            let mut wy = [0.0f64; 12];
            wx[0] = -1.0 / mesh.hx;
            wx[1] = 1.0 / mesh.hx;
            wy[2] = 0.25 / mesh.hy;
            wy[3] = -0.25 / mesh.hy;
            wy[4] = 0.25 / mesh.hy;
            wy[5] = -0.25 / mesh.hy;
            x_faces.push(FaceStencil {
                samples: vec![GradSample {
                    nodes,
                    wx,
                    wy,
                    len: 6,
                    point: p,
                    qw: 1.0,
                    coef: eval_coef(spec, model, p)?,
                }],
                normal: (1.0, 0.0),
                measure: mesh.hy,
            });
        }
    }
    let mut y_faces = Vec::with_capacity((mesh.nx - 1) * (mesh.ny + 1));
    for j in 0..mesh.ny {
        for i in 1..mesh.nx {
            let p = (
                mesh.x0 + i as f64 * mesh.hx,
                mesh.y0 + (j as f64 + 0.5) * mesh.hy,
            );
            let mut nodes = [0usize; 12];
            nodes[..6].copy_from_slice(&[
                mesh.idx(i, j),
                mesh.idx(i, j + 1),
                mesh.idx(i + 1, j),
                mesh.idx(i - 1, j),
                mesh.idx(i + 1, j + 1),
                mesh.idx(i - 1, j + 1),
            ]);
            let mut wx = [0.0f64; 12];
            let mut wy = [0.0f64; 12];
            wy[0] = -1.0 / mesh.hy;
            wy[1] = 1.0 / mesh.hy;
            wx[2] = 0.25 / mesh.hx;
            wx[3] = -0.25 / mesh.hx;
            wx[4] = 0.25 / mesh.hx;
            wx[5] = -0.25 / mesh.hx;
            y_faces.push(FaceStencil {
                samples: vec![GradSample {
                    nodes,
                    wx,
                    wy,
                    len: 6,
                    point: p,
                    qw: 1.0,
                    coef: eval_coef(spec, model, p)?,
                }],
                normal: (0.0, 1.0),
                measure: mesh.hx,
            });
        }
    }
    let mut node_mu_lam = vec![0.0; mesh.node_count()];
    for j in 0..=mesh.ny {
        for i in 0..=mesh.nx {
            let p = mesh.point(i, j);
            node_mu_lam[mesh.idx(i, j)] = spec.mu.value(p.0, p.1)?
                * spec.chart.lambda1.value(p.0, p.1)?
                * spec.chart.lambda2.value(p.0, p.1)?;
        }
    }
    Ok(CartesianCoeffs {
        mesh: mesh.clone(),
        eps,
        x_faces,
        y_faces,
        node_mu_lam,
        cell_area: mesh.hx * mesh.hy,
    })
}

// ---------------------------------------------------------------------------
// graph grid
// ---------------------------------------------------------------------------

/// Discretized section over a disk (polar) or rectangle (Cartesian).
#[derive(Debug, Clone)]
pub enum GraphGrid {
    Polar { mesh: PolarMesh, u: Vec<f64> },
    Cartesian { mesh: CartesianMesh, u: Vec<f64> },
}

impl GraphGrid {
    /// Sample an analytic field on a polar mesh.
    pub fn polar_from_field(mesh: PolarMesh, f: &dyn Field) -> Result<GraphGrid, EvalError> {
        let mut u = vec![0.0; mesh.node_count()];
        u[0] = f.value(0.0, 0.0)?;
        for i in 1..=mesh.n_rho {
            for j in 0..mesh.n_theta {
                let p = mesh.point(i, j);
                u[mesh.idx(i, j as isize)] = f.value(p.0, p.1)?;
            }
        }
        Ok(GraphGrid::Polar { mesh, u })
    }

    pub fn cartesian_from_field(
        mesh: CartesianMesh,
        f: &dyn Field,
    ) -> Result<GraphGrid, EvalError> {
        let mut u = vec![0.0; mesh.node_count()];
        for j in 0..=mesh.ny {
            for i in 0..=mesh.nx {
                let p = mesh.point(i, j);
                u[mesh.idx(i, j)] = f.value(p.0, p.1)?;
            }
        }
        Ok(GraphGrid::Cartesian { mesh, u })
    }

    pub fn values(&self) -> &[f64] {
        match self {
            GraphGrid::Polar { u, .. } => u,
            GraphGrid::Cartesian { u, .. } => u,
        }
    }

    pub fn h_max(&self) -> f64 {
        match self {
            GraphGrid::Polar { mesh, .. } => mesh.h_max(),
            GraphGrid::Cartesian { mesh, .. } => mesh.h_max(),
        }
    }

    /// Bilinear interpolation in the grid's own coordinates.
    pub fn sample(&self, p: ChartPoint) -> Option<f64> {
        match self {
            GraphGrid::Polar { mesh, u } => {
                let rho = p.0.hypot(p.1);
                if rho > mesh.radius * (1.0 + 1e-12) {
                    return None;
                }
                let theta = p.1.atan2(p.0).rem_euclid(2.0 * std::f64::consts::PI);
                let fi = (rho / mesh.h_rho()).min(mesh.n_rho as f64);
                let fj = theta / mesh.h_theta();
                let i0 = (fi.floor() as usize).min(mesh.n_rho - 1);
                let j0 = (fj.floor() as usize) % mesh.n_theta;
                let di = fi - i0 as f64;
                let dj = fj - fj.floor();
                let v = |i: usize, j: isize| -> f64 { u[mesh.idx(i, j)] };
                let j0i = j0 as isize;
                let v00 = v(i0, j0i);
                let v10 = v(i0 + 1, j0i);
                let v01 = v(i0, j0i + 1);
                let v11 = v(i0 + 1, j0i + 1);
                Some(
                    v00 * (1.0 - di) * (1.0 - dj)
                        + v10 * di * (1.0 - dj)
                        + v01 * (1.0 - di) * dj
                        + v11 * di * dj,
                )
            }
            GraphGrid::Cartesian { mesh, u } => {
                let fx = (p.0 - mesh.x0) / mesh.hx;
                let fy = (p.1 - mesh.y0) / mesh.hy;
                if fx < -1e-12
                    || fy < -1e-12
                    || fx > mesh.nx as f64 + 1e-12
                    || fy > mesh.ny as f64 + 1e-12
                {
                    return None;
                }
                let i0 = (fx.floor().max(0.0) as usize).min(mesh.nx - 1);
                let j0 = (fy.floor().max(0.0) as usize).min(mesh.ny - 1);
                let di = fx - i0 as f64;
                let dj = fy - j0 as f64;
                let v = |i: usize, j: usize| u[mesh.idx(i, j)];
                Some(
                    v(i0, j0) * (1.0 - di) * (1.0 - dj)
                        + v(i0 + 1, j0) * di * (1.0 - dj)
                        + v(i0, j0 + 1) * (1.0 - di) * dj
                        + v(i0 + 1, j0 + 1) * di * dj,
                )
            }
        }
    }

    /// Chart gradient `(u_x, u_y)` at a node: central differences inside,
    /// one-sided second-order stencils on the boundary layer.
    pub fn node_gradient(&self, i: usize, j: usize) -> Option<(f64, f64)> {
        match self {
            GraphGrid::Polar { mesh, u } => {
                if i > mesh.n_rho {
                    return None;
                }
                if i == mesh.n_rho {
                    // boundary ring: one-sided radial derivative
                    let jm = j as isize;
                    let h_theta = mesh.h_theta();
                    let u_rho = (3.0 * u[mesh.idx(i, jm)] - 4.0 * u[mesh.idx(i - 1, jm)]
                        + u[mesh.idx(i - 2, jm)])
                        / (2.0 * mesh.h_rho());
                    let u_th = (u[mesh.idx(i, jm + 1)] - u[mesh.idx(i, jm - 1)])
                        / (2.0 * h_theta * sinc(h_theta));
                    let th = mesh.theta(j);
                    let rho = mesh.rho(i);
                    return Some((
                        th.cos() * u_rho - th.sin() * u_th / rho,
                        th.sin() * u_rho + th.cos() * u_th / rho,
                    ));
                }
                if i == 0 {
                    // first-harmonic projection over ring 1
                    let m = mesh.n_theta as f64;
                    let mut ux = 0.0;
                    let mut uy = 0.0;
                    for jj in 0..mesh.n_theta {
                        let th = mesh.theta(jj);
                        let val = u[mesh.idx(1, jj as isize)];
                        ux += val * th.cos();
                        uy += val * th.sin();
                    }
                    let scale = 2.0 / (m * mesh.h_rho());
                    return Some((ux * scale, uy * scale));
                }
                let jm = j as isize;
                let h_theta = mesh.h_theta();
                let u_rho =
                    (u[mesh.idx(i + 1, jm)] - u[mesh.idx(i - 1, jm)]) / (2.0 * mesh.h_rho());
                let u_th = (u[mesh.idx(i, jm + 1)] - u[mesh.idx(i, jm - 1)])
                    / (2.0 * h_theta * sinc(h_theta));
                let th = mesh.theta(j);
                let rho = mesh.rho(i);
                Some((
                    th.cos() * u_rho - th.sin() * u_th / rho,
                    th.sin() * u_rho + th.cos() * u_th / rho,
                ))
            }
            GraphGrid::Cartesian { mesh, u } => {
                if i > mesh.nx || j > mesh.ny {
                    return None;
                }
                let one_sided = |m0: f64, m1: f64, m2: f64, h: f64| (3.0 * m0 - 4.0 * m1 + m2) / (2.0 * h);
                let ux = if i == 0 {
                    -one_sided(
                        u[mesh.idx(0, j)],
                        u[mesh.idx(1, j)],
                        u[mesh.idx(2, j)],
                        mesh.hx,
                    )
                } else if i == mesh.nx {
                    one_sided(
                        u[mesh.idx(i, j)],
                        u[mesh.idx(i - 1, j)],
                        u[mesh.idx(i - 2, j)],
                        mesh.hx,
                    )
                } else {
                    (u[mesh.idx(i + 1, j)] - u[mesh.idx(i - 1, j)]) / (2.0 * mesh.hx)
                };
                let uy = if j == 0 {
                    -one_sided(
                        u[mesh.idx(i, 0)],
                        u[mesh.idx(i, 1)],
                        u[mesh.idx(i, 2)],
                        mesh.hy,
                    )
                } else if j == mesh.ny {
                    one_sided(
                        u[mesh.idx(i, j)],
                        u[mesh.idx(i, j - 1)],
                        u[mesh.idx(i, j - 2)],
                        mesh.hy,
                    )
                } else {
                    (u[mesh.idx(i, j + 1)] - u[mesh.idx(i, j - 1)]) / (2.0 * mesh.hy)
                };
                Some((ux, uy))
            }
        }
    }

    /// CSV export with header `x,y,u,alpha,beta,omega,nu,H` over the nodes
    /// where the full data stencil fits.
    pub fn to_csv(
        &self,
        spec: &SubmersionSpec,
        model: &AmbientModel,
    ) -> Result<String, GraphError> {
        let mut out = String::from("x,y,u,alpha,beta,omega,nu,H\n");
        let h = mean_curvature_grid(spec, model, self)?;
        let eps = spec.epsilon.sign();
        let mut push_row = |p: ChartPoint,
                            uval: f64,
                            grad: (f64, f64),
                            hval: f64|
         -> Result<(), GraphError> {
            let l1 = spec.chart.lambda1.value(p.0, p.1)?;
            let l2 = spec.chart.lambda2.value(p.0, p.1)?;
            let mu = spec.mu.value(p.0, p.1)?;
            let a = model.a.value(p.0, p.1)?;
            let b = model.b.value(p.0, p.1)?;
            let alpha = grad.0 / l1 - a;
            let beta = grad.1 / l2 - b;
            let d = PointwiseGraphData::from_gradient(mu, eps, alpha, beta, p)?;
            out.push_str(&format!(
                "{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e}\n",
                p.0, p.1, uval, d.alpha, d.beta, d.omega, d.nu, hval
            ));
            Ok(())
        };
        match self {
            GraphGrid::Polar { mesh, u } => {
                if let (Some(gc), Some(hc)) = (self.node_gradient(0, 0), h[0]) {
                    push_row((0.0, 0.0), u[0], gc, hc)?;
                }
                for i in 1..mesh.n_rho {
                    for j in 0..mesh.n_theta {
                        let idx = mesh.idx(i, j as isize);
                        if let (Some(g), Some(hv)) = (self.node_gradient(i, j), h[idx]) {
                            push_row(mesh.point(i, j), u[idx], g, hv)?;
                        }
                    }
                }
            }
            GraphGrid::Cartesian { mesh, u } => {
                for j in 1..mesh.ny {
                    for i in 1..mesh.nx {
                        let idx = mesh.idx(i, j);
                        if let (Some(g), Some(hv)) = (self.node_gradient(i, j), h[idx]) {
                            push_row(mesh.point(i, j), u[idx], g, hv)?;
                        }
                    }
                }
            }
        }
        Ok(out)
    }
}

/// Discrete mean curvature at every node where the conservative stencil
/// fits (`None` elsewhere), flattened in node index order.
pub fn mean_curvature_grid(
    spec: &SubmersionSpec,
    model: &AmbientModel,
    grid: &GraphGrid,
) -> Result<Vec<Option<f64>>, GraphError> {
    match grid {
        GraphGrid::Polar { mesh, u } => {
            let coeffs = polar_coeffs(spec, model, mesh)?;
            // cell averages first
            let mut avg = vec![0.0; mesh.node_count()];
            avg[0] = coeffs.mean_curvature_cell(u, 0, 0)?;
            for i in 1..mesh.n_rho {
                for j in 0..mesh.n_theta {
                    avg[mesh.idx(i, j as isize)] = coeffs.mean_curvature_cell(u, i, j)?;
                }
            }
            // ρ-weighted cell averages are biased towards the outer half of
            // each annulus; recover node values by fitting a radial
            // quadratic through three neighboring averages, matching the
            // exact ρ-moments of each cell (the bias is O(h²/ρ), so a
            // first-order shift is not enough on the innermost rings)
            let h_rho = mesh.h_rho();
            let mom1 = |i: usize| -> f64 {
                if i == 0 {
                    h_rho / 3.0
                } else {
                    let rho = mesh.rho(i);
                    rho + h_rho * h_rho / (12.0 * rho)
                }
            };
            let mom2 = |i: usize| -> f64 {
                if i == 0 {
                    h_rho * h_rho / 8.0
                } else {
                    let rho = mesh.rho(i);
                    rho * rho + h_rho * h_rho / 4.0
                }
            };
            let mut out = vec![None; mesh.node_count()];
            out[0] = Some(avg[0]);
            for i in 1..mesh.n_rho {
                let tri = if i == 1 {
                    [0usize, 1, 2]
                } else if i + 1 < mesh.n_rho {
                    [i - 1, i, i + 1]
                } else {
                    [i - 2, i - 1, i]
                };
                // weights w with Σ w_c (1, m1_c, m2_c) = (1, ρ_i, ρ_i²)
                let a = [
                    [1.0, 1.0, 1.0],
                    [mom1(tri[0]), mom1(tri[1]), mom1(tri[2])],
                    [mom2(tri[0]), mom2(tri[1]), mom2(tri[2])],
                ];
                let rho_i = mesh.rho(i);
                let rhs = [1.0, rho_i, rho_i * rho_i];
                let inv = crate::linalg::inv3(&a).expect("moment system is nonsingular");
                let w = crate::linalg::matvec3(&inv, &rhs);
                for j in 0..mesh.n_theta {
                    let jm = j as isize;
                    let pick = |c: usize| -> f64 {
                        if c == 0 {
                            avg[0]
                        } else {
                            avg[mesh.idx(c, jm)]
                        }
                    };
                    let val = w[0] * pick(tri[0]) + w[1] * pick(tri[1]) + w[2] * pick(tri[2]);
                    out[mesh.idx(i, jm)] = Some(val);
                }
            }
            Ok(out)
        }
        GraphGrid::Cartesian { mesh, u } => {
            let coeffs = cartesian_coeffs(spec, model, mesh)?;
            let mut out = vec![None; mesh.node_count()];
            for j in 1..mesh.ny {
                for i in 1..mesh.nx {
                    out[mesh.idx(i, j)] = Some(coeffs.mean_curvature_node(u, i, j)?);
                }
            }
            Ok(out)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::ScalarField;
    use crate::field::C2Field;
    use crate::geometry::Epsilon;
    use crate::graphs::mean_curvature;

    #[test]
    fn affine_graph_is_exact_on_polar_grid() {
        let spec = SubmersionSpec::flat(Epsilon::Riemannian);
        let model = AmbientModel::trivial();
        let u = C2Field::new(ScalarField::parse("0.7*x-0.4*y+0.3").unwrap());
        let mesh = PolarMesh::new(1.0, 12, 28);
        let grid = GraphGrid::polar_from_field(mesh.clone(), &u).unwrap();
        let h = mean_curvature_grid(&spec, &model, &grid).unwrap();
        for (k, hv) in h.iter().enumerate() {
            if let Some(v) = hv {
                assert!(v.abs() < 1e-12, "node {k}: H = {v}");
            }
        }
    }

    #[test]
    fn grid_mean_curvature_converges_quadratically() {
        // versus the exact pointwise mean curvature of an analytic section
        let spec = SubmersionSpec::homogeneous(1.0, 0.5, Epsilon::Riemannian);
        let model = AmbientModel::symbolic(
            ScalarField::parse("-0.5*y").unwrap(),
            ScalarField::parse("0.5*x").unwrap(),
        );
        let u = C2Field::new(ScalarField::parse("x^2/4+sin(y)/5").unwrap());
        let mut errors = Vec::new();
        for n in [8usize, 16, 32] {
            let mesh = PolarMesh::new(1.0, n, 4 * n);
            let grid = GraphGrid::polar_from_field(mesh.clone(), &u).unwrap();
            let hs = mean_curvature_grid(&spec, &model, &grid).unwrap();
            let mut max_err: f64 = 0.0;
            for i in 1..mesh.n_rho {
                for j in 0..mesh.n_theta {
                    let p = mesh.point(i, j);
                    let exact = mean_curvature(&spec, &model, &u, p).unwrap();
                    let approx = hs[mesh.idx(i, j as isize)].unwrap();
                    max_err = max_err.max((exact - approx).abs());
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
    fn cartesian_grid_mean_curvature_converges() {
        let spec = SubmersionSpec::flat(Epsilon::Riemannian);
        let model = AmbientModel::trivial();
        let u = C2Field::new(ScalarField::parse("exp(x/2)*cos(y)/4").unwrap());
        let mut errors = Vec::new();
        for n in [8usize, 16, 32] {
            let mesh = CartesianMesh::new((-0.5, 0.5), (-0.5, 0.5), n, n);
            let grid = GraphGrid::cartesian_from_field(mesh.clone(), &u).unwrap();
            let hs = mean_curvature_grid(&spec, &model, &grid).unwrap();
            let mut max_err: f64 = 0.0;
            for j in 1..mesh.ny {
                for i in 1..mesh.nx {
                    let p = mesh.point(i, j);
                    let exact = mean_curvature(&spec, &model, &u, p).unwrap();
                    let approx = hs[mesh.idx(i, j)].unwrap();
                    max_err = max_err.max((exact - approx).abs());
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
    fn discrete_divergence_theorem_is_exact() {
        // sum of net fluxes over all cells inside ring K equals the total
        // flux through the ρ-faces at K−1/2, to rounding
        let spec = SubmersionSpec::homogeneous(-1.0, 0.3, Epsilon::Riemannian);
        let model = crate::geometry::connection_from_potential(&spec, Default::default()).unwrap();
        let u = C2Field::new(ScalarField::parse("x^2/6-x*y/7+y/3").unwrap());
        let mesh = PolarMesh::new(1.0, 10, 24);
        let grid = GraphGrid::polar_from_field(mesh.clone(), &u).unwrap();
        let uv = grid.values();
        let coeffs = polar_coeffs(&spec, &model, &mesh).unwrap();
        let k_ring = 7usize;
        let mut interior_sum = coeffs.net_flux(uv, 0, 0).unwrap();
        for i in 1..k_ring {
            for j in 0..mesh.n_theta {
                interior_sum += coeffs.net_flux(uv, i, j).unwrap();
            }
        }
        let mut boundary = 0.0;
        for j in 0..mesh.n_theta {
            boundary += coeffs.rho_faces[coeffs.rho_face_index(k_ring - 1, j)]
                .flux(coeffs.eps, uv)
                .unwrap();
        }
        assert!(
            (interior_sum - boundary).abs() < 1e-13 * (1.0 + boundary.abs()),
            "{interior_sum} vs {boundary}"
        );
    }

    #[test]
    fn face_flux_derivatives_match_finite_differences() {
        let spec = SubmersionSpec::homogeneous(1.0, 0.4, Epsilon::Riemannian);
        let model = AmbientModel::symbolic(
            ScalarField::parse("-0.4*y").unwrap(),
            ScalarField::parse("0.4*x").unwrap(),
        );
        let mesh = PolarMesh::new(1.0, 6, 16);
        let coeffs = polar_coeffs(&spec, &model, &mesh).unwrap();
        let mut u: Vec<f64> = (0..mesh.node_count())
            .map(|k| (k as f64 * 0.7).sin() * 0.1)
            .collect();
        for face in [&coeffs.rho_faces[coeffs.rho_face_index(2, 3)],
            &coeffs.theta_faces[coeffs.theta_face_index(2, 3)]]
        {
            let mut derivs: Vec<(usize, f64)> = Vec::new();
            let f0 = face
                .flux_with_derivs(coeffs.eps, &u, |n, d| derivs.push((n, d)))
                .unwrap();
            let mut tot: std::collections::HashMap<usize, f64> = Default::default();
            for (n, d) in derivs {
                *tot.entry(n).or_insert(0.0) += d;
            }
            for (&node, &dval) in &tot {
                let h = 1e-7;
                let old = u[node];
                u[node] = old + h;
                let f1 = face.flux(coeffs.eps, &u).unwrap();
                u[node] = old;
                let fd = (f1 - f0) / h;
                assert!(
                    (fd - dval).abs() < 1e-5 * (1.0 + dval.abs()),
                    "node {node}: fd {fd} vs analytic {dval}"
                );
            }
        }
    }

    #[test]
    fn lorentzian_grid_guards_spacelike_margin() {
        let spec = SubmersionSpec::flat(Epsilon::Lorentzian);
        let model = AmbientModel::trivial();
        let u = C2Field::new(ScalarField::parse("0.99999999999*x").unwrap());
        let mesh = PolarMesh::new(1.0, 6, 12);
        let grid = GraphGrid::polar_from_field(mesh, &u).unwrap();
        let res = mean_curvature_grid(&spec, &model, &grid);
        assert!(matches!(res, Err(GraphError::Spacelike { .. })));
    }

    #[test]
    fn grid_sampling_interpolates() {
        let mesh = PolarMesh::new(2.0, 16, 48);
        let f = C2Field::new(ScalarField::parse("x+2*y").unwrap());
        let grid = GraphGrid::polar_from_field(mesh, &f).unwrap();
        for &p in &[(0.3, 0.4), (-1.0, 0.2), (0.0, 0.0), (1.2, -1.1)] {
            let v = grid.sample(p).unwrap();
            assert!((v - (p.0 + 2.0 * p.1)).abs() < 3e-3, "sample at {p:?}: {v}");
        }
    }

    #[test]
    fn csv_export_has_expected_header() {
        let spec = SubmersionSpec::flat(Epsilon::Riemannian);
        let model = AmbientModel::trivial();
        let mesh = PolarMesh::new(1.0, 4, 8);
        let grid =
            GraphGrid::polar_from_field(mesh, &C2Field::new(ScalarField::parse("x*y/10").unwrap()))
                .unwrap();
        let csv = grid.to_csv(&spec, &model).unwrap();
        assert!(csv.starts_with("x,y,u,alpha,beta,omega,nu,H\n"));
        assert!(csv.lines().count() > 10);
    }
}
