//! The conformal duality between Riemannian and Lorentzian Killing graphs.
//!
//! A graph of prescribed mean curvature `H` in `E(M,τ,μ)` and a spacelike
//! graph of prescribed mean curvature `τ` in `L(M,H,1/μ)` determine each
//! other up to vertical translations. Pointwise the correspondence is the
//! twin map on generalized gradients,
//!
//! ```text
//! (α̃, β̃) = (−μ²β/ω, μ²α/ω)   ⇔   (α, β) = (β̃/(μ²ω̃), −α̃/(μ²ω̃)),
//! ```
//!
//! with `ω ω̃ = 1` and `ν̃ = −1/ν`; the dual graph function is recovered by
//! integrating the exact one-form `(v_x, v_y)` built from the twins and the
//! dual connection functions.

use crate::expr::ScalarField;
use crate::field::{C2Field, Field};
use crate::geometry::{
    connection_from_potential, AmbientModel, ChartPoint, Epsilon, SubmersionSpec,
};
use crate::graphs::{
    induced_metric_from_data, mean_curvature_grid, GraphError, GraphGrid, PointwiseGraphData,
};
use crate::quad::QuadControl;

/// Direction of the twin map; the `μ` argument is always the Killing length
/// of the Riemannian side.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TwinDirection {
    ToLorentzian,
    ToRiemannian,
}

/// The twin relations on generalized gradient components.
pub fn twin_gradient(
    mu: f64,
    alpha: f64,
    beta: f64,
    direction: TwinDirection,
) -> Result<(f64, f64), GraphError> {
    let m2 = mu * mu;
    match direction {
        TwinDirection::ToLorentzian => {
            let omega = (1.0 + m2 * (alpha * alpha + beta * beta)).sqrt();
            Ok((-m2 * beta / omega, m2 * alpha / omega))
        }
        TwinDirection::ToRiemannian => {
            // here (alpha, beta) are the Lorentzian components; spacelike
            // means ‖G̃v‖² < μ²
            let g2 = (alpha * alpha + beta * beta) / m2;
            let w2 = 1.0 - g2;
            if w2 <= 0.0 {
                return Err(GraphError::Spacelike {
                    x: f64::NAN,
                    y: f64::NAN,
                    value: g2,
                });
            }
            let omega_t = w2.sqrt();
            Ok((beta / (m2 * omega_t), -alpha / (m2 * omega_t)))
        }
    }
}

/// The dual submersion data: same chart, bundle curvature `H`, reciprocal
/// Killing length, flipped causal character.
pub fn dual_spec(spec: &SubmersionSpec, h_mean: &ScalarField) -> SubmersionSpec {
    SubmersionSpec::new(
        spec.chart.clone(),
        h_mean.clone(),
        ScalarField::one().div(&spec.mu.f),
        spec.epsilon.flip(),
    )
}

/// The graph being dualized: an analytic section or a nodal grid.
#[derive(Debug, Clone)]
pub enum GraphSource {
    Analytic(C2Field),
    Grid(GraphGrid),
}

impl GraphSource {
    fn chart_gradient(&self, grid: &GraphGrid, i: usize, j: usize) -> Option<(f64, f64)> {
        match self {
            GraphSource::Analytic(f) => {
                let p = match grid {
                    GraphGrid::Polar { mesh, .. } => {
                        if i == 0 {
                            (0.0, 0.0)
                        } else {
                            mesh.point(i, j)
                        }
                    }
                    GraphGrid::Cartesian { mesh, .. } => mesh.point(i, j),
                };
                Some((f.fx.eval(p.0, p.1).ok()?, f.fy.eval(p.0, p.1).ok()?))
            }
            GraphSource::Grid(g) => g.node_gradient(i, j),
        }
    }
}

/// A dual pair: the primal data, the reconstructed dual graph, and the
/// reconstruction diagnostics. The gauge is `v(basepoint) = 0`.
#[derive(Debug, Clone)]
pub struct DualPair {
    pub primal_spec: SubmersionSpec,
    pub primal_model: AmbientModel,
    pub primal: GraphSource,
    pub dual_spec: SubmersionSpec,
    pub dual_model: AmbientModel,
    pub v: GraphGrid,
    pub basepoint: ChartPoint,
    /// sup of `|∂y v_x − ∂x v_y|` over interior nodes: the integrability
    /// defect of the reconstructed one-form.
    pub curl_residual: f64,
    /// sup mismatch between the two independent integration paths.
    pub path_mismatch: f64,
}

/// Fourth-order cumulative integral of nodal samples with uniform spacing.
fn cumulative(f: &[f64], h: f64) -> Vec<f64> {
    let n = f.len();
    let mut out = vec![0.0; n];
    if n < 2 {
        return out;
    }
    for k in 0..n - 1 {
        let seg = if n >= 4 {
            if k == 0 {
                h / 24.0 * (9.0 * f[0] + 19.0 * f[1] - 5.0 * f[2] + f[3])
            } else if k == n - 2 {
                h / 24.0 * (9.0 * f[n - 1] + 19.0 * f[n - 2] - 5.0 * f[n - 3] + f[n - 4])
            } else {
                h / 24.0 * (-f[k - 1] + 13.0 * f[k] + 13.0 * f[k + 1] - f[k + 2])
            }
        } else {
            0.5 * h * (f[k] + f[k + 1])
        };
        out[k + 1] = out[k] + seg;
    }
    out
}

struct OneForm {
    vx: Vec<f64>,
    vy: Vec<f64>,
}

/// Nodal one-form `(v_x, v_y)` of the dual graph from the twin relations.
fn build_one_form(
    spec: &SubmersionSpec,
    model: &AmbientModel,
    source: &GraphSource,
    dual_model: &AmbientModel,
    shape: &GraphGrid,
) -> Result<OneForm, GraphError> {
    let direction = match spec.epsilon {
        Epsilon::Riemannian => TwinDirection::ToLorentzian,
        Epsilon::Lorentzian => TwinDirection::ToRiemannian,
    };
    // the dual connection is usually Calabi-backed; on polar grids its
    // potential integrates cumulatively along each ray instead of point by
    // point
    let dual_ab: Option<Vec<(f64, f64)>> = match shape {
        GraphGrid::Polar { mesh, .. } => {
            let rhos: Vec<f64> = (1..=mesh.n_rho).map(|i| mesh.rho(i)).collect();
            let mut table = vec![(0.0, 0.0); mesh.node_count()];
            table[0] = (
                dual_model.a.value(0.0, 0.0)?,
                dual_model.b.value(0.0, 0.0)?,
            );
            for j in 0..mesh.n_theta {
                let theta = mesh.theta(j);
                let (ct, st) = (theta.cos(), theta.sin());
                let mut l1v = Vec::with_capacity(rhos.len());
                let mut l2v = Vec::with_capacity(rhos.len());
                for &rho in &rhos {
                    let p = (rho * ct, rho * st);
                    l1v.push(spec.chart.lambda1.value(p.0, p.1)?);
                    l2v.push(spec.chart.lambda2.value(p.0, p.1)?);
                }
                let ab = crate::graphs::grid::ab_on_ray(dual_model, theta, &rhos, &l1v, &l2v)?;
                for (i, val) in ab.into_iter().enumerate() {
                    table[mesh.idx(i + 1, j as isize)] = val;
                }
            }
            Some(table)
        }
        GraphGrid::Cartesian { .. } => None,
    };
    let nodes: Vec<(usize, usize, ChartPoint)> = match shape {
        GraphGrid::Polar { mesh, .. } => {
            let mut v = vec![(0usize, 0usize, (0.0, 0.0))];
            for i in 1..=mesh.n_rho {
                for j in 0..mesh.n_theta {
                    v.push((i, j, mesh.point(i, j)));
                }
            }
            v
        }
        GraphGrid::Cartesian { mesh, .. } => {
            let mut v = Vec::new();
            for j in 0..=mesh.ny {
                for i in 0..=mesh.nx {
                    v.push((i, j, mesh.point(i, j)));
                }
            }
            v
        }
    };
    let count = match shape {
        GraphGrid::Polar { mesh, .. } => mesh.node_count(),
        GraphGrid::Cartesian { mesh, .. } => mesh.node_count(),
    };
    let mut vx = vec![0.0; count];
    let mut vy = vec![0.0; count];
    for (i, j, p) in nodes {
        let idx = match shape {
            GraphGrid::Polar { mesh, .. } => mesh.idx(i, j as isize),
            GraphGrid::Cartesian { mesh, .. } => mesh.idx(i, j),
        };
        let (ux, uy) = source
            .chart_gradient(shape, i, j)
            .ok_or_else(|| GraphError::Invalid(format!("no gradient at node ({i}, {j})")))?;
        let l1 = spec.chart.lambda1.value(p.0, p.1)?;
        let l2 = spec.chart.lambda2.value(p.0, p.1)?;
        let alpha = ux / l1 - model.a.value(p.0, p.1)?;
        let beta = uy / l2 - model.b.value(p.0, p.1)?;
        let mu_r = match spec.epsilon {
            Epsilon::Riemannian => spec.mu.value(p.0, p.1)?,
            Epsilon::Lorentzian => 1.0 / spec.mu.value(p.0, p.1)?,
        };
        let (ta, tb) = twin_gradient(mu_r, alpha, beta, direction).map_err(|e| match e {
            GraphError::Spacelike { value, .. } => GraphError::Spacelike {
                x: p.0,
                y: p.1,
                value,
            },
            other => other,
        })?;
        let (da, db) = match &dual_ab {
            Some(table) => table[idx],
            None => (
                dual_model.a.value(p.0, p.1)?,
                dual_model.b.value(p.0, p.1)?,
            ),
        };
        vx[idx] = l1 * (da + ta);
        vy[idx] = l2 * (db + tb);
    }
    Ok(OneForm { vx, vy })
}

/// Integrate the one-form along the grid's canonical paths; returns the
/// primary potential, the two-path mismatch, and the curl residual.
fn integrate_one_form(shape: &GraphGrid, form: &OneForm) -> (Vec<f64>, f64, f64) {
    match shape {
        GraphGrid::Polar { mesh, .. } => {
            let n = mesh.n_rho;
            let m = mesh.n_theta;
            let h_rho = mesh.h_rho();
            let h_theta = mesh.h_theta();
            let mut v = vec![0.0; mesh.node_count()];
            // path A: radial from the center along each ray
            for j in 0..m {
                let th = mesh.theta(j);
                let (ct, st) = (th.cos(), th.sin());
                let mut w = Vec::with_capacity(n + 1);
                for i in 0..=n {
                    let idx = mesh.idx(i, j as isize);
                    w.push(ct * form.vx[idx] + st * form.vy[idx]);
                }
                let cums = cumulative(&w, h_rho);
                for i in 1..=n {
                    v[mesh.idx(i, j as isize)] = cums[i];
                }
            }
            // path B: radial along ray 0, then the ring arc; mismatch
            // includes the loop-closure defect
            let mut mismatch: f64 = 0.0;
            for i in 1..=n {
                let rho = mesh.rho(i);
                let mut g = Vec::with_capacity(m + 1);
                for j in 0..=m {
                    let jj = (j % m) as isize;
                    let th = j as f64 * h_theta;
                    let idx = mesh.idx(i, jj);
                    g.push(rho * (-th.sin() * form.vx[idx] + th.cos() * form.vy[idx]));
                }
                let cums = cumulative(&g, h_theta);
                let base = v[mesh.idx(i, 0)];
                for j in 0..m {
                    let vb = base + cums[j];
                    mismatch = mismatch.max((vb - v[mesh.idx(i, j as isize)]).abs());
                }
                mismatch = mismatch.max(cums[m].abs());
            }
            // curl residual over nodes whose stencil only sees one-form
            // values built from interior (central) gradients
            let mut curl: f64 = 0.0;
            for i in 1..n.saturating_sub(1) {
                for j in 0..m {
                    if let (Some(gx), Some(gy)) = (
                        polar_field_gradient(mesh, &form.vy, i, j),
                        polar_field_gradient(mesh, &form.vx, i, j),
                    ) {
                        curl = curl.max((gx.0 - gy.1).abs());
                    }
                }
            }
            (v, mismatch, curl)
        }
        GraphGrid::Cartesian { mesh, .. } => {
            let (nx, ny) = (mesh.nx, mesh.ny);
            let mut v = vec![0.0; mesh.node_count()];
            // path A: along x on the base row, then up each column
            let row0: Vec<f64> = (0..=nx).map(|i| form.vx[mesh.idx(i, 0)]).collect();
            let row_cum = cumulative(&row0, mesh.hx);
            for i in 0..=nx {
                let col: Vec<f64> = (0..=ny).map(|j| form.vy[mesh.idx(i, j)]).collect();
                let col_cum = cumulative(&col, mesh.hy);
                for j in 0..=ny {
                    v[mesh.idx(i, j)] = row_cum[i] + col_cum[j];
                }
            }
            // path B: up the base column, then along each row
            let col0: Vec<f64> = (0..=ny).map(|j| form.vy[mesh.idx(0, j)]).collect();
            let col_cum0 = cumulative(&col0, mesh.hy);
            let mut mismatch: f64 = 0.0;
            for j in 0..=ny {
                let row: Vec<f64> = (0..=nx).map(|i| form.vx[mesh.idx(i, j)]).collect();
                let row_cum_j = cumulative(&row, mesh.hx);
                for i in 0..=nx {
                    let vb = col_cum0[j] + row_cum_j[i];
                    mismatch = mismatch.max((vb - v[mesh.idx(i, j)]).abs());
                }
            }
            let mut curl: f64 = 0.0;
            for j in 2..ny.saturating_sub(1) {
                for i in 2..nx.saturating_sub(1) {
                    let dvy_dx =
                        (form.vy[mesh.idx(i + 1, j)] - form.vy[mesh.idx(i - 1, j)]) / (2.0 * mesh.hx);
                    let dvx_dy =
                        (form.vx[mesh.idx(i, j + 1)] - form.vx[mesh.idx(i, j - 1)]) / (2.0 * mesh.hy);
                    curl = curl.max((dvy_dx - dvx_dy).abs());
                }
            }
            (v, mismatch, curl)
        }
    }
}

fn polar_field_gradient(
    mesh: &crate::graphs::PolarMesh,
    f: &[f64],
    i: usize,
    j: usize,
) -> Option<(f64, f64)> {
    if i == 0 || i >= mesh.n_rho {
        return None;
    }
    let jm = j as isize;
    let h_theta = mesh.h_theta();
    let sinc = h_theta.sin() / h_theta;
    let f_rho = (f[mesh.idx(i + 1, jm)] - f[mesh.idx(i - 1, jm)]) / (2.0 * mesh.h_rho());
    let f_th =
        (f[mesh.idx(i, jm + 1)] - f[mesh.idx(i, jm - 1)]) / (2.0 * h_theta * sinc);
    let th = mesh.theta(j);
    let rho = mesh.rho(i);
    Some((
        th.cos() * f_rho - th.sin() * f_th / rho,
        th.sin() * f_rho + th.cos() * f_th / rho,
    ))
}

/// Dualize a graph: build the dual spec and its Calabi-potential model,
/// evaluate the twin one-form on the grid nodes, and path-integrate it
/// with gauge `v(basepoint) = 0` at the grid origin.
pub fn dualize(
    spec: &SubmersionSpec,
    model: &AmbientModel,
    source: GraphSource,
    h_mean: &ScalarField,
    shape: &GraphGrid,
    ctl: QuadControl,
) -> Result<DualPair, GraphError> {
    let dspec = dual_spec(spec, h_mean);
    // the dual connection is always regenerated from the Calabi potential
    // of the dual spec: a different admissible (ã, b̃) is only a change of
    // zero section and shifts v by a vertical translation
    let dual_model = connection_from_potential(&dspec, ctl)?;
    let form = build_one_form(spec, model, &source, &dual_model, shape)?;
    let (vvals, mismatch, curl) = integrate_one_form(shape, &form);
    let v = match shape {
        GraphGrid::Polar { mesh, .. } => GraphGrid::Polar {
            mesh: mesh.clone(),
            u: vvals,
        },
        GraphGrid::Cartesian { mesh, .. } => GraphGrid::Cartesian {
            mesh: mesh.clone(),
            u: vvals,
        },
    };
    let basepoint = match shape {
        GraphGrid::Polar { .. } => (0.0, 0.0),
        GraphGrid::Cartesian { mesh, .. } => mesh.point(0, 0),
    };
    Ok(DualPair {
        primal_spec: spec.clone(),
        primal_model: model.clone(),
        primal: source,
        dual_spec: dspec,
        dual_model,
        v,
        basepoint,
        curl_residual: curl,
        path_mismatch: mismatch,
    })
}

/// Acceptance tolerance for a dualization: the curl residual must stay
/// below `max(1e-6, 5h²)`.
pub fn curl_tolerance(h: f64) -> f64 {
    (5.0 * h * h).max(1e-6)
}

/// Pointwise and grid-level checks of the duality identities.
#[derive(Debug, Clone, Copy)]
pub struct DualityReport {
    /// sup |ω ω̃ − 1|
    pub omega_product_residual: f64,
    /// sup |ν̃ + 1/ν|
    pub angle_function_residual: f64,
    /// sup entrywise |g̃ − μ⁻²ν² g|
    pub conformal_residual: f64,
    /// sup over interior nodes of |H_grid(v) − τ_primal|
    pub dual_mean_curvature_error: f64,
    pub curl_residual: f64,
    pub path_mismatch: f64,
    /// h of the grid, for tolerance scaling
    pub h_max: f64,
}

/// Verify the duality identities of a pair at the interior grid nodes.
pub fn verify_duality(pair: &DualPair, max_samples: usize) -> Result<DualityReport, GraphError> {
    let spec = &pair.primal_spec;
    let eps = spec.epsilon.sign();
    let mut omega_res: f64 = 0.0;
    let mut nu_res: f64 = 0.0;
    let mut conf_res: f64 = 0.0;

    // sample interior nodes
    let nodes: Vec<(usize, usize, ChartPoint)> = match &pair.v {
        GraphGrid::Polar { mesh, .. } => {
            let mut v = Vec::new();
            for i in 1..mesh.n_rho {
                for j in 0..mesh.n_theta {
                    v.push((i, j, mesh.point(i, j)));
                }
            }
            v
        }
        GraphGrid::Cartesian { mesh, .. } => {
            let mut v = Vec::new();
            for j in 1..mesh.ny {
                for i in 1..mesh.nx {
                    v.push((i, j, mesh.point(i, j)));
                }
            }
            v
        }
    };
    let stride = (nodes.len() / max_samples.max(1)).max(1);
    for (i, j, p) in nodes.iter().step_by(stride) {
        let (ux, uy) = pair
            .primal
            .chart_gradient(&pair.v, *i, *j)
            .ok_or_else(|| GraphError::Invalid("gradient unavailable".into()))?;
        let l1 = spec.chart.lambda1.value(p.0, p.1)?;
        let l2 = spec.chart.lambda2.value(p.0, p.1)?;
        let mu = spec.mu.value(p.0, p.1)?;
        let alpha = ux / l1 - pair.primal_model.a.value(p.0, p.1)?;
        let beta = uy / l2 - pair.primal_model.b.value(p.0, p.1)?;
        let d = PointwiseGraphData::from_gradient(mu, eps, alpha, beta, *p)?;
        let mu_r = if eps > 0.0 { mu } else { 1.0 / mu };
        let dir = if eps > 0.0 {
            TwinDirection::ToLorentzian
        } else {
            TwinDirection::ToRiemannian
        };
        let (ta, tb) = twin_gradient(mu_r, alpha, beta, dir)?;
        let dmu = pair.dual_spec.mu.value(p.0, p.1)?;
        let dtil = PointwiseGraphData::from_gradient(dmu, -eps, ta, tb, *p)?;
        omega_res = omega_res.max((d.omega * dtil.omega - 1.0).abs());
        nu_res = nu_res.max((dtil.nu + 1.0 / d.nu).abs());
        // conformal identity: g̃ = μ_R⁻² ν² g with ν the Riemannian-side
        // angle function
        let (nu_riem, g_riem, g_lor) = if eps > 0.0 {
            (
                d.nu,
                induced_metric_from_data(l1, l2, mu, 1.0, &d),
                induced_metric_from_data(l1, l2, dmu, -1.0, &dtil),
            )
        } else {
            (
                dtil.nu,
                induced_metric_from_data(l1, l2, dmu, 1.0, &dtil),
                induced_metric_from_data(l1, l2, mu, -1.0, &d),
            )
        };
        let factor = nu_riem * nu_riem / (mu_r * mu_r);
        for r in 0..2 {
            for c in 0..2 {
                conf_res = conf_res.max((g_lor[r][c] - factor * g_riem[r][c]).abs());
            }
        }
    }

    // grid mean curvature of the reconstructed dual graph vs the primal
    // bundle curvature
    let h_grid = mean_curvature_grid(&pair.dual_spec, &pair.dual_model, &pair.v)?;
    let mut h_err: f64 = 0.0;
    match &pair.v {
        GraphGrid::Polar { mesh, .. } => {
            for i in 1..mesh.n_rho {
                for j in 0..mesh.n_theta {
                    if let Some(hv) = h_grid[mesh.idx(i, j as isize)] {
                        let p = mesh.point(i, j);
                        let tau = spec.tau.value(p.0, p.1)?;
                        h_err = h_err.max((hv - tau).abs());
                    }
                }
            }
        }
        GraphGrid::Cartesian { mesh, .. } => {
            for j in 1..mesh.ny {
                for i in 1..mesh.nx {
                    if let Some(hv) = h_grid[mesh.idx(i, j)] {
                        let p = mesh.point(i, j);
                        let tau = spec.tau.value(p.0, p.1)?;
                        h_err = h_err.max((hv - tau).abs());
                    }
                }
            }
        }
    }

    Ok(DualityReport {
        omega_product_residual: omega_res,
        angle_function_residual: nu_res,
        conformal_residual: conf_res,
        dual_mean_curvature_error: h_err,
        curl_residual: pair.curl_residual,
        path_mismatch: pair.path_mismatch,
        h_max: pair.v.h_max(),
    })
}

/// Dualize back and report the roundtrip deviation from an additive
/// constant, `max(u₂ − u) − min(u₂ − u)`, over the shared nodes.
pub fn roundtrip_deviation(pair: &DualPair, ctl: QuadControl) -> Result<f64, GraphError> {
    let tau_primal = pair.primal_spec.tau.f.clone();
    let back = dualize(
        &pair.dual_spec,
        &pair.dual_model,
        GraphSource::Grid(pair.v.clone()),
        &tau_primal,
        &pair.v,
        ctl,
    )?;
    let u2 = back.v.values();
    let u1: Vec<f64> = match &pair.primal {
        GraphSource::Analytic(f) => match &pair.v {
            GraphGrid::Polar { mesh, .. } => {
                let mut vals = vec![f.f.eval(0.0, 0.0).map_err(GraphError::Eval)?];
                for i in 1..=mesh.n_rho {
                    for j in 0..mesh.n_theta {
                        let p = mesh.point(i, j);
                        vals.push(f.f.eval(p.0, p.1).map_err(GraphError::Eval)?);
                    }
                }
                vals
            }
            GraphGrid::Cartesian { mesh, .. } => {
                let mut vals = Vec::new();
                for j in 0..=mesh.ny {
                    for i in 0..=mesh.nx {
                        let p = mesh.point(i, j);
                        vals.push(f.f.eval(p.0, p.1).map_err(GraphError::Eval)?);
                    }
                }
                vals
            }
        },
        GraphSource::Grid(g) => g.values().to_vec(),
    };
    let diffs: Vec<f64> = u2.iter().zip(u1.iter()).map(|(a, b)| a - b).collect();
    let max = diffs.iter().cloned().fold(f64::MIN, f64::max);
    let min = diffs.iter().cloned().fold(f64::MAX, f64::min);
    Ok(max - min)
}
