//! Rotationally invariant constant-mean-curvature surfaces in warped
//! products `E(M, 0, μ)` over a rotationally symmetric base, via the dual
//! maximal graph `z = 0` in `L(M, H, 1/μ)`.
//!
//! Radial machinery: the weighted moment
//! `c(ρ) = ∫₀¹ s λ(sρ)² μ(sρ) ds` (so that the dual Calabi potential is
//! `2H c`), the causality radius `ρ_H` where `g₂ = 2Hρc/(λμ)` first reaches
//! `1`, the profile `h(ρ) = ∫₀^ρ g₁/√(1−g₂²)` with `g₁ = 2Hρc/μ²`, and the
//! classification: entire graph when `ρ_H` exhausts the base, a sphere cap
//! of finite height when `g₂` crosses `1` transversally, a cigar of
//! infinite height asymptotic to the `H`-cylinder when it touches
//! tangentially. The weighted Cheeger constant of the base is
//! `Ch = inf_ρ ρλμ / ∫₀^ρ sλ²μ ds`, and `H₀ = Ch/2` separates the entire
//! regime from the compact one.
//!
//! The translational analogue over a strip is included: the strip model
//! carries `f(x) = 2∫ H λ² μ dx` (the one-variable Calabi integral), the
//! graph `z = 0` is minimal in it, and its dual is an entire spacelike
//! translational graph.

use thiserror::Error;

use crate::expr::{EvalError, ScalarField, Var};
use crate::field::Field;
use crate::geometry::{ChartPoint, GeoError, SubmersionSpec};
use crate::graphs::{GraphError, Region};
use crate::quad::{adaptive_simpson, QuadControl, QuadError};

#[derive(Debug, Clone, Error)]
pub enum RotationalError {
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Quad(#[from] QuadError),
    #[error(transparent)]
    Geo(#[from] GeoError),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error("{0}")]
    Invalid(String),
}

type Result<T> = std::result::Result<T, RotationalError>;

/// Radial data of the warped product: `λ(ρ)`, `μ(ρ)` on `[0, R)` and the
/// constant mean curvature `H ≥ 0`.
#[derive(Debug, Clone)]
pub struct RadialData {
    pub lambda: Radial1,
    pub mu: Radial1,
    pub radius: f64,
    pub h: f64,
    quad: QuadControl,
}

/// A radial function with its first two exact derivatives; evaluated on
/// the positive axis of the chart.
#[derive(Debug, Clone)]
pub struct Radial1 {
    pub f: ScalarField,
    pub d1: ScalarField,
    pub d2: ScalarField,
}

impl Radial1 {
    pub fn new(f: ScalarField) -> Radial1 {
        let d1 = f.differentiate(Var::X);
        let d2 = d1.differentiate(Var::X);
        Radial1 { f, d1, d2 }
    }

    pub fn at(&self, rho: f64) -> std::result::Result<(f64, f64, f64), EvalError> {
        Ok((
            self.f.eval(rho, 0.0)?,
            self.d1.eval(rho, 0.0)?,
            self.d2.eval(rho, 0.0)?,
        ))
    }

    pub fn value(&self, rho: f64) -> std::result::Result<f64, EvalError> {
        self.f.eval(rho, 0.0)
    }
}

impl RadialData {
    pub fn new(lambda: ScalarField, mu: ScalarField, radius: f64, h: f64) -> Result<RadialData> {
        if h < 0.0 {
            return Err(RotationalError::Invalid(
                "the rotational machinery assumes H ≥ 0".into(),
            ));
        }
        Ok(RadialData {
            lambda: Radial1::new(lambda),
            mu: Radial1::new(mu),
            radius,
            h,
            quad: QuadControl {
                tol: 1e-12,
                max_depth: 48,
            },
        })
    }

    pub fn with_h(&self, h: f64) -> RadialData {
        RadialData {
            lambda: self.lambda.clone(),
            mu: self.mu.clone(),
            radius: self.radius,
            h,
            quad: self.quad,
        }
    }

    fn q(&self, rho: f64) -> Result<f64> {
        // q = λ²μ, the integrand weight of c
        let l = self.lambda.value(rho)?;
        let m = self.mu.value(rho)?;
        Ok(l * l * m)
    }

    fn q_prime(&self, rho: f64) -> Result<f64> {
        let (l, l1, _) = self.lambda.at(rho)?;
        let (m, m1, _) = self.mu.at(rho)?;
        Ok(2.0 * l * l1 * m + l * l * m1)
    }
}

/// `c(ρ) = ∫₀¹ s λ(sρ)² μ(sρ) ds`, with `c(0) = λ(0)²μ(0)/2` by
/// continuity.
pub fn radial_c(data: &RadialData, rho: f64) -> Result<f64> {
    if rho == 0.0 {
        return Ok(data.q(0.0)? / 2.0);
    }
    let f = |s: f64| {
        data.q(s * rho)
            .map(|q| s * q)
            .map_err(|e| QuadError::Integrand(e.to_string()))
    };
    Ok(adaptive_simpson(f, 0.0, 1.0, data.quad)?)
}

/// Alternative weight of the radial moment, kept for investigation only:
/// the production integrand is `λ²μ` (it matches the dual Calabi potential
/// and the chart area form, and satisfies `(1/ρ) d(ρ²c)/dρ = λ²μ`); the
/// `λμ²` weight does not satisfy that identity and is not a supported
/// mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MomentWeight {
    LambdaSqMu,
    LambdaMuSq,
}

/// `c`-type moment with a selectable integrand weight, for comparison
/// studies.
pub fn radial_c_variant(data: &RadialData, rho: f64, weight: MomentWeight) -> Result<f64> {
    let q = |r: f64| -> Result<f64> {
        let l = data.lambda.value(r)?;
        let m = data.mu.value(r)?;
        Ok(match weight {
            MomentWeight::LambdaSqMu => l * l * m,
            MomentWeight::LambdaMuSq => l * m * m,
        })
    };
    if rho == 0.0 {
        return Ok(q(0.0)? / 2.0);
    }
    let f = |s: f64| {
        q(s * rho)
            .map(|v| s * v)
            .map_err(|e| QuadError::Integrand(e.to_string()))
    };
    Ok(adaptive_simpson(f, 0.0, 1.0, data.quad)?)
}

/// Cumulative cache of the moment `ρ²c(ρ) = ∫₀^ρ s λ(s)²μ(s) ds` on a
/// fixed grid; scans over many radii would otherwise re-integrate from
/// zero at every sample. Off-grid values anchor at the nearest cached
/// radius below and add a short Gauss panel.
pub struct MomentCache<'a> {
    data: &'a RadialData,
    radii: Vec<f64>,
    rho2c: Vec<f64>,
}

impl<'a> MomentCache<'a> {
    /// Build over `[0, end]` with geometric panels near both ends of the
    /// range and a uniform sweep in between; metric factors may blow up at
    /// a finite domain boundary, so the tail is graded geometrically.
    pub fn build(data: &'a RadialData, end: f64, n: usize) -> Result<MomentCache<'a>> {
        let mut radii = Vec::with_capacity(n + 80);
        let mut r = end * 1e-6;
        while r < end / n as f64 {
            radii.push(r);
            r *= 2.0;
        }
        for k in 1..n {
            radii.push(end * k as f64 / n as f64);
        }
        // graded tail: halve the last gap repeatedly
        let gap = end / n as f64;
        for j in 1..=30 {
            let rj = end - gap * 0.5f64.powi(j);
            if rj > *radii.last().unwrap() {
                radii.push(rj);
            }
        }
        radii.push(end);
        let integrand = |s: f64| {
            data.q(s)
                .map(|q| s * q)
                .map_err(|e| QuadError::Integrand(e.to_string()))
        };
        let mut rho2c = Vec::with_capacity(radii.len());
        let mut acc = 0.0;
        let mut prev = 0.0;
        for &rho in &radii {
            acc += crate::quad::gl8(integrand, prev, 0.5 * (prev + rho))?;
            acc += crate::quad::gl8(integrand, 0.5 * (prev + rho), rho)?;
            rho2c.push(acc);
            prev = rho;
        }
        Ok(MomentCache { data, radii, rho2c })
    }

    pub fn c(&self, rho: f64) -> Result<f64> {
        if rho == 0.0 {
            return Ok(self.data.q(0.0)? / 2.0);
        }
        let integrand = |s: f64| {
            self.data
                .q(s)
                .map(|q| s * q)
                .map_err(|e| QuadError::Integrand(e.to_string()))
        };
        // anchor at the largest cached radius ≤ ρ
        let idx = match self
            .radii
            .binary_search_by(|r| r.partial_cmp(&rho).unwrap())
        {
            Ok(i) => i as isize,
            Err(i) => i as isize - 1,
        };
        let (anchor_r, anchor_v) = if idx < 0 {
            (0.0, 0.0)
        } else {
            (self.radii[idx as usize], self.rho2c[idx as usize])
        };
        let mut moment = anchor_v;
        if rho > anchor_r {
            moment += crate::quad::gl8(integrand, anchor_r, 0.5 * (anchor_r + rho))?;
            moment += crate::quad::gl8(integrand, 0.5 * (anchor_r + rho), rho)?;
        }
        Ok(moment / (rho * rho))
    }

    /// Pointwise radial quantities with `c` served from this cache.
    pub fn point(&self, rho: f64) -> Result<RadialPoint> {
        let c = self.c(rho)?;
        radial_point_with_c(self.data, rho, c)
    }
}

/// `c'(ρ) = (λ²μ − 2c)/ρ` from the curvature identity
/// `(1/ρ) d(ρ²c)/dρ = λ²μ`; series value at the origin.
pub fn radial_c_prime(data: &RadialData, rho: f64, c: f64) -> Result<f64> {
    if rho < 1e-7 {
        return Ok(data.q_prime(0.0)? / 3.0);
    }
    Ok((data.q(rho)? - 2.0 * c) / rho)
}

fn radial_c_second(data: &RadialData, rho: f64, _c: f64, c1: f64) -> Result<f64> {
    if rho < 1e-5 {
        // c(ρ) = q₀/2 + q'(0)ρ/3 + q''(0)ρ²/8 + …, so c''(0) = q''(0)/4
        let h = 1e-4;
        let q2 = (data.q_prime(h)? - data.q_prime(-h.min(0.0))?) / h; // one-sided is fine near 0
        let _ = q2;
        let qpp = (data.q_prime(h)? - data.q_prime(0.0)?) / h;
        return Ok(qpp / 4.0);
    }
    Ok((data.q_prime(rho)? - 3.0 * c1) / rho)
}

/// Pointwise radial quantities of the dual construction.
#[derive(Debug, Clone, Copy)]
pub struct RadialPoint {
    pub rho: f64,
    pub c: f64,
    pub g1: f64,
    pub g2: f64,
    pub g2_prime: f64,
}

pub fn radial_point(data: &RadialData, rho: f64) -> Result<RadialPoint> {
    let c = radial_c(data, rho)?;
    radial_point_with_c(data, rho, c)
}

fn radial_point_with_c(data: &RadialData, rho: f64, c: f64) -> Result<RadialPoint> {
    let c1 = radial_c_prime(data, rho, c)?;
    let (l, l1, _) = data.lambda.at(rho)?;
    let (m, m1, _) = data.mu.at(rho)?;
    let h2 = 2.0 * data.h;
    let w = rho * c;
    let w1 = c + rho * c1;
    let lm = l * m;
    let lm1 = l1 * m + l * m1;
    let g1 = h2 * w / (m * m);
    let g2 = h2 * w / lm;
    let g2_prime = h2 * (w1 * lm - w * lm1) / (lm * lm);
    Ok(RadialPoint {
        rho,
        c,
        g1,
        g2,
        g2_prime,
    })
}

fn g1_prime(data: &RadialData, rho: f64, c: f64, c1: f64) -> Result<f64> {
    let (m, m1, _) = data.mu.at(rho)?;
    let w = rho * c;
    let w1 = c + rho * c1;
    Ok(2.0 * data.h * (w1 * m - 2.0 * w * m1) / (m * m * m))
}

fn g2_second(data: &RadialData, rho: f64, c: f64, c1: f64) -> Result<f64> {
    let c2 = radial_c_second(data, rho, c, c1)?;
    let (l, l1, l2) = data.lambda.at(rho)?;
    let (m, m1, m2) = data.mu.at(rho)?;
    let w = rho * c;
    let w1 = c + rho * c1;
    let w2 = 2.0 * c1 + rho * c2;
    let d = l * m;
    let d1 = l1 * m + l * m1;
    let d2 = l2 * m + 2.0 * l1 * m1 + l * m2;
    Ok(2.0 * data.h * (w2 * d * d - w * d2 * d - 2.0 * d1 * (w1 * d - w * d1)) / (d * d * d))
}

/// How the causality radius was determined.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CausalityKind {
    /// `g₂` reaches 1 at `rho_h < R`.
    Reached,
    /// the condition holds on the whole base, `rho_h = R`.
    DomainEnd,
    /// infinite base scanned up to the horizon without violation.
    HorizonLimited,
}

#[derive(Debug, Clone, Copy)]
pub struct CausalityRadius {
    pub rho_h: f64,
    pub kind: CausalityKind,
}

/// Default scan horizon for infinite bases.
pub const DEFAULT_HORIZON: f64 = 1e4;

/// Largest `ρ_H` such that the strict spacelike condition
/// `μ − 2Hρc/λ > 0` holds on `[0, ρ_H)`: scan plus bisection, with the
/// local maxima of `g₂` refined so that tangential touches are not stepped
/// over.
pub fn causality_radius(data: &RadialData, horizon: f64) -> Result<CausalityRadius> {
    if data.h == 0.0 {
        return Ok(CausalityRadius {
            rho_h: data.radius,
            kind: if data.radius.is_finite() {
                CausalityKind::DomainEnd
            } else {
                CausalityKind::HorizonLimited
            },
        });
    }
    let finite = data.radius.is_finite();
    // stay a hair inside finite domains: metric factors may blow up at the
    // boundary and the strict condition on [0, ρ_H) is unaffected
    let end = if finite {
        data.radius * (1.0 - 1e-9)
    } else {
        horizon
    };
    let samples = 2048usize;
    // geometric refinement near 0 plus a uniform sweep
    let mut grid = Vec::with_capacity(samples + 32);
    let mut r = end * 1e-6;
    while r < end * 1e-3 {
        grid.push(r);
        r *= 2.0;
    }
    for k in 1..=samples {
        grid.push(end * k as f64 / samples as f64);
    }
    let cache = MomentCache::build(data, end, 4096)?;
    let g2_at = |rho: f64| -> Result<f64> { Ok(cache.point(rho)?.g2) };
    let g2p_at = |rho: f64| -> Result<f64> { Ok(cache.point(rho)?.g2_prime) };

    let bisect_crossing = |mut lo: f64, mut hi: f64| -> Result<f64> {
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if g2_at(mid)? < 1.0 {
                lo = mid;
            } else {
                hi = mid;
            }
            if (hi - lo) <= 4.0 * f64::EPSILON * hi.max(1e-300) {
                break;
            }
        }
        Ok(0.5 * (lo + hi))
    };

    let mut prev = 0.0f64;
    let mut prev_g2 = 0.0f64;
    let mut prev_g2p = g2p_at(grid[0])?;
    for &rho in &grid {
        let g2 = g2_at(rho)?;
        if g2 >= 1.0 {
            let rho_h = bisect_crossing(prev, rho)?;
            return Ok(CausalityRadius {
                rho_h,
                kind: CausalityKind::Reached,
            });
        }
        // refine interior maxima of g₂ so that a tangential touch between
        // two samples is not missed
        let g2p = g2p_at(rho)?;
        if prev_g2p > 0.0 && g2p <= 0.0 {
            let (mut lo, mut hi) = (prev, rho);
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if g2p_at(mid)? > 0.0 {
                    lo = mid;
                } else {
                    hi = mid;
                }
                if hi - lo <= 1e-13 * hi.max(1e-300) {
                    break;
                }
            }
            let rho_max = 0.5 * (lo + hi);
            let g2_max = g2_at(rho_max)?;
            if g2_max >= 1.0 - 1e-12 {
                let rho_h = if g2_max > 1.0 {
                    bisect_crossing(prev, rho_max)?
                } else {
                    rho_max
                };
                return Ok(CausalityRadius {
                    rho_h,
                    kind: CausalityKind::Reached,
                });
            }
        }
        prev = rho;
        prev_g2 = g2;
        prev_g2p = g2p;
    }
    let _ = prev_g2;
    Ok(CausalityRadius {
        rho_h: if finite { data.radius } else { horizon },
        kind: if finite {
            CausalityKind::DomainEnd
        } else {
            CausalityKind::HorizonLimited
        },
    })
}

/// Profile height `h(ρ) = ∫₀^ρ g₁(r)/√(1−g₂(r)²) dr`, with the endpoint
/// square-root singularity handled by an integration by parts against
/// `arcsin(g₂)`: on the tail `∫ φ dA = φA − ∫ φ' A` with `φ = g₁/g₂'`,
/// valid while `g₂'` stays away from zero.
pub fn profile_h(data: &RadialData, rho: f64) -> Result<f64> {
    if data.h == 0.0 || rho == 0.0 {
        return Ok(0.0);
    }
    let cache = MomentCache::build(data, rho, 4096)?;
    let integrand = |r: f64| -> std::result::Result<f64, QuadError> {
        let p = cache.point(r).map_err(|e| QuadError::Integrand(e.to_string()))?;
        let w2 = 1.0 - p.g2 * p.g2;
        if w2 <= 0.0 {
            return Err(QuadError::Integrand(format!(
                "causality violated inside the profile integral at ρ = {r}"
            )));
        }
        Ok(p.g1 / w2.sqrt())
    };
    // find the largest split point with g₂ ≤ 0.9 (sampled); the tail is
    // integrated by parts only when g₂' stays bounded away from zero on it
    // (near a cigar rim g₂' → 0 and φ = g₁/g₂' blows up)
    let n_scan = 512;
    let mut r_split = rho;
    let mut tail_g2p_min = f64::INFINITY;
    let mut tail_g2p_max = 0.0f64;
    for k in (1..=n_scan).rev() {
        let r = rho * k as f64 / n_scan as f64;
        let p = cache.point(r)?;
        if p.g2 <= 0.9 {
            r_split = r;
            break;
        }
        tail_g2p_min = tail_g2p_min.min(p.g2_prime);
        tail_g2p_max = tail_g2p_max.max(p.g2_prime.abs());
    }
    let end_g2p = cache.point(rho)?.g2_prime;
    tail_g2p_min = tail_g2p_min.min(end_g2p);
    let tail_ok = tail_g2p_min > 1e-3 * tail_g2p_max.max(1e-300) && tail_g2p_min > 0.0;
    if r_split >= rho * (1.0 - 1e-12) || !tail_ok {
        // no singular tail (or g₂' vanishes inside it): direct adaptive
        // quadrature; tolerate the root singularity by depth
        // try full precision first; near a tangential rim the integrand
        // inherits amplified noise from the inner c-quadratures and only a
        // 1e-6 absolute target is honest (sphere heights take the
        // high-precision integration by parts below instead)
        let tight = QuadControl {
            tol: 1e-10,
            max_depth: 52,
        };
        if let Ok(v) = adaptive_simpson(integrand, 0.0, rho, tight) {
            return Ok(v);
        }
        let loose = QuadControl {
            tol: 1e-6,
            max_depth: 52,
        };
        return Ok(adaptive_simpson(integrand, 0.0, rho, loose)?);
    }
    let head = adaptive_simpson(integrand, 0.0, r_split, data.quad)?;
    // tail by parts
    let phi = |r: f64| -> Result<(f64, f64)> {
        let p = cache.point(r)?;
        let c1 = radial_c_prime(data, r, p.c)?;
        let g1p = g1_prime(data, r, p.c, c1)?;
        let g2pp = g2_second(data, r, p.c, c1)?;
        let phi = p.g1 / p.g2_prime;
        let phi_prime = (g1p * p.g2_prime - p.g1 * g2pp) / (p.g2_prime * p.g2_prime);
        Ok((phi, phi_prime))
    };
    let asin_g2 = |r: f64| -> Result<f64> {
        let p = cache.point(r)?;
        Ok(p.g2.clamp(-1.0, 1.0).asin())
    };
    let (phi_hi, _) = phi(rho)?;
    let (phi_lo, _) = phi(r_split)?;
    let boundary = phi_hi * asin_g2(rho)? - phi_lo * asin_g2(r_split)?;
    let tail_ctl = QuadControl {
        tol: 1e-10,
        max_depth: 48,
    };
    let tail_int = adaptive_simpson(
        |r| {
            let (_, phi_p) = phi(r).map_err(|e| QuadError::Integrand(e.to_string()))?;
            let a = asin_g2(r).map_err(|e| QuadError::Integrand(e.to_string()))?;
            Ok(phi_p * a)
        },
        r_split,
        rho,
        tail_ctl,
    )?;
    Ok(head + boundary - tail_int)
}

/// Tolerance on `|g₂'(ρ_H)|` separating sphere caps from cigars.
pub const TOL_CIGAR: f64 = 1e-6;

/// Rotational classification of the dual `H`-graph.
#[derive(Debug, Clone, PartialEq)]
pub enum Classification {
    EntireGraph { horizon_limited: bool },
    HSphere { rho_h: f64, half_height: f64 },
    HCigar { rho_h: f64 },
}

/// Full radial profile with the classification.
#[derive(Debug, Clone)]
pub struct RotationalProfile {
    pub rho_samples: Vec<f64>,
    pub c: Vec<f64>,
    pub g1: Vec<f64>,
    pub g2: Vec<f64>,
    pub h_profile: Vec<f64>,
    pub rho_h: f64,
    pub causality: CausalityKind,
    pub g2_prime_at_rho_h: Option<f64>,
    pub classification: Classification,
}

/// Classify the rotational `H`-surface: entire graph, sphere cap (with the
/// reflection giving an embedded sphere) or cigar.
pub fn classify(data: &RadialData, horizon: f64) -> Result<Classification> {
    let cr = causality_radius(data, horizon)?;
    match cr.kind {
        CausalityKind::DomainEnd => Ok(Classification::EntireGraph {
            horizon_limited: false,
        }),
        CausalityKind::HorizonLimited => Ok(Classification::EntireGraph {
            horizon_limited: !data.radius.is_finite(),
        }),
        CausalityKind::Reached => {
            let p = radial_point(data, cr.rho_h)?;
            if p.g2_prime.abs() <= TOL_CIGAR {
                Ok(Classification::HCigar { rho_h: cr.rho_h })
            } else {
                let half_height = profile_h(data, cr.rho_h)?;
                Ok(Classification::HSphere {
                    rho_h: cr.rho_h,
                    half_height,
                })
            }
        }
    }
}

/// Sampled profile for export.
pub fn rotational_profile(data: &RadialData, horizon: f64, n: usize) -> Result<RotationalProfile> {
    let cr = causality_radius(data, horizon)?;
    let classification = classify(data, horizon)?;
    let end = match cr.kind {
        CausalityKind::Reached => cr.rho_h,
        _ => cr.rho_h.min(horizon),
    };
    let n = n.max(8);
    let mut rho_samples = Vec::with_capacity(n);
    let mut c = Vec::with_capacity(n);
    let mut g1 = Vec::with_capacity(n);
    let mut g2 = Vec::with_capacity(n);
    let mut h_profile = Vec::with_capacity(n);
    for k in 0..n {
        // stay strictly inside the causality radius; h diverges at the rim
        // in the cigar case
        let frac = k as f64 / (n - 1) as f64;
        let rho = end * frac.min(1.0 - 1e-9);
        let p = radial_point(data, rho)?;
        rho_samples.push(rho);
        c.push(p.c);
        g1.push(p.g1);
        g2.push(p.g2);
        h_profile.push(profile_h(data, rho)?);
    }
    let g2_prime_at_rho_h = match cr.kind {
        CausalityKind::Reached => Some(radial_point(data, cr.rho_h)?.g2_prime),
        _ => None,
    };
    Ok(RotationalProfile {
        rho_samples,
        c,
        g1,
        g2,
        h_profile,
        rho_h: cr.rho_h,
        causality: cr.kind,
        g2_prime_at_rho_h,
        classification,
    })
}

/// Mean curvature of the vertical cylinder over the circle of radius `ρ`:
/// `2H_Γ = (λμ)'(ρ)/(λ(ρ)²μ(ρ)) + 1/(ρ λ(ρ))`.
pub fn cylinder_mean_curvature(data: &RadialData, rho: f64) -> Result<f64> {
    let (l, l1, _) = data.lambda.at(rho)?;
    let (m, m1, _) = data.mu.at(rho)?;
    let lm1 = l1 * m + l * m1;
    Ok(0.5 * (lm1 / (l * l * m) + 1.0 / (rho * l)))
}

/// Estimate of the weighted Cheeger constant
/// `Ch(M, μ) = inf_ρ ρλμ / ∫₀^ρ sλ²μ ds` over round disks.
#[derive(Debug, Clone, Copy)]
pub struct CheegerEstimate {
    pub value: f64,
    pub minimizing_rho: f64,
    /// the infimum is attained in the limit `ρ → R` (or the horizon).
    pub at_boundary: bool,
}

/// The isoperimetric ratio of the disk `D_ρ`: `ρλμ/∫₀^ρ sλ²μ ds`.
pub fn cheeger_disk_ratio(data: &RadialData, rho: f64) -> Result<f64> {
    let c = radial_c(data, rho)?;
    let l = data.lambda.value(rho)?;
    let m = data.mu.value(rho)?;
    Ok(l * m / (rho * c))
}

fn cheeger_ratio_cached(data: &RadialData, cache: &MomentCache, rho: f64) -> Result<f64> {
    let c = cache.c(rho)?;
    let l = data.lambda.value(rho)?;
    let m = data.mu.value(rho)?;
    Ok(l * m / (rho * c))
}

/// Scan of the disk isoperimetric ratio on a log-spaced grid with local
/// golden-section refinement of the best sample.
pub fn cheeger_radial(data: &RadialData, horizon: f64) -> Result<CheegerEstimate> {
    let end = if data.radius.is_finite() {
        data.radius * (1.0 - 1e-9)
    } else {
        horizon
    };
    let start = end * 1e-8;
    let n = 3000usize;
    let log_lo = start.ln();
    let log_hi = end.ln();
    let cache = MomentCache::build(data, end, 8192)?;
    let mut best = (f64::INFINITY, start);
    let mut best_k = 0usize;
    for k in 0..n {
        let rho = (log_lo + (log_hi - log_lo) * k as f64 / (n - 1) as f64).exp();
        let ratio = cheeger_ratio_cached(data, &cache, rho)?;
        if ratio < best.0 {
            best = (ratio, rho);
            best_k = k;
        }
    }
    let at_boundary = best_k + 2 >= n;
    if at_boundary {
        return Ok(CheegerEstimate {
            value: best.0,
            minimizing_rho: best.1,
            at_boundary: true,
        });
    }
    // golden-section refinement in log-ρ around the best sample
    let grid_rho = |k: isize| -> f64 {
        let k = k.clamp(0, n as isize - 1) as f64;
        (log_lo + (log_hi - log_lo) * k / (n - 1) as f64).exp()
    };
    let mut a = grid_rho(best_k as isize - 1).ln();
    let mut b = grid_rho(best_k as isize + 1).ln();
    let phi = (5.0f64.sqrt() - 1.0) / 2.0;
    let mut x1 = b - phi * (b - a);
    let mut x2 = a + phi * (b - a);
    let mut f1 = cheeger_ratio_cached(data, &cache, x1.exp())?;
    let mut f2 = cheeger_ratio_cached(data, &cache, x2.exp())?;
    for _ in 0..120 {
        if f1 < f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - phi * (b - a);
            f1 = cheeger_ratio_cached(data, &cache, x1.exp())?;
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + phi * (b - a);
            f2 = cheeger_ratio_cached(data, &cache, x2.exp())?;
        }
        if (b - a).abs() < 1e-13 {
            break;
        }
    }
    let rho_min = (0.5 * (a + b)).exp();
    Ok(CheegerEstimate {
        value: cheeger_ratio_cached(data, &cache, rho_min)?,
        minimizing_rho: rho_min,
        at_boundary: false,
    })
}

/// Isoperimetric ratio `∫_∂D μ / ∫_D μ` of a regular subdomain of a
/// 2-dimensional spec; an upper bound for `Ch(M, μ)`.
pub fn cheeger_ratio(spec: &SubmersionSpec, region: &Region) -> Result<f64> {
    let perimeter = region.boundary_integrate(|p: ChartPoint, t: (f64, f64)| {
        let l1 = spec
            .chart
            .lambda1
            .value(p.0, p.1)
            .map_err(|e| QuadError::Integrand(e.to_string()))?;
        let l2 = spec
            .chart
            .lambda2
            .value(p.0, p.1)
            .map_err(|e| QuadError::Integrand(e.to_string()))?;
        let mu = spec
            .mu
            .value(p.0, p.1)
            .map_err(|e| QuadError::Integrand(e.to_string()))?;
        let stretch = (l1 * t.0).hypot(l2 * t.1);
        Ok(mu * stretch)
    })?;
    let area = region.integrate(
        |p| {
            let mu = spec
                .mu
                .value(p.0, p.1)
                .map_err(|e| QuadError::Integrand(e.to_string()))?;
            let lam = spec
                .chart
                .area_factor(p)
                .map_err(|e| QuadError::Integrand(e.to_string()))?;
            Ok(mu * lam)
        },
        1e-10,
    )?;
    if area <= 0.0 {
        return Err(RotationalError::Invalid("degenerate region".into()));
    }
    Ok(perimeter / area)
}

/// Scan for a cigar in the family `H ↦ classification`: cigars live at the
/// interior running maxima of `ψ(ρ) = 2ρc/(λμ)`, where `g₂ = Hψ` touches 1
/// tangentially for `H = 1/ψ(ρ*)`.
pub fn scan_for_cigar(data: &RadialData, horizon: f64) -> Result<Option<(f64, f64)>> {
    // ψ' has the sign of g₂' for any H > 0; scan with H = 1
    let probe = data.with_h(1.0);
    let end = if data.radius.is_finite() {
        data.radius * (1.0 - 1e-9)
    } else {
        horizon
    };
    let n = 2048usize;
    let cache = MomentCache::build(&probe, end, 4096)?;
    let mut prev_rho = end * 1e-6;
    let mut prev_sign = cache.point(prev_rho)?.g2_prime > 0.0;
    for k in 1..=n {
        let rho = end * k as f64 / n as f64;
        let sign = cache.point(rho)?.g2_prime > 0.0;
        if prev_sign && !sign {
            // bisect the maximum of ψ
            let (mut lo, mut hi) = (prev_rho, rho);
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if cache.point(mid)?.g2_prime > 0.0 {
                    lo = mid;
                } else {
                    hi = mid;
                }
                if hi - lo < 1e-14 * hi {
                    break;
                }
            }
            let rho_star = 0.5 * (lo + hi);
            let psi = cache.point(rho_star)?.g2; // g2 with H=1 is ψ
            if psi > 0.0 {
                let h_star = 1.0 / psi;
                // running-max condition: ψ < ψ(ρ*) strictly before ρ*
                let candidate = data.with_h(h_star);
                if let Classification::HCigar { rho_h } = classify(&candidate, horizon)? {
                    return Ok(Some((h_star, rho_h)));
                }
            }
        }
        prev_rho = rho;
        prev_sign = sign;
    }
    Ok(None)
}

// ---------------------------------------------------------------------------
// translational case
// ---------------------------------------------------------------------------

/// Strip-model field `f(x) = 2∫₀ˣ H λ² μ dt` with exact derivatives
/// `f' = 2Hλ²μ`; makes the bundle curvature of the strip model equal `H`.
#[derive(Debug, Clone)]
pub struct StripPotential {
    h: Radial1,
    lambda: Radial1,
    mu: Radial1,
    quad: QuadControl,
}

impl StripPotential {
    pub fn new(h: ScalarField, lambda: ScalarField, mu: ScalarField) -> StripPotential {
        StripPotential {
            h: Radial1::new(h),
            lambda: Radial1::new(lambda),
            mu: Radial1::new(mu),
            quad: QuadControl {
                tol: 1e-12,
                max_depth: 48,
            },
        }
    }

    pub fn f(&self, x: f64) -> Result<f64> {
        let integrand = |t: f64| -> std::result::Result<f64, QuadError> {
            let h = self
                .h
                .value(t)
                .map_err(|e| QuadError::Integrand(e.to_string()))?;
            let l = self
                .lambda
                .value(t)
                .map_err(|e| QuadError::Integrand(e.to_string()))?;
            let m = self
                .mu
                .value(t)
                .map_err(|e| QuadError::Integrand(e.to_string()))?;
            Ok(2.0 * h * l * l * m)
        };
        Ok(adaptive_simpson(integrand, 0.0, x, self.quad)?)
    }

    pub fn f_prime(&self, x: f64) -> Result<f64> {
        let h = self.h.value(x)?;
        let l = self.lambda.value(x)?;
        let m = self.mu.value(x)?;
        Ok(2.0 * h * l * l * m)
    }
}

/// `b = f/λ`, the connection function of the strip model, as a chart field.
#[derive(Clone)]
pub struct StripConnection {
    pot: std::sync::Arc<StripPotential>,
}

impl Field for StripConnection {
    fn value(&self, x: f64, _y: f64) -> std::result::Result<f64, EvalError> {
        let f = self.pot.f(x).map_err(|_| EvalError::NonFinite)?;
        let l = self.pot.lambda.value(x)?;
        Ok(f / l)
    }

    fn dx(&self, x: f64, _y: f64) -> std::result::Result<f64, EvalError> {
        let f = self.pot.f(x).map_err(|_| EvalError::NonFinite)?;
        let fp = self.pot.f_prime(x).map_err(|_| EvalError::NonFinite)?;
        let (l, l1, _) = self.pot.lambda.at(x)?;
        Ok((fp * l - f * l1) / (l * l))
    }

    fn dy(&self, _x: f64, _y: f64) -> std::result::Result<f64, EvalError> {
        Ok(0.0)
    }
}

/// The dual translational graph `v(x)` of `z = 0`:
/// `v' = fλ/(μ√(μ²λ² + f²))` with the data of the Lorentzian target
/// `L(M, 0, μ)`. Exactly spacelike by construction.
#[derive(Clone)]
pub struct TranslationalDual {
    pot: std::sync::Arc<StripPotential>,
    quad: QuadControl,
}

impl TranslationalDual {
    pub fn v_prime(&self, x: f64) -> Result<f64> {
        let f = self.pot.f(x)?;
        let l = self.pot.lambda.value(x)?;
        let m = self.pot.mu.value(x)?;
        Ok(f * l / (m * (m * m * l * l + f * f).sqrt()))
    }

    fn v_second(&self, x: f64) -> Result<f64> {
        let f = self.pot.f(x)?;
        let fp = self.pot.f_prime(x)?;
        let (l, l1, _) = self.pot.lambda.at(x)?;
        let (m, m1, _) = self.pot.mu.at(x)?;
        let s2 = m * m * l * l + f * f;
        let s = s2.sqrt();
        let num = f * l;
        let num_p = fp * l + f * l1;
        let den = m * s;
        let s_p = (m * m1 * l * l + m * m * l * l1 + f * fp) / s;
        let den_p = m1 * s + m * s_p;
        Ok((num_p * den - num * den_p) / (den * den))
    }
}

impl Field for TranslationalDual {
    fn value(&self, x: f64, _y: f64) -> std::result::Result<f64, EvalError> {
        let vp = |t: f64| -> std::result::Result<f64, QuadError> {
            self.v_prime(t).map_err(|e| QuadError::Integrand(e.to_string()))
        };
        adaptive_simpson(vp, 0.0, x, self.quad).map_err(|_| EvalError::NonFinite)
    }

    fn dx(&self, x: f64, _y: f64) -> std::result::Result<f64, EvalError> {
        self.v_prime(x).map_err(|_| EvalError::NonFinite)
    }

    fn dy(&self, _x: f64, _y: f64) -> std::result::Result<f64, EvalError> {
        Ok(0.0)
    }
}

/// Report of the translational construction.
#[derive(Debug, Clone)]
pub struct TranslationalReport {
    /// sup over samples of the minimality residual of `z = 0` in the strip
    /// model.
    pub minimality_residual: f64,
    /// sup of `μ̃²‖G̃v‖²` over samples; must stay strictly below 1.
    pub max_causality: f64,
    /// sup of |mean curvature of the dual graph − H| over samples.
    pub dual_mean_curvature_residual: f64,
    /// samples `(x, f, v', v)`.
    pub samples: Vec<(f64, f64, f64, f64)>,
}

/// Build the strip model of `E(M, H, 1/μ)`, confirm that `z = 0` is
/// minimal in it, and produce the dual entire spacelike translational
/// graph in `L(M, 0, μ)` with its verification data.
pub fn translational_graph(
    lambda: ScalarField,
    mu: ScalarField,
    h: ScalarField,
    width: f64,
    n_samples: usize,
) -> Result<TranslationalReport> {
    let pot = std::sync::Arc::new(StripPotential::new(h.clone(), lambda.clone(), mu.clone()));
    // the Riemannian strip model: base (λ, λ), Killing length 1/μ, bundle
    // curvature H, connection a = 0, b = f/λ
    let strip = crate::geometry::BaseChart::new(
        crate::geometry::ChartDomain::Strip {
            width,
            axis: crate::geometry::Axis::Y,
        },
        lambda.clone(),
        lambda.clone(),
    );
    let spec = SubmersionSpec::new(
        strip,
        h.clone(),
        ScalarField::one().div(&mu),
        crate::geometry::Epsilon::Riemannian,
    );
    let model = crate::geometry::AmbientModel {
        a: crate::geometry::ModelField::Symbolic(crate::field::C1Field::new(ScalarField::zero())),
        b: crate::geometry::ModelField::Custom(std::sync::Arc::new(StripConnection {
            pot: pot.clone(),
        })),
        provenance: crate::geometry::Provenance::UserSupplied,
    };

    let zero = crate::field::C2Field::new(ScalarField::zero());
    let dual = TranslationalDual {
        pot: pot.clone(),
        quad: QuadControl {
            tol: 1e-12,
            max_depth: 48,
        },
    };
    let lspec = SubmersionSpec::new(
        crate::geometry::BaseChart::new(
            crate::geometry::ChartDomain::Strip {
                width,
                axis: crate::geometry::Axis::Y,
            },
            lambda.clone(),
            lambda.clone(),
        ),
        ScalarField::zero(),
        mu.clone(),
        crate::geometry::Epsilon::Lorentzian,
    );
    let lmodel = crate::geometry::AmbientModel::trivial();

    let mut minimality: f64 = 0.0;
    let mut causality: f64 = 0.0;
    let mut dual_h_res: f64 = 0.0;
    let mut samples = Vec::with_capacity(n_samples);
    let half = 0.5 * width * 0.98;
    for k in 0..n_samples {
        let x = -half + 2.0 * half * (k as f64 + 0.5) / n_samples as f64;
        let y = 0.3 * (k as f64).sin(); // translational invariance probe
        let hm = crate::graphs::mean_curvature(&spec, &model, &zero, (x, y))?;
        minimality = minimality.max(hm.abs());
        let f = pot.f(x)?;
        let vp = dual.v_prime(x)?;
        let v = dual.value(x, 0.0)?;
        // spacelike margin of the dual graph (Killing length μ)
        let l = pot.lambda.value(x)?;
        let m = pot.mu.value(x)?;
        let alpha_t = vp / l;
        causality = causality.max(m * m * alpha_t * alpha_t);
        let hd = crate::graphs::mean_curvature(&lspec, &lmodel, &dual, (x, y))?;
        let h_here = pot.h.value(x)?;
        dual_h_res = dual_h_res.max((hd - h_here).abs());
        samples.push((x, f, vp, v));
    }
    Ok(TranslationalReport {
        minimality_residual: minimality,
        max_causality: causality,
        dual_mean_curvature_residual: dual_h_res,
        samples,
    })
}

impl crate::field::FieldC2 for TranslationalDual {
    fn dxx(&self, x: f64, _y: f64) -> std::result::Result<f64, EvalError> {
        self.v_second(x).map_err(|_| EvalError::NonFinite)
    }

    fn dxy(&self, _x: f64, _y: f64) -> std::result::Result<f64, EvalError> {
        Ok(0.0)
    }

    fn dyy(&self, _x: f64, _y: f64) -> std::result::Result<f64, EvalError> {
        Ok(0.0)
    }
}
