//! One-dimensional quadrature: adaptive Simpson with absolute tolerance and
//! a fixed-order Gauss–Legendre rule for smooth segment integrals.

use thiserror::Error;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum QuadError {
    #[error("quadrature did not converge to tolerance {tol} (best error estimate {estimate})")]
    NoConvergence { tol: f64, estimate: f64 },
    #[error("integrand evaluation failed: {0}")]
    Integrand(String),
}

/// Quadrature control: absolute tolerance and maximum bisection depth.
#[derive(Debug, Clone, Copy)]
pub struct QuadControl {
    pub tol: f64,
    pub max_depth: u32,
}

impl Default for QuadControl {
    fn default() -> Self {
        QuadControl {
            tol: 1e-10,
            max_depth: 40,
        }
    }
}

impl QuadControl {
    pub fn with_tol(tol: f64) -> Self {
        QuadControl {
            tol,
            ..Default::default()
        }
    }
}

/// Globally adaptive Simpson on `[a, b]` to absolute tolerance: the
/// interval with the worst error estimate is bisected first, so endpoint
/// spikes are resolved without starving (or over-refining) the smooth
/// part. Refinement stops when the summed error estimate drops below the
/// tolerance or below machine precision relative to the running value.
pub fn adaptive_simpson<F>(mut f: F, a: f64, b: f64, ctl: QuadControl) -> Result<f64, QuadError>
where
    F: FnMut(f64) -> Result<f64, QuadError>,
{
    if a == b {
        return Ok(0.0);
    }
    // reversed bounds integrate with a sign
    let (a, b, sign) = if a < b { (a, b, 1.0) } else { (b, a, -1.0) };
    struct Interval {
        a: f64,
        b: f64,
        fa: f64,
        fm: f64,
        fb: f64,
        flm: f64,
        frm: f64,
        /// Richardson-corrected two-panel value
        value: f64,
        err: f64,
        depth: u32,
    }
    fn build<F>(
        f: &mut F,
        a: f64,
        b: f64,
        fa: f64,
        fm: f64,
        fb: f64,
        depth: u32,
    ) -> Result<Interval, QuadError>
    where
        F: FnMut(f64) -> Result<f64, QuadError>,
    {
        let m = 0.5 * (a + b);
        let lm = 0.5 * (a + m);
        let rm = 0.5 * (m + b);
        let flm = f(lm)?;
        let frm = f(rm)?;
        let whole = simpson(a, b, fa, fm, fb);
        let left = simpson(a, m, fa, flm, fm);
        let right = simpson(m, b, fm, frm, fb);
        let err = (left + right - whole) / 15.0;
        Ok(Interval {
            a,
            b,
            fa,
            fm,
            fb,
            flm,
            frm,
            value: left + right + err,
            err: err.abs(),
            depth,
        })
    }

    let fa = f(a)?;
    let fb = f(b)?;
    let m = 0.5 * (a + b);
    let fm = f(m)?;
    let root = build(&mut f, a, b, fa, fm, fb, ctl.max_depth)?;

    let mut heap: std::collections::BinaryHeap<(OrdF64, usize)> = Default::default();
    let mut pool: Vec<Interval> = Vec::with_capacity(64);
    let mut total_value = root.value;
    let mut total_err = root.err;
    heap.push((OrdF64(root.err), 0));
    pool.push(root);

    const MAX_INTERVALS: usize = 100_000;
    while total_err > ctl.tol.max(1e-14 * total_value.abs()) && pool.len() < MAX_INTERVALS {
        let Some((_, worst)) = heap.pop() else { break };
        let iv = &pool[worst];
        if iv.depth == 0 {
            // cannot refine further; its estimate stays in the total
            continue;
        }
        let mid = 0.5 * (iv.a + iv.b);
        if mid <= iv.a || mid >= iv.b {
            continue;
        }
        let (ia, ib, ifa, ifm, ifb, iflm, ifrm, ival, ierr, idepth) = (
            iv.a, iv.b, iv.fa, iv.fm, iv.fb, iv.flm, iv.frm, iv.value, iv.err, iv.depth,
        );
        let left = build(&mut f, ia, mid, ifa, iflm, ifm, idepth - 1)?;
        let right = build(&mut f, mid, ib, ifm, ifrm, ifb, idepth - 1)?;
        total_value += left.value + right.value - ival;
        total_err += left.err + right.err - ierr;
        pool[worst] = left;
        heap.push((OrdF64(pool[worst].err), worst));
        heap.push((OrdF64(right.err), pool.len()));
        pool.push(right);
    }
    if total_err > ctl.tol.max(1e-12 * total_value.abs()) {
        return Err(QuadError::NoConvergence {
            tol: ctl.tol,
            estimate: total_err,
        });
    }
    Ok(sign * total_value)
}

#[derive(PartialEq)]
struct OrdF64(f64);

impl Eq for OrdF64 {}

impl PartialOrd for OrdF64 {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for OrdF64 {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.0.total_cmp(&other.0)
    }
}

fn simpson(a: f64, b: f64, fa: f64, fm: f64, fb: f64) -> f64 {
    (b - a) / 6.0 * (fa + 4.0 * fm + fb)
}

/// Nodes and weights of the 8-point Gauss–Legendre rule on `[-1, 1]`.
pub const GL8: [(f64, f64); 8] = [
    (-0.960_289_856_497_536_2, 0.101_228_536_290_376_26),
    (-0.796_666_477_413_626_7, 0.222_381_034_453_374_47),
    (-0.525_532_409_916_329_0, 0.313_706_645_877_887_2),
    (-0.183_434_642_495_649_8, 0.362_683_783_378_362_0),
    (0.183_434_642_495_649_8, 0.362_683_783_378_362_0),
    (0.525_532_409_916_329_0, 0.313_706_645_877_887_2),
    (0.796_666_477_413_626_7, 0.222_381_034_453_374_47),
    (0.960_289_856_497_536_2, 0.101_228_536_290_376_26),
];

/// Fixed 8-point Gauss–Legendre integral over `[a, b]`.
pub fn gl8<F>(mut f: F, a: f64, b: f64) -> Result<f64, QuadError>
where
    F: FnMut(f64) -> Result<f64, QuadError>,
{
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let mut acc = 0.0;
    for (node, weight) in GL8 {
        acc += weight * f(c + h * node)?;
    }
    Ok(acc * h)
}

/// Composite GL8 with `n` panels; effectively exact for smooth integrands
/// once the panel count resolves the integrand's scale.
pub fn gl8_composite<F>(mut f: F, a: f64, b: f64, n: usize) -> Result<f64, QuadError>
where
    F: FnMut(f64) -> Result<f64, QuadError>,
{
    let n = n.max(1);
    let h = (b - a) / n as f64;
    let mut acc = 0.0;
    for k in 0..n {
        acc += gl8(&mut f, a + k as f64 * h, a + (k + 1) as f64 * h)?;
    }
    Ok(acc)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn simpson_polynomial_exact() {
        let v = adaptive_simpson(|s| Ok(s * s * s), 0.0, 1.0, QuadControl::default()).unwrap();
        assert!((v - 0.25).abs() < 1e-14);
    }

    #[test]
    fn simpson_smooth() {
        let v = adaptive_simpson(|s| Ok((s).exp() * (3.0 * s).sin()), 0.0, 2.0, QuadControl::default())
            .unwrap();
        // antiderivative of e^s sin(3s): e^s (sin 3s - 3 cos 3s)/10
        let anti = |s: f64| s.exp() * ((3.0 * s).sin() - 3.0 * (3.0 * s).cos()) / 10.0;
        assert!((v - (anti(2.0) - anti(0.0))).abs() < 1e-10);
    }

    #[test]
    fn gl8_degree_15_exact() {
        let v = gl8(|s| Ok(s.powi(15) + s.powi(4)), 0.0, 1.0).unwrap();
        assert!((v - (1.0 / 16.0 + 0.2)).abs() < 1e-14);
    }

    #[test]
    fn integrable_endpoint_singularity() {
        // 1/sqrt(1-s): integrable, adaptive refinement piles up at the right
        // endpoint without starving the smooth part
        let delta = 1e-6;
        let v = adaptive_simpson(
            |s| Ok(1.0 / (1.0 - s).sqrt()),
            0.0,
            1.0 - delta,
            QuadControl {
                tol: 1e-9,
                max_depth: 48,
            },
        )
        .unwrap();
        assert!((v - 2.0 * (1.0 - delta.sqrt())).abs() < 1e-8, "{v}");
    }
}
