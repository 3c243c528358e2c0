//! Sparse linear algebra for the Newton systems: CSR storage, BiCGStab
//! with a ring-block preconditioner tailored to the polar unknown layout.

use thiserror::Error;

#[derive(Debug, Clone, Error)]
pub enum LinSolveError {
    #[error("linear solver stalled: residual {residual} after {iters} iterations")]
    Stalled { residual: f64, iters: usize },
    #[error("matrix assembly produced a singular diagonal at row {0}")]
    SingularDiagonal(usize),
}

/// Compressed sparse row matrix.
#[derive(Debug, Clone)]
pub struct Csr {
    pub n: usize,
    pub row_ptr: Vec<usize>,
    pub cols: Vec<usize>,
    pub vals: Vec<f64>,
}

impl Csr {
    /// Build from per-row entry lists; duplicate columns are summed.
    pub fn from_rows(rows: Vec<Vec<(usize, f64)>>) -> Csr {
        let n = rows.len();
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        row_ptr.push(0);
        for mut row in rows {
            row.sort_by_key(|e| e.0);
            let mut k = 0;
            while k < row.len() {
                let col = row[k].0;
                let mut acc = 0.0;
                while k < row.len() && row[k].0 == col {
                    acc += row[k].1;
                    k += 1;
                }
                cols.push(col);
                vals.push(acc);
            }
            row_ptr.push(cols.len());
        }
        Csr {
            n,
            row_ptr,
            cols,
            vals,
        }
    }

    pub fn matvec(&self, x: &[f64], out: &mut [f64]) {
        for i in 0..self.n {
            let mut acc = 0.0;
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                acc += self.vals[k] * x[self.cols[k]];
            }
            out[i] = acc;
        }
    }
}

/// The polar unknown layout: one center unknown, then rings of `m` nodes.
#[derive(Debug, Clone, Copy)]
pub struct RingLayout {
    pub rings: usize,
    pub ring_len: usize,
}

impl RingLayout {
    fn ring_of(&self, idx: usize) -> Option<(usize, usize)> {
        if idx == 0 {
            return None;
        }
        let k = idx - 1;
        Some((k / self.ring_len, k % self.ring_len))
    }
}

/// Block preconditioner: the center as a scalar, each ring as a periodic
/// tridiagonal system built from the diagonal and the same-ring angular
/// couplings. Periodic corners are handled with the Sherman–Morrison
/// correction of the Thomas algorithm.
pub struct RingPreconditioner {
    layout: RingLayout,
    center_diag: f64,
    /// per ring: (sub, diag, sup, corner_lo, corner_hi)
    rings: Vec<RingBands>,
}

struct RingBands {
    sub: Vec<f64>,
    diag: Vec<f64>,
    sup: Vec<f64>,
    /// coupling of the first node to the last (wrap)
    first_last: f64,
    /// coupling of the last node to the first (wrap)
    last_first: f64,
}

impl RingPreconditioner {
    pub fn build(a: &Csr, layout: RingLayout) -> Result<RingPreconditioner, LinSolveError> {
        let m = layout.ring_len;
        let mut center_diag = 0.0;
        let mut rings = Vec::with_capacity(layout.rings);
        for _ in 0..layout.rings {
            rings.push(RingBands {
                sub: vec![0.0; m],
                diag: vec![0.0; m],
                sup: vec![0.0; m],
                first_last: 0.0,
                last_first: 0.0,
            });
        }
        for i in 0..a.n {
            for k in a.row_ptr[i]..a.row_ptr[i + 1] {
                let j = a.cols[k];
                let v = a.vals[k];
                match (layout.ring_of(i), layout.ring_of(j)) {
                    (None, None) => center_diag += v,
                    (Some((ri, ji)), Some((rj, jj))) if ri == rj => {
                        let band = &mut rings[ri];
                        if ji == jj {
                            band.diag[ji] += v;
                        } else if jj == (ji + 1) % m {
                            if ji == m - 1 {
                                band.last_first += v;
                            } else {
                                band.sup[ji] += v;
                            }
                        } else if ji == (jj + 1) % m {
                            if ji == 0 {
                                band.first_last += v;
                            } else {
                                band.sub[ji] += v;
                            }
                        }
                    }
                    _ => {}
                }
            }
        }
        if center_diag == 0.0 {
            return Err(LinSolveError::SingularDiagonal(0));
        }
        Ok(RingPreconditioner {
            layout,
            center_diag,
            rings,
        })
    }

    /// Apply `M⁻¹ r`.
    pub fn apply(&self, r: &[f64], out: &mut [f64]) {
        out[0] = r[0] / self.center_diag;
        let m = self.layout.ring_len;
        for (ring, band) in self.rings.iter().enumerate() {
            let base = 1 + ring * m;
            let rhs = &r[base..base + m];
            let sol = &mut out[base..base + m];
            solve_periodic_tridiag(band, rhs, sol);
        }
    }
}

/// Thomas algorithm with the Sherman–Morrison wrap correction.
fn solve_periodic_tridiag(band: &RingBands, rhs: &[f64], out: &mut [f64]) {
    let m = rhs.len();
    if m == 1 {
        out[0] = rhs[0] / band.diag[0];
        return;
    }
    let alpha = band.first_last;
    let beta = band.last_first;
    if alpha == 0.0 && beta == 0.0 {
        thomas(&band.sub, &band.diag, &band.sup, rhs, out);
        return;
    }
    // A = T + u vᵀ with u = (gamma, 0, …, beta·?), classic setup:
    // choose gamma = −diag[0]; u = (gamma, 0, …, beta), v = (1, 0, …, alpha/gamma)
    let gamma = -band.diag[0];
    let mut diag_mod = band.diag.to_vec();
    diag_mod[0] -= gamma;
    diag_mod[m - 1] -= alpha * beta / gamma;
    let mut y = vec![0.0; m];
    thomas(&band.sub, &diag_mod, &band.sup, rhs, &mut y);
    let mut u = vec![0.0; m];
    u[0] = gamma;
    u[m - 1] = beta;
    let mut z = vec![0.0; m];
    thomas(&band.sub, &diag_mod, &band.sup, &u, &mut z);
    let vy = y[0] + alpha / gamma * y[m - 1];
    let vz = z[0] + alpha / gamma * z[m - 1];
    let factor = vy / (1.0 + vz);
    for k in 0..m {
        out[k] = y[k] - factor * z[k];
    }
}

fn thomas(sub: &[f64], diag: &[f64], sup: &[f64], rhs: &[f64], out: &mut [f64]) {
    let m = rhs.len();
    let mut c = vec![0.0; m];
    let mut d = vec![0.0; m];
    let mut denom = diag[0];
    if denom == 0.0 {
        denom = 1e-300;
    }
    c[0] = sup[0] / denom;
    d[0] = rhs[0] / denom;
    for k in 1..m {
        let mut den = diag[k] - sub[k] * c[k - 1];
        if den == 0.0 {
            den = 1e-300;
        }
        c[k] = if k + 1 < m { sup[k] / den } else { 0.0 };
        d[k] = (rhs[k] - sub[k] * d[k - 1]) / den;
    }
    out[m - 1] = d[m - 1];
    for k in (0..m - 1).rev() {
        out[k] = d[k] - c[k] * out[k + 1];
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Right-preconditioned BiCGStab.
pub fn bicgstab(
    a: &Csr,
    b: &[f64],
    x0: &[f64],
    precond: &RingPreconditioner,
    rtol: f64,
    max_iters: usize,
) -> Result<Vec<f64>, LinSolveError> {
    let n = a.n;
    let mut x = x0.to_vec();
    let mut r = vec![0.0; n];
    a.matvec(&x, &mut r);
    for i in 0..n {
        r[i] = b[i] - r[i];
    }
    let b_norm = norm(b).max(1e-300);
    if norm(&r) <= rtol * b_norm {
        return Ok(x);
    }
    let r_hat = r.clone();
    let mut rho = 1.0;
    let mut alpha = 1.0;
    let mut omega = 1.0;
    let mut v = vec![0.0; n];
    let mut p = vec![0.0; n];
    let mut y = vec![0.0; n];
    let mut z = vec![0.0; n];
    let mut s = vec![0.0; n];
    let mut t = vec![0.0; n];
    let mut best = (norm(&r), x.clone());
    for it in 0..max_iters {
        let rho_new = dot(&r_hat, &r);
        if rho_new.abs() < 1e-300 {
            break;
        }
        let beta = (rho_new / rho) * (alpha / omega);
        rho = rho_new;
        for i in 0..n {
            p[i] = r[i] + beta * (p[i] - omega * v[i]);
        }
        precond.apply(&p, &mut y);
        a.matvec(&y, &mut v);
        let denom = dot(&r_hat, &v);
        if denom.abs() < 1e-300 {
            break;
        }
        alpha = rho / denom;
        for i in 0..n {
            s[i] = r[i] - alpha * v[i];
        }
        if norm(&s) <= rtol * b_norm {
            for i in 0..n {
                x[i] += alpha * y[i];
            }
            return Ok(x);
        }
        precond.apply(&s, &mut z);
        a.matvec(&z, &mut t);
        let tt = dot(&t, &t);
        if tt.abs() < 1e-300 {
            break;
        }
        omega = dot(&t, &s) / tt;
        for i in 0..n {
            x[i] += alpha * y[i] + omega * z[i];
            r[i] = s[i] - omega * t[i];
        }
        let rn = norm(&r);
        if rn < best.0 {
            best = (rn, x.clone());
        }
        if rn <= rtol * b_norm {
            return Ok(x);
        }
        if omega.abs() < 1e-300 {
            break;
        }
        let _ = it;
    }
    // stalled: accept the best iterate only if it is close
    if best.0 <= 1e3 * rtol * b_norm {
        return Ok(best.1);
    }
    Err(LinSolveError::Stalled {
        residual: best.0 / b_norm,
        iters: max_iters,
    })
}
