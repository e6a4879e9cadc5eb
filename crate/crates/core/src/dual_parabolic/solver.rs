//! Jacobi-preconditioned BiCGSTAB.

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug)]
pub struct SolveStats {
    pub iterations: usize,
    pub residual: f64,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Solves `A x = rhs` starting from the contents of `x`. `apply` writes
/// `A v` into its second argument; `diag` is the diagonal of `A`.
pub fn bicgstab<F: Fn(&[f64], &mut [f64])>(
    apply: F,
    diag: &[f64],
    rhs: &[f64],
    x: &mut [f64],
    tol: f64,
    max_iter: usize,
) -> Result<SolveStats> {
    let n = rhs.len();
    let norm_b = dot(rhs, rhs).sqrt().max(f64::MIN_POSITIVE);
    let mut r = vec![0.0; n];
    apply(x, &mut r);
    for i in 0..n {
        r[i] = rhs[i] - r[i];
    }
    let mut res = dot(&r, &r).sqrt() / norm_b;
    if res <= tol {
        return Ok(SolveStats { iterations: 0, residual: res });
    }
    let r_hat = r.clone();
    let (mut rho, mut alpha, mut omega) = (1.0, 1.0, 1.0);
    let mut v = vec![0.0; n];
    let mut p = vec![0.0; n];
    let mut y = vec![0.0; n];
    let mut z = vec![0.0; n];
    let mut s = vec![0.0; n];
    let mut t = vec![0.0; n];
    for it in 1..=max_iter {
        let rho_new = dot(&r_hat, &r);
        if rho_new == 0.0 || omega == 0.0 {
            return Err(Error::Solver { iterations: it, residual: res, reason: "breakdown".into() });
        }
        let beta = rho_new / rho * alpha / omega;
        rho = rho_new;
        for i in 0..n {
            p[i] = r[i] + beta * (p[i] - omega * v[i]);
            y[i] = p[i] / diag[i];
        }
        apply(&y, &mut v);
        alpha = rho / dot(&r_hat, &v);
        for i in 0..n {
            s[i] = r[i] - alpha * v[i];
        }
        if dot(&s, &s).sqrt() / norm_b <= tol {
            for i in 0..n {
                x[i] += alpha * y[i];
            }
            return Ok(SolveStats { iterations: it, residual: dot(&s, &s).sqrt() / norm_b });
        }
        for i in 0..n {
            z[i] = s[i] / diag[i];
        }
        apply(&z, &mut t);
        omega = dot(&t, &s) / dot(&t, &t);
        for i in 0..n {
            x[i] += alpha * y[i] + omega * z[i];
            r[i] = s[i] - omega * t[i];
        }
        res = dot(&r, &r).sqrt() / norm_b;
        if !res.is_finite() {
            return Err(Error::Solver { iterations: it, residual: res, reason: "non-finite residual".into() });
        }
        if res <= tol {
            return Ok(SolveStats { iterations: it, residual: res });
        }
    }
    Err(Error::Solver { iterations: max_iter, residual: res, reason: "iteration limit".into() })
}
