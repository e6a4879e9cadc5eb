//! Backward parabolic test functions for the duality argument.
//!
//! Time stepping is first order: an implicit diffusion step followed by the
//! exact solution of the pointwise reaction `v' = −bv + g` with `b, g`
//! frozen at the new time level.

pub mod grid;
pub mod solver;

#[cfg(test)]
mod tests;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::ScalarField;

pub use grid::{ParabolicGrid, SphereOverset, TorusFd};
pub use solver::{bicgstab, SolveStats};

const SOLVER_TOL: f64 = 1e-13;
const SOLVER_MAX_ITER: usize = 500;

/// `∂_t v − Δv + bv = g` on `[0, t₀]` with `v(0) = data` (Cauchy form); the
/// terminal form uses `b` and terminal value 1.
pub struct DualProblem<'a> {
    pub b: &'a dyn ScalarField<2>,
    pub g: &'a dyn ScalarField<2>,
    pub data: &'a dyn ScalarField<2>,
    pub t0: f64,
    pub dt: f64,
    /// Integrability exponent, `p > d + 2`.
    pub p: f64,
}

/// Nodal values at uniform time levels `t_k = k dt`.
#[derive(Clone, Debug)]
pub struct GridField {
    pub dt: f64,
    pub times: Vec<f64>,
    pub values: Vec<Vec<f64>>,
}

impl GridField {
    pub fn last(&self) -> &[f64] {
        self.values.last().expect("at least one time level")
    }

    pub fn horizon(&self) -> f64 {
        *self.times.last().expect("at least one time level")
    }
}

fn check_problem(problem: &DualProblem<'_>) -> Result<usize> {
    if !(problem.t0 > 0.0 && problem.dt > 0.0 && problem.dt <= problem.t0) {
        return Err(Error::Domain(format!("need 0 < dt ≤ t0, got dt = {}, t0 = {}", problem.dt, problem.t0)));
    }
    if !(problem.p > 4.0) {
        return Err(Error::Domain(format!("integrability exponent must exceed d + 2 = 4, got {}", problem.p)));
    }
    Ok((problem.t0 / problem.dt).round() as usize)
}

/// `(e^z − 1)/z`, stable near zero.
fn phi1(z: f64) -> f64 {
    if z.abs() < 1e-8 {
        1.0 + z / 2.0
    } else {
        z.exp_m1() / z
    }
}

fn march<G: ParabolicGrid + ?Sized>(
    grid: &G,
    dt: f64,
    steps: usize,
    init: Vec<f64>,
    coeffs: &dyn Fn(f64, usize) -> (f64, f64),
) -> Result<GridField> {
    let n = grid.len();
    let diag = grid.implicit_diag(dt);
    let mut v = init;
    let mut times = vec![0.0];
    let mut values = vec![v.clone()];
    let mut rhs = vec![0.0; n];
    for k in 1..=steps {
        let t = k as f64 * dt;
        for (i, r) in rhs.iter_mut().enumerate() {
            *r = if grid.is_active(i) { v[i] } else { 0.0 };
        }
        let mut x = v.clone();
        bicgstab(|a, out| grid.apply_implicit(dt, a, out), &diag, &rhs, &mut x, SOLVER_TOL, SOLVER_MAX_ITER)?;
        for (i, xi) in x.iter_mut().enumerate() {
            let (b, g) = coeffs(t, i);
            let z = -b * dt;
            *xi = z.exp() * *xi + dt * phi1(z) * g;
            if !xi.is_finite() {
                let p = grid.nodes()[i];
                return Err(Error::NonFinite { chart: p.chart, node: i, value: *xi });
            }
        }
        v = x;
        times.push(t);
        values.push(v.clone());
    }
    Ok(GridField { dt, times, values })
}

pub fn solve_cauchy<G: ParabolicGrid + ?Sized>(grid: &G, problem: &DualProblem<'_>) -> Result<GridField> {
    let steps = check_problem(problem)?;
    let init = grid.nodes().iter().map(|p| problem.data.value(0.0, p)).collect();
    let nodes = grid.nodes();
    march(grid, problem.dt, steps, init, &|t, i| (problem.b.value(t, &nodes[i]), problem.g.value(t, &nodes[i])))
}

/// `∂_tφ + Δφ + bφ = 0`, `φ(t₀) = 1`, built as `φ(t) = 1 + v(t₀ − t)` where
/// `v` solves the Cauchy problem with `b̃(s) = b(t₀ − s)`, `g = −b̃`, `v(0) = 0`.
pub fn solve_terminal<G: ParabolicGrid + ?Sized>(grid: &G, problem: &DualProblem<'_>) -> Result<GridField> {
    let steps = check_problem(problem)?;
    let nodes = grid.nodes();
    for k in 0..=steps {
        let t = k as f64 * problem.dt;
        for (i, p) in nodes.iter().enumerate() {
            let b = problem.b.value(t, p);
            if b > 0.0 {
                return Err(Error::Domain(format!("reaction coefficient must be ≤ 0, got {b} at t = {t}, node {i}")));
            }
        }
    }
    let t0 = steps as f64 * problem.dt;
    let v = march(grid, problem.dt, steps, vec![0.0; grid.len()], &|s, i| {
        let b = problem.b.value(t0 - s, &nodes[i]);
        (b, -b)
    })?;
    let values = v.values.iter().rev().map(|lvl| lvl.iter().map(|x| 1.0 + x).collect()).collect();
    Ok(GridField { dt: v.dt, times: v.times.clone(), values })
}

fn lp_space_time(dt: f64, levels: &[Vec<f64>], weights: &[f64], p: f64) -> f64 {
    let m = levels.len();
    let mut total = 0.0;
    for (k, lvl) in levels.iter().enumerate() {
        let tw = if m == 1 || k == 0 || k + 1 == m { 0.5 * dt } else { dt };
        let s: Vec<f64> = lvl.iter().zip(weights).map(|(v, w)| w * v.abs().powf(p)).collect();
        total += tw * crate::numerics::pairwise_sum(&s);
    }
    total.powf(1.0 / p)
}

/// Smallest grid on which second differences are meaningful.
pub const MIN_RESOLUTION: usize = 8;

/// `Σ_{2j+k≤2} ‖∂_t^j ∇^k w‖_{L^p([0,t₀]×M)}` with trapezoidal time weights,
/// central differences in space (covariant Hessian) and in time.
pub fn anisotropic_norm<G: ParabolicGrid + ?Sized>(grid: &G, w: &GridField, p: f64) -> Result<f64> {
    if w.values.len() < 2 {
        return Err(Error::Domain("need at least two time levels".into()));
    }
    let per_axis = (grid.len() as f64).sqrt() as usize;
    if per_axis < MIN_RESOLUTION {
        log::warn!("anisotropic norm on a {per_axis}-node axis: second differences are unreliable");
    }
    let weights = grid.weights();
    let (grads, hess): (Vec<Vec<f64>>, Vec<Vec<f64>>) = w.values.iter().map(|lvl| norms_at(grid, lvl)).unzip();
    let m = w.values.len();
    let dtw: Vec<Vec<f64>> = (0..m)
        .map(|k| {
            let (a, b, h) = if k == 0 {
                (1, 0, w.dt)
            } else if k + 1 == m {
                (k, k - 1, w.dt)
            } else {
                (k + 1, k - 1, 2.0 * w.dt)
            };
            w.values[a].iter().zip(&w.values[b]).map(|(x, y)| (x - y) / h).collect()
        })
        .collect();
    Ok(lp_space_time(w.dt, &w.values, weights, p)
        + lp_space_time(w.dt, &grads, weights, p)
        + lp_space_time(w.dt, &hess, weights, p)
        + lp_space_time(w.dt, &dtw, weights, p))
}

fn norms_at<G: ParabolicGrid + ?Sized>(grid: &G, v: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let weights = grid.weights();
    (0..grid.len())
        .map(|i| if weights[i] == 0.0 { (0.0, 0.0) } else { grid.derivative_norms(v, i) })
        .unzip()
}

/// `‖b‖_{L^p([0,t₀]×M)}` from nodal samples at the time levels of `field`.
pub fn lp_norm_of<G: ParabolicGrid + ?Sized>(grid: &G, b: &dyn ScalarField<2>, dt: f64, levels: usize, p: f64) -> f64 {
    let samples: Vec<Vec<f64>> =
        (0..levels).map(|k| grid.nodes().iter().map(|x| b.value(k as f64 * dt, x)).collect()).collect();
    lp_space_time(dt, &samples, grid.weights(), p)
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct BoundReport {
    pub t0: f64,
    pub p: f64,
    pub b_lp: f64,
    pub sup_phi: f64,
    pub sup_grad_phi: f64,
    pub min_phi: f64,
    /// `(sup|φ| + sup|∇φ|) / (1 + ‖b‖_{L^p})`.
    pub ratio: f64,
}

pub fn bound_report<G: ParabolicGrid + ?Sized>(grid: &G, phi: &GridField, b: &dyn ScalarField<2>, p: f64) -> BoundReport {
    let mut sup_phi: f64 = 0.0;
    let mut min_phi = f64::INFINITY;
    let mut sup_grad: f64 = 0.0;
    for lvl in &phi.values {
        for (i, v) in lvl.iter().enumerate() {
            sup_phi = sup_phi.max(v.abs());
            min_phi = min_phi.min(*v);
            if grid.is_active(i) && grid.weights()[i] > 0.0 {
                sup_grad = sup_grad.max(grid.derivative_norms(lvl, i).0);
            }
        }
    }
    let b_lp = lp_norm_of(grid, b, phi.dt, phi.values.len(), p);
    BoundReport {
        t0: phi.horizon(),
        p,
        b_lp,
        sup_phi,
        sup_grad_phi: sup_grad,
        min_phi,
        ratio: (sup_phi + sup_grad) / (1.0 + b_lp),
    }
}
