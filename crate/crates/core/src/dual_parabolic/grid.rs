//! Spatial discretizations of the Laplace–Beltrami operator.

use nalgebra::Vector2;

use crate::geometry::sphere::Sphere;
use crate::geometry::torus::TWO_PI;
use crate::geometry::{christoffel, metric_data, Atlas, Coords, Point, Tensor};

pub trait ParabolicGrid: Sync {
    fn nodes(&self) -> &[Point<2>];
    /// Quadrature weights (partition-weighted on overlapping charts).
    fn weights(&self) -> &[f64];
    fn spacing(&self) -> f64;
    /// Nodes carrying the PDE; the others are slaved to another chart.
    fn is_active(&self, i: usize) -> bool;
    /// `(I − dt Δ) v` on active rows, the interpolation constraint elsewhere.
    fn apply_implicit(&self, dt: f64, v: &[f64], out: &mut [f64]);
    fn implicit_diag(&self, dt: f64) -> Vec<f64>;
    /// Coordinate gradient and Hessian at an active node.
    fn derivatives(&self, v: &[f64], i: usize) -> (Coords<2>, Tensor<2>);
    /// `|∇w|_h` and `|∇²w|_h` (covariant) at an active node.
    fn derivative_norms(&self, v: &[f64], i: usize) -> (f64, f64);

    fn len(&self) -> usize {
        self.nodes().len()
    }

    fn is_empty(&self) -> bool {
        self.nodes().is_empty()
    }
}

/// Second-order central differences on a uniform periodic grid of T².
#[derive(Clone, Debug)]
pub struct TorusFd {
    pub n: usize,
    nodes: Vec<Point<2>>,
    weights: Vec<f64>,
}

impl TorusFd {
    pub fn new(n: usize) -> Self {
        let h = TWO_PI / n as f64;
        let nodes = (0..n * n).map(|k| Point::new(0, Vector2::new((k % n) as f64 * h, (k / n) as f64 * h))).collect();
        Self { n, nodes, weights: vec![h * h; n * n] }
    }

    fn at(&self, i0: i64, i1: i64) -> usize {
        let n = self.n as i64;
        (i0.rem_euclid(n) + n * i1.rem_euclid(n)) as usize
    }
}

impl ParabolicGrid for TorusFd {
    fn nodes(&self) -> &[Point<2>] {
        &self.nodes
    }

    fn weights(&self) -> &[f64] {
        &self.weights
    }

    fn spacing(&self) -> f64 {
        TWO_PI / self.n as f64
    }

    fn is_active(&self, _i: usize) -> bool {
        true
    }

    fn apply_implicit(&self, dt: f64, v: &[f64], out: &mut [f64]) {
        let c = dt / self.spacing().powi(2);
        let n = self.n as i64;
        for i1 in 0..n {
            for i0 in 0..n {
                let k = self.at(i0, i1);
                let nb = v[self.at(i0 + 1, i1)] + v[self.at(i0 - 1, i1)] + v[self.at(i0, i1 + 1)] + v[self.at(i0, i1 - 1)];
                out[k] = v[k] * (1.0 + 4.0 * c) - c * nb;
            }
        }
    }

    fn implicit_diag(&self, dt: f64) -> Vec<f64> {
        vec![1.0 + 4.0 * dt / self.spacing().powi(2); self.len()]
    }

    fn derivatives(&self, v: &[f64], i: usize) -> (Coords<2>, Tensor<2>) {
        let (i0, i1) = ((i % self.n) as i64, (i / self.n) as i64);
        let h = self.spacing();
        let f = |a: i64, b: i64| v[self.at(i0 + a, i1 + b)];
        let g = Vector2::new((f(1, 0) - f(-1, 0)) / (2.0 * h), (f(0, 1) - f(0, -1)) / (2.0 * h));
        let hxx = (f(1, 0) - 2.0 * f(0, 0) + f(-1, 0)) / (h * h);
        let hyy = (f(0, 1) - 2.0 * f(0, 0) + f(0, -1)) / (h * h);
        let hxy = (f(1, 1) - f(1, -1) - f(-1, 1) + f(-1, -1)) / (4.0 * h * h);
        (g, Tensor::<2>::new(hxx, hxy, hxy, hyy))
    }

    fn derivative_norms(&self, v: &[f64], i: usize) -> (f64, f64) {
        let (g, h) = self.derivatives(v, i);
        (g.norm(), h.norm())
    }
}

/// Two stereographic boxes `[−L, L]²`. Nodes with `|z| ≤ R` carry the
/// five-point Laplace–Beltrami stencil `λ⁻²(δ_xx + δ_yy)`; the rest are set by
/// bilinear interpolation from the other chart, where they sit at `|w| < 1/R`.
/// Bilinear weights are nonnegative, so the implicit matrix stays monotone.
#[derive(Clone, Debug)]
pub struct SphereOverset {
    pub n: usize,
    pub half_width: f64,
    sphere: Sphere,
    nodes: Vec<Point<2>>,
    weights: Vec<f64>,
    lambda2: Vec<f64>,
    donors: Vec<Option<[(usize, f64); 4]>>,
}

impl SphereOverset {
    pub const HALF_WIDTH: f64 = 2.0;
    pub const ACTIVE_RADIUS: f64 = 1.25;

    pub fn new(sphere: &Sphere, n: usize) -> Self {
        let l = Self::HALF_WIDTH;
        let h = 2.0 * l / (n - 1) as f64;
        let mut nodes = Vec::with_capacity(2 * n * n);
        let mut weights = Vec::with_capacity(2 * n * n);
        let mut lambda2 = Vec::with_capacity(2 * n * n);
        for chart in 0..2 {
            for i1 in 0..n {
                for i0 in 0..n {
                    let x = Vector2::new(-l + i0 as f64 * h, -l + i1 as f64 * h);
                    let a = sphere.alpha_t::<f64>(chart, chart, &x);
                    let lam = 2.0 / (1.0 + x.norm_squared());
                    nodes.push(Point::new(chart, x));
                    weights.push(h * h * a * a * lam * lam);
                    lambda2.push(lam * lam);
                }
            }
        }
        let mut grid = Self { n, half_width: l, sphere: *sphere, nodes, weights, lambda2, donors: vec![] };
        grid.donors = (0..grid.nodes.len())
            .map(|i| {
                let p = grid.nodes[i];
                if p.x.norm() <= Self::ACTIVE_RADIUS {
                    None
                } else {
                    Some(grid.bilinear(1 - p.chart, &(p.x / p.x.norm_squared())))
                }
            })
            .collect();
        grid
    }

    fn index(&self, chart: usize, i0: usize, i1: usize) -> usize {
        chart * self.n * self.n + i0 + self.n * i1
    }

    fn bilinear(&self, chart: usize, x: &Coords<2>) -> [(usize, f64); 4] {
        let h = self.spacing();
        let s = (x + Vector2::new(self.half_width, self.half_width)) / h;
        let (f0, f1) = (s[0].floor(), s[1].floor());
        let (a, b) = (s[0] - f0, s[1] - f1);
        let (i0, i1) = (f0 as usize, f1 as usize);
        [
            (self.index(chart, i0, i1), (1.0 - a) * (1.0 - b)),
            (self.index(chart, i0 + 1, i1), a * (1.0 - b)),
            (self.index(chart, i0, i1 + 1), (1.0 - a) * b),
            (self.index(chart, i0 + 1, i1 + 1), a * b),
        ]
    }

    pub fn sphere(&self) -> &Sphere {
        &self.sphere
    }
}

impl ParabolicGrid for SphereOverset {
    fn nodes(&self) -> &[Point<2>] {
        &self.nodes
    }

    fn weights(&self) -> &[f64] {
        &self.weights
    }

    fn spacing(&self) -> f64 {
        2.0 * self.half_width / (self.n - 1) as f64
    }

    fn is_active(&self, i: usize) -> bool {
        self.donors[i].is_none()
    }

    fn apply_implicit(&self, dt: f64, v: &[f64], out: &mut [f64]) {
        let c = dt / self.spacing().powi(2);
        let n = self.n;
        for (k, o) in out.iter_mut().enumerate() {
            match &self.donors[k] {
                Some(d) => *o = v[k] - d.iter().map(|(j, w)| w * v[*j]).sum::<f64>(),
                None => {
                    let nb = v[k + 1] + v[k - 1] + v[k + n] + v[k - n];
                    let ck = c / self.lambda2[k];
                    *o = v[k] * (1.0 + 4.0 * ck) - ck * nb;
                }
            }
        }
    }

    fn implicit_diag(&self, dt: f64) -> Vec<f64> {
        let c = dt / self.spacing().powi(2);
        (0..self.len()).map(|k| if self.is_active(k) { 1.0 + 4.0 * c / self.lambda2[k] } else { 1.0 }).collect()
    }

    fn derivatives(&self, v: &[f64], k: usize) -> (Coords<2>, Tensor<2>) {
        let h = self.spacing();
        let n = self.n;
        let g = Vector2::new((v[k + 1] - v[k - 1]) / (2.0 * h), (v[k + n] - v[k - n]) / (2.0 * h));
        let hxx = (v[k + 1] - 2.0 * v[k] + v[k - 1]) / (h * h);
        let hyy = (v[k + n] - 2.0 * v[k] + v[k - n]) / (h * h);
        let hxy = (v[k + n + 1] - v[k - n + 1] - v[k + n - 1] + v[k - n - 1]) / (4.0 * h * h);
        (g, Tensor::<2>::new(hxx, hxy, hxy, hyy))
    }

    fn derivative_norms(&self, v: &[f64], k: usize) -> (f64, f64) {
        let (g, mut hess) = self.derivatives(v, k);
        let p = &self.nodes[k];
        let gamma = christoffel(&self.sphere, p).expect("grid nodes lie in their chart");
        for (kk, gk) in gamma.iter().enumerate() {
            hess -= gk * g[kk];
        }
        let md = metric_data(&self.sphere, p).expect("grid nodes lie in their chart");
        let grad2 = md.h_inv[(0, 0)] * g.norm_squared();
        let hh = md.h_inv * hess * md.h_inv;
        let hess2 = (0..2).flat_map(|i| (0..2).map(move |j| (i, j))).map(|(i, j)| hh[(i, j)] * hess[(i, j)]).sum::<f64>();
        (grad2.sqrt(), hess2.max(0.0).sqrt())
    }
}
