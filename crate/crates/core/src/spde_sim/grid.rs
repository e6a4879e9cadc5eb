//! Node sets carrying grid densities, with quadrature and interpolation.

use nalgebra::Vector2;

use crate::geometry::sphere::Sphere;
use crate::geometry::torus::TWO_PI;
use crate::geometry::{Atlas, Point};

pub trait DensityGrid<const D: usize>: Sync {
    fn nodes(&self) -> &[Point<D>];
    /// Cell measure × partition weight × volume density (zero where unused).
    fn weights(&self) -> &[f64];
    fn interpolate(&self, values: &[f64], p: &Point<D>) -> f64;
    /// Number of charts and nodes per axis, for snapshots.
    fn shape(&self) -> (usize, usize);

    fn integrate(&self, values: &[f64]) -> f64 {
        let v: Vec<f64> = values.iter().zip(self.weights()).map(|(a, w)| a * w).collect();
        crate::numerics::pairwise_sum(&v)
    }
}

/// Cubic Lagrange weights for offsets −1, 0, 1, 2 at fraction `s ∈ [0,1)`.
pub(crate) fn cubic_weights(s: f64) -> [f64; 4] {
    [
        -s * (s - 1.0) * (s - 2.0) / 6.0,
        (s + 1.0) * (s - 1.0) * (s - 2.0) / 2.0,
        -(s + 1.0) * s * (s - 2.0) / 2.0,
        (s + 1.0) * s * (s - 1.0) / 6.0,
    ]
}

/// Uniform periodic `n × n` grid on T² (flat index `i0 + n·i1`).
#[derive(Clone, Debug)]
pub struct PeriodicGrid {
    pub n: usize,
    nodes: Vec<Point<2>>,
    weights: Vec<f64>,
}

impl PeriodicGrid {
    pub fn new(n: usize) -> Self {
        let h = TWO_PI / n as f64;
        let mut nodes = Vec::with_capacity(n * n);
        for i1 in 0..n {
            for i0 in 0..n {
                nodes.push(Point::new(0, Vector2::new(i0 as f64 * h, i1 as f64 * h)));
            }
        }
        Self { n, nodes, weights: vec![h * h; n * n] }
    }

    pub fn spacing(&self) -> f64 {
        TWO_PI / self.n as f64
    }
}

impl DensityGrid<2> for PeriodicGrid {
    fn nodes(&self) -> &[Point<2>] {
        &self.nodes
    }

    fn weights(&self) -> &[f64] {
        &self.weights
    }

    fn shape(&self) -> (usize, usize) {
        (1, self.n)
    }

    fn interpolate(&self, values: &[f64], p: &Point<2>) -> f64 {
        let n = self.n as i64;
        let h = self.spacing();
        let mut base = [0i64; 2];
        let mut w = [[0.0; 4]; 2];
        for a in 0..2 {
            let s = p.x[a] / h;
            let f = s.floor();
            base[a] = f as i64;
            w[a] = cubic_weights(s - f);
        }
        let mut acc = 0.0;
        for (b1, w1) in w[1].iter().enumerate() {
            let i1 = (base[1] + b1 as i64 - 1).rem_euclid(n) as usize;
            let mut row = 0.0;
            for (b0, w0) in w[0].iter().enumerate() {
                let i0 = (base[0] + b0 as i64 - 1).rem_euclid(n) as usize;
                row += w0 * values[i0 + self.n * i1];
            }
            acc += w1 * row;
        }
        acc
    }
}

/// Two overlapping stereographic boxes `[−L, L]²`, one per chart.
/// Interpolation uses the chart in which the point has `|z| ≤ 1`, well inside
/// its box; quadrature blends the boxes with the squared partition of unity.
#[derive(Clone, Debug)]
pub struct OversetSphereGrid {
    pub n: usize,
    pub half_width: f64,
    nodes: Vec<Point<2>>,
    weights: Vec<f64>,
}

impl OversetSphereGrid {
    pub const HALF_WIDTH: f64 = 1.8;

    pub fn new(sphere: &Sphere, n: usize) -> Self {
        let l = Self::HALF_WIDTH;
        let h = 2.0 * l / (n - 1) as f64;
        let mut nodes = Vec::with_capacity(2 * n * n);
        let mut weights = Vec::with_capacity(2 * n * n);
        for chart in 0..2 {
            for i1 in 0..n {
                for i0 in 0..n {
                    let x = Vector2::new(-l + i0 as f64 * h, -l + i1 as f64 * h);
                    let a = sphere.alpha_t::<f64>(chart, chart, &x);
                    let lam = 2.0 / (1.0 + x.norm_squared());
                    nodes.push(Point::new(chart, x));
                    weights.push(h * h * a * a * lam * lam);
                }
            }
        }
        Self { n, half_width: l, nodes, weights }
    }

    pub fn spacing(&self) -> f64 {
        2.0 * self.half_width / (self.n - 1) as f64
    }

    fn chart_value(&self, values: &[f64], chart: usize, x: &Vector2<f64>) -> f64 {
        let n = self.n as i64;
        let h = self.spacing();
        let off = chart * self.n * self.n;
        let mut base = [0i64; 2];
        let mut w = [[0.0; 4]; 2];
        for a in 0..2 {
            let s = (x[a] + self.half_width) / h;
            let f = s.floor().clamp(1.0, (n - 3) as f64);
            base[a] = f as i64;
            w[a] = cubic_weights(s - f);
        }
        let mut acc = 0.0;
        for (b1, w1) in w[1].iter().enumerate() {
            let i1 = (base[1] + b1 as i64 - 1) as usize;
            let mut row = 0.0;
            for (b0, w0) in w[0].iter().enumerate() {
                let i0 = (base[0] + b0 as i64 - 1) as usize;
                row += w0 * values[off + i0 + self.n * i1];
            }
            acc += w1 * row;
        }
        acc
    }
}

impl DensityGrid<2> for OversetSphereGrid {
    fn nodes(&self) -> &[Point<2>] {
        &self.nodes
    }

    fn weights(&self) -> &[f64] {
        &self.weights
    }

    fn shape(&self) -> (usize, usize) {
        (2, self.n)
    }

    fn interpolate(&self, values: &[f64], p: &Point<2>) -> f64 {
        if p.x.norm_squared() <= 1.0 {
            self.chart_value(values, p.chart, &p.x)
        } else {
            let other = 1 - p.chart;
            let y = p.x / p.x.norm_squared();
            self.chart_value(values, other, &y)
        }
    }
}
