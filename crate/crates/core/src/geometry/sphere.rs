use nalgebra::{SMatrix, SVector, Vector3};
use rand::Rng;
use rand_distr::StandardNormal;

use super::quadrature::{QuadNode, Quadrature};
use super::{Atlas, Christoffel, Coords, Point, Real, Tensor};
use crate::error::{Error, Result};
use crate::noise_frames::bump;

pub const NORTH: usize = 0;
pub const SOUTH: usize = 1;

/// Unit round sphere with two stereographic charts.
///
/// Chart 0 projects from the south pole (`z = 0` is the north pole), chart 1
/// from the north pole. The transition is the inversion `w = z / |z|²`.
#[derive(Clone, Copy, Debug)]
pub struct Sphere {
    pub safe_radius: f64,
    pub hysteresis: f64,
}

impl Default for Sphere {
    fn default() -> Self {
        Self { safe_radius: 2.0, hysteresis: 0.1 }
    }
}

/// Chart radius beyond which the partition weight of that chart vanishes.
pub fn support_radius() -> f64 {
    // x3 = (1 - r²)/(1 + r²) = -BAND
    ((1.0 + bump::BAND) / (1.0 - bump::BAND)).sqrt()
}

impl Sphere {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_safe_radius(safe_radius: f64, hysteresis: f64) -> Self {
        Self { safe_radius, hysteresis }
    }

    fn sign(chart: usize) -> f64 {
        if chart == NORTH {
            1.0
        } else {
            -1.0
        }
    }

    /// Ambient position in R³ of chart coordinates.
    pub fn embed_t<T: Real>(chart: usize, z: &SVector<T, 2>) -> [T; 3] {
        let r2 = z[0] * z[0] + z[1] * z[1];
        let inv = (r2 + 1.0).recip();
        [
            z[0] * 2.0 * inv,
            z[1] * 2.0 * inv,
            (-r2 + 1.0) * inv * Self::sign(chart),
        ]
    }

    pub fn embed(p: &Point<2>) -> Vector3<f64> {
        let x = Self::embed_t(p.chart, &p.x);
        Vector3::new(x[0], x[1], x[2])
    }

    /// Height `x3` only, used by the partition weights.
    pub fn height_t<T: Real>(chart: usize, z: &SVector<T, 2>) -> T {
        let r2 = z[0] * z[0] + z[1] * z[1];
        (-r2 + 1.0) / (r2 + 1.0) * Self::sign(chart)
    }

    /// Chart point of a unit ambient vector, preferring the chart in whose
    /// closed hemisphere it lies.
    pub fn from_ambient(x: &Vector3<f64>) -> Point<2> {
        if x[2] >= 0.0 {
            Point::new(NORTH, Coords::<2>::new(x[0], x[1]) / (1.0 + x[2]))
        } else {
            Point::new(SOUTH, Coords::<2>::new(x[0], x[1]) / (1.0 - x[2]))
        }
    }

    /// Embedding Jacobian `∂x_a/∂z_i` (3×2).
    pub fn embed_jacobian(p: &Point<2>) -> SMatrix<f64, 3, 2> {
        let z = p.x;
        let s = 1.0 + z.norm_squared();
        let sg = Self::sign(p.chart);
        let mut j = SMatrix::<f64, 3, 2>::zeros();
        for i in 0..2 {
            for a in 0..2 {
                let d = if a == i { 1.0 } else { 0.0 };
                j[(a, i)] = 2.0 * d / s - 4.0 * z[a] * z[i] / (s * s);
            }
            j[(2, i)] = -4.0 * z[i] / (s * s) * sg;
        }
        j
    }

    /// Chart components of an ambient tangent vector at `p`.
    pub fn tangent_to_chart(p: &Point<2>, v: &Vector3<f64>) -> Coords<2> {
        let j = Self::embed_jacobian(p);
        let lambda = 2.0 / (1.0 + p.x.norm_squared());
        j.transpose() * v / (lambda * lambda)
    }

    /// Ambient vector of chart components at `p`.
    pub fn chart_to_tangent(p: &Point<2>, v: &Coords<2>) -> Vector3<f64> {
        Self::embed_jacobian(p) * v
    }

    pub fn switch_radius(&self) -> f64 {
        self.safe_radius * (1.0 + self.hysteresis)
    }

    pub fn sample_point<R: Rng + ?Sized>(rng: &mut R) -> Point<2> {
        loop {
            let v = Vector3::new(
                rng.sample::<f64, _>(StandardNormal),
                rng.sample::<f64, _>(StandardNormal),
                rng.sample::<f64, _>(StandardNormal),
            );
            let n = v.norm();
            if n > 1e-12 {
                return Self::from_ambient(&(v / n));
            }
        }
    }
}

impl Atlas<2> for Sphere {
    fn name(&self) -> &'static str {
        "sphere2"
    }

    fn chart_count(&self) -> usize {
        2
    }

    fn volume(&self) -> f64 {
        4.0 * std::f64::consts::PI
    }

    fn ricci_epsilon(&self) -> f64 {
        1.0
    }

    fn is_flat(&self) -> bool {
        false
    }

    fn analytic_christoffel(&self) -> bool {
        true
    }

    fn metric_t<T: Real>(&self, _chart: usize, x: &SVector<T, 2>) -> SMatrix<T, 2, 2> {
        let r2 = x[0] * x[0] + x[1] * x[1];
        let lam = (r2 + 1.0).recip() * 2.0;
        let l2 = lam * lam;
        let zero = T::from(0.0);
        SMatrix::<T, 2, 2>::new(l2, zero, zero, l2)
    }

    fn transition_t<T: Real>(&self, from: usize, to: usize, x: &SVector<T, 2>) -> SVector<T, 2> {
        if from == to {
            return *x;
        }
        let r2 = x[0] * x[0] + x[1] * x[1];
        let inv = r2.recip();
        SVector::<T, 2>::new(x[0] * inv, x[1] * inv)
    }

    fn transition_jacobian_t<T: Real>(
        &self,
        from: usize,
        to: usize,
        x: &SVector<T, 2>,
    ) -> SMatrix<T, 2, 2> {
        if from == to {
            return SMatrix::<T, 2, 2>::from_fn(|i, j| T::from(if i == j { 1.0 } else { 0.0 }));
        }
        let r2 = x[0] * x[0] + x[1] * x[1];
        let inv = r2.recip();
        let inv2 = inv * inv;
        SMatrix::<T, 2, 2>::from_fn(|a, b| {
            let d = if a == b { inv } else { T::from(0.0) };
            d - x[a] * x[b] * inv2 * 2.0
        })
    }

    fn alpha_t<T: Real>(&self, j: usize, chart: usize, x: &SVector<T, 2>) -> T {
        let x3 = Self::height_t(chart, x);
        if j == NORTH {
            bump::alpha_north(x3)
        } else {
            bump::alpha_south(x3)
        }
    }

    fn overlaps(&self, chart: usize, x: &Coords<2>, to: usize) -> bool {
        chart == to || x.norm_squared() > 1e-24
    }

    fn normalize(&self, p: Point<2>) -> Point<2> {
        if p.x.norm() > self.switch_radius() {
            let other = 1 - p.chart;
            Point::new(other, self.transition_t(p.chart, other, &p.x))
        } else {
            p
        }
    }

    fn christoffel_closed(&self, p: &Point<2>) -> Option<Christoffel<2>> {
        let z = p.x;
        let s = 1.0 + z.norm_squared();
        let dphi = -2.0 * z / s;
        let mut g = [Tensor::<2>::zeros(); 2];
        for (k, gk) in g.iter_mut().enumerate() {
            for i in 0..2 {
                for j in 0..2 {
                    let dik = if i == k { 1.0 } else { 0.0 };
                    let djk = if j == k { 1.0 } else { 0.0 };
                    let dij = if i == j { 1.0 } else { 0.0 };
                    gk[(i, j)] = dik * dphi[j] + djk * dphi[i] - dij * dphi[k];
                }
            }
        }
        Some(g)
    }

    /// Per-chart vertex grids on `[-R, R]²` (R the partition support radius),
    /// each node weighted by `α_j² · √|h| · cell area`.
    fn quadrature(&self, n_per_axis: usize) -> Result<Quadrature<2>> {
        if n_per_axis < 3 {
            return Err(Error::Construction(format!(
                "sphere quadrature needs at least 3 nodes per axis, got {n_per_axis}"
            )));
        }
        let r = support_radius();
        let h = 2.0 * r / (n_per_axis - 1) as f64;
        let mut nodes = Vec::new();
        let mut covered_min = f64::INFINITY;
        for chart in [NORTH, SOUTH] {
            for jy in 0..n_per_axis {
                for jx in 0..n_per_axis {
                    let x = Coords::<2>::new(-r + jx as f64 * h, -r + jy as f64 * h);
                    let a: f64 = self.alpha_t(chart, chart, &x);
                    let a2 = a * a;
                    let other: f64 = if x.norm_squared() > 0.0 {
                        self.alpha_t(1 - chart, chart, &x)
                    } else {
                        0.0
                    };
                    covered_min = covered_min.min(a.max(other));
                    if a2 == 0.0 {
                        continue;
                    }
                    let lam = 2.0 / (1.0 + x.norm_squared());
                    let sd = lam * lam;
                    nodes.push(QuadNode {
                        point: Point::new(chart, x),
                        weight: h * h * a2 * sd,
                        pou: a2,
                        sqrt_det: sd,
                    });
                }
            }
        }
        if covered_min < 1e-8 {
            return Err(Error::Construction("partition leaves a node uncovered".into()));
        }
        Ok(Quadrature { nodes, n_per_axis, spacing: h })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn embedding_lands_on_unit_sphere() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..200 {
            let p = Sphere::sample_point(&mut rng);
            assert!((Sphere::embed(&p).norm() - 1.0).abs() < 1e-14);
            let back = Sphere::from_ambient(&Sphere::embed(&p));
            assert_eq!(back.chart, p.chart);
            assert!((back.x - p.x).norm() < 1e-13);
        }
    }

    #[test]
    fn switch_moves_far_points_to_other_chart() {
        let s = Sphere::new();
        let p = Point::new(NORTH, Coords::<2>::new(3.0, 0.0));
        let q = s.normalize(p);
        assert_eq!(q.chart, SOUTH);
        assert!((Sphere::embed(&p) - Sphere::embed(&q)).norm() < 1e-14);
        let inside = Point::new(NORTH, Coords::<2>::new(2.1, 0.0));
        assert_eq!(s.normalize(inside).chart, NORTH);
    }

    #[test]
    fn support_radius_matches_band() {
        let r = support_radius();
        assert!((r - 3f64.sqrt()).abs() < 1e-15);
        assert!(r < Sphere::new().safe_radius);
    }
}
