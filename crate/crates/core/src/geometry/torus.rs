use std::f64::consts::PI;

use nalgebra::{SMatrix, SVector};

use super::quadrature::{QuadNode, Quadrature};
use super::{Atlas, Christoffel, Coords, Point, Real, Tensor};
use crate::error::{Error, Result};

pub const TWO_PI: f64 = 2.0 * PI;

/// Flat torus `T^D = R^D / (2π Z)^D` with a single periodic chart.
#[derive(Clone, Copy, Debug, Default)]
pub struct Torus<const D: usize>;

impl<const D: usize> Torus<D> {
    pub fn new() -> Self {
        Self
    }

    pub fn wrap(x: f64) -> f64 {
        let y = x.rem_euclid(TWO_PI);
        // rem_euclid can round up to exactly 2π for tiny negative inputs
        if y >= TWO_PI {
            0.0
        } else {
            y
        }
    }

    /// Shortest signed periodic difference `a - b` per axis.
    pub fn periodic_delta(a: &Coords<D>, b: &Coords<D>) -> Coords<D> {
        (a - b).map(|d| d - TWO_PI * (d / TWO_PI).round())
    }
}

impl<const D: usize> Atlas<D> for Torus<D> {
    fn name(&self) -> &'static str {
        match D {
            1 => "torus1",
            2 => "torus2",
            _ => "torus",
        }
    }

    fn chart_count(&self) -> usize {
        1
    }

    fn volume(&self) -> f64 {
        TWO_PI.powi(D as i32)
    }

    fn ricci_epsilon(&self) -> f64 {
        0.0
    }

    fn is_flat(&self) -> bool {
        true
    }

    fn analytic_christoffel(&self) -> bool {
        true
    }

    fn metric_t<T: Real>(&self, _chart: usize, _x: &SVector<T, D>) -> SMatrix<T, D, D> {
        SMatrix::from_fn(|i, j| T::from(if i == j { 1.0 } else { 0.0 }))
    }

    fn transition_t<T: Real>(&self, _from: usize, _to: usize, x: &SVector<T, D>) -> SVector<T, D> {
        *x
    }

    fn transition_jacobian_t<T: Real>(
        &self,
        _from: usize,
        _to: usize,
        _x: &SVector<T, D>,
    ) -> SMatrix<T, D, D> {
        self.metric_t(0, _x)
    }

    fn alpha_t<T: Real>(&self, _j: usize, _chart: usize, _x: &SVector<T, D>) -> T {
        T::from(1.0)
    }

    fn overlaps(&self, _chart: usize, _x: &Coords<D>, _to: usize) -> bool {
        true
    }

    fn normalize(&self, p: Point<D>) -> Point<D> {
        Point::new(0, p.x.map(Self::wrap))
    }

    fn christoffel_closed(&self, _p: &Point<D>) -> Option<Christoffel<D>> {
        Some([Tensor::<D>::zeros(); D])
    }

    /// Tensor-product trapezoid rule on `n_per_axis^D` periodic nodes.
    fn quadrature(&self, n_per_axis: usize) -> Result<Quadrature<D>> {
        if n_per_axis < 2 {
            return Err(Error::Construction(format!(
                "torus quadrature needs at least 2 nodes per axis, got {n_per_axis}"
            )));
        }
        let h = TWO_PI / n_per_axis as f64;
        let w = h.powi(D as i32);
        let total = n_per_axis.pow(D as u32);
        let mut nodes = Vec::with_capacity(total);
        for flat in 0..total {
            let mut rem = flat;
            let mut x = Coords::<D>::zeros();
            for a in 0..D {
                x[a] = (rem % n_per_axis) as f64 * h;
                rem /= n_per_axis;
            }
            nodes.push(QuadNode { point: Point::new(0, x), weight: w, pou: 1.0, sqrt_det: 1.0 });
        }
        Ok(Quadrature { nodes, n_per_axis, spacing: h })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wrap_stays_in_range() {
        for x in [-1e-18, -TWO_PI, 7.0, 0.0, TWO_PI] {
            let y = Torus::<2>::wrap(x);
            assert!((0.0..TWO_PI).contains(&y), "{x} -> {y}");
        }
    }

    #[test]
    fn periodic_delta_is_short() {
        let a = Coords::<2>::new(0.1, 6.2);
        let b = Coords::<2>::new(6.2, 0.1);
        let d = Torus::<2>::periodic_delta(&a, &b);
        assert!(d.norm() < 0.4);
    }
}
