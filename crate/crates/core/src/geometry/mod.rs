//! Chart-based Riemannian geometry on the built-in closed manifolds.

pub mod battery;
pub mod field;
pub mod ops;
pub mod quadrature;
pub mod sphere;
pub mod torus;

use nalgebra::{SMatrix, SVector};
use num_dual::DualNum;

use crate::error::{Error, Result};

pub use field::{ScalarField, ScalarJet, VectorField, VectorJet};
pub use quadrature::Quadrature;
pub use sphere::Sphere;
pub use torus::Torus;

/// Scalar type accepted by closed-form formulas: `f64` or a dual number
/// carrying first and second derivatives.
pub trait Real: DualNum<Primitive = f64> + Copy {}
impl<T: DualNum<Primitive = f64> + Copy> Real for T {}

pub type Coords<const D: usize> = SVector<f64, D>;
pub type Tensor<const D: usize> = SMatrix<f64, D, D>;
/// `gamma[k][(i, j)] = Γ^k_{ij}`.
pub type Christoffel<const D: usize> = [Tensor<D>; D];

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Point<const D: usize> {
    pub chart: usize,
    pub x: Coords<D>,
}

impl<const D: usize> Point<D> {
    pub fn new(chart: usize, x: Coords<D>) -> Self {
        Self { chart, x }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct MetricData<const D: usize> {
    pub h: Tensor<D>,
    pub h_inv: Tensor<D>,
    pub sqrt_det: f64,
}

impl<const D: usize> MetricData<D> {
    pub fn inner(&self, a: &Coords<D>, b: &Coords<D>) -> f64 {
        a.dot(&(self.h * b))
    }

    pub fn norm2(&self, a: &Coords<D>) -> f64 {
        self.inner(a, a)
    }
}

/// A manifold described by a finite atlas with closed-form charts.
///
/// Formula methods are generic over [`Real`] so that derivatives of any
/// composed expression can be taken exactly with dual numbers.
pub trait Atlas<const D: usize>: Sync + Send {
    fn name(&self) -> &'static str;
    fn chart_count(&self) -> usize;
    fn volume(&self) -> f64;
    /// Lower Ricci bound ε with Ric ≥ -ε² h style usage; 0 when flat.
    fn ricci_epsilon(&self) -> f64;
    fn is_flat(&self) -> bool;
    fn analytic_christoffel(&self) -> bool;

    fn in_domain(&self, p: &Point<D>) -> bool {
        p.chart < self.chart_count() && p.x.iter().all(|v| v.is_finite())
    }

    fn metric_t<T: Real>(&self, chart: usize, x: &SVector<T, D>) -> SMatrix<T, D, D>;

    /// Coordinates of the same abstract point in chart `to`.
    fn transition_t<T: Real>(&self, from: usize, to: usize, x: &SVector<T, D>) -> SVector<T, D>;

    /// `J[(a, b)] = ∂ y^a / ∂ x^b` for `y = transition(from, to, x)`.
    fn transition_jacobian_t<T: Real>(
        &self,
        from: usize,
        to: usize,
        x: &SVector<T, D>,
    ) -> SMatrix<T, D, D>;

    /// Partition weight `α_j` evaluated at a point given in `chart`.
    /// The family satisfies `Σ_j α_j² = 1`.
    fn alpha_t<T: Real>(&self, j: usize, chart: usize, x: &SVector<T, D>) -> T;

    /// Whether `x` (in `chart`) lies where chart `to` can represent it.
    fn overlaps(&self, chart: usize, x: &Coords<D>, to: usize) -> bool;

    /// Re-express a point in its preferred chart (wrapping or switching).
    fn normalize(&self, p: Point<D>) -> Point<D>;

    fn christoffel_closed(&self, p: &Point<D>) -> Option<Christoffel<D>>;

    fn quadrature(&self, n_per_axis: usize) -> Result<Quadrature<D>>;

    fn check(&self, p: &Point<D>) -> Result<()> {
        if self.in_domain(p) {
            Ok(())
        } else {
            Err(Error::Domain(format!(
                "point {:?} outside chart {} of {}",
                p.x.as_slice(),
                p.chart,
                self.name()
            )))
        }
    }
}

/// Metric, inverse metric and volume density at `p`.
pub fn metric_data<const D: usize, A: Atlas<D>>(atlas: &A, p: &Point<D>) -> Result<MetricData<D>> {
    atlas.check(p)?;
    let h: Tensor<D> = atlas.metric_t(p.chart, &p.x);
    let det = ops::det_t(&h);
    let h_inv = h.try_inverse().ok_or_else(|| {
        Error::Domain(format!("degenerate metric at {:?}", p.x.as_slice()))
    })?;
    if !(det > 0.0) {
        return Err(Error::Domain(format!("metric not positive at {:?}", p.x.as_slice())));
    }
    Ok(MetricData { h, h_inv, sqrt_det: det.sqrt() })
}

/// First derivatives of the metric, `dh[k] = ∂_k h`, taken exactly with
/// dual numbers on the closed-form metric.
pub fn metric_derivatives<const D: usize, A: Atlas<D>>(atlas: &A, p: &Point<D>) -> [Tensor<D>; D] {
    let mut out = [Tensor::<D>::zeros(); D];
    for i in 0..D {
        for j in i..D {
            let (_, g) = num_dual::gradient(
                |x: SVector<num_dual::DualVec<f64, nalgebra::Const<D>>, D>| {
                    atlas.metric_t(p.chart, &x)[(i, j)]
                },
                &p.x,
            );
            for k in 0..D {
                out[k][(i, j)] = g[k];
                out[k][(j, i)] = g[k];
            }
        }
    }
    out
}

/// Christoffel symbols of the second kind. Closed form when the atlas
/// provides one, otherwise assembled from exact metric derivatives.
pub fn christoffel<const D: usize, A: Atlas<D>>(atlas: &A, p: &Point<D>) -> Result<Christoffel<D>> {
    atlas.check(p)?;
    if let Some(g) = atlas.christoffel_closed(p) {
        return Ok(g);
    }
    let md = metric_data(atlas, p)?;
    Ok(christoffel_from_derivatives(&md.h_inv, &metric_derivatives(atlas, p)))
}

/// `Γ^k_{ij} = ½ h^{kl}(∂_i h_{jl} + ∂_j h_{il} − ∂_l h_{ij})`.
pub fn christoffel_from_derivatives<const D: usize>(
    h_inv: &Tensor<D>,
    dh: &[Tensor<D>; D],
) -> Christoffel<D> {
    let mut gamma = [Tensor::<D>::zeros(); D];
    for k in 0..D {
        for i in 0..D {
            for j in 0..D {
                let mut s = 0.0;
                for l in 0..D {
                    s += h_inv[(k, l)] * (dh[i][(j, l)] + dh[j][(i, l)] - dh[l][(i, j)]);
                }
                gamma[k][(i, j)] = 0.5 * s;
            }
        }
    }
    gamma
}

/// Re-express `p` in chart `to`.
pub fn to_chart<const D: usize, A: Atlas<D>>(atlas: &A, p: &Point<D>, to: usize) -> Point<D> {
    if p.chart == to {
        return *p;
    }
    Point::new(to, atlas.transition_t(p.chart, to, &p.x))
}

/// Push a tangent vector at `p` forward into chart `to`.
pub fn push_vector<const D: usize, A: Atlas<D>>(
    atlas: &A,
    p: &Point<D>,
    v: &Coords<D>,
    to: usize,
) -> Coords<D> {
    if p.chart == to {
        return *v;
    }
    let j: Tensor<D> = atlas.transition_jacobian_t(p.chart, to, &p.x);
    j * v
}
