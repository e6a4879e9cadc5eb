//! Differential operators in chart coordinates.

use nalgebra::{Const, SMatrix, SVector};
use num_dual::{Dual2Vec, DualNum};

use super::field::{exact_scalar_jet, ScalarField, ScalarJet, VectorField, VectorJet};
use super::{christoffel, metric_data, to_chart, push_vector, Atlas, Coords, Point, Real};
use crate::error::Result;

pub(crate) fn det_t<T: Real, const D: usize>(m: &SMatrix<T, D, D>) -> T {
    match D {
        1 => m[(0, 0)],
        2 => m[(0, 0)] * m[(1, 1)] - m[(0, 1)] * m[(1, 0)],
        3 => {
            m[(0, 0)] * (m[(1, 1)] * m[(2, 2)] - m[(1, 2)] * m[(2, 1)])
                - m[(0, 1)] * (m[(1, 0)] * m[(2, 2)] - m[(1, 2)] * m[(2, 0)])
                + m[(0, 2)] * (m[(1, 0)] * m[(2, 1)] - m[(1, 1)] * m[(2, 0)])
        }
        _ => unimplemented!("determinant for dimension {D}"),
    }
}

/// Jet of `ln √|h|`; its gradient is the contracted Christoffel `Γ^j_{kj}`.
pub fn log_volume_jet<const D: usize, A: Atlas<D>>(atlas: &A, p: &Point<D>) -> ScalarJet<D> {
    exact_scalar_jet(
        |x: &SVector<Dual2Vec<f64, Const<D>>, D>| det_t(&atlas.metric_t(p.chart, x)).ln() * 0.5,
        &p.x,
    )
}

/// `grad f = h^{ij} ∂_j f`.
pub fn grad<const D: usize, A: Atlas<D>, F: ScalarField<D> + ?Sized>(
    atlas: &A,
    f: &F,
    t: f64,
    p: &Point<D>,
) -> Result<Coords<D>> {
    let md = metric_data(atlas, p)?;
    Ok(md.h_inv * f.jet(t, p).grad)
}

/// Divergence from a vector jet: `∂_j X^j + Γ^j_{kj} X^k`.
pub fn div_from_jet<const D: usize, A: Atlas<D>>(
    atlas: &A,
    p: &Point<D>,
    x: &VectorJet<D>,
) -> Result<f64> {
    let g = christoffel(atlas, p)?;
    let mut s = x.jac.trace();
    for k in 0..D {
        let mut c = 0.0;
        for (j, gj) in g.iter().enumerate() {
            c += gj[(k, j)];
        }
        s += c * x.value[k];
    }
    Ok(s)
}

pub fn div<const D: usize, A: Atlas<D>, X: VectorField<D> + ?Sized>(
    atlas: &A,
    x: &X,
    t: f64,
    p: &Point<D>,
) -> Result<f64> {
    div_from_jet(atlas, p, &x.jet(t, p))
}

/// Gradient (in coordinates) of `div X`, needing second derivatives of `X`.
pub fn div_gradient_from_jet<const D: usize, A: Atlas<D>>(
    atlas: &A,
    p: &Point<D>,
    x: &VectorJet<D>,
) -> Coords<D> {
    let l = log_volume_jet(atlas, p);
    let mut out = Coords::<D>::zeros();
    for i in 0..D {
        let mut s = 0.0;
        for j in 0..D {
            s += x.hess[j][(i, j)];
            s += x.jac[(j, i)] * l.grad[j] + x.value[j] * l.hess[(i, j)];
        }
        out[i] = s;
    }
    out
}

/// Laplace–Beltrami `h^{ij}(∂_{ij} f − Γ^k_{ij} ∂_k f)`.
pub fn laplace_from_jet<const D: usize, A: Atlas<D>>(
    atlas: &A,
    p: &Point<D>,
    f: &ScalarJet<D>,
) -> Result<f64> {
    let md = metric_data(atlas, p)?;
    let g = christoffel(atlas, p)?;
    let mut s = 0.0;
    for i in 0..D {
        for j in 0..D {
            let mut c = f.hess[(i, j)];
            for (k, gk) in g.iter().enumerate() {
                c -= gk[(i, j)] * f.grad[k];
            }
            s += md.h_inv[(i, j)] * c;
        }
    }
    Ok(s)
}

pub fn laplace<const D: usize, A: Atlas<D>, F: ScalarField<D> + ?Sized>(
    atlas: &A,
    f: &F,
    t: f64,
    p: &Point<D>,
) -> Result<f64> {
    laplace_from_jet(atlas, p, &f.jet(t, p))
}

/// `X(f) = X^i ∂_i f`.
pub fn directional<const D: usize>(x: &Coords<D>, f: &ScalarJet<D>) -> f64 {
    x.dot(&f.grad)
}

/// `X(X(f))` by nesting the directional derivative.
pub fn second_directional_nested<const D: usize>(x: &VectorJet<D>, f: &ScalarJet<D>) -> f64 {
    let inner_grad = x.jac.transpose() * f.grad + f.hess * x.value;
    x.value.dot(&inner_grad)
}

/// `X(X(f)) = ∇²f(X, X) + (∇_X X)(f)` with the covariant Hessian.
pub fn second_directional_covariant<const D: usize, A: Atlas<D>>(
    atlas: &A,
    p: &Point<D>,
    x: &VectorJet<D>,
    f: &ScalarJet<D>,
) -> Result<f64> {
    let g = christoffel(atlas, p)?;
    let v = x.value;
    let mut cov_hess = f.hess;
    for i in 0..D {
        for j in 0..D {
            for (k, gk) in g.iter().enumerate() {
                cov_hess[(i, j)] -= gk[(i, j)] * f.grad[k];
            }
        }
    }
    let mut nabla_xx = x.jac * v;
    for (k, gk) in g.iter().enumerate() {
        nabla_xx[k] += v.dot(&(gk * v));
    }
    Ok(v.dot(&(cov_hess * v)) + nabla_xx.dot(&f.grad))
}

/// `|f(p) − f(p')|` where `p'` is `p` expressed in chart `to`.
pub fn scalar_chart_mismatch<const D: usize, A: Atlas<D>, F: ScalarField<D> + ?Sized>(
    atlas: &A,
    f: &F,
    t: f64,
    p: &Point<D>,
    to: usize,
) -> f64 {
    let q = to_chart(atlas, p, to);
    (f.value(t, p) - f.value(t, &q)).abs()
}

/// Relative mismatch between the pushed-forward components of `X` at `p`
/// and the components given directly in chart `to`.
pub fn vector_chart_mismatch<const D: usize, A: Atlas<D>, X: VectorField<D> + ?Sized>(
    atlas: &A,
    x: &X,
    t: f64,
    p: &Point<D>,
    to: usize,
) -> f64 {
    let q = to_chart(atlas, p, to);
    let pushed = push_vector(atlas, p, &x.value(t, p), to);
    let direct = x.value(t, &q);
    (pushed - direct).norm() / direct.norm().max(pushed.norm()).max(1e-300)
}

/// `grad f` as a vector field.
pub struct Gradient<'a, A, F> {
    pub atlas: &'a A,
    pub f: &'a F,
}

impl<const D: usize, A: Atlas<D>, F: ScalarField<D>> VectorField<D> for Gradient<'_, A, F> {
    fn value(&self, t: f64, p: &Point<D>) -> Coords<D> {
        grad(self.atlas, self.f, t, p).unwrap_or_else(|_| Coords::repeat(f64::NAN))
    }
}

/// `div X` as a scalar field.
pub struct Divergence<'a, A, X> {
    pub atlas: &'a A,
    pub x: &'a X,
}

impl<const D: usize, A: Atlas<D>, X: VectorField<D>> ScalarField<D> for Divergence<'_, A, X> {
    fn value(&self, t: f64, p: &Point<D>) -> f64 {
        div(self.atlas, self.x, t, p).unwrap_or(f64::NAN)
    }

    fn jet(&self, t: f64, p: &Point<D>) -> ScalarJet<D> {
        let xj = self.x.jet(t, p);
        let value = div_from_jet(self.atlas, p, &xj).unwrap_or(f64::NAN);
        let grad = div_gradient_from_jet(self.atlas, p, &xj);
        let fd = super::field::fd_scalar_jet(
            |y| div(self.atlas, self.x, t, &Point::new(p.chart, *y)).unwrap_or(f64::NAN),
            &p.x,
        );
        ScalarJet { value, grad, hess: fd.hess }
    }
}

/// `Δ f` as a scalar field.
pub struct Laplacian<'a, A, F> {
    pub atlas: &'a A,
    pub f: &'a F,
}

impl<const D: usize, A: Atlas<D>, F: ScalarField<D>> ScalarField<D> for Laplacian<'_, A, F> {
    fn value(&self, t: f64, p: &Point<D>) -> f64 {
        laplace(self.atlas, self.f, t, p).unwrap_or(f64::NAN)
    }
}
