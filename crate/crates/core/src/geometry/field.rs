//! Scalar and vector fields given per chart, with value/derivative jets.

use nalgebra::{Const, SVector};
use num_dual::Dual2Vec;

use super::{Coords, Point, Real, Tensor};

/// Value, gradient and Hessian of a scalar in chart coordinates.
#[derive(Clone, Copy, Debug)]
pub struct ScalarJet<const D: usize> {
    pub value: f64,
    pub grad: Coords<D>,
    pub hess: Tensor<D>,
}

/// Components with their first and second partial derivatives.
/// `jac[(k, i)] = ∂_i X^k` and `hess[k][(i, j)] = ∂_i ∂_j X^k`.
#[derive(Clone, Copy, Debug)]
pub struct VectorJet<const D: usize> {
    pub value: Coords<D>,
    pub jac: Tensor<D>,
    pub hess: [Tensor<D>; D],
}

impl<const D: usize> VectorJet<D> {
    pub fn zero() -> Self {
        Self { value: Coords::zeros(), jac: Tensor::zeros(), hess: [Tensor::zeros(); D] }
    }

    pub fn scaled(&self, c: f64) -> Self {
        let mut hess = self.hess;
        for h in hess.iter_mut() {
            *h *= c;
        }
        Self { value: self.value * c, jac: self.jac * c, hess }
    }
}

pub trait ScalarField<const D: usize>: Sync {
    fn value(&self, t: f64, p: &Point<D>) -> f64;

    fn jet(&self, t: f64, p: &Point<D>) -> ScalarJet<D> {
        fd_scalar_jet(|x| self.value(t, &Point::new(p.chart, *x)), &p.x)
    }
}

pub trait VectorField<const D: usize>: Sync {
    fn value(&self, t: f64, p: &Point<D>) -> Coords<D>;

    fn jet(&self, t: f64, p: &Point<D>) -> VectorJet<D> {
        fd_vector_jet(|x| self.value(t, &Point::new(p.chart, *x)), &p.x)
    }

    /// Known divergence, when the field carries a closed form for it.
    fn divergence_hint(&self, _t: f64, _p: &Point<D>) -> Option<f64> {
        None
    }
}

/// Closed-form scalar expression in chart coordinates, generic over the
/// number type so that derivatives come from dual numbers.
pub trait ScalarFormula<const D: usize>: Sync {
    fn eval<T: Real>(&self, t: f64, chart: usize, x: &SVector<T, D>) -> T;
}

pub trait VectorFormula<const D: usize>: Sync {
    fn eval<T: Real>(&self, t: f64, chart: usize, x: &SVector<T, D>) -> SVector<T, D>;
}

/// Adapter giving exact jets to closed-form formulas.
#[derive(Clone, Copy, Debug)]
pub struct Exact<F>(pub F);

type D2<const D: usize> = Dual2Vec<f64, Const<D>>;

pub fn exact_scalar_jet<const D: usize, G>(g: G, x: &Coords<D>) -> ScalarJet<D>
where
    G: Fn(&SVector<D2<D>, D>) -> D2<D>,
{
    let (value, grad, hess) = num_dual::hessian(|v: SVector<D2<D>, D>| g(&v), x);
    ScalarJet { value, grad, hess }
}

impl<const D: usize, F: ScalarFormula<D>> ScalarField<D> for Exact<F> {
    fn value(&self, t: f64, p: &Point<D>) -> f64 {
        self.0.eval::<f64>(t, p.chart, &p.x)
    }

    fn jet(&self, t: f64, p: &Point<D>) -> ScalarJet<D> {
        exact_scalar_jet(|v| self.0.eval(t, p.chart, v), &p.x)
    }
}

impl<const D: usize, F: VectorFormula<D>> VectorField<D> for Exact<F> {
    fn value(&self, t: f64, p: &Point<D>) -> Coords<D> {
        self.0.eval::<f64>(t, p.chart, &p.x)
    }

    fn jet(&self, t: f64, p: &Point<D>) -> VectorJet<D> {
        let mut out = VectorJet::zero();
        for k in 0..D {
            let sj = exact_scalar_jet(|v| self.0.eval(t, p.chart, v)[k], &p.x);
            out.value[k] = sj.value;
            for i in 0..D {
                out.jac[(k, i)] = sj.grad[i];
            }
            out.hess[k] = sj.hess;
        }
        out
    }
}

/// Plain closures, differentiated by centered finite differences.
pub struct FnScalar<F>(pub F);
pub struct FnVector<F>(pub F);

impl<const D: usize, F: Fn(f64, &Point<D>) -> f64 + Sync> ScalarField<D> for FnScalar<F> {
    fn value(&self, t: f64, p: &Point<D>) -> f64 {
        (self.0)(t, p)
    }
}

impl<const D: usize, F: Fn(f64, &Point<D>) -> Coords<D> + Sync> VectorField<D> for FnVector<F> {
    fn value(&self, t: f64, p: &Point<D>) -> Coords<D> {
        (self.0)(t, p)
    }
}

/// Centered differences with a relative step of `1e-5` (second derivatives
/// use a wider step to balance rounding against truncation).
pub fn fd_scalar_jet<const D: usize, F: Fn(&Coords<D>) -> f64>(f: F, x: &Coords<D>) -> ScalarJet<D> {
    let f0 = f(x);
    let mut grad = Coords::<D>::zeros();
    let mut hess = Tensor::<D>::zeros();
    for i in 0..D {
        let h = crate::numerics::fd_step(x[i]);
        let mut xp = *x;
        let mut xm = *x;
        xp[i] += h;
        xm[i] -= h;
        grad[i] = (f(&xp) - f(&xm)) / (2.0 * h);
    }
    for i in 0..D {
        let hi = 1e-4 * x[i].abs().max(1.0);
        for j in i..D {
            let hj = 1e-4 * x[j].abs().max(1.0);
            let v = if i == j {
                let mut xp = *x;
                let mut xm = *x;
                xp[i] += hi;
                xm[i] -= hi;
                (f(&xp) - 2.0 * f0 + f(&xm)) / (hi * hi)
            } else {
                let e = |si: f64, sj: f64| {
                    let mut y = *x;
                    y[i] += si * hi;
                    y[j] += sj * hj;
                    f(&y)
                };
                (e(1.0, 1.0) - e(1.0, -1.0) - e(-1.0, 1.0) + e(-1.0, -1.0)) / (4.0 * hi * hj)
            };
            hess[(i, j)] = v;
            hess[(j, i)] = v;
        }
    }
    ScalarJet { value: f0, grad, hess }
}

pub fn fd_vector_jet<const D: usize, F: Fn(&Coords<D>) -> Coords<D>>(
    f: F,
    x: &Coords<D>,
) -> VectorJet<D> {
    let mut out = VectorJet::zero();
    for k in 0..D {
        let sj = fd_scalar_jet(|y| f(y)[k], x);
        out.value[k] = sj.value;
        for i in 0..D {
            out.jac[(k, i)] = sj.grad[i];
        }
        out.hess[k] = sj.hess;
    }
    out
}
