//! Closed-form test functions and vector fields on the built-in manifolds.

use nalgebra::{Matrix3, SMatrix, SVector, Vector3};

use super::field::{ScalarFormula, VectorFormula};
use super::sphere::Sphere;
use super::Real;

/// Scalar function of the ambient position in R³, restricted to S².
pub trait AmbientScalar: Sync {
    fn eval<T: Real>(&self, x: &[T; 3]) -> T;
}

/// Ambient vector field in R³; its tangential part is used on S².
pub trait AmbientVector: Sync {
    fn eval<T: Real>(&self, x: &[T; 3]) -> [T; 3];
}

/// Restriction of an ambient scalar to the sphere charts.
#[derive(Clone, Copy, Debug)]
pub struct OnSphere<F>(pub F);

impl<F: AmbientScalar> ScalarFormula<2> for OnSphere<F> {
    fn eval<T: Real>(&self, _t: f64, chart: usize, z: &SVector<T, 2>) -> T {
        self.0.eval(&Sphere::embed_t(chart, z))
    }
}

/// Chart components of the tangential projection of an ambient field.
#[derive(Clone, Copy, Debug)]
pub struct TangentOnSphere<F>(pub F);

/// Chart components `Jᵀ P v / λ²` of an ambient vector `v` at `z`, with
/// `P` the tangential projection.
pub fn ambient_to_chart_t<T: Real>(chart: usize, z: &SVector<T, 2>, v: &[T; 3]) -> SVector<T, 2> {
    let r2 = z[0] * z[0] + z[1] * z[1];
    let s = r2 + 1.0;
    let s2 = s * s;
    let sg = if chart == 0 { 1.0 } else { -1.0 };
    // (1/λ²) Jᵀ v with λ = 2/s; Jᵀ annihilates the normal part.
    let scale = s2 * 0.25;
    let mut out = SVector::<T, 2>::from_element(T::from(0.0));
    for i in 0..2 {
        let mut acc = v[2] * (z[i] * (-4.0) / s2) * sg;
        for a in 0..2 {
            let d = if a == i { s.recip() * 2.0 } else { T::from(0.0) };
            acc += v[a] * (d - z[a] * z[i] * 4.0 / s2);
        }
        out[i] = acc * scale;
    }
    out
}

impl<F: AmbientVector> VectorFormula<2> for TangentOnSphere<F> {
    fn eval<T: Real>(&self, _t: f64, chart: usize, z: &SVector<T, 2>) -> SVector<T, 2> {
        let x = Sphere::embed_t(chart, z);
        ambient_to_chart_t(chart, z, &self.0.eval(&x))
    }
}

/// Linear ambient field `v = M x + b`.
#[derive(Clone, Copy, Debug)]
pub struct AffineAmbient {
    pub m: Matrix3<f64>,
    pub b: Vector3<f64>,
}

impl AffineAmbient {
    /// Rotation generator about `axis`: `v = axis × x`, a Killing field.
    pub fn rotation(axis: Vector3<f64>) -> Self {
        Self { m: axis.cross_matrix(), b: Vector3::zeros() }
    }
}

impl AmbientVector for AffineAmbient {
    fn eval<T: Real>(&self, x: &[T; 3]) -> [T; 3] {
        let mut out = [T::from(0.0); 3];
        for (a, o) in out.iter_mut().enumerate() {
            let mut acc = T::from(self.b[a]);
            for (c, xc) in x.iter().enumerate() {
                acc += *xc * self.m[(a, c)];
            }
            *o = acc;
        }
        out
    }
}

/// The fixed five-function battery on S².
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SphereFn {
    X1,
    Mixed,
    X3Squared,
    Exp,
    Sine,
}

impl SphereFn {
    pub const ALL: [SphereFn; 5] =
        [SphereFn::X1, SphereFn::Mixed, SphereFn::X3Squared, SphereFn::Exp, SphereFn::Sine];
}

impl AmbientScalar for SphereFn {
    fn eval<T: Real>(&self, x: &[T; 3]) -> T {
        match self {
            SphereFn::X1 => x[0],
            SphereFn::Mixed => x[0] * x[1] + x[2],
            SphereFn::X3Squared => x[2] * x[2],
            SphereFn::Exp => (x[0] - x[1] * x[2]).exp(),
            SphereFn::Sine => (x[0] * 2.0 + x[2]).sin(),
        }
    }
}

/// The fixed five-function battery on T².
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TorusFn {
    Sin1,
    Wave,
    Product,
    ExpTrig,
    Rational,
}

impl TorusFn {
    pub const ALL: [TorusFn; 5] =
        [TorusFn::Sin1, TorusFn::Wave, TorusFn::Product, TorusFn::ExpTrig, TorusFn::Rational];
}

impl ScalarFormula<2> for TorusFn {
    fn eval<T: Real>(&self, _t: f64, _chart: usize, x: &SVector<T, 2>) -> T {
        match self {
            TorusFn::Sin1 => x[0].sin(),
            TorusFn::Wave => (x[0] + x[1] * 2.0).cos(),
            TorusFn::Product => x[0].sin() * x[1].cos(),
            TorusFn::ExpTrig => (x[0].sin() * x[1].cos()).exp(),
            TorusFn::Rational => (x[0].cos() + (x[1] * 2.0).sin() * 0.5 + 3.0).recip(),
        }
    }
}

/// Trigonometric vector field on T² with fixed coefficients.
#[derive(Clone, Copy, Debug)]
pub struct TrigField2 {
    pub c: SMatrix<f64, 2, 4>,
}

impl VectorFormula<2> for TrigField2 {
    fn eval<T: Real>(&self, _t: f64, _chart: usize, x: &SVector<T, 2>) -> SVector<T, 2> {
        let basis = [x[0].sin(), x[1].cos(), (x[0] + x[1]).sin(), (x[0] - x[1] * 2.0).cos()];
        SVector::<T, 2>::from_fn(|k, _| {
            let mut acc = T::from(0.0);
            for (m, b) in basis.iter().enumerate() {
                acc += *b * self.c[(k, m)];
            }
            acc
        })
    }
}
