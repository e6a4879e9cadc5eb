use std::f64::consts::SQRT_2;
use std::str::FromStr;

use nalgebra::{Const, SMatrix, SVector};
use num_dual::Dual2Vec;

use crate::error::{Error, Result};
use crate::geometry::field::{exact_scalar_jet, VectorField, VectorJet};
use crate::geometry::sphere::Sphere;
use crate::geometry::{battery, ops as gops, Atlas, Coords, Point, Real, Tensor};

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FrameKind {
    /// `a = √2 α_j E_{j,i}` over the squared partition of unity.
    Partition,
    /// `a_i = √2 (e_i − (e_i·x) x)` on the unit sphere.
    Embedded,
    /// `a_i = √2 ∂_i` on a flat torus.
    Coordinate,
}

impl FromStr for FrameKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "partition" => Ok(Self::Partition),
            "embedded" => Ok(Self::Embedded),
            "coordinate" => Ok(Self::Coordinate),
            other => Err(Error::Config(format!("unknown frame kind `{other}`"))),
        }
    }
}

impl FrameKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            Self::Partition => "partition",
            Self::Embedded => "embedded",
            Self::Coordinate => "coordinate",
        }
    }
}

/// Pointwise Gram–Schmidt of the coordinate frame under the metric `h`.
/// Column `i` of the result is `E_i`. `None` when the metric is degenerate.
pub fn gram_schmidt_t<T: Real, const D: usize>(h: &SMatrix<T, D, D>) -> Option<SMatrix<T, D, D>> {
    let inner = |a: &SVector<T, D>, b: &SVector<T, D>| -> T {
        let mut s = T::from(0.0);
        for i in 0..D {
            for j in 0..D {
                s += a[i] * h[(i, j)] * b[j];
            }
        }
        s
    };
    let mut cols: Vec<SVector<T, D>> = Vec::with_capacity(D);
    for i in 0..D {
        let mut v = SVector::<T, D>::from_fn(|k, _| T::from(if k == i { 1.0 } else { 0.0 }));
        for e in &cols {
            let c = inner(&v, e);
            v -= e * c;
        }
        let n2 = inner(&v, &v);
        if !(n2.re() > 1e-24) {
            return None;
        }
        v /= n2.sqrt();
        cols.push(v);
    }
    Some(SMatrix::<T, D, D>::from_fn(|r, c| cols[c][r]))
}

/// Orthonormal frame `E_i` (columns) of chart coordinates at `p`.
pub fn gram_schmidt_frame<const D: usize, A: Atlas<D>>(atlas: &A, p: &Point<D>) -> Result<Tensor<D>> {
    atlas.check(p)?;
    let h: Tensor<D> = atlas.metric_t(p.chart, &p.x);
    gram_schmidt_t(&h).ok_or_else(|| {
        Error::Construction(format!("metric loses rank at {:?} in chart {}", p.x.as_slice(), p.chart))
    })
}

/// Verify the squared partition covers every given point.
pub fn squared_partition_check<const D: usize, A: Atlas<D>>(atlas: &A, points: &[Point<D>]) -> Result<f64> {
    let mut worst = 0.0f64;
    for p in points {
        let mut sum = 0.0;
        let mut best = 0.0f64;
        for j in 0..atlas.chart_count() {
            if !atlas.overlaps(p.chart, &p.x, j) {
                continue;
            }
            let a: f64 = atlas.alpha_t(j, p.chart, &p.x);
            sum += a * a;
            best = best.max(a);
        }
        if best < 1e-8 {
            return Err(Error::Construction(format!(
                "no partition weight covers {:?} in chart {}",
                p.x.as_slice(),
                p.chart
            )));
        }
        worst = worst.max((sum - 1.0).abs());
    }
    Ok(worst)
}

/// An immutable family of noise vector fields on an atlas.
#[derive(Clone, Debug)]
pub struct NoiseFrame<const D: usize, A> {
    atlas: A,
    kind: FrameKind,
    n: usize,
}

impl<const D: usize, A: Atlas<D> + Clone> NoiseFrame<D, A> {
    pub fn partition(atlas: &A) -> Result<Self> {
        let probe = atlas.quadrature(9)?;
        let pts: Vec<Point<D>> = probe.nodes.iter().map(|n| n.point).collect();
        squared_partition_check(atlas, &pts)?;
        for p in &pts {
            gram_schmidt_frame(atlas, p)?;
        }
        Ok(Self { atlas: atlas.clone(), kind: FrameKind::Partition, n: D * atlas.chart_count() })
    }

    pub fn coordinate(atlas: &A) -> Result<Self> {
        if !atlas.is_flat() || atlas.chart_count() != 1 {
            return Err(Error::Usage(format!(
                "coordinate frame needs a flat single-chart manifold, got {}",
                atlas.name()
            )));
        }
        Ok(Self { atlas: atlas.clone(), kind: FrameKind::Coordinate, n: D })
    }

    pub fn embedded(atlas: &A) -> Result<Self> {
        if atlas.name() != "sphere2" || D != 2 {
            return Err(Error::Usage(format!("embedded frame needs the unit sphere, got {}", atlas.name())));
        }
        Ok(Self { atlas: atlas.clone(), kind: FrameKind::Embedded, n: 3 })
    }

    pub fn build(atlas: &A, kind: FrameKind) -> Result<Self> {
        match kind {
            FrameKind::Partition => Self::partition(atlas),
            FrameKind::Coordinate => Self::coordinate(atlas),
            FrameKind::Embedded => Self::embedded(atlas),
        }
    }

    /// The empty frame (deterministic transport).
    pub fn none(atlas: &A) -> Self {
        Self { atlas: atlas.clone(), kind: FrameKind::Coordinate, n: 0 }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn kind(&self) -> FrameKind {
        self.kind
    }

    pub fn atlas(&self) -> &A {
        &self.atlas
    }

    /// Components of `a_i` in the chart of the evaluation point.
    pub fn eval_t<T: Real>(&self, i: usize, chart: usize, x: &SVector<T, D>) -> SVector<T, D> {
        let zero = SVector::<T, D>::from_element(T::from(0.0));
        match self.kind {
            FrameKind::Coordinate => {
                SVector::<T, D>::from_fn(|k, _| T::from(if k == i { SQRT_2 } else { 0.0 }))
            }
            FrameKind::Partition => {
                let j = i / D;
                let k = i % D;
                let alpha = self.atlas.alpha_t(j, chart, x);
                if alpha.re() == 0.0 {
                    return zero;
                }
                if chart == j {
                    let h = self.atlas.metric_t(j, x);
                    let e = match gram_schmidt_t(&h) {
                        Some(e) => e,
                        None => return zero,
                    };
                    SVector::<T, D>::from_fn(|r, _| e[(r, k)] * alpha * SQRT_2)
                } else {
                    let w = self.atlas.transition_t(chart, j, x);
                    let h = self.atlas.metric_t(j, &w);
                    let e = match gram_schmidt_t(&h) {
                        Some(e) => e,
                        None => return zero,
                    };
                    let jac = self.atlas.transition_jacobian_t(j, chart, &w);
                    SVector::<T, D>::from_fn(|r, _| {
                        let mut acc = T::from(0.0);
                        for c in 0..D {
                            acc += jac[(r, c)] * e[(c, k)];
                        }
                        acc * alpha * SQRT_2
                    })
                }
            }
            FrameKind::Embedded => {
                let z = SVector::<T, 2>::new(x[0], x[1]);
                let amb = Sphere::embed_t(chart, &z);
                let mut v = [T::from(0.0); 3];
                for (a, va) in v.iter_mut().enumerate() {
                    let d = if a == i { 1.0 } else { 0.0 };
                    *va = (-amb[a] * amb[i] + d) * SQRT_2;
                }
                let c = battery::ambient_to_chart_t(chart, &z, &v);
                SVector::<T, D>::from_fn(|r, _| c[r])
            }
        }
    }

    pub fn value(&self, i: usize, p: &Point<D>) -> Coords<D> {
        self.eval_t::<f64>(i, p.chart, &p.x)
    }

    pub fn jet(&self, i: usize, p: &Point<D>) -> VectorJet<D> {
        if self.kind == FrameKind::Coordinate {
            let mut j = VectorJet::zero();
            j.value = self.value(i, p);
            return j;
        }
        let mut out = VectorJet::zero();
        for k in 0..D {
            let sj = exact_scalar_jet(
                |v: &SVector<Dual2Vec<f64, Const<D>>, D>| self.eval_t(i, p.chart, v)[k],
                &p.x,
            );
            out.value[k] = sj.value;
            for c in 0..D {
                out.jac[(k, c)] = sj.grad[c];
            }
            out.hess[k] = sj.hess;
        }
        out
    }

    /// `div a_i` at `p`.
    pub fn div(&self, i: usize, p: &Point<D>) -> Result<f64> {
        if self.kind == FrameKind::Coordinate {
            return Ok(0.0);
        }
        gops::div_from_jet(&self.atlas, p, &self.jet(i, p))
    }

    /// `ā_i = (div a_i) a_i` at `p`.
    pub fn bar_a(&self, i: usize, p: &Point<D>) -> Result<Coords<D>> {
        Ok(self.value(i, p) * self.div(i, p)?)
    }

    pub fn field(&self, i: usize) -> FrameField<'_, D, A> {
        FrameField { frame: self, i }
    }
}

/// A single frame member viewed as a vector field.
pub struct FrameField<'a, const D: usize, A> {
    frame: &'a NoiseFrame<D, A>,
    i: usize,
}

impl<const D: usize, A: Atlas<D> + Clone> VectorField<D> for FrameField<'_, D, A> {
    fn value(&self, _t: f64, p: &Point<D>) -> Coords<D> {
        self.frame.value(self.i, p)
    }

    fn jet(&self, _t: f64, p: &Point<D>) -> VectorJet<D> {
        self.frame.jet(self.i, p)
    }

    fn divergence_hint(&self, _t: f64, p: &Point<D>) -> Option<f64> {
        self.frame.div(self.i, p).ok()
    }
}
