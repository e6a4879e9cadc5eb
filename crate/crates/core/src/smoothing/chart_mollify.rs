//! Chart-wise mollification of vector fields on S²: Euclidean convolution in
//! each stereographic chart, blended with the squared partition of unity.

use crate::geometry::{push_vector, to_chart, Atlas, Coords, Point, Sphere, VectorField};

/// `X_τ(p) = Σ_j α_j(p)² (ρ_τ * X_j)(p)`, with `X_j` the components in chart
/// `j` and `ρ_τ` a tensor-product bump of radius `τ` in chart coordinates.
pub fn chart_mollify_vector<X: VectorField<2> + ?Sized>(
    sphere: &Sphere,
    x: &X,
    t: f64,
    tau: f64,
    p: &Point<2>,
) -> Coords<2> {
    const NODES: usize = 8;
    let m = super::Mollifier::new(tau).expect("positive smoothing scale");
    let st = m.stencil(0.0, NODES);
    let mut out = Coords::<2>::zeros();
    for j in 0..sphere.chart_count() {
        if !sphere.overlaps(p.chart, &p.x, j) {
            continue;
        }
        let a: f64 = sphere.alpha_t(j, p.chart, &p.x);
        if a == 0.0 {
            continue;
        }
        let q = to_chart(sphere, p, j);
        let mut acc = Coords::<2>::zeros();
        for (s0, w0) in &st {
            for (s1, w1) in &st {
                let y = Point::new(j, q.x + Coords::<2>::new(*s0, *s1));
                acc += x.value(t, &y) * (w0 * w1);
            }
        }
        out += push_vector(sphere, &q, &acc, p.chart) * (a * a);
    }
    out
}
