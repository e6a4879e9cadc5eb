//! Self-checks of the geometric building blocks, shared by the CLI and the
//! acceptance suite.

use nalgebra::{Matrix3, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::Result;
use crate::geometry::battery::{AffineAmbient, OnSphere, SphereFn, TangentOnSphere, TorusFn};
use crate::geometry::field::{Exact, FnVector, ScalarField, VectorField};
use crate::geometry::ops::{directional, div_from_jet, laplace};
use crate::geometry::{Atlas, Coords, Point, Sphere, Torus};
use crate::noise_frames::{ellipticity_residual, section_defect, NoiseFrame};
use crate::numerics::observed_order;
use crate::smoothing::velocity::spectral_div;
use crate::smoothing::{heat_smooth_vector_flat, SmoothedVelocity, SphereGrid, TorusGrid};

#[derive(Clone, Debug, Serialize)]
pub struct FrameCheckRow {
    pub manifold: &'static str,
    pub frame: &'static str,
    /// `max |Σ(X, aᵢ)² − 2|X|²| / |X|²` over the samples.
    pub section_defect: f64,
    /// `max |½Σaᵢ(aᵢψ) − Δψ + ½Σāᵢψ|` over nodes and the function battery.
    pub ellipticity: f64,
}

fn frame_rows<A: Atlas<2> + Clone>(
    atlas: &A,
    frames: &[NoiseFrame<2, A>],
    points: &[(Point<2>, Coords<2>)],
    psis: &[&dyn ScalarField<2>],
    nodes: usize,
) -> Result<Vec<FrameCheckRow>> {
    let quad = atlas.quadrature(nodes)?;
    let mut rows = Vec::new();
    for f in frames {
        let mut sec: f64 = 0.0;
        for (p, x) in points {
            sec = sec.max(section_defect(f, x, p)?);
        }
        let mut ell: f64 = 0.0;
        for psi in psis {
            for n in quad.nodes.iter().filter(|n| n.weight > 0.0) {
                ell = ell.max(ellipticity_residual(f, &psi.jet(0.0, &n.point), &n.point)?);
            }
        }
        rows.push(FrameCheckRow { manifold: atlas.name(), frame: f.kind().as_str(), section_defect: sec, ellipticity: ell });
    }
    Ok(rows)
}

/// Section identity at `samples` random `(x, X)` and the ellipticity identity
/// on the quadrature nodes, for every frame construction.
pub fn frame_check(samples: usize, seed: u64) -> Result<Vec<FrameCheckRow>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let vec = |rng: &mut ChaCha8Rng| loop {
        let v = Coords::<2>::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
        if v.norm() > 1e-3 {
            return v;
        }
    };
    let sphere = Sphere::new();
    let sphere_pts: Vec<_> = (0..samples).map(|_| (Sphere::sample_point(&mut rng), vec(&mut rng))).collect();
    let torus = Torus::<2>::new();
    let torus_pts: Vec<_> = (0..samples)
        .map(|_| {
            let p = Point::new(0, Coords::<2>::new(rng.random_range(0.0..6.28), rng.random_range(0.0..6.28)));
            (p, vec(&mut rng))
        })
        .collect();

    let sphere_fns: Vec<Exact<OnSphere<SphereFn>>> = SphereFn::ALL.iter().map(|g| Exact(OnSphere(*g))).collect();
    let torus_fns: Vec<Exact<TorusFn>> = TorusFn::ALL.iter().map(|g| Exact(*g)).collect();
    let sphere_psis: Vec<&dyn ScalarField<2>> = sphere_fns.iter().map(|f| f as &dyn ScalarField<2>).collect();
    let torus_psis: Vec<&dyn ScalarField<2>> = torus_fns.iter().map(|f| f as &dyn ScalarField<2>).collect();

    let mut rows = frame_rows(
        &torus,
        &[NoiseFrame::coordinate(&torus)?, NoiseFrame::partition(&torus)?],
        &torus_pts,
        &torus_psis,
        16,
    )?;
    rows.extend(frame_rows(
        &sphere,
        &[NoiseFrame::partition(&sphere)?, NoiseFrame::embedded(&sphere)?],
        &sphere_pts,
        &sphere_psis,
        21,
    )?);
    Ok(rows)
}

#[derive(Clone, Debug, Serialize)]
pub struct GeometryCheck {
    pub nodes: Vec<usize>,
    /// `|∫ X(f) + f div X|` per resolution.
    pub ibp: Vec<f64>,
    /// `|∫ fΔg − gΔf|` per resolution.
    pub self_adjoint: Vec<f64>,
    /// `|∫ Δf|` per resolution.
    pub laplacian_mean: Vec<f64>,
    pub orders: [f64; 3],
}

/// Integration-by-parts pairings on S² under node doubling.
pub fn geometry_check(seed: u64) -> Result<GeometryCheck> {
    let s = Sphere::new();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let x = Exact(TangentOnSphere(AffineAmbient {
        m: Matrix3::from_fn(|_, _| rng.random_range(-1.0..1.0)),
        b: Vector3::from_fn(|_, _| rng.random_range(-1.0..1.0)),
    }));
    let f = Exact(OnSphere(SphereFn::Exp));
    let g = Exact(OnSphere(SphereFn::Sine));
    let nodes = vec![33, 65, 129];
    let (mut ibp, mut sa, mut lap) = (Vec::new(), Vec::new(), Vec::new());
    for &n in &nodes {
        let q = s.quadrature(n)?;
        ibp.push(
            q.integrate(|p| {
                let xj = x.jet(0.0, p);
                directional(&xj.value, &f.jet(0.0, p)) + f.value(0.0, p) * div_from_jet(&s, p, &xj).unwrap_or(f64::NAN)
            })?
            .abs(),
        );
        sa.push(
            q.integrate(|p| {
                f.value(0.0, p) * laplace(&s, &g, 0.0, p).unwrap_or(f64::NAN)
                    - g.value(0.0, p) * laplace(&s, &f, 0.0, p).unwrap_or(f64::NAN)
            })?
            .abs(),
        );
        lap.push(q.integrate(|p| laplace(&s, &f, 0.0, p).unwrap_or(f64::NAN))?.abs());
    }
    let h: Vec<f64> = nodes.iter().map(|n| 1.0 / (*n - 1) as f64).collect();
    let orders = [observed_order(&h, &ibp), observed_order(&h, &sa), observed_order(&h, &lap)];
    Ok(GeometryCheck { nodes, ibp, self_adjoint: sa, laplacian_mean: lap, orders })
}

#[derive(Clone, Debug, Serialize)]
pub struct SmoothCheck {
    /// `max |P_s P_t v − P_{s+t} v|` on T² and S².
    pub semigroup: f64,
    /// `|∫ P_t v − ∫ v|`.
    pub mean: f64,
    /// `max(‖P_t v‖₂ − ‖v‖₂, 0)`.
    pub contraction_excess: f64,
    /// `max |div 𝓔_τ u − P_τ div u|` on T².
    pub commutation: f64,
    /// `‖u_τ − u‖_{L²}` for `τ = 2^{−k}`, `k = 2..=6`.
    pub tau: Vec<f64>,
    pub velocity_error: Vec<f64>,
}

impl SmoothCheck {
    pub fn monotone(&self) -> bool {
        self.velocity_error.windows(2).all(|w| w[1] < w[0])
    }
}

fn pulsing(t: f64, p: &Point<2>) -> Coords<2> {
    let a = (6.0 * t).sin() + 0.3;
    Coords::<2>::new(a * (2.0 * p.x[0]).sin() * p.x[1].cos(), (1.0 - t) * (p.x[0] - 3.0 * p.x[1]).cos())
}

fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Heat-semigroup properties and the smoothed-velocity convergence.
pub fn smooth_check(seed: u64) -> Result<SmoothCheck> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut semigroup, mut mean, mut excess): (f64, f64, f64) = (0.0, 0.0, 0.0);

    let g = TorusGrid::<2>::new(64)?;
    let s = SphereGrid::new(32)?;
    for _ in 0..3 {
        let v: Vec<f64> = (0..g.len()).map(|_| rng.random_range(-1.0..1.0)).collect();
        let b = g.heat(&v, 0.08)?;
        semigroup = semigroup.max(max_diff(&g.heat(&g.heat(&v, 0.03)?, 0.05)?, &b));
        mean = mean.max((g.integrate(&v) - g.integrate(&b)).abs());
        excess = excess.max(g.lp_norm(&b, 2.0) - g.lp_norm(&v, 2.0));

        let w: Vec<f64> = (0..s.len()).map(|_| rng.random_range(-1.0..1.0)).collect();
        let b = s.heat(&w, 0.03)?;
        semigroup = semigroup.max(max_diff(&s.heat(&s.heat(&w, 0.01)?, 0.02)?, &b));
        mean = mean.max((s.integrate(&w) - s.integrate(&b)).abs());
        // Compare against the band-limited projection, which is what P_0 is.
        let proj = s.synthesize(&s.analyze(&w));
        excess = excess.max(s.l2_norm(&b) - s.l2_norm(&proj));
    }

    let torus = Torus::<2>::new();
    let mut commutation: f64 = 0.0;
    for tau in [0.01, 0.1, 0.5] {
        let u: Vec<Coords<2>> = g.points().iter().map(|p| pulsing(0.2, p)).collect();
        let lhs = spectral_div(&g, &heat_smooth_vector_flat(&torus, &g, &u, tau)?);
        let rhs = g.heat(&spectral_div(&g, &u), tau)?;
        commutation = commutation.max(max_diff(&lhs, &rhs));
    }

    let gv = TorusGrid::<2>::new(32)?;
    let u = FnVector(pulsing);
    let (horizon, dt) = (1.0f64, 1.0 / 512.0);
    let steps = (horizon / dt).round() as usize;
    let mut taus = Vec::new();
    let mut errs = Vec::new();
    for k in 2..=6 {
        let tau = 0.5f64.powi(k);
        let sv = SmoothedVelocity::new(&torus, &gv, &u, horizon, tau, dt)?;
        let mut acc = 0.0;
        for j in 0..=steps {
            let t = j as f64 * dt;
            let diff: Vec<f64> = sv.at_nodes(t).iter().zip(gv.points()).map(|(a, q)| (a - u.value(t, &q)).norm()).collect();
            acc += dt * gv.lp_norm(&diff, 2.0).powi(2);
        }
        taus.push(tau);
        errs.push(acc.sqrt());
    }
    Ok(SmoothCheck {
        semigroup,
        mean,
        contraction_excess: excess.max(0.0),
        commutation,
        tau: taus,
        velocity_error: errs,
    })
}
