//! Flat-torus vector smoothing and the space-time smoothed velocity `u_τ`.

use crate::error::{Error, Result};
use crate::geometry::{Atlas, Coords, Point, VectorField};

use super::mollifier::Mollifier;
use super::torus_spectral::TorusGrid;

/// Component-wise heat smoothing of nodal vector values. On a flat torus the
/// Hodge Laplacian on 1-forms acts component-wise, so this is `𝓔_τ`.
pub fn heat_smooth_vector_flat<const D: usize, A: Atlas<D>>(
    atlas: &A,
    grid: &TorusGrid<D>,
    u: &[Coords<D>],
    tau: f64,
) -> Result<Vec<Coords<D>>> {
    if !atlas.is_flat() {
        return Err(Error::UnsupportedManifold(format!(
            "vector heat smoothing is only available on flat tori, not {}",
            atlas.name()
        )));
    }
    let mut out = vec![Coords::<D>::zeros(); u.len()];
    for k in 0..D {
        let comp: Vec<f64> = u.iter().map(|v| v[k]).collect();
        let s = grid.heat(&comp, tau)?;
        for (o, v) in out.iter_mut().zip(s) {
            o[k] = v;
        }
    }
    Ok(out)
}

/// Spectral divergence of nodal vector values on the flat torus.
pub fn spectral_div<const D: usize>(grid: &TorusGrid<D>, u: &[Coords<D>]) -> Vec<f64> {
    let mut out = vec![0.0; u.len()];
    for k in 0..D {
        let comp: Vec<f64> = u.iter().map(|v| v[k]).collect();
        for (o, d) in out.iter_mut().zip(grid.derivative(&comp, k)) {
            *o += d;
        }
    }
    out
}

/// `u_τ(t) = ∫ 𝓔_τ u(t') η_τ(t − t') dt'` with `u ≡ 0` outside `[0, T]`,
/// precomputed on a snapshot grid of step `snap_dt`.
#[derive(Clone, Debug)]
pub struct SmoothedVelocity<const D: usize> {
    pub grid: TorusGrid<D>,
    pub tau: f64,
    pub horizon: f64,
    pub snap_dt: f64,
    mollifier: Mollifier,
    snapshots: Vec<Vec<Coords<D>>>,
}

impl<const D: usize> SmoothedVelocity<D> {
    pub fn new<A: Atlas<D>, V: VectorField<D> + ?Sized>(
        atlas: &A,
        grid: &TorusGrid<D>,
        u: &V,
        horizon: f64,
        tau: f64,
        snap_dt: f64,
    ) -> Result<Self> {
        let mollifier = Mollifier::new(tau)?;
        if !(snap_dt > 0.0) || !(horizon > 0.0) {
            return Err(Error::Domain("snapshot step and horizon must be positive".into()));
        }
        if snap_dt > 0.5 * tau {
            log::warn!("snapshot step {snap_dt} is coarse against smoothing scale {tau}");
        }
        let steps = (horizon / snap_dt).round() as usize;
        let pts = grid.points();
        let mut snapshots = Vec::with_capacity(steps + 1);
        for k in 0..=steps {
            let t = k as f64 * snap_dt;
            let raw: Vec<Coords<D>> = pts.iter().map(|p| u.value(t, p)).collect();
            snapshots.push(heat_smooth_vector_flat(atlas, grid, &raw, tau)?);
        }
        Ok(Self { grid: grid.clone(), tau, horizon, snap_dt, mollifier, snapshots })
    }

    fn weights(&self, t: f64) -> Vec<(usize, f64)> {
        let lo = ((t - self.tau) / self.snap_dt).floor() as i64;
        let hi = ((t + self.tau) / self.snap_dt).ceil() as i64;
        let mut mass = 0.0;
        let mut out = Vec::new();
        for k in lo..=hi {
            let w = self.mollifier.eval(t - k as f64 * self.snap_dt);
            mass += w;
            if k >= 0 && (k as usize) < self.snapshots.len() && w > 0.0 {
                out.push((k as usize, w));
            }
        }
        for o in out.iter_mut() {
            o.1 /= mass;
        }
        out
    }

    /// Nodal values of `u_τ(t)`.
    pub fn at_nodes(&self, t: f64) -> Vec<Coords<D>> {
        let mut out = vec![Coords::<D>::zeros(); self.grid.len()];
        for (k, w) in self.weights(t) {
            for (o, v) in out.iter_mut().zip(&self.snapshots[k]) {
                *o += v * w;
            }
        }
        out
    }

    /// `u_τ(t, x)` at an arbitrary point by trigonometric interpolation.
    pub fn value(&self, t: f64, p: &Point<D>) -> Coords<D> {
        let nodes = self.at_nodes(t);
        let mut out = Coords::<D>::zeros();
        for k in 0..D {
            let comp: Vec<f64> = nodes.iter().map(|v| v[k]).collect();
            out[k] = self.grid.eval_at(&self.grid.forward(&comp), &p.x);
        }
        out
    }
}
