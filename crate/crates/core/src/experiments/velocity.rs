//! Velocity fields for the experiments.

use nalgebra::{SVector, Vector3};

use crate::error::Result;
use crate::geometry::field::VectorFormula;
use crate::geometry::torus::TWO_PI;
use crate::geometry::{Coords, Point, Real, Sphere, Torus, VectorField};
use crate::smoothing::velocity::spectral_div;
use crate::smoothing::{SmoothedVelocity, TorusGrid};
use crate::spde_sim::{DensityGrid, PeriodicGrid};

/// `u = (c sin x¹, 0)`: compressible, with `div u = c cos x¹` and an explicit
/// flow `tan(x¹(t)/2) = e^{ct} tan(x¹(0)/2)`.
#[derive(Clone, Copy, Debug)]
pub struct SineCompression {
    pub c: f64,
}

impl VectorFormula<2> for SineCompression {
    fn eval<T: Real>(&self, _t: f64, _chart: usize, x: &SVector<T, 2>) -> SVector<T, 2> {
        SVector::<T, 2>::new(x[0].sin() * self.c, T::from(0.0))
    }
}

impl VectorField<2> for SineCompression {
    fn value(&self, t: f64, p: &Point<2>) -> Coords<2> {
        self.eval::<f64>(t, p.chart, &p.x)
    }

    fn jet(&self, t: f64, p: &Point<2>) -> crate::geometry::VectorJet<2> {
        crate::geometry::VectorField::jet(&crate::geometry::field::Exact(*self), t, p)
    }

    fn divergence_hint(&self, _t: f64, p: &Point<2>) -> Option<f64> {
        Some(self.c * p.x[0].cos())
    }
}

impl SineCompression {
    /// Position at time `t` of the particle starting at `x`.
    pub fn flow(&self, t: f64, x: f64) -> f64 {
        let s = x.rem_euclid(TWO_PI);
        let y = if s > std::f64::consts::PI { s - TWO_PI } else { s };
        (2.0 * ((y / 2.0).tan() * (self.c * t).exp()).atan()).rem_euclid(TWO_PI)
    }

    /// `∂x¹(0)/∂x¹(t)` at the current position `x`: the density factor
    /// `ρ(t, x) = ρ₀(flow(−t, x)) · back_jacobian(t, x)`.
    pub fn back_jacobian(&self, t: f64, x: f64) -> f64 {
        let e = (-self.c * t).exp();
        let (s, c) = (x / 2.0).sin_cos();
        e / (c * c + s * s * e * e)
    }
}

/// Radial sink `u = −A ∇(Φ χ)` about `center` on T², where `ΔΦ = g` with
/// `g(r) = min(r, r_c)^{−α}` and `χ` a quintic cutoff between `r1` and `r2`.
/// Near the center `div u ≈ −A r^{−α}`, capped at `r_c`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ConcentrationVelocity {
    pub amplitude: f64,
    pub alpha: f64,
    pub cap: f64,
    pub r1: f64,
    pub r2: f64,
    pub center: [f64; 2],
}

impl ConcentrationVelocity {
    /// Defaults of the concentration experiment with the cap at two cells of
    /// an `n × n` grid.
    pub fn for_grid(n: usize) -> Self {
        Self {
            amplitude: 8.0,
            alpha: 0.3,
            cap: 2.0 * TWO_PI / n as f64,
            r1: 0.35,
            r2: 0.9,
            center: [std::f64::consts::PI; 2],
        }
    }

    fn offset(&self, p: &Point<2>) -> (f64, f64, f64) {
        let dx = Self::centered(p.x[0] - self.center[0]);
        let dy = Self::centered(p.x[1] - self.center[1]);
        (dx, dy, dx.hypot(dy))
    }

    fn centered(d: f64) -> f64 {
        let s = d.rem_euclid(TWO_PI);
        if s > std::f64::consts::PI {
            s - TWO_PI
        } else {
            s
        }
    }

    fn g(&self, r: f64) -> f64 {
        r.max(self.cap).powf(-self.alpha)
    }

    /// Radial potential `Φ` and its derivative.
    fn potential(&self, r: f64) -> (f64, f64) {
        let (rc, a) = (self.cap, self.alpha);
        let gc = rc.powf(-a);
        if r <= rc {
            return (gc * r * r / 4.0, gc * r / 2.0);
        }
        let e = 2.0 - a;
        let c = gc * rc * rc / 2.0 - rc.powf(e) / e;
        let phi = gc * rc * rc / 4.0 + c * (r / rc).ln() + (r.powf(e) - rc.powf(e)) / (e * e);
        let dphi = (gc * rc * rc / 2.0 + (r.powf(e) - rc.powf(e)) / e) / r;
        (phi, dphi)
    }

    fn cutoff(&self, r: f64) -> (f64, f64, f64) {
        let w = self.r2 - self.r1;
        let (s, d1, d2) = crate::numerics::smoothstep5((r - self.r1) / w);
        (1.0 - s, -d1 / w, -d2 / (w * w))
    }

    /// Closed-form `div u`.
    pub fn divergence(&self, p: &Point<2>) -> f64 {
        let (_, _, r) = self.offset(p);
        let (phi, dphi) = self.potential(r);
        let (chi, dchi, d2chi) = self.cutoff(r);
        let curv = if r > 0.0 { dchi / r } else { 0.0 };
        -self.amplitude * (self.g(r) * chi + 2.0 * dphi * dchi + phi * (d2chi + curv))
    }
}

impl VectorField<2> for ConcentrationVelocity {
    fn value(&self, _t: f64, p: &Point<2>) -> Coords<2> {
        let (dx, dy, r) = self.offset(p);
        if r == 0.0 {
            return Coords::<2>::zeros();
        }
        let (phi, dphi) = self.potential(r);
        let (chi, dchi, _) = self.cutoff(r);
        let vr = -self.amplitude * (dphi * chi + phi * dchi);
        Coords::<2>::new(vr * dx / r, vr * dy / r)
    }

    fn divergence_hint(&self, _t: f64, p: &Point<2>) -> Option<f64> {
        Some(self.divergence(p))
    }
}

/// `u = (c sin x², 0)` on T², divergence-free.
#[derive(Clone, Copy, Debug)]
pub struct Shear {
    pub c: f64,
}

impl VectorField<2> for Shear {
    fn value(&self, _t: f64, p: &Point<2>) -> Coords<2> {
        Coords::<2>::new(self.c * p.x[1].sin(), 0.0)
    }

    fn divergence_hint(&self, _t: f64, _p: &Point<2>) -> Option<f64> {
        Some(0.0)
    }
}

/// Rigid rotation `ω e₃ × x` of S², divergence-free.
#[derive(Clone, Copy, Debug)]
pub struct PolarRotation {
    pub omega: f64,
}

impl VectorField<2> for PolarRotation {
    fn value(&self, _t: f64, p: &Point<2>) -> Coords<2> {
        let x = Sphere::embed(p);
        let v = Vector3::new(-x[1], x[0], 0.0) * self.omega;
        Sphere::tangent_to_chart(p, &v)
    }

    fn divergence_hint(&self, _t: f64, _p: &Point<2>) -> Option<f64> {
        Some(0.0)
    }
}

/// Nodal samples of a torus velocity at uniform time levels, read back by
/// periodic bicubic interpolation in space and linearly in time.
pub struct GridVelocity {
    grid: PeriodicGrid,
    dt: f64,
    components: Vec<[Vec<f64>; 2]>,
    divergence: Vec<Vec<f64>>,
}

impl GridVelocity {
    /// `u_τ` on an `n × n` grid, sampled every `dt` over `[0, horizon]`.
    pub fn smoothed<V: VectorField<2> + ?Sized>(u: &V, n: usize, horizon: f64, dt: f64, tau: f64) -> Result<Self> {
        let spectral = TorusGrid::<2>::new(n)?;
        let smooth = SmoothedVelocity::new(&Torus::<2>::new(), &spectral, u, horizon, tau, dt)?;
        let steps = (horizon / dt).round() as usize;
        let mut components = Vec::with_capacity(steps + 1);
        let mut divergence = Vec::with_capacity(steps + 1);
        for k in 0..=steps {
            let nodes = smooth.at_nodes(k as f64 * dt);
            divergence.push(spectral_div(&spectral, &nodes));
            components.push([nodes.iter().map(|v| v[0]).collect(), nodes.iter().map(|v| v[1]).collect()]);
        }
        Ok(Self { grid: PeriodicGrid::new(n), dt, components, divergence })
    }

    fn bracket(&self, t: f64) -> (usize, usize, f64) {
        let last = self.components.len() - 1;
        let s = (t / self.dt).clamp(0.0, last as f64);
        let k = (s.floor() as usize).min(last);
        (k, (k + 1).min(last), s - k as f64)
    }

    fn lerp(&self, a: &[f64], b: &[f64], w: f64, p: &Point<2>) -> f64 {
        let va = self.grid.interpolate(a, p);
        if w == 0.0 {
            va
        } else {
            (1.0 - w) * va + w * self.grid.interpolate(b, p)
        }
    }
}

impl VectorField<2> for GridVelocity {
    fn value(&self, t: f64, p: &Point<2>) -> Coords<2> {
        let (k0, k1, w) = self.bracket(t);
        let (a, b) = (&self.components[k0], &self.components[k1]);
        Coords::<2>::new(self.lerp(&a[0], &b[0], w, p), self.lerp(&a[1], &b[1], w, p))
    }

    fn divergence_hint(&self, t: f64, p: &Point<2>) -> Option<f64> {
        let (k0, k1, w) = self.bracket(t);
        Some(self.lerp(&self.divergence[k0], &self.divergence[k1], w, p))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pt(x: f64, y: f64) -> Point<2> {
        Point::new(0, Coords::<2>::new(x, y))
    }

    #[test]
    fn concentration_divergence_matches_finite_differences() {
        let u = ConcentrationVelocity::for_grid(64);
        let h = 1e-5;
        let pi = std::f64::consts::PI;
        for &(x, y) in &[(pi + 0.05, pi), (pi + 0.2, pi - 0.3), (pi - 0.5, pi + 0.4), (pi + 0.8, pi + 0.1)] {
            let fd = (u.value(0.0, &pt(x + h, y))[0] - u.value(0.0, &pt(x - h, y))[0]
                + u.value(0.0, &pt(x, y + h))[1]
                - u.value(0.0, &pt(x, y - h))[1])
                / (2.0 * h);
            let exact = u.divergence(&pt(x, y));
            assert!((fd - exact).abs() < 1e-5 * (1.0 + exact.abs()), "{fd} vs {exact}");
        }
    }

    #[test]
    fn concentration_is_compactly_supported_and_capped() {
        let u = ConcentrationVelocity::for_grid(64);
        let pi = std::f64::consts::PI;
        assert_eq!(u.value(0.0, &pt(pi + 1.0, pi)), Coords::<2>::zeros());
        assert_eq!(u.divergence(&pt(0.1, 0.2)), 0.0);
        let centre = u.divergence(&pt(pi, pi));
        assert!((centre + 8.0 * u.cap.powf(-0.3)).abs() < 1e-12);
        // Potential is C¹ across the cap radius.
        let (a, da) = u.potential(u.cap * (1.0 - 1e-9));
        let (b, db) = u.potential(u.cap * (1.0 + 1e-9));
        assert!((a - b).abs() < 1e-9 && (da - db).abs() < 1e-8);
    }

    #[test]
    fn sine_flow_matches_ode() {
        let s = SineCompression { c: 0.7 };
        let (mut x, dt) = (1.3f64, 1e-4);
        for _ in 0..5000 {
            let k1 = s.c * x.sin();
            let k2 = s.c * (x + 0.5 * dt * k1).sin();
            let k3 = s.c * (x + 0.5 * dt * k2).sin();
            let k4 = s.c * (x + dt * k3).sin();
            x += dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        }
        assert!((s.flow(0.5, 1.3) - x).abs() < 1e-10);
    }

    #[test]
    fn smoothed_grid_velocity_tracks_smooth_field() {
        let u = SineCompression { c: 1.0 };
        let g = GridVelocity::smoothed(&u, 32, 0.5, 0.01, 1e-3).unwrap();
        let p = pt(0.37, 2.1);
        // Heat smoothing multiplies the first mode by e^{−τ}; the rest is
        // bicubic interpolation error at h = 2π/32.
        let want = (-1e-3f64).exp() * 0.37f64.sin();
        assert!((g.value(0.25, &p)[0] - want).abs() < 5e-5);
        assert!((g.divergence_hint(0.25, &p).unwrap() - (-1e-3f64).exp() * 0.37f64.cos()).abs() < 5e-5);
    }

    #[test]
    fn rotation_is_tangent_and_rigid() {
        let r = PolarRotation { omega: 2.0 };
        let p = Sphere::from_ambient(&Vector3::new(0.6, 0.0, 0.8));
        let v = Sphere::chart_to_tangent(&p, &r.value(0.0, &p));
        assert!((v - Vector3::new(0.0, 1.2, 0.0)).norm() < 1e-12);
    }
}
