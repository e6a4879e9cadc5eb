//! Stratonovich–Heun integration of the characteristic flow.

use crate::error::{Error, Result};
use crate::geometry::{ops, Atlas, Coords, Point, VectorField};
use crate::noise_frames::NoiseFrame;

/// Velocity and noise frame driving the continuity equation.
pub struct Dynamics<'a, const D: usize, A, U: ?Sized> {
    pub atlas: &'a A,
    pub u: &'a U,
    pub frame: &'a NoiseFrame<D, A>,
}

impl<'a, const D: usize, A, U: ?Sized> Clone for Dynamics<'a, D, A, U> {
    fn clone(&self) -> Self {
        *self
    }
}
impl<'a, const D: usize, A, U: ?Sized> Copy for Dynamics<'a, D, A, U> {}

/// One Heun step: the new point and the increment of the log-density
/// weight `−(∫ div u ds + Σ ∫ div a_i ∘ dW^i)`.
#[derive(Clone, Copy, Debug)]
pub struct Step<const D: usize> {
    pub point: Point<D>,
    pub exponent: f64,
}

impl<'a, const D: usize, A: Atlas<D> + Clone, U: VectorField<D> + ?Sized> Dynamics<'a, D, A, U> {
    pub fn new(atlas: &'a A, u: &'a U, frame: &'a NoiseFrame<D, A>) -> Self {
        Self { atlas, u, frame }
    }

    pub fn div_u(&self, t: f64, p: &Point<D>) -> Result<f64> {
        match self.u.divergence_hint(t, p) {
            Some(d) => Ok(d),
            None => ops::div(self.atlas, self.u, t, p),
        }
    }

    /// Displacement `u dt + Σ a_i ΔW^i` and its divergence weight.
    fn slope(&self, t: f64, p: &Point<D>, dt: f64, dw: &[f64]) -> Result<(Coords<D>, f64)> {
        let mut disp = self.u.value(t, p) * dt;
        let mut weight = self.div_u(t, p)? * dt;
        for (i, w) in dw.iter().enumerate() {
            if *w == 0.0 {
                continue;
            }
            disp += self.frame.value(i, p) * *w;
            weight += self.frame.div(i, p)? * *w;
        }
        Ok((disp, weight))
    }

    /// Predictor–corrector step `x ↦ x + sign·(u dt + Σ a_i ∘ ΔW^i)`, with
    /// the velocity read at `t_first` and then `t_second`.
    fn heun(&self, p: &Point<D>, t_first: f64, t_second: f64, dt: f64, dw: &[f64], sign: f64) -> Result<Step<D>> {
        let p = self.atlas.normalize(*p);
        let (k1, w1) = self.slope(t_first, &p, dt, dw)?;
        let pred = Point::new(p.chart, p.x + k1 * sign);
        let (k2, w2) = self.slope(t_second, &pred, dt, dw)?;
        let x = p.x + (k1 + k2) * (0.5 * sign);
        if !x.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite { chart: p.chart, node: 0, value: f64::NAN });
        }
        Ok(Step { point: self.atlas.normalize(Point::new(p.chart, x)), exponent: -0.5 * (w1 + w2) })
    }

    /// Backward characteristic step `dξ = −u dt − Σ a_i ∘ dW^i` from time `t`
    /// to `t − dt`. The exponent is the log of `ρ(t, ·) / ρ(t − dt, ξ)`.
    pub fn strat_step(&self, p: &Point<D>, dw: &[f64], dt: f64, t: f64) -> Result<Step<D>> {
        self.heun(p, t, t - dt, dt, dw, -1.0)
    }

    /// Forward flow step from `t` to `t + dt`; the exponent is the log of
    /// the density ratio along the particle.
    pub fn forward_step(&self, p: &Point<D>, dw: &[f64], dt: f64, t: f64) -> Result<Step<D>> {
        self.heun(p, t, t + dt, dt, dw, 1.0)
    }
}
