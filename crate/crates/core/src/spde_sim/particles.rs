use crate::error::{Error, Result};
use crate::geometry::{Atlas, Point, Quadrature, VectorField};

use super::brownian::BrownianPaths;
use super::dynamics::Dynamics;
use super::residual::Pairing;

/// Exponent beyond which `exp` is within a few powers of ten of overflow.
pub const OVERFLOW_EXPONENT: f64 = 700.0;

#[derive(Clone, Copy, Debug)]
pub struct Particle<const D: usize> {
    pub point: Point<D>,
    /// Logarithm of `ρ(t, ξ_t(y)) / ρ₀(y)`.
    pub exponent: f64,
    pub rho0: f64,
    /// Quadrature weight of the starting node.
    pub weight: f64,
}

impl<const D: usize> Particle<D> {
    pub fn rho(&self) -> f64 {
        self.exponent.exp() * self.rho0
    }
}

#[derive(Clone, Debug)]
pub struct ParticleEnsemble<const D: usize> {
    pub particles: Vec<Particle<D>>,
    pub t: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OverflowEvent {
    pub t: f64,
    pub particle: usize,
}

impl<const D: usize> ParticleEnsemble<D> {
    /// One particle per quadrature node, carrying that node's weight.
    pub fn from_quadrature<F: Fn(&Point<D>) -> f64>(quad: &Quadrature<D>, rho0: F) -> Result<Self> {
        let mut particles = Vec::with_capacity(quad.len());
        for (k, node) in quad.nodes.iter().enumerate() {
            if node.weight == 0.0 {
                continue;
            }
            let r = rho0(&node.point);
            if !r.is_finite() {
                return Err(Error::NonFinite { chart: node.point.chart, node: k, value: r });
            }
            particles.push(Particle { point: node.point, exponent: 0.0, rho0: r, weight: node.weight });
        }
        Ok(Self { particles, t: 0.0 })
    }

    pub fn len(&self) -> usize {
        self.particles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.particles.is_empty()
    }

    /// `∫ h(x, ρ(t, x)) dV` through the push-forward of the initial measure.
    pub fn pair<H: FnMut(&Point<D>, f64) -> f64>(&self, mut h: H) -> f64 {
        let vals: Vec<f64> = self
            .particles
            .iter()
            .map(|p| p.weight * (-p.exponent).exp() * h(&p.point, p.rho()))
            .collect();
        crate::numerics::pairwise_sum(&vals)
    }

    pub fn mass(&self) -> f64 {
        self.pair(|_, r| r)
    }

    pub fn l2_squared(&self) -> f64 {
        self.pair(|_, r| r * r)
    }
}

/// Advance every particle along the forward flow over `path`, calling
/// `observe(k, ensemble)` at every time level `k = 0..=steps`.
pub fn evolve_characteristics<const D: usize, A, U, O>(
    ensemble: &mut ParticleEnsemble<D>,
    dynamics: &Dynamics<'_, D, A, U>,
    path: &BrownianPaths,
    mut observe: O,
) -> Result<Vec<OverflowEvent>>
where
    A: Atlas<D> + Clone,
    U: VectorField<D> + ?Sized,
    O: FnMut(usize, &ParticleEnsemble<D>) -> Result<()>,
{
    if path.n_noise != dynamics.frame.len() {
        return Err(Error::Usage(format!(
            "path has {} noise components, frame has {}",
            path.n_noise,
            dynamics.frame.len()
        )));
    }
    let mut events = Vec::new();
    let mut flagged = vec![false; ensemble.len()];
    let t0 = ensemble.t;
    observe(0, ensemble)?;
    for k in 0..path.steps() {
        let t = t0 + k as f64 * path.dt;
        let dw = path.increment(k);
        for (idx, p) in ensemble.particles.iter_mut().enumerate() {
            let step = dynamics.forward_step(&p.point, dw, path.dt, t)?;
            p.point = step.point;
            p.exponent += step.exponent;
            if !p.exponent.is_finite() {
                return Err(Error::NonFinite { chart: p.point.chart, node: idx, value: p.exponent });
            }
            if p.exponent > OVERFLOW_EXPONENT && !flagged[idx] {
                flagged[idx] = true;
                events.push(OverflowEvent { t: t + path.dt, particle: idx });
            }
        }
        ensemble.t = t0 + (k + 1) as f64 * path.dt;
        observe(k + 1, ensemble)?;
    }
    Ok(events)
}

/// Particle positions and exponents stored at every time level.
#[derive(Clone, Debug)]
pub struct ParticleTrajectory<const D: usize> {
    pub times: Vec<f64>,
    pub levels: Vec<ParticleEnsemble<D>>,
    pub overflow: Vec<OverflowEvent>,
}

impl<const D: usize> ParticleTrajectory<D> {
    pub fn record<A, U>(
        mut ensemble: ParticleEnsemble<D>,
        dynamics: &Dynamics<'_, D, A, U>,
        path: &BrownianPaths,
    ) -> Result<Self>
    where
        A: Atlas<D> + Clone,
        U: VectorField<D> + ?Sized,
    {
        let mut levels = Vec::with_capacity(path.steps() + 1);
        let overflow = evolve_characteristics(&mut ensemble, dynamics, path, |_, e| {
            levels.push(e.clone());
            Ok(())
        })?;
        let times = levels.iter().map(|e| e.t).collect();
        Ok(Self { times, levels, overflow })
    }
}

impl<const D: usize> Pairing<D> for ParticleTrajectory<D> {
    fn levels(&self) -> usize {
        self.levels.len()
    }

    fn time(&self, n: usize) -> f64 {
        self.times[n]
    }

    fn pair_into(
        &self,
        n: usize,
        out: &mut [f64],
        h: &mut dyn FnMut(&Point<D>, f64, &mut [f64]) -> Result<()>,
    ) -> Result<()> {
        out.iter_mut().for_each(|o| *o = 0.0);
        let mut buf = vec![0.0; out.len()];
        for p in &self.levels[n].particles {
            let r = p.rho();
            h(&p.point, r, &mut buf)?;
            // dV(ξ_t) = e^{-E} dV(y), so weight·ρ₀/ρ is the transported cell
            let w = p.weight * (-p.exponent).exp();
            for (o, b) in out.iter_mut().zip(&buf) {
                *o += w * b;
            }
        }
        Ok(())
    }
}
