use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::{Atlas, Point, VectorField};

use super::brownian::BrownianPaths;
use super::dynamics::Dynamics;
use super::grid::DensityGrid;
use super::particles::OVERFLOW_EXPONENT;
use super::residual::Pairing;

/// Grid values of `ρ(t)` along one path.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityState {
    pub t: f64,
    pub path_id: u64,
    pub values: Vec<f64>,
}

#[derive(Clone, Debug)]
pub struct GridTrajectory<'g, G> {
    pub grid: &'g G,
    pub states: Vec<DensityState>,
    /// Time levels at which some node's step factor exceeded `e^700`.
    pub overflow_times: Vec<f64>,
}

/// Semi-Lagrangian solve: each node traces one backward characteristic step,
/// interpolates `ρ` at the foot point and applies the divergence factor.
/// States are kept at every `keep_every`-th level and at the final time.
pub fn pathwise_solve<'g, const D: usize, A, U, G>(
    rho0: &(dyn Fn(&Point<D>) -> f64 + Sync),
    dynamics: &Dynamics<'_, D, A, U>,
    path: &BrownianPaths,
    grid: &'g G,
    keep_every: usize,
) -> Result<GridTrajectory<'g, G>>
where
    A: Atlas<D> + Clone,
    U: VectorField<D> + ?Sized,
    G: DensityGrid<D>,
{
    if path.n_noise != dynamics.frame.len() {
        return Err(Error::Usage(format!(
            "path has {} noise components, frame has {}",
            path.n_noise,
            dynamics.frame.len()
        )));
    }
    let keep_every = keep_every.max(1);
    let mut values: Vec<f64> = grid.nodes().iter().map(rho0).collect();
    let mut states = vec![DensityState { t: 0.0, path_id: path.path, values: values.clone() }];
    let mut overflow_times = Vec::new();
    let steps = path.steps();
    for k in 0..steps {
        let t_new = (k + 1) as f64 * path.dt;
        let dw = path.increment(k);
        let prev = &values;
        let next: Result<Vec<(f64, f64)>> = grid
            .nodes()
            .par_iter()
            .map(|z| {
                let step = dynamics.strat_step(z, dw, path.dt, t_new)?;
                Ok((grid.interpolate(prev, &step.point) * step.exponent.exp(), step.exponent))
            })
            .collect();
        let next = next?;
        if next.iter().any(|(_, e)| *e > OVERFLOW_EXPONENT) {
            overflow_times.push(t_new);
        }
        for (node, (v, _)) in next.iter().enumerate() {
            if !v.is_finite() {
                let p = grid.nodes()[node];
                return Err(Error::NonFinite { chart: p.chart, node, value: *v });
            }
        }
        values = next.into_iter().map(|(v, _)| v).collect();
        if (k + 1) % keep_every == 0 || k + 1 == steps {
            states.push(DensityState { t: t_new, path_id: path.path, values: values.clone() });
        }
    }
    Ok(GridTrajectory { grid, states, overflow_times })
}

impl<'g, G> GridTrajectory<'g, G> {
    pub fn last(&self) -> &DensityState {
        self.states.last().expect("trajectory holds the initial state")
    }
}

impl<'g, const D: usize, G: DensityGrid<D>> Pairing<D> for GridTrajectory<'g, G> {
    fn levels(&self) -> usize {
        self.states.len()
    }

    fn time(&self, n: usize) -> f64 {
        self.states[n].t
    }

    fn pair_into(
        &self,
        n: usize,
        out: &mut [f64],
        h: &mut dyn FnMut(&Point<D>, f64, &mut [f64]) -> Result<()>,
    ) -> Result<()> {
        out.iter_mut().for_each(|o| *o = 0.0);
        let mut buf = vec![0.0; out.len()];
        let values = &self.states[n].values;
        for ((p, w), r) in self.grid.nodes().iter().zip(self.grid.weights()).zip(values) {
            if *w == 0.0 {
                continue;
            }
            h(p, *r, &mut buf)?;
            for (o, b) in out.iter_mut().zip(&buf) {
                *o += w * b;
            }
        }
        Ok(())
    }
}
