//! Discrete residuals of the weak and renormalized formulations.
//!
//! For `Φ = ∫F(ρ)ψ` the Itô form reads
//! `dΦ = [∫F(u(ψ) + ∂_tψ) − ∫G div u ψ] dt + Σ_i B_iΦ dW^i + ½ Σ_i B_iB_iΦ dt`
//! with `G = ξF' − F`, `B_iΦ = ∫F a_i(ψ) − ∫G div a_i ψ` and
//! `B_jB_iΦ = ∫F a_j(a_iψ) − ∫G div a_j a_i(ψ) − ∫G a_j(div a_i ψ) + ∫H div a_j div a_i ψ`,
//! `H = ξ²F'' − ξF' + F`. For `F(ξ) = ξ` the correction
//! `½ Σ_i a_i(a_iψ) = Δψ − ½ Σ_i ā_i(ψ)` recovers the weak form.

use crate::error::{Error, Result};
use crate::geometry::{ops, Atlas, Coords, Point, ScalarField, VectorField};
use crate::noise_frames::FrameKind;

use super::brownian::BrownianPaths;
use super::dynamics::Dynamics;

/// Access to `∫ h(x, ρ(t_n, x)) dV` at the stored time levels.
pub trait Pairing<const D: usize> {
    fn levels(&self) -> usize;
    fn time(&self, n: usize) -> f64;
    /// Integrates every component of `h` (written into its buffer) into `out`.
    fn pair_into(
        &self,
        n: usize,
        out: &mut [f64],
        h: &mut dyn FnMut(&Point<D>, f64, &mut [f64]) -> Result<()>,
    ) -> Result<()>;
}

/// A renormalizing function `F` with its first two derivatives.
pub trait Renormalization: Sync {
    fn f(&self, x: f64) -> f64;
    fn df(&self, x: f64) -> f64;
    fn d2f(&self, x: f64) -> f64;
}

#[derive(Clone, Copy, Debug, Default)]
pub struct Identity;

impl Renormalization for Identity {
    fn f(&self, x: f64) -> f64 {
        x
    }
    fn df(&self, _x: f64) -> f64 {
        1.0
    }
    fn d2f(&self, _x: f64) -> f64 {
        0.0
    }
}

/// Test function `ψ(t, x)`; `∂_tψ` is taken by central differences when
/// `time_dependent` is set.
pub struct TestFunction<'a, const D: usize> {
    pub field: &'a dyn ScalarField<D>,
    pub time_dependent: bool,
}

impl<'a, const D: usize> TestFunction<'a, D> {
    pub fn fixed(field: &'a dyn ScalarField<D>) -> Self {
        Self { field, time_dependent: false }
    }

    pub fn moving(field: &'a dyn ScalarField<D>) -> Self {
        Self { field, time_dependent: true }
    }
}

/// Signed residuals; `compensated` subtracts the zero-mean second-order
/// Itô–Taylor term `½ Σ_ij B_jB_iΦ (ΔW^iΔW^j − δ_ij dt)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ResidualReport {
    pub raw: f64,
    pub compensated: f64,
}

pub fn weak_residual<const D: usize, P, A, U>(
    trajectory: &P,
    dynamics: &Dynamics<'_, D, A, U>,
    psi: &TestFunction<'_, D>,
    path: &BrownianPaths,
) -> Result<ResidualReport>
where
    P: Pairing<D> + ?Sized,
    A: Atlas<D> + Clone,
    U: VectorField<D> + ?Sized,
{
    renormalized_residual(trajectory, dynamics, psi, &Identity, path)
}

pub fn renormalized_residual<const D: usize, P, A, U>(
    trajectory: &P,
    dynamics: &Dynamics<'_, D, A, U>,
    psi: &TestFunction<'_, D>,
    renorm: &dyn Renormalization,
    path: &BrownianPaths,
) -> Result<ResidualReport>
where
    P: Pairing<D> + ?Sized,
    A: Atlas<D> + Clone,
    U: VectorField<D> + ?Sized,
{
    Ok(residual_set(trajectory, dynamics, psi, &[renorm], path)?[0])
}

/// Residuals for several renormalizations in one pass over the trajectory.
pub fn residual_set<const D: usize, P, A, U>(
    trajectory: &P,
    dynamics: &Dynamics<'_, D, A, U>,
    psi: &TestFunction<'_, D>,
    renorms: &[&dyn Renormalization],
    path: &BrownianPaths,
) -> Result<Vec<ResidualReport>>
where
    P: Pairing<D> + ?Sized,
    A: Atlas<D> + Clone,
    U: VectorField<D> + ?Sized,
{
    let levels = trajectory.levels();
    if levels != path.steps() + 1 {
        return Err(Error::Usage(format!(
            "trajectory has {levels} levels but the path has {} steps",
            path.steps()
        )));
    }
    let nn = path.n_noise;
    if nn != dynamics.frame.len() {
        return Err(Error::Usage(format!("path has {nn} noise components, frame has {}", dynamics.frame.len())));
    }
    let dt = path.dt;
    let width = 2 + nn + nn * nn;
    let nr = renorms.len();
    let mut terms = vec![0.0; width * nr];
    let mut first = vec![0.0; nr];
    let mut raw_sum = vec![0.0; nr];
    let mut comp_sum = vec![0.0; nr];
    for n in 0..levels {
        let t = trajectory.time(n);
        let mut h = |p: &Point<D>, r: f64, out: &mut [f64]| integrand(dynamics, psi, renorms, t, p, r, out);
        trajectory.pair_into(n, &mut terms, &mut h)?;
        if n + 1 == levels {
            return Ok((0..nr)
                .map(|k| {
                    let raw = terms[k * width] - first[k] - raw_sum[k];
                    ResidualReport { raw, compensated: raw - comp_sum[k] }
                })
                .collect());
        }
        let dw = path.increment(n);
        for k in 0..nr {
            let tk = &terms[k * width..(k + 1) * width];
            if n == 0 {
                first[k] = tk[0];
            }
            let q = &tk[2 + nn..];
            let mut step = tk[1] * dt;
            let mut comp = 0.0;
            for i in 0..nn {
                step += 0.5 * q[i * nn + i] * dt + tk[2 + i] * dw[i];
                for j in 0..nn {
                    let delta = if i == j { dt } else { 0.0 };
                    comp += 0.5 * q[i * nn + j] * (dw[i] * dw[j] - delta);
                }
            }
            raw_sum[k] += step;
            comp_sum[k] += comp;
        }
    }
    Err(Error::Usage("empty trajectory".into()))
}

/// Layout: `[Fψ, drift, S_0..S_{N−1}, Q_00, Q_01, ..]` with `Q_ij = B_jB_i`.
fn integrand<const D: usize, A, U>(
    dynamics: &Dynamics<'_, D, A, U>,
    psi: &TestFunction<'_, D>,
    renorms: &[&dyn Renormalization],
    t: f64,
    p: &Point<D>,
    r: f64,
    out: &mut [f64],
) -> Result<()>
where
    A: Atlas<D> + Clone,
    U: VectorField<D> + ?Sized,
{
    let jet = psi.field.jet(t, p);
    let psi_t = if psi.time_dependent {
        let dt = 1e-5 * t.abs().max(1.0);
        (psi.field.value(t + dt, p) - psi.field.value(t - dt, p)) / (2.0 * dt)
    } else {
        0.0
    };
    let u = dynamics.u.value(t, p);
    let div_u = dynamics.div_u(t, p)?;
    let u_psi = ops::directional(&u, &jet) + psi_t;

    let frame = dynamics.frame;
    let nn = frame.len();
    let coordinate = frame.kind() == FrameKind::Coordinate;
    let mut a = Vec::with_capacity(nn);
    let mut jac = Vec::with_capacity(nn);
    let mut div = Vec::with_capacity(nn);
    let mut div_grad: Vec<Coords<D>> = Vec::with_capacity(nn);
    for i in 0..nn {
        let aj = frame.jet(i, p);
        if coordinate {
            div.push(0.0);
            div_grad.push(Coords::<D>::zeros());
        } else {
            div.push(ops::div_from_jet(dynamics.atlas, p, &aj)?);
            div_grad.push(ops::div_gradient_from_jet(dynamics.atlas, p, &aj));
        }
        a.push(aj.value);
        jac.push(aj.jac);
    }
    let width = 2 + nn + nn * nn;
    for (k, renorm) in renorms.iter().enumerate() {
        let f = renorm.f(r);
        let f1 = renorm.df(r);
        let g = r * f1 - f;
        let hh = r * r * renorm.d2f(r) - r * f1 + f;
        let out = &mut out[k * width..(k + 1) * width];
        out[0] = f * jet.value;
        out[1] = f * u_psi - g * div_u * jet.value;
        for i in 0..nn {
            let ai_psi = a[i].dot(&jet.grad);
            out[2 + i] = f * ai_psi - g * div[i] * jet.value;
            // ∇(a_i(ψ)) and ∇(div a_i · ψ)
            let grad_ai_psi = jac[i].transpose() * jet.grad + jet.hess * a[i];
            let grad_div_psi = div_grad[i] * jet.value + jet.grad * div[i];
            for j in 0..nn {
                out[2 + nn + i * nn + j] = f * a[j].dot(&grad_ai_psi)
                    - g * div[j] * ai_psi
                    - g * a[j].dot(&grad_div_psi)
                    + hh * div[j] * div[i] * jet.value;
            }
        }
    }
    Ok(())
}
