//! Operators built from a noise frame.

use crate::error::Result;
use crate::geometry::field::ScalarJet;
use crate::geometry::ops::{
    directional, div_from_jet, div_gradient_from_jet, laplace_from_jet, second_directional_nested,
};
use crate::geometry::{metric_data, Atlas, Coords, Point};

use super::frame::NoiseFrame;

/// `ā_i(ψ) = (div a_i) a_i(ψ)`.
pub fn bar_a_apply<const D: usize, A: Atlas<D> + Clone>(
    frame: &NoiseFrame<D, A>,
    i: usize,
    psi: &ScalarJet<D>,
    p: &Point<D>,
) -> Result<f64> {
    let a = frame.jet(i, p);
    Ok(div_from_jet(frame.atlas(), p, &a)? * directional(&a.value, psi))
}

/// `Λ_i(ψ) = div(div(ψ a_i) a_i)`, expanded with the product rule.
pub fn lambda_op<const D: usize, A: Atlas<D> + Clone>(
    frame: &NoiseFrame<D, A>,
    i: usize,
    psi: &ScalarJet<D>,
    p: &Point<D>,
) -> Result<f64> {
    let a = frame.jet(i, p);
    let da = div_from_jet(frame.atlas(), p, &a)?;
    let grad_da = div_gradient_from_jet(frame.atlas(), p, &a);
    // g = div(ψ a) = a(ψ) + ψ div a
    let g = directional(&a.value, psi) + psi.value * da;
    let grad_g: Coords<D> =
        a.jac.transpose() * psi.grad + psi.hess * a.value + psi.grad * da + grad_da * psi.value;
    Ok(a.value.dot(&grad_g) + g * da)
}

/// `|½ Σ a_i(a_i ψ) − Δψ + ½ Σ ā_i(ψ)|` at `p`.
pub fn ellipticity_residual<const D: usize, A: Atlas<D> + Clone>(
    frame: &NoiseFrame<D, A>,
    psi: &ScalarJet<D>,
    p: &Point<D>,
) -> Result<f64> {
    let mut second = 0.0;
    let mut bar = 0.0;
    for i in 0..frame.len() {
        let a = frame.jet(i, p);
        second += second_directional_nested(&a, psi);
        bar += div_from_jet(frame.atlas(), p, &a)? * directional(&a.value, psi);
    }
    let lap = laplace_from_jet(frame.atlas(), p, psi)?;
    Ok((0.5 * second - lap + 0.5 * bar).abs())
}

/// `|Σ_i (X, a_i)² − 2|X|²| / |X|²` at `p`.
pub fn section_defect<const D: usize, A: Atlas<D> + Clone>(
    frame: &NoiseFrame<D, A>,
    x: &Coords<D>,
    p: &Point<D>,
) -> Result<f64> {
    let md = metric_data(frame.atlas(), p)?;
    let mut s = 0.0;
    for i in 0..frame.len() {
        let c = md.inner(x, &frame.value(i, p));
        s += c * c;
    }
    let n2 = md.norm2(x);
    Ok((s - 2.0 * n2).abs() / n2)
}

/// `(𝒜X, Y) = Σ_i (X, a_i)(Y, a_i)`.
pub fn polarization<const D: usize, A: Atlas<D> + Clone>(
    frame: &NoiseFrame<D, A>,
    x: &Coords<D>,
    y: &Coords<D>,
    p: &Point<D>,
) -> Result<f64> {
    let md = metric_data(frame.atlas(), p)?;
    let mut s = 0.0;
    for i in 0..frame.len() {
        let a = frame.value(i, p);
        s += md.inner(x, &a) * md.inner(y, &a);
    }
    Ok(s)
}
