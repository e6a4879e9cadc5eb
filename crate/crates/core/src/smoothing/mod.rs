//! Data regularization: heat semigroups on functions, flat vector-field
//! smoothing, time mollification and the smoothed velocity.

pub mod chart_mollify;
pub mod mollifier;
pub mod sphere_spectral;
pub mod torus_spectral;
pub mod velocity;

pub use mollifier::{Extension, Mollifier};
pub use sphere_spectral::{HarmonicField, SphereGrid};
pub use torus_spectral::{FourierField, TorusGrid};
pub use velocity::{heat_smooth_vector_flat, SmoothedVelocity};

use crate::error::Result;
use crate::geometry::{Point, ScalarField};

/// `P_τ w` on T², sampled at the grid nodes.
pub fn heat_smooth_scalar_torus<F: ScalarField<2> + ?Sized>(grid: &TorusGrid<2>, w: &F, tau: f64) -> Result<Vec<f64>> {
    grid.heat(&grid.sample(|p| w.value(0.0, p)), tau)
}

/// `P_τ w` on S² as a band-limited expansion.
pub fn heat_smooth_scalar_sphere<F: ScalarField<2> + ?Sized>(
    grid: &SphereGrid,
    w: &F,
    tau: f64,
) -> Result<HarmonicField> {
    let v = grid.sample(|p: &Point<2>| w.value(0.0, p));
    grid.heat_coeffs(&grid.analyze(&v), tau)
}
