//! Pathwise solution of the stochastic continuity equation along
//! stochastic characteristics.

pub mod brownian;
pub mod dynamics;
pub mod grid;
pub mod particles;
pub mod residual;
pub mod semi_lagrangian;
pub mod snapshot;

#[cfg(test)]
mod tests;

pub use brownian::{sample_brownian, BrownianPaths};
pub use dynamics::{Dynamics, Step};
pub use grid::{DensityGrid, OversetSphereGrid, PeriodicGrid};
pub use particles::{evolve_characteristics, OverflowEvent, Particle, ParticleEnsemble, ParticleTrajectory};
pub use residual::{renormalized_residual, residual_set, weak_residual, Identity, Pairing, Renormalization, ResidualReport, TestFunction};
pub use semi_lagrangian::{pathwise_solve, DensityState, GridTrajectory};
pub use snapshot::write_snapshot;
