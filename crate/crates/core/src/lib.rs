//! Numerical laboratory for stochastic continuity equations
//! `dρ + div(ρu) dt + Σ_i div(ρ a_i) ∘ dW^i = 0` on closed Riemannian
//! manifolds (flat tori and the round sphere).

pub mod dual_parabolic;
pub mod error;
pub mod experiments;
pub mod geometry;
pub mod noise_frames;
pub mod numerics;
pub mod smoothing;
pub mod spde_sim;

pub use error::{Error, Result};
