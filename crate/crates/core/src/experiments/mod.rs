//! Moment estimates, duality pairing and the concentration experiment.

pub mod checks;
pub mod concentration;
pub mod config;
pub mod duality;
pub mod moments;
pub mod truncation;
pub mod velocity;

pub use duality::{duality_check, DualityReport, DualityTerms};
pub use checks::{frame_check, geometry_check, smooth_check, FrameCheckRow, GeometryCheck, SmoothCheck};
pub use concentration::{concentration_experiment, divergence_norms, ConcentrationReport, DesignCell, DivergenceNorms};
pub use config::{ExperimentConfig, ManifoldKind, Rho0Kind, VelocityKind};
pub use moments::{build_velocity, gronwall_fit, l2_moment, GronwallFit, PathOverflow, RunReport};
pub use truncation::{build_truncation, truncation_property_suite, Chi, PropertyRow, TruncationFamily};
pub use velocity::{ConcentrationVelocity, GridVelocity, PolarRotation, Shear, SineCompression};
