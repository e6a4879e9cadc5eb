//! Experiment configuration: a flat TOML table.
//!
//! ```toml
//! manifold = "torus"          # torus | sphere
//! frame = "coordinate"        # coordinate | partition | embedded
//! velocity = "concentration"  # zero | sine | shear | rotation | concentration
//! velocity_amplitude = 8.0
//! alpha = 0.3                 # concentration only
//! cap_cells = 2.0             # cap radius in grid cells
//! rho0 = "constant"           # constant | wave
//! rho0_amplitude = 0.5
//! horizon = 0.5
//! dt = 1e-3
//! n_per_axis = 64
//! n_paths = 64
//! seed = 1
//! noise = true
//! tau = 0.0
//! p = 5.0
//! mu = 100.0
//! ```

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Point, Sphere};
use crate::noise_frames::FrameKind;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ManifoldKind {
    Torus,
    Sphere,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VelocityKind {
    Zero,
    /// `(c sin x¹, 0)` on T², `div u = c cos x¹`.
    Sine,
    /// `(c sin x², 0)` on T², divergence-free.
    Shear,
    /// Rigid rotation about the polar axis of S², divergence-free.
    Rotation,
    /// Capped radial sink on T² with `div u ~ −|x|^{−α}`.
    Concentration,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Rho0Kind {
    Constant,
    /// `1 + a sin x¹ cos x²` on T², `1 + a x³` on S².
    Wave,
}

fn default_alpha() -> f64 {
    0.3
}
fn default_cap() -> f64 {
    2.0
}
fn default_p() -> f64 {
    5.0
}
fn default_mu() -> f64 {
    100.0
}
fn default_amp() -> f64 {
    0.5
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub manifold: ManifoldKind,
    pub frame: FrameKind,
    pub velocity: VelocityKind,
    #[serde(default)]
    pub velocity_amplitude: f64,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default = "default_cap")]
    pub cap_cells: f64,
    pub rho0: Rho0Kind,
    #[serde(default = "default_amp")]
    pub rho0_amplitude: f64,
    pub horizon: f64,
    pub dt: f64,
    pub n_per_axis: usize,
    pub n_paths: usize,
    pub seed: u64,
    pub noise: bool,
    #[serde(default)]
    pub tau: f64,
    #[serde(default = "default_p")]
    pub p: f64,
    #[serde(default = "default_mu")]
    pub mu: f64,
}

impl ExperimentConfig {
    /// The concentration experiment at its default size.
    pub fn concentration(n_per_axis: usize, seed: u64) -> Self {
        Self {
            manifold: ManifoldKind::Torus,
            frame: FrameKind::Coordinate,
            velocity: VelocityKind::Concentration,
            velocity_amplitude: 8.0,
            alpha: 0.3,
            cap_cells: 2.0,
            rho0: Rho0Kind::Constant,
            rho0_amplitude: 0.0,
            horizon: 0.5,
            dt: 1e-3,
            n_per_axis,
            n_paths: 64,
            seed,
            noise: true,
            tau: 0.0,
            p: 5.0,
            mu: 100.0,
        }
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("flat config always serializes")
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if !(self.dt > 0.0) || !(self.horizon >= self.dt) {
            return bad(format!("need 0 < dt <= horizon, got dt={} horizon={}", self.dt, self.horizon));
        }
        if self.n_paths == 0 {
            return bad("n_paths must be at least 1".into());
        }
        if self.n_per_axis < 4 {
            return bad(format!("n_per_axis too small: {}", self.n_per_axis));
        }
        if !(self.tau >= 0.0) {
            return bad(format!("tau must be nonnegative, got {}", self.tau));
        }
        if !(self.mu > 0.0) {
            return bad(format!("mu must be positive, got {}", self.mu));
        }
        let (torus_only, sphere_only) = match self.velocity {
            VelocityKind::Sine | VelocityKind::Shear | VelocityKind::Concentration => (true, false),
            VelocityKind::Rotation => (false, true),
            VelocityKind::Zero => (false, false),
        };
        match self.manifold {
            ManifoldKind::Torus => {
                if sphere_only {
                    return bad(format!("velocity {:?} needs the sphere", self.velocity));
                }
                if self.frame != FrameKind::Coordinate {
                    return bad(format!("frame `{}` is not available on the torus", self.frame.as_str()));
                }
            }
            ManifoldKind::Sphere => {
                if torus_only {
                    return bad(format!("velocity {:?} needs the torus", self.velocity));
                }
                if self.frame == FrameKind::Coordinate {
                    return bad("the coordinate frame only exists on the torus".into());
                }
                if self.tau > 0.0 {
                    return bad("velocity smoothing is only implemented on the torus".into());
                }
            }
        }
        if self.velocity == VelocityKind::Concentration {
            // Unbounded divergence: the Lᵖ hypothesis needs p > d + 2.
            if !(self.p > 4.0) {
                return bad(format!("p must exceed d + 2 = 4, got {}", self.p));
            }
            if !(self.alpha > 0.0 && self.alpha * self.p < 2.0) {
                return bad(format!("alpha = {} leaves div u outside L^{}", self.alpha, self.p));
            }
        }
        Ok(())
    }

    /// Velocity parameters for the concentration profile on this grid.
    pub fn concentration_velocity(&self) -> super::ConcentrationVelocity {
        let mut v = super::ConcentrationVelocity::for_grid(self.n_per_axis);
        v.amplitude = self.velocity_amplitude;
        v.alpha = self.alpha;
        v.cap = self.cap_cells * crate::geometry::torus::TWO_PI / self.n_per_axis as f64;
        v
    }

    pub fn initial_density(&self, p: &Point<2>) -> f64 {
        let a = self.rho0_amplitude;
        match (self.rho0, self.manifold) {
            (Rho0Kind::Constant, _) => 1.0,
            (Rho0Kind::Wave, ManifoldKind::Torus) => 1.0 + a * p.x[0].sin() * p.x[1].cos(),
            (Rho0Kind::Wave, ManifoldKind::Sphere) => 1.0 + a * Sphere::embed(p)[2],
        }
    }

    /// FNV-1a hash of the canonical TOML echo.
    pub fn hash(&self) -> u64 {
        fnv1a(self.to_toml().as_bytes())
    }
}

pub fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in bytes {
        h ^= u64::from(*b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}
