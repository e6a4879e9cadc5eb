//! Monte-Carlo estimate of `Φ(t) = E ∫ ρ²(t) dV` and the Grönwall fit.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{Atlas, Sphere, Torus, VectorField};
use crate::noise_frames::NoiseFrame;
use crate::numerics::{linear_fit, mean_stderr};
use crate::spde_sim::{evolve_characteristics, sample_brownian, BrownianPaths, Dynamics, ParticleEnsemble};

use super::config::{ExperimentConfig, ManifoldKind, VelocityKind};
use super::velocity::{ConcentrationVelocity, GridVelocity, PolarRotation, SineCompression, Shear};

/// Velocity selected by the config, smoothed on the grid when `tau > 0`.
pub fn build_velocity(cfg: &ExperimentConfig) -> Result<Box<dyn VectorField<2>>> {
    let c = cfg.velocity_amplitude;
    let raw: Box<dyn VectorField<2>> = match cfg.velocity {
        VelocityKind::Zero => Box::new(crate::geometry::field::FnVector(|_t: f64, _p: &crate::geometry::Point<2>| {
            crate::geometry::Coords::<2>::zeros()
        })),
        VelocityKind::Sine => Box::new(SineCompression { c }),
        VelocityKind::Shear => Box::new(Shear { c }),
        VelocityKind::Rotation => Box::new(PolarRotation { omega: c }),
        VelocityKind::Concentration => Box::new(cfg.concentration_velocity()),
    };
    if cfg.tau > 0.0 {
        Ok(Box::new(GridVelocity::smoothed(raw.as_ref(), cfg.n_per_axis, cfg.horizon, cfg.dt, cfg.tau)?))
    } else {
        Ok(raw)
    }
}

/// Closed-form `div u` when the config has one on the torus.
pub fn concentration_of(cfg: &ExperimentConfig) -> Option<ConcentrationVelocity> {
    (cfg.velocity == VelocityKind::Concentration).then(|| cfg.concentration_velocity())
}

pub(crate) fn path_for(cfg: &ExperimentConfig, n_noise: usize, path: u64) -> Result<BrownianPaths> {
    if cfg.noise {
        sample_brownian(n_noise, cfg.horizon, cfg.dt, cfg.seed, path)
    } else {
        BrownianPaths::silent(cfg.horizon, cfg.dt)
    }
}

pub(crate) fn frame_for<A: Atlas<2> + Clone>(cfg: &ExperimentConfig, atlas: &A) -> Result<NoiseFrame<2, A>> {
    if cfg.noise {
        NoiseFrame::build(atlas, cfg.frame)
    } else {
        Ok(NoiseFrame::none(atlas))
    }
}

/// Without noise every path is the same, so only one is simulated.
pub(crate) fn effective_paths(cfg: &ExperimentConfig) -> usize {
    if cfg.noise {
        cfg.n_paths
    } else {
        1
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PathOverflow {
    pub path: usize,
    pub t: f64,
    pub particle: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct GronwallFit {
    pub phi0: f64,
    pub k: f64,
    /// RMS of the residual of `log Φ`.
    pub residual: f64,
    /// Smallest `Φ̂(0)` with `Φ(t) ≤ Φ̂(0) e^{K̂t}` on the whole series.
    pub envelope_phi0: f64,
}

/// Least squares of `log Φ` against `t`.
pub fn gronwall_fit(times: &[f64], phi: &[f64]) -> Result<GronwallFit> {
    if times.len() != phi.len() || times.len() < 2 {
        return Err(Error::Fit(format!("need two or more paired samples, got {} and {}", times.len(), phi.len())));
    }
    if let Some((i, v)) = phi.iter().enumerate().find(|(_, v)| !(**v > 0.0) || !v.is_finite()) {
        return Err(Error::Fit(format!("Φ must be positive and finite, got {v} at index {i}")));
    }
    let logs: Vec<f64> = phi.iter().map(|v| v.ln()).collect();
    let (a, k) = linear_fit(times, &logs);
    let res: Vec<f64> = times.iter().zip(&logs).map(|(t, l)| l - a - k * t).collect();
    let rms = (res.iter().map(|r| r * r).sum::<f64>() / res.len() as f64).sqrt();
    let worst = res.iter().cloned().fold(f64::NEG_INFINITY, f64::max).max(0.0);
    Ok(GronwallFit { phi0: a.exp(), k, residual: rms, envelope_phi0: (a + worst).exp() })
}

#[derive(Clone, Debug, Serialize)]
pub struct RunReport {
    pub config_hash: u64,
    pub seed: u64,
    pub n_paths: usize,
    pub times: Vec<f64>,
    pub phi: Vec<f64>,
    pub stderr: Vec<f64>,
    /// `None` when the series is not positive and finite (overflow).
    pub fit: Option<GronwallFit>,
    pub overflow: Vec<PathOverflow>,
}

impl RunReport {
    /// `(sup_t Φ, stderr at the maximizing level)`.
    pub fn sup_phi(&self) -> (f64, f64) {
        let mut best = (f64::NEG_INFINITY, 0.0);
        for (v, s) in self.phi.iter().zip(&self.stderr) {
            if *v > best.0 || v.is_nan() {
                best = (*v, *s);
            }
        }
        best
    }

    pub fn write_csv<W: std::io::Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["t", "phi", "stderr"])?;
        for ((t, p), s) in self.times.iter().zip(&self.phi).zip(&self.stderr) {
            w.write_record([format!("{t:.17e}"), format!("{p:.17e}"), format!("{s:.17e}")])?;
        }
        w.flush()?;
        Ok(())
    }
}

type PathSeries = (Vec<f64>, Vec<PathOverflow>);

fn run_paths<A: Atlas<2> + Clone>(cfg: &ExperimentConfig, atlas: &A, u: &dyn VectorField<2>) -> Result<Vec<PathSeries>> {
    let quad = atlas.quadrature(cfg.n_per_axis)?;
    let frame = frame_for(cfg, atlas)?;
    let dynamics = Dynamics::new(atlas, u, &frame);
    let start = ParticleEnsemble::from_quadrature(&quad, |p| cfg.initial_density(p))?;
    (0..effective_paths(cfg))
        .into_par_iter()
        .map(|path| {
            let bm = path_for(cfg, frame.len(), path as u64)?;
            let mut ens = start.clone();
            let mut series = Vec::with_capacity(bm.steps() + 1);
            let events = evolve_characteristics(&mut ens, &dynamics, &bm, |_, e| {
                series.push(e.l2_squared());
                Ok(())
            })?;
            let flags = events.into_iter().map(|e| PathOverflow { path, t: e.t, particle: e.particle }).collect();
            Ok((series, flags))
        })
        .collect()
}

/// `Φ(t_k)` with its standard error over independent paths, at every step.
pub fn l2_moment(cfg: &ExperimentConfig) -> Result<RunReport> {
    cfg.validate()?;
    let u = build_velocity(cfg)?;
    let series = match cfg.manifold {
        ManifoldKind::Torus => run_paths(cfg, &Torus::<2>::new(), u.as_ref())?,
        ManifoldKind::Sphere => run_paths(cfg, &Sphere::new(), u.as_ref())?,
    };
    let levels = series[0].0.len();
    let times: Vec<f64> = (0..levels).map(|k| k as f64 * cfg.dt).collect();
    let mut phi = Vec::with_capacity(levels);
    let mut stderr = Vec::with_capacity(levels);
    for k in 0..levels {
        let samples: Vec<f64> = series.iter().map(|s| s.0[k]).collect();
        let (m, s) = mean_stderr(&samples);
        phi.push(m);
        stderr.push(s);
    }
    let fit = gronwall_fit(&times, &phi).ok();
    let overflow = series.into_iter().flat_map(|s| s.1).collect();
    Ok(RunReport {
        config_hash: cfg.hash(),
        seed: cfg.seed,
        n_paths: effective_paths(cfg),
        times,
        phi,
        stderr,
        fit,
        overflow,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiments::config::Rho0Kind;
    use crate::noise_frames::FrameKind;
    use rand::{Rng, SeedableRng};

    fn small(velocity: VelocityKind, noise: bool) -> ExperimentConfig {
        ExperimentConfig {
            manifold: ManifoldKind::Torus,
            frame: FrameKind::Coordinate,
            velocity,
            velocity_amplitude: 1.0,
            rho0: Rho0Kind::Wave,
            rho0_amplitude: 0.5,
            horizon: 0.2,
            dt: 0.01,
            n_per_axis: 16,
            n_paths: 4,
            seed: 7,
            noise,
            ..ExperimentConfig::concentration(16, 0)
        }
    }

    #[test]
    fn fit_recovers_exact_exponential_and_constant() {
        let t: Vec<f64> = (0..20).map(|k| k as f64 * 0.05).collect();
        let phi: Vec<f64> = t.iter().map(|t| 3.0 * (1.7 * t).exp()).collect();
        let f = gronwall_fit(&t, &phi).unwrap();
        assert!((f.phi0 - 3.0).abs() < 1e-12 && (f.k - 1.7).abs() < 1e-12 && f.residual < 1e-12);
        let flat = gronwall_fit(&t, &vec![2.5; t.len()]).unwrap();
        assert!(flat.k.abs() < 1e-14 && (flat.phi0 - 2.5).abs() < 1e-12);
    }

    #[test]
    fn fit_on_noisy_exponential() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let t: Vec<f64> = (0..=100).map(|k| k as f64 * 0.01).collect();
        let phi: Vec<f64> = t.iter().map(|t| (0.8 * t).exp() * (1.0 + 0.01 * (rng.random::<f64>() * 2.0 - 1.0) * 3f64.sqrt())).collect();
        let f = gronwall_fit(&t, &phi).unwrap();
        assert!((f.k - 0.8).abs() < 0.05 * 0.8, "{}", f.k);
        for (ti, p) in t.iter().zip(&phi) {
            assert!(*p <= f.envelope_phi0 * (f.k * ti).exp() * (1.0 + 1e-12));
        }
    }

    #[test]
    fn fit_rejects_nonpositive() {
        assert!(matches!(gronwall_fit(&[0.0, 1.0], &[1.0, 0.0]), Err(Error::Fit(_))));
        assert!(matches!(gronwall_fit(&[0.0, 1.0], &[1.0, f64::INFINITY]), Err(Error::Fit(_))));
    }

    #[test]
    fn identity_flow_keeps_moment_exactly() {
        let r = l2_moment(&small(VelocityKind::Zero, false)).unwrap();
        assert!(r.phi.iter().all(|p| *p == r.phi[0]));
        // ∫(1 + ½ sin x cos y)² = 4π² (1 + 1/16)
        let want = 4.0 * std::f64::consts::PI.powi(2) * (1.0 + 1.0 / 16.0);
        assert!((r.phi[0] - want).abs() < 1e-10);
    }

    #[test]
    fn divergence_free_flows_preserve_moment() {
        let r = l2_moment(&small(VelocityKind::Shear, true)).unwrap();
        let drift = r.phi.iter().map(|p| (p / r.phi[0] - 1.0).abs()).fold(0.0, f64::max);
        assert!(drift < 1e-4, "{drift}");
        let sph = ExperimentConfig {
            manifold: ManifoldKind::Sphere,
            frame: FrameKind::Embedded,
            velocity: VelocityKind::Rotation,
            ..small(VelocityKind::Zero, false)
        };
        let r = l2_moment(&sph).unwrap();
        let drift = r.phi.iter().map(|p| (p / r.phi[0] - 1.0).abs()).fold(0.0, f64::max);
        assert!(drift < 1e-12, "{drift}");
    }

    #[test]
    fn compressible_torus_matches_closed_form() {
        // ρ₀ ≡ 1 and no noise: ρ(t) is the inverse Jacobian J of the flow.
        let cfg = ExperimentConfig {
            rho0: Rho0Kind::Constant,
            n_per_axis: 32,
            horizon: 0.3,
            ..small(VelocityKind::Sine, false)
        };
        let r = l2_moment(&cfg).unwrap();
        assert_eq!(r.n_paths, 1);
        let s = SineCompression { c: 1.0 };
        let n = 4000;
        let h = crate::geometry::torus::TWO_PI / n as f64;
        for (t, phi) in r.times.iter().zip(&r.phi) {
            let exact = crate::geometry::torus::TWO_PI
                * h
                * (0..n).map(|i| s.back_jacobian(*t, i as f64 * h).powi(2)).sum::<f64>();
            assert!((phi - exact).abs() < 1e-3 * exact, "t={t} {phi} vs {exact}");
        }
        let fit = r.fit.unwrap();
        assert!(fit.k > 0.0);

        let noisy = l2_moment(&ExperimentConfig { noise: true, ..cfg }).unwrap();
        assert_eq!(noisy.n_paths, cfg.n_paths);
        assert!(noisy.fit.unwrap().k > 0.0);
        assert!(noisy.stderr[0] == 0.0 && noisy.stderr.last().unwrap() > &0.0);
    }

    #[test]
    fn reports_are_reproducible() {
        let cfg = small(VelocityKind::Sine, true);
        let a = l2_moment(&cfg).unwrap();
        let b = l2_moment(&cfg).unwrap();
        let (mut x, mut y) = (Vec::new(), Vec::new());
        a.write_csv(&mut x).unwrap();
        b.write_csv(&mut y).unwrap();
        assert_eq!(x, y);
        assert_eq!(a.config_hash, b.config_hash);
    }
}
