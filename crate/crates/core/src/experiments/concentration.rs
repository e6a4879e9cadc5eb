//! Noise off/on × resolution `n`/`2n` comparison for the capped radial sink.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{Atlas, Torus};
use crate::numerics::pairwise_sum;

use super::config::{ExperimentConfig, VelocityKind};
use super::moments::{l2_moment, GronwallFit, RunReport};

/// Sub-cells per grid cell used to integrate `|div u|ᵖ`.
const NORM_REFINE: usize = 4;

#[derive(Clone, Debug, Serialize)]
pub struct DesignCell {
    pub n_per_axis: usize,
    pub noise: bool,
    pub sup_phi: f64,
    pub sup_stderr: f64,
    pub fit: Option<GronwallFit>,
    pub overflow_events: usize,
    /// First overflow time over all paths.
    pub first_overflow: Option<f64>,
    #[serde(skip)]
    pub run: RunReport,
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct DivergenceNorms {
    pub n_per_axis: usize,
    /// `‖div u‖_{Lᵖ([0,T]×M)}`.
    pub lp: f64,
    pub linf: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct ConcentrationReport {
    pub config_hash: u64,
    pub seed: u64,
    pub p: f64,
    /// Noise-off coarse, noise-off fine, noise-on coarse, noise-on fine.
    pub cells: Vec<DesignCell>,
    pub norms: [DivergenceNorms; 2],
}

impl ConcentrationReport {
    fn cell(&self, noise: bool, fine: bool) -> &DesignCell {
        &self.cells[2 * usize::from(noise) + usize::from(fine)]
    }

    /// `sup Φ(2n) / sup Φ(n)` without noise.
    pub fn noise_off_growth(&self) -> f64 {
        self.cell(false, true).sup_phi / self.cell(false, false).sup_phi
    }

    /// `|sup Φ(2n) / sup Φ(n) − 1|` with noise.
    pub fn noise_on_change(&self) -> f64 {
        (self.cell(true, true).sup_phi / self.cell(true, false).sup_phi - 1.0).abs()
    }

    /// Fitted `(Φ̂(0), K̂)` with noise at `n` and `2n`.
    pub fn noise_on_fits(&self) -> Option<(GronwallFit, GronwallFit)> {
        Some((self.cell(true, false).fit?, self.cell(true, true).fit?))
    }

    pub fn lp_change(&self) -> f64 {
        (self.norms[1].lp / self.norms[0].lp - 1.0).abs()
    }

    pub fn linf_growth(&self) -> f64 {
        self.norms[1].linf / self.norms[0].linf
    }

    pub fn write_csv<W: std::io::Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["n_per_axis", "noise", "sup_phi", "sup_stderr", "phi0_hat", "k_hat", "fit_residual", "overflow_events"])?;
        for c in &self.cells {
            let (phi0, k, res) = c
                .fit
                .map(|f| (format!("{:.17e}", f.phi0), format!("{:.17e}", f.k), format!("{:.17e}", f.residual)))
                .unwrap_or_default();
            w.write_record([
                c.n_per_axis.to_string(),
                c.noise.to_string(),
                format!("{:.17e}", c.sup_phi),
                format!("{:.17e}", c.sup_stderr),
                phi0,
                k,
                res,
                c.overflow_events.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn write_norms_csv<W: std::io::Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["n_per_axis", "p", "div_lp", "div_linf"])?;
        for m in &self.norms {
            w.write_record([
                m.n_per_axis.to_string(),
                format!("{}", self.p),
                format!("{:.17e}", m.lp),
                format!("{:.17e}", m.linf),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Norms of the closed-form divergence with the cap of an `n`-grid.
pub fn divergence_norms(cfg: &ExperimentConfig) -> Result<DivergenceNorms> {
    let u = cfg.concentration_velocity();
    let quad = Torus::<2>::new().quadrature(NORM_REFINE * cfg.n_per_axis)?;
    let vals: Vec<f64> = quad.nodes.iter().map(|q| u.divergence(&q.point)).collect();
    let linf = vals.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let terms: Vec<f64> = vals.iter().zip(&quad.nodes).map(|(v, q)| q.weight * v.abs().powf(cfg.p)).collect();
    let lp = (cfg.horizon * pairwise_sum(&terms)).powf(1.0 / cfg.p);
    Ok(DivergenceNorms { n_per_axis: cfg.n_per_axis, lp, linf })
}

fn cell(cfg: &ExperimentConfig, n: usize, noise: bool) -> Result<DesignCell> {
    let c = ExperimentConfig { n_per_axis: n, noise, ..cfg.clone() };
    let run = l2_moment(&c)?;
    let (sup_phi, sup_stderr) = run.sup_phi();
    let first_overflow = run.overflow.iter().map(|o| o.t).reduce(f64::min);
    Ok(DesignCell {
        n_per_axis: n,
        noise,
        sup_phi,
        sup_stderr,
        fit: run.fit,
        overflow_events: run.overflow.len(),
        first_overflow,
        run,
    })
}

/// The 2×2 design at resolutions `n = cfg.n_per_axis` and `2n`.
pub fn concentration_experiment(cfg: &ExperimentConfig) -> Result<ConcentrationReport> {
    cfg.validate()?;
    if cfg.velocity != VelocityKind::Concentration {
        return Err(Error::Config("the concentration experiment needs velocity = \"concentration\"".into()));
    }
    let n = cfg.n_per_axis;
    let mut cells = Vec::with_capacity(4);
    for noise in [false, true] {
        for m in [n, 2 * n] {
            log::info!("concentration cell n = {m}, noise = {noise}");
            cells.push(cell(cfg, m, noise)?);
        }
    }
    let norms = [
        divergence_norms(cfg)?,
        divergence_norms(&ExperimentConfig { n_per_axis: 2 * n, ..cfg.clone() })?,
    ];
    Ok(ConcentrationReport { config_hash: cfg.hash(), seed: cfg.seed, p: cfg.p, cells, norms })
}
