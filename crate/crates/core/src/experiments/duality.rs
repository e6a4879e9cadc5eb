//! Discrete duality pairing behind the Grönwall argument.
//!
//! With `φ` solving `∂_tφ + Δφ + bφ = 0`, `φ(t₀) = 1`, `b = −C_χ|div u|`, the
//! renormalized weak form tested against `φ` gives
//!
//! ```text
//! E∫F(ρ(t₀))φ(t₀) = E∫F(ρ₀)φ(0) + E∫∫F u(φ) − ½ΣE∫∫F āᵢ(φ) − ½ΣE∫∫Λᵢ(1) G φ
//!                  + ½ΣE∫∫F''(ρ div aᵢ)² φ − ΣE∫∫G āᵢ(φ) − slack
//! ```
//!
//! with `slack = E∫∫(C_χ|div u|F − G div u)φ ≥ 0`. The right side without
//! the slack is the upper bound; its excess over the left side is the gap.

use rayon::prelude::*;
use serde::Serialize;

use crate::dual_parabolic::{solve_terminal, DualProblem, GridField, ParabolicGrid, TorusFd};
use crate::error::{Error, Result};
use crate::geometry::field::{FnScalar, ScalarJet};
use crate::geometry::{Atlas, Coords, Point, Tensor, Torus, VectorField};
use crate::noise_frames::{bar_a_apply, lambda_op, NoiseFrame};
use crate::numerics::{mean_stderr, pairwise_sum};
use crate::spde_sim::{evolve_characteristics, DensityGrid, Dynamics, ParticleEnsemble, PeriodicGrid};

use super::config::{ExperimentConfig, ManifoldKind};
use super::moments::{build_velocity, effective_paths, frame_for, path_for};
use super::truncation::TruncationFamily;

/// Right-side contributions, averaged over paths.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct DualityTerms {
    /// `E∫F(ρ₀)φ(0)`.
    pub initial: f64,
    /// `E∫∫F u(φ)`.
    pub transport: f64,
    /// `−½ΣE∫∫F āᵢ(φ)`.
    pub bar_a: f64,
    /// `−½ΣE∫∫Λᵢ(1) G φ`.
    pub lambda: f64,
    /// `½ΣE∫∫F''(ρ div aᵢ)² φ`.
    pub second_order: f64,
    /// `−ΣE∫∫G āᵢ(φ)`.
    pub cross: f64,
}

impl DualityTerms {
    pub fn total(&self) -> f64 {
        self.initial + self.transport + self.bar_a + self.lambda + self.second_order + self.cross
    }

    fn add(&mut self, o: &Self) {
        self.initial += o.initial;
        self.transport += o.transport;
        self.bar_a += o.bar_a;
        self.lambda += o.lambda;
        self.second_order += o.second_order;
        self.cross += o.cross;
    }

    fn scale(&mut self, s: f64) {
        self.initial *= s;
        self.transport *= s;
        self.bar_a *= s;
        self.lambda *= s;
        self.second_order *= s;
        self.cross *= s;
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct DualityReport {
    pub t0: f64,
    pub mu: f64,
    pub c_chi: f64,
    pub n_paths: usize,
    /// `E∫F(ρ(t₀))φ(t₀)`.
    pub lhs: f64,
    pub terms: DualityTerms,
    /// Right side minus left side; the inequality holds when `gap ≥ −tol`.
    pub gap: f64,
    pub gap_stderr: f64,
    /// The dropped nonnegative term `E∫∫(C_χ|div u|F − G div u)φ`.
    pub slack: f64,
    /// `gap − slack`: zero up to time-stepping and interpolation error.
    pub identity_defect: f64,
    pub min_phi: f64,
}

/// `φ` and its coordinate gradient on the periodic grid, per time level.
struct TestFunctionGrid {
    grid: PeriodicGrid,
    phi: GridField,
    grad: Vec<[Vec<f64>; 2]>,
}

impl TestFunctionGrid {
    fn new(fd: &TorusFd, phi: GridField) -> Self {
        let grad = phi
            .values
            .iter()
            .map(|lvl| {
                let (gx, gy): (Vec<f64>, Vec<f64>) = (0..fd.len())
                    .map(|i| {
                        let g = fd.derivatives(lvl, i).0;
                        (g[0], g[1])
                    })
                    .unzip();
                [gx, gy]
            })
            .collect();
        Self { grid: PeriodicGrid::new(fd.n), phi, grad }
    }

    fn jet(&self, k: usize, p: &Point<2>) -> ScalarJet<2> {
        ScalarJet {
            value: self.grid.interpolate(&self.phi.values[k], p),
            grad: Coords::<2>::new(self.grid.interpolate(&self.grad[k][0], p), self.grid.interpolate(&self.grad[k][1], p)),
            hess: Tensor::<2>::zeros(),
        }
    }
}

fn const_one() -> ScalarJet<2> {
    ScalarJet { value: 1.0, grad: Coords::<2>::zeros(), hess: Tensor::<2>::zeros() }
}

/// Per-level integrands: `[F u(φ), −½ΣF āᵢ(φ), −½ΣΛᵢ(1)Gφ, ½ΣF''(ρ div aᵢ)²φ, −ΣG āᵢ(φ), slack]`.
const N_INTEGRANDS: usize = 6;

struct PathResult {
    lhs: f64,
    terms: DualityTerms,
    slack: f64,
}

/// Both sides of the duality inequality at `t₀` on T².
pub fn duality_check(cfg: &ExperimentConfig, t0: f64, family: &TruncationFamily) -> Result<DualityReport> {
    cfg.validate()?;
    if cfg.manifold != ManifoldKind::Torus {
        return Err(Error::UnsupportedManifold("the duality pairing is implemented on the flat torus".into()));
    }
    let steps = (t0 / cfg.dt).round() as usize;
    if steps == 0 || (steps as f64 * cfg.dt - t0).abs() > 1e-9 * t0.max(1.0) || t0 > cfg.horizon + 1e-12 {
        return Err(Error::Domain(format!("t0 = {t0} must be a positive multiple of dt = {} within the horizon", cfg.dt)));
    }
    let atlas = Torus::<2>::new();
    let u = build_velocity(cfg)?;
    let frame = frame_for(cfg, &atlas)?;
    let dynamics = Dynamics::new(&atlas, u.as_ref(), &frame);
    let c_chi = family.c_chi;

    let fd = TorusFd::new(cfg.n_per_axis);
    let b = FnScalar(|t: f64, p: &Point<2>| -c_chi * dynamics.div_u(t, p).map(f64::abs).unwrap_or(f64::NAN));
    let zero = FnScalar(|_t: f64, _p: &Point<2>| 0.0);
    let problem = DualProblem { b: &b, g: &zero, data: &zero, t0, dt: cfg.dt, p: cfg.p };
    let phi = solve_terminal(&fd, &problem)?;
    let min_phi = phi.values.iter().flatten().cloned().fold(f64::INFINITY, f64::min);
    let tf = TestFunctionGrid::new(&fd, phi);

    let quad = atlas.quadrature(cfg.n_per_axis)?;
    let start = ParticleEnsemble::from_quadrature(&quad, |p| cfg.initial_density(p))?;
    let horizon_cfg = ExperimentConfig { horizon: t0, ..cfg.clone() };

    let results: Vec<PathResult> = (0..effective_paths(cfg))
        .into_par_iter()
        .map(|path| {
            let bm = path_for(&horizon_cfg, frame.len(), path as u64)?;
            let mut ens = start.clone();
            let mut integrands: Vec<[f64; N_INTEGRANDS]> = Vec::with_capacity(steps + 1);
            let mut initial = 0.0;
            let mut lhs = 0.0;
            evolve_characteristics(&mut ens, &dynamics, &bm, |k, e| {
                let t = k as f64 * cfg.dt;
                let row = level_integrands(e, k, t, &tf, &dynamics, &frame, family)?;
                integrands.push(row);
                if k == 0 {
                    initial = e.pair(|p, r| family.eval(r).0 * tf.jet(0, p).value);
                }
                if k == steps {
                    lhs = e.pair(|p, r| family.eval(r).0 * tf.jet(steps, p).value);
                }
                Ok(())
            })?;
            let mut s = [0.0; N_INTEGRANDS];
            for (j, sj) in s.iter_mut().enumerate() {
                let col: Vec<f64> = integrands
                    .iter()
                    .enumerate()
                    .map(|(k, r)| if k == 0 || k == steps { 0.5 * r[j] } else { r[j] })
                    .collect();
                *sj = cfg.dt * pairwise_sum(&col);
            }
            let terms = DualityTerms {
                initial,
                transport: s[0],
                bar_a: s[1],
                lambda: s[2],
                second_order: s[3],
                cross: s[4],
            };
            Ok(PathResult { lhs, terms, slack: s[5] })
        })
        .collect::<Result<_>>()?;

    let n = results.len();
    let gaps: Vec<f64> = results.iter().map(|r| r.terms.total() - r.lhs).collect();
    let (gap, gap_stderr) = mean_stderr(&gaps);
    let (lhs, _) = mean_stderr(&results.iter().map(|r| r.lhs).collect::<Vec<_>>());
    let (slack, _) = mean_stderr(&results.iter().map(|r| r.slack).collect::<Vec<_>>());
    let mut terms = DualityTerms::default();
    for r in &results {
        terms.add(&r.terms);
    }
    terms.scale(1.0 / n as f64);
    Ok(DualityReport {
        t0,
        mu: family.mu,
        c_chi,
        n_paths: n,
        lhs,
        terms,
        gap,
        gap_stderr,
        slack,
        identity_defect: gap - slack,
        min_phi,
    })
}

fn level_integrands<U: VectorField<2> + ?Sized>(
    ens: &ParticleEnsemble<2>,
    k: usize,
    t: f64,
    tf: &TestFunctionGrid,
    dynamics: &Dynamics<'_, 2, Torus<2>, U>,
    frame: &NoiseFrame<2, Torus<2>>,
    family: &TruncationFamily,
) -> Result<[f64; N_INTEGRANDS]> {
    let mut cols: [Vec<f64>; N_INTEGRANDS] = Default::default();
    let one = const_one();
    for p in &ens.particles {
        let w = p.weight * (-p.exponent).exp();
        let rho = p.rho();
        let (f, _, f2) = family.eval(rho);
        let g = family.g(rho);
        let jet = tf.jet(k, &p.point);
        let div_u = dynamics.div_u(t, &p.point)?;
        let uphi = dynamics.u.value(t, &p.point).dot(&jet.grad);
        let (mut bar, mut lam, mut second) = (0.0, 0.0, 0.0);
        for i in 0..frame.len() {
            bar += bar_a_apply(frame, i, &jet, &p.point)?;
            lam += lambda_op(frame, i, &one, &p.point)?;
            let da = frame.div(i, &p.point)?;
            second += (rho * da).powi(2);
        }
        let row = [
            f * uphi,
            -0.5 * f * bar,
            -0.5 * lam * g * jet.value,
            0.5 * f2 * second * jet.value,
            -g * bar,
            (family.c_chi * div_u.abs() * f - g * div_u) * jet.value,
        ];
        for (c, v) in cols.iter_mut().zip(row) {
            c.push(w * v);
        }
    }
    Ok(cols.map(|c| pairwise_sum(&c)))
}
