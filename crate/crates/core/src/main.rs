use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};

use stochflow::dual_parabolic::{bound_report, solve_terminal, DualProblem, ParabolicGrid, TorusFd};
use stochflow::experiments::{
    build_truncation, build_velocity, concentration_experiment, duality_check, frame_check, l2_moment, smooth_check,
    truncation_property_suite, ConcentrationVelocity, ExperimentConfig, ManifoldKind, VelocityKind,
};
use stochflow::geometry::field::FnScalar;
use stochflow::geometry::{Atlas, Point, Sphere, Torus, VectorField};
use stochflow::spde_sim::{pathwise_solve, write_snapshot, DensityGrid, Dynamics, OversetSphereGrid, PeriodicGrid};
use stochflow::{Error, Result};

#[derive(Parser)]
#[command(name = "stochflow", version, about = "Stochastic continuity equations on T² and S²")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Section and ellipticity identities for every noise frame.
    FrameCheck {
        #[arg(long, default_value_t = 1000)]
        samples: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Heat-semigroup and velocity-smoothing properties.
    SmoothCheck {
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Semi-Lagrangian density snapshots, one per path.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Terminal-value test function on T² with its bound report.
    DualSolve {
        /// `zero`, `constant:<c>` (b ≡ −c) or `concentration`.
        #[arg(long, default_value = "concentration")]
        b_profile: String,
        #[arg(long, default_value_t = 0.5)]
        t0: f64,
        #[arg(long, default_value_t = 5.0)]
        p: f64,
        #[arg(long, default_value_t = 64)]
        n: usize,
        #[arg(long, default_value_t = 1e-3)]
        dt: f64,
        /// Truncation scale fixing C_χ for the concentration profile.
        #[arg(long, default_value_t = 100.0)]
        mu: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// L² moment run, or the 2×2 design for the concentration velocity.
    L2Experiment {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Also evaluate the duality pairing at this time.
        #[arg(long)]
        duality_t0: Option<f64>,
    },
    /// Bounds of the truncation family on dense grids.
    TruncationSuite {
        #[arg(long, value_delimiter = ',', default_value = "1,10,100")]
        mu: Vec<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn create(dir: &Path, name: &str) -> Result<BufWriter<File>> {
    fs::create_dir_all(dir)?;
    Ok(BufWriter::new(File::create(dir.join(name))?))
}

fn write_manifest(dir: &Path, command: &str, cfg: Option<&ExperimentConfig>, seed: u64, started: Instant) -> Result<()> {
    let manifest = serde_json::json!({
        "command": command,
        "version": env!("CARGO_PKG_VERSION"),
        "seed": seed,
        "config_hash": cfg.map(|c| format!("{:016x}", c.hash())),
        "config": cfg.map(|c| c.to_toml()),
        "wall_time_s": started.elapsed().as_secs_f64(),
    });
    let mut f = create(dir, "manifest.json")?;
    writeln!(f, "{}", serde_json::to_string_pretty(&manifest).map_err(|e| Error::Usage(e.to_string()))?)?;
    Ok(())
}

fn frame_cmd(samples: usize, seed: u64, out: Option<PathBuf>) -> Result<bool> {
    let rows = frame_check(samples, seed)?;
    let mut ok = true;
    println!("{:<8} {:<11} {:>14} {:>14}", "manifold", "frame", "section", "ellipticity");
    for r in &rows {
        println!("{:<8} {:<11} {:>14.3e} {:>14.3e}", r.manifold, r.frame, r.section_defect, r.ellipticity);
        ok &= r.section_defect <= 1e-10 && r.ellipticity <= 1e-6;
    }
    if let Some(dir) = out {
        let mut w = csv::Writer::from_writer(create(&dir, "frame_check.csv")?);
        for r in &rows {
            w.serialize(r)?;
        }
        w.flush()?;
    }
    Ok(ok)
}

fn smooth_cmd(seed: u64, out: Option<PathBuf>) -> Result<bool> {
    let c = smooth_check(seed)?;
    println!("semigroup     {:.3e}", c.semigroup);
    println!("mean          {:.3e}", c.mean);
    println!("contraction   {:.3e}", c.contraction_excess);
    println!("commutation   {:.3e}", c.commutation);
    for (t, e) in c.tau.iter().zip(&c.velocity_error) {
        println!("tau {t:<9} |u_tau - u| = {e:.6e}");
    }
    if let Some(dir) = out {
        let mut w = csv::Writer::from_writer(create(&dir, "smooth_check.csv")?);
        w.write_record(["tau", "velocity_error"])?;
        for (t, e) in c.tau.iter().zip(&c.velocity_error) {
            w.write_record([format!("{t:.17e}"), format!("{e:.17e}")])?;
        }
        w.flush()?;
    }
    let tol = 1e-8;
    Ok(c.semigroup <= tol && c.mean <= tol && c.contraction_excess <= tol && c.commutation <= tol && c.monotone())
}

fn simulate_on<A: Atlas<2> + Clone, G: DensityGrid<2>>(
    cfg: &ExperimentConfig,
    atlas: &A,
    grid: &G,
    u: &dyn VectorField<2>,
    out: &Path,
) -> Result<()> {
    let frame = if cfg.noise {
        stochflow::noise_frames::NoiseFrame::build(atlas, cfg.frame)?
    } else {
        stochflow::noise_frames::NoiseFrame::none(atlas)
    };
    let dynamics = Dynamics::new(atlas, u, &frame);
    let rho0 = |p: &Point<2>| cfg.initial_density(p);
    let paths = if cfg.noise { cfg.n_paths } else { 1 };
    let mut mass = csv::Writer::from_writer(create(out, "mass.csv")?);
    mass.write_record(["path", "t", "mass", "l2_squared"])?;
    for path in 0..paths {
        let bm = if cfg.noise {
            stochflow::spde_sim::sample_brownian(frame.len(), cfg.horizon, cfg.dt, cfg.seed, path as u64)?
        } else {
            stochflow::spde_sim::BrownianPaths::silent(cfg.horizon, cfg.dt)?
        };
        let keep = (bm.steps() / 10).max(1);
        let traj = pathwise_solve(&rho0, &dynamics, &bm, grid, keep)?;
        for s in &traj.states {
            let sq: Vec<f64> = s.values.iter().map(|v| v * v).collect();
            mass.write_record([
                path.to_string(),
                format!("{:.17e}", s.t),
                format!("{:.17e}", grid.integrate(&s.values)),
                format!("{:.17e}", grid.integrate(&sq)),
            ])?;
        }
        write_snapshot(create(out, &format!("snapshot_path{path}.csv"))?, grid, traj.last(), cfg.seed)?;
    }
    mass.flush()?;
    Ok(())
}

fn simulate_cmd(config: &Path, out: &Path) -> Result<()> {
    let started = Instant::now();
    let cfg = ExperimentConfig::load(config)?;
    let u = build_velocity(&cfg)?;
    match cfg.manifold {
        ManifoldKind::Torus => simulate_on(&cfg, &Torus::<2>::new(), &PeriodicGrid::new(cfg.n_per_axis), u.as_ref(), out)?,
        ManifoldKind::Sphere => {
            let s = Sphere::new();
            simulate_on(&cfg, &s, &OversetSphereGrid::new(&s, cfg.n_per_axis), u.as_ref(), out)?
        }
    }
    write_manifest(out, "simulate", Some(&cfg), cfg.seed, started)
}

fn dual_cmd(profile: &str, t0: f64, p: f64, n: usize, dt: f64, mu: f64, out: &Path) -> Result<()> {
    let started = Instant::now();
    let conc = ConcentrationVelocity::for_grid(n);
    let c_chi = build_truncation(mu)?.c_chi;
    let b: Box<dyn Fn(f64, &Point<2>) -> f64 + Sync> = match profile {
        "zero" => Box::new(|_, _| 0.0),
        "concentration" => Box::new(move |_, x| -c_chi * conc.divergence(x).abs()),
        other => match other.strip_prefix("constant:").map(str::parse::<f64>) {
            Some(Ok(c)) => Box::new(move |_, _| -c),
            _ => return Err(Error::Usage(format!("unknown b profile `{other}`"))),
        },
    };
    let b = FnScalar(b);
    let zero = FnScalar(|_: f64, _: &Point<2>| 0.0);
    let grid = TorusFd::new(n);
    let problem = DualProblem { b: &b, g: &zero, data: &zero, t0, dt, p };
    let phi = solve_terminal(&grid, &problem)?;
    let report = bound_report(&grid, &phi, &b, p);
    println!("{}", serde_json::to_string_pretty(&report).map_err(|e| Error::Usage(e.to_string()))?);
    let mut w = csv::Writer::from_writer(create(out, "phi0.csv")?);
    w.write_record(["x1", "x2", "phi"])?;
    for (x, v) in grid.nodes().iter().zip(&phi.values[0]) {
        w.write_record([format!("{:.17e}", x.x[0]), format!("{:.17e}", x.x[1]), format!("{v:.17e}")])?;
    }
    w.flush()?;
    let mut w = csv::Writer::from_writer(create(out, "bound.csv")?);
    w.serialize(report)?;
    w.flush()?;
    write_manifest(out, "dual-solve", None, 0, started)
}

fn l2_cmd(config: &Path, out: &Path, duality_t0: Option<f64>) -> Result<()> {
    let started = Instant::now();
    let cfg = ExperimentConfig::load(config)?;
    if cfg.velocity == VelocityKind::Concentration {
        let r = concentration_experiment(&cfg)?;
        r.write_csv(create(out, "design.csv")?)?;
        r.write_norms_csv(create(out, "div_norms.csv")?)?;
        for c in &r.cells {
            let tag = if c.noise { "on" } else { "off" };
            c.run.write_csv(create(out, &format!("phi_n{}_noise_{tag}.csv", c.n_per_axis))?)?;
        }
        println!("noise-off sup growth  {:.4}", r.noise_off_growth());
        println!("noise-on sup change   {:.4}", r.noise_on_change());
        println!("div L^p change        {:.4}", r.lp_change());
        println!("div L^inf growth      {:.4}", r.linf_growth());
    } else {
        let r = l2_moment(&cfg)?;
        r.write_csv(create(out, "phi.csv")?)?;
        if let Some(f) = r.fit {
            println!("phi0_hat = {:.6e}, k_hat = {:.6e}, residual = {:.3e}", f.phi0, f.k, f.residual);
        }
        println!("overflow events: {}", r.overflow.len());
    }
    if let Some(t0) = duality_t0 {
        let d = duality_check(&cfg, t0, &build_truncation(cfg.mu)?)?;
        println!("duality gap {:.6e} ± {:.3e} (lhs {:.6e})", d.gap, d.gap_stderr, d.lhs);
        let mut w = csv::Writer::from_writer(create(out, "duality.csv")?);
        w.write_record(["t0", "mu", "lhs", "rhs", "gap", "gap_stderr", "slack", "identity_defect"])?;
        w.write_record([d.t0, d.mu, d.lhs, d.terms.total(), d.gap, d.gap_stderr, d.slack, d.identity_defect].map(|v| format!("{v:.17e}")))?;
        w.flush()?;
    }
    write_manifest(out, "l2-experiment", Some(&cfg), cfg.seed, started)
}

fn truncation_cmd(mus: &[f64], out: Option<PathBuf>) -> Result<bool> {
    let mut all = Vec::new();
    for &mu in mus {
        let fam = build_truncation(mu)?;
        println!("mu = {mu}: A0 = {:.6}, A1 = {:.6}, C_chi = {:.6}", fam.a0, fam.a1, fam.c_chi);
        for r in truncation_property_suite(&fam) {
            println!("  {:<44} {:>12.3e}  {}", r.property, r.worst_excess, if r.pass { "pass" } else { "FAIL" });
            all.push(r);
        }
    }
    if let Some(dir) = out {
        let mut w = csv::Writer::from_writer(create(&dir, "truncation.csv")?);
        for r in &all {
            w.serialize(r)?;
        }
        w.flush()?;
    }
    Ok(all.iter().all(|r| r.pass))
}

fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::FrameCheck { samples, seed, out } => frame_cmd(samples, seed, out),
        Command::SmoothCheck { seed, out } => smooth_cmd(seed, out),
        Command::Simulate { config, out } => simulate_cmd(&config, &out).map(|_| true),
        Command::DualSolve { b_profile, t0, p, n, dt, mu, out } => {
            dual_cmd(&b_profile, t0, p, n, dt, mu, &out).map(|_| true)
        }
        Command::L2Experiment { config, out, duality_t0 } => l2_cmd(&config, &out, duality_t0).map(|_| true),
        Command::TruncationSuite { mu, out } => truncation_cmd(&mu, out),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
