use nalgebra::{SMatrix, SVector, Vector2};

use super::*;
use crate::experiments::{build_truncation, SineCompression};
use crate::geometry::battery::{TorusFn, TrigField2};
use crate::geometry::field::{Exact, FnScalar, FnVector, ScalarFormula};
use crate::geometry::sphere::Sphere;
use crate::geometry::torus::TWO_PI;
use crate::geometry::{Atlas, Coords, Point, Real, Torus, VectorField};
use crate::noise_frames::NoiseFrame;
use crate::numerics::observed_order;

fn zero_field<const D: usize>() -> FnVector<impl Fn(f64, &Point<D>) -> Coords<D> + Sync> {
    FnVector(|_t: f64, _p: &Point<D>| Coords::<D>::zeros())
}

struct Bump;
impl ScalarFormula<2> for Bump {
    fn eval<T: Real>(&self, _t: f64, _c: usize, x: &SVector<T, 2>) -> T {
        x[0].sin() * x[1].cos() * 0.5 + 1.0
    }
}

fn rho0(p: &Point<2>) -> f64 {
    Bump.eval::<f64>(0.0, 0, &p.x)
}

fn trig_velocity() -> Exact<TrigField2> {
    Exact(TrigField2 { c: SMatrix::<f64, 2, 4>::new(0.6, 0.3, -0.4, 0.2, -0.3, 0.5, 0.2, 0.4) })
}

#[test]
fn additive_noise_shifts_exactly() {
    let torus = Torus::<2>::new();
    let u = zero_field::<2>();
    let frame = NoiseFrame::coordinate(&torus).unwrap();
    let dynamics = Dynamics::new(&torus, &u, &frame);
    let path = sample_brownian(2, 1.0, 0.01, 3, 0).unwrap();
    let z = Point::new(0, Vector2::new(1.0, 2.5));
    let mut p = z;
    for k in 0..path.steps() {
        p = dynamics.strat_step(&p, path.increment(k), path.dt, 1.0 - k as f64 * path.dt).unwrap().point;
        assert_eq!(p.chart, 0);
    }
    let w = path.value_at(path.steps());
    let expect = z.x - Vector2::new(w[0], w[1]) * 2f64.sqrt();
    let d = Torus::<2>::periodic_delta(&p.x, &expect);
    assert!(d.norm() < 1e-12, "{d:?}");
}

/// Reference solution of `x' = u(x)` by many RK4 substeps.
fn rk4<U: VectorField<2>>(u: &U, x: Coords<2>, t: f64, substeps: usize) -> Coords<2> {
    let h = t / substeps as f64;
    let f = |x: Coords<2>| u.value(0.0, &Point::new(0, x));
    let mut x = x;
    for _ in 0..substeps {
        let k1 = f(x);
        let k2 = f(x + k1 * (h / 2.0));
        let k3 = f(x + k2 * (h / 2.0));
        let k4 = f(x + k3 * h);
        x += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);
    }
    x
}

#[test]
fn heun_local_error_is_third_order() {
    let torus = Torus::<2>::new();
    let u = trig_velocity();
    let frame = NoiseFrame::none(&torus);
    let dynamics = Dynamics::new(&torus, &u, &frame);
    let x0 = Vector2::new(0.7, 1.9);
    let mut errs = vec![];
    let hs = [0.1, 0.05, 0.025];
    for &dt in &hs {
        let step = dynamics.forward_step(&Point::new(0, x0), &[], dt, 0.0).unwrap();
        let exact = rk4(&u, x0, dt, 200);
        errs.push(Torus::<2>::periodic_delta(&step.point.x, &exact).norm());
    }
    let order = observed_order(&hs, &errs);
    assert!((order - 3.0).abs() < 0.3, "order {order}, {errs:?}");
}

#[test]
fn chart_switch_round_trip_preserves_point() {
    let sphere = Sphere::new();
    let p = Point::new(0, Vector2::new(1.7, -1.6));
    let q = sphere.normalize(p);
    assert_eq!(q.chart, 1);
    let back = crate::geometry::to_chart(&sphere, &q, 0);
    assert!((back.x - p.x).norm() < 1e-10);
    let u = zero_field::<2>();
    let frame = NoiseFrame::partition(&sphere).unwrap();
    let dynamics = Dynamics::new(&sphere, &u, &frame);
    let s = dynamics.strat_step(&p, &[0.0; 4], 0.01, 0.0).unwrap();
    assert!((Sphere::embed(&s.point) - Sphere::embed(&p)).norm() < 1e-10);
}

#[test]
fn divergence_free_transport_keeps_weights() {
    let torus = Torus::<2>::new();
    let u = FnVector(|_t: f64, p: &Point<2>| Vector2::new(p.x[1].sin(), p.x[0].cos()));
    let frame = NoiseFrame::coordinate(&torus).unwrap();
    let dynamics = Dynamics::new(&torus, &u, &frame);
    let quad = torus.quadrature(8).unwrap();
    let mut ens = ParticleEnsemble::from_quadrature(&quad, rho0).unwrap();
    let path = sample_brownian(2, 0.5, 0.01, 9, 0).unwrap();
    let events = evolve_characteristics(&mut ens, &dynamics, &path, |_, _| Ok(())).unwrap();
    assert!(events.is_empty());
    for p in &ens.particles {
        assert!(p.exponent.abs() < 1e-6, "{}", p.exponent);
    }
}

#[test]
fn compressible_exponent_matches_closed_form() {
    let torus = Torus::<2>::new();
    let u = SineCompression { c: 0.8 };
    let frame = NoiseFrame::none(&torus);
    let dynamics = Dynamics::new(&torus, &u, &frame);
    let t = 0.5;
    let mut errs = vec![];
    let dts = [0.02, 0.01, 0.005];
    for &dt in &dts {
        let path = BrownianPaths::silent(t, dt).unwrap();
        let quad = torus.quadrature(6).unwrap();
        let mut ens = ParticleEnsemble::from_quadrature(&quad, |_| 1.0).unwrap();
        evolve_characteristics(&mut ens, &dynamics, &path, |_, _| Ok(())).unwrap();
        let mut worst: f64 = 0.0;
        for p in &ens.particles {
            let x = p.point.x[0];
            let expected = u.back_jacobian(t, x).ln();
            worst = worst.max((p.exponent - expected).abs());
            let start = u.flow(-t, x);
            let y0 = quad.nodes.iter().map(|n| n.point.x[0]).fold(f64::NAN, |acc, v| {
                if (Torus::<1>::periodic_delta(&SVector::<f64, 1>::new(v), &SVector::<f64, 1>::new(start)))[0].abs()
                    < 0.1
                {
                    v
                } else {
                    acc
                }
            });
            assert!(y0.is_finite());
        }
        errs.push(worst);
    }
    let order = observed_order(&dts, &errs);
    assert!(order > 1.8, "order {order} {errs:?}");
    assert!(errs[2] < 1e-4);
}

#[test]
fn noise_only_grid_solution_is_shifted_data() {
    let torus = Torus::<2>::new();
    let u = zero_field::<2>();
    let frame = NoiseFrame::coordinate(&torus).unwrap();
    let dynamics = Dynamics::new(&torus, &u, &frame);
    let path = sample_brownian(2, 0.25, 0.005, 4, 2).unwrap();
    let mut errs = vec![];
    for n in [32usize, 64] {
        let grid = PeriodicGrid::new(n);
        let traj = pathwise_solve(&rho0, &dynamics, &path, &grid, 1000).unwrap();
        let w = path.value_at(path.steps());
        let shift = Vector2::new(w[0], w[1]) * 2f64.sqrt();
        let worst = grid
            .nodes()
            .iter()
            .zip(&traj.last().values)
            .map(|(z, v)| (v - rho0(&Point::new(0, z.x - shift))).abs())
            .fold(0.0, f64::max);
        errs.push(worst);
    }
    // interpolation error only: shrinks with the grid, small at n = 64
    assert!(errs[1] < errs[0] / 4.0, "{errs:?}");
    assert!(errs[1] < 1e-3, "{errs:?}");
}

#[test]
fn constant_density_stays_constant_without_compression() {
    let torus = Torus::<2>::new();
    let u = FnVector(|_t: f64, p: &Point<2>| Vector2::new(p.x[1].sin(), 0.3));
    let frame = NoiseFrame::coordinate(&torus).unwrap();
    let dynamics = Dynamics::new(&torus, &u, &frame);
    let path = sample_brownian(2, 0.2, 0.01, 4, 0).unwrap();
    let grid = PeriodicGrid::new(16);
    let traj = pathwise_solve(&|_: &Point<2>| 1.0, &dynamics, &path, &grid, 1).unwrap();
    assert_eq!(traj.states.len(), path.steps() + 1);
    for s in &traj.states {
        for v in &s.values {
            assert!((v - 1.0).abs() < 1e-6, "{v}");
        }
    }
}

#[test]
fn grid_mass_drift_is_small_and_time_dominated() {
    let torus = Torus::<2>::new();
    let u = SineCompression { c: 1.0 };
    let frame = NoiseFrame::coordinate(&torus).unwrap();
    let dynamics = Dynamics::new(&torus, &u, &frame);
    let grid = PeriodicGrid::new(64);
    let m0 = grid.integrate(&grid.nodes().iter().map(rho0).collect::<Vec<_>>());
    let base = sample_brownian(2, 0.5, 1e-3, 21, 0).unwrap();
    let mut drift = vec![];
    for f in [4usize, 2] {
        let path = base.coarsen(f).unwrap();
        let traj = pathwise_solve(&rho0, &dynamics, &path, &grid, 10_000).unwrap();
        drift.push((grid.integrate(&traj.last().values) - m0).abs() / m0);
    }
    assert!(drift.iter().all(|d| *d < 1e-3), "{drift:?}");
}

#[test]
fn flow_composes_over_split_paths() {
    let torus = Torus::<2>::new();
    let u = trig_velocity();
    let frame = NoiseFrame::coordinate(&torus).unwrap();
    let dynamics = Dynamics::new(&torus, &u, &frame);
    let path = sample_brownian(2, 0.4, 0.01, 5, 1).unwrap();
    let quad = torus.quadrature(4).unwrap();
    let mut whole = ParticleEnsemble::from_quadrature(&quad, rho0).unwrap();
    evolve_characteristics(&mut whole, &dynamics, &path, |_, _| Ok(())).unwrap();
    let half = path.steps() / 2;
    let split = |range: std::ops::Range<usize>| BrownianPaths {
        increments: path.increments[range.start * 2..range.end * 2].to_vec(),
        horizon: (range.end - range.start) as f64 * path.dt,
        ..path.clone()
    };
    let mut parts = ParticleEnsemble::from_quadrature(&quad, rho0).unwrap();
    evolve_characteristics(&mut parts, &dynamics, &split(0..half), |_, _| Ok(())).unwrap();
    evolve_characteristics(&mut parts, &dynamics, &split(half..path.steps()), |_, _| Ok(())).unwrap();
    for (a, b) in whole.particles.iter().zip(&parts.particles) {
        assert!((a.point.x - b.point.x).norm() < 1e-12);
        assert!((a.exponent - b.exponent).abs() < 1e-12);
    }
    // and against a finer discretization of the same path
    let fine = sample_brownian(2, 0.4, 0.0025, 5, 1).unwrap();
    let coarse = fine.coarsen(4).unwrap();
    let run = |p: &BrownianPaths| {
        let mut e = ParticleEnsemble::from_quadrature(&quad, rho0).unwrap();
        evolve_characteristics(&mut e, &dynamics, p, |_, _| Ok(())).unwrap();
        e
    };
    let (a, b) = (run(&fine), run(&coarse));
    for (x, y) in a.particles.iter().zip(&b.particles) {
        assert!(Torus::<2>::periodic_delta(&x.point.x, &y.point.x).norm() < 0.05);
    }
}

fn particle_trajectory(path: &BrownianPaths, dynamics: &Dynamics<'_, 2, Torus<2>, Exact<TrigField2>>) -> ParticleTrajectory<2> {
    let quad = Torus::<2>::new().quadrature(16).unwrap();
    ParticleTrajectory::record(ParticleEnsemble::from_quadrature(&quad, rho0).unwrap(), dynamics, path).unwrap()
}

#[test]
fn unit_test_function_gives_mass_drift() {
    let torus = Torus::<2>::new();
    let u = trig_velocity();
    let frame = NoiseFrame::coordinate(&torus).unwrap();
    let dynamics = Dynamics::new(&torus, &u, &frame);
    let path = sample_brownian(2, 0.2, 0.01, 8, 0).unwrap();
    let one = FnScalar(|_t: f64, _p: &Point<2>| 1.0);
    let grid = PeriodicGrid::new(32);
    let traj = pathwise_solve(&rho0, &dynamics, &path, &grid, 1).unwrap();
    let r = weak_residual(&traj, &dynamics, &TestFunction::fixed(&one), &path).unwrap();
    let drift = grid.integrate(&traj.last().values) - grid.integrate(&traj.states[0].values);
    assert!((r.raw - drift).abs() < 1e-12);
    assert_eq!(r.raw, r.compensated);
    // particles conserve mass exactly
    let p = particle_trajectory(&path, &dynamics);
    let r = weak_residual(&p, &dynamics, &TestFunction::fixed(&one), &path).unwrap();
    assert!(r.raw.abs() < 1e-10);
}

#[test]
fn identity_renormalization_reduces_to_weak_form() {
    let torus = Torus::<2>::new();
    let u = trig_velocity();
    let frame = NoiseFrame::coordinate(&torus).unwrap();
    let dynamics = Dynamics::new(&torus, &u, &frame);
    let path = sample_brownian(2, 0.1, 0.01, 8, 1).unwrap();
    let traj = particle_trajectory(&path, &dynamics);
    let psi = Exact(TorusFn::Product);
    let tf = TestFunction::fixed(&psi);
    let a = weak_residual(&traj, &dynamics, &tf, &path).unwrap();
    let b = renormalized_residual(&traj, &dynamics, &tf, &Identity, &path).unwrap();
    assert_eq!(a, b);
    let err = weak_residual(&traj, &dynamics, &tf, &sample_brownian(2, 0.2, 0.01, 8, 1).unwrap());
    assert!(matches!(err, Err(crate::Error::Usage(_))));
}

/// Classical weak residual, assembled independently from the particle states.
#[test]
fn deterministic_residual_matches_direct_sum() {
    let torus = Torus::<2>::new();
    let u = trig_velocity();
    let frame = NoiseFrame::none(&torus);
    let dynamics = Dynamics::new(&torus, &u, &frame);
    let path = BrownianPaths::silent(0.2, 0.01).unwrap();
    let traj = particle_trajectory(&path, &dynamics);
    let psi = Exact(TorusFn::Wave);
    let r = weak_residual(&traj, &dynamics, &TestFunction::fixed(&psi), &path).unwrap();
    let pairing = |k: usize, g: &dyn Fn(&Point<2>) -> f64| -> f64 {
        traj.levels[k].pair(|x, r| r * g(x))
    };
    let psi_v = |x: &Point<2>| TorusFn::Wave.eval::<f64>(0.0, 0, &x.x);
    let transport = |x: &Point<2>| {
        let g = -(x.x[0] + 2.0 * x.x[1]).sin();
        u.value(0.0, x).dot(&Vector2::new(g, 2.0 * g))
    };
    let mut direct = pairing(path.steps(), &psi_v) - pairing(0, &psi_v);
    for k in 0..path.steps() {
        direct -= pairing(k, &transport) * path.dt;
    }
    assert!((r.raw - direct).abs() < 1e-12, "{} vs {}", r.raw, direct);
}

fn residual_order(renorm: &dyn Renormalization, psi: TorusFn, moving: bool) -> f64 {
    let torus = Torus::<2>::new();
    let u = trig_velocity();
    let frame = NoiseFrame::coordinate(&torus).unwrap();
    let dynamics = Dynamics::new(&torus, &u, &frame);
    let theta = FnScalar(move |t: f64, p: &Point<2>| (1.0 + t * t) * psi.eval::<f64>(0.0, 0, &p.x));
    let fixed = Exact(psi);
    let tf = if moving { TestFunction::moving(&theta) } else { TestFunction::fixed(&fixed) };
    let fine = 128;
    let t_end = 0.25;
    let paths = 6;
    let mut rms = vec![];
    let mut dts = vec![];
    for factor in [4usize, 2, 1] {
        let mut acc = 0.0;
        for k in 0..paths {
            let path = sample_brownian(2, t_end, t_end / fine as f64, 77, k).unwrap().coarsen(factor).unwrap();
            let quad = torus.quadrature(12).unwrap();
            let traj = ParticleTrajectory::record(ParticleEnsemble::from_quadrature(&quad, rho0).unwrap(), &dynamics, &path)
                .unwrap();
            acc += renormalized_residual(&traj, &dynamics, &tf, renorm, &path).unwrap().compensated.powi(2);
        }
        rms.push((acc / paths as f64).sqrt());
        dts.push(t_end / fine as f64 * factor as f64);
    }
    observed_order(&dts, &rms)
}

#[test]
fn residuals_converge_at_first_order() {
    let mu = build_truncation(1.0).unwrap();
    assert!(residual_order(&Identity, TorusFn::Wave, false) > 0.8);
    assert!(residual_order(&mu, TorusFn::Sin1, false) > 0.8);
    assert!(residual_order(&mu, TorusFn::Wave, true) > 0.8);
}

#[test]
fn time_dependent_test_function_adds_time_derivative() {
    // θ(t)φ with θ(t) = 1 + t²: the residual equals the per-term assembly
    // with φ's pairings weighted by θ(t_k) plus the ∂_tθ φ drift term.
    let torus = Torus::<2>::new();
    let u = trig_velocity();
    let frame = NoiseFrame::coordinate(&torus).unwrap();
    let dynamics = Dynamics::new(&torus, &u, &frame);
    let path = sample_brownian(2, 0.1, 0.01, 12, 0).unwrap();
    let traj = particle_trajectory(&path, &dynamics);
    let theta = |t: f64| 1.0 + t * t;
    let moving = FnScalar(move |t: f64, p: &Point<2>| theta(t) * TorusFn::Sin1.eval::<f64>(0.0, 0, &p.x));
    let r = weak_residual(&traj, &dynamics, &TestFunction::moving(&moving), &path).unwrap();
    // per-term: φ = sin x¹, a_i = √2 e_i, Δφ = −φ, ā = 0
    let pair = |k: usize, g: &dyn Fn(&Point<2>) -> f64| traj.levels[k].pair(|x, r| r * g(x));
    let phi = |x: &Point<2>| x.x[0].sin();
    let dphi = |x: &Point<2>| x.x[0].cos();
    let n = path.steps();
    let mut direct = theta(traj.times[n]) * pair(n, &phi) - theta(0.0) * pair(0, &phi);
    for k in 0..n {
        let t = traj.times[k];
        let dw = path.increment(k);
        let drift = pair(k, &|x| u.value(t, x)[0] * dphi(x)) * theta(t) + pair(k, &phi) * 2.0 * t
            - pair(k, &phi) * theta(t);
        direct -= drift * path.dt + theta(t) * 2f64.sqrt() * pair(k, &dphi) * dw[0];
    }
    assert!((r.raw - direct).abs() < 1e-7, "{} vs {}", r.raw, direct);
}

#[test]
fn sphere_grid_mass_drift_shrinks_with_dt() {
    let sphere = Sphere::new();
    let u = zero_field::<2>();
    let frame = NoiseFrame::partition(&sphere).unwrap();
    let dynamics = Dynamics::new(&sphere, &u, &frame);
    let grid = OversetSphereGrid::new(&sphere, 32);
    let f = |p: &Point<2>| {
        let x = Sphere::embed(p);
        1.0 + 0.5 * x[0] * x[2]
    };
    let m0 = grid.integrate(&grid.nodes().iter().map(f).collect::<Vec<_>>());
    assert!((m0 - 4.0 * std::f64::consts::PI).abs() < 1e-3, "{m0}");
    let mut sq = [0.0; 2];
    for seed in 0..3 {
        let base = sample_brownian(4, 0.05, 0.00125, seed, 0).unwrap();
        for (k, fac) in [4usize, 1].into_iter().enumerate() {
            let traj = pathwise_solve(&f, &dynamics, &base.coarsen(fac).unwrap(), &grid, 1000).unwrap();
            sq[k] += (grid.integrate(&traj.last().values) / m0 - 1.0).powi(2);
        }
    }
    let rms = sq.map(|v| (v / 3.0).sqrt());
    assert!(rms[1] < 5e-3 && rms[0] / rms[1] > 2.0, "{rms:?}");
}

#[test]
fn snapshot_has_header_and_rows() {
    let grid = PeriodicGrid::new(4);
    let state = DensityState { t: 0.5, path_id: 3, values: (0..16).map(|k| k as f64).collect() };
    let mut buf = Vec::new();
    write_snapshot(&mut buf, &grid, &state, 99).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let mut lines = text.lines();
    let header: serde_json::Value = serde_json::from_str(lines.next().unwrap().trim_start_matches("# ")).unwrap();
    assert_eq!(header["nx"], 4);
    assert_eq!(header["seed"], 99);
    assert_eq!(lines.next().unwrap(), "chart,i,j,rho");
    assert_eq!(lines.count(), 16);
    let _ = TWO_PI;
}
