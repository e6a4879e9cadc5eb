use nalgebra::Vector2;

use super::*;
use crate::geometry::field::FnScalar;
use crate::geometry::sphere::Sphere;
use crate::geometry::torus::TWO_PI;
use crate::geometry::Point;
use crate::numerics::observed_order;

fn constant(c: f64) -> FnScalar<impl Fn(f64, &Point<2>) -> f64 + Sync> {
    FnScalar(move |_t: f64, _p: &Point<2>| c)
}

#[test]
fn torus_eigenfunction_decays_exponentially() {
    let grid = TorusFd::new(128);
    let zero = constant(0.0);
    let c = FnScalar(|_t: f64, p: &Point<2>| (p.x[0] + 2.0).sin());
    let problem = DualProblem { b: &zero, g: &zero, data: &c, t0: 0.1, dt: 1e-3, p: 5.0 };
    let v = solve_cauchy(&grid, &problem).unwrap();
    let decay = (-0.1f64).exp();
    let worst = grid
        .nodes()
        .iter()
        .zip(v.last())
        .map(|(p, x)| (x - decay * c.value(0.0, p)).abs())
        .fold(0.0, f64::max);
    assert!(worst < 1e-4, "{worst}");
}

#[test]
fn sphere_first_harmonic_decays_exponentially() {
    let sphere = Sphere::new();
    let grid = SphereOverset::new(&sphere, 81);
    let zero = constant(0.0);
    let c = FnScalar(|_t: f64, p: &Point<2>| Sphere::embed(p)[2]);
    let problem = DualProblem { b: &zero, g: &zero, data: &c, t0: 0.1, dt: 1e-3, p: 5.0 };
    let v = solve_cauchy(&grid, &problem).unwrap();
    let decay = (-2.0f64 * 0.1).exp();
    let worst = grid
        .nodes()
        .iter()
        .zip(v.last())
        .filter(|(p, _)| p.x.norm() <= 1.0)
        .map(|(p, x)| (x - decay * c.value(0.0, p)).abs())
        .fold(0.0, f64::max);
    assert!(worst < 2e-3, "{worst}");
}

#[test]
fn constant_source_gives_linear_growth() {
    let grid = TorusFd::new(16);
    let zero = constant(0.0);
    let g = constant(0.7);
    let problem = DualProblem { b: &zero, g: &g, data: &zero, t0: 0.5, dt: 0.01, p: 5.0 };
    let v = solve_cauchy(&grid, &problem).unwrap();
    for (t, lvl) in v.times.iter().zip(&v.values) {
        for x in lvl {
            assert!((x - 0.7 * t).abs() < 1e-12);
        }
    }
}

struct Manufactured;
impl Manufactured {
    fn v(t: f64, x: &Vector2<f64>) -> f64 {
        (-t).exp() * x[0].sin() * x[1].cos() + 0.3 * t * (x[0] + x[1]).cos()
    }
    fn b(x: &Vector2<f64>) -> f64 {
        -(1.0 + x[0].cos() * x[1].sin())
    }
    /// `∂_t v − Δv + bv`.
    fn g(t: f64, x: &Vector2<f64>) -> f64 {
        let dv = -(-t).exp() * x[0].sin() * x[1].cos() + 0.3 * (x[0] + x[1]).cos();
        let lap = -2.0 * (-t).exp() * x[0].sin() * x[1].cos() - 0.6 * t * (x[0] + x[1]).cos();
        dv - lap + Self::b(x) * Self::v(t, x)
    }
}

fn manufactured_error(n: usize, t0: f64, dt: f64) -> f64 {
    let grid = TorusFd::new(n);
    let b = FnScalar(|_t: f64, p: &Point<2>| Manufactured::b(&p.x));
    let g = FnScalar(|t: f64, p: &Point<2>| Manufactured::g(t, &p.x));
    let c = FnScalar(|_t: f64, p: &Point<2>| Manufactured::v(0.0, &p.x));
    let problem = DualProblem { b: &b, g: &g, data: &c, t0, dt, p: 5.0 };
    let v = solve_cauchy(&grid, &problem).unwrap();
    grid.nodes().iter().zip(v.last()).map(|(p, x)| (x - Manufactured::v(t0, &p.x)).abs()).fold(0.0, f64::max)
}

#[test]
fn manufactured_solution_time_order() {
    let dts = [0.05, 0.025, 0.0125];
    let errs: Vec<f64> = dts.iter().map(|&dt| manufactured_error(64, 0.5, dt)).collect();
    let order = observed_order(&dts, &errs);
    assert!(order >= 0.9, "{order} {errs:?}");
}

#[test]
fn manufactured_solution_space_order() {
    let ns = [8usize, 16, 32];
    let errs: Vec<f64> = ns.iter().map(|&n| manufactured_error(n, 0.01, 1e-5)).collect();
    let hs: Vec<f64> = ns.iter().map(|&n| TWO_PI / n as f64).collect();
    let order = observed_order(&hs, &errs);
    assert!(order >= 1.9, "{order} {errs:?}");
}

#[test]
fn terminal_problem_with_zero_reaction_is_one() {
    let grid = TorusFd::new(16);
    let zero = constant(0.0);
    let phi = solve_terminal(&grid, &DualProblem { b: &zero, g: &zero, data: &zero, t0: 0.3, dt: 0.01, p: 5.0 }).unwrap();
    assert!(phi.values.iter().flatten().all(|v| *v == 1.0));
    let r = bound_report(&grid, &phi, &zero, 5.0);
    assert_eq!((r.sup_phi, r.sup_grad_phi, r.ratio), (1.0, 0.0, 1.0));
}

#[test]
fn constant_reaction_matches_exponential() {
    let sphere = Sphere::new();
    let s_grid = SphereOverset::new(&sphere, 33);
    let t_grid = TorusFd::new(16);
    let zero = constant(0.0);
    let mut sups = vec![];
    for c in [0.5, 1.0, 2.0] {
        let b = constant(-c);
        let problem = DualProblem { b: &b, g: &zero, data: &zero, t0: 1.0, dt: 1e-3, p: 5.0 };
        for phi in [solve_terminal(&t_grid, &problem).unwrap(), solve_terminal(&s_grid, &problem).unwrap()] {
            for (t, lvl) in phi.times.iter().zip(&phi.values) {
                let expect = (c * (1.0 - t)).exp();
                for v in lvl {
                    assert!(((v - expect) / expect).abs() < 1e-6, "{v} {expect}");
                }
            }
        }
        let phi = solve_terminal(&t_grid, &problem).unwrap();
        sups.push(bound_report(&t_grid, &phi, &b, 5.0).sup_phi);
    }
    assert!(sups.windows(2).all(|w| w[1] > w[0]));
}

#[test]
fn positive_reaction_is_rejected() {
    let grid = TorusFd::new(8);
    let zero = constant(0.0);
    let b = FnScalar(|_t: f64, p: &Point<2>| p.x[0].sin());
    let err = solve_terminal(&grid, &DualProblem { b: &b, g: &zero, data: &zero, t0: 0.1, dt: 0.01, p: 5.0 });
    assert!(matches!(err, Err(Error::Domain(_))));
    let err = solve_cauchy(&grid, &DualProblem { b: &zero, g: &zero, data: &zero, t0: 0.1, dt: 0.01, p: 4.0 });
    assert!(matches!(err, Err(Error::Domain(_))));
}

/// Singular nonpositive reactions capped at the grid scale.
fn singular_b(h: f64, scale: f64) -> impl Fn(f64, &Point<2>) -> f64 + Sync {
    move |t: f64, p: &Point<2>| {
        let d = Vector2::new(p.x[0] - 3.0, p.x[1] - 3.0).norm().max(2.0 * h);
        -scale * (1.0 + t) * d.powf(-0.3)
    }
}

#[test]
fn maximum_principle_for_nonpositive_reactions() {
    let sphere = Sphere::new();
    let zero = constant(0.0);
    let t_grid = TorusFd::new(32);
    let s_grid = SphereOverset::new(&sphere, 33);
    let h = t_grid.spacing();
    let battery: Vec<Box<dyn ScalarField<2>>> = vec![
        Box::new(constant(0.0)),
        Box::new(constant(-1.5)),
        Box::new(FnScalar(singular_b(h, 1.0))),
        Box::new(FnScalar(|t: f64, p: &Point<2>| -(p.x[0].sin() + 1.0) * (3.0 * t).cos().abs())),
    ];
    for b in &battery {
        let problem = DualProblem { b: b.as_ref(), g: &zero, data: &zero, t0: 0.5, dt: 0.01, p: 5.0 };
        for phi in [solve_terminal(&t_grid, &problem).unwrap(), solve_terminal(&s_grid, &problem).unwrap()] {
            let min = phi.values.iter().flatten().cloned().fold(f64::INFINITY, f64::min);
            assert!(min >= 1.0 - 1e-9, "{min}");
        }
    }
}

#[test]
fn time_reversal_matches_cauchy_construction() {
    let grid = TorusFd::new(16);
    let h = grid.spacing();
    let bf = singular_b(h, 2.0);
    let b = FnScalar(&bf);
    let zero = constant(0.0);
    let t0 = 0.4;
    let phi = solve_terminal(&grid, &DualProblem { b: &b, g: &zero, data: &zero, t0, dt: 0.01, p: 5.0 }).unwrap();
    let b_rev = FnScalar(|s: f64, p: &Point<2>| bf(t0 - s, p));
    let g_rev = FnScalar(|s: f64, p: &Point<2>| -bf(t0 - s, p));
    let v = solve_cauchy(&grid, &DualProblem { b: &b_rev, g: &g_rev, data: &zero, t0, dt: 0.01, p: 5.0 }).unwrap();
    let m = v.values.len();
    for k in 0..m {
        for (a, b) in phi.values[k].iter().zip(&v.values[m - 1 - k]) {
            assert!((a - 1.0 - b).abs() < 1e-10);
        }
    }
    let report = bound_report(&grid, &phi, &b, 5.0);
    assert!(report.min_phi >= 1.0 && report.sup_grad_phi.is_finite() && report.b_lp > 0.0);
}

#[test]
fn bound_ratio_stays_bounded_under_scaling() {
    let grid = TorusFd::new(32);
    let h = grid.spacing();
    let zero = constant(0.0);
    let mut ratios = vec![];
    for lam in [1.0, 2.0, 4.0] {
        let b = FnScalar(singular_b(h, lam));
        let phi = solve_terminal(&grid, &DualProblem { b: &b, g: &zero, data: &zero, t0: 0.5, dt: 0.01, p: 5.0 }).unwrap();
        ratios.push(bound_report(&grid, &phi, &b, 5.0).ratio);
    }
    assert!(ratios.iter().all(|r| r.is_finite() && *r < 10.0 * ratios[0]), "{ratios:?}");
}

#[test]
fn anisotropic_norm_of_constants_and_sine() {
    let grid = TorusFd::new(64);
    let t0 = 0.5;
    let levels = 51;
    let dt = t0 / (levels - 1) as f64;
    let ones = GridField { dt, times: (0..levels).map(|k| k as f64 * dt).collect(), values: vec![vec![1.0; grid.len()]; levels] };
    let p = 5.0;
    let norm = anisotropic_norm(&grid, &ones, p).unwrap();
    let vol = TWO_PI * TWO_PI;
    assert!((norm - (t0 * vol).powf(1.0 / p)).abs() < 1e-12);

    let sine: Vec<f64> = grid.nodes().iter().map(|q| q.x[0].sin()).collect();
    let w = GridField { values: vec![sine.clone(); levels], ..ones.clone() };
    // ∫ sin² = ∫ cos² = 2π² on T², so each of three terms is √(2π² t₀)
    let expect = 3.0 * (2.0 * std::f64::consts::PI.powi(2) * t0).sqrt();
    let got = anisotropic_norm(&grid, &w, 2.0).unwrap();
    assert!(((got - expect) / expect).abs() < 1e-3, "{got} {expect}");
    let scaled = GridField { values: vec![sine.iter().map(|v| 3.0 * v).collect(); levels], ..ones };
    let got3 = anisotropic_norm(&grid, &scaled, 2.0).unwrap();
    assert!((got3 - 3.0 * got).abs() < 1e-10 * got3);
}

#[test]
fn sphere_anisotropic_norm_of_constant() {
    let sphere = Sphere::new();
    let grid = SphereOverset::new(&sphere, 65);
    let w = GridField { dt: 0.1, times: vec![0.0, 0.1], values: vec![vec![1.0; grid.len()]; 2] };
    let norm = anisotropic_norm(&grid, &w, 5.0).unwrap();
    let expect = (0.1 * 4.0 * std::f64::consts::PI).powf(0.2);
    assert!((norm - expect).abs() < 1e-4, "{norm} {expect}");
}
