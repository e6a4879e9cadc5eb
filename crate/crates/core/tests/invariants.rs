use proptest::prelude::*;

use stochflow::experiments::{build_truncation, gronwall_fit, Shear, SineCompression};
use stochflow::geometry::torus::TWO_PI;
use stochflow::geometry::{Atlas, Coords, Point, Sphere, Torus};
use stochflow::noise_frames::{section_defect, NoiseFrame};
use stochflow::smoothing::TorusGrid;
use stochflow::spde_sim::{evolve_characteristics, sample_brownian, Dynamics, ParticleEnsemble};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn truncation_bounds_hold(mu in 0.5f64..200.0, xi in -60.0f64..60.0) {
        let fam = build_truncation(mu).unwrap();
        let (f, d1, d2) = fam.eval(xi);
        prop_assert!(f >= 0.0 && f <= xi * xi * (1.0 + 1e-14));
        prop_assert!(f <= 2.0 * mu * (1.0 + 1e-14));
        prop_assert!(d1 * xi >= 0.0);
        prop_assert!(fam.g(xi).abs() <= fam.c_chi * f + 1e-12);
        prop_assert!(d2.is_finite());
    }

    #[test]
    fn coarsening_keeps_the_endpoint(seed in 0u64..1000, path in 0u64..8, factor in prop::sample::select(vec![1usize, 2, 4, 8])) {
        let fine = sample_brownian(3, 0.5, 0.5 / 64.0, seed, path).unwrap();
        let coarse = fine.coarsen(factor).unwrap();
        let a = fine.value_at(fine.steps());
        let b = coarse.value_at(coarse.steps());
        for (x, y) in a.iter().zip(&b) {
            prop_assert!((x - y).abs() < 1e-12);
        }
        prop_assert_eq!(sample_brownian(3, 0.5, 0.5 / 64.0, seed, path).unwrap().increments, fine.increments);
    }

    #[test]
    fn sphere_frames_satisfy_the_section_identity(z in -0.99f64..0.99, phi in 0.0f64..TWO_PI, v0 in -1.0f64..1.0, v1 in -1.0f64..1.0) {
        prop_assume!(v0.abs() + v1.abs() > 1e-3);
        let s = Sphere::new();
        let r = (1.0 - z * z).sqrt();
        let p = Sphere::from_ambient(&nalgebra::Vector3::new(r * phi.cos(), r * phi.sin(), z));
        let x = Coords::<2>::new(v0, v1);
        for frame in [NoiseFrame::partition(&s).unwrap(), NoiseFrame::embedded(&s).unwrap()] {
            prop_assert!(section_defect(&frame, &x, &p).unwrap() < 1e-10);
        }
    }

    #[test]
    fn gronwall_fit_recovers_exponentials(phi0 in 0.1f64..100.0, k in -2.0f64..5.0) {
        let times: Vec<f64> = (0..=20).map(|i| i as f64 * 0.05).collect();
        let phi: Vec<f64> = times.iter().map(|t| phi0 * (k * t).exp()).collect();
        let fit = gronwall_fit(&times, &phi).unwrap();
        prop_assert!((fit.k - k).abs() < 1e-9);
        prop_assert!((fit.phi0 / phi0 - 1.0).abs() < 1e-9);
        prop_assert!(fit.envelope_phi0 >= fit.phi0 * (1.0 - 1e-9));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn heat_flow_preserves_the_mean(seed in 0u64..1000, tau in 0.0f64..2.0) {
        use rand::{Rng, SeedableRng};
        let g = TorusGrid::<2>::new(16).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let v: Vec<f64> = (0..g.len()).map(|_| rng.random_range(-1.0..1.0)).collect();
        let w = g.heat(&v, tau).unwrap();
        prop_assert!((g.integrate(&v) - g.integrate(&w)).abs() < 1e-11);
    }

    #[test]
    fn divergence_free_flow_keeps_unit_density(seed in 0u64..1000, c in -2.0f64..2.0) {
        let torus = Torus::<2>::new();
        let u = Shear { c };
        let frame = NoiseFrame::coordinate(&torus).unwrap();
        let dynamics = Dynamics::new(&torus, &u, &frame);
        let path = sample_brownian(2, 0.2, 0.01, seed, 0).unwrap();
        let mut ens = ParticleEnsemble::from_quadrature(&torus.quadrature(6).unwrap(), |_: &Point<2>| 1.0).unwrap();
        evolve_characteristics(&mut ens, &dynamics, &path, |_, _| Ok(())).unwrap();
        prop_assert!(ens.particles.iter().all(|p| p.exponent.abs() < 1e-12));
    }

    #[test]
    fn pushforward_jacobian_integrates_to_the_volume(seed in 0u64..1000, c in -1.5f64..1.5) {
        // Σ w e^{−E} is the quadrature of 1 in the image variables.
        let torus = Torus::<2>::new();
        let u = SineCompression { c };
        let frame = NoiseFrame::coordinate(&torus).unwrap();
        let dynamics = Dynamics::new(&torus, &u, &frame);
        let path = sample_brownian(2, 0.2, 0.005, seed, 1).unwrap();
        let mut ens = ParticleEnsemble::from_quadrature(&torus.quadrature(32).unwrap(), |_: &Point<2>| 1.0).unwrap();
        evolve_characteristics(&mut ens, &dynamics, &path, |_, _| Ok(())).unwrap();
        let vol: f64 = ens.particles.iter().map(|p| p.weight * (-p.exponent).exp()).sum();
        prop_assert!((vol / (TWO_PI * TWO_PI) - 1.0).abs() < 1e-3, "{}", vol);
    }
}
