use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};

/// Increments `ΔW^i_k ~ N(0, dt)` of `n_noise` independent Wiener processes
/// on a uniform grid, for one path.
#[derive(Clone, Debug, PartialEq)]
pub struct BrownianPaths {
    pub n_noise: usize,
    pub horizon: f64,
    pub dt: f64,
    pub seed: u64,
    pub path: u64,
    /// Step-major: `increments[k * n_noise + i]`.
    pub increments: Vec<f64>,
}

/// Independent stream for every `(seed, path, noise index)` triple.
fn stream_rng(seed: u64, path: u64, noise: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(path.wrapping_mul(1 << 12).wrapping_add(noise as u64));
    rng
}

pub fn sample_brownian(n_noise: usize, horizon: f64, dt: f64, seed: u64, path: u64) -> Result<BrownianPaths> {
    if !(dt > 0.0) {
        return Err(Error::Domain(format!("time step must be positive, got {dt}")));
    }
    if !(horizon >= dt) {
        return Err(Error::Domain(format!("horizon {horizon} shorter than one step {dt}")));
    }
    if n_noise >= 1 << 12 {
        return Err(Error::Domain(format!("too many noise fields: {n_noise}")));
    }
    let steps = (horizon / dt).round() as usize;
    let sd = dt.sqrt();
    let mut increments = vec![0.0; steps * n_noise];
    for i in 0..n_noise {
        let mut rng = stream_rng(seed, path, i);
        for k in 0..steps {
            let z: f64 = StandardNormal.sample(&mut rng);
            increments[k * n_noise + i] = z * sd;
        }
    }
    Ok(BrownianPaths { n_noise, horizon, dt, seed, path, increments })
}

impl BrownianPaths {
    pub fn steps(&self) -> usize {
        if self.n_noise == 0 {
            (self.horizon / self.dt).round() as usize
        } else {
            self.increments.len() / self.n_noise
        }
    }

    pub fn increment(&self, k: usize) -> &[f64] {
        &self.increments[k * self.n_noise..(k + 1) * self.n_noise]
    }

    /// `W(t_k)` for every noise index.
    pub fn value_at(&self, k: usize) -> Vec<f64> {
        let mut w = vec![0.0; self.n_noise];
        for s in 0..k {
            for (wi, d) in w.iter_mut().zip(self.increment(s)) {
                *wi += d;
            }
        }
        w
    }

    /// The same path on a grid `factor` times coarser.
    pub fn coarsen(&self, factor: usize) -> Result<Self> {
        let steps = self.steps();
        if factor == 0 || steps % factor != 0 {
            return Err(Error::Domain(format!("cannot coarsen {steps} steps by {factor}")));
        }
        let n = self.n_noise;
        let mut increments = vec![0.0; steps / factor * n];
        for k in 0..steps / factor {
            for j in 0..factor {
                for i in 0..n {
                    increments[k * n + i] += self.increments[(k * factor + j) * n + i];
                }
            }
        }
        Ok(Self { dt: self.dt * factor as f64, increments, ..self.clone() })
    }

    /// Deterministic transport: no noise on the same time grid.
    pub fn silent(horizon: f64, dt: f64) -> Result<Self> {
        sample_brownian(0, horizon, dt, 0, 0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reproducible_and_distinct_streams() {
        let a = sample_brownian(3, 1.0, 0.01, 42, 7).unwrap();
        let b = sample_brownian(3, 1.0, 0.01, 42, 7).unwrap();
        let c = sample_brownian(3, 1.0, 0.01, 42, 8).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.increments, c.increments);
        assert_ne!(a.increment(0)[0], a.increment(0)[1]);
    }

    #[test]
    fn moments_match_normal_law() {
        let dt = 1e-3;
        let p = sample_brownian(4, 10.0, dt, 1, 0).unwrap();
        let n = p.increments.len() as f64;
        assert!(n >= 1e4);
        let mean = p.increments.iter().sum::<f64>() / n;
        let var = p.increments.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
        assert!(mean.abs() <= 4.0 * (dt / n).sqrt());
        assert!((var / dt - 1.0).abs() <= 0.05);
    }

    #[test]
    fn empty_noise_and_bad_steps() {
        let p = sample_brownian(0, 1.0, 0.1, 1, 0).unwrap();
        assert!(p.increments.is_empty());
        assert_eq!(p.steps(), 10);
        assert!(matches!(sample_brownian(2, 1.0, 0.0, 1, 0), Err(Error::Domain(_))));
        assert!(matches!(sample_brownian(2, 1.0, -0.1, 1, 0), Err(Error::Domain(_))));
    }

    #[test]
    fn coarsening_preserves_endpoint() {
        let p = sample_brownian(2, 1.0, 0.01, 5, 1).unwrap();
        let c = p.coarsen(4).unwrap();
        assert_eq!(c.steps(), 25);
        let a = p.value_at(100);
        let b = c.value_at(25);
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-12);
        }
    }
}
