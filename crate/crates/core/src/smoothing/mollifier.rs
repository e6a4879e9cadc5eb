//! Standard compactly supported mollifier in time.

use std::sync::OnceLock;

use crate::error::{Error, Result};

fn raw_bump(s: f64) -> f64 {
    if s.abs() >= 1.0 {
        0.0
    } else {
        (-1.0 / (1.0 - s * s)).exp()
    }
}

/// `∫_{-1}^{1} exp(-1/(1-s²)) ds`, by composite Simpson on a fine grid.
fn bump_mass() -> f64 {
    static MASS: OnceLock<f64> = OnceLock::new();
    *MASS.get_or_init(|| {
        let n = 20_000;
        let h = 2.0 / n as f64;
        let mut s = 0.0;
        for i in 0..=n {
            let x = -1.0 + i as f64 * h;
            let w = if i == 0 || i == n {
                1.0
            } else if i % 2 == 1 {
                4.0
            } else {
                2.0
            };
            s += w * raw_bump(x);
        }
        s * h / 3.0
    })
}

/// `η_τ(t) = τ⁻¹ η(t/τ)` with `η` the unit-mass bump supported on [-1, 1].
#[derive(Clone, Copy, Debug)]
pub struct Mollifier {
    pub tau: f64,
}

/// How a sampled series is continued beyond its ends.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Extension {
    Zero,
    Hold,
}

impl Mollifier {
    pub fn new(tau: f64) -> Result<Self> {
        if !(tau > 0.0) {
            return Err(Error::Domain(format!("mollifier scale must be positive, got {tau}")));
        }
        Ok(Self { tau })
    }

    pub fn eval(&self, t: f64) -> f64 {
        raw_bump(t / self.tau) / (self.tau * bump_mass())
    }

    /// Nodes and weights discretizing `∫ g(t') η_τ(t − t') dt'`; the weights
    /// are normalized to sum exactly to one so constants are reproduced.
    pub fn stencil(&self, t: f64, nodes: usize) -> Vec<(f64, f64)> {
        let m = nodes.max(3);
        let h = 2.0 * self.tau / m as f64;
        let mut out: Vec<(f64, f64)> = (0..m)
            .map(|i| {
                let s = t - self.tau + (i as f64 + 0.5) * h;
                (s, self.eval(t - s))
            })
            .collect();
        let total: f64 = out.iter().map(|(_, w)| w).sum();
        for o in out.iter_mut() {
            o.1 /= total;
        }
        out
    }

    /// Mollify a function of time at `t`.
    pub fn apply<F: Fn(f64) -> f64>(&self, f: F, t: f64, nodes: usize) -> f64 {
        self.stencil(t, nodes).iter().map(|(s, w)| w * f(*s)).sum()
    }

    /// Mollify a uniformly sampled series (`values[k]` at `k·dt`).
    pub fn apply_series(&self, values: &[f64], dt: f64, ext: Extension) -> Vec<f64> {
        if dt > 0.5 * self.tau {
            log::warn!(
                "time grid step {dt} is coarse against mollifier scale {}; smoothing is under-resolved",
                self.tau
            );
        }
        let n = values.len() as isize;
        let reach = (self.tau / dt).ceil() as isize;
        let kernel: Vec<f64> = (-reach..=reach).map(|k| self.eval(k as f64 * dt)).collect();
        let mass: f64 = kernel.iter().sum();
        (0..n)
            .map(|i| {
                let mut acc = 0.0;
                for (o, w) in (-reach..=reach).zip(&kernel) {
                    let j = i - o;
                    let v = if (0..n).contains(&j) {
                        values[j as usize]
                    } else {
                        match ext {
                            Extension::Zero => 0.0,
                            Extension::Hold => values[j.clamp(0, n - 1) as usize],
                        }
                    };
                    acc += w * v;
                }
                acc / mass
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_mass_and_support() {
        let m = Mollifier::new(0.3).unwrap();
        let n = 200_000;
        let h = 0.8 / n as f64;
        let mass: f64 = (0..n).map(|i| m.eval(-0.4 + (i as f64 + 0.5) * h) * h).sum();
        assert!((mass - 1.0).abs() < 1e-10);
        assert_eq!(m.eval(0.3), 0.0);
        assert_eq!(m.eval(-0.31), 0.0);
    }

    #[test]
    fn rejects_nonpositive_scale() {
        assert!(Mollifier::new(0.0).is_err());
        assert!(Mollifier::new(-1.0).is_err());
    }

    #[test]
    fn constants_are_preserved() {
        let m = Mollifier::new(0.1).unwrap();
        assert!((m.apply(|_| 1.0, 0.37, 64) - 1.0).abs() < 1e-14);
        let s = m.apply_series(&vec![1.0; 100], 0.01, Extension::Hold);
        assert!(s.iter().all(|v| (v - 1.0).abs() < 1e-14));
    }

    #[test]
    fn step_transition_width_is_bounded_by_support() {
        let tau = 0.05;
        let m = Mollifier::new(tau).unwrap();
        let step = |t: f64| if t >= 0.5 { 1.0 } else { 0.0 };
        assert_eq!(m.apply(step, 0.5 - tau - 1e-9, 64), 0.0);
        assert!((m.apply(step, 0.5 + tau + 1e-9, 64) - 1.0).abs() < 1e-14);
        let mid = m.apply(step, 0.5, 64);
        assert!(mid > 0.3 && mid < 0.7);
    }

    #[test]
    fn commutes_with_time_shift() {
        let m = Mollifier::new(0.2).unwrap();
        let f = |t: f64| (3.0 * t).sin() + t * t;
        let shift = 0.7;
        let a = m.apply(|t| f(t + shift), 0.4, 64);
        let b = m.apply(f, 0.4 + shift, 64);
        assert!((a - b).abs() < 1e-12);
    }
}
