//! Fourier transforms on uniform periodic grids of `T¹` and `T²`.

use std::f64::consts::PI;
use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::geometry::{Coords, Point};

/// Uniform `n^D` grid on `[0, 2π)^D`; node `(i_0, i_1)` has flat index
/// `i_0 + n·i_1`, matching the torus quadrature ordering.
#[derive(Clone)]
pub struct TorusGrid<const D: usize> {
    pub n: usize,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

impl<const D: usize> std::fmt::Debug for TorusGrid<D> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "TorusGrid<{D}>(n = {})", self.n)
    }
}

/// Fourier coefficients of a real field, normalized so that
/// `f(x) = Σ_k c_k e^{i k·x}`.
#[derive(Clone, Debug)]
pub struct FourierField<const D: usize> {
    pub n: usize,
    pub coeffs: Vec<Complex<f64>>,
}

impl<const D: usize> TorusGrid<D> {
    pub fn new(n: usize) -> Result<Self> {
        if n < 4 || n % 2 != 0 {
            return Err(Error::Construction(format!("torus grid needs an even n >= 4, got {n}")));
        }
        if D == 0 || D > 2 {
            return Err(Error::UnsupportedManifold(format!("torus of dimension {D}")));
        }
        let mut planner = FftPlanner::new();
        Ok(Self { n, fwd: planner.plan_fft_forward(n), inv: planner.plan_fft_inverse(n) })
    }

    pub fn len(&self) -> usize {
        self.n.pow(D as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn spacing(&self) -> f64 {
        2.0 * PI / self.n as f64
    }

    pub fn point(&self, flat: usize) -> Point<D> {
        let h = self.spacing();
        let mut x = Coords::<D>::zeros();
        let mut rem = flat;
        for a in 0..D {
            x[a] = (rem % self.n) as f64 * h;
            rem /= self.n;
        }
        Point::new(0, x)
    }

    pub fn points(&self) -> Vec<Point<D>> {
        (0..self.len()).map(|i| self.point(i)).collect()
    }

    pub fn sample<F: Fn(&Point<D>) -> f64>(&self, f: F) -> Vec<f64> {
        (0..self.len()).map(|i| f(&self.point(i))).collect()
    }

    /// Signed wavenumber of FFT bin `j`.
    pub fn wavenumber(&self, j: usize) -> i64 {
        if j <= self.n / 2 {
            j as i64
        } else {
            j as i64 - self.n as i64
        }
    }

    pub fn wavevector(&self, flat: usize) -> [i64; 2] {
        let mut k = [0i64; 2];
        let mut rem = flat;
        for ka in k.iter_mut().take(D) {
            *ka = self.wavenumber(rem % self.n);
            rem /= self.n;
        }
        k
    }

    fn transform(&self, data: &mut [Complex<f64>], plan: &Arc<dyn Fft<f64>>) {
        let n = self.n;
        let mut scratch = vec![Complex::new(0.0, 0.0); plan.get_inplace_scratch_len()];
        for row in data.chunks_mut(n) {
            plan.process_with_scratch(row, &mut scratch);
        }
        if D == 2 {
            let mut col = vec![Complex::new(0.0, 0.0); n];
            for i0 in 0..n {
                for i1 in 0..n {
                    col[i1] = data[i0 + n * i1];
                }
                plan.process_with_scratch(&mut col, &mut scratch);
                for i1 in 0..n {
                    data[i0 + n * i1] = col[i1];
                }
            }
        }
    }

    pub fn forward(&self, values: &[f64]) -> FourierField<D> {
        let mut data: Vec<Complex<f64>> = values.iter().map(|v| Complex::new(*v, 0.0)).collect();
        self.transform(&mut data, &self.fwd);
        let scale = 1.0 / self.len() as f64;
        for c in data.iter_mut() {
            *c *= scale;
        }
        FourierField { n: self.n, coeffs: data }
    }

    pub fn inverse(&self, field: &FourierField<D>) -> Vec<f64> {
        let mut data = field.coeffs.clone();
        self.transform(&mut data, &self.inv);
        data.iter().map(|c| c.re).collect()
    }

    /// Multiply every mode by `m(k)`.
    pub fn apply_multiplier<M: Fn([i64; 2]) -> Complex<f64>>(&self, field: &FourierField<D>, m: M) -> FourierField<D> {
        let coeffs = field
            .coeffs
            .iter()
            .enumerate()
            .map(|(j, c)| c * m(self.wavevector(j)))
            .collect();
        FourierField { n: self.n, coeffs }
    }

    fn has_nyquist(&self, k: [i64; 2]) -> bool {
        k.iter().take(D).any(|v| v.unsigned_abs() as usize == self.n / 2)
    }

    /// Heat semigroup `P_τ`: multiplier `e^{-|k|² τ}`.
    pub fn heat(&self, values: &[f64], tau: f64) -> Result<Vec<f64>> {
        if tau < 0.0 {
            return Err(Error::Domain(format!("heat time must be nonnegative, got {tau}")));
        }
        let f = self.forward(values);
        let g = self.apply_multiplier(&f, |k| {
            let k2 = (k[0] * k[0] + k[1] * k[1]) as f64;
            Complex::new((-k2 * tau).exp(), 0.0)
        });
        Ok(self.inverse(&g))
    }

    /// Spectral partial derivative along `axis`; the Nyquist mode is dropped.
    pub fn derivative(&self, values: &[f64], axis: usize) -> Vec<f64> {
        let f = self.forward(values);
        let g = self.apply_multiplier(&f, |k| {
            if self.has_nyquist(k) {
                Complex::new(0.0, 0.0)
            } else {
                Complex::new(0.0, k[axis] as f64)
            }
        });
        self.inverse(&g)
    }

    /// Trigonometric interpolant at an arbitrary point; the Nyquist mode is
    /// split symmetrically so the interpolant is real.
    pub fn eval_at(&self, field: &FourierField<D>, x: &Coords<D>) -> f64 {
        let half = (self.n / 2) as i64;
        let mut s = 0.0;
        for (j, c) in field.coeffs.iter().enumerate() {
            let k = self.wavevector(j);
            let nyq: Vec<usize> = (0..D).filter(|&a| k[a].abs() == half).collect();
            let combos = 1usize << nyq.len();
            let weight = 1.0 / combos as f64;
            for mask in 0..combos {
                let mut phase = 0.0;
                for a in 0..D {
                    let flip = nyq.iter().position(|&b| b == a).is_some_and(|pos| mask >> pos & 1 == 1);
                    let ka = if flip { -k[a] } else { k[a] };
                    phase += ka as f64 * x[a];
                }
                s += (c * Complex::new(phase.cos(), phase.sin())).re * weight;
            }
        }
        s
    }

    pub fn lp_norm(&self, values: &[f64], p: f64) -> f64 {
        let w = self.spacing().powi(D as i32);
        let s: Vec<f64> = values.iter().map(|v| v.abs().powf(p) * w).collect();
        crate::numerics::pairwise_sum(&s).powf(1.0 / p)
    }

    pub fn integrate(&self, values: &[f64]) -> f64 {
        let w = self.spacing().powi(D as i32);
        crate::numerics::pairwise_sum(values) * w
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_reproduces_nodes() {
        let g = TorusGrid::<2>::new(16).unwrap();
        let v = g.sample(|p| (p.x[0] + 2.0 * p.x[1]).sin() + p.x[1].cos().exp());
        let back = g.inverse(&g.forward(&v));
        for (a, b) in v.iter().zip(&back) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn sine_decays_with_unit_rate_on_circle() {
        let g = TorusGrid::<1>::new(32).unwrap();
        let v = g.sample(|p| p.x[0].sin());
        let out = g.heat(&v, 0.3).unwrap();
        for (i, o) in out.iter().enumerate() {
            let x = g.point(i).x[0];
            assert!((o - (-0.3f64).exp() * x.sin()).abs() < 1e-14);
        }
    }

    #[test]
    fn interpolant_matches_band_limited_function() {
        let g = TorusGrid::<2>::new(16).unwrap();
        let f = |x: &Coords<2>| (3.0 * x[0] - x[1]).cos() + 0.5 * (2.0 * x[1]).sin();
        let c = g.forward(&g.sample(|p| f(&p.x)));
        let x = Coords::<2>::new(0.123, 4.56);
        assert!((g.eval_at(&c, &x) - f(&x)).abs() < 1e-12);
    }

    #[test]
    fn spectral_derivative_is_exact_for_band_limited_input() {
        let g = TorusGrid::<2>::new(16).unwrap();
        let v = g.sample(|p| (2.0 * p.x[0] + p.x[1]).sin());
        let d = g.derivative(&v, 1);
        for (i, di) in d.iter().enumerate() {
            let x = g.point(i).x;
            assert!((di - (2.0 * x[0] + x[1]).cos()).abs() < 1e-12);
        }
    }
}
