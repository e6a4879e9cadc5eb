//! Spherical-harmonic transforms on a Gauss–Legendre × equispaced grid.

use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::Vector3;
use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::geometry::{Point, Sphere};

/// Gauss–Legendre nodes and weights on [-1, 1] (Newton on `P_n`).
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n {
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (p, dp) = legendre_with_derivative(n, z);
            let dz = p / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        let (_, dp) = legendre_with_derivative(n, z);
        x[i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
    }
    (x, w)
}

fn legendre_with_derivative(n: usize, z: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = z;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
        p0 = p1;
        p1 = p2;
    }
    let dp = n as f64 * (z * p1 - p0) / (z * z - 1.0);
    (p1, dp)
}

/// Associated Legendre functions normalized to unit L²[-1, 1], for
/// `0 ≤ m ≤ l ≤ lmax`, stored at `l * (lmax + 1) + m`.
pub fn normalized_plm(lmax: usize, x: f64) -> Vec<f64> {
    let stride = lmax + 1;
    let mut p = vec![0.0; stride * stride];
    let s = (1.0 - x * x).max(0.0).sqrt();
    let mut pmm = (0.5f64).sqrt();
    for m in 0..=lmax {
        if m > 0 {
            pmm *= ((2 * m + 1) as f64 / (2 * m) as f64).sqrt() * s;
        }
        p[m * stride + m] = pmm;
        if m < lmax {
            p[(m + 1) * stride + m] = ((2 * m + 3) as f64).sqrt() * x * pmm;
        }
        for l in (m + 2)..=lmax {
            let lf = l as f64;
            let mf = m as f64;
            let a = ((4.0 * lf * lf - 1.0) / (lf * lf - mf * mf)).sqrt();
            let b = (((lf - 1.0) * (lf - 1.0) - mf * mf) / (4.0 * (lf - 1.0) * (lf - 1.0) - 1.0)).sqrt();
            p[l * stride + m] = a * (x * p[(l - 1) * stride + m] - b * p[(l - 2) * stride + m]);
        }
    }
    p
}

/// Coefficients `c_{l,m}` (`m ≥ 0`) of a real field
/// `f = Σ_l [c_{l0} P_l^0 + 2 Re Σ_{m≥1} c_{lm} P_l^m e^{imφ}]`.
#[derive(Clone, Debug)]
pub struct HarmonicField {
    pub lmax: usize,
    pub coeffs: Vec<Complex<f64>>,
}

impl HarmonicField {
    pub fn get(&self, l: usize, m: usize) -> Complex<f64> {
        self.coeffs[l * (self.lmax + 1) + m]
    }
}

#[derive(Clone)]
pub struct SphereGrid {
    pub lmax: usize,
    pub nlat: usize,
    pub nlon: usize,
    /// `cos θ` of each ring.
    pub x: Vec<f64>,
    pub w: Vec<f64>,
    plm: Vec<Vec<f64>>,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for SphereGrid {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "SphereGrid(lmax = {}, {}x{})", self.lmax, self.nlat, self.nlon)
    }
}

impl SphereGrid {
    pub fn new(lmax: usize) -> Result<Self> {
        if lmax == 0 {
            return Err(Error::Construction("band limit must be positive".into()));
        }
        let nlat = lmax + 1;
        let nlon = 2 * lmax + 2;
        let (x, w) = gauss_legendre(nlat);
        let plm = x.iter().map(|&xi| normalized_plm(lmax, xi)).collect();
        let mut planner = FftPlanner::new();
        Ok(Self {
            lmax,
            nlat,
            nlon,
            x,
            w,
            plm,
            fwd: planner.plan_fft_forward(nlon),
            inv: planner.plan_fft_inverse(nlon),
        })
    }

    pub fn len(&self) -> usize {
        self.nlat * self.nlon
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Ambient unit vector of node `(ring, k)` at flat index `ring * nlon + k`.
    pub fn ambient(&self, flat: usize) -> Vector3<f64> {
        let j = flat / self.nlon;
        let k = flat % self.nlon;
        let ct = self.x[j];
        let st = (1.0 - ct * ct).sqrt();
        let phi = 2.0 * PI * k as f64 / self.nlon as f64;
        Vector3::new(st * phi.cos(), st * phi.sin(), ct)
    }

    pub fn point(&self, flat: usize) -> Point<2> {
        Sphere::from_ambient(&self.ambient(flat))
    }

    pub fn sample<F: Fn(&Point<2>) -> f64>(&self, f: F) -> Vec<f64> {
        (0..self.len()).map(|i| f(&self.point(i))).collect()
    }

    /// Quadrature weight of a node (exact for degree ≤ 2·lmax + 1).
    pub fn weight(&self, flat: usize) -> f64 {
        self.w[flat / self.nlon] * 2.0 * PI / self.nlon as f64
    }

    pub fn integrate(&self, values: &[f64]) -> f64 {
        let terms: Vec<f64> = values.iter().enumerate().map(|(i, v)| v * self.weight(i)).collect();
        crate::numerics::pairwise_sum(&terms)
    }

    pub fn l2_norm(&self, values: &[f64]) -> f64 {
        let sq: Vec<f64> = values.iter().map(|v| v * v).collect();
        self.integrate(&sq).sqrt()
    }

    pub fn analyze(&self, values: &[f64]) -> HarmonicField {
        let stride = self.lmax + 1;
        let mut coeffs = vec![Complex::new(0.0, 0.0); stride * stride];
        let mut ring = vec![Complex::new(0.0, 0.0); self.nlon];
        let mut scratch = vec![Complex::new(0.0, 0.0); self.fwd.get_inplace_scratch_len()];
        for j in 0..self.nlat {
            for k in 0..self.nlon {
                ring[k] = Complex::new(values[j * self.nlon + k], 0.0);
            }
            self.fwd.process_with_scratch(&mut ring, &mut scratch);
            let p = &self.plm[j];
            for m in 0..=self.lmax {
                // (1/2π)∫ f e^{-imφ} dφ, then the e^{imφ} basis has norm 2π
                let fm = ring[m] / self.nlon as f64;
                for l in m..=self.lmax {
                    coeffs[l * stride + m] += fm * (self.w[j] * p[l * stride + m]);
                }
            }
        }
        HarmonicField { lmax: self.lmax, coeffs }
    }

    pub fn synthesize(&self, field: &HarmonicField) -> Vec<f64> {
        let stride = self.lmax + 1;
        let mut out = vec![0.0; self.len()];
        let mut ring = vec![Complex::new(0.0, 0.0); self.nlon];
        let mut scratch = vec![Complex::new(0.0, 0.0); self.inv.get_inplace_scratch_len()];
        for j in 0..self.nlat {
            ring.iter_mut().for_each(|c| *c = Complex::new(0.0, 0.0));
            let p = &self.plm[j];
            for m in 0..=field.lmax.min(self.lmax) {
                let mut fm = Complex::new(0.0, 0.0);
                for l in m..=field.lmax.min(self.lmax) {
                    fm += field.coeffs[l * (field.lmax + 1) + m] * p[l * stride + m];
                }
                if m == 0 {
                    ring[0] += fm;
                } else {
                    ring[m] += fm;
                    ring[self.nlon - m] += fm.conj();
                }
            }
            self.inv.process_with_scratch(&mut ring, &mut scratch);
            for k in 0..self.nlon {
                out[j * self.nlon + k] = ring[k].re;
            }
        }
        out
    }

    /// Evaluate a harmonic expansion at an arbitrary point.
    pub fn eval_at(&self, field: &HarmonicField, p: &Point<2>) -> f64 {
        let x = Sphere::embed(p);
        let phi = x[1].atan2(x[0]);
        let plm = normalized_plm(field.lmax, x[2].clamp(-1.0, 1.0));
        let stride = field.lmax + 1;
        let mut s = 0.0;
        for m in 0..=field.lmax {
            let e = Complex::new((m as f64 * phi).cos(), (m as f64 * phi).sin());
            for l in m..=field.lmax {
                let t = (field.coeffs[l * stride + m] * e).re * plm[l * stride + m];
                s += if m == 0 { t } else { 2.0 * t };
            }
        }
        s
    }

    /// Heat semigroup: multiplier `e^{-l(l+1)τ}`.
    pub fn heat_coeffs(&self, field: &HarmonicField, tau: f64) -> Result<HarmonicField> {
        if tau < 0.0 {
            return Err(Error::Domain(format!("heat time must be nonnegative, got {tau}")));
        }
        let stride = field.lmax + 1;
        let mut out = field.clone();
        for l in 0..=field.lmax {
            let f = (-((l * (l + 1)) as f64) * tau).exp();
            for m in 0..=l {
                out.coeffs[l * stride + m] *= f;
            }
        }
        Ok(out)
    }

    pub fn heat(&self, values: &[f64], tau: f64) -> Result<Vec<f64>> {
        let c = self.heat_coeffs(&self.analyze(values), tau)?;
        Ok(self.synthesize(&c))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        let (x, w) = gauss_legendre(6);
        let s: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(10)).sum();
        assert!((s - 2.0 / 11.0).abs() < 1e-14);
    }

    #[test]
    fn plm_are_orthonormal() {
        let lmax = 8;
        let (x, w) = gauss_legendre(lmax + 2);
        let tables: Vec<_> = x.iter().map(|&xi| normalized_plm(lmax, xi)).collect();
        let st = lmax + 1;
        for m in 0..=lmax {
            for l1 in m..=lmax {
                for l2 in m..=lmax {
                    let s: f64 = tables.iter().zip(&w).map(|(t, w)| w * t[l1 * st + m] * t[l2 * st + m]).sum();
                    let e = if l1 == l2 { 1.0 } else { 0.0 };
                    assert!((s - e).abs() < 1e-12, "m={m} l1={l1} l2={l2} s={s}");
                }
            }
        }
    }

    #[test]
    fn band_limited_round_trip() {
        let g = SphereGrid::new(12).unwrap();
        let f = |p: &Point<2>| {
            let x = Sphere::embed(p);
            x[0] * x[1] + x[2].powi(3) - 0.2 * x[0] + (x[1] * x[2]).powi(2)
        };
        let v = g.sample(f);
        let back = g.synthesize(&g.analyze(&v));
        for (a, b) in v.iter().zip(&back) {
            assert!((a - b).abs() < 1e-12);
        }
        let p = Point::new(1, crate::geometry::Coords::<2>::new(0.3, -0.8));
        assert!((g.eval_at(&g.analyze(&v), &p) - f(&p)).abs() < 1e-12);
    }

    #[test]
    fn degree_one_decays_at_rate_two() {
        let g = SphereGrid::new(8).unwrap();
        let v: Vec<f64> = (0..g.len()).map(|i| g.ambient(i)[0]).collect();
        let out = g.heat(&v, 0.25).unwrap();
        for (a, b) in v.iter().zip(&out) {
            assert!((b - (-0.5f64).exp() * a).abs() < 1e-13);
        }
    }
}
