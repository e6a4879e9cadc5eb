//! The truncation family `F_μ(ξ) = μ χ(ξ²/μ)` approximating `ξ²`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::spde_sim::Renormalization;

/// Base profile: `χ(s) = s` on `[0, 1]`, the quintic
/// `1 + r + 4r³ − 7r⁴ + 3r⁵` (`r = s − 1`) on `[1, 2]`, and `2` beyond.
/// It is C² and increasing.
#[derive(Clone, Copy, Debug, Default)]
pub struct Chi;

impl Chi {
    /// `(χ, χ', χ'')` at `s ≥ 0`.
    pub fn eval(&self, s: f64) -> (f64, f64, f64) {
        if s <= 1.0 {
            (s, 1.0, 0.0)
        } else if s >= 2.0 {
            (2.0, 0.0, 0.0)
        } else {
            let r = s - 1.0;
            let v = 1.0 + r + r.powi(3) * (4.0 - 7.0 * r + 3.0 * r * r);
            let d1 = 1.0 + r * r * (12.0 - 28.0 * r + 15.0 * r * r);
            let d2 = r * (24.0 - 84.0 * r + 60.0 * r * r);
            (v, d1, d2)
        }
    }
}

const PROFILE_SAMPLES: usize = 1_000_000;

#[derive(Clone, Copy, Debug, Serialize)]
pub struct TruncationFamily {
    pub mu: f64,
    /// `sup χ'`.
    pub a0: f64,
    /// `sup |χ''|`.
    pub a1: f64,
    /// Common constant for `|G| ≤ C F` and the three-regime `ξ²F''` bound.
    pub c_chi: f64,
}

/// Profile constants measured on a dense grid of `s ∈ [0, 3]`.
fn profile_constants() -> (f64, f64, f64) {
    let chi = Chi;
    let (mut a0, mut a1, mut c) = (0.0f64, 0.0f64, 0.0f64);
    for k in 1..=PROFILE_SAMPLES {
        let s = 3.0 * k as f64 / PROFILE_SAMPLES as f64;
        let (v, d1, d2) = chi.eval(s);
        a0 = a0.max(d1);
        a1 = a1.max(d2.abs());
        // With ξ² = μ s: G/F = (2sχ' − χ)/χ and ξ²F''/μ = s(2χ' + 4sχ'').
        c = c.max((2.0 * s * d1 - v).abs() / v);
        let w = s * (2.0 * d1 + 4.0 * s * d2).abs();
        let regime = if s <= 1.0 {
            w / v
        } else if s <= 2.0 {
            w / s
        } else {
            w
        };
        c = c.max(regime);
    }
    (a0, a1, c)
}

pub fn build_truncation(mu: f64) -> Result<TruncationFamily> {
    if !(mu > 0.0 && mu.is_finite()) {
        return Err(Error::Domain(format!("truncation scale must be positive, got {mu}")));
    }
    static CONSTANTS: std::sync::OnceLock<(f64, f64, f64)> = std::sync::OnceLock::new();
    let (a0, a1, c_chi) = *CONSTANTS.get_or_init(profile_constants);
    Ok(TruncationFamily { mu, a0, a1, c_chi })
}

impl TruncationFamily {
    pub fn with_mu(&self, mu: f64) -> Result<Self> {
        build_truncation(mu).map(|f| Self { mu, ..f })
    }

    /// `(F_μ, F'_μ, F''_μ)` at `ξ`.
    pub fn eval(&self, xi: f64) -> (f64, f64, f64) {
        let s = xi * xi / self.mu;
        let (v, d1, d2) = Chi.eval(s);
        (self.mu * v, 2.0 * xi * d1, 2.0 * d1 + 4.0 * s * d2)
    }

    /// `G_F(ξ) = ξF'(ξ) − F(ξ)`.
    pub fn g(&self, xi: f64) -> f64 {
        let (f, d1, _) = self.eval(xi);
        xi * d1 - f
    }
}

impl Renormalization for TruncationFamily {
    fn f(&self, x: f64) -> f64 {
        self.eval(x).0
    }
    fn df(&self, x: f64) -> f64 {
        self.eval(x).1
    }
    fn d2f(&self, x: f64) -> f64 {
        self.eval(x).2
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct PropertyRow {
    pub property: String,
    pub mu: f64,
    /// Largest violation `lhs − rhs` found (≤ 0 means the bound holds).
    pub worst_excess: f64,
    pub pass: bool,
}

pub const XI_SAMPLES: usize = 100_000;
/// Rounding allowance relative to the bound's scale.
const REL_TOL: f64 = 1e-12;

struct Check {
    name: &'static str,
    worst: f64,
    scale: f64,
}

impl Check {
    fn new(name: &'static str) -> Self {
        Self { name, worst: f64::NEG_INFINITY, scale: 1.0 }
    }

    fn le(&mut self, lhs: f64, rhs: f64) {
        self.worst = self.worst.max(lhs - rhs);
        self.scale = self.scale.max(rhs.abs());
    }

    fn row(self, mu: f64) -> PropertyRow {
        let pass = self.worst.is_finite() && self.worst <= REL_TOL * self.scale;
        PropertyRow { property: self.name.to_string(), mu, worst_excess: self.worst, pass }
    }
}

/// Every bound on `F_μ` and `G_{F_μ}`, checked on a dense `ξ`-grid covering
/// all three regimes, plus the shape constraints on `χ` and the limits in `μ`.
pub fn truncation_property_suite(family: &TruncationFamily) -> Vec<PropertyRow> {
    let mu = family.mu;
    let (a0, a1, c) = (family.a0, family.a1, family.c_chi);
    let half = 3.0 * (2.0 * mu).sqrt();
    let xis: Vec<f64> =
        (0..XI_SAMPLES).map(|k| -half + 2.0 * half * k as f64 / (XI_SAMPLES - 1) as f64).collect();

    let mut sup_f = Check::new("sup F <= 2 mu");
    let mut f_quad = Check::new("F <= 2 xi^2");
    let mut d1_mu = Check::new("|F'| <= 2 sqrt2 A0 sqrt(mu)");
    let mut d1_xi = Check::new("|F'| <= 2 sqrt2 A0 |xi|");
    let mut d2 = Check::new("|F''| <= 8 A1 + 2 A0");
    let mut g_mu = Check::new("|G| <= (4 A0 + 2) mu");
    let mut g_xi = Check::new("|G| <= 2 (sqrt2 A0 + 1) xi^2");
    let mut g_f = Check::new("|G| <= C_chi F");
    let mut w_inner = Check::new("|xi^2 F''| <= C_chi F on |xi| <= sqrt(mu)");
    let mut w_mid = Check::new("|xi^2 F''| <= C_chi xi^2 on sqrt(mu) < |xi| <= sqrt(2 mu)");
    let mut w_outer = Check::new("|xi^2 F''| <= C_chi mu on |xi| > sqrt(2 mu)");
    let mut exact = Check::new("F = xi^2 and G = xi^2 where xi^2 <= mu");
    for &xi in &xis {
        let (f, f1, f2) = family.eval(xi);
        let g = xi * f1 - f;
        let x2 = xi * xi;
        sup_f.le(f, 2.0 * mu);
        f_quad.le(f, 2.0 * x2);
        d1_mu.le(f1.abs(), 2.0 * 2f64.sqrt() * a0 * mu.sqrt());
        d1_xi.le(f1.abs(), 2.0 * 2f64.sqrt() * a0 * xi.abs());
        d2.le(f2.abs(), 8.0 * a1 + 2.0 * a0);
        g_mu.le(g.abs(), (4.0 * a0 + 2.0) * mu);
        g_xi.le(g.abs(), 2.0 * (2f64.sqrt() * a0 + 1.0) * x2);
        g_f.le(g.abs(), c * f);
        let w = (x2 * f2).abs();
        if x2 <= mu {
            w_inner.le(w, c * f);
            exact.le((f - x2).abs() + (g - x2).abs(), 0.0);
        } else if x2 <= 2.0 * mu {
            w_mid.le(w, c * x2);
        } else {
            w_outer.le(w, c * mu);
        }
    }
    let mut rows: Vec<PropertyRow> = [sup_f, f_quad, d1_mu, d1_xi, d2, g_mu, g_xi, g_f, w_inner, w_mid, w_outer, exact]
        .into_iter()
        .map(|ch| ch.row(mu))
        .collect();

    // shape of χ: increasing, C² at the junctions, values in [1, 2] on (1, 2)
    let chi = Chi;
    let mut mono = Check::new("chi increasing, chi in [1,2] on (1,2), A0 > 1");
    let mut prev = chi.eval(0.0).0;
    for k in 1..=XI_SAMPLES {
        let s = 3.0 * k as f64 / XI_SAMPLES as f64;
        let (v, d1, _) = chi.eval(s);
        mono.le(prev, v);
        mono.le(-d1, 0.0);
        if s > 1.0 && s < 2.0 {
            mono.le(1.0, v);
            mono.le(v, 2.0);
        }
        prev = v;
    }
    mono.le(1.0, a0 - 1e-3);
    rows.push(mono.row(mu));
    let mut smooth = Check::new("chi C2 at the junctions");
    for s in [1.0, 2.0] {
        let lo = chi.eval(s - 1e-12);
        let hi = chi.eval(s + 1e-12);
        smooth.le((lo.0 - hi.0).abs() + (lo.1 - hi.1).abs() + (lo.2 - hi.2).abs(), 1e-9);
    }
    rows.push(smooth.row(mu));

    // limits μ → ∞ on a fixed ξ-grid: the error vanishes once ξ² ≤ μ
    let mut limits = Check::new("F, F', F'', G -> xi^2, 2 xi, 2, xi^2 as mu grows");
    let fixed: Vec<f64> = (0..=200).map(|k| -5.0 + 0.05 * k as f64).collect();
    let err_at = |m: f64| {
        let fam = TruncationFamily { mu: m, ..*family };
        fixed
            .iter()
            .map(|&x| {
                let (f, f1, f2) = fam.eval(x);
                (f - x * x).abs() + (f1 - 2.0 * x).abs() + (f2 - 2.0).abs() + (fam.g(x) - x * x).abs()
            })
            .fold(0.0, f64::max)
    };
    // the sup error need not shrink monotonically, but it is zero once μ ≥ 25
    let mut m = mu;
    while m < 25.0 {
        m *= 10.0;
    }
    limits.le(err_at(m), 0.0);
    limits.le(err_at(100.0 * m), 0.0);
    rows.push(limits.row(mu));

    // the two μ-uniform bounds over a log-grid of scales
    let mut uniform = Check::new("sup over mu of F / 2 xi^2, |F'| / 2 sqrt2 A0 |xi|, |G| / 2 (sqrt2 A0 + 1) xi^2 <= 1");
    for k in 0..=120 {
        let fam = TruncationFamily { mu: 10f64.powf(-3.0 + 0.05 * k as f64), ..*family };
        for &x in fixed.iter().filter(|x| **x != 0.0) {
            let (f, f1, _) = fam.eval(x);
            uniform.le(f, 2.0 * x * x);
            uniform.le(f1.abs(), 2.0 * 2f64.sqrt() * a0 * x.abs());
            uniform.le(fam.g(x).abs(), 2.0 * (2f64.sqrt() * a0 + 1.0) * x * x);
        }
    }
    rows.push(uniform.row(mu));
    rows
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn profile_constants_match_closed_form() {
        let f = build_truncation(1.0).unwrap();
        // χ'' vanishes at r = 0.4 where χ' = 1.512; |χ''| peaks at r = (14 + √76)/30
        assert!((f.a0 - 1.512).abs() < 1e-9);
        let r: f64 = (14.0 + 76f64.sqrt()) / 30.0;
        let peak = (r * (24.0 - 84.0 * r + 60.0 * r * r)).abs();
        assert!((f.a1 - peak).abs() < 1e-8);
        assert!(f.c_chi.is_finite() && f.c_chi >= 1.0);
    }

    #[test]
    fn unsaturated_region_is_exact() {
        let f = build_truncation(10.0).unwrap();
        for k in 0..100 {
            let x = -3.0 + 0.06 * k as f64;
            assert_eq!(f.eval(x).0, 10.0 * (x * x / 10.0));
            assert!((f.g(x) - x * x).abs() < 1e-12);
        }
        assert!(matches!(build_truncation(0.0), Err(Error::Domain(_))));
        assert!(matches!(build_truncation(-1.0), Err(Error::Domain(_))));
    }

    #[test]
    fn suite_passes_for_standard_scales() {
        for mu in [1.0, 10.0, 100.0] {
            let rows = truncation_property_suite(&build_truncation(mu).unwrap());
            for r in &rows {
                assert!(r.pass, "{r:?}");
            }
        }
    }

    #[test]
    fn derivatives_match_differences() {
        let f = build_truncation(2.0).unwrap();
        for k in 0..200 {
            let x = -2.5 + 0.0251 * k as f64;
            let h = 1e-5;
            let (_, d1, d2) = f.eval(x);
            let fd1 = (f.eval(x + h).0 - f.eval(x - h).0) / (2.0 * h);
            let fd2 = (f.eval(x + h).1 - f.eval(x - h).1) / (2.0 * h);
            assert!((d1 - fd1).abs() < 1e-6);
            assert!((d2 - fd2).abs() < 1e-5, "{x}");
        }
    }
}
