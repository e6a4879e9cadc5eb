//! The partition profile shared by the sphere quadrature and the noise frames.
//!
//! On S² the two weights depend only on the height `x3`:
//! `α_N = sin(π/2 · s(x3))`, `α_S = cos(π/2 · s(x3))`, where `s` is a quintic
//! smoothstep across the band `|x3| ≤ BAND`. Hence `α_N² + α_S² = 1`
//! identically, both weights are C², and the squared weights are C⁵.

use std::f64::consts::FRAC_PI_2;

use crate::geometry::Real;

/// Half-width of the blending band in `x3`; `0.5` is latitude ±30°.
pub const BAND: f64 = 0.5;

/// Quintic smoothstep on a dual-number argument, clamped to [0, 1].
pub fn smoothstep5_t<T: Real>(t: T) -> T {
    let r = t.re();
    if r <= 0.0 {
        T::from(0.0)
    } else if r >= 1.0 {
        T::from(1.0)
    } else {
        let t3 = t * t * t;
        t3 * (T::from(10.0) + t * (T::from(-15.0) + t * 6.0))
    }
}

/// Ramp `s(x3)`: 0 below the band, 1 above it.
pub fn ramp<T: Real>(x3: T) -> T {
    smoothstep5_t((x3 + BAND) * (0.5 / BAND))
}

pub fn alpha_north<T: Real>(x3: T) -> T {
    let s = ramp(x3);
    match s.re() {
        r if r <= 0.0 => T::from(0.0),
        r if r >= 1.0 => T::from(1.0),
        _ => (s * FRAC_PI_2).sin(),
    }
}

pub fn alpha_south<T: Real>(x3: T) -> T {
    let s = ramp(x3);
    match s.re() {
        r if r <= 0.0 => T::from(1.0),
        r if r >= 1.0 => T::from(0.0),
        _ => (s * FRAC_PI_2).cos(),
    }
}
