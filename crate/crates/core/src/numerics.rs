//! Small numerical helpers shared across modules.

/// Pairwise (cascade) summation. The result depends only on the order of
/// `values`, never on how work was scheduled to produce them.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    const BLOCK: usize = 32;
    if values.len() <= BLOCK {
        return values.iter().sum();
    }
    let mid = values.len() / 2;
    pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
}

pub fn mean(values: &[f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    pairwise_sum(values) / values.len() as f64
}

/// Mean and standard error of the mean (sample variance with n-1).
pub fn mean_stderr(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    let m = mean(values);
    if n < 2 {
        return (m, 0.0);
    }
    let sq: Vec<f64> = values.iter().map(|v| (v - m) * (v - m)).collect();
    let var = pairwise_sum(&sq) / (n - 1) as f64;
    (m, (var / n as f64).sqrt())
}

/// Least-squares slope of `log(err)` against `log(h)`.
pub fn observed_order(h: &[f64], err: &[f64]) -> f64 {
    let xs: Vec<f64> = h.iter().map(|v| v.ln()).collect();
    let ys: Vec<f64> = err.iter().map(|v| v.ln()).collect();
    linear_fit(&xs, &ys).1
}

/// Ordinary least squares `y = a + b x`, returns `(a, b)`.
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let b = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    (my - b * mx, b)
}

/// Quintic smoothstep `6t^5 - 15t^4 + 10t^3` clamped to [0, 1], with first
/// and second derivatives. C2 at both ends.
pub fn smoothstep5(t: f64) -> (f64, f64, f64) {
    if t <= 0.0 {
        (0.0, 0.0, 0.0)
    } else if t >= 1.0 {
        (1.0, 0.0, 0.0)
    } else {
        let t2 = t * t;
        let v = t2 * t * (10.0 - 15.0 * t + 6.0 * t2);
        let d1 = 30.0 * t2 * (1.0 - t) * (1.0 - t);
        let d2 = 60.0 * t * (1.0 - t) * (1.0 - 2.0 * t);
        (v, d1, d2)
    }
}

/// Central finite-difference step for a coordinate of magnitude `x`.
pub fn fd_step(x: f64) -> f64 {
    1e-5 * x.abs().max(1.0)
}
