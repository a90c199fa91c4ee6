//! Float helpers that work without `std`.

pub use libm::{atan2, cos, exp, log, pow, sin, sqrt};
use core::f64::consts::PI as PI_F64;

pub const PI: f64 = PI_F64;

pub fn powi(x: f64, n: i32) -> f64 {
    let mut acc = 1.0;
    let mut base = if n < 0 { 1.0 / x } else { x };
    let mut k = n.unsigned_abs();
    while k > 0 {
        if k & 1 == 1 {
            acc *= base;
        }
        base *= base;
        k >>= 1;
    }
    acc
}

pub fn hypot(a: f64, b: f64) -> f64 {
    libm::hypot(a, b)
}

pub fn acos(x: f64) -> f64 {
    libm::acos(x.clamp(-1.0, 1.0))
}

/// Least-squares slope of `ys` against `xs`.
pub fn fit_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    for (x, y) in xs.iter().zip(ys) {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx) * (x - mx);
    }
    sxy / sxx
}

/// Slope of `log y` against `log x`.
pub fn loglog_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let lx: alloc::vec::Vec<f64> = xs.iter().map(|&x| log(x)).collect();
    let ly: alloc::vec::Vec<f64> = ys.iter().map(|&y| log(y)).collect();
    fit_slope(&lx, &ly)
}
