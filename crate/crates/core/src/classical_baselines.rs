//! Closed-form classical trap currents: diffusion onto an absorbing wall and
//! the simple random walk on the half line absorbed at the origin.

use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};

/// Above this time binomials are evaluated through log-gamma differences.
const EXACT_TIME_LIMIT: u64 = 60;

/// Current `-√(D/(πt))` through an absorbing wall for unit initial density.
pub fn diffusion_current(d: f64, t: f64) -> Result<f64> {
    if !(d > 0.0 && d.is_finite()) {
        return Err(Error::Argument(format!("diffusivity must be positive, got {d}")));
    }
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::Argument(format!("time must be positive, got {t}")));
    }
    Ok(-(d / (std::f64::consts::PI * t)).sqrt())
}

/// Exact `binom(n, k)`; callers keep `n <= EXACT_TIME_LIMIT`.
fn binom_exact(n: u64, k: u64) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    acc
}

fn ln_binom(n: u64, k: u64) -> f64 {
    ln_gamma(n as f64 + 1.0) - ln_gamma(k as f64 + 1.0) - ln_gamma((n - k) as f64 + 1.0)
}

/// Probability that the walk started at `x` first hits `0` at time `t`.
///
/// `p(0, 0) = 1` and `p(0, t) = 0` for `t > 0`; otherwise
/// `2^{-t} [binom(t-1, (t-x)/2) - binom(t-1, (t-x-2)/2)]` when `t - x` is
/// even and nonnegative, and `0` else.
pub fn rw_first_passage(x: u64, t: u64) -> f64 {
    if x == 0 {
        return if t == 0 { 1.0 } else { 0.0 };
    }
    if x > t || (t - x) % 2 == 1 {
        return 0.0;
    }
    let k = (t - x) / 2;
    if t <= EXACT_TIME_LIMIT {
        let upper = binom_exact(t - 1, k);
        let lower = if k == 0 { 0 } else { binom_exact(t - 1, k - 1) };
        return (upper - lower) as f64 * 2f64.powi(-(t as i32));
    }
    // binom(t-1, k) - binom(t-1, k-1) = binom(t-1, k) (t - 2k) / (t - k)
    let ln_p = ln_binom(t - 1, k) + (x as f64 / (t - k) as f64).ln() - t as f64 * std::f64::consts::LN_2;
    ln_p.exp()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WalkCurrentPoint {
    pub t: u64,
    pub j: f64,
}

/// `J(t) = 2^{-t} binom(t-1, ⌊(t-1)/2⌋)`, the first-passage probability at
/// time `t` summed over all starting sites.
pub fn rw_current(t: u64) -> Result<WalkCurrentPoint> {
    if t == 0 {
        return Err(Error::Argument("the walk current is defined for t >= 1".into()));
    }
    // J(2m) = J(2m + 1) = binom(2m, m) 2^{-2m-1}
    let m = t / 2;
    let j = if 2 * m <= EXACT_TIME_LIMIT {
        binom_exact(2 * m, m) as f64 * 2f64.powi(-(2 * m as i32) - 1)
    } else {
        (ln_binom(2 * m, m) - (2 * m + 1) as f64 * std::f64::consts::LN_2).exp()
    };
    Ok(WalkCurrentPoint { t, j })
}
