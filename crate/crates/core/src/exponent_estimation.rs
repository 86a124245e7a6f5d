//! Power-law exponents of currents and the closed-form bounds they are
//! compared with.

use std::f64::consts::LN_2;
use std::ops::Range;

use crate::error::{Error, Result};
use crate::trap_dynamics::CurrentSeries;

/// Agreement threshold between the time exponent and the Abel exponent.
pub const TAUBERIAN_TOLERANCE: f64 = 0.1;

/// Below this a current counts as exactly absorbed and cannot be fitted.
const FITTABLE_FLOOR: f64 = 1e-14;

/// How the log-log slope maps to an exponent.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FitMode {
    /// `x = t`, `y = J(t) ~ t^{-γ}`: exponent is minus the slope.
    Gamma,
    /// `x = 1 - r`, `y = J̃(r) ~ (1-r)^α`: exponent is the slope.
    Alpha,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExponentFit {
    pub exponent: f64,
    pub intercept: f64,
    /// Largest absolute deviation of `ln y` from the fitted line.
    pub residual: f64,
    pub window: Range<usize>,
    /// Set when the exponent falls outside `[0, 1]`.
    pub out_of_range: bool,
}

/// Least-squares line through `(ln x, ln y)` over `points[window]`.
pub fn fit_exponent(points: &[(f64, f64)], window: Range<usize>, mode: FitMode) -> Result<ExponentFit> {
    if window.start > window.end || window.end > points.len() {
        return Err(Error::Argument(format!(
            "fit window {window:?} does not fit {} points",
            points.len()
        )));
    }
    let data = &points[window.clone()];
    if data.len() < 3 {
        return Err(Error::Argument(format!(
            "fit needs at least 3 points, window {window:?} has {}",
            data.len()
        )));
    }
    if let Some((x, y)) = data.iter().find(|(x, y)| !(*x > 0.0 && *y > 0.0)) {
        return Err(Error::Argument(format!("log-log fit needs positive data, got ({x}, {y})")));
    }
    let logs: Vec<(f64, f64)> = data.iter().map(|(x, y)| (x.ln(), y.ln())).collect();
    let n = logs.len() as f64;
    let mean_x = logs.iter().map(|p| p.0).sum::<f64>() / n;
    let mean_y = logs.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = logs.iter().map(|p| (p.0 - mean_x).powi(2)).sum();
    let sxy: f64 = logs.iter().map(|p| (p.0 - mean_x) * (p.1 - mean_y)).sum();
    if sxx == 0.0 {
        return Err(Error::Fit("all abscissae coincide".into()));
    }
    let slope = sxy / sxx;
    let intercept = mean_y - slope * mean_x;
    let residual = logs
        .iter()
        .map(|(lx, ly)| (ly - (slope * lx + intercept)).abs())
        .fold(0.0, f64::max);
    let exponent = match mode {
        FitMode::Gamma => -slope,
        FitMode::Alpha => slope,
    };
    Ok(ExponentFit {
        exponent,
        intercept,
        residual,
        window,
        out_of_range: !(-1e-12..=1.0 + 1e-12).contains(&exponent),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Agreement {
    Agree,
    Disagree,
    /// The time series is absorbed in finitely many steps.
    NotApplicable,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TauberianReport {
    pub gamma: Option<ExponentFit>,
    pub alpha: ExponentFit,
    pub agreement: Agreement,
}

/// Compares the decay exponent of `J(t)` with that of `J̃(r)`.
///
/// `ladder` holds `(r, J̃(r))`. The current is sampled at the matching times
/// `t ≈ 1/(1-r)`, so both fits span the same scale range.
pub fn tauberian_check(series: &CurrentSeries, ladder: &[(f64, f64)]) -> Result<TauberianReport> {
    let alpha_points: Vec<(f64, f64)> = ladder.iter().map(|&(r, jt)| (1.0 - r, jt)).collect();
    let alpha = fit_exponent(&alpha_points, 0..alpha_points.len(), FitMode::Alpha)?;

    let mut times: Vec<usize> = ladder
        .iter()
        .map(|&(r, _)| (1.0 / (1.0 - r)).round() as usize)
        .collect();
    times.sort_unstable();
    times.dedup();
    if let Some(&t) = times.iter().find(|&&t| t == 0 || t > series.len()) {
        return Err(Error::Fit(format!(
            "current series has {} steps but the ladder needs t = {t}",
            series.len()
        )));
    }
    let gamma_points: Vec<(f64, f64)> = times.iter().map(|&t| (t as f64, series.current(t))).collect();
    if gamma_points.iter().any(|&(_, j)| j <= FITTABLE_FLOOR) {
        return Ok(TauberianReport {
            gamma: None,
            alpha,
            agreement: Agreement::NotApplicable,
        });
    }
    let gamma = fit_exponent(&gamma_points, 0..gamma_points.len(), FitMode::Gamma)?;
    let agreement = if (gamma.exponent - alpha.exponent).abs() <= TAUBERIAN_TOLERANCE {
        Agreement::Agree
    } else {
        Agreement::Disagree
    };
    Ok(TauberianReport {
        gamma: Some(gamma),
        alpha,
        agreement,
    })
}

/// Shannon entropy of `(q, 1-q)` in nats.
pub(crate) fn shannon_entropy(q: f64) -> f64 {
    xlogx_neg(q) + xlogx_neg(1.0 - q)
}

/// Relative entropy `S(p1|p2)` of `(p1, 1-p1)` w.r.t. `(p2, 1-p2)` in nats.
pub(crate) fn relative_entropy(p1: f64, p2: f64) -> f64 {
    -shannon_entropy(p1) - p1 * p2.ln() - (1.0 - p1) * (1.0 - p2).ln()
}

fn xlogx_neg(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        -x * x.ln()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BernoulliBound {
    /// Optimal digit-frequency threshold, between `min(p, 1-p)` and 1/2.
    pub q: f64,
    pub alpha_lower: f64,
}

/// Lower bound `(ln 2 - S(q)) / (2 ln 2 - S(q))` on the `J̃` exponent of `μ_p`.
///
/// `q = ln(2(1-p)) / ln((1-p)/p)` for `p < 1/2` is the threshold at which
/// `S(q|1/2) = S(q|p)`; `p > 1/2` is mapped to `1 - p`.
pub fn bernoulli_bound(p: f64) -> Result<BernoulliBound> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::Argument(format!("Bernoulli parameter p = {p} must lie in (0, 1)")));
    }
    if p == 0.5 {
        return Err(Error::Argument("p = 1/2 is the Lebesgue measure; the bound degenerates".into()));
    }
    let p = if p > 0.5 { 1.0 - p } else { p };
    let q = (2.0 * (1.0 - p)).ln() / ((1.0 - p) / p).ln();
    debug_assert!((relative_entropy(q, 0.5) - relative_entropy(q, p)).abs() < 1e-12);
    let s = shannon_entropy(q);
    Ok(BernoulliBound {
        q,
        alpha_lower: (LN_2 - s) / (2.0 * LN_2 - s),
    })
}

/// Exponent `(α-1)/(2α-1)` for atomic weights decaying like `j^{-α}`.
pub fn powerlaw_atomic_bound(alpha: f64) -> Result<f64> {
    if !(alpha > 1.0) {
        return Err(Error::Argument(format!(
            "weights ~ j^(-{alpha}) are not summable; need alpha > 1"
        )));
    }
    if alpha.is_infinite() {
        return Ok(0.5);
    }
    Ok((alpha - 1.0) / (2.0 * alpha - 1.0))
}
