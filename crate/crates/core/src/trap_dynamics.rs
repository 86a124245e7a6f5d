//! Currents of a rank-one trap `A = |φ⟩⟨φ|` driven by the spectral measure of
//! the trap state.
//!
//! The overlap sequence `μ^(s)` determines everything: the coefficients
//! `K(s)` of `F = G/(1+G)` follow from a one-sided convolution recursion, the
//! current is `J(t) = 1 - Σ_{s<t} |K(s)|²` and its Abel-regularized version is
//! `J̃(r) = 1 - Σ r^{2s} |K(s)|²`. On a circle of radius `r` the same quantity
//! is the average of `1 - |F|² = (1 + 2 Re G)/|1 + G|²`.

use std::f64::consts::TAU;

use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::{Error, Result};
use crate::spectral_measure::{hilbert_transform, moments, Cutoff, MomentSequence, SpectralMeasure};
use crate::summation::NeumaierSum;

/// Tail bound `r^S / (1 - r)` accepted when truncating `G`.
pub const SERIES_TAIL_TOL: f64 = 1e-12;
/// Relative tail `r^{2T}` accepted when truncating `J̃`.
pub const JTILDE_TAIL_TOL: f64 = 1e-14;

/// Smallest `S` with `r^S / (1 - r) <= 1e-12`.
pub fn required_truncation(r: f64) -> usize {
    if r <= 0.0 {
        return 1;
    }
    let s = ((1.0 / (SERIES_TAIL_TOL * (1.0 - r))).ln() / (1.0 / r).ln()).ceil();
    (s.max(1.0)) as usize
}

/// Smallest `T` with `r^{2T} <= 1e-14`.
pub fn required_k_length(r: f64) -> usize {
    if r <= 0.0 {
        return 1;
    }
    let t = (JTILDE_TAIL_TOL.ln() / (2.0 * r.ln())).ceil();
    (t.max(1.0)) as usize
}

/// `r_k = 1 - 2^{-k}` for `k = k_min..=k_max`.
pub fn dyadic_ladder(k_min: u32, k_max: u32) -> Vec<f64> {
    (k_min..=k_max).map(|k| 1.0 - (-(k as f64)).exp2()).collect()
}

/// `K(1), ..., K(T)` from `K(t+1) = μ^(t+1) - Σ_{s=1}^t μ^(t-s+1) K(s)`.
pub fn k_sequence(moments: &MomentSequence, t_max: usize) -> Result<Vec<Complex64>> {
    if moments.truncation() < t_max {
        return Err(Error::Argument(format!(
            "K-sequence up to T = {t_max} needs moments up to order {t_max}, have S = {}",
            moments.truncation()
        )));
    }
    let mu = moments.coeffs();
    let mut k: Vec<Complex64> = Vec::with_capacity(t_max);
    for t in 0..t_max {
        // computes K(t+1); k[s-1] holds K(s)
        let mut acc = mu[t + 1];
        let conv: Complex64 = k.iter().zip(mu[1..=t].iter().rev()).map(|(ks, m)| ks * m).sum();
        acc -= conv;
        k.push(acc);
    }
    Ok(k)
}

/// `K(t)`, `J(t)` and `N(t)` for `t = 1..=T`.
#[derive(Debug, Clone, PartialEq)]
pub struct CurrentSeries {
    pub k: Vec<Complex64>,
    pub j: Vec<f64>,
    pub n: Vec<f64>,
}

impl CurrentSeries {
    pub fn len(&self) -> usize {
        self.j.len()
    }

    pub fn is_empty(&self) -> bool {
        self.j.is_empty()
    }

    /// `J(t)` with 1-based `t`.
    pub fn current(&self, t: usize) -> f64 {
        self.j[t - 1]
    }

    pub fn trapped(&self, t: usize) -> f64 {
        self.n[t - 1]
    }
}

/// Builds `J(t) = 1 - Σ_{s<t} |K(s)|²` (with `J(1) = 1`) and its running sum.
pub fn current_series(k: &[Complex64], t_max: usize) -> Result<CurrentSeries> {
    if t_max == 0 {
        return Err(Error::Argument("current series needs T >= 1".into()));
    }
    if k.len() + 1 < t_max {
        return Err(Error::Argument(format!(
            "current series up to T = {t_max} needs {} K values, got {}",
            t_max - 1,
            k.len()
        )));
    }
    let mut j = Vec::with_capacity(t_max);
    let mut n = Vec::with_capacity(t_max);
    let mut remaining = NeumaierSum::with_value(1.0);
    let mut trapped = NeumaierSum::new();
    for t in 1..=t_max {
        if t > 1 {
            remaining.add(-k[t - 2].norm_sqr());
        }
        let jt = remaining.value();
        trapped.add(jt);
        j.push(jt);
        n.push(trapped.value());
    }
    Ok(CurrentSeries {
        k: k[..t_max.min(k.len())].to_vec(),
        j,
        n,
    })
}

/// `G` and `F = G/(1+G)` sampled at `z = r e^{iη_k}`, `η_k = 2πk/M`.
#[derive(Debug, Clone)]
pub struct DiskSample {
    pub r: f64,
    pub g: Vec<Complex64>,
    pub f: Vec<Complex64>,
}

impl DiskSample {
    pub fn mesh_size(&self) -> usize {
        self.g.len()
    }

    pub fn angle(&self, k: usize) -> f64 {
        TAU * k as f64 / self.g.len() as f64
    }
}

fn check_radius(r: f64) -> Result<()> {
    if !(0.0..1.0).contains(&r) {
        return Err(Error::Argument(format!("radius r = {r} must satisfy 0 <= r < 1")));
    }
    Ok(())
}

fn check_mesh(mesh: usize) -> Result<()> {
    if mesh < 2 {
        return Err(Error::Argument(format!("mesh size {mesh} must be at least 2")));
    }
    Ok(())
}

/// Evaluates the truncated series `G(z) = Σ_{s=1}^S z^s μ^(s)` on the mesh.
///
/// Coefficients are folded modulo `M` and transformed with one FFT, which
/// is the exact mesh evaluation of the truncated series for any `S`.
pub fn g_on_circle(moments: &MomentSequence, r: f64, mesh: usize) -> Result<DiskSample> {
    check_radius(r)?;
    check_mesh(mesh)?;
    let required = required_truncation(r);
    let available = moments.truncation();
    if available < required {
        return Err(Error::Truncation {
            r,
            available,
            required,
        });
    }
    let mu = moments.coeffs();
    let mut folded = vec![Complex64::new(0.0, 0.0); mesh];
    for (s, m) in mu.iter().enumerate().skip(1) {
        let weight = r.powi(s as i32);
        if weight == 0.0 {
            break;
        }
        folded[s % mesh] += m * weight;
    }
    FftPlanner::new().plan_fft_inverse(mesh).process(&mut folded);
    let f = folded.iter().map(|g| g / (1.0 + g)).collect();
    Ok(DiskSample { r, g: folded, f })
}

/// Abel-regularized current `J̃(r) = 1 - Σ_{s>=1} r^{2s} |K(s)|²`.
pub fn jtilde_series(k: &[Complex64], r: f64) -> Result<f64> {
    check_radius(r)?;
    let needed = required_k_length(r);
    if k.len() < needed {
        return Err(Error::Argument(format!(
            "J̃({r}) needs at least {needed} K values, got {}",
            k.len()
        )));
    }
    let r2 = r * r;
    let mut acc = NeumaierSum::with_value(1.0);
    let mut weight = 1.0;
    for ks in k {
        weight *= r2;
        if weight == 0.0 {
            break;
        }
        acc.add(-weight * ks.norm_sqr());
    }
    Ok(acc.value())
}

/// Mesh average of `1 - |F|²` on the circle of radius `r`.
///
/// With `include_imaginary` the exact integrand `(1+2 Re G)/|1+G|²` is
/// used; without it `Im G` is dropped from the denominator, giving the
/// upper bound `(1+2 Re G)/(1+Re G)²`.
pub fn jtilde_integral(
    moments: &MomentSequence,
    r: f64,
    mesh: usize,
    include_imaginary: bool,
) -> Result<f64> {
    let sample = g_on_circle(moments, r, mesh)?;
    Ok(disk_average(&sample, include_imaginary))
}

/// Mesh average of the `J̃` integrand for an already evaluated sample.
pub fn disk_average(sample: &DiskSample, include_imaginary: bool) -> f64 {
    let mut acc = NeumaierSum::new();
    for g in &sample.g {
        let numerator = 1.0 + 2.0 * g.re;
        let denominator = if include_imaginary {
            (1.0 + g).norm_sqr()
        } else {
            (1.0 + g.re) * (1.0 + g.re)
        };
        acc.add(numerator / denominator);
    }
    acc.value() / sample.g.len() as f64
}

/// `J_∞ = (1/2π) ∫ 4ρ / ((1+ρ)² + 4(Hρ)²)` for an absolutely continuous measure.
pub fn asymptotic_current_ac(measure: &SpectralMeasure) -> Result<f64> {
    let SpectralMeasure::Density(d) = measure else {
        return Err(Error::Argument(
            "asymptotic current formula needs a density measure".into(),
        ));
    };
    let mut acc = NeumaierSum::new();
    for (k, &rho) in d.values().iter().enumerate() {
        let h = hilbert_transform(measure, d.angle(k), Cutoff::GridStep)?;
        acc.add(4.0 * rho / ((1.0 + rho) * (1.0 + rho) + 4.0 * h * h));
    }
    Ok(acc.value() / d.grid_size() as f64)
}

/// One row of a `J̃` scan.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JtildeScanRow {
    pub r: f64,
    pub one_minus_r: f64,
    pub jtilde_true: f64,
    pub jtilde_no_im: f64,
}

/// Both integral routes for every radius of `ladder`, sharing one set of moments.
pub fn jtilde_scan(measure: &SpectralMeasure, ladder: &[f64], mesh: usize) -> Result<Vec<JtildeScanRow>> {
    let r_max = ladder.iter().copied().fold(0.0, f64::max);
    let mom = moments(measure, required_truncation(r_max))?;
    ladder
        .iter()
        .map(|&r| {
            let sample = g_on_circle(&mom, r, mesh)?;
            Ok(JtildeScanRow {
                r,
                one_minus_r: 1.0 - r,
                jtilde_true: disk_average(&sample, true),
                jtilde_no_im: disk_average(&sample, false),
            })
        })
        .collect()
}
