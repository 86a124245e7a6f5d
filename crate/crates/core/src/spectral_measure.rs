//! Probability measures on the unit circle, their Fourier moments and their
//! Poisson and Hilbert transforms.
//!
//! Three concrete representations are supported: finitely many atoms, a
//! density sampled on an equispaced grid, and the Bernoulli measure of a
//! biased binary expansion. The latter is always handled through its
//! level-`n` dyadic discretization, which is itself an atomic measure.
//!
//! Conventions used throughout the crate:
//!
//! * angles live in `[0, 2π)`;
//! * the moments are `μ^(s) = ∫ μ(dθ) e^{-isθ}`, so `μ^(-s) = conj(μ^(s))`;
//! * the Hilbert transform is the boundary value of `Im G`, i.e.
//!   `(Hμ)(η) = ½ PV ∫ μ(dθ) cot((η-θ)/2)`.

use std::borrow::Cow;
use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::{Error, Result};
use crate::linalg::CMatrix;
use crate::summation::{compensated_sum, ComplexNeumaierSum, NeumaierSum};

/// Dyadic level used for Bernoulli measures unless told otherwise.
pub const DEFAULT_BERNOULLI_LEVEL: u32 = 13;
/// Default number of grid points for densities and circle meshes.
pub const DEFAULT_MESH: usize = 1 << 13;
/// Largest admissible Bernoulli level (2^24 atoms).
pub const MAX_BERNOULLI_LEVEL: u32 = 24;

const ATOMIC_MASS_TOL: f64 = 1e-12;
const DENSITY_MASS_TOL: f64 = 1e-10;

/// Reduces an angle to the canonical branch `[0, 2π)`.
pub fn reduce_angle(theta: f64) -> f64 {
    let r = theta.rem_euclid(TAU);
    if r >= TAU {
        0.0
    } else {
        r
    }
}

/// Signed representative of an angle difference in `(-π, π]`.
pub fn wrap_difference(x: f64) -> f64 {
    let r = reduce_angle(x);
    if r > PI {
        r - TAU
    } else {
        r
    }
}

/// `(1 - r²) / (1 + r² - 2r cos x)`, written in a form that stays accurate
/// for `r` close to 1 and small `x`.
#[inline]
pub fn poisson_kernel(r: f64, x: f64) -> f64 {
    let one_minus_r = 1.0 - r;
    let half_sin = (0.5 * x).sin();
    one_minus_r * (1.0 + r) / (one_minus_r * one_minus_r + 4.0 * r * half_sin * half_sin)
}

/// Finitely many point masses.
#[derive(Debug, Clone, PartialEq)]
pub struct Atomic {
    angles: Vec<f64>,
    weights: Vec<f64>,
}

impl Atomic {
    pub fn new(angles: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        if angles.len() != weights.len() {
            return Err(Error::Validation(format!(
                "atomic measure: {} angles but {} weights",
                angles.len(),
                weights.len()
            )));
        }
        if angles.is_empty() {
            return Err(Error::Validation("atomic measure without atoms".into()));
        }
        if let Some((j, w)) = weights.iter().enumerate().find(|(_, w)| !(**w >= 0.0) || !w.is_finite()) {
            return Err(Error::Validation(format!("atomic measure: weight {j} is {w}")));
        }
        if let Some(j) = angles.iter().position(|a| !a.is_finite()) {
            return Err(Error::Validation(format!("atomic measure: angle {j} is not finite")));
        }
        let total = compensated_sum(weights.iter().copied());
        if (total - 1.0).abs() > ATOMIC_MASS_TOL {
            return Err(Error::Validation(format!(
                "atomic measure: weights sum to {total:.17}, not 1"
            )));
        }
        let angles: Vec<f64> = angles.into_iter().map(reduce_angle).collect();
        let mut sorted: Vec<(f64, usize)> = angles.iter().copied().zip(0..).collect();
        sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
        if let Some(w) = sorted.windows(2).find(|w| w[0].0 == w[1].0) {
            return Err(Error::Validation(format!(
                "atomic measure: atoms {} and {} share the angle {}",
                w[0].1, w[1].1, w[0].0
            )));
        }
        let weights = weights.into_iter().map(|w| w / total).collect();
        Ok(Self { angles, weights })
    }

    pub fn angles(&self) -> &[f64] {
        &self.angles
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.angles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.angles.is_empty()
    }
}

/// A density `ρ` w.r.t. `dθ/2π`, sampled at `θ_k = 2πk/M`.
#[derive(Debug, Clone, PartialEq)]
pub struct Density {
    values: Vec<f64>,
}

impl Density {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.len() < 2 {
            return Err(Error::Validation(format!(
                "density grid needs at least 2 points, got {}",
                values.len()
            )));
        }
        if let Some((k, v)) = values.iter().enumerate().find(|(_, v)| !(**v >= 0.0) || !v.is_finite()) {
            return Err(Error::Validation(format!("density: value {k} is {v}")));
        }
        let mass = compensated_sum(values.iter().copied()) / values.len() as f64;
        if (mass - 1.0).abs() > DENSITY_MASS_TOL {
            return Err(Error::Validation(format!(
                "density: grid average is {mass:.17}, not 1"
            )));
        }
        Ok(Self {
            values: values.into_iter().map(|v| v / mass).collect(),
        })
    }

    /// Samples `f` on an `m`-point grid; `f` must already be normalized.
    pub fn from_fn(m: usize, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new((0..m).map(|k| f(TAU * k as f64 / m as f64)).collect())
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn grid_size(&self) -> usize {
        self.values.len()
    }

    pub fn grid_step(&self) -> f64 {
        TAU / self.values.len() as f64
    }

    pub fn angle(&self, k: usize) -> f64 {
        TAU * k as f64 / self.values.len() as f64
    }

    /// Periodic linear interpolation between grid values.
    pub fn interpolate(&self, eta: f64) -> f64 {
        let m = self.values.len();
        let x = reduce_angle(eta) / self.grid_step();
        let k = (x.floor() as usize).min(m - 1);
        let frac = x - k as f64;
        self.values[k] * (1.0 - frac) + self.values[(k + 1) % m] * frac
    }
}

/// Push-forward of the i.i.d. `(1-p, p)` bit measure through `x ↦ 2πx`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bernoulli {
    p: f64,
    level: u32,
}

impl Bernoulli {
    pub fn new(p: f64, level: u32) -> Result<Self> {
        if !(p > 0.0 && p < 1.0) {
            return Err(Error::Argument(format!("Bernoulli parameter p = {p} must lie in (0, 1)")));
        }
        if level == 0 {
            return Err(Error::Argument("Bernoulli level must be at least 1".into()));
        }
        if level > MAX_BERNOULLI_LEVEL {
            return Err(Error::Resource(format!(
                "Bernoulli level {level} exceeds the limit {MAX_BERNOULLI_LEVEL} (2^{level} atoms)"
            )));
        }
        Ok(Self { p, level })
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    /// Weights of the `2^level` dyadic atoms, indexed by `k` for `θ = 2πk/2^level`.
    pub fn grid_weights(&self) -> Vec<f64> {
        let n = self.level as usize;
        let mut table = Vec::with_capacity(n + 1);
        for ones in 0..=n {
            table.push(self.p.powi(ones as i32) * (1.0 - self.p).powi((n - ones) as i32));
        }
        (0..1usize << n).map(|k| table[k.count_ones() as usize]).collect()
    }
}

/// A probability measure on the unit circle.
#[derive(Debug, Clone, PartialEq)]
pub enum SpectralMeasure {
    Atomic(Atomic),
    Density(Density),
    Bernoulli(Bernoulli),
}

/// Point masses underlying any of the representations.
#[derive(Debug, Clone, PartialEq)]
pub struct PointMasses {
    pub angles: Vec<f64>,
    pub weights: Vec<f64>,
}

impl SpectralMeasure {
    pub fn dirac(theta: f64) -> Self {
        SpectralMeasure::Atomic(Atomic {
            angles: vec![reduce_angle(theta)],
            weights: vec![1.0],
        })
    }

    pub fn atomic(angles: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        Atomic::new(angles, weights).map(SpectralMeasure::Atomic)
    }

    /// Normalized Lebesgue measure on an `m`-point grid.
    pub fn lebesgue(m: usize) -> Result<Self> {
        Density::new(vec![1.0; m]).map(SpectralMeasure::Density)
    }

    pub fn density(values: Vec<f64>) -> Result<Self> {
        Density::new(values).map(SpectralMeasure::Density)
    }

    pub fn bernoulli(p: f64, level: u32) -> Result<Self> {
        Bernoulli::new(p, level).map(SpectralMeasure::Bernoulli)
    }

    /// The measure as weighted points. For densities these are the grid
    /// nodes carrying `ρ_k / M`.
    pub fn point_masses(&self) -> Cow<'_, PointMasses> {
        match self {
            SpectralMeasure::Atomic(a) => Cow::Owned(PointMasses {
                angles: a.angles.clone(),
                weights: a.weights.clone(),
            }),
            SpectralMeasure::Density(d) => {
                let m = d.grid_size() as f64;
                Cow::Owned(PointMasses {
                    angles: (0..d.grid_size()).map(|k| d.angle(k)).collect(),
                    weights: d.values.iter().map(|v| v / m).collect(),
                })
            }
            SpectralMeasure::Bernoulli(b) => {
                let w = b.grid_weights();
                let m = w.len() as f64;
                Cow::Owned(PointMasses {
                    angles: (0..w.len()).map(|k| TAU * k as f64 / m).collect(),
                    weights: w,
                })
            }
        }
    }
}

/// Level-`n` dyadic discretization of the Bernoulli measure `μ_p`.
pub fn bernoulli_discretize(p: f64, level: u32) -> Result<SpectralMeasure> {
    let b = Bernoulli::new(p, level)?;
    let weights = b.grid_weights();
    let m = weights.len() as f64;
    let angles = (0..weights.len()).map(|k| TAU * k as f64 / m).collect();
    Ok(SpectralMeasure::Atomic(Atomic { angles, weights }))
}

/// Truncated product `Π_{m=1..n} ((1-p) + p e^{-2πi s 2^{-m}})`.
pub fn bernoulli_product_moment(p: f64, level: u32, s: u64) -> Complex64 {
    let mut acc = Complex64::new(1.0, 0.0);
    for m in 1..=level {
        let modulus = 1u64 << m;
        let frac = (s % modulus) as f64 / modulus as f64;
        let phase = Complex64::from_polar(1.0, -TAU * frac);
        acc *= Complex64::new(1.0 - p, 0.0) + phase * p;
    }
    acc
}

/// Fourier coefficients `μ^(s)`, `s = 0..=S`.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentSequence {
    coeffs: Vec<Complex64>,
}

impl MomentSequence {
    /// Wraps raw coefficients, checking `μ^(0) = 1` and `|μ^(s)| <= 1`.
    pub fn new(coeffs: Vec<Complex64>) -> Result<Self> {
        let Some(first) = coeffs.first() else {
            return Err(Error::Validation("empty moment sequence".into()));
        };
        if (first - Complex64::new(1.0, 0.0)).norm() > 1e-12 {
            return Err(Error::Validation(format!("moment μ^(0) = {first} is not 1")));
        }
        if let Some((s, z)) = coeffs.iter().enumerate().find(|(_, z)| !(z.norm() <= 1.0 + 1e-12)) {
            return Err(Error::Validation(format!("moment μ^({s}) = {z} exceeds 1 in modulus")));
        }
        let mut coeffs = coeffs;
        coeffs[0] = Complex64::new(1.0, 0.0);
        Ok(Self { coeffs })
    }

    pub fn truncation(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    /// `μ^(s)` for any integer `s` with `|s| <= S`.
    pub fn get(&self, s: i64) -> Complex64 {
        let z = self.coeffs[s.unsigned_abs() as usize];
        if s < 0 {
            z.conj()
        } else {
            z
        }
    }

    /// The Hermitian Toeplitz matrix `[μ^(a-b)]_{a,b < m}`.
    pub fn toeplitz(&self, m: usize) -> Result<CMatrix> {
        if m == 0 || m > self.coeffs.len() {
            return Err(Error::Argument(format!(
                "Toeplitz order {m} needs moments up to {} but S = {}",
                m.saturating_sub(1),
                self.truncation()
            )));
        }
        Ok(CMatrix::from_fn(m, m, |a, b| self.get(a as i64 - b as i64)))
    }
}

/// Moments of a measure up to order `order` (inclusive).
///
/// Atomic measures are summed directly with compensation. Densities and
/// Bernoulli measures live on equispaced grids, so their moments form the
/// discrete Fourier transform of the grid weights and repeat with the grid
/// period.
pub fn moments(measure: &SpectralMeasure, order: usize) -> Result<MomentSequence> {
    if order < 1 {
        return Err(Error::Argument("moment order S must be at least 1".into()));
    }
    let mut coeffs = match measure {
        SpectralMeasure::Atomic(a) => atomic_moments(a, order),
        SpectralMeasure::Density(d) => {
            let m = d.grid_size() as f64;
            let w: Vec<f64> = d.values.iter().map(|v| v / m).collect();
            grid_moments(&w, order)
        }
        SpectralMeasure::Bernoulli(b) => grid_moments(&b.grid_weights(), order),
    };
    coeffs[0] = Complex64::new(1.0, 0.0);
    MomentSequence::new(coeffs)
}

fn atomic_moments(a: &Atomic, order: usize) -> Vec<Complex64> {
    (0..=order)
        .map(|s| {
            let mut acc = ComplexNeumaierSum::new();
            for (&theta, &w) in a.angles.iter().zip(&a.weights) {
                let phase = reduce_angle(s as f64 * theta);
                acc.add(Complex64::from_polar(w, -phase));
            }
            acc.value()
        })
        .collect()
}

fn grid_moments(weights: &[f64], order: usize) -> Vec<Complex64> {
    let n = weights.len();
    let mut buf: Vec<Complex64> = weights.iter().map(|&w| Complex64::new(w, 0.0)).collect();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    (0..=order).map(|s| buf[s % n]).collect()
}

/// `∫ μ(dθ) (1-r²)/(1+r²-2r cos(η-θ))`, which equals `1 + 2 Re G(r e^{iη})`.
pub fn poisson_value(measure: &SpectralMeasure, r: f64, eta: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&r) {
        return Err(Error::Argument(format!("Poisson radius r = {r} must satisfy 0 <= r < 1")));
    }
    let pts = measure.point_masses();
    let mut acc = NeumaierSum::new();
    for (&theta, &w) in pts.angles.iter().zip(&pts.weights) {
        acc.add(w * poisson_kernel(r, eta - theta));
    }
    Ok(acc.value())
}

/// Principal-value cutoff for [`hilbert_transform`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Cutoff {
    /// One grid step of a density; not defined for atomic measures.
    GridStep,
    Width(f64),
}

/// `½ ∫_{|η-θ| >= δ} μ(dθ) cot((η-θ)/2)`.
///
/// For densities the grid nodes within `δ` of `η` are dropped and the
/// constant part `ρ(η)` is subtracted before summing, so a constant density
/// gives exactly zero at every `η`. For atomic measures an atom inside the
/// cutoff is an error.
pub fn hilbert_transform(measure: &SpectralMeasure, eta: f64, cutoff: Cutoff) -> Result<f64> {
    let delta = match (cutoff, measure) {
        (Cutoff::GridStep, SpectralMeasure::Density(d)) => d.grid_step(),
        (Cutoff::GridStep, _) => {
            return Err(Error::Argument(
                "grid-step cutoff is only defined for density measures".into(),
            ))
        }
        (Cutoff::Width(w), _) => w,
    };
    if !(delta > 0.0) {
        return Err(Error::Argument(format!("Hilbert cutoff δ = {delta} must be positive")));
    }
    // nodes exactly one grid step away must be kept despite rounding
    let inside = |dist: f64| dist < delta * (1.0 - 1e-9);
    let eta = reduce_angle(eta);
    match measure {
        SpectralMeasure::Density(d) => {
            let center = d.interpolate(eta);
            let m = d.grid_size() as f64;
            let mut acc = NeumaierSum::new();
            for (k, &rho) in d.values.iter().enumerate() {
                let x = wrap_difference(eta - d.angle(k));
                if inside(x.abs()) {
                    continue;
                }
                acc.add((rho - center) / m * cot_half(x));
            }
            Ok(0.5 * acc.value())
        }
        _ => {
            let pts = measure.point_masses();
            let mut acc = NeumaierSum::new();
            for (index, (&theta, &w)) in pts.angles.iter().zip(&pts.weights).enumerate() {
                let x = wrap_difference(eta - theta);
                if inside(x.abs()) {
                    return Err(Error::Singularity {
                        index,
                        angle: theta,
                        eta,
                        cutoff: delta,
                    });
                }
                acc.add(w * cot_half(x));
            }
            Ok(0.5 * acc.value())
        }
    }
}

#[inline]
fn cot_half(x: f64) -> f64 {
    let (s, c) = (0.5 * x).sin_cos();
    c / s
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn close(a: Complex64, b: Complex64, tol: f64) -> bool {
        (a - b).norm() <= tol
    }

    #[test]
    fn dirac_moments_are_all_one() {
        let m = moments(&SpectralMeasure::dirac(0.0), 3).unwrap();
        for s in 0..=3 {
            assert_eq!(m.get(s), Complex64::new(1.0, 0.0));
        }
    }

    #[test]
    fn lebesgue_moments_vanish() {
        let m = moments(&SpectralMeasure::lebesgue(DEFAULT_MESH).unwrap(), 3).unwrap();
        assert_eq!(m.get(0), Complex64::new(1.0, 0.0));
        for s in 1..=3 {
            assert!(m.get(s).norm() < 1e-15, "s = {s}: {}", m.get(s));
        }
    }

    #[test]
    fn bernoulli_level13_first_moment_matches_dyadic_brute_force() {
        // independent oracle: sum over all 2^13 dyadic points with the
        // weight read off the binary digits one by one
        let p = 1.0 / 3.0;
        let n = 13u32;
        let mut oracle = Complex64::new(0.0, 0.0);
        for x in 0u32..(1 << n) {
            let mut w = 1.0;
            for bit in 0..n {
                w *= if (x >> bit) & 1 == 1 { p } else { 1.0 - p };
            }
            let theta = TAU * x as f64 / (1u32 << n) as f64;
            oracle += Complex64::from_polar(w, -theta);
        }
        let frozen = Complex64::new(0.1261799104675308, -0.1880567021912267);
        assert!(close(oracle, frozen, 1e-13), "oracle drifted: {oracle}");

        let m = moments(&SpectralMeasure::bernoulli(p, n).unwrap(), 1).unwrap();
        assert!(close(m.get(1), frozen, 1e-12), "{}", m.get(1));
        assert!(close(bernoulli_product_moment(p, n, 1), frozen, 1e-12));
    }

    #[test]
    fn bernoulli_discretize_examples() {
        let SpectralMeasure::Atomic(a) = bernoulli_discretize(0.5, 2).unwrap() else { unreachable!() };
        assert_eq!(a.weights(), &[0.25; 4]);

        let SpectralMeasure::Atomic(a) = bernoulli_discretize(1.0 / 3.0, 1).unwrap() else { unreachable!() };
        assert_eq!(a.angles(), &[0.0, PI]);
        assert!((a.weights()[0] - 2.0 / 3.0).abs() < 1e-15);
        assert!((a.weights()[1] - 1.0 / 3.0).abs() < 1e-15);

        assert!(matches!(bernoulli_discretize(0.0, 3), Err(Error::Argument(_))));
        assert!(matches!(bernoulli_discretize(1.0, 3), Err(Error::Argument(_))));
        assert!(matches!(bernoulli_discretize(0.3, 25), Err(Error::Resource(_))));
    }

    #[test]
    fn moment_order_must_be_positive() {
        assert!(matches!(moments(&SpectralMeasure::dirac(0.0), 0), Err(Error::Argument(_))));
    }

    #[test]
    fn invalid_measures_are_rejected() {
        assert!(SpectralMeasure::atomic(vec![0.0, 1.0], vec![0.5, 0.6]).is_err());
        assert!(SpectralMeasure::atomic(vec![0.0, TAU], vec![0.5, 0.5]).is_err());
        assert!(SpectralMeasure::atomic(vec![0.0, 1.0], vec![1.5, -0.5]).is_err());
        assert!(SpectralMeasure::density(vec![1.0, 2.0]).is_err());
        assert!(SpectralMeasure::density(vec![2.0, -0.5, 1.5, 1.0]).is_err());
    }

    #[test]
    fn angles_are_canonicalized() {
        let m = SpectralMeasure::atomic(vec![-PI / 2.0, 5.0 * PI], vec![0.5, 0.5]).unwrap();
        let SpectralMeasure::Atomic(a) = m else { unreachable!() };
        assert!((a.angles()[0] - 1.5 * PI).abs() < 1e-15);
        assert!((a.angles()[1] - PI).abs() < 1e-15);
        assert_eq!(reduce_angle(-0.0), 0.0);
        assert_eq!(reduce_angle(-1e-18), 0.0);
    }

    #[test]
    fn poisson_examples() {
        let leb = SpectralMeasure::lebesgue(DEFAULT_MESH).unwrap();
        for (r, eta) in [(0.0, 0.3), (0.5, 1.0), (0.9, 4.0)] {
            assert!((poisson_value(&leb, r, eta).unwrap() - 1.0).abs() < 1e-13);
        }
        let dirac = SpectralMeasure::dirac(0.0);
        for (r, eta) in [(0.3, 0.2), (0.99, 0.0), (0.7, 2.5)] {
            let expected = (1.0 - r * r) / (1.0 + r * r - 2.0 * r * f64::cos(eta));
            let got = poisson_value(&dirac, r, eta).unwrap();
            assert!((got - expected).abs() < 1e-12 * expected.max(1.0));
        }
        assert!(matches!(poisson_value(&dirac, 1.0, 0.0), Err(Error::Argument(_))));
    }

    #[test]
    fn poisson_of_bernoulli_matches_naive_atomic_sum() {
        let b = SpectralMeasure::bernoulli(1.0 / 3.0, 13).unwrap();
        let (r, eta) = (0.99, 0.1);
        // naive textbook kernel, weights rebuilt from the bit pattern
        let n = 1usize << 13;
        let mut naive = 0.0;
        for k in 0..n {
            let ones = k.count_ones() as i32;
            let w = (1.0f64 / 3.0).powi(ones) * (2.0f64 / 3.0).powi(13 - ones);
            let theta = TAU * k as f64 / n as f64;
            naive += w * (1.0 - r * r) / (1.0 + r * r - 2.0 * r * (eta - theta).cos());
        }
        let got = poisson_value(&b, r, eta).unwrap();
        assert!((got - naive).abs() < 1e-10 * naive, "{got} vs {naive}");
        assert!(got > 0.0);
    }

    #[test]
    fn hilbert_examples() {
        let leb = SpectralMeasure::lebesgue(DEFAULT_MESH).unwrap();
        for eta in [0.0, 0.123, 1.0, PI, 5.9] {
            assert!(hilbert_transform(&leb, eta, Cutoff::GridStep).unwrap().abs() < 1e-12);
        }
        let dirac = SpectralMeasure::dirac(0.0);
        assert!(hilbert_transform(&dirac, PI, Cutoff::Width(0.1)).unwrap().abs() < 1e-15);
        match hilbert_transform(&dirac, 0.05, Cutoff::Width(0.1)) {
            Err(Error::Singularity { index, .. }) => assert_eq!(index, 0),
            other => panic!("expected singularity, got {other:?}"),
        }
        assert!(matches!(hilbert_transform(&dirac, 1.0, Cutoff::GridStep), Err(Error::Argument(_))));
        assert!(matches!(hilbert_transform(&leb, 1.0, Cutoff::Width(0.0)), Err(Error::Argument(_))));
    }

    #[test]
    fn hilbert_of_one_plus_cos_is_half_sine() {
        // oracle: fine midpoint rule on the folded, non-singular integrand
        // (1/4π) ∫_0^π [ρ(η-u) - ρ(η+u)] cot(u/2) du
        let rho = |t: f64| 1.0 + t.cos();
        let eta = PI / 2.0;
        let n = 400_000;
        let h = PI / n as f64;
        let oracle: f64 = (0..n)
            .map(|i| {
                let u = (i as f64 + 0.5) * h;
                (rho(eta - u) - rho(eta + u)) / (0.5 * u).tan()
            })
            .sum::<f64>()
            * h
            / (4.0 * PI);
        assert!((oracle - 0.5).abs() < 1e-9, "oracle = {oracle}");

        let d = SpectralMeasure::Density(Density::from_fn(DEFAULT_MESH, rho).unwrap());
        let h_grid = hilbert_transform(&d, eta, Cutoff::GridStep).unwrap();
        assert!((h_grid - oracle).abs() < 2e-4, "{h_grid}");

        // δ-stability: halving the grid step moves the value by O(δ)
        let coarse = SpectralMeasure::Density(Density::from_fn(DEFAULT_MESH / 2, rho).unwrap());
        let h_coarse = hilbert_transform(&coarse, eta, Cutoff::GridStep).unwrap();
        assert!((h_coarse - h_grid).abs() < 4.0 * TAU / DEFAULT_MESH as f64);

        // off-grid evaluation point
        let off = hilbert_transform(&d, 0.7 + 1e-5, Cutoff::GridStep).unwrap();
        assert!((off - 0.5 * (0.7f64 + 1e-5).sin()).abs() < 2e-3);
    }

    #[test]
    fn toeplitz_requires_enough_moments() {
        let m = moments(&SpectralMeasure::dirac(0.0), 3).unwrap();
        assert!(m.toeplitz(4).is_ok());
        assert!(m.toeplitz(5).is_err());
    }

    fn arb_atomic() -> impl Strategy<Value = SpectralMeasure> {
        prop::collection::vec((0.0..TAU, 0.01f64..1.0), 1..12).prop_map(|atoms| {
            let total: f64 = atoms.iter().map(|a| a.1).sum();
            let (angles, weights): (Vec<_>, Vec<_>) =
                atoms.into_iter().enumerate().map(|(i, (t, w))| (t + 1e-9 * i as f64, w / total)).unzip();
            SpectralMeasure::atomic(angles, weights).unwrap()
        })
    }

    fn arb_measure() -> impl Strategy<Value = SpectralMeasure> {
        prop_oneof![
            arb_atomic(),
            (0.02f64..0.98, 1u32..10).prop_map(|(p, n)| SpectralMeasure::bernoulli(p, n).unwrap()),
            (0.0f64..1.0, 0.0..TAU).prop_map(|(a, phi)| {
                SpectralMeasure::Density(Density::from_fn(256, |t| 1.0 + a * (t - phi).cos()).unwrap())
            }),
        ]
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn bernoulli_moments_match_product(p in 0.01f64..0.99, n in 1u32..12, s in 0u64..4096) {
            let s = s % (1 << n);
            let m = moments(&SpectralMeasure::bernoulli(p, n).unwrap(), s.max(1) as usize).unwrap();
            prop_assert!(close(m.get(s as i64), bernoulli_product_moment(p, n, s), 1e-12));
        }

        #[test]
        fn poisson_at_zero_radius_is_one(m in arb_measure(), eta in 0.0..TAU) {
            prop_assert!((poisson_value(&m, 0.0, eta).unwrap() - 1.0).abs() < 1e-12);
        }

        #[test]
        fn poisson_conserves_mass(m in arb_measure(), r in 0.0f64..0.9) {
            // trapezoid in η on a grid fine enough to resolve the kernel
            let n = 4096;
            let avg = (0..n)
                .map(|k| poisson_value(&m, r, TAU * (k as f64 + 0.37) / n as f64).unwrap())
                .sum::<f64>() / n as f64;
            prop_assert!((avg - 1.0).abs() < 1e-8, "avg = {}", avg);
        }

        #[test]
        fn toeplitz_matrices_are_psd(m in arb_measure(), order in 1usize..=8) {
            let mom = moments(&m, 8).unwrap();
            let t = mom.toeplitz(order).unwrap();
            let ev = crate::linalg::hermitian_eigenvalues(&t).unwrap();
            prop_assert!(ev[0] >= -1e-10, "min eigenvalue {}", ev[0]);
            for s in 0..=8 {
                prop_assert!(mom.get(s).norm() <= 1.0 + 1e-12);
            }
        }
    }
}
