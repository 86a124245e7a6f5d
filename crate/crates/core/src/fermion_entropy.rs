//! Entropy of gauge-invariant quasi-free Fermion states and of the refined
//! trap partitions, all expressed through one-particle symbols.
//!
//! Entropies are in nats.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix};
use crate::matrix_oracle::TrapSystem;
use crate::summation::NeumaierSum;

const SPECTRUM_TOL: f64 = 1e-10;
/// Eigenvalues of `Q(1-Q)` above this span the purification space.
const PURIFICATION_CUTOFF: f64 = 1e-12;
/// Defect eigenvalues below this are treated as the trivial part of `D_t`.
const DEFECT_ZERO: f64 = 1e-12;

/// `η(x) = -x ln x` with `η(0) = 0`. Arguments within `1e-10` of `[0, 1]`
/// are clamped.
pub fn eta(x: f64) -> Result<f64> {
    if !(-SPECTRUM_TOL..=1.0 + SPECTRUM_TOL).contains(&x) {
        return Err(Error::Argument(format!("η is evaluated on [0, 1], got {x}")));
    }
    Ok(eta_clamped(x))
}

fn eta_clamped(x: f64) -> f64 {
    let x = x.clamp(0.0, 1.0);
    if x == 0.0 {
        0.0
    } else {
        -x * x.ln()
    }
}

/// `η(x) + η(1-x)`, the binary entropy.
fn binary_eta(x: f64) -> f64 {
    eta_clamped(x) + eta_clamped(1.0 - x)
}

/// One-particle symbol `0 <= Q <= 1` of a quasi-free state.
#[derive(Debug, Clone)]
pub struct Symbol(CMatrix);

impl Symbol {
    pub fn new(q: CMatrix) -> Result<Self> {
        if q.nrows() != q.ncols() {
            return Err(Error::Validation(format!("symbol must be square, got {}x{}", q.nrows(), q.ncols())));
        }
        linalg::check_hermitian(&q, SPECTRUM_TOL)?;
        linalg::check_spectrum_within(&q, 0.0, 1.0, SPECTRUM_TOL, "symbol")?;
        Ok(Self(q))
    }

    /// `κ·1` on a `dim`-dimensional space.
    pub fn homogeneous(kappa: f64, dim: usize) -> Result<Self> {
        Self::new(CMatrix::identity(dim, dim) * Complex64::new(kappa, 0.0))
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn into_matrix(self) -> CMatrix {
        self.0
    }
}

/// `S(ω_Q) = Tr(η(Q) + η(1-Q))`.
pub fn state_entropy(q: &Symbol) -> Result<f64> {
    let ev = linalg::hermitian_eigenvalues(q.matrix())?;
    Ok(NeumaierSumExt::sum(ev.iter().map(|&x| binary_eta(x))))
}

struct NeumaierSumExt;

impl NeumaierSumExt {
    fn sum(it: impl Iterator<Item = f64>) -> f64 {
        let mut acc = NeumaierSum::new();
        acc.extend(it);
        acc.value()
    }
}

/// Spectral data of `Q` restricted to `K = range Q(1-Q)`.
struct Purification {
    /// Orthonormal basis of `K`, as columns.
    basis: CMatrix,
    /// `√(q(1-q))` for each basis vector.
    off_diag: Vec<f64>,
    /// `1 - q` for each basis vector.
    complement: Vec<f64>,
}

fn purification_data(q: &Symbol) -> Result<Purification> {
    let eig = linalg::hermitian_eigen(q.matrix())?;
    let keep: Vec<usize> = eig
        .values
        .iter()
        .enumerate()
        .filter(|(_, &v)| v.clamp(0.0, 1.0) * (1.0 - v.clamp(0.0, 1.0)) > PURIFICATION_CUTOFF)
        .map(|(i, _)| i)
        .collect();
    let d = q.dim();
    let basis = CMatrix::from_fn(d, keep.len(), |i, j| eig.vectors[(i, keep[j])]);
    let off_diag = keep
        .iter()
        .map(|&i| {
            let v = eig.values[i].clamp(0.0, 1.0);
            (v * (1.0 - v)).sqrt()
        })
        .collect();
    let complement = keep.iter().map(|&i| 1.0 - eig.values[i]).collect();
    Ok(Purification {
        basis,
        off_diag,
        complement,
    })
}

/// Block matrix `[[X, B*], [B, C]]` on `H ⊕ K`.
fn assemble(top_left: &CMatrix, lower_left: &CMatrix, lower_right: &[f64]) -> CMatrix {
    let d = top_left.nrows();
    let k = lower_right.len();
    let mut r = CMatrix::zeros(d + k, d + k);
    r.view_mut((0, 0), (d, d)).copy_from(top_left);
    r.view_mut((d, 0), (k, d)).copy_from(lower_left);
    r.view_mut((0, d), (d, k)).copy_from(&lower_left.adjoint());
    for (j, &c) in lower_right.iter().enumerate() {
        r[(d + j, d + j)] = Complex64::new(c, 0.0);
    }
    r
}

/// Rows `√(q_j(1-q_j)) w_j*`, i.e. `√(Q(1-Q))` mapped into `K`.
fn sqrt_block(p: &Purification) -> CMatrix {
    let mut b = p.basis.adjoint();
    for (j, &s) in p.off_diag.iter().enumerate() {
        b.row_mut(j).scale_mut(s);
    }
    b
}

/// Projector `[[Q, √(Q(1-Q))], [√(Q(1-Q)), 1-Q]]` on `H ⊕ K` whose restriction
/// to `H` is `Q`. `K` is spanned by the eigenvectors of `Q` with
/// `q(1-q) > 1e-12`.
pub fn purify(q: &Symbol) -> Result<Symbol> {
    let p = purification_data(q)?;
    let b = sqrt_block(&p);
    Symbol::new(assemble(q.matrix(), &b, &p.complement))
}

/// Symbol `R` of the state refined by the quasi-free partition `(V, W)`:
/// `[[V*QV + W, V*√(Q(1-Q))], [√(Q(1-Q))V, 1-Q]]` on `H ⊕ K`.
pub fn partition_symbol(q: &Symbol, v: &CMatrix, w: &CMatrix) -> Result<Symbol> {
    let d = q.dim();
    if v.shape() != (d, d) || w.shape() != (d, d) {
        return Err(Error::Argument(format!(
            "V and W must be {d}x{d}, got {:?} and {:?}",
            v.shape(),
            w.shape()
        )));
    }
    linalg::check_hermitian(w, SPECTRUM_TOL)
        .map_err(|e| Error::Argument(format!("W must be Hermitian: {e}")))?;
    let slack = CMatrix::identity(d, d) - v.adjoint() * v - w;
    if linalg::check_spectrum_within(w, 0.0, f64::INFINITY, SPECTRUM_TOL, "W").is_err()
        || linalg::check_spectrum_within(&slack, 0.0, f64::INFINITY, SPECTRUM_TOL, "1 - V*V - W").is_err()
    {
        return Err(Error::Argument("partition needs 0 <= W <= 1 - V*V".into()));
    }
    let p = purification_data(q)?;
    let b = sqrt_block(&p) * v;
    let top = v.adjoint() * q.matrix() * v + w;
    Symbol::new(assemble(&top, &b, &p.complement))
}

/// `D_t = 1 - V_t* V_t` with `V_t = (VU)^t U^{-t}`.
pub fn evolved_defect(u: &CMatrix, v: &CMatrix, t: usize) -> Result<CMatrix> {
    if t == 0 {
        return Err(Error::Argument("evolved defect needs t >= 1".into()));
    }
    check_step(u, v)?;
    let vu = v * u;
    let mut acc = linalg::identity(u.nrows());
    let mut back = linalg::identity(u.nrows());
    let u_inv = u.adjoint();
    for _ in 0..t {
        acc = &vu * acc;
        back = &u_inv * back;
    }
    let vt = acc * back;
    Ok(linalg::identity(u.nrows()) - vt.adjoint() * vt)
}

fn check_step(u: &CMatrix, v: &CMatrix) -> Result<()> {
    if u.nrows() != u.ncols() || v.shape() != u.shape() {
        return Err(Error::Validation(format!(
            "U is {:?} but V is {:?}",
            u.shape(),
            v.shape()
        )));
    }
    let defect = linalg::unitarity_defect(u);
    if defect > 1e-12 {
        return Err(Error::Validation(format!("U is not unitary: {defect:e}")));
    }
    linalg::check_spectrum_within(&(v.adjoint() * v), 0.0, 1.0, SPECTRUM_TOL, "V*V")
        .map_err(|_| Error::Validation("V must be a contraction".into()))
}

/// Entropy of the refined partition at time `t` and its concavity lower bound.
#[derive(Debug, Clone, PartialEq)]
pub struct EntropyReport {
    pub t: usize,
    pub kappa: f64,
    /// Eigenvalues of `D_t` above `1e-12`, ascending.
    pub defect_spectrum: Vec<f64>,
    pub trace_defect: f64,
    pub h_exact: f64,
    pub h_lower: f64,
}

impl EntropyReport {
    /// `η(κ) + η(1-κ)`, the factor linking `h_lower` to `Tr D_t`.
    pub fn link_factor(&self) -> f64 {
        binary_eta(self.kappa)
    }
}

fn check_kappa(kappa: f64) -> Result<()> {
    if !(kappa > 0.0 && kappa < 1.0) {
        return Err(Error::Argument(format!("κ = {kappa} must lie strictly between 0 and 1")));
    }
    Ok(())
}

/// `H = Σ_d [η(1 - κd) + η(κd)]` over the spectrum of `D_t`, and
/// `H_lower = [η(κ) + η(1-κ)] Tr D_t`.
pub fn refined_entropy(kappa: f64, defect: &CMatrix, t: usize) -> Result<EntropyReport> {
    check_kappa(kappa)?;
    let eig = linalg::hermitian_eigenvalues(defect)?;
    if let (Some(&lo), Some(&hi)) = (eig.first(), eig.last()) {
        if lo < -SPECTRUM_TOL || hi > 1.0 + SPECTRUM_TOL {
            return Err(Error::Validation(format!(
                "defect spectrum [{lo:e}, {hi}] leaves [0, 1]"
            )));
        }
    }
    let trace = linalg::trace(defect).re;
    let mut report = entropy_from_spectrum(kappa, t, &eig)?;
    report.trace_defect = trace;
    report.h_lower = binary_eta(kappa) * trace;
    Ok(report)
}

/// [`refined_entropy`] for an already diagonalized defect.
pub fn entropy_from_spectrum(kappa: f64, t: usize, spectrum: &[f64]) -> Result<EntropyReport> {
    check_kappa(kappa)?;
    if let Some(d) = spectrum.iter().find(|d| !(**d >= -SPECTRUM_TOL && **d <= 1.0 + SPECTRUM_TOL)) {
        return Err(Error::Validation(format!("defect eigenvalue {d} outside [0, 1]")));
    }
    let mut nonzero: Vec<f64> = spectrum.iter().copied().filter(|d| d.abs() > DEFECT_ZERO).collect();
    nonzero.sort_by(f64::total_cmp);
    let h_exact = NeumaierSumExt::sum(
        nonzero
            .iter()
            .map(|&d| eta_clamped(1.0 - kappa * d) + eta_clamped(kappa * d)),
    );
    let trace = NeumaierSumExt::sum(spectrum.iter().copied());
    Ok(EntropyReport {
        t,
        kappa,
        defect_spectrum: nonzero,
        trace_defect: trace,
        h_exact,
        h_lower: binary_eta(kappa) * trace,
    })
}

/// Reports for `t = 1..=t_max` with `V = T = 1 - A` of a trap system.
pub fn entropy_series(system: &TrapSystem, kappa: f64, t_max: usize) -> Result<Vec<EntropyReport>> {
    check_kappa(kappa)?;
    let u = system.unitary();
    let v = system.survival();
    check_step(u, &v)?;
    let vu = &v * u;
    let u_inv = u.adjoint();
    let dim = u.nrows();
    let mut acc = linalg::identity(dim);
    let mut back = linalg::identity(dim);
    let mut out = Vec::with_capacity(t_max);
    for t in 1..=t_max {
        acc = &vu * acc;
        back = &u_inv * back;
        let vt = &acc * &back;
        let defect = linalg::identity(dim) - vt.adjoint() * vt;
        out.push(refined_entropy(kappa, &defect, t)?);
    }
    Ok(out)
}
