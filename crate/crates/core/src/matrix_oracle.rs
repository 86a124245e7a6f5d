//! Finite-dimensional reference computations.
//!
//! A [`TrapSystem`] is a unitary step `U` together with a trap `0 <= A <= 1`.
//! The trapped number `N_A(t) = Tr(1 - (TU)^t (U*T)^t)` and the current
//! `J_A(t) = Tr (TU)^{t-1} (1 - T²) (U*T)^{t-1}`, with `T = 1 - A`, are
//! evaluated by explicit matrix products. For a rank-one projector trap the
//! same current also follows from the moment sequence alone, either through
//! the K-recursion or through the Gram-coordinate Krylov oracle here.

use nalgebra::DVector;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix};
use crate::spectral_measure::MomentSequence;

const UNITARY_TOL: f64 = 1e-12;
const TRAP_SPECTRUM_TOL: f64 = 1e-10;
const GRAM_NEGATIVE_TOL: f64 = 1e-8;

/// One eigen-component `p |ψ⟩⟨ψ|` of a trap.
#[derive(Debug, Clone, PartialEq)]
pub struct TrapComponent {
    pub p: f64,
    pub state: TrapState,
}

#[derive(Debug, Clone, PartialEq)]
pub enum TrapState {
    /// Standard basis vector `e_index`.
    Basis(usize),
    /// Arbitrary vector, normalized on use.
    Vector(Vec<Complex64>),
}

impl TrapComponent {
    pub fn projector(index: usize) -> Self {
        Self {
            p: 1.0,
            state: TrapState::Basis(index),
        }
    }
}

/// Assembles `A = Σ p_j |ψ_j⟩⟨ψ_j|`.
pub fn trap_operator(dim: usize, components: &[TrapComponent]) -> Result<CMatrix> {
    let mut a = CMatrix::zeros(dim, dim);
    for (j, c) in components.iter().enumerate() {
        if !(0.0..=1.0).contains(&c.p) {
            return Err(Error::Validation(format!("trap component {j}: p = {} outside [0, 1]", c.p)));
        }
        let psi = match &c.state {
            TrapState::Basis(i) => {
                if *i >= dim {
                    return Err(Error::Validation(format!(
                        "trap component {j}: basis index {i} >= dim {dim}"
                    )));
                }
                let mut v = DVector::zeros(dim);
                v[*i] = Complex64::new(1.0, 0.0);
                v
            }
            TrapState::Vector(v) => {
                if v.len() != dim {
                    return Err(Error::Validation(format!(
                        "trap component {j}: vector has length {}, expected {dim}",
                        v.len()
                    )));
                }
                let v = DVector::from_vec(v.clone());
                let norm = v.norm();
                if !(norm > 0.0) {
                    return Err(Error::Validation(format!("trap component {j}: zero vector")));
                }
                v / Complex64::new(norm, 0.0)
            }
        };
        a += &psi * psi.adjoint() * Complex64::new(c.p, 0.0);
    }
    Ok(a)
}

/// Unitary step plus trap.
#[derive(Debug, Clone)]
pub struct TrapSystem {
    u: CMatrix,
    a: CMatrix,
}

impl TrapSystem {
    pub fn new(u: CMatrix, a: CMatrix) -> Result<Self> {
        let dim = u.nrows();
        if u.ncols() != dim || a.nrows() != dim || a.ncols() != dim {
            return Err(Error::Validation(format!(
                "U is {}x{} but A is {}x{}",
                u.nrows(),
                u.ncols(),
                a.nrows(),
                a.ncols()
            )));
        }
        let defect = linalg::unitarity_defect(&u);
        if defect > UNITARY_TOL {
            return Err(Error::Validation(format!("U is not unitary: |UU* - 1|_max = {defect:e}")));
        }
        linalg::check_hermitian(&a, TRAP_SPECTRUM_TOL)?;
        linalg::check_spectrum_within(&a, 0.0, 1.0, TRAP_SPECTRUM_TOL, "trap A")?;
        Ok(Self { u, a })
    }

    /// `U e_j = e_{j+1 mod dim}`.
    pub fn cyclic_shift(dim: usize, trap: &[TrapComponent]) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Argument("system dimension must be positive".into()));
        }
        let mut u = CMatrix::zeros(dim, dim);
        for j in 0..dim {
            u[((j + 1) % dim, j)] = Complex64::new(1.0, 0.0);
        }
        Self::new(u, trap_operator(dim, trap)?)
    }

    /// Seeded random unitary with the given trap.
    pub fn random(dim: usize, seed: u64, trap: &[TrapComponent]) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Argument("system dimension must be positive".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let u = linalg::random_unitary(dim, &mut rng);
        Self::new(u, trap_operator(dim, trap)?)
    }

    /// Seeded random unitary and a random rank-`rank` trap with eigenvalues in `[0, 1]`.
    pub fn random_with_random_trap(dim: usize, rank: usize, seed: u64) -> Result<Self> {
        if rank > dim {
            return Err(Error::Argument(format!("trap rank {rank} exceeds dim {dim}")));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let u = linalg::random_unitary(dim, &mut rng);
        let basis = linalg::random_unitary(dim, &mut rng);
        let components: Vec<TrapComponent> = (0..rank)
            .map(|j| TrapComponent {
                p: rng.random_range(0.0..=1.0),
                state: TrapState::Vector(basis.column(j).iter().copied().collect()),
            })
            .collect();
        Self::new(u, trap_operator(dim, &components)?)
    }

    pub fn dim(&self) -> usize {
        self.u.nrows()
    }

    pub fn unitary(&self) -> &CMatrix {
        &self.u
    }

    pub fn trap(&self) -> &CMatrix {
        &self.a
    }

    /// `T = 1 - A`.
    pub fn survival(&self) -> CMatrix {
        linalg::identity(self.dim()) - &self.a
    }

    /// The same system in the basis `W`: `(W U W*, W A W*)`.
    pub fn conjugated(&self, w: &CMatrix) -> Result<Self> {
        let wa = w.adjoint();
        Self::new(w * &self.u * &wa, w * &self.a * &wa)
    }

    /// `φ` when `A = |φ⟩⟨φ|` is a rank-one projector, `None` otherwise.
    pub fn rank_one_state(&self) -> Option<DVector<Complex64>> {
        let eig = linalg::hermitian_eigen(&self.a).ok()?;
        let n = eig.values.len();
        let top = eig.values[n - 1];
        let rest_zero = eig.values[..n - 1].iter().all(|v| v.abs() < 1e-10);
        if (top - 1.0).abs() < 1e-10 && rest_zero {
            Some(eig.vectors.column(n - 1).into_owned())
        } else {
            None
        }
    }

    /// `N_A(t)` for a single `t >= 0`.
    pub fn trapped_number(&self, t: usize) -> f64 {
        let tu = self.survival() * &self.u;
        let mut m = linalg::identity(self.dim());
        for _ in 0..t {
            m = &tu * m;
        }
        self.dim() as f64 - linalg::frobenius_sqr(&m)
    }

    /// `N_A(0), ..., N_A(t_max)`.
    pub fn trapped_numbers(&self, t_max: usize) -> Vec<f64> {
        let tu = self.survival() * &self.u;
        let mut m = linalg::identity(self.dim());
        let mut out = Vec::with_capacity(t_max + 1);
        for t in 0..=t_max {
            if t > 0 {
                m = &tu * m;
            }
            out.push(self.dim() as f64 - linalg::frobenius_sqr(&m));
        }
        out
    }

    /// `J_A(t)` for a single `t >= 1`.
    pub fn trap_current(&self, t: usize) -> Result<f64> {
        if t == 0 {
            return Err(Error::Argument("the trap current is defined for t >= 1".into()));
        }
        Ok(self.trap_currents(t)[t - 1])
    }

    /// `J_A(1), ..., J_A(t_max)`.
    pub fn trap_currents(&self, t_max: usize) -> Vec<f64> {
        let t = self.survival();
        let tu = &t * &self.u;
        let absorb = linalg::identity(self.dim()) - &t * &t;
        let mut b = linalg::identity(self.dim());
        let mut out = Vec::with_capacity(t_max);
        for step in 1..=t_max {
            if step > 1 {
                b = &tu * b;
            }
            out.push(linalg::trace(&(&b * &absorb * b.adjoint())).re);
        }
        out
    }
}

/// `μ^(s) = ⟨φ, U^s φ⟩` for `s = 0..=order`, the moments of the spectral
/// measure of `φ`.
pub fn state_moments(u: &CMatrix, phi: &DVector<Complex64>, order: usize) -> Result<MomentSequence> {
    let norm = phi.norm();
    if !(norm > 0.0) {
        return Err(Error::Argument("trap state must be non-zero".into()));
    }
    let phi = phi / Complex64::new(norm, 0.0);
    let mut v = phi.clone();
    let mut coeffs = Vec::with_capacity(order + 1);
    for s in 0..=order {
        if s > 0 {
            v = u * v;
        }
        coeffs.push(phi.dotc(&v));
    }
    MomentSequence::new(coeffs)
}

/// Gram matrix `[⟨U^{-a}φ, U^{-b}φ⟩] = [μ^(a-b)]` of the Krylov vectors.
#[derive(Debug, Clone)]
pub struct GramOracle {
    t_max: usize,
    gram: CMatrix,
}

impl GramOracle {
    pub fn new(moments: &MomentSequence, t_max: usize) -> Result<Self> {
        let gram = moments.toeplitz(t_max + 1)?;
        let min = linalg::hermitian_eigenvalues(&gram)?[0];
        if min < -GRAM_NEGATIVE_TOL {
            return Err(Error::InvalidMoments { min_eigenvalue: min });
        }
        Ok(Self { t_max, gram })
    }

    pub fn gram(&self) -> &CMatrix {
        &self.gram
    }

    /// `J(t) = ‖(1 - P_{t-1}) ⋯ (1 - P_1) φ‖²` for `t = 1..=t_max`.
    ///
    /// Vectors are kept as coefficients over `{U^{-s}φ}`; inner products come
    /// from the Gram matrix, so no orthonormalization takes place.
    pub fn currents(&self) -> Vec<f64> {
        let n = self.t_max + 1;
        let mut c = vec![Complex64::new(0.0, 0.0); n];
        c[0] = Complex64::new(1.0, 0.0);
        // g = G c
        let mut g: Vec<Complex64> = (0..n).map(|a| self.gram[(a, 0)]).collect();
        let mut out = Vec::with_capacity(self.t_max);
        for t in 1..=self.t_max {
            let norm: f64 = c.iter().zip(&g).map(|(ci, gi)| (ci.conj() * gi).re).sum();
            out.push(norm);
            if t < self.t_max {
                // apply 1 - P_t, P_t x = ⟨v_t, x⟩ v_t with ⟨v_t, v_t⟩ = 1
                let overlap = g[t];
                c[t] -= overlap;
                for (a, ga) in g.iter_mut().enumerate() {
                    *ga -= overlap * self.gram[(a, t)];
                }
            }
        }
        out
    }
}

/// Rank-one current from the moments alone, via Gram coordinates.
pub fn krylov_current(moments: &MomentSequence, t_max: usize) -> Result<Vec<f64>> {
    if t_max == 0 {
        return Err(Error::Argument("Krylov oracle needs t_max >= 1".into()));
    }
    Ok(GramOracle::new(moments, t_max)?.currents())
}
