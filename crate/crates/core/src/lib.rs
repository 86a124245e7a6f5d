//! Trapped-particle currents, scaling exponents and Fermion entropy bounds
//! for a localized trap in unitary quantum dynamics.
//!
//! The walker evolves by a unitary step `U`; after every step a trap
//! `0 <= A <= 1` removes a fraction of it. For a rank-one trap `|φ⟩⟨φ|` the
//! whole story is told by the spectral measure of `φ`, i.e. by the overlaps
//! `μ^(s) = ⟨φ, U^s φ⟩`:
//!
//! * [`spectral_measure`] builds measures and their moments;
//! * [`trap_dynamics`] turns moments into currents `J(t)` and the
//!   Abel-regularized `J̃(r)`;
//! * [`exponent_estimation`] fits power laws and evaluates closed-form bounds;
//! * [`matrix_oracle`] recomputes everything by brute force in finite dimension;
//! * [`fermion_entropy`] relates the trapped number to an entropy;
//! * [`classical_baselines`] holds the classical diffusion and random-walk currents.
//!
//! ```
//! use qtrap::spectral_measure::{moments, SpectralMeasure};
//! use qtrap::trap_dynamics::{current_series, k_sequence};
//!
//! // φ spread evenly over two eigenvectors with eigenvalues 1 and -1
//! let mu = SpectralMeasure::atomic(vec![0.0, std::f64::consts::PI], vec![0.5, 0.5])?;
//! let k = k_sequence(&moments(&mu, 4)?, 4)?;
//! let series = current_series(&k, 4)?;
//! assert!((series.trapped(4) - 2.0).abs() < 1e-15);
//! # Ok::<(), qtrap::Error>(())
//! ```

// `!(x > 0.0)` style checks are used on purpose so that NaN is rejected
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod classical_baselines;
pub mod error;
pub mod exponent_estimation;
pub mod fermion_entropy;
pub mod linalg;
pub mod matrix_oracle;
pub mod spectral_measure;
pub mod summation;
pub mod trap_dynamics;

pub use error::{Error, Result};
pub use spectral_measure::{moments, MomentSequence, SpectralMeasure};
pub use trap_dynamics::{current_series, jtilde_series, k_sequence, CurrentSeries};
