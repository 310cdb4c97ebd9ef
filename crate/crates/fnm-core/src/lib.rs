//! Numerical laboratory for the free non-Markovianity of a single particle on
//! a one-dimensional ring.
//!
//! The ring of circumference `L = L_A + L_B` is split by two delta barriers
//! into an observed region A and a finite bath B. Two normalized Gaussian
//! packets evolve under the kinetic Hamiltonian (units with hbar = 1, 2m = 1,
//! so `E = k^2`), and the distinguishability of the pair, restricted to A, is
//! tracked through the projected overlaps `p_ij(t)` and the normalized
//! Hilbert-Schmidt distance `D(t)`. Growth of `D` signals information flowing
//! back from the bath.
//!
//! Modules:
//! - [`specfun`]: error functions, the Faddeeva function, and the scaled
//!   Gaussian segment integrals everything else is built on.
//! - [`spectrum`]: exact eigenmodes of the barriered ring via a transfer
//!   matrix closure (see `docs/eigenproblem.md`), plus the region-A overlap
//!   kernel.
//! - [`wavepacket`]: normalized Gaussian packets expanded over eigenmodes.
//! - [`dynamics`]: the projected pair observables, `D(t)` traces and rates.
//! - [`closedform`]: the infinite-bath limit in closed form.
//! - [`timescales`]: time averages, decay/recurrence times, scaling fits.
//! - [`oracle`]: a finite-difference cross-check of the whole spectral path.
//! - [`pipeline`]: glue that assembles the above into pair-evolution runs.

pub use num_complex::Complex64;

/// Shorthand used throughout for complex double precision values.
pub type C64 = Complex64;

pub mod closedform;
pub mod dynamics;
pub mod oracle;
pub mod pipeline;
pub mod specfun;
pub mod spectrum;
pub mod timescales;
pub mod wavepacket;

/// Errors surfaced by the library. The CLI maps these onto process exit
/// codes, so variants distinguish "bad input", "not enough spectral content"
/// and "internal consistency lost".
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A parameter fails a documented precondition.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// An intermediate `exp` would overflow double precision.
    #[error("overflow in special function evaluation at z = {re} + {im}i")]
    Overflow { re: f64, im: f64 },

    /// The supplied mode set cannot reach the requested expansion fidelity.
    #[error("insufficient modes: achieved fidelity {achieved} < target {target}")]
    InsufficientModes { achieved: f64, target: f64 },

    /// Coefficient vectors and overlap kernel refer to different mode sets.
    #[error("mode mismatch: {0}")]
    ModeMismatch(String),

    /// The mode count disagrees with the Weyl estimate; the scan is suspect.
    #[error("spectral diagnostic: found {found} modes, Weyl estimate {estimate:.1} (tolerance {tolerance})")]
    SpectralDiagnostic {
        found: usize,
        estimate: f64,
        tolerance: f64,
    },

    /// A quantity that must be real/positive within tolerance was not.
    #[error("invariant breach: {0}")]
    InvariantBreach(String),
}

pub type Result<T> = std::result::Result<T, Error>;
