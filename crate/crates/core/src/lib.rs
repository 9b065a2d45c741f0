//! Numerical model of a q-harmonic oscillator built on the Al-Salam–Carlitz
//! polynomials `u_n^μ(x;q)`.
//!
//! The crate is organised bottom-up:
//!
//! - [`qseries`]: q-shifted factorials, basic hypergeometric series and the
//!   two-branch Jackson lattice `{q^k} ∪ {-μ q^k}`.
//! - [`asc`]: the polynomials, their weight, norms and structural identities.
//! - [`oscillator`]: wavefunctions, ladder operators `b`, `b⁺` and the
//!   Hamiltonian, plus the generic q-ladder operator families.
//! - [`coherent`]: eigenvectors of the lowering operator.
//! - [`qfourier`]: the kernel `K_t(x,y) = Σ tⁿ ψ_n(x) ψ_n(y)` and the
//!   transform it generates.
//! - [`biorational`]: the `₃φ₂` biorthogonal rational functions.
//!
//! Every identity is exposed as a `*_residual` function so it can be checked
//! numerically by the test suite and the `qosc verify` command.

pub mod asc;
pub mod biorational;
pub mod coherent;
pub mod error;
pub mod oscillator;
pub mod qfourier;
pub mod qseries;

pub use error::{QoscError, Result};
pub use num_complex::Complex64 as C64;
pub use qseries::{Branch, Lattice, LatticePoint, QParams, SeriesValue};

/// Absolute defect of an identity together with the magnitude of the
/// largest term that entered it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Residual {
    pub abs: f64,
    pub scale: f64,
}

impl Residual {
    pub fn new(abs: f64, scale: f64) -> Self {
        Residual { abs, scale }
    }

    /// `abs / scale`, or `abs` when every term vanished.
    pub fn relative(&self) -> f64 {
        if self.scale > 0.0 {
            self.abs / self.scale
        } else {
            self.abs
        }
    }
}
