//! q-calculus primitives: model parameters, q-shifted factorials, basic
//! hypergeometric series and Jackson integration on the two-branch lattice
//! `{q^k} ∪ {-μ q^k}`.

mod hyper;
mod lattice;
mod pochhammer;

pub use hyper::{basic_hyp, terminating_index};
pub use lattice::{jackson_integral, Branch, Lattice, LatticePoint, K_MAX};
pub use pochhammer::{pinf, pinf_many, qpochhammer_finite, qpochhammer_infinite};

use num_complex::Complex64 as C64;

use crate::error::{QoscError, Result};

/// Default series/lattice tolerance.
pub const DEFAULT_TOL: f64 = 1e-12;
/// Default term budget for non-terminating series and products.
pub const DEFAULT_MAX_TERMS: usize = 10_000;

/// Model parameters `q ∈ (0,1)`, `μ > 0` together with the numerical
/// tolerance and term budget used by every series in the crate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QParams {
    q: f64,
    mu: f64,
    tol: f64,
    max_terms: usize,
}

impl QParams {
    pub fn new(q: f64, mu: f64) -> Result<Self> {
        Self::with_options(q, mu, DEFAULT_TOL, DEFAULT_MAX_TERMS)
    }

    pub fn with_options(q: f64, mu: f64, tol: f64, max_terms: usize) -> Result<Self> {
        if !(q > 0.0 && q < 1.0) {
            return Err(QoscError::InvalidParams("q must lie in (0,1)".into()));
        }
        if !(mu > 0.0 && mu.is_finite()) {
            return Err(QoscError::InvalidParams("mu must be positive".into()));
        }
        if !(tol > 0.0 && tol.is_finite()) {
            return Err(QoscError::InvalidParams("tol must be positive".into()));
        }
        if max_terms == 0 {
            return Err(QoscError::InvalidParams(
                "max_terms must be positive".into(),
            ));
        }
        Ok(QParams {
            q,
            mu,
            tol,
            max_terms,
        })
    }

    pub fn with_tol(self, tol: f64) -> Result<Self> {
        Self::with_options(self.q, self.mu, tol, self.max_terms)
    }

    /// Same `q`, tolerance and budget with a different `μ`.
    pub fn with_mu(self, mu: f64) -> Result<Self> {
        Self::with_options(self.q, mu, self.tol, self.max_terms)
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn tol(&self) -> f64 {
        self.tol
    }

    pub fn max_terms(&self) -> usize {
        self.max_terms
    }
}

/// Result of a truncated series or product.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesValue {
    pub value: C64,
    pub terms_used: usize,
    /// Estimated magnitude of the dropped tail (zero for terminating sums).
    pub truncation_bound: f64,
}
