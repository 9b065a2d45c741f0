use num_complex::Complex64 as C64;

use super::SeriesValue;
use crate::error::{QoscError, Result};

/// Truncation level for products evaluated to working precision.
const MACHINE_PRODUCT_TOL: f64 = 1e-18;
const MACHINE_PRODUCT_BUDGET: usize = 10_000_000;

/// `1 - a q^k`, snapped to zero when it vanishes within rounding.
#[inline]
fn factor(aqk: C64) -> C64 {
    let f = C64::new(1.0, 0.0) - aqk;
    if f.norm() <= 8.0 * f64::EPSILON * (1.0 + aqk.norm()) {
        C64::new(0.0, 0.0)
    } else {
        f
    }
}

/// `(a;q)_n = Π_{k<n} (1 - a q^k)`; the empty product is 1.
pub fn qpochhammer_finite(a: C64, q: f64, n: usize) -> C64 {
    let mut prod = C64::new(1.0, 0.0);
    let mut aqk = a;
    for _ in 0..n {
        prod *= factor(aqk);
        aqk *= q;
    }
    prod
}

/// `(a;q)_∞`, truncated once `|a| q^n < tol (1-q)`.
///
/// The reported bound is the log-tail estimate `|a| q^n / (1-q)`, which
/// bounds `|log Π_{k≥n}(1 - a q^k)|` up to a factor close to one.
pub fn qpochhammer_infinite(a: C64, q: f64, tol: f64, max_terms: usize) -> Result<SeriesValue> {
    debug_assert!(q.abs() < 1.0);
    let threshold = tol * (1.0 - q);
    let mut prod = C64::new(1.0, 0.0);
    let mut aqk = a;
    let mut n = 0;
    while aqk.norm() >= threshold {
        if n >= max_terms {
            return Err(QoscError::NonConvergent {
                terms: n,
                last_term: aqk.norm(),
            });
        }
        let f = factor(aqk);
        if f == C64::new(0.0, 0.0) {
            return Ok(SeriesValue {
                value: f,
                terms_used: n + 1,
                truncation_bound: 0.0,
            });
        }
        prod *= f;
        aqk *= q;
        n += 1;
    }
    Ok(SeriesValue {
        value: prod,
        terms_used: n,
        truncation_bound: aqk.norm() / (1.0 - q),
    })
}

/// `(a;q)_∞` to working precision. Vanishing factors give exactly zero.
pub fn pinf(a: C64, q: f64) -> C64 {
    qpochhammer_infinite(a, q, MACHINE_PRODUCT_TOL, MACHINE_PRODUCT_BUDGET)
        .map(|s| s.value)
        .unwrap_or_else(|_| C64::new(f64::NAN, f64::NAN))
}

/// `(a_1, …, a_r; q)_∞`.
pub fn pinf_many(args: &[C64], q: f64) -> C64 {
    args.iter().map(|&a| pinf(a, q)).product()
}
