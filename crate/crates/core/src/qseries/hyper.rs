use num_complex::Complex64 as C64;

use super::SeriesValue;
use crate::error::{QoscError, Result};

/// Largest termination order looked for among the upper parameters.
const MAX_TERMINATION_ORDER: usize = 512;

/// Returns `m` when `a` equals `q^{-m}` within relative tolerance `tol`.
pub fn terminating_index(a: C64, q: f64, tol: f64) -> Option<usize> {
    if a.re <= 0.0 || a.im.abs() > tol * a.re {
        return None;
    }
    let m = (a.re.ln() / (1.0 / q).ln()).round();
    if !(0.0..=MAX_TERMINATION_ORDER as f64).contains(&m) {
        return None;
    }
    let m = m as usize;
    let target = q.powi(-(m as i32));
    ((a - target).norm() < tol * target).then_some(m)
}

/// Basic hypergeometric series
///
/// ```text
/// rφs(a_1..a_r; b_1..b_s; q, z) = Σ_n (a_1..a_r;q)_n / (q, b_1..b_s;q)_n
///                                   · [(-1)^n q^{n(n-1)/2}]^{1+s-r} z^n
/// ```
///
/// An upper parameter equal to `q^{-m}` terminates the sum after `m + 1`
/// terms; otherwise summation continues until the geometric tail estimate
/// drops below `tol · max(1, |sum|)`.
pub fn basic_hyp(
    upper: &[C64],
    lower: &[C64],
    q: f64,
    z: C64,
    tol: f64,
    max_terms: usize,
) -> Result<SeriesValue> {
    let excess = 1 + lower.len() as i64 - upper.len() as i64;
    let termination = upper
        .iter()
        .filter_map(|&a| terminating_index(a, q, tol))
        .min();

    if termination.is_none() && (excess < 0 || (excess == 0 && z.norm() >= 1.0)) {
        return Err(QoscError::NonConvergent {
            terms: 0,
            last_term: f64::INFINITY,
        });
    }

    let one = C64::new(1.0, 0.0);
    let mut sum = C64::new(0.0, 0.0);
    let mut term = one;
    let mut qn = 1.0_f64;
    let mut n = 0usize;
    loop {
        sum += term;
        if termination == Some(n) {
            return Ok(SeriesValue {
                value: sum,
                terms_used: n + 1,
                truncation_bound: 0.0,
            });
        }
        if n + 1 >= max_terms {
            return Err(QoscError::NonConvergent {
                terms: n + 1,
                last_term: term.norm(),
            });
        }

        let mut num = one;
        for &a in upper {
            num *= one - a * qn;
        }
        let mut den = C64::new(1.0 - qn * q, 0.0);
        for (index, &b) in lower.iter().enumerate() {
            let f = one - b * qn;
            if f.norm() <= tol * (1.0 + (b * qn).norm()) {
                return Err(QoscError::PoleInDenominator { index, power: n });
            }
            den *= f;
        }
        let shift = match excess {
            0 => 1.0,
            e => (-qn).powi(e as i32),
        };
        let next = term * num / den * z * shift;
        n += 1;
        qn *= q;

        if termination.is_none() {
            if next == C64::new(0.0, 0.0) {
                return Ok(SeriesValue {
                    value: sum,
                    terms_used: n,
                    truncation_bound: 0.0,
                });
            }
            let ratio = if term.norm() > 0.0 {
                next.norm() / term.norm()
            } else {
                0.0
            };
            let limit = if excess == 0 { z.norm() } else { 0.0 };
            let rho = ratio.max(limit);
            if rho < 1.0 {
                let bound = next.norm() / (1.0 - rho);
                if bound <= tol * sum.norm().max(1.0) {
                    return Ok(SeriesValue {
                        value: sum + next,
                        terms_used: n + 1,
                        truncation_bound: bound,
                    });
                }
            }
        }
        term = next;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(x: f64) -> C64 {
        C64::new(x, 0.0)
    }

    #[test]
    fn unit_upper_parameter_keeps_only_first_term() {
        let s = basic_hyp(&[c(1.0), c(0.3)], &[c(0.0)], 0.5, c(0.9), 1e-12, 100).unwrap();
        assert_eq!(s.value, c(1.0));
        assert_eq!(s.terms_used, 1);
    }

    #[test]
    fn degree_one_al_salam_carlitz() {
        let (q, mu) = (0.5, 2.0);
        for &x in &[1.0, 0.25, -2.0 * 0.125, 0.37] {
            let s = basic_hyp(
                &[c(1.0 / q), c(1.0 / x)],
                &[c(0.0)],
                q,
                c(-q * x / mu),
                1e-12,
                100,
            )
            .unwrap();
            let expected = (x - 1.0 + mu) / mu;
            assert!((s.value.re - expected).abs() < 1e-14, "x={x}");
        }
    }

    #[test]
    fn terminating_series_uses_m_plus_one_terms() {
        let q: f64 = 0.4;
        for m in 0..20 {
            let a = c(q.powi(-(m as i32)));
            let s = basic_hyp(
                &[a, c(0.1), c(0.2)],
                &[c(0.3), c(-0.5)],
                q,
                c(q),
                1e-12,
                1000,
            )
            .unwrap();
            assert_eq!(s.terms_used, m + 1);
        }
    }

    #[test]
    fn q_binomial_theorem() {
        // 1φ0(a;—;q,z) = (az;q)_∞/(z;q)_∞
        use crate::qseries::pinf;
        let (q, a, z) = (0.6, c(0.3), C64::new(0.2, 0.4));
        let s = basic_hyp(&[a], &[], q, z, 1e-15, 10_000).unwrap();
        let closed = pinf(a * z, q) / pinf(z, q);
        assert!((s.value - closed).norm() < 1e-13);
    }

    #[test]
    fn divergent_configuration_is_rejected() {
        let err = basic_hyp(&[c(0.5), c(0.2)], &[c(0.1)], 0.5, c(1.5), 1e-12, 100).unwrap_err();
        assert!(matches!(err, QoscError::NonConvergent { .. }));
    }

    #[test]
    fn pole_in_lower_parameter() {
        let q: f64 = 0.5;
        // terminates after 5 terms but b = q^{-2} kills the third denominator factor
        let err = basic_hyp(&[c(q.powi(-4))], &[c(q.powi(-2))], q, c(0.3), 1e-12, 100).unwrap_err();
        assert_eq!(err, QoscError::PoleInDenominator { index: 0, power: 2 });
    }

    #[test]
    fn detection_of_terminating_parameters() {
        assert_eq!(terminating_index(c(1.0), 0.3, 1e-12), Some(0));
        assert_eq!(terminating_index(c(0.3f64.powi(-7)), 0.3, 1e-12), Some(7));
        assert_eq!(
            terminating_index(c(0.3f64.powi(-7) * (1.0 + 1e-9)), 0.3, 1e-12),
            None
        );
        assert_eq!(terminating_index(c(-8.0), 0.5, 1e-12), None);
        assert_eq!(terminating_index(C64::new(8.0, 1.0), 0.5, 1e-12), None);
    }
}
