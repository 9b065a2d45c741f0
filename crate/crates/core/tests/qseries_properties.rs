use num_complex::Complex64 as C64;
use proptest::prelude::*;
use qosc_core::qseries::{
    basic_hyp, jackson_integral, pinf, qpochhammer_finite, qpochhammer_infinite, Lattice, QParams,
};

fn close(a: C64, b: C64, rel: f64) -> bool {
    (a - b).norm() <= rel * (1.0 + a.norm().max(b.norm()))
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 200, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn finite_products_split(
        re in -2.0..2.0f64, im in -2.0..2.0f64, q in 0.05..0.95f64, m in 0usize..20, n in 0usize..20,
    ) {
        let a = C64::new(re, im);
        let whole = qpochhammer_finite(a, q, m + n);
        let parts = qpochhammer_finite(a, q, m) * qpochhammer_finite(a * q.powi(m as i32), q, n);
        prop_assert!(close(whole, parts, 1e-12), "{whole} vs {parts}");
    }

    #[test]
    fn infinite_product_peels_finite_head(
        re in -3.0..3.0f64, im in -3.0..3.0f64, q in 0.05..0.9f64, n in 0usize..15,
    ) {
        let a = C64::new(re, im);
        let whole = pinf(a, q);
        let parts = qpochhammer_finite(a, q, n) * pinf(a * q.powi(n as i32), q);
        prop_assert!(close(whole, parts, 1e-11), "{whole} vs {parts}");
    }

    #[test]
    fn q_binomial_theorem(a in -0.9..0.9f64, z in -0.9..0.9f64, q in 0.1..0.9f64) {
        // Σ (a;q)_n zⁿ/(q;q)_n = (az;q)_∞/(z;q)_∞
        let s = basic_hyp(&[C64::new(a, 0.0)], &[], q, C64::new(z, 0.0), 1e-15, 10_000).unwrap();
        let want = pinf(C64::new(a * z, 0.0), q) / pinf(C64::new(z, 0.0), q);
        prop_assert!(close(s.value, want, 1e-12), "{} vs {want}", s.value);
    }

    #[test]
    fn jackson_integral_is_linear(
        c1 in -2.0..2.0f64, c2 in -2.0..2.0f64, q in 0.2..0.8f64, mu in 0.3..3.0f64,
    ) {
        let lat = Lattice::auto(QParams::new(q, mu).unwrap());
        let f = |x: f64| C64::new(x * x, x);
        let g = |x: f64| C64::new((1.0 + x).sqrt().max(0.0), -x * x * x);
        let lhs = jackson_integral(|x| f(x) * c1 + g(x) * c2, &lat).unwrap();
        let rhs = jackson_integral(f, &lat).unwrap() * c1 + jackson_integral(g, &lat).unwrap() * c2;
        prop_assert!(close(lhs, rhs, 1e-13));
    }
}

#[test]
fn jackson_integral_of_monomials() {
    // ∫_{-μ}^{1} x d_q x = (1 - μ²)(1-q)/(1-q²)
    let (q, mu) = (0.6, 1.7);
    let lat = Lattice::auto(QParams::new(q, mu).unwrap());
    let v = jackson_integral(|x| C64::new(x, 0.0), &lat).unwrap();
    let want = (1.0 - mu * mu) * (1.0 - q) / (1.0 - q * q);
    assert!((v.re - want).abs() < 1e-12, "{v} vs {want}");
}

#[test]
fn euler_sum_for_infinite_product() {
    // (z;q)_∞ = Σ (-1)ⁿ q^{n(n-1)/2} zⁿ/(q;q)_n
    let (q, z) = (0.7_f64, C64::new(0.4, -0.3));
    let mut sum = C64::new(0.0, 0.0);
    for n in 0..200_i32 {
        let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
        sum += z.powi(n) * sign * q.powf((n * (n - 1)) as f64 / 2.0)
            / qpochhammer_finite(C64::new(q, 0.0), q, n as usize);
    }
    let p = qpochhammer_infinite(z, q, 1e-16, 100_000).unwrap();
    assert!((p.value - sum).norm() < 1e-14);
    assert!(p.truncation_bound < 1e-15);
}
