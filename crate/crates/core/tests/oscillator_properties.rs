use std::sync::Arc;

use num_complex::Complex64 as C64;
use proptest::prelude::*;
use qosc_core::coherent::{overlap, overlap_from_coefficients, CoherentState};
use qosc_core::oscillator::{
    apply_b, apply_bdag, eigenvalue, inner_product, pointwise_lattice, wavefunctions, GridFunction,
};
use qosc_core::{Lattice, QParams};

fn combination(coeffs: &[(f64, f64)], lat: &Arc<Lattice>) -> GridFunction {
    let c: Vec<C64> = coeffs.iter().map(|&(a, b)| C64::new(a, b)).collect();
    let psi = wavefunctions(c.len() - 1, lat).unwrap();
    GridFunction::linear_combination(&c, &psi).unwrap()
}

fn coeffs() -> impl Strategy<Value = Vec<(f64, f64)>> {
    prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64), 1..8)
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 48, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn inner_product_is_hermitian(a in coeffs(), b in coeffs(), mu in 0.4..2.5f64) {
        let lat = Arc::new(Lattice::auto(QParams::new(0.5, mu).unwrap()));
        let (f, g) = (combination(&a, &lat), combination(&b, &lat));
        let fg = inner_product(&f, &g).unwrap();
        let gf = inner_product(&g, &f).unwrap();
        prop_assert!((fg - gf.conj()).norm() < 1e-12);
        prop_assert!(inner_product(&f, &f).unwrap().re >= 0.0);
    }

    #[test]
    fn coefficients_carry_the_norm(a in coeffs(), q in 0.3..0.8f64) {
        // orthonormality of ψ_n: ‖Σ c_n ψ_n‖² = Σ |c_n|²
        let lat = Arc::new(Lattice::auto(QParams::new(q, 1.0).unwrap()));
        let f = combination(&a, &lat);
        let want: f64 = a.iter().map(|(x, y)| x * x + y * y).sum();
        prop_assert!((f.norm().powi(2) - want).abs() < 1e-9 * (1.0 + want));
    }

    #[test]
    fn lowering_then_raising_is_number_operator(a in coeffs()) {
        // b⁺b ψ_n = ẽ_n ψ_n, on a lattice shallow enough for pointwise checks
        let lat = Arc::new(pointwise_lattice(QParams::new(0.5, 1.3).unwrap()));
        let f = combination(&a, &lat);
        let scaled: Vec<(f64, f64)> = a
            .iter()
            .enumerate()
            .map(|(n, &(x, y))| (x * eigenvalue(n, 0.5), y * eigenvalue(n, 0.5)))
            .collect();
        let want = combination(&scaled, &lat);
        let got = apply_bdag(&apply_b(&f));
        prop_assert!(got.sub(&want).unwrap().max_abs() < 1e-9);
    }

    #[test]
    fn coherent_overlaps_are_bounded(
        ar in -1.0..1.0f64, ai in -1.0..1.0f64, br in -1.0..1.0f64, bi in -1.0..1.0f64,
        q in 0.2..0.9f64,
    ) {
        let (a, b) = (C64::new(ar, ai), C64::new(br, bi));
        let o = overlap(a, b, q);
        prop_assert!(o.norm() <= 1.0 + 1e-12);
        let p = QParams::new(q, 1.0).unwrap();
        prop_assert!((o - overlap_from_coefficients(a, b, p)).norm() < 1e-10);
        prop_assert!((CoherentState::new(a, p, None).norm_sq() - 1.0).abs() < 1e-10);
    }
}
