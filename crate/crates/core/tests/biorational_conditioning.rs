use num_complex::Complex64 as C64;
use qosc_core::biorational::{biorthogonality_defect, rational_u, BiorthoParams};
use qosc_core::QoscError;

fn bp(q: f64, mu1: f64, mu2: f64, t1: f64) -> BiorthoParams {
    BiorthoParams::from_t1(q, mu1, mu2, C64::new(t1, 0.0)).unwrap()
}

#[test]
fn both_parameter_sets_are_biorthogonal() {
    assert!(biorthogonality_defect(6, &bp(0.5, 1.0, 2.0, 2f64.sqrt())).unwrap() < 1e-10);
    assert!(biorthogonality_defect(6, &bp(0.3, 0.7, 1.5, 1.2)).unwrap() < 1e-12);
}

#[test]
fn accuracy_degrades_as_t1_shrinks_near_one() {
    // q = 0.9: the defect grows by orders of magnitude as t1 decreases,
    // independently of the lattice depth, which points at cancellation
    let coarse = biorthogonality_defect(4, &bp(0.9, 0.5, 0.7, 0.6)).unwrap();
    let fine = biorthogonality_defect(4, &bp(0.9, 0.5, 0.7, 0.4)).unwrap();
    assert!(coarse < 1e-9, "{coarse}");
    assert!(fine > 10.0 * coarse, "{fine} vs {coarse}");
}

#[test]
fn t1_equal_to_mu1_meets_a_pole() {
    let p = bp(0.5, 1.0, 2.0, 1.0);
    let err = rational_u(0.25, -2.0, &p).unwrap_err();
    assert!(
        matches!(err, QoscError::PoleInDenominator { .. }),
        "{err:?}"
    );
}

#[test]
fn constraint_is_enforced() {
    let err =
        BiorthoParams::new(0.5, 1.0, 2.0, C64::new(1.0, 0.0), C64::new(1.0, 0.0)).unwrap_err();
    assert!(matches!(err, QoscError::ConstraintViolated(_)));
}
