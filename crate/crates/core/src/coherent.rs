//! q-coherent states `|α⟩ = f_α Σ αⁿ ψ_n / (ẽ_n!)^{1/2}`, eigenvectors of
//! the lowering operator `b`.

use std::sync::Arc;

use num_complex::Complex64 as C64;

use crate::asc::{asc_sequence, scaled_forward_sequence, WeightSpec};
use crate::error::{QoscError, Result};
use crate::oscillator::{apply_b, e_factorial, wavefunctions, GridFunction, DEGREE_CAP};
use crate::qseries::{pinf, qpochhammer_finite, Lattice, LatticePoint, QParams};

fn re(x: f64) -> C64 {
    C64::new(x, 0.0)
}

/// `f_α = (-(1-q)|α|²; q)_∞^{-1/2}`.
pub fn f_alpha(alpha: C64, q: f64) -> f64 {
    pinf(re(-(1.0 - q) * alpha.norm_sqr()), q).re.sqrt().recip()
}

/// Smallest `n` with `|α|ⁿ/(ẽ_n!)^{1/2} < 10^{-2} tol`, capped at the degree cap.
pub fn coefficient_count(alpha: C64, q: f64, tol: f64) -> usize {
    let a = alpha.norm();
    let target = 1e-2 * tol;
    (0..=DEGREE_CAP)
        .find(|&n| a.powi(n as i32) / e_factorial(n, q).sqrt() < target)
        .unwrap_or(DEGREE_CAP)
}

/// A coherent state in the `ψ_n` basis.
#[derive(Debug, Clone, PartialEq)]
pub struct CoherentState {
    pub alpha: C64,
    pub params: QParams,
    pub f_alpha: f64,
    /// `c_n = f_α αⁿ / (ẽ_n!)^{1/2}`, `n = 0..=n_max`.
    pub coefficients: Vec<C64>,
}

impl CoherentState {
    /// Truncation chosen by [`coefficient_count`] unless `n_max` is given.
    pub fn new(alpha: C64, params: QParams, n_max: Option<usize>) -> Self {
        let q = params.q();
        let n_max = n_max.unwrap_or_else(|| coefficient_count(alpha, q, params.tol()));
        let f = f_alpha(alpha, q);
        let mut coefficients = Vec::with_capacity(n_max + 1);
        let mut c = re(f);
        for n in 0..=n_max {
            if n > 0 {
                c *= alpha / crate::oscillator::eigenvalue(n, q).sqrt();
            }
            coefficients.push(c);
        }
        CoherentState {
            alpha,
            params,
            f_alpha: f,
            coefficients,
        }
    }

    pub fn n_max(&self) -> usize {
        self.coefficients.len() - 1
    }

    /// `Σ |c_n|²`.
    pub fn norm_sq(&self) -> f64 {
        self.coefficients.iter().map(|c| c.norm_sqr()).sum()
    }

    /// Largest `|c_n ẽ_n^{1/2} - α c_{n-1}|`.
    pub fn ladder_defect(&self) -> f64 {
        let q = self.params.q();
        self.coefficients
            .windows(2)
            .enumerate()
            .map(|(i, w)| {
                (w[1] * crate::oscillator::eigenvalue(i + 1, q).sqrt() - self.alpha * w[0]).norm()
            })
            .fold(0.0, f64::max)
    }
}

pub fn coherent_coefficients(alpha: C64, params: QParams, n_max: Option<usize>) -> Vec<C64> {
    CoherentState::new(alpha, params, n_max).coefficients
}

/// `Σ_{n ≤ n_max} c_n ψ_n` on `lattice`.
pub fn coherent_grid_series(
    alpha: C64,
    lattice: &Arc<Lattice>,
    n_max: Option<usize>,
) -> Result<GridFunction> {
    let state = CoherentState::new(alpha, *lattice.params(), n_max);
    let psi = wavefunctions(state.n_max(), lattice)?;
    GridFunction::linear_combination(&state.coefficients, &psi)
}

/// Product form
/// `f_α (ρ̃|x|)^{1/2} (-α√((1-q)μ), α√((1-q)/μ); q)_∞ / (α√((1-q)/μ) x; q)_∞`,
/// valid while `|α| √((1-q)/μ) max(1, μ) < 1`.
pub fn coherent_grid_closed(alpha: C64, lattice: &Arc<Lattice>) -> Result<GridFunction> {
    let params = *lattice.params();
    let (q, mu) = (params.q(), params.mu());
    let s = ((1.0 - q) / mu).sqrt();
    let reach = alpha.norm() * s * mu.max(1.0);
    if reach >= 1.0 {
        return Err(QoscError::OutsideConvergenceRegion(format!(
            "|α|·sqrt((1-q)/μ)·max(1,μ) = {reach} must be below 1"
        )));
    }
    let spec = WeightSpec::new(&params);
    let top = pinf(-alpha * ((1.0 - q) * mu).sqrt(), q) * pinf(alpha * s, q) * f_alpha(alpha, q);
    Ok(GridFunction::from_fn(lattice.clone(), |_, x| {
        top * (spec.eval(x) * x.abs()).sqrt() / pinf(alpha * s * x, q)
    }))
}

/// `‖b|α⟩ - α|α⟩‖` for the series state on `lattice`.
pub fn eigen_residual(alpha: C64, lattice: &Arc<Lattice>) -> Result<f64> {
    let state = coherent_grid_series(alpha, lattice, None)?;
    eigen_residual_of(&state, alpha)
}

/// `‖bf - αf‖` for a given grid function.
pub fn eigen_residual_of(state: &GridFunction, alpha: C64) -> Result<f64> {
    Ok(apply_b(state).sub(&state.scale(alpha))?.norm())
}

/// `⟨α|β⟩ = (-(1-q)α*β; q)_∞ / [(-(1-q)|α|², -(1-q)|β|²; q)_∞]^{1/2}`.
pub fn overlap(alpha: C64, beta: C64, q: f64) -> C64 {
    let num = pinf(-alpha.conj() * beta * (1.0 - q), q);
    num * f_alpha(alpha, q) * f_alpha(beta, q)
}

/// `Σ conj(c_n(α)) c_n(β)` over the longer of the two truncations.
pub fn overlap_from_coefficients(alpha: C64, beta: C64, params: QParams) -> C64 {
    let q = params.q();
    let n = coefficient_count(alpha, q, params.tol()).max(coefficient_count(beta, q, params.tol()));
    let a = coherent_coefficients(alpha, params, Some(n));
    let b = coherent_coefficients(beta, params, Some(n));
    a.iter().zip(&b).map(|(x, y)| x.conj() * y).sum()
}

/// `|Σ_{n ≤ n_max} u_n(x) q^{n(n-1)/2} tⁿ/(q;q)_n - (-t, t/μ; q)_∞/(xt/μ; q)_∞|`.
pub fn generating_function_residual(t: C64, x: C64, params: &QParams, n_max: usize) -> Result<f64> {
    let (q, mu) = (params.q(), params.mu());
    if (t * x / mu).norm() >= 1.0 {
        return Err(QoscError::OutsideConvergenceRegion(format!(
            "|t x/μ| = {} must be below 1",
            (t * x / mu).norm()
        )));
    }
    // q^{n(n-1)/2} u_n: Miller values on the support, the scaled forward
    // recurrence elsewhere
    let on_lattice = x.im == 0.0 && LatticePoint::locate(x.re, q, mu).is_some();
    let v: Vec<C64> = if on_lattice {
        asc_sequence(n_max, x, params)
            .into_iter()
            .enumerate()
            .map(|(n, u)| u * q.powf((n * n.saturating_sub(1) / 2) as f64))
            .collect()
    } else {
        scaled_forward_sequence(n_max, x, q, mu)
    };
    let series: C64 = v
        .iter()
        .enumerate()
        .map(|(n, &vn)| vn * t.powi(n as i32) / qpochhammer_finite(re(q), q, n))
        .sum();
    let closed = pinf(-t, q) * pinf(t / mu, q) / pinf(x * t / mu, q);
    Ok((series - closed).norm())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oscillator::inner_product;

    fn params(q: f64, mu: f64) -> QParams {
        QParams::new(q, mu).unwrap()
    }

    #[test]
    fn vacuum() {
        let c = coherent_coefficients(re(0.0), params(0.5, 1.0), None);
        assert_eq!(c[0], re(1.0));
        assert!(c[1..].iter().all(|v| *v == re(0.0)));
    }

    #[test]
    fn coefficients_are_normalised() {
        for alpha in [re(0.3), C64::new(0.0, 0.1), C64::new(1.2, -0.7)] {
            let s = CoherentState::new(alpha, params(0.5, 1.0), None);
            assert!((s.norm_sq() - 1.0).abs() < 1e-10);
            assert!(s.ladder_defect() < 1e-15);
        }
        let c = coherent_coefficients(re(0.3), params(0.5, 1.0), None);
        assert!((c[1] / c[0] - re(0.3)).norm() < 1e-15);
    }

    #[test]
    fn series_and_product_forms_agree() {
        let lat = Arc::new(Lattice::auto(params(0.5, 1.0)));
        let a = coherent_grid_series(re(0.3), &lat, None).unwrap();
        let b = coherent_grid_closed(re(0.3), &lat).unwrap();
        assert!(a.sub(&b).unwrap().max_abs() < 1e-9);
        assert!((inner_product(&a, &a).unwrap().re - 1.0).abs() < 1e-9);

        let v = coherent_grid_closed(re(0.0), &lat).unwrap();
        let psi0 = crate::oscillator::wavefunction(0, &lat).unwrap();
        assert!(v.sub(&psi0).unwrap().max_abs() < 1e-15);
    }

    #[test]
    fn product_form_domain() {
        let lat = Arc::new(Lattice::with_depth(params(0.5, 1.0), 5).unwrap());
        let err = coherent_grid_closed(re(2.0), &lat).unwrap_err();
        assert!(matches!(err, QoscError::OutsideConvergenceRegion(_)));
    }

    #[test]
    fn overlaps() {
        let q = 0.5;
        let a = C64::new(0.2, 0.0);
        assert!((overlap(a, a, q) - re(1.0)).norm() < 1e-14);
        assert!((overlap(a, re(0.0), q) - re(f_alpha(a, q))).norm() < 1e-14);
        let b = C64::new(0.0, 0.3);
        let sum = overlap_from_coefficients(a, b, params(q, 1.0));
        assert!((overlap(a, b, q) - sum).norm() < 1e-10);
    }

    #[test]
    fn brenke_generating_function() {
        let p = params(0.6, 1.5);
        let r = generating_function_residual(re(0.4), re(0.7), &p, 80).unwrap();
        assert!(r < 1e-12);
        let r = generating_function_residual(re(0.4), re(0.36), &p, 80).unwrap();
        assert!(r < 1e-12);
        let r = generating_function_residual(re(0.0), re(0.7), &p, 5).unwrap();
        assert_eq!(r, 0.0);
        assert!(generating_function_residual(re(3.0), re(0.7), &p, 5).is_err());
    }
}
