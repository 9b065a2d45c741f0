//! Self-dual `₃φ₂` rational functions `u`, `v` that are biorthogonal with
//! respect to a two-branch measure in `y` on the `μ₂` lattice.
//!
//! The index `x` runs over the `μ₁` lattice `{q^s} ∪ {-μ₁q^s}`. The branch of
//! `x` picks the form of `u`, and the branches of the pair `(x, x')` pick
//! the weight.

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use rayon::prelude::*;

use crate::error::{QoscError, Result};
use crate::qfourier::kernel_hyp_factor;
use crate::qseries::{basic_hyp, pinf, pinf_many, Branch, Lattice, LatticePoint, QParams};

fn re(x: f64) -> C64 {
    C64::new(x, 0.0)
}

/// `q`, `μ₁`, `μ₂` and `t₁, t₂` tied by `t₁t₂ = μ₁μ₂`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BiorthoParams {
    pub q: f64,
    pub mu1: f64,
    pub mu2: f64,
    pub t1: C64,
    pub t2: C64,
    tol: f64,
    max_terms: usize,
}

impl BiorthoParams {
    /// Checks `|t₁t₂ - μ₁μ₂| < tol μ₁μ₂` with the default tolerance.
    pub fn new(q: f64, mu1: f64, mu2: f64, t1: C64, t2: C64) -> Result<Self> {
        let p1 = QParams::new(q, mu1)?;
        QParams::new(q, mu2)?;
        let tol = p1.tol();
        if (t1 * t2 - mu1 * mu2).norm() >= tol * mu1 * mu2 {
            return Err(QoscError::ConstraintViolated(format!(
                "t1·t2 = {} must equal μ1·μ2 = {}",
                t1 * t2,
                mu1 * mu2
            )));
        }
        if t1 == re(0.0) || t2 == re(0.0) {
            return Err(QoscError::InvalidParams("t1 and t2 must be nonzero".into()));
        }
        Ok(BiorthoParams {
            q,
            mu1,
            mu2,
            t1,
            t2,
            tol,
            max_terms: p1.max_terms(),
        })
    }

    /// `t₂ = μ₁μ₂/t₁`.
    pub fn from_t1(q: f64, mu1: f64, mu2: f64, t1: C64) -> Result<Self> {
        if t1 == re(0.0) {
            return Err(QoscError::InvalidParams("t1 must be nonzero".into()));
        }
        Self::new(q, mu1, mu2, t1, re(mu1 * mu2) / t1)
    }

    /// The same parameters with `t₁ ↔ t₂`.
    pub fn swapped(&self) -> Self {
        BiorthoParams {
            t1: self.t2,
            t2: self.t1,
            ..*self
        }
    }

    /// Parameters of the `x` lattice.
    pub fn x_params(&self) -> QParams {
        QParams::new(self.q, self.mu1).expect("validated")
    }

    /// Parameters of the `y` lattice.
    pub fn y_params(&self) -> QParams {
        QParams::new(self.q, self.mu2).expect("validated")
    }

    /// Quadrature lattice for the `y` integral.
    pub fn y_lattice(&self) -> Lattice {
        Lattice::auto(self.y_params())
    }
}

fn locate_x(x: f64, bp: &BiorthoParams) -> Result<LatticePoint> {
    LatticePoint::locate(x, bp.q, bp.mu1)
        .ok_or_else(|| QoscError::InvalidParams(format!("x = {x} is not on the μ1 lattice")))
}

/// `u(x,y)`: at `x = q^s`
/// `₃φ₂(1/x, 1/y, -q/t₁; qμ₁/(t₁x), qμ₂/(t₁y); q, q)`, at `x = -μ₁q^s`
/// `₃φ₂(-μ₁/x, -μ₂/y, -qt₂; -qt₂/x, -qt₂/y; q, q)`.
pub fn rational_u(x: f64, y: f64, bp: &BiorthoParams) -> Result<C64> {
    if y == 0.0 {
        return Err(QoscError::ZeroArgument);
    }
    let (q, mu1, mu2, t1, t2) = (bp.q, bp.mu1, bp.mu2, bp.t1, bp.t2);
    let (upper, lower) = match locate_x(x, bp)?.branch {
        Branch::Pos => (
            [re(1.0 / x), re(1.0 / y), -q / t1],
            [q * mu1 / (t1 * x), q * mu2 / (t1 * y)],
        ),
        Branch::Neg => (
            [re(-mu1 / x), re(-mu2 / y), -q * t2],
            [-q * t2 / x, -q * t2 / y],
        ),
    };
    Ok(basic_hyp(&upper, &lower, q, re(q), bp.tol.min(1e-15), bp.max_terms)?.value)
}

/// `v(x,y) = u(x,y)` with `t₁ ↔ t₂`.
pub fn rational_v(x: f64, y: f64, bp: &BiorthoParams) -> Result<C64> {
    rational_u(x, y, &bp.swapped())
}

/// Which of the four weights applies, by the branches of `(x, x')`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum WeightCase {
    PosPos,
    NegNeg,
    PosNeg,
    NegPos,
}

impl WeightCase {
    pub const ALL: [WeightCase; 4] = [
        WeightCase::PosPos,
        WeightCase::NegNeg,
        WeightCase::PosNeg,
        WeightCase::NegPos,
    ];

    pub fn of(x: Branch, x_prime: Branch) -> Self {
        match (x, x_prime) {
            (Branch::Pos, Branch::Pos) => WeightCase::PosPos,
            (Branch::Neg, Branch::Neg) => WeightCase::NegNeg,
            (Branch::Pos, Branch::Neg) => WeightCase::PosNeg,
            (Branch::Neg, Branch::Pos) => WeightCase::NegPos,
        }
    }

    pub fn branches(self) -> (Branch, Branch) {
        match self {
            WeightCase::PosPos => (Branch::Pos, Branch::Pos),
            WeightCase::NegNeg => (Branch::Neg, Branch::Neg),
            WeightCase::PosNeg => (Branch::Pos, Branch::Neg),
            WeightCase::NegPos => (Branch::Neg, Branch::Pos),
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            WeightCase::PosPos => "pos-pos",
            WeightCase::NegNeg => "neg-neg",
            WeightCase::PosNeg => "pos-neg",
            WeightCase::NegPos => "neg-pos",
        }
    }
}

/// `ρ̃(y) = (qy, -qy/μ₂; q)_∞ / D(y)` with
///
/// ```text
/// pos-pos  D = (t₁y/μ₂, t₂y/μ₂; q)_∞
/// neg-neg  D = (-y/t₁, -y/t₂; q)_∞
/// pos-neg  D = (t₁y/μ₂, -y/t₁; q)_∞
/// neg-pos  D = (-y/t₂, t₂y/μ₂; q)_∞
/// ```
pub fn bi_weight(y: f64, case: WeightCase, bp: &BiorthoParams) -> C64 {
    let (q, mu2, t1, t2) = (bp.q, bp.mu2, bp.t1, bp.t2);
    let num = pinf(re(q * y), q) * pinf(re(-q * y / mu2), q);
    let a = |t: C64| t * y / mu2;
    let b = |t: C64| -y / t;
    let den = match case {
        WeightCase::PosPos => pinf_many(&[a(t1), a(t2)], q),
        WeightCase::NegNeg => pinf_many(&[b(t1), b(t2)], q),
        WeightCase::PosNeg => pinf_many(&[a(t1), b(t1)], q),
        WeightCase::NegPos => pinf_many(&[b(t2), a(t2)], q),
    };
    num / den
}

/// `d_x²`, the right-hand side of the biorthogonality relation divided by `1-q`.
pub fn bi_norm_sq(x: f64, bp: &BiorthoParams) -> Result<C64> {
    let (q, mu1, mu2, t1, t2) = (bp.q, bp.mu1, bp.mu2, bp.t1, bp.t2);
    let common =
        pinf(re(q), q).powi(2) * pinf_many(&[re(-mu1), re(-mu2), re(-q / mu1), re(-q / mu2)], q);
    let tail = pinf(re(q * x), q) * pinf(re(-q * x / mu1), q) * x.abs();
    let (den, num) = match locate_x(x, bp)?.branch {
        Branch::Pos => (
            pinf_many(&[-t1, -t2, t1 / mu1, t2 / mu1, t1 / mu2, t2 / mu2], q),
            pinf(t1 * x / mu1, q) * pinf(t2 * x / mu1, q),
        ),
        Branch::Neg => {
            let (i1, i2) = (t1.inv(), t2.inv());
            (
                pinf_many(&[-i1, -i2, mu1 * i1, mu1 * i2, mu2 * i1, mu2 * i2], q),
                pinf(-x * i1, q) * pinf(-x * i2, q),
            )
        }
    };
    Ok(common / den * num / tail)
}

/// `∫ u(x,y) v(x',y) ρ̃(y) d_q y` over the `y` lattice.
pub fn bi_integral(x: f64, x_prime: f64, bp: &BiorthoParams, lattice_y: &Lattice) -> Result<C64> {
    let case = WeightCase::of(locate_x(x, bp)?.branch, locate_x(x_prime, bp)?.branch);
    let samples = lattice_y
        .values()
        .iter()
        .map(|&y| Ok(rational_u(x, y, bp)? * rational_v(x_prime, y, bp)? * bi_weight(y, case, bp)))
        .collect::<Result<Vec<C64>>>()?;
    lattice_y.integrate(&samples)
}

/// `|∫ u(x,y) v(x',y) ρ̃(y) d_q y - (1-q) d_x² δ_{xx'}|`.
pub fn biorthogonality_residual(
    x: f64,
    x_prime: f64,
    bp: &BiorthoParams,
    lattice_y: &Lattice,
) -> Result<f64> {
    let got = bi_integral(x, x_prime, bp, lattice_y)?;
    let want = if locate_x(x, bp)? == locate_x(x_prime, bp)? {
        (1.0 - bp.q) * bi_norm_sq(x, bp)?
    } else {
        re(0.0)
    };
    Ok((got - want).norm())
}

/// `B_{ss'} = ∫ u(x_s, ·) v(x'_{s'}, ·) ρ̃ d_q y / ((1-q) d_{x_s}²)` for
/// `s, s' ≤ s_max`, with the branches of `x` and `x'` fixed by `case`.
pub fn biorthogonality_matrix(
    case: WeightCase,
    s_max: usize,
    bp: &BiorthoParams,
    lattice_y: &Lattice,
) -> Result<DMatrix<C64>> {
    let (bx, bxp) = case.branches();
    let point = |branch, s| LatticePoint { branch, k: s }.value(bp.q, bp.mu1);
    let rows = (0..=s_max)
        .into_par_iter()
        .map(|s| {
            let x = point(bx, s);
            let norm = (1.0 - bp.q) * bi_norm_sq(x, bp)?;
            (0..=s_max)
                .map(|sp| Ok(bi_integral(x, point(bxp, sp), bp, lattice_y)? / norm))
                .collect::<Result<Vec<C64>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(DMatrix::from_fn(s_max + 1, s_max + 1, |i, j| rows[i][j]))
}

/// `max |B - I|` over the four weight cases. Mixed cases compare with zero.
pub fn biorthogonality_defect(s_max: usize, bp: &BiorthoParams) -> Result<f64> {
    let lattice = bp.y_lattice();
    let mut worst: f64 = 0.0;
    for case in WeightCase::ALL {
        let b = biorthogonality_matrix(case, s_max, bp, &lattice)?;
        let diagonal = matches!(case, WeightCase::PosPos | WeightCase::NegNeg);
        for ((i, j), v) in b
            .iter()
            .enumerate()
            .map(|(n, v)| ((n % b.nrows(), n / b.nrows()), v))
        {
            let want = if diagonal && i == j { 1.0 } else { 0.0 };
            worst = worst.max((v - want).norm());
        }
    }
    Ok(worst)
}

/// Duality residual `|u(x,y; μ₁,μ₂) - u(y,x; μ₂,μ₁)| / (1 + |u(x,y; μ₁,μ₂)|)`
/// for `x` on the `μ₁` lattice and `y` on the `μ₂` lattice, both on the
/// same branch. With
/// `μ₁ = μ₂` this is the symmetry `u(x,y) = u(y,x)`.
///
/// Across branches the two sides are different terminating series (one
/// terminates through `x`, the other through `y`) and agree only up to
/// product prefactors, so mixed pairs are rejected.
pub fn self_duality_residual(x: f64, y: f64, bp: &BiorthoParams) -> Result<f64> {
    let dual = BiorthoParams::new(bp.q, bp.mu2, bp.mu1, bp.t1, bp.t2)?;
    let bx = locate_x(x, bp)?.branch;
    let by = locate_x(y, &dual)?.branch;
    if bx != by {
        return Err(QoscError::InvalidParams(
            "duality is checked on same-branch pairs".into(),
        ));
    }
    let lhs = rational_u(x, y, bp)?;
    Ok((lhs - rational_u(y, x, &dual)?).norm() / (1.0 + lhs.norm()))
}

/// `|u(x,y) - ₃φ₂ factor of K_t(x,y)|` with `μ₁ = μ₂ = μ`, `t₁ = μt`.
pub fn specialization_residual(t: C64, x: f64, y: f64, params: &QParams) -> Result<f64> {
    let mu = params.mu();
    let bp = BiorthoParams::from_t1(params.q(), mu, mu, t * mu)?;
    Ok((rational_u(x, y, &bp)? - kernel_hyp_factor(t, x, y, params)?).norm())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qseries::qpochhammer_finite;

    fn set_one() -> BiorthoParams {
        BiorthoParams::from_t1(0.5, 1.0, 2.0, re(2f64.sqrt())).unwrap()
    }

    #[test]
    fn constraint_is_enforced() {
        let err = BiorthoParams::new(0.5, 1.0, 2.0, re(1.0), re(1.0)).unwrap_err();
        assert!(matches!(err, QoscError::ConstraintViolated(_)));
        let bp = set_one();
        assert!((bp.t1 * bp.t2 - 2.0).norm() < 1e-15);
        assert_eq!(bp.swapped().t1, bp.t2);
    }

    #[test]
    fn top_point_gives_one() {
        let bp = set_one();
        for y in [1.0, 0.25, -2.0, -0.5] {
            assert_eq!(rational_u(1.0, y, &bp).unwrap(), re(1.0));
            assert_eq!(rational_v(1.0, y, &bp).unwrap(), re(1.0));
        }
        assert!(rational_u(0.3, 1.0, &bp).is_err());
        assert_eq!(rational_u(1.0, 0.0, &bp), Err(QoscError::ZeroArgument));
    }

    #[test]
    fn weight_at_top() {
        let bp = set_one();
        let (q, mu2) = (bp.q, bp.mu2);
        // long finite products stand in for the infinite ones
        let f = |a: C64| qpochhammer_finite(a, q, 200);
        let want = f(re(q)) * f(re(-q / mu2)) / (f(bp.t1 / mu2) * f(bp.t2 / mu2));
        assert!((bi_weight(1.0, WeightCase::PosPos, &bp) - want).norm() < 1e-14);
    }

    #[test]
    fn norms_are_positive() {
        let bp = set_one();
        for s in 0..=6 {
            for x in [bp.q.powi(s), -bp.mu1 * bp.q.powi(s)] {
                let d = bi_norm_sq(x, &bp).unwrap();
                assert!(d.re > 0.0 && d.im.abs() < 1e-14 * d.re, "x={x}: {d}");
            }
        }
    }

    #[test]
    fn relation_examples() {
        let bp = set_one();
        let lat = bp.y_lattice();
        let q = bp.q;
        let scale = |x: f64| (1.0 - q) * bi_norm_sq(x, &bp).unwrap().norm();
        assert!(biorthogonality_residual(1.0, 1.0, &bp, &lat).unwrap() < 1e-7 * scale(1.0));
        assert!(biorthogonality_residual(1.0, q, &bp, &lat).unwrap() < 1e-7 * scale(1.0));
        let (x, xp) = (q, -bp.mu1 * q);
        let r = biorthogonality_residual(x, xp, &bp, &lat).unwrap();
        assert!(r < 1e-6 * scale(x).max(scale(xp)));
    }

    #[test]
    fn matrix_is_identity() {
        assert!(biorthogonality_defect(4, &set_one()).unwrap() < 1e-10);
    }

    #[test]
    fn duality_on_same_branch() {
        let bp = set_one();
        let (q, mu1, mu2) = (bp.q, bp.mu1, bp.mu2);
        for s in 0..=4 {
            for k in 0..=4 {
                let r = self_duality_residual(q.powi(s), q.powi(k), &bp).unwrap();
                assert!(r < 1e-10 * (1.0 + rational_u(q.powi(s), q.powi(k), &bp).unwrap().norm()));
                let (x, y) = (-mu1 * q.powi(s), -mu2 * q.powi(k));
                assert!(self_duality_residual(x, y, &bp).unwrap() < 1e-10);
            }
        }
        assert!(self_duality_residual(q, -mu2, &bp).is_err());
    }

    #[test]
    fn kernel_specialization() {
        let p = QParams::new(0.5, 1.5).unwrap();
        let i = C64::new(0.0, 1.0);
        for (x, y) in [
            (0.25, 0.5),
            (0.125, -0.75),
            (-1.5 * 0.25, 1.0),
            (-0.75, -0.375),
        ] {
            assert!(specialization_residual(i, x, y, &p).unwrap() < 1e-12);
        }
    }

    #[test]
    fn degenerate_parameters_hit_a_pole() {
        // t1 = μ1 turns the lower parameter qμ1/(t1 x) into q^{1-s}
        let bp = BiorthoParams::from_t1(0.5, 1.0, 2.0, re(1.0)).unwrap();
        let err = rational_u(0.25, -1.0, &bp).unwrap_err();
        assert!(matches!(err, QoscError::PoleInDenominator { .. }));
    }
}
