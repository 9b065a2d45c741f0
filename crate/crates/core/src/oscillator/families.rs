//! Generic q-ladder operators `a`, `a⁺` built from shifts `e^{±∂_s}` with
//! coefficient functions of `s`, checked on an abstract uniform `s`-grid.

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;

use crate::error::{QoscError, Result};

/// Default number of grid points.
pub const FAMILY_GRID_LEN: usize = 64;

const CONSTRAINT_RTOL: f64 = 1e-10;

/// `(offset, coefficient)` pairs.
type Stencil = Vec<(isize, C64)>;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LadderFamily {
    /// `a = α(s) - β(s) e^{∂}`, `a⁺ = α(s) - e^{-∂} β(s)` with `α = εq^s`,
    /// `β² = ε²(q^{s+1} - γ)(q^s - δ)`; requires `(1-q)γδε² = 1`.
    /// Rule: `aa⁺ - q a⁺a = 1`.
    A {
        q: f64,
        epsilon: f64,
        gamma: f64,
        delta: f64,
    },
    /// `a = e^{2∂} - α(s+1) e^{∂}`, `a⁺ = e^{-2∂} - α(s) e^{-∂}` with
    /// `α = εq^{ps}`; requires `p = 1/2`. Rule: `aa⁺ - q a⁺a = 1 - q`.
    B { q: f64, epsilon: f64, power: f64 },
    /// `a = ε(α - β)^{-1}(e^{γ∂} α + e^{-γ∂} β)`,
    /// `a⁺ = ε(α - β)^{-1}(α e^{-γ∂} + β e^{γ∂})` with `α = q^{-s}`,
    /// `β = ±q^s`; requires `γ = 1/2` and `ε² = q^{1/2}/(1-q)`.
    /// Rule: `aa⁺ - q a⁺a = 1`.
    C {
        q: f64,
        epsilon: f64,
        shift: f64,
        sign: f64,
    },
    /// `a = α^{-1} - εβ^{-1} e^{∂}`, `a⁺ = α - ε e^{∂} β` with `α = q^{as}`,
    /// `β = q^{bs}`; requires `a = 1`, `b = 1/2`.
    /// Rule: `aa⁺ - q a⁺a = 1 - q`.
    D {
        q: f64,
        epsilon: f64,
        alpha_power: f64,
        beta_power: f64,
    },
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= CONSTRAINT_RTOL * a.abs().max(b.abs()).max(1.0)
}

fn violated(msg: impl Into<String>) -> QoscError {
    QoscError::ConstraintViolated(msg.into())
}

impl LadderFamily {
    /// A member of each family that satisfies its constraint.
    pub fn standard(label: char, q: f64) -> Result<Self> {
        let fam = match label.to_ascii_uppercase() {
            'A' => {
                let (epsilon, gamma) = (1.3, 0.7);
                LadderFamily::A {
                    q,
                    epsilon,
                    gamma,
                    delta: 1.0 / ((1.0 - q) * gamma * epsilon * epsilon),
                }
            }
            'B' => LadderFamily::B {
                q,
                epsilon: 1.3,
                power: 0.5,
            },
            'C' => LadderFamily::C {
                q,
                epsilon: (q.sqrt() / (1.0 - q)).sqrt(),
                shift: 0.5,
                sign: 1.0,
            },
            'D' => LadderFamily::D {
                q,
                epsilon: 0.7,
                alpha_power: 1.0,
                beta_power: 0.5,
            },
            other => {
                return Err(QoscError::InvalidParams(format!(
                    "unknown ladder family {other:?}"
                )))
            }
        };
        fam.validate()?;
        Ok(fam)
    }

    pub fn label(&self) -> char {
        match self {
            LadderFamily::A { .. } => 'A',
            LadderFamily::B { .. } => 'B',
            LadderFamily::C { .. } => 'C',
            LadderFamily::D { .. } => 'D',
        }
    }

    pub fn q(&self) -> f64 {
        match *self {
            LadderFamily::A { q, .. }
            | LadderFamily::B { q, .. }
            | LadderFamily::C { q, .. }
            | LadderFamily::D { q, .. } => q,
        }
    }

    /// Right-hand side `c` of `aa⁺ - q a⁺a = c`.
    pub fn rule_constant(&self) -> f64 {
        match self {
            LadderFamily::A { .. } | LadderFamily::C { .. } => 1.0,
            LadderFamily::B { q, .. } | LadderFamily::D { q, .. } => 1.0 - q,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let q = self.q();
        if !(q > 0.0 && q < 1.0) {
            return Err(QoscError::InvalidParams("q must lie in (0,1)".into()));
        }
        match *self {
            LadderFamily::A {
                epsilon,
                gamma,
                delta,
                ..
            } => {
                let lhs = (1.0 - q) * gamma * delta * epsilon * epsilon;
                if !close(lhs, 1.0) {
                    return Err(violated(format!("family A needs (1-q)γδε² = 1, got {lhs}")));
                }
            }
            LadderFamily::B { power, .. } => {
                if !close(power, 0.5) {
                    return Err(violated(format!(
                        "family B needs α = εq^(s/2), got exponent {power}·s"
                    )));
                }
            }
            LadderFamily::C {
                epsilon,
                shift,
                sign,
                ..
            } => {
                if !close(shift, 0.5) {
                    return Err(violated(format!("family C needs shift 1/2, got {shift}")));
                }
                if sign != 1.0 && sign != -1.0 {
                    return Err(violated(format!("family C needs αβ = ±1, got sign {sign}")));
                }
                let want = q.sqrt() / (1.0 - q);
                if !close(epsilon * epsilon, want) {
                    return Err(violated(format!(
                        "family C needs ε² = q^(1/2)/(1-q) = {want}, got {}",
                        epsilon * epsilon
                    )));
                }
            }
            LadderFamily::D {
                alpha_power,
                beta_power,
                ..
            } => {
                if !close(alpha_power, 1.0) || !close(beta_power, 0.5) {
                    return Err(violated(format!(
                        "family D needs α = q^s, β = q^(s/2), got exponents {alpha_power}, {beta_power}"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Grid coordinates and the index step of one shift.
    fn grid(&self, len: usize) -> Vec<f64> {
        let mid = (len / 2) as f64;
        match self {
            LadderFamily::A { .. } | LadderFamily::B { .. } => (0..len).map(|j| j as f64).collect(),
            // half-integer steps, offset so that α(s) ≠ β(s) everywhere
            LadderFamily::C { .. } => (0..len).map(|j| 0.5 * (j as f64 - mid) + 0.25).collect(),
            // centred, so that neither q^s nor q^{-s/2} dominates
            LadderFamily::D { .. } => (0..len).map(|j| j as f64 - mid).collect(),
        }
    }

    /// Largest index offset read by `a` or `a⁺`.
    fn reach(&self) -> usize {
        match self {
            LadderFamily::B { .. } => 2,
            _ => 1,
        }
    }

    /// Stencils of `(af)(s)` and `(a⁺f)(s)`.
    fn stencils(&self, s: f64) -> (Stencil, Stencil) {
        let re = |v: f64| C64::new(v, 0.0);
        match *self {
            LadderFamily::A {
                q,
                epsilon,
                gamma,
                delta,
            } => {
                let alpha = |s: f64| epsilon * q.powf(s);
                let beta = |s: f64| {
                    re(epsilon * epsilon * (q.powf(s + 1.0) - gamma) * (q.powf(s) - delta)).sqrt()
                };
                (
                    vec![(0, re(alpha(s))), (1, -beta(s))],
                    vec![(0, re(alpha(s))), (-1, -beta(s - 1.0))],
                )
            }
            LadderFamily::B { q, epsilon, power } => {
                let alpha = |s: f64| epsilon * q.powf(power * s);
                (
                    vec![(2, re(1.0)), (1, re(-alpha(s + 1.0)))],
                    vec![(-2, re(1.0)), (-1, re(-alpha(s)))],
                )
            }
            LadderFamily::C {
                q,
                epsilon,
                shift,
                sign,
            } => {
                let alpha = |s: f64| q.powf(-s);
                let beta = |s: f64| sign * q.powf(s);
                let c = epsilon / (alpha(s) - beta(s));
                (
                    vec![(1, re(c * alpha(s + shift))), (-1, re(c * beta(s - shift)))],
                    vec![(-1, re(c * alpha(s))), (1, re(c * beta(s)))],
                )
            }
            LadderFamily::D {
                q,
                epsilon,
                alpha_power,
                beta_power,
            } => {
                let alpha = |s: f64| q.powf(alpha_power * s);
                let beta = |s: f64| q.powf(beta_power * s);
                (
                    vec![(0, re(1.0 / alpha(s))), (1, re(-epsilon / beta(s)))],
                    vec![(0, re(alpha(s))), (1, re(-epsilon * beta(s + 1.0)))],
                )
            }
        }
    }

    /// Dense matrices of `a` and `a⁺` on a grid of `len` points; reads past
    /// the ends are dropped.
    pub fn matrices(&self, len: usize) -> (DMatrix<C64>, DMatrix<C64>) {
        let grid = self.grid(len);
        let mut a = DMatrix::zeros(len, len);
        let mut ad = DMatrix::zeros(len, len);
        for (i, &s) in grid.iter().enumerate() {
            let (sa, sd) = self.stencils(s);
            for (m, stencil) in [(&mut a, sa), (&mut ad, sd)] {
                for (off, c) in stencil {
                    let j = i as isize + off;
                    if (0..len as isize).contains(&j) {
                        m[(i, j as usize)] += c;
                    }
                }
            }
        }
        (a, ad)
    }
}

/// Largest entry of `aa⁺ - q a⁺a - c` over interior rows, each entry taken
/// relative to `max(1, Σ|terms|)`.
///
/// The columns of the matrix are the images of the unit grid functions
/// `δ_j`, so this is the rule applied to that test set. Rows within two
/// reaches of either end see truncated stencils and are excluded.
pub fn verify_ladder_family(family: &LadderFamily, grid_len: usize) -> Result<f64> {
    family.validate()?;
    let margin = 2 * family.reach();
    if grid_len <= 2 * margin {
        return Err(QoscError::InvalidParams(format!(
            "grid of {grid_len} points has no interior rows"
        )));
    }
    let q = C64::new(family.q(), 0.0);
    let c = C64::new(family.rule_constant(), 0.0);
    let (a, ad) = family.matrices(grid_len);
    let id = DMatrix::<C64>::identity(grid_len, grid_len);
    let defect = &a * &ad - (&ad * &a) * q - &id * c;

    let abs = |m: &DMatrix<C64>| m.map(|v| v.norm());
    let (aa, aad) = (abs(&a), abs(&ad));
    let scale =
        &aa * &aad + (&aad * &aa) * q.re + DMatrix::<f64>::identity(grid_len, grid_len) * c.re;

    let mut worst: f64 = 0.0;
    for i in margin..grid_len - margin {
        for j in 0..grid_len {
            worst = worst.max(defect[(i, j)].norm() / scale[(i, j)].max(1.0));
        }
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn standard_members_satisfy_their_rules() {
        for label in ['A', 'B', 'C', 'D'] {
            let fam = LadderFamily::standard(label, 0.5).unwrap();
            let r = verify_ladder_family(&fam, FAMILY_GRID_LEN).unwrap();
            assert!(r < 1e-9, "family {label}: {r}");
        }
    }

    #[test]
    fn family_c_with_negative_sign() {
        let q: f64 = 0.4;
        let fam = LadderFamily::C {
            q,
            epsilon: (q.sqrt() / (1.0 - q)).sqrt(),
            shift: 0.5,
            sign: -1.0,
        };
        assert!(verify_ladder_family(&fam, 40).unwrap() < 1e-9);
    }

    #[test]
    fn broken_constraints_are_rejected() {
        let bad = LadderFamily::A {
            q: 0.5,
            epsilon: 1.0,
            gamma: 1.0,
            delta: 1.0,
        };
        assert!(matches!(
            verify_ladder_family(&bad, 64),
            Err(QoscError::ConstraintViolated(_))
        ));
        let bad = LadderFamily::B {
            q: 0.5,
            epsilon: 1.0,
            power: 1.0,
        };
        assert!(matches!(
            bad.validate(),
            Err(QoscError::ConstraintViolated(_))
        ));
        let bad = LadderFamily::C {
            q: 0.5,
            epsilon: 1.0,
            shift: 0.5,
            sign: 1.0,
        };
        assert!(matches!(
            bad.validate(),
            Err(QoscError::ConstraintViolated(_))
        ));
        let bad = LadderFamily::D {
            q: 0.5,
            epsilon: 1.0,
            alpha_power: 1.0,
            beta_power: 1.0,
        };
        assert!(matches!(
            bad.validate(),
            Err(QoscError::ConstraintViolated(_))
        ));
    }

    #[test]
    fn wrong_rule_is_detected() {
        // B satisfies the rule with constant 1 - q, not 1
        let fam = LadderFamily::standard('B', 0.5).unwrap();
        let (a, ad) = fam.matrices(20);
        let d = &a * &ad - (&ad * &a) * C64::new(0.5, 0.0);
        assert!((d[(8, 8)].re - 0.5).abs() < 1e-12);
    }
}
