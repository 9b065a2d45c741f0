use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::grid::{inner_product, GridFunction};
use crate::asc::{lattice_sequence, norm_sq, WeightSpec};
use crate::error::{QoscError, Result};
use crate::qseries::{Lattice, QParams};

/// Highest degree for which `d_n` stays comfortably inside double range.
pub const DEGREE_CAP: usize = 50;

/// Depth errors at which pointwise difference identities are still
/// resolvable: rounding in `f(x)/x` grows like `ε/x` toward the origin.
const POINTWISE_FLOOR: f64 = 1e-10;

/// `ẽ_n = (1 - q^{-n})/(1 - q^{-1})`.
pub fn eigenvalue(n: usize, q: f64) -> f64 {
    if n == 0 {
        return 0.0;
    }
    (1.0 - q.powi(-(n as i32))) / (1.0 - 1.0 / q)
}

/// `ẽ_n! = ẽ_1 ẽ_2 ⋯ ẽ_n`.
pub fn e_factorial(n: usize, q: f64) -> f64 {
    (1..=n).map(|k| eigenvalue(k, q)).product()
}

/// A lattice shallow enough that `f(x)/x²` terms keep rounding below
/// `1e-10` relative, for checking identities row by row.
pub fn pointwise_lattice(params: QParams) -> Lattice {
    let x_min = (f64::EPSILON / POINTWISE_FLOOR).powf(2.0 / 3.0);
    let lowest = params.mu().min(1.0);
    let depth = ((x_min / lowest).ln() / params.q().ln()).floor().max(2.0) as usize;
    Lattice::with_depth(params, depth.min(crate::qseries::K_MAX)).expect("depth already capped")
}

fn check_degree(n: usize) -> Result<()> {
    if n > DEGREE_CAP {
        return Err(QoscError::InvalidParams(format!(
            "degree {n} exceeds the cap {DEGREE_CAP}"
        )));
    }
    Ok(())
}

/// `ψ_0..=ψ_{n_max}` with `ψ_n = d_n^{-1} (ρ̃(x)|x|)^{1/2} u_n(x)`.
pub fn wavefunctions(n_max: usize, lattice: &Arc<Lattice>) -> Result<Vec<GridFunction>> {
    check_degree(n_max)?;
    let params = *lattice.params();
    let (q, mu) = (params.q(), params.mu());
    let spec = WeightSpec::new(&params);
    let inv_d: Vec<f64> = (0..=n_max)
        .map(|n| norm_sq(n, q, mu).sqrt().recip())
        .collect();

    let rows: Vec<Vec<f64>> = lattice
        .points()
        .par_iter()
        .zip(lattice.values().par_iter())
        .map(|(&p, &x)| {
            let pref = (spec.eval(x) * x.abs()).sqrt();
            lattice_sequence(n_max, p, &params)
                .into_iter()
                .zip(&inv_d)
                .map(|(u, d)| pref * u * d)
                .collect()
        })
        .collect();

    (0..=n_max)
        .map(|n| {
            let values = rows.iter().map(|r| C64::new(r[n], 0.0)).collect();
            GridFunction::new(lattice.clone(), values)
        })
        .collect()
}

pub fn wavefunction(n: usize, lattice: &Arc<Lattice>) -> Result<GridFunction> {
    check_degree(n)?;
    Ok(wavefunctions(n, lattice)?
        .pop()
        .expect("n_max + 1 functions"))
}

/// Gram matrix `⟨ψ_m, ψ_n⟩` for `m, n ≤ n_max`.
pub fn gram_matrix(n_max: usize, lattice: &Arc<Lattice>) -> Result<DMatrix<C64>> {
    let psi = wavefunctions(n_max, lattice)?;
    let mut g = DMatrix::zeros(n_max + 1, n_max + 1);
    for (m, a) in psi.iter().enumerate() {
        for (n, b) in psi.iter().enumerate().skip(m) {
            let v = inner_product(a, b)?;
            g[(m, n)] = v;
            g[(n, m)] = v.conj();
        }
    }
    Ok(g)
}

/// `max |⟨ψ_m, ψ_n⟩ - δ_{mn}|` on `lattice`.
pub fn orthonormality_residual(n_max: usize, lattice: &Arc<Lattice>) -> Result<f64> {
    let g = gram_matrix(n_max, lattice)?;
    Ok((g - DMatrix::identity(n_max + 1, n_max + 1))
        .iter()
        .map(|v| v.norm())
        .fold(0.0, f64::max))
}

fn prefactor(q: f64) -> f64 {
    (1.0 - q).sqrt().recip()
}

/// Lowering operator in the branch coordinate:
/// `(bf)(x) = (1-q)^{-1/2} [√μ f(x) - √((1-qx)(μ/q + x)) f(qx)] / x`.
pub fn apply_b(f: &GridFunction) -> GridFunction {
    let lat = f.lattice();
    let (q, mu) = (lat.q(), lat.mu());
    let n = lat.branch_len();
    let valid = f.valid_depth().saturating_sub(1);
    let c = prefactor(q);
    let fv = f.values();
    let values = (0..lat.len())
        .map(|i| {
            if i % n >= valid {
                return C64::new(0.0, 0.0);
            }
            let x = lat.values()[i];
            let hop = ((1.0 - q * x) * (mu / q + x)).max(0.0).sqrt();
            (fv[i] * mu.sqrt() - fv[i + 1] * hop) * (c / x)
        })
        .collect();
    GridFunction::with_valid(lat.clone(), values, valid)
}

/// Raising operator in the branch coordinate:
/// `(b⁺f)(x) = (1-q)^{-1/2} [√μ f(x) - √q √((1-x)(μ+x)) f(x/q)] / x`.
///
/// The hop coefficient vanishes at `x = 1` and `x = -μ`, so the top row of
/// each branch never reads outside the lattice.
pub fn apply_bdag(f: &GridFunction) -> GridFunction {
    let lat = f.lattice();
    let (q, mu) = (lat.q(), lat.mu());
    let n = lat.branch_len();
    let valid = f.valid_depth();
    let c = prefactor(q);
    let fv = f.values();
    let values = (0..lat.len())
        .map(|i| {
            let k = i % n;
            if k >= valid {
                return C64::new(0.0, 0.0);
            }
            let x = lat.values()[i];
            let mut v = fv[i] * mu.sqrt();
            if k > 0 {
                let hop = q.sqrt() * ((1.0 - x) * (mu + x)).max(0.0).sqrt();
                v -= fv[i - 1] * hop;
            }
            v * (c / x)
        })
        .collect();
    GridFunction::with_valid(lat.clone(), values, valid)
}

/// The q-Hamiltonian as a second-order difference operator,
///
/// ```text
/// (Hf)(x) = (1-q)^{-1} x^{-2} [ (μ + q(1-x)(μ+x)) f(x)
///            - √μ √((1-qx)(μ/q + x)) f(qx)
///            - √μ q² √((1-x)(μ/q + x/q)) f(x/q) ].
/// ```
pub fn hamiltonian(f: &GridFunction) -> GridFunction {
    let lat = f.lattice();
    let (q, mu) = (lat.q(), lat.mu());
    let n = lat.branch_len();
    let valid = f.valid_depth().saturating_sub(1);
    let c = 1.0 / (1.0 - q);
    let sm = mu.sqrt();
    let fv = f.values();
    let values = (0..lat.len())
        .map(|i| {
            let k = i % n;
            if k >= valid {
                return C64::new(0.0, 0.0);
            }
            let x = lat.values()[i];
            let diag = mu + q * (1.0 - x) * (mu + x);
            let up = sm * ((1.0 - q * x) * (mu / q + x)).max(0.0).sqrt();
            let mut v = fv[i] * diag - fv[i + 1] * up;
            if k > 0 {
                let down = sm * q * q * ((1.0 - x) * (mu / q + x / q)).max(0.0).sqrt();
                v -= fv[i - 1] * down;
            }
            v * (c / (x * x))
        })
        .collect();
    GridFunction::with_valid(lat.clone(), values, valid)
}

/// `‖bψ_n - ẽ_n^{1/2} ψ_{n-1}‖`, row by row on [`pointwise_lattice`].
pub fn lowering_residual(n: usize, params: QParams) -> Result<f64> {
    let lat = Arc::new(pointwise_lattice(params));
    let psi = wavefunctions(n, &lat)?;
    let bpsi = apply_b(&psi[n]);
    let expected = if n == 0 {
        GridFunction::zeros(lat)
    } else {
        psi[n - 1].scale(C64::new(eigenvalue(n, params.q()).sqrt(), 0.0))
    };
    Ok(bpsi.sub(&expected)?.norm())
}

/// `‖b⁺ψ_n - ẽ_{n+1}^{1/2} ψ_{n+1}‖ / max(1, ẽ_{n+1}^{1/2})`.
pub fn raising_residual(n: usize, params: QParams) -> Result<f64> {
    let lat = Arc::new(pointwise_lattice(params));
    let psi = wavefunctions(n + 1, &lat)?;
    let root = eigenvalue(n + 1, params.q()).sqrt();
    let diff = apply_bdag(&psi[n]).sub(&psi[n + 1].scale(C64::new(root, 0.0)))?;
    Ok(diff.norm() / root.max(1.0))
}

/// `‖Hψ_n - ẽ_n ψ_n‖ / max(1, ẽ_n)`.
pub fn hamiltonian_residual(n: usize, params: QParams) -> Result<f64> {
    let lat = Arc::new(pointwise_lattice(params));
    let psi = wavefunction(n, &lat)?;
    let e = eigenvalue(n, params.q());
    let diff = hamiltonian(&psi).sub(&psi.scale(C64::new(e, 0.0)))?;
    Ok(diff.norm() / e.max(1.0))
}

/// Uniform complex samples in the unit square.
pub(crate) fn random_coefficients(rng: &mut ChaCha8Rng, len: usize) -> Vec<C64> {
    (0..len)
        .map(|_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
        .collect()
}

/// Largest `‖Hf - b⁺bf‖_∞ / ‖Hf‖_∞` over `count` random grid functions.
pub fn factorization_residual(params: QParams, count: usize, seed: u64) -> Result<f64> {
    let lat = Arc::new(pointwise_lattice(params));
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..count {
        let f = GridFunction::new(lat.clone(), random_coefficients(&mut rng, lat.len()))?;
        let h = hamiltonian(&f);
        let bb = apply_bdag(&apply_b(&f));
        worst = worst.max(h.sub(&bb)?.max_abs() / h.max_abs());
    }
    Ok(worst)
}

/// Largest `|⟨b⁺f, g⟩ - ⟨f, bg⟩|` over the basis pairs `(ψ_i, ψ_j)` and
/// `count` random pairs of normalised combinations of `ψ_0..=ψ_{n_max}`.
pub fn adjointness_residual(n_max: usize, params: QParams, count: usize, seed: u64) -> Result<f64> {
    let lat = Arc::new(Lattice::auto(params));
    let psi = wavefunctions(n_max, &lat)?;
    let raised: Vec<GridFunction> = psi.iter().map(apply_bdag).collect();
    let lowered: Vec<GridFunction> = psi.iter().map(apply_b).collect();
    let mut worst: f64 = 0.0;
    for i in 0..=n_max {
        for j in 0..=n_max {
            let lhs = inner_product(&raised[i], &psi[j])?;
            let rhs = inner_product(&psi[i], &lowered[j])?;
            worst = worst.max((lhs - rhs).norm());
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let draw = |rng: &mut ChaCha8Rng| -> Result<GridFunction> {
        let mut c = random_coefficients(rng, n_max + 1);
        let norm = c.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
        c.iter_mut().for_each(|v| *v /= norm);
        GridFunction::linear_combination(&c, &psi)
    };
    for _ in 0..count {
        let f = draw(&mut rng)?;
        let g = draw(&mut rng)?;
        let lhs = inner_product(&apply_bdag(&f), &g)?;
        let rhs = inner_product(&f, &apply_b(&g))?;
        worst = worst.max((lhs - rhs).norm());
    }
    Ok(worst)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Basis {
    /// Galerkin matrices `⟨ψ_m, A ψ_n⟩` of the grid operators.
    Grid,
    /// The exact action on `ψ_n`.
    Number,
}

/// Matrix of an operator in the `ψ_n` basis, `entries[(m, n)] = ⟨ψ_m, Aψ_n⟩`.
///
/// With this convention `b` has its band on the superdiagonal,
/// `⟨ψ_{n-1}, bψ_n⟩ = ẽ_n^{1/2}`, and `b⁺` on the subdiagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct OperatorMatrix {
    pub basis: Basis,
    pub entries: DMatrix<C64>,
}

impl OperatorMatrix {
    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    /// Number-basis lowering operator on `ψ_0..ψ_{dim-1}`.
    pub fn number_b(dim: usize, q: f64) -> Self {
        let entries = DMatrix::from_fn(dim, dim, |m, n| {
            if n == m + 1 {
                C64::new(eigenvalue(n, q).sqrt(), 0.0)
            } else {
                C64::new(0.0, 0.0)
            }
        });
        OperatorMatrix {
            basis: Basis::Number,
            entries,
        }
    }

    pub fn number_bdag(dim: usize, q: f64) -> Self {
        let b = Self::number_b(dim, q);
        OperatorMatrix {
            basis: Basis::Number,
            entries: b.entries.adjoint(),
        }
    }

    /// `⟨ψ_m, op(ψ_n)⟩` over the given basis.
    pub fn galerkin<F>(op: F, basis: &[GridFunction]) -> Result<Self>
    where
        F: Fn(&GridFunction) -> GridFunction + Sync,
    {
        let dim = basis.len();
        let images: Vec<GridFunction> = basis.par_iter().map(&op).collect();
        let mut entries = DMatrix::zeros(dim, dim);
        for (n, img) in images.iter().enumerate() {
            for (m, psi) in basis.iter().enumerate() {
                entries[(m, n)] = inner_product(psi, img)?;
            }
        }
        Ok(OperatorMatrix {
            basis: Basis::Grid,
            entries,
        })
    }
}

/// Spectral norm of `B B⁺ - q^{-1} B⁺ B - I` on the leading
/// `(n_max+1)×(n_max+1)` block.
///
/// The matrices are built one level larger than the block so that the
/// products see every intermediate state `ψ_{n_max+1}`.
pub fn commutator_residual(basis: Basis, n_max: usize, params: QParams) -> Result<f64> {
    let q = params.q();
    let dim = n_max + 2;
    let (b, bd) = match basis {
        Basis::Number => (
            OperatorMatrix::number_b(dim, q),
            OperatorMatrix::number_bdag(dim, q),
        ),
        Basis::Grid => {
            let lat = Arc::new(Lattice::auto(params));
            let psi = wavefunctions(n_max + 1, &lat)?;
            (
                OperatorMatrix::galerkin(apply_b, &psi)?,
                OperatorMatrix::galerkin(apply_bdag, &psi)?,
            )
        }
    };
    let full = &b.entries * &bd.entries - (&bd.entries * &b.entries) * C64::new(1.0 / q, 0.0);
    let block = full.view((0, 0), (n_max + 1, n_max + 1)).into_owned()
        - DMatrix::<C64>::identity(n_max + 1, n_max + 1);
    Ok(block.singular_values().max())
}
