use std::sync::Arc;

use num_complex::Complex64 as C64;

use crate::error::{QoscError, Result};
use crate::qseries::{Lattice, LatticePoint};

/// Complex samples over a two-branch lattice.
///
/// Difference operators read the neighbour `k + 1`, which does not exist on
/// the last row of a truncated lattice. Instead of inventing a value there,
/// each function records how many leading rows per branch are exact
/// (`valid_depth`); rows past it hold zero and are skipped by
/// [`inner_product`].
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    lattice: Arc<Lattice>,
    values: Vec<C64>,
    valid: usize,
}

impl GridFunction {
    pub fn new(lattice: Arc<Lattice>, values: Vec<C64>) -> Result<Self> {
        if values.len() != lattice.len() {
            return Err(QoscError::LatticeMismatch);
        }
        let valid = lattice.branch_len();
        Ok(GridFunction {
            lattice,
            values,
            valid,
        })
    }

    pub fn zeros(lattice: Arc<Lattice>) -> Self {
        let values = vec![C64::new(0.0, 0.0); lattice.len()];
        let valid = lattice.branch_len();
        GridFunction {
            lattice,
            values,
            valid,
        }
    }

    pub fn from_fn<F>(lattice: Arc<Lattice>, f: F) -> Self
    where
        F: Fn(LatticePoint, f64) -> C64,
    {
        let values = lattice
            .points()
            .iter()
            .zip(lattice.values())
            .map(|(&p, &x)| f(p, x))
            .collect();
        let valid = lattice.branch_len();
        GridFunction {
            lattice,
            values,
            valid,
        }
    }

    /// Builds a function whose rows with `k >= valid` are forced to zero.
    pub(crate) fn with_valid(lattice: Arc<Lattice>, mut values: Vec<C64>, valid: usize) -> Self {
        let n = lattice.branch_len();
        let valid = valid.min(n);
        for (i, v) in values.iter_mut().enumerate() {
            if i % n >= valid {
                *v = C64::new(0.0, 0.0);
            }
        }
        GridFunction {
            lattice,
            values,
            valid,
        }
    }

    pub fn lattice(&self) -> &Arc<Lattice> {
        &self.lattice
    }

    pub fn values(&self) -> &[C64] {
        &self.values
    }

    /// Number of exact leading rows on each branch.
    pub fn valid_depth(&self) -> usize {
        self.valid
    }

    pub fn at(&self, p: LatticePoint) -> Option<C64> {
        self.lattice.index_of(p).map(|i| self.values[i])
    }

    pub fn scale(&self, c: C64) -> Self {
        GridFunction {
            lattice: self.lattice.clone(),
            values: self.values.iter().map(|&v| v * c).collect(),
            valid: self.valid,
        }
    }

    /// `a·self + b·other`.
    pub fn combine(&self, a: C64, other: &GridFunction, b: C64) -> Result<Self> {
        same_lattice(self, other)?;
        let valid = self.valid.min(other.valid);
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(&f, &g)| a * f + b * g)
            .collect();
        Ok(Self::with_valid(self.lattice.clone(), values, valid))
    }

    pub fn sub(&self, other: &GridFunction) -> Result<Self> {
        self.combine(C64::new(1.0, 0.0), other, C64::new(-1.0, 0.0))
    }

    /// `Σ c_i f_i`.
    pub fn linear_combination(coeffs: &[C64], basis: &[GridFunction]) -> Result<Self> {
        let first = basis
            .first()
            .ok_or_else(|| QoscError::InvalidParams("empty basis for linear combination".into()))?;
        if coeffs.len() != basis.len() {
            return Err(QoscError::InvalidParams(
                "coefficient and basis lengths differ".into(),
            ));
        }
        let mut out = GridFunction::zeros(first.lattice.clone());
        for (&c, f) in coeffs.iter().zip(basis) {
            out = out.combine(C64::new(1.0, 0.0), f, c)?;
        }
        Ok(out)
    }

    /// `‖f‖ = ⟨f,f⟩^{1/2}`.
    pub fn norm(&self) -> f64 {
        inner_product(self, self)
            .map(|v| v.re.max(0.0).sqrt())
            .unwrap_or(f64::NAN)
    }

    /// Largest modulus over the valid rows.
    pub fn max_abs(&self) -> f64 {
        let n = self.lattice.branch_len();
        self.values
            .iter()
            .enumerate()
            .filter(|(i, _)| i % n < self.valid)
            .map(|(_, v)| v.norm())
            .fold(0.0, f64::max)
    }
}

fn same_lattice(f: &GridFunction, g: &GridFunction) -> Result<()> {
    if Arc::ptr_eq(&f.lattice, &g.lattice) || f.lattice == g.lattice {
        Ok(())
    } else {
        Err(QoscError::LatticeMismatch)
    }
}

/// `(1-q)^{-1} Σ_p q_mass(p) |x_p|^{-1} conj(f_p) g_p` over the rows valid
/// for both arguments.
///
/// The point weight `q_mass/((1-q)|x|)` equals one on both branches, so this
/// is the plain Euclidean product of the samples.
pub fn inner_product(f: &GridFunction, g: &GridFunction) -> Result<C64> {
    same_lattice(f, g)?;
    let lat = &f.lattice;
    let n = lat.branch_len();
    let valid = f.valid.min(g.valid);
    let scale = 1.0 / (1.0 - lat.q());
    let sum = (0..lat.len())
        .filter(|i| i % n < valid)
        .map(|i| {
            let w = scale * lat.q_masses()[i] / lat.values()[i].abs();
            f.values[i].conj() * g.values[i] * w
        })
        .sum();
    Ok(sum)
}
