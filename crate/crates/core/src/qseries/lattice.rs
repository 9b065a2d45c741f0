use num_complex::Complex64 as C64;

use super::QParams;
use crate::error::{QoscError, Result};

/// Hard cap on the per-branch truncation index.
pub const K_MAX: usize = 4096;

/// Extra levels added on top of the geometric tail estimate.
const DEPTH_MARGIN: usize = 10;

/// Relative tolerance used to recognise a real number as a lattice value.
const LOCATE_RTOL: f64 = 1e-13;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Branch {
    /// `x = q^k`
    Pos,
    /// `x = -μ q^k`
    Neg,
}

impl Branch {
    pub fn label(self) -> &'static str {
        match self {
            Branch::Pos => "pos",
            Branch::Neg => "neg",
        }
    }
}

/// A support point of the two-branch measure.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct LatticePoint {
    pub branch: Branch,
    pub k: usize,
}

impl LatticePoint {
    pub fn pos(k: usize) -> Self {
        LatticePoint {
            branch: Branch::Pos,
            k,
        }
    }

    pub fn neg(k: usize) -> Self {
        LatticePoint {
            branch: Branch::Neg,
            k,
        }
    }

    /// `q^k` or `-μ q^k`.
    pub fn value(self, q: f64, mu: f64) -> f64 {
        let qk = q.powi(self.k as i32);
        match self.branch {
            Branch::Pos => qk,
            Branch::Neg => -mu * qk,
        }
    }

    /// Jackson weight `(1-q) q^k` or `(1-q) μ q^k`.
    pub fn q_mass(self, q: f64, mu: f64) -> f64 {
        (1.0 - q) * self.value(q, mu).abs()
    }

    /// Recognises `x` as a point of the `(q, μ)` lattice.
    pub fn locate(x: f64, q: f64, mu: f64) -> Option<Self> {
        let (branch, scaled) = if x > 0.0 {
            (Branch::Pos, x)
        } else if x < 0.0 {
            (Branch::Neg, -x / mu)
        } else {
            return None;
        };
        let k = (scaled.ln() / q.ln()).round();
        if !(0.0..=K_MAX as f64).contains(&k) {
            return None;
        }
        let p = LatticePoint {
            branch,
            k: k as usize,
        };
        let v = p.value(q, mu);
        ((v - x).abs() <= LOCATE_RTOL * x.abs()).then_some(p)
    }
}

/// Truncated two-branch lattice `{q^k} ∪ {-μ q^k}`, `k = 0..=K`, with the
/// Jackson masses of `∫_{-μ}^{1} f d_q x`.
///
/// Points are ordered with the positive branch first.
#[derive(Debug, Clone, PartialEq)]
pub struct Lattice {
    params: QParams,
    k_max: usize,
    points: Vec<LatticePoint>,
    values: Vec<f64>,
    q_mass: Vec<f64>,
}

impl Lattice {
    /// Quadrature truncation: the dropped geometric mass stays below `tol`.
    pub fn auto(params: QParams) -> Self {
        let depth = Self::quadrature_depth(params.q(), params.tol());
        Self::build(params, depth)
    }

    /// Truncation for sums of grid functions against kernels, where the
    /// integrand tail decays like `q^{k/2}` rather than `q^k`.
    pub fn for_grid_functions(params: QParams) -> Self {
        let depth = Self::grid_depth(params.q(), params.tol());
        Self::build(params, depth)
    }

    pub fn with_depth(params: QParams, k_max: usize) -> Result<Self> {
        if k_max > K_MAX {
            return Err(QoscError::InvalidParams(format!(
                "K must not exceed {K_MAX}"
            )));
        }
        Ok(Self::build(params, k_max))
    }

    /// `ceil(log(tol (1-q)) / log q) + 10`, capped at [`K_MAX`].
    pub fn quadrature_depth(q: f64, tol: f64) -> usize {
        let raw = ((tol * (1.0 - q)).ln() / q.ln()).ceil().max(0.0) as usize;
        (raw + DEPTH_MARGIN).min(K_MAX)
    }

    /// Depth at which `Σ_{k>K} q^{k/2} < tol`.
    pub fn grid_depth(q: f64, tol: f64) -> usize {
        let sq = q.sqrt();
        let raw = (2.0 * (tol * (1.0 - sq)).ln() / q.ln()).ceil().max(0.0) as usize;
        (raw + DEPTH_MARGIN).min(K_MAX)
    }

    fn build(params: QParams, k_max: usize) -> Self {
        let (q, mu) = (params.q(), params.mu());
        let points: Vec<LatticePoint> = (0..=k_max)
            .map(LatticePoint::pos)
            .chain((0..=k_max).map(LatticePoint::neg))
            .collect();
        let values = points.iter().map(|p| p.value(q, mu)).collect();
        let q_mass = points.iter().map(|p| p.q_mass(q, mu)).collect();
        Lattice {
            params,
            k_max,
            points,
            values,
            q_mass,
        }
    }

    pub fn params(&self) -> &QParams {
        &self.params
    }

    pub fn q(&self) -> f64 {
        self.params.q()
    }

    pub fn mu(&self) -> f64 {
        self.params.mu()
    }

    pub fn k_max(&self) -> usize {
        self.k_max
    }

    /// Points per branch.
    pub fn branch_len(&self) -> usize {
        self.k_max + 1
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[LatticePoint] {
        &self.points
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn q_masses(&self) -> &[f64] {
        &self.q_mass
    }

    pub fn index_of(&self, p: LatticePoint) -> Option<usize> {
        if p.k > self.k_max {
            return None;
        }
        Some(match p.branch {
            Branch::Pos => p.k,
            Branch::Neg => self.branch_len() + p.k,
        })
    }

    /// Weighted sum `Σ_p q_mass(p) g_p` over samples ordered like the lattice.
    pub fn integrate(&self, samples: &[C64]) -> Result<C64> {
        if samples.len() != self.len() {
            return Err(QoscError::LatticeMismatch);
        }
        let sum: C64 = samples.iter().zip(&self.q_mass).map(|(&g, &m)| g * m).sum();
        if self.k_max == K_MAX {
            let last = [self.k_max, self.branch_len() + self.k_max]
                .iter()
                .map(|&i| (samples[i] * self.q_mass[i]).norm())
                .fold(0.0, f64::max);
            if last > self.params.tol() * sum.norm() {
                return Err(QoscError::TruncationTooCoarse {
                    k_max: self.k_max,
                    last_term: last,
                });
            }
        }
        Ok(sum)
    }
}

/// `∫_{-μ}^{1} f d_q x = (1-q) Σ_k q^k [f(q^k) + μ f(-μ q^k)]` on the
/// truncated lattice.
pub fn jackson_integral<F>(f: F, lattice: &Lattice) -> Result<C64>
where
    F: Fn(f64) -> C64,
{
    let samples: Vec<C64> = lattice.values().iter().map(|&x| f(x)).collect();
    lattice.integrate(&samples)
}
