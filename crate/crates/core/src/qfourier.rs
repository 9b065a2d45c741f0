//! The kernel `K_t(x,y) = Σ tⁿ ψ_n(x) ψ_n(y)` and the transform it defines.
//!
//! At `t = i` the transform has eigenfunctions `ψ_m` with eigenvalues `iᵐ`,
//! a discrete analogue of the Fourier transform.

use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use rayon::prelude::*;

use crate::asc::{asc_sequence, norm_sq, orthonormal_lattice_sequence, WeightSpec};
use crate::error::{QoscError, Result};
use crate::oscillator::{inner_product, wavefunctions, GridFunction};
use crate::qseries::{basic_hyp, pinf, qpochhammer_finite, Branch, Lattice, LatticePoint, QParams};

fn re(x: f64) -> C64 {
    C64::new(x, 0.0)
}

/// Truncated `Σ_{n ≤ n_max} tⁿ ψ_n(x) ψ_n(y)` and the modulus of its last term.
pub fn kernel_series(t: C64, x: f64, y: f64, params: &QParams, n_max: usize) -> (C64, f64) {
    let spec = WeightSpec::new(params);
    let pre = (spec.eval(x) * spec.eval(y) * (x * y).abs()).sqrt();
    let px = orthonormal_sequence(n_max, x, params);
    let py = orthonormal_sequence(n_max, y, params);
    let mut sum = re(0.0);
    let mut last = 0.0;
    let mut tn = re(1.0);
    for n in 0..=n_max {
        let term = tn * (px[n] * py[n] * pre);
        sum += term;
        last = term.norm();
        tn *= t;
    }
    (sum, last)
}

/// `u_n(x)/d_n`, through the overflow-free lattice recurrence when `x` is a
/// lattice value.
fn orthonormal_sequence(n_max: usize, x: f64, params: &QParams) -> Vec<f64> {
    let (q, mu) = (params.q(), params.mu());
    match LatticePoint::locate(x, q, mu) {
        Some(p) => orthonormal_lattice_sequence(n_max, p, params),
        None => asc_sequence(n_max, re(x), params)
            .iter()
            .enumerate()
            .map(|(n, u)| u.re / norm_sq(n, q, mu).sqrt())
            .collect(),
    }
}

/// Per-kernel constants shared by every matrix entry.
#[derive(Debug, Clone, Copy)]
struct KernelConsts {
    t: C64,
    q: f64,
    mu: f64,
    tol: f64,
    max_terms: usize,
    /// `(t, t, -μt; q)_∞`
    pos: C64,
    /// `(t, t, -t/μ; q)_∞`
    neg: C64,
}

impl KernelConsts {
    fn new(t: C64, params: &QParams) -> Self {
        let (q, mu) = (params.q(), params.mu());
        let tt = pinf(t, q) * pinf(t, q);
        KernelConsts {
            t,
            q,
            mu,
            tol: params.tol().min(1e-15),
            max_terms: params.max_terms(),
            pos: tt * pinf(-mu * t, q),
            neg: tt * pinf(-t / mu, q),
        }
    }

    /// Product-and-₃φ₂ part of the kernel, without the `(ρ̃ρ̃|xy|)^{1/2}` factor.
    fn core(&self, bx: Branch, x: f64, y: f64) -> Result<C64> {
        let (t, q, mu) = (self.t, self.q, self.mu);
        match bx {
            Branch::Pos => {
                let s = basic_hyp(
                    &[re(1.0 / x), re(1.0 / y), -q / (mu * t)],
                    &[q / (t * x), q / (t * y)],
                    q,
                    re(q),
                    self.tol,
                    self.max_terms,
                )?;
                Ok(self.pos / (pinf(t * x, q) * pinf(t * y, q)) * s.value)
            }
            Branch::Neg => {
                let s = basic_hyp(
                    &[re(-mu / x), re(-mu / y), -q * mu / t],
                    &[-q * mu / (t * x), -q * mu / (t * y)],
                    q,
                    re(q),
                    self.tol,
                    self.max_terms,
                )?;
                Ok(self.neg / (pinf(-t * x / mu, q) * pinf(-t * y / mu, q)) * s.value)
            }
        }
    }
}

fn branch_of(x: f64, params: &QParams) -> Result<Branch> {
    LatticePoint::locate(x, params.q(), params.mu())
        .map(|p| p.branch)
        .ok_or_else(|| QoscError::InvalidParams(format!("{x} is not a lattice value")))
}

/// Closed form of `K_t(x,y)` at lattice values. The `₃φ₂` terminates through
/// the upper parameter built from `x`; the branch of `x` selects the variant.
pub fn kernel_closed(t: C64, x: f64, y: f64, params: &QParams) -> Result<C64> {
    let spec = WeightSpec::new(params);
    let pre = (spec.eval(x) * spec.eval(y) * (x * y).abs()).sqrt();
    let bx = branch_of(x, params)?;
    branch_of(y, params)?;
    if t == re(0.0) {
        return Ok(re(pre));
    }
    Ok(KernelConsts::new(t, params).core(bx, x, y)? * pre)
}

/// The terminating `₃φ₂` inside `K_t(x,y)`, without any prefactor.
pub fn kernel_hyp_factor(t: C64, x: f64, y: f64, params: &QParams) -> Result<C64> {
    let (q, mu) = (params.q(), params.mu());
    let bx = branch_of(x, params)?;
    branch_of(y, params)?;
    let (upper, lower) = match bx {
        Branch::Pos => (
            [re(1.0 / x), re(1.0 / y), -q / (mu * t)],
            [q / (t * x), q / (t * y)],
        ),
        Branch::Neg => (
            [re(-mu / x), re(-mu / y), -q * mu / t],
            [-q * mu / (t * x), -q * mu / (t * y)],
        ),
    };
    let tol = params.tol().min(1e-15);
    Ok(basic_hyp(&upper, &lower, q, re(q), tol, params.max_terms())?.value)
}

/// Bilinear generating function residual
/// `|Σ u_n^{μ₁}(x) u_n^{μ₂}(y) q^{n(n-1)/2} tⁿ/(q;q)_n - RHS|` with
/// `RHS = (-t, t/μ₁, t/μ₂; q)_∞/(tx/μ₁, ty/μ₂; q)_∞ ·
/// ₃φ₂(1/x, 1/y, -q/t; qμ₁/(tx), qμ₂/(ty); q, q)`.
pub fn bilinear_gf_residual(
    t: C64,
    x: f64,
    y: f64,
    mu1: f64,
    mu2: f64,
    q: f64,
    n_max: usize,
) -> Result<f64> {
    let reach = (t / mu1).norm().max((t / mu2).norm());
    if reach >= 1.0 {
        return Err(QoscError::OutsideConvergenceRegion(format!(
            "max(|t/μ₁|, |t/μ₂|) = {reach} must be below 1"
        )));
    }
    let p1 = QParams::new(q, mu1)?;
    let p2 = QParams::new(q, mu2)?;
    let ux = asc_sequence(n_max, re(x), &p1);
    let uy = asc_sequence(n_max, re(y), &p2);
    let lhs: C64 = (0..=n_max)
        .map(|n| {
            let tri = (n * n.saturating_sub(1) / 2) as f64;
            ux[n] * uy[n] * t.powi(n as i32) * q.powf(tri) / qpochhammer_finite(re(q), q, n)
        })
        .sum();
    if t == re(0.0) {
        return Ok((lhs - 1.0).norm());
    }
    let phi = basic_hyp(
        &[re(1.0 / x), re(1.0 / y), -q / t],
        &[q * mu1 / (t * x), q * mu2 / (t * y)],
        q,
        re(q),
        p1.tol().min(1e-15),
        p1.max_terms(),
    )?;
    let rhs = pinf(-t, q) * pinf(t / mu1, q) * pinf(t / mu2, q)
        / (pinf(t * x / mu1, q) * pinf(t * y / mu2, q))
        * phi.value;
    Ok((lhs - rhs).norm())
}

/// Largest rounding estimate accepted from the closed form of an entry.
pub const CLOSED_FORM_BUDGET: f64 = 1e-13;

/// Degree beyond which `ψ_n` is below `10^{-17}` on every point of a
/// lattice with depth `k_max`. Measured growth is about `2 k_max`.
pub fn series_degree(k_max: usize, q: f64) -> usize {
    2 * k_max + 2 * (100.0 / -q.ln()).sqrt().ceil() as usize + 10
}

/// `Σ_{n ≤ series_degree} tⁿ ψ_n(x) ψ_n(y)` over all lattice pairs, as
/// `Φᵀ diag(tⁿ) Φ` with one column of `Φ` per lattice point.
fn series_entries(t: C64, lattice: &Lattice) -> DMatrix<C64> {
    let params = *lattice.params();
    let spec = WeightSpec::new(&params);
    let n_max = series_degree(lattice.k_max(), params.q());
    let cols: Vec<Vec<f64>> = lattice
        .points()
        .par_iter()
        .zip(lattice.values().par_iter())
        .map(|(p, &x)| {
            let pre = (spec.eval(x) * x.abs()).sqrt();
            orthonormal_lattice_sequence(n_max, *p, &params)
                .into_iter()
                .map(|v| v * pre)
                .collect()
        })
        .collect();
    let phi = DMatrix::from_fn(n_max + 1, cols.len(), |n, p| cols[p][n]);
    let tn: Vec<C64> = std::iter::successors(Some(re(1.0)), |&p| Some(p * t))
        .take(n_max + 1)
        .collect();
    let scaled = |part: fn(&C64) -> f64| {
        let mut m = phi.clone();
        for (n, mut row) in m.row_iter_mut().enumerate() {
            row *= part(&tn[n]);
        }
        phi.transpose() * m
    };
    let (real, imag) = (scaled(|z| z.re), scaled(|z| z.im));
    real.zip_map(&imag, C64::new)
}

/// Per-point factors of the terminating `₃φ₂` in the kernel.
///
/// For the variant selected by a branch, the term ratio of the series
/// splits as `U_x[n] U_y[n] L_x[n] L_y[n] C[n]`, so each factor is computed
/// once per point instead of once per pair.
struct PointFactors {
    /// `1 - qⁿ/x` (positive variant) or `1 + μqⁿ/x` (negative variant)
    upper: Vec<C64>,
    /// reciprocal of `1 - q^{n+1}/(tx)` or `1 + μq^{n+1}/(tx)`
    lower: Vec<C64>,
    /// first `n` whose lower factor vanishes
    pole: Option<usize>,
    /// `(tx; q)_∞` or `(-tx/μ; q)_∞`
    product: C64,
}

impl PointFactors {
    fn new(bx: Branch, x: f64, len: usize, c: &KernelConsts) -> Self {
        let (t, q, mu) = (c.t, c.q, c.mu);
        let mut upper = Vec::with_capacity(len);
        let mut lower = Vec::with_capacity(len);
        let mut pole = None;
        let mut qn = 1.0;
        for n in 0..len {
            let (u, l) = match bx {
                Branch::Pos => (re(1.0 - qn / x), C64::new(1.0, 0.0) - q * qn / (t * x)),
                Branch::Neg => (
                    re(1.0 + mu * qn / x),
                    C64::new(1.0, 0.0) + mu * q * qn / (t * x),
                ),
            };
            upper.push(u);
            if l.norm() <= c.tol && pole.is_none() {
                pole = Some(n);
            }
            lower.push(l.inv());
            qn *= q;
        }
        let product = match bx {
            Branch::Pos => pinf(t * x, q),
            Branch::Neg => pinf(-t * x / mu, q),
        };
        PointFactors {
            upper,
            lower,
            pole,
            product,
        }
    }
}

/// `C[n] = q (1 + q^{n+1}/(μt)) / (1 - q^{n+1})` for the positive variant and
/// `q (1 + μq^{n+1}/t) / (1 - q^{n+1})` for the negative one.
fn common_factors(c: &KernelConsts, depth: usize) -> [Vec<C64>; 2] {
    let (t, q, mu) = (c.t, c.q, c.mu);
    let mut common = [Vec::with_capacity(depth), Vec::with_capacity(depth)];
    let mut qn = 1.0;
    for _ in 0..depth {
        let den = 1.0 - q * qn;
        common[0].push((C64::new(1.0, 0.0) + q * qn / (mu * t)) * (q / den));
        common[1].push((C64::new(1.0, 0.0) + mu * q * qn / t) * (q / den));
        qn *= q;
    }
    common
}

/// Sums the `m + 1` terms of the `₃φ₂` and returns the entry with a rounding
/// estimate built from the largest term.
fn closed_entry(
    fx: &PointFactors,
    fy: &PointFactors,
    cn: &[C64],
    m: usize,
    lead: C64,
) -> Result<(C64, f64)> {
    for (index, pole) in [fx.pole, fy.pole].into_iter().enumerate() {
        if let Some(power) = pole.filter(|&n| n < m) {
            return Err(QoscError::PoleInDenominator { index, power });
        }
    }
    let mut term = re(1.0);
    let mut sum = term;
    let mut largest: f64 = 1.0;
    for (n, c) in cn.iter().enumerate().take(m) {
        term *= fx.upper[n] * fy.upper[n] * fx.lower[n] * fy.lower[n] * c;
        sum += term;
        largest = largest.max(term.l1_norm());
    }
    let factor = lead / (fx.product * fy.product);
    let error = (m as f64 + 1.0) * f64::EPSILON * largest * factor.norm();
    Ok((factor * sum, error))
}

/// `K_t(x,y)` at a pair of lattice values: the closed form when its rounding
/// estimate stays within [`CLOSED_FORM_BUDGET`], the series otherwise.
pub fn kernel_value(t: C64, x: f64, y: f64, params: &QParams) -> Result<C64> {
    let (q, mu) = (params.q(), params.mu());
    let locate = |v: f64| {
        LatticePoint::locate(v, q, mu)
            .ok_or_else(|| QoscError::InvalidParams(format!("{v} is not a lattice value")))
    };
    let (px, py) = (locate(x)?, locate(y)?);
    if t == re(0.0) {
        return kernel_closed(t, x, y, params);
    }
    let spec = WeightSpec::new(params);
    let pre = (spec.eval(x) * spec.eval(y) * (x * y).abs()).sqrt();
    let consts = KernelConsts::new(t, params);
    let depth = px.k.max(py.k) + 1;
    let v = match px.branch {
        Branch::Pos => 0,
        Branch::Neg => 1,
    };
    let fx = PointFactors::new(px.branch, x, depth, &consts);
    let fy = PointFactors::new(px.branch, y, depth, &consts);
    let m = if px.branch == py.branch {
        px.k.min(py.k)
    } else {
        px.k
    };
    let lead = [consts.pos, consts.neg][v] * pre;
    let (value, error) = closed_entry(&fx, &fy, &common_factors(&consts, depth)[v], m, lead)?;
    if error <= CLOSED_FORM_BUDGET {
        return Ok(value);
    }
    Ok(kernel_series(t, x, y, params, series_degree(px.k.max(py.k), q)).0)
}

/// `K_t` over every pair of lattice points.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelMatrix {
    pub t: C64,
    lattice: Arc<Lattice>,
    entries: DMatrix<C64>,
}

impl KernelMatrix {
    /// Assembles the closed form for the pairs `j ≥ i` and mirrors the rest.
    ///
    /// The terminating `₃φ₂` cancels heavily for deep pairs when `q` is near
    /// one. Every entry carries a rounding estimate from its largest term;
    /// entries above [`CLOSED_FORM_BUDGET`] are recomputed from the series
    /// `Σ tⁿ ψ_n(x) ψ_n(y)`, summed to a degree where every `ψ_n` on the
    /// lattice is negligible.
    pub fn assemble(t: C64, lattice: &Arc<Lattice>) -> Result<Self> {
        let params = *lattice.params();
        let spec = WeightSpec::new(&params);
        let xs = lattice.values();
        let pts = lattice.points();
        let pre: Vec<f64> = xs
            .iter()
            .map(|&x| (spec.eval(x) * x.abs()).sqrt())
            .collect();
        let len = xs.len();

        if t == re(0.0) {
            let entries = DMatrix::from_fn(len, len, |i, j| re(pre[i] * pre[j]));
            return Ok(KernelMatrix {
                t,
                lattice: lattice.clone(),
                entries,
            });
        }

        let consts = KernelConsts::new(t, &params);
        let depth = lattice.branch_len();
        let factors: Vec<[PointFactors; 2]> = pts
            .par_iter()
            .zip(xs.par_iter())
            .map(|(_, &x)| {
                [
                    PointFactors::new(Branch::Pos, x, depth, &consts),
                    PointFactors::new(Branch::Neg, x, depth, &consts),
                ]
            })
            .collect();
        let common = common_factors(&consts, depth);

        let rows: Vec<Vec<(C64, f64)>> = (0..len)
            .into_par_iter()
            .map(|i| {
                let bx = pts[i].branch;
                let v = match bx {
                    Branch::Pos => 0,
                    Branch::Neg => 1,
                };
                let (fx, cn) = (&factors[i][v], &common[v]);
                let lead = match bx {
                    Branch::Pos => consts.pos,
                    Branch::Neg => consts.neg,
                };
                (i..len)
                    .map(|j| {
                        let fy = &factors[j][v];
                        let m = if pts[j].branch == bx {
                            pts[i].k.min(pts[j].k)
                        } else {
                            pts[i].k
                        };
                        closed_entry(fx, fy, cn, m, lead * (pre[i] * pre[j]))
                    })
                    .collect::<Result<Vec<(C64, f64)>>>()
            })
            .collect::<Result<Vec<_>>>()?;

        // entries whose terms cancel beyond the budget come from the series
        let mut rows = rows;
        if rows.iter().flatten().any(|&(_, e)| e > CLOSED_FORM_BUDGET) {
            let series = series_entries(t, lattice);
            for (i, row) in rows.iter_mut().enumerate() {
                for (off, entry) in row.iter_mut().enumerate() {
                    if entry.1 > CLOSED_FORM_BUDGET {
                        entry.0 = series[(i, i + off)];
                    }
                }
            }
        }
        let entries = DMatrix::from_fn(len, len, |i, j| {
            if j >= i {
                rows[i][j - i].0
            } else {
                rows[j][i - j].0
            }
        });
        Ok(KernelMatrix {
            t,
            lattice: lattice.clone(),
            entries,
        })
    }

    /// Builds `Σ_{n ≤ n_max} tⁿ ψ_n ψ_nᵀ` from sampled wavefunctions.
    pub fn from_series(t: C64, basis: &[GridFunction]) -> Result<Self> {
        let first = basis
            .first()
            .ok_or_else(|| QoscError::InvalidParams("empty basis".into()))?;
        let lattice = first.lattice().clone();
        let len = lattice.len();
        let mut entries = DMatrix::zeros(len, len);
        let mut tn = re(1.0);
        for psi in basis {
            let v = nalgebra::DVector::from_column_slice(psi.values());
            entries += (&v * v.transpose()) * tn;
            tn *= t;
        }
        Ok(KernelMatrix {
            t,
            lattice,
            entries,
        })
    }

    pub fn lattice(&self) -> &Arc<Lattice> {
        &self.lattice
    }

    pub fn entries(&self) -> &DMatrix<C64> {
        &self.entries
    }

    /// `max |K(x,y) - K(y,x)|`.
    pub fn asymmetry(&self) -> f64 {
        (&self.entries - self.entries.transpose())
            .iter()
            .map(|v| v.norm())
            .fold(0.0, f64::max)
    }

    /// Row weights `(1-q)^{-1} q_mass(p) |x_p|^{-1}`.
    fn weights(&self) -> Vec<f64> {
        let lat = &self.lattice;
        lat.q_masses()
            .iter()
            .zip(lat.values())
            .map(|(m, x)| m / ((1.0 - lat.q()) * x.abs()))
            .collect()
    }

    /// `g(x) = (1-q)^{-1} Σ_p q_mass(p) |y_p|^{-1} K_t(x, y_p) f(p)`.
    pub fn apply(&self, f: &GridFunction) -> Result<GridFunction> {
        if !(Arc::ptr_eq(f.lattice(), &self.lattice) || **f.lattice() == *self.lattice) {
            return Err(QoscError::LatticeMismatch);
        }
        let n = self.lattice.branch_len();
        let valid = f.valid_depth();
        let w = self.weights();
        let fw = nalgebra::DVector::from_iterator(
            f.values().len(),
            f.values()
                .iter()
                .enumerate()
                .map(|(i, &v)| if i % n < valid { v * w[i] } else { re(0.0) }),
        );
        let g = &self.entries * fw;
        GridFunction::new(self.lattice.clone(), g.iter().copied().collect())
    }
}

/// Assembles `K_t` on `f`'s lattice and applies it.
pub fn transform(t: C64, f: &GridFunction) -> Result<GridFunction> {
    KernelMatrix::assemble(t, f.lattice())?.apply(f)
}

/// `max_m ‖K_t ψ_m - tᵐ ψ_m‖ / max(1, |t|ᵐ)` for `m ≤ m_max`.
pub fn eigenfunction_residual(kernel: &KernelMatrix, m_max: usize) -> Result<f64> {
    let psi = wavefunctions(m_max, kernel.lattice())?;
    let t = kernel.t;
    let mut worst: f64 = 0.0;
    for (m, p) in psi.iter().enumerate() {
        let tm = t.powi(m as i32);
        let r = kernel.apply(p)?.sub(&p.scale(tm))?.norm() / tm.norm().max(1.0);
        worst = worst.max(r);
    }
    Ok(worst)
}

/// `max_{m,n ≤ m_max} |⟨K ψ_m, K ψ_n⟩ - δ_{mn}|`.
pub fn isometry_residual(kernel: &KernelMatrix, m_max: usize) -> Result<f64> {
    let psi = wavefunctions(m_max, kernel.lattice())?;
    let images = psi
        .iter()
        .map(|p| kernel.apply(p))
        .collect::<Result<Vec<_>>>()?;
    let mut worst: f64 = 0.0;
    for (m, a) in images.iter().enumerate() {
        for (n, b) in images.iter().enumerate() {
            let d = if m == n { 1.0 } else { 0.0 };
            worst = worst.max((inner_product(a, b)? - d).norm());
        }
    }
    Ok(worst)
}

/// `‖K⁴ψ_m - t⁴ᵐψ_m‖`: four applications of the transform.
pub fn fourth_power_residual(kernel: &KernelMatrix, m: usize) -> Result<f64> {
    let psi = crate::oscillator::wavefunction(m, kernel.lattice())?;
    let mut f = psi.clone();
    for _ in 0..4 {
        f = kernel.apply(&f)?;
    }
    let want = psi.scale(kernel.t.powi(4 * m as i32));
    Ok(f.sub(&want)?.norm())
}

/// `A diag(w) B` through real matrix products, which take the blocked path.
fn weighted_product(a: &DMatrix<C64>, w: &[f64], b: &DMatrix<C64>) -> DMatrix<C64> {
    let (ar, ai) = (a.map(|z| z.re), a.map(|z| z.im));
    let scale = |m: DMatrix<f64>| {
        let mut m = m;
        for (r, mut row) in m.row_iter_mut().enumerate() {
            row *= w[r];
        }
        m
    };
    let (br, bi) = (scale(b.map(|z| z.re)), scale(b.map(|z| z.im)));
    let real = &ar * &br - &ai * &bi;
    let imag = &ar * &bi + &ai * &br;
    real.zip_map(&imag, C64::new)
}

/// Highest degree used when the semigroup law is checked on the basis.
pub const SEMIGROUP_BASIS_DEGREE: usize = 10;

/// Semigroup law `∫ K_t(x,y) K_{t'}(y,x') w(y) = K_{tt'}(x,x')`.
///
/// Returns the largest entry of `K_t W K_{t'} - K_{tt'}`, restricted to
/// points with `k ≤ K/2` when `|t| = |t'| = 1` as in
/// [`unitarity_residual`]. When the closed form of `K_{tt'}` is singular on the lattice (for instance `tt' = -1`
/// with `μ ∈ q^{-ℕ}`, where `K_{-1}` is a reflection and the `₃φ₂` meets a
/// pole on the anti-diagonal), the law is checked on the basis instead:
/// `max |⟨ψ_m, K_t K_{t'} ψ_n⟩ - (tt')ⁿ δ_{mn}|` for `m, n ≤ 10`.
pub fn semigroup_residual(t: C64, t_prime: C64, lattice: &Arc<Lattice>) -> Result<f64> {
    semigroup_residual_cached(t, t_prime, &mut KernelCache::new(lattice.clone()))
}

/// [`semigroup_residual`] drawing the kernels from `cache`.
pub fn semigroup_residual_cached(t: C64, t_prime: C64, cache: &mut KernelCache) -> Result<f64> {
    let lattice = cache.lattice().clone();
    let lattice = &lattice;
    let a = cache.get(t)?;
    let b = cache.get(t_prime)?;
    match cache.get(t * t_prime) {
        Ok(c) => {
            let prod = weighted_product(&a.entries, &a.weights(), &b.entries);
            // two unimodular kernels spread every row over the whole
            // lattice, so rows near the truncation depth lose their tails
            let unimodular = |z: C64| (z.norm() - 1.0).abs() < 1e-14;
            let keep = if unimodular(t) && unimodular(t_prime) {
                lattice.k_max() / 2
            } else {
                lattice.k_max()
            };
            let rows: Vec<usize> = (0..lattice.len())
                .filter(|&i| lattice.points()[i].k <= keep)
                .collect();
            let mut worst: f64 = 0.0;
            for &j in &rows {
                for &i in &rows {
                    worst = worst.max((prod[(i, j)] - c.entries[(i, j)]).norm());
                }
            }
            Ok(worst)
        }
        Err(QoscError::PoleInDenominator { .. }) => {
            let psi = wavefunctions(SEMIGROUP_BASIS_DEGREE, lattice)?;
            let tt = t * t_prime;
            let mut worst: f64 = 0.0;
            for (n, pn) in psi.iter().enumerate() {
                let img = a.apply(&b.apply(pn)?)?;
                for (m, pm) in psi.iter().enumerate() {
                    let want = if m == n { tt.powi(n as i32) } else { re(0.0) };
                    worst = worst.max((inner_product(pm, &img)? - want).norm());
                }
            }
            Ok(worst)
        }
        Err(e) => Err(e),
    }
}

/// Largest entry of `K_i W K_i^† - I` over points with `k ≤ K/2`.
pub fn unitarity_residual(lattice: &Arc<Lattice>) -> Result<f64> {
    unitarity_residual_of(&KernelMatrix::assemble(C64::new(0.0, 1.0), lattice)?)
}

/// Largest entry of `K_t W K_t^† - I` over points with `k ≤ K/2`, for `|t| = 1`.
///
/// With unit point weights the discrete delta is the identity. Rows near
/// the truncation depth miss the part of `K_t(x,·)` beyond the lattice, so
/// only the upper half of each branch is compared.
pub fn unitarity_residual_of(k: &KernelMatrix) -> Result<f64> {
    if (k.t.norm() - 1.0).abs() > 1e-14 {
        return Err(QoscError::InvalidParams(format!(
            "unitarity needs |t| = 1, got |t| = {}",
            k.t.norm()
        )));
    }
    let lattice = k.lattice();
    let u = weighted_product(&k.entries, &k.weights(), &k.entries.adjoint());
    let half = lattice.k_max() / 2;
    let keep: Vec<usize> = lattice
        .points()
        .iter()
        .enumerate()
        .filter(|(_, p)| p.k <= half)
        .map(|(i, _)| i)
        .collect();
    let mut worst: f64 = 0.0;
    for &i in &keep {
        for &j in &keep {
            let d = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((u[(i, j)] - d).norm());
        }
    }
    Ok(worst)
}

/// Kernel matrices on one lattice, each assembled once.
#[derive(Debug)]
pub struct KernelCache {
    lattice: Arc<Lattice>,
    kernels: Vec<Arc<KernelMatrix>>,
}

impl KernelCache {
    pub fn new(lattice: Arc<Lattice>) -> Self {
        KernelCache {
            lattice,
            kernels: Vec::new(),
        }
    }

    pub fn lattice(&self) -> &Arc<Lattice> {
        &self.lattice
    }

    pub fn get(&mut self, t: C64) -> Result<Arc<KernelMatrix>> {
        if let Some(k) = self.kernels.iter().find(|k| k.t == t) {
            return Ok(k.clone());
        }
        let k = Arc::new(KernelMatrix::assemble(t, &self.lattice)?);
        self.kernels.push(k.clone());
        Ok(k)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(q: f64, mu: f64) -> QParams {
        QParams::new(q, mu).unwrap()
    }

    #[test]
    fn zero_parameter_kernel_is_ground_state_product() {
        let p = params(0.5, 2.0);
        let (x, y) = (0.25, -1.0);
        let spec = WeightSpec::new(&p);
        let want = (spec.eval(x) * spec.eval(y) * (x * y).abs()).sqrt();
        assert!((kernel_closed(re(0.0), x, y, &p).unwrap().re - want).abs() < 1e-15);
        assert!((kernel_series(re(0.0), x, y, &p, 10).0.re - want).abs() < 1e-15);
    }

    #[test]
    fn closed_form_matches_series_at_i() {
        let p = params(0.5, 1.0);
        let i = C64::new(0.0, 1.0);
        let (s, last) = kernel_series(i, 1.0, 1.0, &p, 40);
        assert!(last < 1e-12);
        assert!((kernel_closed(i, 1.0, 1.0, &p).unwrap() - s).norm() < 1e-8);
    }

    #[test]
    fn mixed_branches_are_symmetric() {
        let p = params(0.5, 2.0);
        let t = C64::new(0.3, 0.4);
        let (x, y) = (0.125, -2.0 * 0.25);
        let a = kernel_closed(t, x, y, &p).unwrap();
        let b = kernel_closed(t, y, x, &p).unwrap();
        assert!((a - b).norm() < 1e-10);
        assert!((a - kernel_series(t, x, y, &p, 40).0).norm() < 1e-10);
    }

    #[test]
    fn real_parameter_on_negative_top() {
        let p = params(0.5, 1.5);
        let v = kernel_closed(re(0.6), -1.5, -1.5, &p).unwrap();
        assert!(v.re > 0.0 && v.im.abs() < 1e-15);
        assert!((v - kernel_series(re(0.6), -1.5, -1.5, &p, 40).0).norm() < 1e-10);
    }

    #[test]
    fn bilinear_generating_function() {
        let q: f64 = 0.5;
        assert_eq!(
            bilinear_gf_residual(re(0.0), q * q, -2.0 * q, 1.0, 2.0, q, 10).unwrap(),
            0.0
        );
        let r = bilinear_gf_residual(re(0.4), q * q, -2.0 * q, 1.0, 2.0, q, 40).unwrap();
        assert!(r < 1e-8);
        assert!(matches!(
            bilinear_gf_residual(re(1.5), 1.0, 1.0, 1.0, 2.0, q, 10),
            Err(QoscError::OutsideConvergenceRegion(_))
        ));
    }

    #[test]
    fn eigenfunctions_of_small_lattice_transform() {
        let lat = Arc::new(Lattice::for_grid_functions(params(0.5, 1.0)));
        let k = KernelMatrix::assemble(C64::new(0.0, 1.0), &lat).unwrap();
        let p = *lat.params();
        for &(i, j) in &[(0, 0), (3, 60), (70, 5), (100, 120), (2, 2)] {
            let (x, y) = (lat.values()[i], lat.values()[j]);
            let want = kernel_closed(C64::new(0.0, 1.0), x, y, &p).unwrap();
            assert!((k.entries()[(i, j)] - want).norm() < 1e-12, "({i},{j})");
        }
        assert!(eigenfunction_residual(&k, 4).unwrap() < 1e-7);
        let id = KernelMatrix::assemble(re(1.0 - 1e-12), &lat);
        assert!(id.is_ok());
    }

    #[test]
    fn zero_input_gives_zero_output() {
        let lat = Arc::new(Lattice::with_depth(params(0.5, 1.0), 10).unwrap());
        let f = GridFunction::zeros(lat.clone());
        let g = transform(C64::new(0.0, 1.0), &f).unwrap();
        assert!(g.values().iter().all(|v| *v == re(0.0)));
    }
}
