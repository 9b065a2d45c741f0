//! Al-Salam–Carlitz polynomials `u_n^μ(x;q)`.
//!
//! They satisfy the three-term recurrence
//!
//! ```text
//! μ qⁿ u_{n+1} + (1 - qⁿ) u_{n-1} = (x - (1-μ) qⁿ) u_n,
//! u_0 = 1,  u_1 = (x - 1 + μ)/μ,
//! ```
//!
//! and are orthogonal on `{q^k} ∪ {-μ q^k}` with weight
//! `ρ̃(x) = (qx, -qx/μ; q)_∞ / (q, -μ, -q/μ; q)_∞` and squared norms
//! `(1-q) d_n²`, `d_n² = q^{-n(n-1)/2} (q;q)_n / μⁿ`.
//!
//! On a support point the polynomial solution of the recurrence is the
//! recessive one, so running it forward loses all accuracy once `n` passes
//! roughly twice the depth of the point. [`asc_recurrence`] therefore runs
//! the recurrence backward (Miller's algorithm, normalised by `u_0 = 1`) on
//! support points and forward everywhere else.

use num_complex::Complex64 as C64;

use crate::error::{QoscError, Result};
use crate::qseries::{basic_hyp, pinf, qpochhammer_finite, Branch, Lattice, LatticePoint, QParams};
use crate::Residual;

fn re(x: f64) -> C64 {
    C64::new(x, 0.0)
}

/// `u_0..=u_{n_max}` by the forward recurrence.
pub fn forward_sequence(n_max: usize, x: C64, q: f64, mu: f64) -> Vec<C64> {
    let mut out = Vec::with_capacity(n_max + 1);
    out.push(re(1.0));
    if n_max == 0 {
        return out;
    }
    out.push((x - 1.0 + mu) / mu);
    let mut qn = q;
    for n in 1..n_max {
        let next = ((x - (1.0 - mu) * qn) * out[n] - (1.0 - qn) * out[n - 1]) / (mu * qn);
        out.push(next);
        qn *= q;
    }
    out
}

/// `q^{n(n-1)/2} u_n`, `n = 0..=n_max`, by the forward recurrence
/// `μ v_{n+1} + (1-qⁿ) q^{n-1} v_{n-1} = (x - (1-μ)qⁿ) v_n`.
///
/// The Gaussian factor cancels the superexponential growth of `u_n` away
/// from the support, so these values stay finite where `u_n` would overflow.
pub fn scaled_forward_sequence(n_max: usize, x: C64, q: f64, mu: f64) -> Vec<C64> {
    let mut out = Vec::with_capacity(n_max + 1);
    out.push(re(1.0));
    if n_max == 0 {
        return out;
    }
    out.push((x - 1.0 + mu) / mu);
    let mut qn = q;
    for n in 1..n_max {
        let next = ((x - (1.0 - mu) * qn) * out[n] - (1.0 - qn) * (qn / q) * out[n - 1]) / mu;
        out.push(next);
        qn *= q;
    }
    out
}

/// Backward-recurrence start index for a support point `x`.
fn miller_start(n_max: usize, x: f64, q: f64, mu: f64) -> usize {
    let ln_q = q.ln();
    // the polynomial solution becomes recessive once qⁿ < x²/(4μ)
    let onset = ((x * x / (4.0 * mu)).ln() / ln_q).ceil().max(0.0) as usize;
    let margin = (100.0 / -ln_q).sqrt().ceil() as usize + 10;
    n_max.max(onset) + margin
}

/// Index below which the forward recurrence is the stable direction.
///
/// The Casoratian of two solutions is multiplied by `(1-qⁿ)/(μqⁿ)` at each
/// step, which is below one exactly while `qⁿ > 1/(1+μ)`.
fn crossover(q: f64, mu: f64) -> usize {
    ((1.0 + mu).ln() / -q.ln()).floor().max(0.0) as usize
}

/// `u_0..=u_{n_max}` at a support point.
///
/// Up to the stability crossover the forward recurrence is used; above it
/// Miller's backward recurrence, matched to the forward values at the
/// crossover. Backward iterates are carried as mantissa/binary-exponent
/// pairs so their superexponential growth never overflows.
pub fn miller_sequence(n_max: usize, x: f64, q: f64, mu: f64) -> Vec<f64> {
    miller_scaled(n_max, x, q, mu, |_| 0.0)
}

/// Hybrid sequence with every `u_n` multiplied by `2^{log2_factor(n)}`,
/// applied before leaving the mantissa/exponent representation.
fn miller_scaled(
    n_max: usize,
    x: f64,
    q: f64,
    mu: f64,
    log2_factor: impl Fn(usize) -> f64,
) -> Vec<f64> {
    let m = crossover(q, mu);
    let forward: Vec<f64> = forward_sequence(n_max.min(m + 1), C64::new(x, 0.0), q, mu)
        .into_iter()
        .map(|u| u.re)
        .collect();
    if n_max <= m + 1 {
        return forward
            .into_iter()
            .enumerate()
            .map(|(n, u)| u * log2_factor(n).exp2())
            .collect();
    }

    let top = n_max;
    let start = miller_start(top, x, q, mu);
    let mut mant = vec![0.0_f64; top + 1];
    let mut expo = vec![0_i64; top + 1];

    // (y_n, y_{n+1}) scaled by 2^{-shift}
    let (mut y_n, mut y_next) = (1.0_f64, 0.0_f64);
    let mut shift: i64 = 0;
    if start <= top {
        mant[start] = 1.0;
    }
    for n in ((m + 1)..=start).rev() {
        // recomputed each step: a running quotient would stay at zero once
        // q^start underflows
        let qn = q.powi(n as i32);
        let y_prev = ((x - (1.0 - mu) * qn) * y_n - mu * qn * y_next) / (1.0 - qn);
        y_next = y_n;
        y_n = y_prev;
        let mag = y_n.abs().max(y_next.abs());
        if mag > 0.0 && !(2f64.powi(-200)..=2f64.powi(200)).contains(&mag) {
            let e = mag.log2().round() as i32;
            let s = 2f64.powi(-e);
            y_n *= s;
            y_next *= s;
            shift += e as i64;
        }
        if n - 1 <= top {
            mant[n - 1] = y_n;
            expo[n - 1] = shift;
        }
    }

    let log_mag = |i: usize| mant[i].abs().log2() + expo[i] as f64;
    let r = if log_mag(m) >= log_mag(m + 1) {
        m
    } else {
        m + 1
    };
    let (mr, er) = (mant[r], expo[r]);
    let rel = |i: usize, extra: f64| {
        if mant[i] == 0.0 {
            return 0.0;
        }
        let d = (expo[i] - er) as f64 + extra;
        if d > 2000.0 {
            f64::INFINITY.copysign(mant[i] / mr)
        } else if d < -2000.0 {
            0.0
        } else {
            (mant[i] / mr) * d.exp2()
        }
    };
    let (z0, z1) = (rel(m, 0.0), rel(m + 1, 0.0));
    let scale = (forward[m] * z0 + forward[m + 1] * z1) / (z0 * z0 + z1 * z1);

    let mut out: Vec<f64> = forward
        .into_iter()
        .take(m + 1)
        .enumerate()
        .map(|(n, u)| u * log2_factor(n).exp2())
        .collect();
    out.extend((m + 1..=top).map(|i| scale * rel(i, log2_factor(i))));
    out
}

/// `u_n / d_n` for `n ≤ n_max` at a lattice point. Stays finite where
/// `u_n` and `d_n` separately overflow.
pub fn orthonormal_lattice_sequence(n_max: usize, p: LatticePoint, params: &QParams) -> Vec<f64> {
    let (q, mu) = (params.q(), params.mu());
    let logs: Vec<f64> = {
        let mut acc = 0.0;
        let mut v = Vec::with_capacity(n_max + 1);
        for n in 0..=n_max {
            if n > 0 {
                let nf = n as f64;
                acc += 0.5 * (-(nf - 1.0) * q.log2() + (1.0 - q.powi(n as i32)).log2() - mu.log2());
            }
            v.push(-acc);
        }
        v
    };
    miller_scaled(n_max, p.value(q, mu), q, mu, |n| logs[n])
}

/// `u_0..=u_{n_max}` at a lattice point of `params`.
pub fn lattice_sequence(n_max: usize, p: LatticePoint, params: &QParams) -> Vec<f64> {
    let (q, mu) = (params.q(), params.mu());
    miller_sequence(n_max, p.value(q, mu), q, mu)
}

/// `u_0..=u_{n_max}` at arbitrary `x`, choosing the stable direction.
pub fn asc_sequence(n_max: usize, x: C64, params: &QParams) -> Vec<C64> {
    let (q, mu) = (params.q(), params.mu());
    if x.im == 0.0 {
        if let Some(p) = LatticePoint::locate(x.re, q, mu) {
            return lattice_sequence(n_max, p, params)
                .into_iter()
                .map(re)
                .collect();
        }
    }
    forward_sequence(n_max, x, q, mu)
}

/// `u_n^μ(x;q)` from the three-term recurrence.
pub fn asc_recurrence(n: usize, x: C64, params: &QParams) -> C64 {
    asc_sequence(n, x, params)[n]
}

/// `u_n^μ(x;q) = ₂φ₁(q^{-n}, x^{-1}; 0; q, -qx/μ)`.
///
/// On the negative branch the equivalent form
/// `(-1/μ)ⁿ ₂φ₁(q^{-n}, -μ/x; 0; q, qx)` is used: it terminates after
/// `min(n, k) + 1` terms there, exactly as the first form does on the
/// positive branch.
pub fn asc_explicit(n: usize, x: C64, params: &QParams) -> Result<C64> {
    if x == re(0.0) {
        return Err(QoscError::ZeroArgument);
    }
    let (q, mu) = (params.q(), params.mu());
    let qn_inv = re(q.powi(-(n as i32)));
    let on_negative_branch = x.im == 0.0
        && matches!(
            LatticePoint::locate(x.re, q, mu),
            Some(LatticePoint {
                branch: Branch::Neg,
                ..
            })
        );
    if on_negative_branch {
        let s = basic_hyp(
            &[qn_inv, -mu / x],
            &[re(0.0)],
            q,
            q * x,
            params.tol(),
            params.max_terms(),
        )?;
        Ok(s.value * (-1.0 / mu).powi(n as i32))
    } else {
        let s = basic_hyp(
            &[qn_inv, 1.0 / x],
            &[re(0.0)],
            q,
            -q * x / mu,
            params.tol(),
            params.max_terms(),
        )?;
        Ok(s.value)
    }
}

/// `|u_n^μ(x) - (-1/μ)ⁿ u_n^{1/μ}(-x/μ)|`.
pub fn reflection_check(n: usize, x: C64, params: &QParams) -> Result<f64> {
    if x == re(0.0) {
        return Err(QoscError::ZeroArgument);
    }
    let mu = params.mu();
    let dual = params.with_mu(1.0 / mu)?;
    let lhs = asc_recurrence(n, x, params);
    let rhs = asc_recurrence(n, -x / mu, &dual) * (-1.0 / mu).powi(n as i32);
    Ok((lhs - rhs).norm())
}

/// The orthogonality weight with its normalising constant precomputed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeightSpec {
    q: f64,
    mu: f64,
    /// `(q, -μ, -q/μ; q)_∞`
    norm: f64,
}

impl WeightSpec {
    pub fn new(params: &QParams) -> Self {
        let (q, mu) = (params.q(), params.mu());
        let norm = (pinf(re(q), q) * pinf(re(-mu), q) * pinf(re(-q / mu), q)).re;
        WeightSpec { q, mu, norm }
    }

    pub fn normalization(&self) -> f64 {
        self.norm
    }

    /// `ρ̃(x)`; vanishes exactly where `(qx;q)_∞` or `(-qx/μ;q)_∞` does.
    pub fn eval(&self, x: f64) -> f64 {
        let (q, mu) = (self.q, self.mu);
        (pinf(re(q * x), q) * pinf(re(-q * x / mu), q)).re / self.norm
    }
}

/// `ρ̃(x)`.
pub fn weight(x: f64, params: &QParams) -> f64 {
    WeightSpec::new(params).eval(x)
}

/// Jump of the step-function measure at a support point.
pub fn jump_mass(p: LatticePoint, params: &QParams) -> f64 {
    let (q, mu) = (params.q(), params.mu());
    let qk = q.powi(p.k as i32);
    let qf = qpochhammer_finite(re(q), q, p.k).re;
    match p.branch {
        Branch::Pos => {
            qk / (pinf(re(-q * mu), q).re * qf * qpochhammer_finite(re(-q / mu), q, p.k).re)
        }
        Branch::Neg => {
            mu * qk / (pinf(re(-q / mu), q).re * qf * qpochhammer_finite(re(-q * mu), q, p.k).re)
        }
    }
}

/// `d_n² = q^{-n(n-1)/2} (q;q)_n / μⁿ`.
pub fn norm_sq(n: usize, q: f64, mu: f64) -> f64 {
    let n_i = n as i32;
    let tri = (n * n.saturating_sub(1) / 2) as f64;
    q.powf(-tri) * qpochhammer_finite(re(q), q, n).re / mu.powi(n_i)
}

/// `|∫ u_m u_n ρ̃ d_q x - (1-q) d_n² δ_{mn}|` on `lattice`.
pub fn orthogonality_residual(m: usize, n: usize, lattice: &Lattice) -> Result<f64> {
    let params = *lattice.params();
    let spec = WeightSpec::new(&params);
    let top = m.max(n);
    let samples: Vec<C64> = lattice
        .points()
        .iter()
        .zip(lattice.values())
        .map(|(&p, &x)| {
            let u = lattice_sequence(top, p, &params);
            re(u[m] * u[n] * spec.eval(x))
        })
        .collect();
    let integral = lattice.integrate(&samples)?;
    let expected = if m == n {
        (1.0 - params.q()) * norm_sq(n, params.q(), params.mu())
    } else {
        0.0
    };
    Ok((integral - expected).norm())
}

/// `λ_n = q^{3/2} (q^{-n} - 1)/(1-q)²`.
pub fn lambda(n: usize, q: f64) -> f64 {
    q.powf(1.5) * (q.powi(-(n as i32)) - 1.0) / ((1.0 - q) * (1.0 - q))
}

fn sigma(s: i32, q: f64, mu: f64) -> f64 {
    let qs = q.powi(s);
    (1.0 - qs) * (mu + qs)
}

/// Pearson-type equation `Δ(σρ)(s) = ρ(s)(μ - σ(s))` at `x = q^s`.
pub fn pearson_residual(s: usize, params: &QParams) -> Residual {
    let (q, mu) = (params.q(), params.mu());
    let spec = WeightSpec::new(params);
    let s = s as i32;
    let rho = |t: i32| spec.eval(q.powi(t));
    let upper = sigma(s + 1, q, mu) * rho(s + 1);
    let lower = sigma(s, q, mu) * rho(s);
    let rhs = rho(s) * (mu - sigma(s, q, mu));
    Residual::new(
        (upper - lower - rhs).abs(),
        upper.abs().max(lower.abs()).max(rhs.abs()),
    )
}

/// Self-adjoint difference equation
/// `(Δ/∇x₁)[σ ρ ∇y_n/∇x] + λ_n ρ y_n = 0` at `x = q^s`, with
/// `x(s) = q^s` and `x₁(s) = q^{s+1/2}`.
pub fn difference_equation_residual(n: usize, s: usize, params: &QParams) -> Residual {
    let (q, mu) = (params.q(), params.mu());
    let spec = WeightSpec::new(params);
    let s = s as i32;
    let y = |t: i32| asc_recurrence(n, re(q.powi(t)), params).re;
    let rho = |t: i32| spec.eval(q.powi(t));
    // σ(t) ρ(t) ∇y(t)/∇x(t); σ(0) = 0 removes the reference to y(-1)
    let flux = |t: i32| {
        if t == 0 {
            0.0
        } else {
            sigma(t, q, mu) * rho(t) * (y(t) - y(t - 1)) / (q.powi(t) - q.powi(t - 1))
        }
    };
    let grad_x1 = q.powf(s as f64 + 0.5) - q.powf(s as f64 - 0.5);
    let a = flux(s + 1) / grad_x1;
    let b = flux(s) / grad_x1;
    let c = lambda(n, q) * rho(s) * y(s);
    Residual::new((a - b + c).abs(), a.abs().max(b.abs()).max(c.abs()))
}

/// `(μ/(qx)) [u_n(qx) - u_n(x)] - (1 - q^{-n}) u_{n-1}(x)`.
pub fn lowering_formula_residual(n: usize, x: f64, params: &QParams) -> Residual {
    if n == 0 {
        return Residual::new(0.0, 0.0);
    }
    let (q, mu) = (params.q(), params.mu());
    let at = asc_sequence(n, re(x), params);
    let shifted = asc_recurrence(n, re(q * x), params);
    let c = mu / (q * x);
    let a = c * shifted;
    let b = c * at[n];
    let d = (1.0 - q.powi(-(n as i32))) * at[n - 1];
    Residual::new((a - b - d).norm(), a.norm().max(b.norm()).max(d.norm()))
}

/// `(1/x) [ρ(x) u_n(x) - ρ(x/q) u_n(x/q)] - ρ(x) u_{n+1}(x)`.
///
/// At `x = 1` the backward neighbour `1/q` leaves the lattice, but
/// `ρ̃(1/q)` contains `(1;q)_∞ = 0` and the term drops out.
pub fn raising_formula_residual(n: usize, x: f64, params: &QParams) -> Residual {
    let q = params.q();
    let spec = WeightSpec::new(params);
    let at = asc_sequence(n + 1, re(x), params);
    let back = asc_recurrence(n, re(x / q), params);
    let a = spec.eval(x) * at[n] / x;
    let b = spec.eval(x / q) * back / x;
    let c = spec.eval(x) * at[n + 1];
    Residual::new((a - b - c).norm(), a.norm().max(b.norm()).max(c.norm()))
}

/// Charlier polynomial `c_n^μ(s) = ₂F₀(-n, -s; —; -1/μ)`.
pub fn charlier(n: usize, s: usize, mu: f64) -> f64 {
    let mut sum = 0.0;
    let mut term = 1.0;
    for k in 0..=n.min(s) {
        sum += term;
        // (-n)_{k+1}/(-n)_k = k - n
        term *= (k as f64 - n as f64) * (k as f64 - s as f64) / (k as f64 + 1.0) * (-1.0 / mu);
    }
    sum
}

/// `|u_n^{(1-q)μ}(q^s; q) - c_n^μ(s)|` for each `q` in `q_seq`.
pub fn charlier_limit_residual(n: usize, s: usize, mu: f64, q_seq: &[f64]) -> Result<Vec<f64>> {
    let target = charlier(n, s, mu);
    q_seq
        .iter()
        .map(|&q| {
            let params = QParams::new(q, (1.0 - q) * mu)?;
            let u = asc_recurrence(n, re(q.powi(s as i32)), &params);
            Ok((u.re - target).abs())
        })
        .collect()
}
