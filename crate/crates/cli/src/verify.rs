//! Verification suites. Each check evaluates one residual from the core
//! library and compares it with a threshold.
//!
//! The pass threshold of a check is `factor · tol`. The factors place each
//! check at its natural accuracy when `tol` is the default `1e-8`: `1e-2`
//! for identities that hold to rounding, `10` for products of kernels.

use std::collections::BTreeMap;
use std::sync::Arc;
use std::time::Instant;

use num_complex::Complex64 as C64;
use qosc_core::asc::{
    asc_explicit, asc_sequence, difference_equation_residual, jump_mass, pearson_residual,
    reflection_check, WeightSpec,
};
use qosc_core::biorational::{
    biorthogonality_matrix, self_duality_residual, specialization_residual, BiorthoParams,
    WeightCase,
};
use qosc_core::coherent::{
    coherent_grid_closed, coherent_grid_series, eigen_residual, overlap, overlap_from_coefficients,
};
use qosc_core::oscillator::{
    adjointness_residual, commutator_residual, factorization_residual, hamiltonian_residual,
    lowering_residual, orthonormality_residual, pointwise_lattice, raising_residual,
    verify_ladder_family, Basis, LadderFamily, FAMILY_GRID_LEN,
};
use qosc_core::qfourier::{
    eigenfunction_residual, fourth_power_residual, isometry_residual, kernel_series, kernel_value,
    semigroup_residual_cached, series_degree, unitarity_residual_of, KernelCache,
};
use qosc_core::{Lattice, LatticePoint, QParams, QoscError};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::Value;

/// Reference scale of `--tol`.
pub const DEFAULT_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Suite {
    Orthogonality,
    Operators,
    Coherent,
    Fourier,
    Biortho,
    All,
}

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub check: String,
    pub params: BTreeMap<String, Value>,
    pub residual: f64,
    pub tol: f64,
    pub pass: bool,
    pub ms: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

/// Everything a suite needs from the command line.
#[derive(Debug, Clone)]
pub struct Settings {
    pub params: QParams,
    pub nmax: usize,
    pub tol: f64,
    pub t: C64,
    pub alpha: Option<C64>,
    pub mu2: Option<f64>,
    pub t1: Option<C64>,
    pub t2: Option<C64>,
    pub depth: Option<usize>,
    pub seed: u64,
}

fn num(v: f64) -> Value {
    serde_json::json!(v)
}

fn cplx(z: C64) -> Value {
    // adding zero folds -0 into 0
    Value::String(format!("{}{:+}i", z.re + 0.0, z.im + 0.0))
}

struct Runner<'a> {
    s: &'a Settings,
    reports: Vec<Report>,
}

impl Runner<'_> {
    fn base_params(&self) -> BTreeMap<String, Value> {
        let p = &self.s.params;
        BTreeMap::from([("q".into(), num(p.q())), ("mu".into(), num(p.mu()))])
    }

    /// Records `check` with threshold `base · tol`.
    fn run(
        &mut self,
        check: &str,
        extra: &[(&str, Value)],
        base: f64,
        f: impl FnOnce() -> qosc_core::Result<f64>,
    ) {
        let tol = base * self.s.tol;
        let mut params = self.base_params();
        params.extend(extra.iter().map(|(k, v)| (k.to_string(), v.clone())));
        let start = Instant::now();
        let outcome = f();
        let ms = start.elapsed().as_secs_f64() * 1e3;
        let (residual, error) = match outcome {
            Ok(r) => (r, None),
            Err(e) => (f64::INFINITY, Some(e.to_string())),
        };
        self.reports.push(Report {
            check: check.into(),
            params,
            residual,
            tol,
            pass: residual < tol,
            ms,
            error,
        });
    }
}

/// Quadrature lattice, or the depth given by `--K`.
fn lattice(s: &Settings) -> qosc_core::Result<Arc<Lattice>> {
    Ok(Arc::new(match s.depth {
        Some(k) => Lattice::with_depth(s.params, k)?,
        None => Lattice::auto(s.params),
    }))
}

/// Lattice for kernel sums, or the depth given by `--K`.
pub fn grid_lattice(s: &Settings) -> qosc_core::Result<Arc<Lattice>> {
    Ok(Arc::new(match s.depth {
        Some(k) => Lattice::with_depth(s.params, k)?,
        None => Lattice::for_grid_functions(s.params),
    }))
}

fn worst(values: impl IntoIterator<Item = qosc_core::Result<f64>>) -> qosc_core::Result<f64> {
    values
        .into_iter()
        .try_fold(0.0_f64, |acc, v| Ok(acc.max(v?)))
}

fn top_points(k_max: usize) -> Vec<LatticePoint> {
    (0..=k_max)
        .flat_map(|k| [LatticePoint::pos(k), LatticePoint::neg(k)])
        .collect()
}

fn orthogonality(r: &mut Runner) {
    let s = r.s;
    let p = s.params;
    let (q, mu) = (p.q(), p.mu());
    let nmax = r.s.nmax;
    let n = serde_json::json!(nmax);
    r.run("orthonormality", &[("nmax", n.clone())], 1.0, || {
        orthonormality_residual(nmax, &lattice(s)?)
    });
    let pts = top_points(10);
    r.run(
        "recurrence_vs_explicit",
        &[("n", num(30.0)), ("k", num(10.0))],
        1e-2,
        || {
            worst(pts.iter().map(|pt| {
                let x = C64::new(pt.value(q, mu), 0.0);
                let seq = asc_sequence(30, x, &p);
                worst(
                    seq.iter()
                        .enumerate()
                        .map(|(n, u)| Ok((asc_explicit(n, x, &p)? - u).norm() / (1.0 + u.norm()))),
                )
            }))
        },
    );
    r.run(
        "reflection",
        &[("n", num(30.0)), ("k", num(10.0))],
        1e-2,
        || {
            // measured against the size of u_n, like the explicit form
            worst(pts.iter().map(|pt| {
                let x = C64::new(pt.value(q, mu), 0.0);
                let seq = asc_sequence(30, x, &p);
                worst(
                    seq.iter()
                        .enumerate()
                        .map(|(n, u)| Ok(reflection_check(n, x, &p)? / (1.0 + u.norm()))),
                )
            }))
        },
    );
    r.run("jumps_vs_q_integral_masses", &[], 1e-4, || {
        let lat = Lattice::auto(p);
        let spec = WeightSpec::new(&p);
        Ok(lat
            .points()
            .iter()
            .zip(lat.values())
            .map(|(&pt, &x)| {
                let mass = (1.0 + mu) * pt.q_mass(q, mu) * spec.eval(x) / (1.0 - q);
                (jump_mass(pt, &p) - mass).abs()
            })
            .fold(0.0, f64::max))
    });
    r.run("total_mass", &[], 1e-4, || {
        let lat = Lattice::auto(p);
        let total: f64 = lat.points().iter().map(|&pt| jump_mass(pt, &p)).sum();
        Ok((total - (1.0 + mu)).abs())
    });
    r.run("pearson", &[("s", n.clone())], 0.1, || {
        Ok((0..=nmax)
            .map(|s| pearson_residual(s, &p).relative())
            .fold(0.0, f64::max))
    });
    r.run(
        "difference_equation",
        &[("n", n.clone()), ("s", n)],
        0.1,
        || {
            Ok((0..=nmax)
                .flat_map(|n| (0..=nmax).map(move |s| (n, s)))
                .map(|(n, s)| difference_equation_residual(n, s, &p).relative())
                .fold(0.0, f64::max))
        },
    );
}

fn operators(r: &mut Runner) {
    let p = r.s.params;
    let nmax = r.s.nmax;
    let seed = r.s.seed;
    let n = serde_json::json!(nmax);
    r.run("lowering", &[("nmax", n.clone())], 1.0, || {
        worst((0..=nmax).map(|k| lowering_residual(k, p)))
    });
    r.run("raising", &[("nmax", n.clone())], 1.0, || {
        worst((0..=nmax).map(|k| raising_residual(k, p)))
    });
    r.run("hamiltonian", &[("nmax", n.clone())], 1.0, || {
        worst((0..=nmax).map(|k| hamiltonian_residual(k, p)))
    });
    r.run("factorization", &[("seed", seed.into())], 1e-2, || {
        factorization_residual(p, 8, seed)
    });
    r.run("commutator_grid", &[("nmax", n.clone())], 1.0, || {
        commutator_residual(Basis::Grid, nmax, p)
    });
    r.run("commutator_number", &[("nmax", n.clone())], 1.0, || {
        commutator_residual(Basis::Number, nmax, p)
    });
    r.run(
        "adjointness",
        &[("nmax", n), ("seed", seed.into())],
        1.0,
        || adjointness_residual(nmax, p, 20, seed),
    );
    for label in ['A', 'B', 'C', 'D'] {
        r.run(&format!("ladder_family_{label}"), &[], 0.1, || {
            verify_ladder_family(&LadderFamily::standard(label, p.q())?, FAMILY_GRID_LEN)
        });
    }
}

fn coherent(r: &mut Runner) {
    let p = r.s.params;
    let alphas = match r.s.alpha {
        Some(a) => vec![a],
        None => vec![C64::new(0.1, 0.0), C64::new(0.3, 0.0), C64::new(0.0, 0.1)],
    };
    for &a in &alphas {
        let tag = [("alpha", cplx(a))];
        r.run("coherent_eigen", &tag, 1.0, || {
            eigen_residual(a, &Arc::new(pointwise_lattice(p)))
        });
        let lat = match lattice(r.s) {
            Ok(l) => l,
            Err(e) => {
                r.run("coherent_series_vs_closed", &tag, 0.1, || Err(e));
                continue;
            }
        };
        // the product form only exists inside its convergence region
        match coherent_grid_closed(a, &lat) {
            Err(QoscError::OutsideConvergenceRegion(_)) => {}
            closed => r.run("coherent_series_vs_closed", &tag, 0.1, || {
                Ok(coherent_grid_series(a, &lat, None)?
                    .sub(&closed?)?
                    .max_abs())
            }),
        }
    }
    for &a in &alphas {
        for &b in &alphas {
            let tag = [("alpha", cplx(a)), ("beta", cplx(b))];
            r.run("coherent_overlap", &tag, 1e-2, || {
                Ok((overlap(a, b, p.q()) - overlap_from_coefficients(a, b, p)).norm())
            });
        }
    }
}

fn fourier(r: &mut Runner) {
    let p = r.s.params;
    let (q, mu) = (p.q(), p.mu());
    let t = r.s.t;
    let nmax = r.s.nmax;
    let mut rng = ChaCha8Rng::seed_from_u64(r.s.seed);
    let tag = [("t", cplx(t))];
    let pts = top_points(6);
    r.run("kernel_series_vs_closed", &tag, 1.0, || {
        worst(pts.iter().flat_map(|a| {
            pts.iter().map(move |b| {
                let (x, y) = (a.value(q, mu), b.value(q, mu));
                let closed = kernel_value(t, x, y, &p)?;
                let (series, _) = kernel_series(t, x, y, &p, series_degree(6, q));
                Ok((closed - series).norm())
            })
        }))
    });
    let lat = match grid_lattice(r.s) {
        Ok(l) => l,
        Err(e) => return r.run("kernel_assembly", &tag, 1.0, || Err(e)),
    };
    let pairs: Vec<(f64, f64)> = (0..20)
        .map(|_| {
            let xs = lat.values();
            (
                xs[rng.gen_range(0..xs.len())],
                xs[rng.gen_range(0..xs.len())],
            )
        })
        .collect();
    let seed = r.s.seed;
    r.run(
        "kernel_symmetry",
        &[("t", cplx(t)), ("seed", seed.into())],
        1e-2,
        || {
            worst(pairs.iter().map(|&(x, y)| {
                Ok((kernel_value(t, x, y, &p)? - kernel_value(t, y, x, &p)?).norm())
            }))
        },
    );
    let mut cache = KernelCache::new(lat.clone());
    let i = C64::new(0.0, 1.0);
    let m = serde_json::json!(nmax);
    r.run(
        "transform_eigenfunctions",
        &[("t", cplx(t)), ("nmax", m.clone())],
        1.0,
        || eigenfunction_residual(&*cache.get(t)?, nmax),
    );
    r.run("isometry", &[("nmax", m.clone())], 1.0, || {
        isometry_residual(&*cache.get(i)?, nmax)
    });
    r.run("fourth_power", &[("nmax", m)], 10.0, || {
        let k = cache.get(i)?;
        worst((0..=nmax).map(|n| fourth_power_residual(&k, n)))
    });
    r.run("unitarity", &[], 1.0, || {
        unitarity_residual_of(&*cache.get(i)?)
    });
    // chosen so that the kernels involved are shared between pairs
    let a = C64::new(0.7, 0.0);
    let pairs = [(i, i), (a, i), (a, a * i), (a * i, i), (-a, i)];
    for (a, b) in pairs {
        r.run(
            "semigroup",
            &[("t", cplx(a)), ("t_prime", cplx(b))],
            10.0,
            || semigroup_residual_cached(a, b, &mut cache),
        );
    }
}

/// Rational-function parameters from the flags: `μ₂` defaults to `2μ`,
/// a missing `t₁` or `t₂` is completed from `t₁t₂ = μ₁μ₂`, and with neither
/// given `t₁ = t₂ = (μ₁μ₂)^{1/2}`.
pub fn biortho_params(s: &Settings) -> qosc_core::Result<BiorthoParams> {
    let (q, mu1) = (s.params.q(), s.params.mu());
    let mu2 = s.mu2.unwrap_or(2.0 * mu1);
    let product = C64::new(mu1 * mu2, 0.0);
    match (s.t1, s.t2) {
        (Some(t1), Some(t2)) => BiorthoParams::new(q, mu1, mu2, t1, t2),
        (Some(t1), None) => BiorthoParams::from_t1(q, mu1, mu2, t1),
        (None, Some(t2)) => BiorthoParams::from_t1(q, mu1, mu2, product / t2),
        (None, None) => BiorthoParams::from_t1(q, mu1, mu2, product.sqrt()),
    }
}

fn biortho(r: &mut Runner) {
    let s = r.s;
    let p = s.params;
    let (q, mu1) = (p.q(), p.mu());
    let bp = match biortho_params(s) {
        Ok(bp) => bp,
        Err(e) => return r.run("biorthogonality", &[], 100.0, || Err(e)),
    };
    let mu2 = bp.mu2;
    let base = vec![("mu2", num(mu2))];
    let mut tag = base.clone();
    tag.extend([("t1", cplx(bp.t1)), ("t2", cplx(bp.t2))]);
    let s_max = r.s.nmax.min(6);
    let lat_y = bp.y_lattice();
    for case in WeightCase::ALL {
        let mut tag = tag.clone();
        tag.push(("case", Value::String(case.label().into())));
        r.run("biorthogonality", &tag, 100.0, || {
            let m = biorthogonality_matrix(case, s_max, &bp, &lat_y)?;
            // points on different branches are never paired with each other
            let diagonal = matches!(case, WeightCase::PosPos | WeightCase::NegNeg);
            let n = m.nrows();
            Ok(m.iter()
                .enumerate()
                .map(|(idx, z)| {
                    let one = if diagonal && idx % n == idx / n {
                        1.0
                    } else {
                        0.0
                    };
                    (z - one).norm()
                })
                .fold(0.0, f64::max))
        });
    }
    let pts = top_points(s_max);
    r.run("rational_duality", &tag, 1e-2, || {
        worst(pts.iter().flat_map(|a| {
            pts.iter()
                .filter(move |b| b.branch == a.branch)
                .map(move |b| self_duality_residual(a.value(q, mu1), b.value(q, mu2), &bp))
        }))
    });
    r.run("kernel_specialization", &[("t", cplx(s.t))], 0.1, || {
        worst(pts.iter().flat_map(|a| {
            pts.iter()
                .map(move |b| specialization_residual(s.t, a.value(q, mu1), b.value(q, mu1), &p))
        }))
    });
}

pub fn run(suite: Suite, settings: &Settings) -> Vec<Report> {
    let mut r = Runner {
        s: settings,
        reports: Vec::new(),
    };
    let all = suite == Suite::All;
    if all || suite == Suite::Orthogonality {
        orthogonality(&mut r);
    }
    if all || suite == Suite::Operators {
        operators(&mut r);
    }
    if all || suite == Suite::Coherent {
        coherent(&mut r);
    }
    if all || suite == Suite::Fourier {
        fourier(&mut r);
    }
    if all || suite == Suite::Biortho {
        biortho(&mut r);
    }
    r.reports
}

/// One line per check, then a summary line.
pub fn render_text(reports: &[Report]) -> String {
    let mut out = String::new();
    for rep in reports {
        let params: Vec<String> = rep
            .params
            .iter()
            .map(|(k, v)| match v {
                Value::String(s) => format!("{k}={s}"),
                other => format!("{k}={other}"),
            })
            .collect();
        out.push_str(&format!(
            "{} {:<28} residual {:.3e}  tol {:.1e}  {:>9.1} ms  {}",
            if rep.pass { "PASS" } else { "FAIL" },
            rep.check,
            rep.residual,
            rep.tol,
            rep.ms,
            params.join(" ")
        ));
        if let Some(e) = &rep.error {
            out.push_str(&format!("  error: {e}"));
        }
        out.push('\n');
    }
    let failed = reports.iter().filter(|r| !r.pass).count();
    if failed == 0 {
        out.push_str(&format!("all {} checks passed\n", reports.len()));
    } else {
        out.push_str(&format!("{failed} of {} checks failed\n", reports.len()));
    }
    out
}
