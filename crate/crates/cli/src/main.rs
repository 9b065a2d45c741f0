//! `qosc`: evaluate, verify and transform on the two-branch q-lattice.
//!
//! Exit codes: 0 success, 1 a verification check failed, 2 invalid usage,
//! parameters or input.

mod complex;
mod table;
mod verify;

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Parser, Subcommand, ValueEnum};
use num_complex::Complex64 as C64;
use qosc_core::asc::{asc_sequence, orthonormal_lattice_sequence, weight, WeightSpec};
use qosc_core::coherent::coherent_grid_series;
use qosc_core::oscillator::{wavefunction, GridFunction};
use qosc_core::qfourier::{kernel_value, KernelMatrix};
use qosc_core::{Lattice, LatticePoint, QParams};

use complex::parse_complex;
use table::{Format, Row, Table};
use verify::{Settings, Suite};

#[derive(Parser, Debug)]
#[command(
    name = "qosc",
    version,
    about = "q-harmonic oscillator on the Al-Salam-Carlitz polynomials"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    #[command(flatten)]
    opts: Options,
}

#[derive(clap::Args, Debug, Clone)]
struct Options {
    /// Base q, strictly between 0 and 1
    #[arg(
        long,
        global = true,
        default_value_t = 0.5,
        allow_negative_numbers = true
    )]
    q: f64,
    /// Lattice parameter mu > 0
    #[arg(
        long,
        global = true,
        default_value_t = 1.0,
        allow_negative_numbers = true
    )]
    mu: f64,
    /// Second lattice parameter for the rational functions (default 2 mu)
    #[arg(long, global = true, allow_negative_numbers = true)]
    mu2: Option<f64>,
    #[arg(long, global = true, value_parser = parse_complex, allow_negative_numbers = true)]
    t1: Option<C64>,
    #[arg(long, global = true, value_parser = parse_complex, allow_negative_numbers = true)]
    t2: Option<C64>,
    /// Degree
    #[arg(long, global = true, default_value_t = 0)]
    n: usize,
    /// Largest degree used by the checks
    #[arg(long, global = true, default_value_t = 10)]
    nmax: usize,
    /// Coherent-state parameter, written re+imi
    #[arg(long, global = true, value_parser = parse_complex, allow_negative_numbers = true)]
    alpha: Option<C64>,
    /// Kernel parameter, written re+imi
    #[arg(long, global = true, value_parser = parse_complex, default_value = "0+1i", allow_negative_numbers = true)]
    t: C64,
    /// Pass threshold scale for checks; also sets the lattice truncation
    #[arg(long, global = true, default_value_t = verify::DEFAULT_TOL)]
    tol: f64,
    /// Lattice depth per branch (chosen from the tolerance when absent)
    #[arg(long = "K", global = true)]
    depth: Option<usize>,
    /// Evaluation point (all lattice points when absent)
    #[arg(long, global = true, allow_negative_numbers = true)]
    x: Option<f64>,
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    /// Write to this file instead of standard output
    #[arg(long, global = true)]
    output: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Tabulate a function over the lattice or at --x
    Eval { object: Object },
    /// Run a verification suite
    Verify { suite: Suite },
    /// Apply the kernel K_t to sampled values read from a CSV file
    Transform {
        #[arg(long)]
        input: PathBuf,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Object {
    Poly,
    Weight,
    Wavefunction,
    Coherent,
    Kernel,
}

/// A failure that maps to an exit code.
enum Failure {
    Usage(String),
    Checks,
}

impl From<qosc_core::QoscError> for Failure {
    fn from(e: qosc_core::QoscError) -> Self {
        Failure::Usage(e.to_string())
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Usage(e.to_string())
    }
}

impl Options {
    /// Series truncation follows the check threshold with four digits to
    /// spare, kept within `[1e-15, 1e-6]`.
    fn params(&self) -> Result<QParams, Failure> {
        let p = QParams::new(self.q, self.mu)?;
        if !(self.tol > 0.0 && self.tol.is_finite()) {
            return Err(Failure::Usage("tol must be positive".into()));
        }
        let series = (self.tol * 1e-4).clamp(1e-15, 1e-6);
        Ok(p.with_tol(series)?)
    }

    fn seed() -> Result<u64, Failure> {
        match std::env::var("QOSC_SEED") {
            Ok(v) => v
                .trim()
                .parse()
                .map_err(|_| Failure::Usage(format!("QOSC_SEED={v:?} is not an unsigned integer"))),
            Err(_) => Ok(42),
        }
    }

    fn settings(&self) -> Result<Settings, Failure> {
        Ok(Settings {
            params: self.params()?,
            nmax: self.nmax,
            tol: self.tol,
            t: self.t,
            alpha: self.alpha,
            mu2: self.mu2,
            t1: self.t1,
            t2: self.t2,
            depth: self.depth,
            seed: Self::seed()?,
        })
    }

    fn sink(&self) -> Result<Box<dyn Write>, Failure> {
        Ok(match &self.output {
            Some(path) => Box::new(BufWriter::new(File::create(path).map_err(|e| {
                Failure::Usage(format!("cannot write {}: {e}", path.display()))
            })?)),
            None => Box::new(BufWriter::new(io::stdout().lock())),
        })
    }
}

fn eval(object: Object, o: &Options) -> Result<Table, Failure> {
    let s = o.settings()?;
    let p = s.params;
    let (q, mu) = (p.q(), p.mu());
    let real = |v: f64| C64::new(v, 0.0);

    if let Some(x) = o.x {
        let point = LatticePoint::locate(x, q, mu);
        let on_lattice =
            || point.ok_or_else(|| Failure::Usage(format!("x = {x} is not a lattice point")));
        let value = match object {
            Object::Poly => asc_sequence(o.n, real(x), &p)[o.n],
            Object::Weight => real(weight(x, &p)),
            Object::Wavefunction => {
                let pt = on_lattice()?;
                let pre = (WeightSpec::new(&p).eval(x) * x.abs()).sqrt();
                real(orthonormal_lattice_sequence(o.n, pt, &p)[o.n] * pre)
            }
            Object::Coherent => {
                let pt = on_lattice()?;
                let lat = Arc::new(Lattice::with_depth(p, pt.k.max(grid_depth(&s)?))?);
                let f = coherent_grid_series(alpha(o)?, &lat, None)?;
                f.at(pt).expect("point lies on the lattice")
            }
            Object::Kernel => {
                on_lattice()?;
                return kernel_row(o.t, x, &s);
            }
        };
        return Ok(Table {
            rows: vec![Row { point, x, value }],
        });
    }

    let lat = verify::grid_lattice(&s)?;
    let values: Vec<C64> = match object {
        Object::Poly => lat
            .values()
            .iter()
            .map(|&x| asc_sequence(o.n, real(x), &p)[o.n])
            .collect(),
        Object::Weight => lat.values().iter().map(|&x| real(weight(x, &p))).collect(),
        Object::Wavefunction => wavefunction(o.n, &lat)?.values().to_vec(),
        Object::Coherent => coherent_grid_series(alpha(o)?, &lat, None)?
            .values()
            .to_vec(),
        Object::Kernel => return kernel_row(o.t, 1.0, &s),
    };
    Ok(Table::from_samples(&lat, &values))
}

fn grid_depth(s: &Settings) -> Result<usize, Failure> {
    Ok(verify::grid_lattice(s)?.k_max())
}

fn alpha(o: &Options) -> Result<C64, Failure> {
    o.alpha
        .ok_or_else(|| Failure::Usage("eval coherent needs --alpha".into()))
}

/// `K_t(x, y)` for every lattice `y`.
fn kernel_row(t: C64, x: f64, s: &Settings) -> Result<Table, Failure> {
    let lat = verify::grid_lattice(s)?;
    let values = lat
        .values()
        .iter()
        .map(|&y| kernel_value(t, x, y, &s.params))
        .collect::<qosc_core::Result<Vec<_>>>()?;
    Ok(Table::from_samples(&lat, &values))
}

fn transform(input: &PathBuf, o: &Options) -> Result<Table, Failure> {
    let s = o.settings()?;
    let file = File::open(input)
        .map_err(|e| Failure::Usage(format!("cannot read {}: {e}", input.display())))?;
    let table = Table::read_csv(file).map_err(Failure::Usage)?;
    let depth = o
        .depth
        .or(table.depth())
        .ok_or_else(|| Failure::Usage("input has no rows".into()))?;
    let lat = Arc::new(Lattice::with_depth(s.params, depth)?);
    let samples = table.samples_on(&lat).map_err(Failure::Usage)?;
    let f = GridFunction::new(lat.clone(), samples)?;
    let g = KernelMatrix::assemble(o.t, &lat)?.apply(&f)?;
    Ok(Table::from_samples(&lat, g.values()))
}

fn emit(table: &Table, o: &Options) -> Result<(), Failure> {
    let mut out = o.sink()?;
    table.write(o.format.unwrap_or(Format::Csv), &mut *out)?;
    Ok(out.flush()?)
}

fn run(cli: &Cli) -> Result<(), Failure> {
    let o = &cli.opts;
    match &cli.command {
        Command::Eval { object } => emit(&eval(*object, o)?, o),
        Command::Transform { input } => emit(&transform(input, o)?, o),
        Command::Verify { suite } => {
            let settings = o.settings()?;
            if matches!(suite, Suite::Biortho | Suite::All) {
                verify::biortho_params(&settings)?;
            }
            let reports = verify::run(*suite, &settings);
            let mut out = o.sink()?;
            match o.format {
                Some(Format::Json) => {
                    serde_json::to_writer_pretty(&mut *out, &reports).map_err(io::Error::from)?;
                    writeln!(out)?;
                }
                Some(Format::Csv) => {
                    writeln!(out, "# {}", table::SCHEMA)?;
                    writeln!(out, "check,residual,tol,pass,ms")?;
                    for r in &reports {
                        writeln!(
                            out,
                            "{},{:e},{:e},{},{:.3}",
                            r.check, r.residual, r.tol, r.pass, r.ms
                        )?;
                    }
                }
                None => write!(out, "{}", verify::render_text(&reports))?,
            }
            out.flush()?;
            if reports.iter().all(|r| r.pass) {
                Ok(())
            } else {
                Err(Failure::Checks)
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Checks) => ExitCode::from(1),
        Err(Failure::Usage(msg)) => {
            eprintln!("qosc: {msg}");
            ExitCode::from(2)
        }
    }
}
