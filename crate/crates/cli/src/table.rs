//! Plot-ready tables of sampled values, written as CSV or JSON and read back
//! from CSV.

use std::io::{Read, Write};

use num_complex::Complex64 as C64;
use qosc_core::{Branch, Lattice, LatticePoint};
use serde_json::{json, Value};

pub const SCHEMA: &str = "qosc v1";
pub const COLUMNS: [&str; 5] = ["branch", "k", "x", "re", "im"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

/// One sample. `point` is `None` for an evaluation away from the lattice.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Row {
    pub point: Option<LatticePoint>,
    pub x: f64,
    pub value: C64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Table {
    pub rows: Vec<Row>,
}

/// Scientific notation with 17 significant digits, enough to restore any `f64`.
fn num(v: f64) -> String {
    format!("{v:.16e}")
}

fn branch_label(p: Option<LatticePoint>) -> &'static str {
    match p {
        Some(p) => p.branch.label(),
        None => "off",
    }
}

impl Table {
    pub fn from_samples(lattice: &Lattice, values: &[C64]) -> Self {
        let rows = lattice
            .points()
            .iter()
            .zip(lattice.values())
            .zip(values)
            .map(|((&p, &x), &value)| Row {
                point: Some(p),
                x,
                value,
            })
            .collect();
        Table { rows }
    }

    pub fn write(&self, format: Format, out: &mut dyn Write) -> std::io::Result<()> {
        match format {
            Format::Csv => {
                writeln!(out, "# {SCHEMA}")?;
                writeln!(out, "{}", COLUMNS.join(","))?;
                for r in &self.rows {
                    let k = r.point.map(|p| p.k.to_string()).unwrap_or_default();
                    writeln!(
                        out,
                        "{},{k},{},{},{}",
                        branch_label(r.point),
                        num(r.x),
                        num(r.value.re),
                        num(r.value.im)
                    )?;
                }
                Ok(())
            }
            Format::Json => {
                let rows: Vec<Value> = self
                    .rows
                    .iter()
                    .map(|r| {
                        json!([
                            branch_label(r.point),
                            r.point.map(|p| p.k),
                            r.x,
                            r.value.re,
                            r.value.im
                        ])
                    })
                    .collect();
                let doc = json!({ "schema": SCHEMA, "columns": COLUMNS, "rows": rows });
                serde_json::to_writer(&mut *out, &doc)?;
                writeln!(out)
            }
        }
    }

    /// Reads `branch,k[,x],re,im` rows; lines starting with `#` are skipped.
    pub fn read_csv(input: impl Read) -> Result<Self, String> {
        let mut reader = csv::ReaderBuilder::new()
            .comment(Some(b'#'))
            .trim(csv::Trim::All)
            .from_reader(input);
        let headers = reader.headers().map_err(|e| e.to_string())?.clone();
        let col = |name: &str| headers.iter().position(|h| h == name);
        let need = |name: &str| col(name).ok_or_else(|| format!("missing column {name:?}"));
        let (cb, ck, cre, cim) = (need("branch")?, need("k")?, need("re")?, need("im")?);
        let cx = col("x");
        let mut rows = Vec::new();
        for (line, rec) in reader.records().enumerate() {
            let rec = rec.map_err(|e| e.to_string())?;
            let field = |c: usize| rec.get(c).unwrap_or("");
            let at = |what: &str| format!("row {}: bad {what} {:?}", line + 1, rec);
            let branch = match field(cb) {
                "pos" => Branch::Pos,
                "neg" => Branch::Neg,
                _ => return Err(at("branch")),
            };
            let k: usize = field(ck).parse().map_err(|_| at("k"))?;
            let float = |c: usize, what: &str| field(c).parse::<f64>().map_err(|_| at(what));
            let x = match cx {
                Some(c) => float(c, "x")?,
                None => f64::NAN,
            };
            rows.push(Row {
                point: Some(LatticePoint { branch, k }),
                x,
                value: C64::new(float(cre, "re")?, float(cim, "im")?),
            });
        }
        Ok(Table { rows })
    }

    /// Samples ordered as on `lattice`. Every lattice point must appear
    /// exactly once, and a supplied `x` must match the lattice value.
    pub fn samples_on(&self, lattice: &Lattice) -> Result<Vec<C64>, String> {
        let mut values = vec![None; lattice.len()];
        for r in &self.rows {
            let p = r.point.ok_or("row without a lattice point")?;
            let i = lattice.index_of(p).ok_or_else(|| {
                format!(
                    "{} k={} lies beyond K={}",
                    p.branch.label(),
                    p.k,
                    lattice.k_max()
                )
            })?;
            let want = lattice.values()[i];
            if !r.x.is_nan() && (r.x - want).abs() > 1e-12 * want.abs().max(1.0) {
                return Err(format!(
                    "{} k={}: x = {} does not match the lattice value {want}",
                    p.branch.label(),
                    p.k,
                    r.x
                ));
            }
            if values[i].replace(r.value).is_some() {
                return Err(format!("{} k={} appears twice", p.branch.label(), p.k));
            }
        }
        values
            .iter()
            .zip(lattice.points())
            .map(|(v, p)| v.ok_or_else(|| format!("{} k={} is missing", p.branch.label(), p.k)))
            .collect()
    }

    /// Deepest `k` among the rows.
    pub fn depth(&self) -> Option<usize> {
        self.rows.iter().filter_map(|r| r.point.map(|p| p.k)).max()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use qosc_core::QParams;

    #[test]
    fn csv_round_trip_is_textually_identical() {
        let lat = Lattice::with_depth(QParams::new(0.3, 1.7).unwrap(), 12).unwrap();
        let vals: Vec<C64> = lat
            .values()
            .iter()
            .map(|x| C64::new(x.sin() / 3.0, -x.exp() * 1e-7))
            .collect();
        let t = Table::from_samples(&lat, &vals);
        let mut first = Vec::new();
        t.write(Format::Csv, &mut first).unwrap();
        let back = Table::read_csv(first.as_slice()).unwrap();
        assert_eq!(back.samples_on(&lat).unwrap(), vals);
        let mut second = Vec::new();
        back.write(Format::Csv, &mut second).unwrap();
        assert_eq!(first, second);
    }

    #[test]
    fn schema_problems_are_reported() {
        let lat = Lattice::with_depth(QParams::new(0.5, 1.0).unwrap(), 1).unwrap();
        let missing = "branch,k,re,im\npos,0,1,0\npos,1,1,0\nneg,0,1,0\n";
        let t = Table::read_csv(missing.as_bytes()).unwrap();
        assert!(t.samples_on(&lat).unwrap_err().contains("missing"));
        assert!(Table::read_csv("branch,k,re\npos,0,1\n".as_bytes()).is_err());
        assert!(Table::read_csv("branch,k,re,im\nup,0,1,0\n".as_bytes()).is_err());
        let shifted = "branch,k,x,re,im\npos,0,0.9,1,0\n";
        let t = Table::read_csv(shifted.as_bytes()).unwrap();
        assert!(t.samples_on(&lat).unwrap_err().contains("does not match"));
    }
}
