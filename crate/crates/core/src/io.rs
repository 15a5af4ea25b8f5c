//! Text tables in and out: step files, ready curves, result CSVs.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::linalg::{ComplexMatrix, C64};
use crate::pes::{PathPoint, PesCurve};
use crate::polariton::LevelSet;

/// One raw path row: separation, bond length, energy.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RawStepRow {
    pub index: f64,
    pub raw_sep: f64,
    pub raw_bond: f64,
    pub energy: f64,
}

pub fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes)
        .iter()
        .fold(String::new(), |mut s, b| {
            let _ = write!(s, "{b:02x}");
            s
        })
}

/// Numeric rows of a delimited table with one header line. Fields are
/// separated by commas and/or whitespace; blank lines are skipped.
fn parse_table(file: &Path, text: &str, columns: usize) -> Result<Vec<Vec<f64>>> {
    let parse_err = |line: usize, message: String| Error::Parse {
        file: file.to_path_buf(),
        line,
        message,
    };
    let mut lines = text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty());
    if lines.next().is_none() {
        return Err(parse_err(1, "missing header line".into()));
    }
    lines
        .map(|(i, line)| {
            let fields: Vec<&str> = line
                .split(|c: char| c == ',' || c.is_whitespace())
                .filter(|f| !f.is_empty())
                .collect();
            if fields.len() != columns {
                return Err(parse_err(
                    i + 1,
                    format!("expected {columns} columns, found {}", fields.len()),
                ));
            }
            fields
                .iter()
                .map(|f| {
                    f.parse::<f64>()
                        .ok()
                        .filter(|x| x.is_finite())
                        .ok_or_else(|| parse_err(i + 1, format!("'{f}' is not a finite number")))
                })
                .collect()
        })
        .collect()
}

/// Rows of index, raw_sep, raw_bond, energy.
pub fn parse_step_table(file: &Path, text: &str) -> Result<Vec<RawStepRow>> {
    Ok(parse_table(file, text, 4)?
        .into_iter()
        .map(|r| RawStepRow {
            index: r[0],
            raw_sep: r[1],
            raw_bond: r[2],
            energy: r[3],
        })
        .collect())
}

/// Two columns r, V.
pub fn parse_curve_table(file: &Path, text: &str) -> Result<PesCurve> {
    let rows = parse_table(file, text, 2)?;
    let (r, v) = rows.into_iter().map(|row| (row[0], row[1])).unzip();
    PesCurve::new(r, v).map_err(|e| Error::Parse {
        file: file.to_path_buf(),
        line: 0,
        message: e.to_string(),
    })
}

pub fn read_step_file(path: &Path) -> Result<Vec<RawStepRow>> {
    parse_step_table(path, &read_text(path)?)
}

pub fn read_curve_file(path: &Path) -> Result<PesCurve> {
    parse_curve_table(path, &read_text(path)?)
}

/// 17 significant digits, locale independent.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// Accumulates CSV text with a fixed header.
pub struct CsvTable {
    text: String,
    columns: usize,
}

impl CsvTable {
    pub fn new(header: &[&str]) -> Self {
        Self {
            text: format!("{}\n", header.join(",")),
            columns: header.len(),
        }
    }

    pub fn row(&mut self, fields: &[String]) {
        debug_assert_eq!(fields.len(), self.columns);
        self.text.push_str(&fields.join(","));
        self.text.push('\n');
    }

    pub fn into_string(self) -> String {
        self.text
    }
}

pub fn curve_csv(curve: &PesCurve) -> String {
    let mut t = CsvTable::new(&["r", "v"]);
    for (&r, &v) in curve.r().iter().zip(curve.v()) {
        t.row(&[fmt_f64(r), fmt_f64(v)]);
    }
    t.into_string()
}

/// Row, column, real and imaginary part of every entry.
pub fn matrix_csv(m: &ComplexMatrix) -> String {
    let mut t = CsvTable::new(&["row", "col", "re", "im"]);
    let n = m.dim();
    for i in 0..n {
        for j in 0..n {
            let z = m.get(i, j);
            t.row(&[i.to_string(), j.to_string(), fmt_f64(z.re), fmt_f64(z.im)]);
        }
    }
    t.into_string()
}

pub fn write_file(path: &Path, contents: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

pub fn to_json<T: Serialize>(value: &T) -> Result<String> {
    serde_json::to_string_pretty(value)
        .map(|s| s + "\n")
        .map_err(|e| Error::InvalidInput(format!("serialization failed: {e}")))
}

/// One transition dipole entry of a levels file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DipoleEntry {
    pub i: usize,
    pub j: usize,
    pub re: f64,
    #[serde(default)]
    pub im: f64,
}

/// Levels supplied directly instead of from a resonance run. Each dipole
/// listed once applies to both orderings of the pair.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LevelsFile {
    pub e_r: Vec<f64>,
    pub gamma: Vec<f64>,
    pub dipoles: Vec<DipoleEntry>,
    #[serde(default)]
    pub hbar_omega: Option<f64>,
}

impl LevelsFile {
    pub fn into_levels(self, source: &Path) -> Result<LevelSet> {
        let n = self.e_r.len();
        let mut d = vec![vec![C64::new(f64::NAN, f64::NAN); n]; n];
        for (i, row) in d.iter_mut().enumerate() {
            row[i] = C64::new(0.0, 0.0);
        }
        for e in &self.dipoles {
            if e.i >= n || e.j >= n {
                return Err(Error::Config(format!(
                    "{}: dipole ({}, {}) refers to a missing level",
                    source.display(),
                    e.i,
                    e.j
                )));
            }
            d[e.i][e.j] = C64::new(e.re, e.im);
            d[e.j][e.i] = C64::new(e.re, e.im);
        }
        LevelSet::new(self.e_r, self.gamma, d, self.hbar_omega)
            .map_err(|e| Error::Config(format!("{}: {e}", source.display())))
    }
}

pub fn read_levels(path: &Path) -> Result<LevelSet> {
    let text = read_text(path)?;
    let file: LevelsFile = serde_json::from_str(&text)
        .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    file.into_levels(path)
}

/// Path relative to `base` unless already absolute.
pub fn resolve(base: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

pub fn path_points(
    rows: &[RawStepRow],
    weight: impl Fn(f64, f64) -> Result<(f64, f64)>,
) -> Result<Vec<PathPoint>> {
    rows.iter()
        .map(|row| {
            let (x, y) = weight(row.raw_sep, row.raw_bond)?;
            Ok(PathPoint {
                x,
                y,
                energy: row.energy,
            })
        })
        .collect()
}
