//! Subcommand drivers. Each command collects its output files in memory and
//! writes them together with a manifest carrying the config hash.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use log::info;
use serde::Serialize;

use crate::config::{CurveSource, LoadedConfig, OraclePotential};
use crate::error::{Error, Result};
use crate::io::{self, fmt_f64, sha256_hex, CsvTable};
use crate::linalg::C64;
use crate::oracle::{poles_from_scan, PiecewisePotential};
use crate::pes::{
    augment_grid, curve_from_path, mass_weight, resample_uniform, stitch_curves, PesCurve, Step,
};
use crate::polariton::{self, LevelSet, RateCurve};
use crate::resonance::{
    cavity_from_gap, find_resonances, half_integer_grid, refined_poles, CavitySpec, RefinedPole,
    ResonanceReport, Role, SelectionSpec,
};
use crate::ses::{self, Discretization, SesContour, Stencil};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Files produced by a run, keyed by name relative to the output directory.
#[derive(Debug, Default)]
pub struct OutputSet {
    files: BTreeMap<String, String>,
}

#[derive(Serialize)]
struct ManifestEntry<'a> {
    file: &'a str,
    sha256: String,
}

#[derive(Serialize)]
struct Manifest<'a> {
    version: &'a str,
    config_sha256: &'a str,
    files: Vec<ManifestEntry<'a>>,
}

impl OutputSet {
    pub fn insert(&mut self, name: &str, contents: String) {
        self.files.insert(name.to_string(), contents);
    }

    pub fn get(&self, name: &str) -> Option<&str> {
        self.files.get(name).map(String::as_str)
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.files.keys().map(String::as_str)
    }

    pub fn extend(&mut self, other: OutputSet) {
        self.files.extend(other.files);
    }

    /// Writes every file plus `manifest.json`.
    pub fn write(&self, dir: &Path, config_sha256: &str) -> Result<()> {
        for (name, contents) in &self.files {
            io::write_file(&dir.join(name), contents)?;
        }
        let manifest = Manifest {
            version: VERSION,
            config_sha256,
            files: self
                .files
                .iter()
                .map(|(file, contents)| ManifestEntry {
                    file,
                    sha256: sha256_hex(contents.as_bytes()),
                })
                .collect(),
        };
        io::write_file(&dir.join("manifest.json"), &io::to_json(&manifest)?)
    }
}

#[derive(Serialize)]
struct InputRecord {
    path: String,
    sha256: String,
}

#[derive(Serialize)]
struct Provenance<'a> {
    version: &'a str,
    config_sha256: &'a str,
    source: &'a str,
    inputs: Vec<InputRecord>,
    grid_points: usize,
    spacing: Option<f64>,
    r_min: f64,
    r_max: f64,
    parameters: serde_json::Value,
}

fn record(cfg: &LoadedConfig, path: &Path) -> Result<InputRecord> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    let shown = path.strip_prefix(&cfg.base_dir).unwrap_or(path);
    Ok(InputRecord {
        path: shown.to_string_lossy().replace('\\', "/"),
        sha256: sha256_hex(&bytes),
    })
}

fn step_curve(cfg: &LoadedConfig, path: &Path, step: Step) -> Result<PesCurve> {
    let masses = cfg.config.masses()?;
    let rows = io::read_step_file(path)?;
    let points = io::path_points(&rows, |sep, bond| mass_weight(step, sep, bond, &masses))?;
    curve_from_path(&points, step).map_err(|e| Error::Parse {
        file: path.to_path_buf(),
        line: 0,
        message: e.to_string(),
    })
}

/// Uniform curve sampled from a piecewise-constant potential on the
/// half-integer grid.
pub fn piecewise_curve(
    pot: &PiecewisePotential,
    spacing: f64,
    half_width: f64,
) -> Result<PesCurve> {
    let r = half_integer_grid(spacing, half_width)?;
    let v = r.iter().map(|&x| pot.value(x)).collect();
    PesCurve::new(r, v)
}

/// Builds the Hamiltonian-ready curve and its provenance record.
pub fn cmd_ingest(cfg: &LoadedConfig) -> Result<(PesCurve, OutputSet)> {
    let c = &cfg.config;
    let g = &c.grid;
    let (curve, source, inputs) = match cfg.curve_source()? {
        CurveSource::Curve(path) => {
            let raw = io::read_curve_file(&path)?;
            let curve = augment_grid(&resample_uniform(&raw, g.grid_points, g.spline_end)?, g.pad)?;
            (curve, "curve", vec![record(cfg, &path)?])
        }
        CurveSource::Steps { step1, step2 } => {
            let s1 = step_curve(cfg, &step1, Step::One)?;
            let s2 = step_curve(cfg, &step2, Step::Two)?;
            let joined = stitch_curves(&s1, &s2, &c.stitch()?)?;
            let curve = augment_grid(
                &resample_uniform(&joined, g.grid_points, g.spline_end)?,
                g.pad,
            )?;
            (
                curve,
                "steps",
                vec![record(cfg, &step1)?, record(cfg, &step2)?],
            )
        }
        CurveSource::Piecewise(p) => {
            let pot = PiecewisePotential::from_inner(p.breakpoints.clone(), &p.heights)?;
            (
                piecewise_curve(&pot, g.spacing, g.half_width)?,
                "piecewise",
                Vec::new(),
            )
        }
    };
    info!("prepared curve: {} points", curve.len());
    let parameters = serde_json::json!({
        "input": c.input,
        "masses": c.masses,
        "stitch": c.stitch,
        "grid": c.grid,
    });
    let provenance = Provenance {
        version: VERSION,
        config_sha256: &cfg.sha256,
        source,
        inputs,
        grid_points: curve.len(),
        spacing: curve.spacing(),
        r_min: curve.r()[0],
        r_max: curve.r()[curve.len() - 1],
        parameters,
    };
    let mut out = OutputSet::default();
    out.insert("curve.csv", io::curve_csv(&curve));
    out.insert("provenance.json", io::to_json(&provenance)?);
    Ok((curve, out))
}

fn role_name(role: Option<Role>) -> &'static str {
    match role {
        Some(Role::Ts) => "ts",
        Some(Role::Gr) => "gr",
        None => "",
    }
}

#[derive(Serialize)]
struct ResonanceSummary<'a> {
    theta_reference: f64,
    theta_dipole: f64,
    boundary_warning: bool,
    warnings: &'a [String],
    max_dipole_asymmetry: f64,
}

/// Photon energy, wavelength and mirror distance for every state paired with
/// the TS, in the layout of a results table.
fn table_report(report: &ResonanceReport) -> Result<String> {
    let mut s = String::from("nodes  e_r_hartree           gamma_hartree       gap_to_ts_hartree   wavelength_um   mirror_um\n");
    let ts = report
        .by_role(Role::Ts)
        .ok_or_else(|| Error::Classification {
            missing: 3,
            found: report.resonances.iter().map(|r| r.nodes).collect(),
        })?;
    for r in &report.resonances {
        let gap = ts.e_r - r.e_r;
        let (wl, mirror) = match CavitySpec::from_gap(gap, (ts.nodes, r.nodes)) {
            Ok(c) => (
                format!("{:.7}", c.wavelength_um),
                format!("{:.7}", c.mirror_distance_um),
            ),
            Err(_) => ("-".into(), "-".into()),
        };
        s.push_str(&format!(
            "{:<6} {:<21.10} {:<19.6e} {:<19.7} {:<15} {}\n",
            r.nodes, r.e_r, r.gamma, gap, wl, mirror
        ));
    }
    Ok(s)
}

/// Resonance search on the prepared curve.
pub fn cmd_resonances(
    cfg: &LoadedConfig,
    curve: &PesCurve,
) -> Result<(ResonanceReport, OutputSet)> {
    let c = &cfg.config;
    let contour = c.contour()?;
    let kin = c.kinetic()?;
    let disc = c.discretization()?;
    let spec = c.finder()?;
    let report = find_resonances(curve, &contour, &kin, &disc, &spec)?;
    let cavity = cavity_from_gap(&report.resonances, c.cavity_pair())?;

    let mut out = OutputSet::default();
    let mut t = CsvTable::new(&[
        "node",
        "e_r",
        "gamma",
        "theta_star",
        "interior_fraction",
        "role",
        "source",
    ]);
    for r in &report.resonances {
        t.row(&[
            r.nodes.to_string(),
            fmt_f64(r.e_r),
            fmt_f64(r.gamma),
            fmt_f64(r.theta_star),
            fmt_f64(r.interior_fraction),
            role_name(r.role).into(),
            "ses".into(),
        ]);
    }
    out.insert("resonances.csv", t.into_string());

    let mut t = CsvTable::new(&["state_id", "theta", "re_e", "im_e"]);
    for (k, traj) in report.trajectories.iter().enumerate() {
        for (theta, e) in traj.theta_values.iter().zip(&traj.energies) {
            t.row(&[k.to_string(), fmt_f64(*theta), fmt_f64(e.re), fmt_f64(e.im)]);
        }
    }
    out.insert("trajectory.csv", t.into_string());

    let mut t = CsvTable::new(&["i", "j", "re_d", "im_d"]);
    for (i, row) in report.dipoles.d.iter().enumerate() {
        for (j, d) in row.iter().enumerate() {
            t.row(&[i.to_string(), j.to_string(), fmt_f64(d.re), fmt_f64(d.im)]);
        }
    }
    out.insert("dipoles.csv", t.into_string());
    out.insert("cavity.json", io::to_json(&cavity)?);
    out.insert(
        "resonance_summary.json",
        io::to_json(&ResonanceSummary {
            theta_reference: contour.theta,
            theta_dipole: report.theta_dipole,
            boundary_warning: report.resonances.iter().any(|r| r.boundary_warning),
            warnings: &report.warnings,
            max_dipole_asymmetry: report.dipoles.max_asymmetry(),
        })?,
    );
    out.insert("table_summary.txt", table_report(&report)?);
    if c.kinetic.dump_matrix {
        let h = ses::assemble_hamiltonian(curve, &contour, &kin, &disc)?;
        out.insert("hamiltonian.csv", io::matrix_csv(&h));
    }
    Ok((report, out))
}

/// Four levels with nodes 0..3 from a resonance report, dipoles included.
pub fn levels_from_report(report: &ResonanceReport) -> Result<LevelSet> {
    let idx = (0..4)
        .map(|n| {
            report.index_of_nodes(n).ok_or_else(|| {
                Error::Config(format!(
                    "no {n}-node resonance available for the polariton model"
                ))
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let e_r = idx.iter().map(|&i| report.resonances[i].e_r).collect();
    let gamma = idx.iter().map(|&i| report.resonances[i].gamma).collect();
    let dipoles = idx
        .iter()
        .map(|&i| idx.iter().map(|&j| report.dipoles.get(i, j)).collect())
        .collect();
    LevelSet::new(e_r, gamma, dipoles, None)
}

#[derive(Serialize)]
struct CurveSummary {
    n_mol: usize,
    min_ratio: f64,
    epsilon_at_min: f64,
    rows: usize,
}

#[derive(Serialize)]
struct PolaritonSummary {
    hbar_omega: f64,
    pair: [usize; 2],
    convention: polariton::OverlapConvention,
    gamma_ts: f64,
    single: CurveSummary,
    ensemble: Vec<CurveSummary>,
}

fn summarize(curve: &RateCurve) -> CurveSummary {
    let (epsilon_at_min, min_ratio) = curve.min_ratio();
    CurveSummary {
        n_mol: curve.n_mol,
        min_ratio,
        epsilon_at_min,
        rows: curve.epsilon.len(),
    }
}

/// Single-molecule and ensemble coupling sweeps.
pub fn cmd_polariton(cfg: &LoadedConfig, levels: &LevelSet) -> Result<(Vec<RateCurve>, OutputSet)> {
    let p = &cfg.config.polariton;
    let single = polariton::single_curve(levels, &cfg.config.single_grid()?, p.convention)?;
    let pair = levels.pair(p.pair[0], p.pair[1])?;
    let grid = cfg.config.ensemble_grid()?;
    let mut ensemble = Vec::with_capacity(p.n_mol.len());
    for &n in &p.n_mol {
        info!("ensemble sweep N = {n} over {} couplings", grid.len());
        ensemble.push(polariton::ratio_curve(&pair, n, &grid, p.convention)?);
    }

    let mut out = OutputSet::default();
    let mut t = CsvTable::new(&["epsilon", "gamma_polariton", "ratio_to_eps0"]);
    for ((e, g), r) in single.epsilon.iter().zip(&single.gamma).zip(&single.ratio) {
        t.row(&[fmt_f64(*e), fmt_f64(*g), fmt_f64(*r)]);
    }
    out.insert("rates_single.csv", t.into_string());
    let mut t = CsvTable::new(&["n_mol", "epsilon", "gamma_cav", "ratio"]);
    for curve in &ensemble {
        for ((e, g), r) in curve.epsilon.iter().zip(&curve.gamma).zip(&curve.ratio) {
            t.row(&[
                curve.n_mol.to_string(),
                fmt_f64(*e),
                fmt_f64(*g),
                fmt_f64(*r),
            ]);
        }
    }
    out.insert("rates_ensemble.csv", t.into_string());
    out.insert(
        "polariton_summary.json",
        io::to_json(&PolaritonSummary {
            hbar_omega: levels.hbar_omega,
            pair: p.pair,
            convention: p.convention,
            gamma_ts: levels.gamma[3],
            single: summarize(&single),
            ensemble: ensemble.iter().map(summarize).collect(),
        })?,
    );
    let mut curves = vec![single];
    curves.extend(ensemble);
    Ok((curves, out))
}

/// One potential's comparison between grid-refined and transfer-matrix poles.
#[derive(Clone, Debug, Serialize)]
pub struct OracleComparison {
    pub name: String,
    pub ses: Vec<RefinedPole>,
    pub tm: Vec<C64>,
    /// Per pole: (relative error in Re, relative error in Im).
    pub relative_error: Vec<(f64, f64)>,
}

impl OracleComparison {
    pub fn max_error(&self) -> f64 {
        self.relative_error
            .iter()
            .map(|&(a, b)| a.max(b))
            .fold(0.0, f64::max)
    }
}

/// Grid-refined scaled poles of a piecewise potential next to its
/// transfer-matrix poles, lowest `cfg.oracle.poles` of each.
pub fn compare_with_oracle(cfg: &LoadedConfig, spec: &OraclePotential) -> Result<OracleComparison> {
    let o = &cfg.config.oracle;
    let kin = cfg.config.kinetic()?;
    let pot = PiecewisePotential::from_inner(spec.breakpoints.clone(), &spec.heights)?;
    let top = pot.max_height();
    let tm: Vec<C64> = poles_from_scan(&pot, &kin, 1e-3 * top, top, o.scan_points)?
        .into_iter()
        .take(o.poles)
        .map(|p| p.energy)
        .collect();
    if tm.len() < o.poles {
        return Err(Error::Config(format!(
            "potential '{}' has only {} poles below its barrier top",
            spec.name,
            tm.len()
        )));
    }
    let contour = SesContour::new(o.theta, o.lambda, o.r_switch, o.r_switch)?;
    let disc = Discretization {
        stencil: Stencil::ThreePoint,
        flat_tolerance: cfg.config.kinetic.flat_tolerance,
    };
    let bps = pot.breakpoints();
    let selection = SelectionSpec {
        max_states: o.poles,
        min_interior_fraction: o.min_interior_fraction,
        localization_window: Some((bps[0], bps[bps.len() - 1])),
        energy_window: None,
    };
    let well = if bps.len() >= 4 {
        (bps[1], bps[bps.len() - 2])
    } else {
        (bps[0], bps[bps.len() - 1])
    };
    let ses = refined_poles(
        |x| pot.value(x),
        &o.refine,
        &contour,
        &kin,
        &disc,
        &selection,
        well,
        cfg.config.resonances.amplitude_floor,
    )?;
    let relative_error = tm
        .iter()
        .map(|t| {
            let s = ses
                .iter()
                .map(|p| p.energy)
                .min_by(|a, b| (a - t).norm().total_cmp(&(b - t).norm()))
                .unwrap_or(C64::new(f64::NAN, f64::NAN));
            (
                (s.re - t.re).abs() / t.re.abs(),
                (s.im - t.im).abs() / t.im.abs(),
            )
        })
        .collect();
    Ok(OracleComparison {
        name: spec.name.clone(),
        ses,
        tm,
        relative_error,
    })
}

#[derive(Serialize)]
struct OracleSummaryEntry<'a> {
    name: &'a str,
    max_relative_error: f64,
    relative_error: &'a [(f64, f64)],
}

pub fn cmd_oracle(cfg: &LoadedConfig) -> Result<(Vec<OracleComparison>, OutputSet)> {
    let o = &cfg.config.oracle;
    if o.potentials.is_empty() {
        return Err(Error::Config("[oracle] lists no potentials".into()));
    }
    let comparisons = o
        .potentials
        .iter()
        .map(|p| compare_with_oracle(cfg, p))
        .collect::<Result<Vec<_>>>()?;
    let mut t = CsvTable::new(&[
        "potential",
        "node",
        "e_r",
        "gamma",
        "theta_star",
        "interior_fraction",
        "role",
        "source",
    ]);
    for c in &comparisons {
        for p in &c.ses {
            t.row(&[
                c.name.clone(),
                p.nodes.to_string(),
                fmt_f64(p.energy.re),
                fmt_f64(-2.0 * p.energy.im),
                fmt_f64(o.theta),
                fmt_f64(p.interior_fraction),
                String::new(),
                "ses".into(),
            ]);
        }
        for (k, e) in c.tm.iter().enumerate() {
            t.row(&[
                c.name.clone(),
                k.to_string(),
                fmt_f64(e.re),
                fmt_f64(-2.0 * e.im),
                String::new(),
                String::new(),
                String::new(),
                "tm_oracle".into(),
            ]);
        }
    }
    let mut out = OutputSet::default();
    out.insert("oracle.csv", t.into_string());
    let summary: Vec<OracleSummaryEntry> = comparisons
        .iter()
        .map(|c| OracleSummaryEntry {
            name: &c.name,
            max_relative_error: c.max_error(),
            relative_error: &c.relative_error,
        })
        .collect();
    out.insert("oracle_summary.json", io::to_json(&summary)?);
    Ok((comparisons, out))
}

/// Levels from the configured file, or else from a fresh resonance report.
fn levels_for(cfg: &LoadedConfig, report: Option<&ResonanceReport>) -> Result<LevelSet> {
    match (cfg.levels_path(), report) {
        (Some(path), _) => io::read_levels(&path),
        (None, Some(r)) => levels_from_report(r),
        (None, None) => Err(Error::Config(
            "polariton stage needs [polariton] levels or a resonance run".into(),
        )),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Command {
    Ingest,
    Resonances,
    Polariton,
    Oracle,
    All,
}

/// Output directory: the flag, else `[output] dir` relative to the config,
/// else `out`.
pub fn output_dir(cfg: &LoadedConfig, flag: Option<&Path>) -> PathBuf {
    match (flag, &cfg.config.output.dir) {
        (Some(dir), _) => dir.to_path_buf(),
        (None, Some(dir)) => cfg.path(dir),
        (None, None) => PathBuf::from("out"),
    }
}

/// Runs a command and returns everything it would write.
pub fn execute(cfg: &LoadedConfig, command: Command) -> Result<OutputSet> {
    let mut out = OutputSet::default();
    match command {
        Command::Ingest => out.extend(cmd_ingest(cfg)?.1),
        Command::Resonances => {
            let (curve, files) = cmd_ingest(cfg)?;
            out.extend(files);
            out.extend(cmd_resonances(cfg, &curve)?.1);
        }
        Command::Polariton => {
            let report = if cfg.levels_path().is_none() {
                let (curve, files) = cmd_ingest(cfg)?;
                out.extend(files);
                let (report, files) = cmd_resonances(cfg, &curve)?;
                out.extend(files);
                Some(report)
            } else {
                None
            };
            out.extend(cmd_polariton(cfg, &levels_for(cfg, report.as_ref())?)?.1);
        }
        Command::Oracle => out.extend(cmd_oracle(cfg)?.1),
        Command::All => {
            let (curve, files) = cmd_ingest(cfg)?;
            out.extend(files);
            let (report, files) = cmd_resonances(cfg, &curve)?;
            out.extend(files);
            out.extend(cmd_polariton(cfg, &levels_for(cfg, Some(&report))?)?.1);
            if !cfg.config.oracle.potentials.is_empty() {
                out.extend(cmd_oracle(cfg)?.1);
            }
        }
    }
    Ok(out)
}

/// `execute` followed by writing the files and manifest into `dir`.
pub fn run(cfg: &LoadedConfig, command: Command, dir: &Path) -> Result<OutputSet> {
    let out = execute(cfg, command)?;
    out.write(dir, &cfg.sha256)?;
    info!("wrote {} files to {}", out.files.len() + 1, dir.display());
    Ok(out)
}
