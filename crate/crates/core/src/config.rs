//! TOML run configuration with one section per pipeline stage.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::constants::AMU;
use crate::error::{Error, Result};
use crate::io::{read_text, resolve, sha256_hex};
use crate::pes::{MassSpec, SplineEnd, StitchSpec};
use crate::polariton::{self, OverlapConvention, MAX_MOLECULES};
use crate::resonance::{
    default_theta_grid, FinderSpec, RefineSpec, SelectionSpec, DEFAULT_AMPLITUDE_FLOOR,
    DEFAULT_MIN_INTERIOR_FRACTION,
};
use crate::ses::{Discretization, KineticSpec, SesContour, Stencil};

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PiecewiseInput {
    pub breakpoints: Vec<f64>,
    /// Heights of the inner segments; both outer segments are zero.
    pub heights: Vec<f64>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct InputSection {
    /// Ready (r, V) table.
    pub curve: Option<PathBuf>,
    pub step1: Option<PathBuf>,
    pub step2: Option<PathBuf>,
    pub piecewise: Option<PiecewiseInput>,
}

/// Where the curve comes from, with paths resolved.
#[derive(Clone, Debug, PartialEq)]
pub enum CurveSource {
    Curve(PathBuf),
    Steps { step1: PathBuf, step2: PathBuf },
    Piecewise(PiecewiseInput),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MassSection {
    pub m_n_amu: f64,
    pub m_o_amu: f64,
}

impl Default for MassSection {
    fn default() -> Self {
        let m = MassSpec::default();
        Self {
            m_n_amu: m.m_n / AMU,
            m_o_amu: m.m_o / AMU,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StitchSection {
    pub no_ground_energy: f64,
    pub junction_tolerance: f64,
}

impl Default for StitchSection {
    fn default() -> Self {
        Self {
            no_ground_energy: 0.0,
            junction_tolerance: 1e-4,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridSection {
    /// Uniform points before padding.
    pub grid_points: usize,
    pub pad: usize,
    pub spline_end: SplineEnd,
    /// Spacing and half width used to sample piecewise inputs.
    pub spacing: f64,
    pub half_width: f64,
}

impl Default for GridSection {
    fn default() -> Self {
        Self {
            grid_points: 901,
            pad: 50,
            spline_end: SplineEnd::Natural,
            spacing: 0.05,
            half_width: 12.5,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ContourSection {
    pub theta: f64,
    pub lambda: f64,
    pub r_left: f64,
    pub r_right: f64,
}

impl Default for ContourSection {
    fn default() -> Self {
        Self {
            theta: 0.14,
            lambda: 2.0,
            r_left: 4.73,
            r_right: 4.35,
        }
    }
}

/// Which effective mass M enters ħ²/2M.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EffectiveMass {
    /// M = m_O/2, giving the prefactor 1/m_O.
    #[default]
    HalfOxygen,
    /// M = m_O, giving 1/(2 m_O).
    Oxygen,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct KineticSection {
    /// Overrides `effective_mass` when set.
    pub inverse_mass_prefactor: Option<f64>,
    pub effective_mass: EffectiveMass,
    pub stencil_order: u32,
    pub flat_tolerance: f64,
    /// Also write the reference Hamiltonian as row, col, re, im.
    pub dump_matrix: bool,
}

impl Default for KineticSection {
    fn default() -> Self {
        Self {
            inverse_mass_prefactor: None,
            effective_mass: EffectiveMass::HalfOxygen,
            stencil_order: 5,
            flat_tolerance: Discretization::default().flat_tolerance,
            dump_matrix: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ResonanceSection {
    /// Explicit grid; otherwise `theta_points` values over [theta_min, theta_max].
    pub theta_grid: Option<Vec<f64>>,
    pub theta_min: f64,
    pub theta_max: f64,
    pub theta_points: usize,
    pub max_states: usize,
    pub min_interior_fraction: f64,
    pub localization_window: Option<[f64; 2]>,
    pub energy_window: Option<[f64; 2]>,
    pub node_window: Option<[f64; 2]>,
    pub amplitude_floor: f64,
    pub cusp_threshold: Option<f64>,
    /// (upper, lower) node counts for the cavity frequency.
    pub cavity_pair: [usize; 2],
}

impl Default for ResonanceSection {
    fn default() -> Self {
        let grid = default_theta_grid();
        Self {
            theta_grid: None,
            theta_min: grid[0],
            theta_max: grid[grid.len() - 1],
            theta_points: grid.len(),
            max_states: 4,
            min_interior_fraction: DEFAULT_MIN_INTERIOR_FRACTION,
            localization_window: None,
            energy_window: None,
            node_window: None,
            amplitude_floor: DEFAULT_AMPLITUDE_FLOOR,
            cusp_threshold: None,
            cavity_pair: [3, 0],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PolaritonSection {
    /// Levels file; when absent the computed resonances are used.
    pub levels: Option<PathBuf>,
    pub single_epsilon: Option<Vec<f64>>,
    pub single_min: f64,
    pub single_max: f64,
    pub single_points: usize,
    pub ensemble_epsilon: Option<Vec<f64>>,
    pub ensemble_max: f64,
    pub ensemble_points: usize,
    pub n_mol: Vec<usize>,
    /// Level indices (upper, lower) of the ensemble two-level model.
    pub pair: [usize; 2],
    pub convention: OverlapConvention,
    pub max_molecules: usize,
}

impl Default for PolaritonSection {
    fn default() -> Self {
        Self {
            levels: None,
            single_epsilon: None,
            single_min: 1e-6,
            single_max: 1e-2,
            single_points: 60,
            ensemble_epsilon: None,
            ensemble_max: 1e-4,
            ensemble_points: 41,
            n_mol: vec![1, 2, 4, 6, 8, 10],
            pair: [3, 0],
            convention: OverlapConvention::Modulus,
            max_molecules: MAX_MOLECULES,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OraclePotential {
    pub name: String,
    pub breakpoints: Vec<f64>,
    pub heights: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OracleSection {
    pub potentials: Vec<OraclePotential>,
    /// Number of lowest poles compared per potential.
    pub poles: usize,
    pub scan_points: usize,
    pub refine: RefineSpec,
    /// Contour for the scaled solves (its θ replaces `contour.theta`).
    pub theta: f64,
    pub lambda: f64,
    pub r_switch: f64,
    /// Fraction of Σ|ψ|² required between the outer breakpoints.
    pub min_interior_fraction: f64,
}

impl Default for OracleSection {
    fn default() -> Self {
        Self {
            potentials: Vec::new(),
            poles: 3,
            scan_points: 6000,
            refine: RefineSpec::default(),
            theta: 0.5,
            lambda: 2.0,
            r_switch: 7.0,
            min_interior_fraction: 0.5,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSection {
    pub dir: Option<PathBuf>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub input: InputSection,
    pub masses: MassSection,
    pub stitch: StitchSection,
    pub grid: GridSection,
    pub contour: ContourSection,
    pub kinetic: KineticSection,
    pub resonances: ResonanceSection,
    pub polariton: PolaritonSection,
    pub oracle: OracleSection,
    pub output: OutputSection,
}

/// A parsed configuration together with where it came from.
#[derive(Clone, Debug)]
pub struct LoadedConfig {
    pub config: RunConfig,
    /// Directory relative paths are resolved against.
    pub base_dir: PathBuf,
    pub sha256: String,
}

fn window(w: Option<[f64; 2]>, name: &str) -> Result<Option<(f64, f64)>> {
    match w {
        Some([lo, hi]) if !(hi > lo) => Err(Error::Config(format!("{name} must satisfy lo < hi"))),
        Some([lo, hi]) => Ok(Some((lo, hi))),
        None => Ok(None),
    }
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<LoadedConfig> {
        let text = read_text(path)?;
        let config = Self::parse(&text)?;
        let base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        let loaded = LoadedConfig {
            sha256: sha256_hex(text.as_bytes()),
            config,
            base_dir,
        };
        loaded.validate()?;
        Ok(loaded)
    }

    pub fn masses(&self) -> Result<MassSpec> {
        MassSpec::new(self.masses.m_n_amu * AMU, self.masses.m_o_amu * AMU)
    }

    pub fn stitch(&self) -> Result<StitchSpec> {
        StitchSpec::new(self.stitch.no_ground_energy, self.stitch.junction_tolerance)
    }

    pub fn contour(&self) -> Result<SesContour> {
        let c = &self.contour;
        SesContour::new(c.theta, c.lambda, c.r_left, c.r_right)
    }

    pub fn kinetic(&self) -> Result<KineticSpec> {
        if let Some(p) = self.kinetic.inverse_mass_prefactor {
            return KineticSpec::new(p);
        }
        let m_o = self.masses()?.m_o;
        match self.kinetic.effective_mass {
            EffectiveMass::HalfOxygen => KineticSpec::from_mass(0.5 * m_o),
            EffectiveMass::Oxygen => KineticSpec::from_mass(m_o),
        }
    }

    pub fn discretization(&self) -> Result<Discretization> {
        if !(self.kinetic.flat_tolerance > 0.0) {
            return Err(Error::Config("flat_tolerance must be positive".into()));
        }
        Ok(Discretization {
            stencil: Stencil::from_order(self.kinetic.stencil_order)?,
            flat_tolerance: self.kinetic.flat_tolerance,
        })
    }

    pub fn theta_grid(&self) -> Result<Vec<f64>> {
        let s = &self.resonances;
        let grid = match &s.theta_grid {
            Some(g) => g.clone(),
            None if s.theta_points == 1 => vec![s.theta_min],
            None => polariton::linear_grid(s.theta_min, s.theta_max, s.theta_points)?,
        };
        if grid.is_empty() || grid.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Config(
                "theta grid must be non-empty and strictly increasing".into(),
            ));
        }
        if grid
            .iter()
            .any(|&t| !(0.0..std::f64::consts::FRAC_PI_4).contains(&t))
        {
            return Err(Error::Config(
                "theta grid values must lie in [0, pi/4)".into(),
            ));
        }
        Ok(grid)
    }

    pub fn finder(&self) -> Result<FinderSpec> {
        let s = &self.resonances;
        if !(0.0..=1.0).contains(&s.min_interior_fraction)
            || !(0.0..1.0).contains(&s.amplitude_floor)
        {
            return Err(Error::Config(
                "interior fraction and amplitude floor must lie in [0, 1]".into(),
            ));
        }
        if s.max_states == 0 {
            return Err(Error::Config("max_states must be at least 1".into()));
        }
        Ok(FinderSpec {
            theta_grid: self.theta_grid()?,
            selection: SelectionSpec {
                max_states: s.max_states,
                min_interior_fraction: s.min_interior_fraction,
                localization_window: window(s.localization_window, "localization_window")?,
                energy_window: window(s.energy_window, "energy_window")?,
            },
            node_window: window(s.node_window, "node_window")?,
            amplitude_floor: s.amplitude_floor,
            cusp_threshold: s.cusp_threshold,
        })
    }

    pub fn cavity_pair(&self) -> (usize, usize) {
        let [a, b] = self.resonances.cavity_pair;
        (a, b)
    }

    pub fn single_grid(&self) -> Result<Vec<f64>> {
        let p = &self.polariton;
        match &p.single_epsilon {
            Some(g) => Ok(g.clone()),
            None => polariton::log_grid_with_zero(p.single_min, p.single_max, p.single_points),
        }
    }

    pub fn ensemble_grid(&self) -> Result<Vec<f64>> {
        let p = &self.polariton;
        match &p.ensemble_epsilon {
            Some(g) => Ok(g.clone()),
            None => polariton::linear_grid(0.0, p.ensemble_max, p.ensemble_points),
        }
    }
}

impl LoadedConfig {
    pub fn from_parts(config: RunConfig, base_dir: PathBuf) -> Result<Self> {
        let text = toml::to_string(&config).map_err(|e| Error::Config(e.to_string()))?;
        let loaded = Self {
            sha256: sha256_hex(text.as_bytes()),
            config,
            base_dir,
        };
        loaded.validate()?;
        Ok(loaded)
    }

    pub fn path(&self, p: &Path) -> PathBuf {
        resolve(&self.base_dir, p)
    }

    pub fn curve_source(&self) -> Result<CurveSource> {
        let i = &self.config.input;
        match (&i.curve, &i.step1, &i.step2, &i.piecewise) {
            (Some(c), None, None, None) => Ok(CurveSource::Curve(self.path(c))),
            (None, Some(a), Some(b), None) => Ok(CurveSource::Steps {
                step1: self.path(a),
                step2: self.path(b),
            }),
            (None, None, None, Some(p)) => Ok(CurveSource::Piecewise(p.clone())),
            (None, None, None, None) => Err(Error::Config("[input] names no curve source".into())),
            _ => Err(Error::Config(
                "[input] must give exactly one of: curve, step1 + step2, piecewise".into(),
            )),
        }
    }

    pub fn levels_path(&self) -> Option<PathBuf> {
        self.config
            .polariton
            .levels
            .as_deref()
            .map(|p| self.path(p))
    }

    /// Checks ranges and that every referenced file exists.
    pub fn validate(&self) -> Result<()> {
        let c = &self.config;
        c.masses()?;
        c.contour()?;
        c.kinetic()?;
        c.discretization()?;
        c.finder()?;
        c.single_grid()?;
        c.ensemble_grid()?;
        if c.stitch.junction_tolerance <= 0.0 {
            return Err(Error::Config("junction_tolerance must be positive".into()));
        }
        if c.grid.grid_points < 4 {
            return Err(Error::Config("grid_points must be at least 4".into()));
        }
        if !(c.grid.spacing > 0.0 && c.grid.half_width > 0.0) {
            return Err(Error::Config(
                "grid spacing and half_width must be positive".into(),
            ));
        }
        let p = &c.polariton;
        if p.max_molecules == 0 || p.max_molecules > MAX_MOLECULES {
            return Err(Error::Config(format!(
                "max_molecules must be in 1..={MAX_MOLECULES}"
            )));
        }
        if let Some(&n) = p.n_mol.iter().find(|&&n| n == 0 || n > p.max_molecules) {
            return Err(Error::Limit(format!(
                "n_mol = {n} outside 1..={}",
                p.max_molecules
            )));
        }
        c.oracle.refine.validate()?;
        let mut files: Vec<PathBuf> = Vec::new();
        match self.curve_source() {
            Ok(CurveSource::Curve(p)) => files.push(p),
            Ok(CurveSource::Steps { step1, step2 }) => files.extend([step1, step2]),
            Ok(CurveSource::Piecewise(_)) => {}
            Err(e) if c.oracle.potentials.is_empty() && p.levels.is_none() => return Err(e),
            Err(_) => {}
        }
        files.extend(self.levels_path());
        if let Some(missing) = files.iter().find(|f| !f.is_file()) {
            return Err(Error::Config(format!(
                "referenced file {} does not exist",
                missing.display()
            )));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_sections_take_defaults() {
        let c = RunConfig::parse("[contour]\ntheta = 0.2\n").unwrap();
        assert_eq!(c.contour.theta, 0.2);
        assert_eq!(c.contour.lambda, 2.0);
        assert_eq!(c.theta_grid().unwrap().len(), 41);
        assert_eq!(c.single_grid().unwrap().len(), 61);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(matches!(
            RunConfig::parse("[contour]\ntheta_typo = 1\n"),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn printed_prefactor_is_default() {
        let c = RunConfig::default();
        let k = c.kinetic().unwrap();
        assert!(
            (k.inverse_mass_prefactor - KineticSpec::default().inverse_mass_prefactor).abs()
                < 1e-20
        );
    }

    #[test]
    fn ambiguous_input_is_rejected() {
        let mut c = RunConfig::default();
        c.input.curve = Some("a.csv".into());
        c.input.piecewise = Some(PiecewiseInput::default());
        let l = LoadedConfig {
            config: c,
            base_dir: PathBuf::new(),
            sha256: String::new(),
        };
        assert!(l.curve_source().is_err());
    }
}
