//! Reaction-path preparation: mass weighting, arc length, stitching of the two
//! reaction steps, uniform resampling and end padding.

mod spline;

pub use spline::{CubicSpline, SplineEnd};

use serde::{Deserialize, Serialize};

use crate::constants::{AMU, NITROGEN_14_AMU, OXYGEN_16_AMU};
use crate::error::{Error, Result};

/// Relative tolerance on successive spacings for a grid to count as uniform.
pub const UNIFORM_TOLERANCE: f64 = 1e-12;

/// Atomic masses in electron masses.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MassSpec {
    pub m_n: f64,
    pub m_o: f64,
}

impl Default for MassSpec {
    fn default() -> Self {
        Self {
            m_n: NITROGEN_14_AMU * AMU,
            m_o: OXYGEN_16_AMU * AMU,
        }
    }
}

impl MassSpec {
    pub fn new(m_n: f64, m_o: f64) -> Result<Self> {
        let spec = Self { m_n, m_o };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.m_n > 0.0 && self.m_o > 0.0) || !self.m_n.is_finite() || !self.m_o.is_finite() {
            return Err(Error::InvalidInput(format!(
                "masses must be positive and finite (m_N = {}, m_O = {})",
                self.m_n, self.m_o
            )));
        }
        Ok(())
    }

    /// Reduced mass of O2 against NO.
    pub fn mu_o2_no(&self) -> f64 {
        1.0 / (1.0 / (2.0 * self.m_o) + 1.0 / (self.m_n + self.m_o))
    }

    pub fn mu_o2(&self) -> f64 {
        self.m_o / 2.0
    }

    /// Reduced mass of NO3 against NO.
    pub fn mu_no3_no(&self) -> f64 {
        1.0 / (1.0 / (self.m_n + 3.0 * self.m_o) + 1.0 / (self.m_n + self.m_o))
    }

    pub fn mu_no(&self) -> f64 {
        self.m_n * self.m_o / (self.m_n + self.m_o)
    }
}

/// One point of a reaction path in mass-weighted coordinates.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PathPoint {
    pub x: f64,
    pub y: f64,
    pub energy: f64,
}

/// Which reaction step a raw path belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Step {
    /// O2 + NO forming NO3; the arc length decreases along the path.
    One,
    /// NO3 + NO forming the products; the arc length increases along the path.
    Two,
}

impl Step {
    pub fn direction(self) -> Direction {
        match self {
            Step::One => Direction::Decreasing,
            Step::Two => Direction::Increasing,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    Decreasing,
    Increasing,
}

fn check_distance(name: &str, d: f64) -> Result<()> {
    if !(d >= 0.0) || !d.is_finite() {
        return Err(Error::InvalidInput(format!(
            "{name} must be a non-negative distance, got {d}"
        )));
    }
    Ok(())
}

/// Mass-weighted (x, y) for step 1: O2 to NO separation and the O2 bond.
pub fn mass_weight_step1(raw_sep: f64, raw_bond: f64, masses: &MassSpec) -> Result<(f64, f64)> {
    masses.validate()?;
    check_distance("separation", raw_sep)?;
    check_distance("bond length", raw_bond)?;
    Ok((
        raw_sep * (masses.mu_o2_no() / masses.m_o).sqrt(),
        raw_bond * (masses.mu_o2() / masses.m_o).sqrt(),
    ))
}

/// Mass-weighted (x, y) for step 2: NO3 to NO separation and the NO bond.
pub fn mass_weight_step2(raw_sep: f64, raw_bond: f64, masses: &MassSpec) -> Result<(f64, f64)> {
    masses.validate()?;
    check_distance("separation", raw_sep)?;
    check_distance("bond length", raw_bond)?;
    Ok((
        raw_sep * (masses.mu_no3_no() / masses.m_o).sqrt(),
        raw_bond * (masses.mu_no() / masses.m_o).sqrt(),
    ))
}

pub fn mass_weight(
    step: Step,
    raw_sep: f64,
    raw_bond: f64,
    masses: &MassSpec,
) -> Result<(f64, f64)> {
    match step {
        Step::One => mass_weight_step1(raw_sep, raw_bond, masses),
        Step::Two => mass_weight_step2(raw_sep, raw_bond, masses),
    }
}

/// Arc length along the path starting from zero at the first point; each
/// Euclidean step is subtracted or added according to `direction`.
pub fn arc_length_coordinate(points: &[PathPoint], direction: Direction) -> Result<Vec<f64>> {
    if points.is_empty() {
        return Err(Error::InvalidInput(
            "arc length needs at least one path point".into(),
        ));
    }
    let sign = match direction {
        Direction::Decreasing => -1.0,
        Direction::Increasing => 1.0,
    };
    let mut r = Vec::with_capacity(points.len());
    r.push(0.0);
    let mut acc = 0.0;
    for w in points.windows(2) {
        acc += sign * (w[1].x - w[0].x).hypot(w[1].y - w[0].y);
        r.push(acc);
    }
    Ok(r)
}

/// Potential energy tabulated along the reaction coordinate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PesCurve {
    r: Vec<f64>,
    v: Vec<f64>,
    spacing: Option<f64>,
}

impl PesCurve {
    pub fn new(r: Vec<f64>, v: Vec<f64>) -> Result<Self> {
        if r.len() != v.len() {
            return Err(Error::InvalidInput(format!(
                "r and V lengths differ ({} vs {})",
                r.len(),
                v.len()
            )));
        }
        if r.len() < 2 {
            return Err(Error::InvalidInput(
                "a curve needs at least two points".into(),
            ));
        }
        if r.iter().chain(&v).any(|x| !x.is_finite()) {
            return Err(Error::InvalidInput(
                "curve contains non-finite values".into(),
            ));
        }
        if let Some(i) = r.windows(2).position(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidInput(format!(
                "r must be strictly increasing (violated between points {} and {})",
                i,
                i + 1
            )));
        }
        let spacing = uniform_spacing(&r);
        Ok(Self { r, v, spacing })
    }

    /// Samples `f` at `start + i * spacing` for `i = 0..n`.
    pub fn sample_uniform(
        start: f64,
        spacing: f64,
        n: usize,
        f: impl Fn(f64) -> f64,
    ) -> Result<Self> {
        if !(spacing > 0.0) {
            return Err(Error::InvalidInput(format!(
                "spacing must be positive, got {spacing}"
            )));
        }
        let r: Vec<f64> = (0..n).map(|i| start + i as f64 * spacing).collect();
        let v = r.iter().map(|&x| f(x)).collect();
        Self::new(r, v)
    }

    pub fn r(&self) -> &[f64] {
        &self.r
    }

    pub fn v(&self) -> &[f64] {
        &self.v
    }

    pub fn len(&self) -> usize {
        self.r.len()
    }

    pub fn is_empty(&self) -> bool {
        self.r.is_empty()
    }

    pub fn is_uniform(&self) -> bool {
        self.spacing.is_some()
    }

    pub fn spacing(&self) -> Option<f64> {
        self.spacing
    }

    fn require_uniform(&self) -> Result<f64> {
        self.spacing
            .ok_or_else(|| Error::InvalidInput("operation requires a uniform grid".into()))
    }
}

fn uniform_spacing(r: &[f64]) -> Option<f64> {
    let n = r.len();
    let h = (r[n - 1] - r[0]) / (n - 1) as f64;
    r.windows(2)
        .all(|w| ((w[1] - w[0]) - h).abs() <= UNIFORM_TOLERANCE * h)
        .then_some(h)
}

/// Reaction-path curve built from ordered path points of one step.
pub fn curve_from_path(points: &[PathPoint], step: Step) -> Result<PesCurve> {
    let r = arc_length_coordinate(points, step.direction())?;
    let mut pairs: Vec<(f64, f64)> = r.into_iter().zip(points.iter().map(|p| p.energy)).collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let (r, v) = pairs.into_iter().unzip();
    PesCurve::new(r, v)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StitchSpec {
    /// Energy of isolated NO at its equilibrium bond length (hartree).
    pub no_ground_energy: f64,
    /// Largest allowed energy mismatch at the junction (hartree).
    pub junction_tolerance: f64,
}

impl StitchSpec {
    pub fn new(no_ground_energy: f64, junction_tolerance: f64) -> Result<Self> {
        if !(junction_tolerance > 0.0) {
            return Err(Error::InvalidInput(format!(
                "junction tolerance must be positive, got {junction_tolerance}"
            )));
        }
        Ok(Self {
            no_ground_energy,
            junction_tolerance,
        })
    }
}

/// Joins the two reaction steps into one curve running from the reactant
/// asymptote (at r = 0) to the products.
///
/// Step 1 runs toward decreasing r, so its reactant end is its largest r and
/// its junction end its smallest; step 2 starts at its smallest r. Step-1
/// energies are raised by the NO ground energy, and the duplicated junction
/// point of step 2 is dropped.
pub fn stitch_curves(step1: &PesCurve, step2: &PesCurve, spec: &StitchSpec) -> Result<PesCurve> {
    if !(spec.junction_tolerance > 0.0) {
        return Err(Error::InvalidInput(
            "junction tolerance must be positive".into(),
        ));
    }
    let n1 = step1.len();
    let top = step1.r[n1 - 1];
    let junction1 = step1.v[0] + spec.no_ground_energy;
    let gap = (junction1 - step2.v[0]).abs();
    if gap > spec.junction_tolerance {
        return Err(Error::StitchMismatch {
            gap,
            tolerance: spec.junction_tolerance,
        });
    }

    let mut r = Vec::with_capacity(n1 + step2.len() - 1);
    let mut v = Vec::with_capacity(r.capacity());
    for i in (0..n1).rev() {
        r.push(top - step1.r[i]);
        v.push(step1.v[i] + spec.no_ground_energy);
    }
    let join = top - step1.r[0];
    let start2 = step2.r[0];
    for i in 1..step2.len() {
        r.push(join + (step2.r[i] - start2));
        v.push(step2.v[i]);
    }
    PesCurve::new(r, v)
}

/// Cubic-spline resampling onto `n_points` equidistant points spanning the
/// curve.
pub fn resample_uniform(curve: &PesCurve, n_points: usize, end: SplineEnd) -> Result<PesCurve> {
    if n_points < 4 {
        return Err(Error::InvalidInput(format!(
            "resampling needs at least 4 points, got {n_points}"
        )));
    }
    let (a, b) = (curve.r[0], curve.r[curve.len() - 1]);
    let h = (b - a) / (n_points - 1) as f64;
    if curve.len() == n_points && curve.is_uniform() {
        return Ok(curve.clone());
    }
    let spline = CubicSpline::new(&curve.r, &curve.v, end)?;
    let mut r: Vec<f64> = (0..n_points).map(|i| a + i as f64 * h).collect();
    r[n_points - 1] = b;
    let v = r.iter().map(|&x| spline.eval(x)).collect();
    PesCurve::new(r, v)
}

/// Extends a uniform curve by `n_pad` points on each side at the same spacing,
/// holding the end energies fixed.
pub fn augment_grid(curve: &PesCurve, n_pad: usize) -> Result<PesCurve> {
    let h = curve.require_uniform()?;
    let n = curve.len();
    let (first, last) = (curve.r[0], curve.r[n - 1]);
    let mut r = Vec::with_capacity(n + 2 * n_pad);
    let mut v = Vec::with_capacity(n + 2 * n_pad);
    for k in (1..=n_pad).rev() {
        r.push(first - k as f64 * h);
        v.push(curve.v[0]);
    }
    r.extend_from_slice(&curve.r);
    v.extend_from_slice(&curve.v);
    for k in 1..=n_pad {
        r.push(last + k as f64 * h);
        v.push(curve.v[n - 1]);
    }
    let mut out = PesCurve::new(r, v)?;
    out.spacing = Some(h);
    Ok(out)
}
