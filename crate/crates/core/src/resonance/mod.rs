//! Physical resonance poles: selection, tracking, node classification,
//! c-product dipoles and the cavity parameters derived from level gaps.

mod finder;
mod refine;
mod trajectory;

pub use finder::{
    default_theta_grid, find_resonances, run_theta_trajectory, FinderSpec, ResonanceReport,
};
pub use refine::{extrapolate_h2, half_integer_grid, refined_poles, RefineSpec, RefinedPole};
pub use trajectory::{
    detect_stationary, nearest_index, track, velocities, Stationary, ThetaTrajectory,
    AMBIGUITY_RATIO,
};

use serde::{Deserialize, Serialize};

use crate::constants::{BOHR_IN_MICROMETERS, SPEED_OF_LIGHT};
use crate::error::{Error, Result};
use crate::linalg::{Eigenpair, C64};
use crate::ses::SesContour;

/// Default fraction of max |Re ψ| below which points are ignored when
/// counting nodes.
pub const DEFAULT_AMPLITUDE_FLOOR: f64 = 0.02;

/// Default minimum share of Σ|ψ|² inside the localization window.
pub const DEFAULT_MIN_INTERIOR_FRACTION: f64 = 0.9;

/// |(ψ|ψ)| below this (relative to Σ|ψ|²Δr) counts as self-orthogonal.
pub const SELF_ORTHOGONAL_TOLERANCE: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    /// Three-node state at the barrier top.
    Ts,
    /// Zero-node, narrowest state in the well.
    Gr,
}

#[derive(Clone, Debug, Serialize)]
pub struct Resonance {
    pub e_r: f64,
    pub gamma: f64,
    pub nodes: usize,
    pub theta_star: f64,
    pub interior_fraction: f64,
    /// True when the velocity minimum fell on the edge of the θ grid.
    pub boundary_warning: bool,
    pub role: Option<Role>,
    #[serde(skip)]
    pub psi: Vec<C64>,
}

impl Resonance {
    pub fn energy(&self) -> C64 {
        C64::new(self.e_r, -0.5 * self.gamma)
    }
}

fn check_same_len(a: usize, b: usize) -> Result<()> {
    if a != b {
        return Err(Error::InvalidInput(format!(
            "grid functions differ in length ({a} vs {b})"
        )));
    }
    Ok(())
}

/// Σ a·w·b·Δr without complex conjugation.
pub fn c_product(a: &[C64], b: &[C64], weight: Option<&[C64]>, dr: f64) -> Result<C64> {
    check_same_len(a.len(), b.len())?;
    let sum: C64 = match weight {
        Some(w) => {
            check_same_len(a.len(), w.len())?;
            a.iter().zip(b).zip(w).map(|((x, y), z)| x * z * y).sum()
        }
        None => a.iter().zip(b).map(|(x, y)| x * y).sum(),
    };
    Ok(sum * dr)
}

/// Rescales ψ so that (ψ|ψ) is real and positive, fixes the sign so the
/// largest component has positive real part, and restores Σ|ψ|² = 1.
pub fn c_normalize(psi: &[C64]) -> Result<Vec<C64>> {
    let self_product: C64 = psi.iter().map(|z| z * z).sum();
    let norm: f64 = psi.iter().map(|z| z.norm_sqr()).sum();
    if !(norm > 0.0) {
        return Err(Error::InvalidInput(
            "wavefunction is identically zero".into(),
        ));
    }
    if self_product.norm() < SELF_ORTHOGONAL_TOLERANCE * norm {
        return Err(Error::DegenerateNormalization(format!(
            "(psi|psi) = {self_product:.3e} is numerically zero"
        )));
    }
    let phase = self_product.sqrt().inv();
    let mut out: Vec<C64> = psi.iter().map(|z| z * phase).collect();
    let peak = out
        .iter()
        .max_by(|a, b| a.norm_sqr().total_cmp(&b.norm_sqr()))
        .copied()
        .unwrap_or_default();
    let sign = if peak.re < 0.0 { -1.0 } else { 1.0 };
    let scale = sign / (norm.sqrt() * phase.norm());
    out.iter_mut().for_each(|z| *z *= scale);
    Ok(out)
}

/// Indices of grid points inside the closed window [lo, hi].
pub fn window_range(r: &[f64], window: (f64, f64)) -> std::ops::Range<usize> {
    let start = r.partition_point(|&x| x < window.0);
    let end = r.partition_point(|&x| x <= window.1);
    start..end.max(start)
}

/// Share of Σ|ψ|² on the given index range.
pub fn interior_fraction(psi: &[C64], range: std::ops::Range<usize>) -> f64 {
    let total: f64 = psi.iter().map(|z| z.norm_sqr()).sum();
    if total == 0.0 {
        return 0.0;
    }
    psi[range].iter().map(|z| z.norm_sqr()).sum::<f64>() / total
}

/// Sign changes of Re ψ over `range`, skipping points whose |Re ψ| is below
/// `amplitude_floor` times the maximum over the range.
pub fn count_nodes(
    psi: &[C64],
    range: std::ops::Range<usize>,
    amplitude_floor: f64,
) -> Result<usize> {
    let part = psi.get(range.clone()).ok_or_else(|| {
        Error::InvalidInput(format!(
            "node window {range:?} outside grid of {}",
            psi.len()
        ))
    })?;
    let max = part.iter().map(|z| z.re.abs()).fold(0.0, f64::max);
    if max == 0.0 {
        return Err(Error::InvalidInput(
            "wavefunction is zero on the node window".into(),
        ));
    }
    let signs: Vec<bool> = part
        .iter()
        .filter(|z| z.re.abs() > amplitude_floor * max)
        .map(|z| z.re > 0.0)
        .collect();
    Ok(signs.windows(2).filter(|w| w[0] != w[1]).count())
}

/// Transition dipoles d_ij = (ψi|F|ψj) / sqrt((ψi|ψi)(ψj|ψj)) on the scaled
/// coordinate F(r).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DipoleTable {
    pub d: Vec<Vec<C64>>,
}

impl DipoleTable {
    pub fn len(&self) -> usize {
        self.d.len()
    }

    pub fn is_empty(&self) -> bool {
        self.d.is_empty()
    }

    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.d[i][j]
    }

    pub fn max_asymmetry(&self) -> f64 {
        let n = self.d.len();
        (0..n)
            .flat_map(|i| (0..n).map(move |j| (i, j)))
            .map(|(i, j)| (self.d[i][j] - self.d[j][i]).norm())
            .fold(0.0, f64::max)
    }
}

pub fn dipole_matrix(
    psis: &[&[C64]],
    r: &[f64],
    dr: f64,
    contour: &SesContour,
) -> Result<DipoleTable> {
    let coordinate: Vec<C64> = r.iter().map(|&x| contour.big_f(x)).collect();
    let mut norms = Vec::with_capacity(psis.len());
    for (i, psi) in psis.iter().enumerate() {
        check_same_len(psi.len(), r.len())?;
        let n = c_product(psi, psi, None, dr)?;
        let scale: f64 = psi.iter().map(|z| z.norm_sqr()).sum::<f64>() * dr;
        if n.norm() < SELF_ORTHOGONAL_TOLERANCE * scale {
            return Err(Error::DegenerateNormalization(format!(
                "state {i}: (psi|psi) = {n:.3e}"
            )));
        }
        norms.push(n);
    }
    let k = psis.len();
    let mut d = vec![vec![C64::new(0.0, 0.0); k]; k];
    for i in 0..k {
        for j in 0..k {
            d[i][j] =
                c_product(psis[i], psis[j], Some(&coordinate), dr)? / (norms[i] * norms[j]).sqrt();
        }
    }
    Ok(DipoleTable { d })
}

/// Photon energy, wavelength and mirror spacing that put the cavity in
/// resonance with a level gap.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CavitySpec {
    /// (upper, lower) node counts.
    pub pair: (usize, usize),
    pub hbar_omega_au: f64,
    pub wavelength_um: f64,
    pub mirror_distance_um: f64,
}

impl CavitySpec {
    pub fn from_gap(gap: f64, pair: (usize, usize)) -> Result<Self> {
        if !(gap > 0.0) || !gap.is_finite() {
            return Err(Error::InvalidInput(format!(
                "cavity pair {pair:?} has non-positive gap {gap:e} hartree"
            )));
        }
        let wavelength_um = 2.0 * std::f64::consts::PI * SPEED_OF_LIGHT / gap * BOHR_IN_MICROMETERS;
        Ok(Self {
            pair,
            hbar_omega_au: gap,
            wavelength_um,
            mirror_distance_um: wavelength_um / 2.0,
        })
    }
}

/// Cavity tuned to the gap between the states with the given node counts.
pub fn cavity_from_gap(resonances: &[Resonance], pair: (usize, usize)) -> Result<CavitySpec> {
    let find = |nodes: usize| {
        resonances.iter().find(|r| r.nodes == nodes).ok_or_else(|| {
            Error::Config(format!(
                "no classified {nodes}-node resonance for cavity pair {pair:?}"
            ))
        })
    };
    let (upper, lower) = (find(pair.0)?, find(pair.1)?);
    CavitySpec::from_gap(upper.e_r - lower.e_r, pair)
}

/// Rules for picking resonance candidates out of a full spectrum.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SelectionSpec {
    pub max_states: usize,
    pub min_interior_fraction: f64,
    /// Defaults to the unscaled interior (-r_left, r_right).
    pub localization_window: Option<(f64, f64)>,
    pub energy_window: Option<(f64, f64)>,
}

impl Default for SelectionSpec {
    fn default() -> Self {
        Self {
            max_states: 4,
            min_interior_fraction: DEFAULT_MIN_INTERIOR_FRACTION,
            localization_window: None,
            energy_window: None,
        }
    }
}

/// Decaying, localized eigenpairs in order of increasing real part, paired
/// with their interior fractions.
pub fn select_candidates(
    pairs: &[Eigenpair],
    r: &[f64],
    contour: &SesContour,
    spec: &SelectionSpec,
) -> Vec<(usize, f64)> {
    let window = spec
        .localization_window
        .unwrap_or((-contour.r_left, contour.r_right));
    let range = window_range(r, window);
    let scale = pairs.iter().map(|p| p.energy.norm()).fold(0.0, f64::max);
    pairs
        .iter()
        .enumerate()
        .filter(|(_, p)| p.energy.im <= 1e-12 * scale)
        .filter(|(_, p)| match spec.energy_window {
            Some((lo, hi)) => p.energy.re >= lo && p.energy.re <= hi,
            None => true,
        })
        .map(|(i, p)| (i, interior_fraction(&p.vector, range.clone())))
        .filter(|&(_, f)| f >= spec.min_interior_fraction)
        .take(spec.max_states)
        .collect()
}
