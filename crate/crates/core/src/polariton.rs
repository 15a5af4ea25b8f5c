//! Single-molecule 8-level and N-molecule ensemble polariton Hamiltonians and
//! the cavity rate sweeps built on them.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, c_component_weights, component_weights, ComplexMatrix, Eigenpair, C64};

/// Largest ensemble handled by dense diagonalization (2^10 = 1024 states).
pub const MAX_MOLECULES: usize = 10;

/// Number of field-free levels in the single-molecule model.
pub const LEVELS: usize = 4;

/// How eigenvector components are turned into projection weights.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OverlapConvention {
    /// |C_kα|² with Σ_j |C_jα|² = 1.
    #[default]
    Modulus,
    /// |C_kα²| with the c-normalization Σ_j C_jα² = 1 (diagnostic).
    CProduct,
}

fn weights(pairs: &[Eigenpair], k: usize, convention: OverlapConvention) -> Result<Vec<f64>> {
    match convention {
        OverlapConvention::Modulus => component_weights(pairs, k),
        OverlapConvention::CProduct => Ok(c_component_weights(pairs, k)?
            .iter()
            .map(|w| w.norm())
            .collect()),
    }
}

/// Σ_α (-2 Im E_α) w_kα over all eigenpairs.
fn projected_width(pairs: &[Eigenpair], k: usize, convention: OverlapConvention) -> Result<f64> {
    Ok(pairs
        .iter()
        .zip(weights(pairs, k, convention)?)
        .map(|(p, w)| -2.0 * p.energy.im * w)
        .sum())
}

/// Four field-free resonances, their transition dipoles and the photon energy.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LevelSet {
    pub e_r: Vec<f64>,
    pub gamma: Vec<f64>,
    /// d[i][j]; diagonal entries are ignored.
    pub dipoles: Vec<Vec<C64>>,
    pub hbar_omega: f64,
}

impl LevelSet {
    /// Photon energy defaults to E^r_3 - E^r_0.
    pub fn new(
        e_r: Vec<f64>,
        gamma: Vec<f64>,
        dipoles: Vec<Vec<C64>>,
        hbar_omega: Option<f64>,
    ) -> Result<Self> {
        let hbar_omega =
            hbar_omega.unwrap_or_else(|| e_r.get(3).zip(e_r.first()).map_or(0.0, |(a, b)| a - b));
        let set = Self {
            e_r,
            gamma,
            dipoles,
            hbar_omega,
        };
        set.validate()?;
        Ok(set)
    }

    pub fn validate(&self) -> Result<()> {
        if self.e_r.len() != LEVELS || self.gamma.len() != LEVELS {
            return Err(Error::Config(format!(
                "exactly {LEVELS} levels are required"
            )));
        }
        if self.gamma.iter().any(|&g| !(g >= 0.0)) {
            return Err(Error::Config("level widths must be non-negative".into()));
        }
        if !(self.hbar_omega > 0.0) {
            return Err(Error::Config(format!(
                "photon energy must be positive, got {}",
                self.hbar_omega
            )));
        }
        if self.dipoles.len() != LEVELS || self.dipoles.iter().any(|row| row.len() != LEVELS) {
            return Err(Error::Config(format!(
                "dipole table must be {LEVELS}x{LEVELS}"
            )));
        }
        if self
            .dipoles
            .iter()
            .flatten()
            .any(|d| !(d.re.is_finite() && d.im.is_finite()))
        {
            return Err(Error::Config(
                "dipole table has a missing or non-finite entry".into(),
            ));
        }
        Ok(())
    }

    pub fn energy(&self, j: usize) -> C64 {
        C64::new(self.e_r[j], -0.5 * self.gamma[j])
    }

    /// The two-level reduction used by the ensemble model.
    pub fn pair(&self, upper: usize, lower: usize) -> Result<LevelPair> {
        if upper >= LEVELS || lower >= LEVELS || upper == lower {
            return Err(Error::Config(format!(
                "invalid level pair ({upper}, {lower})"
            )));
        }
        LevelPair::new(
            self.energy(upper),
            self.energy(lower),
            self.e_r[upper] - self.e_r[lower],
            self.dipoles[upper][lower],
        )
    }
}

/// 8×8 single-molecule polariton Hamiltonian.
#[derive(Clone, Debug)]
pub struct SinglePolaritonH {
    pub matrix: ComplexMatrix,
    pub epsilon: f64,
}

/// Zero- and one-photon copies of the four levels coupled through d_ij·ε,
/// with the permanent dipoles left out.
pub fn build_single_h(levels: &LevelSet, epsilon: f64) -> Result<SinglePolaritonH> {
    levels.validate()?;
    let mut m = ComplexMatrix::zeros(2 * LEVELS);
    for j in 0..LEVELS {
        m.set(j, j, levels.energy(j));
        m.set(LEVELS + j, LEVELS + j, levels.energy(j) - levels.hbar_omega);
    }
    for i in 0..LEVELS {
        for j in 0..LEVELS {
            if i != j {
                let c = levels.dipoles[i][j] * epsilon;
                m.set(i, LEVELS + j, c);
                m.set(LEVELS + j, i, c);
            }
        }
    }
    Ok(SinglePolaritonH { matrix: m, epsilon })
}

/// Σ_α Γ_α w_α with w_α the weight of polariton α on the one-photon TS state
/// (the last basis vector).
pub fn gamma_polariton(h: &SinglePolaritonH, convention: OverlapConvention) -> Result<f64> {
    let pairs = linalg::eigensolve(&h.matrix)?;
    projected_width(&pairs, 2 * LEVELS - 1, convention)
}

/// Upper and lower level of one molecule in the ensemble model.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LevelPair {
    pub upper: C64,
    pub lower: C64,
    pub hbar_omega: f64,
    pub dipole: C64,
}

impl LevelPair {
    pub fn new(upper: C64, lower: C64, hbar_omega: f64, dipole: C64) -> Result<Self> {
        if upper.im > 0.0 || lower.im > 0.0 {
            return Err(Error::Config("level energies must have Im E <= 0".into()));
        }
        if !(hbar_omega > 0.0) {
            return Err(Error::Config(format!(
                "photon energy must be positive, got {hbar_omega}"
            )));
        }
        if !(dipole.re.is_finite() && dipole.im.is_finite()) {
            return Err(Error::Config("pair dipole is missing or non-finite".into()));
        }
        Ok(Self {
            upper,
            lower,
            hbar_omega,
            dipole,
        })
    }
}

/// Ensemble basis labels: bit j set means molecule j is in the lower state
/// with its photon emitted. Ascending order, all-upper state first.
pub fn enumerate_basis(n_mol: usize) -> Result<Vec<u32>> {
    enumerate_basis_capped(n_mol, MAX_MOLECULES)
}

pub fn enumerate_basis_capped(n_mol: usize, cap: usize) -> Result<Vec<u32>> {
    if n_mol == 0 || n_mol > cap || n_mol > 31 {
        return Err(Error::Limit(format!(
            "number of molecules must be in 1..={cap}, got {n_mol}"
        )));
    }
    Ok((0..1u32 << n_mol).collect())
}

#[derive(Clone, Debug)]
pub struct EnsembleH {
    pub n_mol: usize,
    pub matrix: ComplexMatrix,
    pub epsilon: f64,
    pub pair_dipole: C64,
}

pub fn build_ensemble_h(pair: &LevelPair, n_mol: usize, epsilon: f64) -> Result<EnsembleH> {
    let basis = enumerate_basis(n_mol)?;
    let dressed_upper = pair.upper - pair.hbar_omega;
    let coupling = pair.dipole * epsilon;
    let mut m = ComplexMatrix::zeros(basis.len());
    for &mask in &basis {
        let flipped = mask.count_ones() as f64;
        let row = mask as usize;
        m.set(
            row,
            row,
            dressed_upper * (n_mol as f64 - flipped) + pair.lower * flipped,
        );
        for bit in 0..n_mol {
            m.set(row, (mask ^ (1 << bit)) as usize, coupling);
        }
    }
    Ok(EnsembleH {
        n_mol,
        matrix: m,
        epsilon,
        pair_dipole: pair.dipole,
    })
}

/// -2 Σ_α w_α Im E_α, with w_α the weight of eigenvector α on the all-upper,
/// zero-photon state.
pub fn gamma_cav(h: &EnsembleH, convention: OverlapConvention) -> Result<f64> {
    let pairs = linalg::eigensolve(&h.matrix)?;
    projected_width(&pairs, 0, convention)
}

/// ε_QED·sqrt(N).
pub fn collective_coupling(epsilon_qed: f64, n_mol: usize) -> Result<f64> {
    if !(epsilon_qed >= 0.0) {
        return Err(Error::InvalidInput(format!(
            "coupling must be non-negative, got {epsilon_qed}"
        )));
    }
    Ok(epsilon_qed * (n_mol as f64).sqrt())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RateKind {
    GammaPolariton,
    RatioCavNoCav,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateCurve {
    pub kind: RateKind,
    pub n_mol: usize,
    pub epsilon: Vec<f64>,
    pub gamma: Vec<f64>,
    /// gamma / gamma(ε = 0).
    pub ratio: Vec<f64>,
}

impl RateCurve {
    /// (ε, ratio) at the smallest ratio.
    pub fn min_ratio(&self) -> (f64, f64) {
        self.epsilon
            .iter()
            .zip(&self.ratio)
            .map(|(&e, &r)| (e, r))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .unwrap_or((0.0, 1.0))
    }
}

fn sweep(
    kind: RateKind,
    n_mol: usize,
    grid: &[f64],
    rate: impl Fn(f64) -> Result<f64>,
) -> Result<RateCurve> {
    if !grid.contains(&0.0) {
        return Err(Error::Config("coupling grid must contain 0".into()));
    }
    if grid.iter().any(|e| !e.is_finite()) {
        return Err(Error::Config("coupling grid has non-finite values".into()));
    }
    let base = rate(0.0)?;
    if !(base.abs() > 0.0) {
        return Err(Error::DegenerateNormalization(
            "rate at zero coupling is zero".into(),
        ));
    }
    let gamma = grid.iter().map(|&e| rate(e)).collect::<Result<Vec<_>>>()?;
    Ok(RateCurve {
        kind,
        n_mol,
        epsilon: grid.to_vec(),
        ratio: gamma.iter().map(|g| g / base).collect(),
        gamma,
    })
}

/// Γ_polariton over a coupling grid, with ratio to ε = 0.
pub fn single_curve(
    levels: &LevelSet,
    grid: &[f64],
    convention: OverlapConvention,
) -> Result<RateCurve> {
    sweep(RateKind::GammaPolariton, 1, grid, |e| {
        gamma_polariton(&build_single_h(levels, e)?, convention)
    })
}

/// Γ_cav(ε)/Γ_cav(0) for `n_mol` molecules.
pub fn ratio_curve(
    pair: &LevelPair,
    n_mol: usize,
    grid: &[f64],
    convention: OverlapConvention,
) -> Result<RateCurve> {
    enumerate_basis(n_mol)?;
    sweep(RateKind::RatioCavNoCav, n_mol, grid, |e| {
        gamma_cav(&build_ensemble_h(pair, n_mol, e)?, convention)
    })
}

/// 0 followed by `points` log-spaced values over [lo, hi].
pub fn log_grid_with_zero(lo: f64, hi: f64, points: usize) -> Result<Vec<f64>> {
    if !(lo > 0.0 && hi > lo) || points < 2 {
        return Err(Error::Config(
            "log grid needs 0 < lo < hi and >= 2 points".into(),
        ));
    }
    let (a, b) = (lo.log10(), hi.log10());
    Ok(std::iter::once(0.0)
        .chain((0..points).map(|i| 10f64.powf(a + (b - a) * i as f64 / (points - 1) as f64)))
        .collect())
}

/// `points` evenly spaced values over [lo, hi].
pub fn linear_grid(lo: f64, hi: f64, points: usize) -> Result<Vec<f64>> {
    if !(hi > lo) || points < 2 {
        return Err(Error::Config(
            "linear grid needs lo < hi and >= 2 points".into(),
        ));
    }
    Ok((0..points)
        .map(|i| lo + (hi - lo) * i as f64 / (points - 1) as f64)
        .collect())
}

/// 0 plus 60 log-spaced points over [1e-6, 1e-2].
pub fn default_single_grid() -> Vec<f64> {
    log_grid_with_zero(1e-6, 1e-2, 60).expect("valid constants")
}

/// 41 points over [0, 1e-4].
pub fn default_ensemble_grid() -> Vec<f64> {
    linear_grid(0.0, 1e-4, 41).expect("valid constants")
}
