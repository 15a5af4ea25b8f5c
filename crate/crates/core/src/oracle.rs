//! Transfer-matrix poles of piecewise-constant potentials, used as an
//! independent check of the scaled-grid eigenvalues.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::C64;
use crate::ses::KineticSpec;

/// Largest |1/t| accepted at a returned pole.
pub const POLE_RESIDUAL_TOLERANCE: f64 = 1e-10;
pub const MAX_SECANT_ITERATIONS: usize = 200;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PiecewisePotential {
    breakpoints: Vec<f64>,
    /// One height per segment, including the two zero outer segments.
    heights: Vec<f64>,
}

impl PiecewisePotential {
    pub fn new(breakpoints: Vec<f64>, heights: Vec<f64>) -> Result<Self> {
        if breakpoints.is_empty() {
            return Err(Error::InvalidInput("need at least one breakpoint".into()));
        }
        if heights.len() != breakpoints.len() + 1 {
            return Err(Error::InvalidInput(format!(
                "{} breakpoints need {} segment heights, got {}",
                breakpoints.len(),
                breakpoints.len() + 1,
                heights.len()
            )));
        }
        if breakpoints.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidInput(
                "breakpoints must be strictly increasing".into(),
            ));
        }
        if heights[0] != 0.0 || heights[heights.len() - 1] != 0.0 {
            return Err(Error::InvalidInput(
                "outer segment heights must be exactly zero".into(),
            ));
        }
        if breakpoints.iter().chain(&heights).any(|x| !x.is_finite()) {
            return Err(Error::InvalidInput(
                "potential contains non-finite values".into(),
            ));
        }
        Ok(Self {
            breakpoints,
            heights,
        })
    }

    /// Builds the potential from the heights of the inner segments only.
    pub fn from_inner(breakpoints: Vec<f64>, inner: &[f64]) -> Result<Self> {
        let mut heights = Vec::with_capacity(inner.len() + 2);
        heights.push(0.0);
        heights.extend_from_slice(inner);
        heights.push(0.0);
        Self::new(breakpoints, heights)
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn heights(&self) -> &[f64] {
        &self.heights
    }

    pub fn value(&self, x: f64) -> f64 {
        self.heights[self.breakpoints.partition_point(|&b| b <= x)]
    }

    pub fn max_height(&self) -> f64 {
        self.heights
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

pub type Matrix2 = [[C64; 2]; 2];

fn mul(a: &Matrix2, b: &Matrix2) -> Matrix2 {
    let mut out = [[C64::new(0.0, 0.0); 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            out[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    out
}

/// Values and derivatives of e^{ikx} and e^{-ikx} at x.
fn plane_waves(k: C64, x: f64) -> Matrix2 {
    let i = C64::i();
    let plus = (i * k * x).exp();
    let minus = (-i * k * x).exp();
    [[plus, minus], [i * k * plus, -i * k * minus]]
}

fn inverse(m: &Matrix2) -> Matrix2 {
    let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    [
        [m[1][1] / det, -m[0][1] / det],
        [-m[1][0] / det, m[0][0] / det],
    ]
}

/// Principal-branch wavevector sqrt((e - v)/p) of each segment.
fn wavevectors(pot: &PiecewisePotential, e: C64, kin: &KineticSpec) -> Result<Vec<C64>> {
    pot.heights
        .iter()
        .enumerate()
        .map(|(segment, &v)| {
            let k = ((e - v) / kin.inverse_mass_prefactor).sqrt();
            if k.norm() == 0.0 {
                Err(Error::BranchPoint {
                    energy: format!("{e}"),
                    segment,
                })
            } else {
                Ok(k)
            }
        })
        .collect()
}

/// Maps plane-wave amplitudes (A, B) of the leftmost segment to those of the
/// rightmost segment.
pub fn transfer_matrix(pot: &PiecewisePotential, e: C64, kin: &KineticSpec) -> Result<Matrix2> {
    let ks = wavevectors(pot, e, kin)?;
    let one = C64::new(1.0, 0.0);
    let zero = C64::new(0.0, 0.0);
    let mut m = [[one, zero], [zero, one]];
    for (j, &b) in pot.breakpoints.iter().enumerate() {
        let step = mul(&inverse(&plane_waves(ks[j + 1], b)), &plane_waves(ks[j], b));
        m = mul(&step, &m);
    }
    Ok(m)
}

/// Transmission amplitude for a wave incident from the left.
pub fn transmission(pot: &PiecewisePotential, e: C64, kin: &KineticSpec) -> Result<C64> {
    let m = transfer_matrix(pot, e, kin)?;
    let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    Ok(det / m[1][1])
}

/// Outgoing-wave condition: no incoming amplitude on either side.
fn pole_function(pot: &PiecewisePotential, e: C64, kin: &KineticSpec) -> Result<C64> {
    Ok(transfer_matrix(pot, e, kin)?[1][1])
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PoleResult {
    pub energy: C64,
    /// |1/t| at the returned energy.
    pub residual: f64,
    pub iterations: usize,
}

/// Complex secant iteration on 1/t(E) = 0.
pub fn find_pole(pot: &PiecewisePotential, guess: C64, kin: &KineticSpec) -> Result<PoleResult> {
    let fail = |reason: String| Error::NoPoleFound {
        guess: format!("{guess}"),
        reason,
    };
    let bound = 1e8 * (1.0 + guess.norm());
    let mut x0 = guess;
    let mut x1 = if guess.norm() > 0.0 {
        guess * (1.0 + 1e-4)
    } else {
        C64::new(1e-4, 0.0)
    };
    let mut f0 = pole_function(pot, x0, kin)?;
    let mut f1 = pole_function(pot, x1, kin)?;
    let mut iterations = 0;
    while iterations < MAX_SECANT_ITERATIONS {
        if f1.norm() < 1e-15 {
            break;
        }
        let denom = f1 - f0;
        if denom.norm() == 0.0 {
            break;
        }
        let x2 = x1 - f1 * (x1 - x0) / denom;
        iterations += 1;
        if !(x2.re.is_finite() && x2.im.is_finite()) || x2.norm() > bound {
            return Err(fail(format!("iteration diverged after {iterations} steps")));
        }
        x0 = x1;
        f0 = f1;
        x1 = x2;
        f1 = pole_function(pot, x1, kin)?;
        if (x1 - x0).norm() <= 1e-15 * x1.norm() {
            break;
        }
    }
    let residual = f1.norm();
    if !(residual < POLE_RESIDUAL_TOLERANCE) {
        return Err(fail(format!(
            "residual {residual:.3e} after {iterations} iterations (tolerance {POLE_RESIDUAL_TOLERANCE:.0e})"
        )));
    }
    if x1.im > 0.0 {
        return Err(fail(format!(
            "iteration escaped to the upper half plane at {x1}"
        )));
    }
    Ok(PoleResult {
        energy: x1,
        residual,
        iterations,
    })
}

/// Real energies of the local maxima of |t(E)| on a uniform scan of
/// `points` energies in [e_min, e_max]. Scan energies that land exactly on a
/// segment height are nudged off the branch point.
pub fn transmission_peaks(
    pot: &PiecewisePotential,
    kin: &KineticSpec,
    e_min: f64,
    e_max: f64,
    points: usize,
) -> Result<Vec<f64>> {
    if points < 3 || !(e_max > e_min) {
        return Err(Error::InvalidInput(
            "scan needs >= 3 points over a non-empty range".into(),
        ));
    }
    let step = (e_max - e_min) / (points - 1) as f64;
    let mut energies = Vec::with_capacity(points);
    let mut magnitudes = Vec::with_capacity(points);
    for i in 0..points {
        let mut e = e_min + i as f64 * step;
        if pot.heights.contains(&e) {
            e += 1e-3 * step;
        }
        energies.push(e);
        magnitudes.push(transmission(pot, C64::new(e, 0.0), kin)?.norm());
    }
    Ok((1..points - 1)
        .filter(|&i| magnitudes[i] > magnitudes[i - 1] && magnitudes[i] > magnitudes[i + 1])
        .map(|i| energies[i])
        .collect())
}

/// Poles seeded from the transmission peaks, sorted by real part and
/// de-duplicated. Peaks whose secant search fails (shallow maxima with no
/// nearby pole) are skipped.
pub fn poles_from_scan(
    pot: &PiecewisePotential,
    kin: &KineticSpec,
    e_min: f64,
    e_max: f64,
    points: usize,
) -> Result<Vec<PoleResult>> {
    let mut poles: Vec<PoleResult> = Vec::new();
    for e in transmission_peaks(pot, kin, e_min, e_max, points)? {
        let guess = C64::new(e, -1e-4 * e.abs().max(1.0));
        let pole = match find_pole(pot, guess, kin) {
            Ok(p) => p,
            Err(err) => {
                log::debug!("transmission peak at {e:.6} skipped: {err}");
                continue;
            }
        };
        if poles
            .iter()
            .all(|p| (p.energy - pole.energy).norm() > 1e-8 * pole.energy.norm())
        {
            poles.push(pole);
        }
    }
    poles.sort_by(|a, b| a.energy.re.total_cmp(&b.energy.re));
    Ok(poles)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit() -> KineticSpec {
        KineticSpec::new(1.0).unwrap()
    }

    fn double_barrier() -> PiecewisePotential {
        PiecewisePotential::from_inner(vec![-2.0, -1.0, 1.0, 2.0], &[0.5, 0.0, 0.5]).unwrap()
    }

    #[test]
    fn free_space_is_transparent() {
        let pot = PiecewisePotential::from_inner(vec![-1.0, 1.0], &[0.0]).unwrap();
        let m = transfer_matrix(&pot, C64::new(0.37, 0.0), &unit()).unwrap();
        assert!((m[0][0] - 1.0).norm() < 1e-14 && (m[1][1] - 1.0).norm() < 1e-14);
        assert!(m[0][1].norm() < 1e-14 && m[1][0].norm() < 1e-14);
    }

    #[test]
    fn rectangular_barrier_matches_closed_form() {
        let (v0, a) = (0.8, 1.3);
        let pot = PiecewisePotential::from_inner(vec![0.0, a], &[v0]).unwrap();
        for &e in &[0.1, 0.5, 0.79, 0.95, 2.0] {
            let t = transmission(&pot, C64::new(e, 0.0), &unit()).unwrap();
            let want = if e < v0 {
                let s = (v0 - e).sqrt() * a;
                1.0 / (1.0 + v0 * v0 * s.sinh().powi(2) / (4.0 * e * (v0 - e)))
            } else {
                let s = (e - v0).sqrt() * a;
                1.0 / (1.0 + v0 * v0 * s.sin().powi(2) / (4.0 * e * (e - v0)))
            };
            assert!((t.norm_sqr() - want).abs() < 1e-12, "E = {e}");
        }
    }

    #[test]
    fn unit_determinant_on_real_axis() {
        let pot = double_barrier();
        for &e in &[0.05, 0.3, 0.5001, 1.7] {
            let m = transfer_matrix(&pot, C64::new(e, 0.0), &unit()).unwrap();
            let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
            assert!((det - 1.0).norm() < 1e-12);
        }
    }

    #[test]
    fn branch_point_is_reported() {
        let pot = double_barrier();
        assert!(matches!(
            transfer_matrix(&pot, C64::new(0.5, 0.0), &unit()),
            Err(Error::BranchPoint { segment: 1, .. })
        ));
    }

    #[test]
    fn validation() {
        assert!(PiecewisePotential::new(vec![0.0, 1.0], vec![1.0, 2.0, 0.0]).is_err());
        assert!(PiecewisePotential::new(vec![1.0, 0.0], vec![0.0, 2.0, 0.0]).is_err());
        assert!(PiecewisePotential::new(vec![0.0], vec![0.0]).is_err());
    }

    #[test]
    fn value_lookup() {
        let pot = double_barrier();
        assert_eq!(pot.value(-1.5), 0.5);
        assert_eq!(pot.value(0.0), 0.0);
        assert_eq!(pot.value(3.0), 0.0);
    }
}
