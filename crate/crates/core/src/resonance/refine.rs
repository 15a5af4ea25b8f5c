//! Grid-refined poles: the same potential discretized at several spacings and
//! the matched eigenvalues extrapolated to zero spacing in h².

use serde::{Deserialize, Serialize};

use super::{count_nodes, interior_fraction, select_candidates, window_range, SelectionSpec};
use crate::error::{Error, Result};
use crate::linalg::C64;
use crate::pes::PesCurve;
use crate::ses::{self, Discretization, KineticSpec, SesContour};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RefineSpec {
    /// Grid spacings, coarsest first.
    pub spacings: Vec<f64>,
    /// The grid covers (-half_width, half_width).
    pub half_width: f64,
}

impl Default for RefineSpec {
    fn default() -> Self {
        Self {
            spacings: vec![0.075, 0.05, 0.0375, 0.03],
            half_width: 12.5,
        }
    }
}

impl RefineSpec {
    pub fn validate(&self) -> Result<()> {
        if self.spacings.is_empty() || self.spacings.iter().any(|&h| !(h > 0.0) || !h.is_finite()) {
            return Err(Error::Config("refine spacings must be positive".into()));
        }
        if self.spacings.windows(2).any(|w| !(w[1] < w[0])) {
            return Err(Error::Config(
                "refine spacings must decrease strictly".into(),
            ));
        }
        if !(self.half_width > 0.0) {
            return Err(Error::Config("refine half_width must be positive".into()));
        }
        Ok(())
    }
}

/// Nodes at (j + 1/2)·h for j = -m..m-1, with m = ceil(half_width / h).
///
/// Offsetting by half a step keeps nodes off breakpoints that are multiples
/// of h, which the second-order stencil needs to converge cleanly in h².
pub fn half_integer_grid(spacing: f64, half_width: f64) -> Result<Vec<f64>> {
    if !(spacing > 0.0) || !(half_width > 0.0) {
        return Err(Error::InvalidInput(
            "grid spacing and half width must be positive".into(),
        ));
    }
    let m = (half_width / spacing - 1e-9).ceil() as i64;
    Ok((-m..m).map(|j| (j as f64 + 0.5) * spacing).collect())
}

/// Neville extrapolation of `values(h)` to h = 0 as a polynomial in h².
pub fn extrapolate_h2(spacings: &[f64], values: &[C64]) -> Result<C64> {
    if spacings.is_empty() || spacings.len() != values.len() {
        return Err(Error::InvalidInput(
            "one value per spacing is required".into(),
        ));
    }
    let x: Vec<f64> = spacings.iter().map(|h| h * h).collect();
    let mut p = values.to_vec();
    for level in 1..x.len() {
        for i in 0..x.len() - level {
            let (xa, xb) = (x[i], x[i + level]);
            p[i] = (p[i + 1] * xa - p[i] * xb) / (xa - xb);
        }
    }
    Ok(p[0])
}

#[derive(Clone, Debug, Serialize)]
pub struct RefinedPole {
    /// Extrapolated energy.
    pub energy: C64,
    /// Eigenvalue at each spacing, coarsest first.
    pub per_spacing: Vec<C64>,
    pub nodes: usize,
    pub interior_fraction: f64,
}

/// Selects poles on the coarsest grid, follows each to the finer grids by
/// nearest eigenvalue, and extrapolates. Nodes are counted on the coarse
/// wavefunction over `node_window`.
#[allow(clippy::too_many_arguments)]
pub fn refined_poles(
    potential: impl Fn(f64) -> f64,
    spec: &RefineSpec,
    contour: &SesContour,
    kin: &KineticSpec,
    disc: &Discretization,
    selection: &SelectionSpec,
    node_window: (f64, f64),
    amplitude_floor: f64,
) -> Result<Vec<RefinedPole>> {
    spec.validate()?;
    let curve_at = |h: f64| -> Result<PesCurve> {
        let r = half_integer_grid(h, spec.half_width)?;
        let v = r.iter().map(|&x| potential(x)).collect();
        PesCurve::new(r, v)
    };

    let coarse = curve_at(spec.spacings[0])?;
    let pairs = ses::solve(&coarse, contour, kin, disc)?;
    let picked = select_candidates(&pairs, coarse.r(), contour, selection);
    let node_range = window_range(coarse.r(), node_window);
    let localization = window_range(
        coarse.r(),
        selection
            .localization_window
            .unwrap_or((-contour.r_left, contour.r_right)),
    );

    let mut tracks: Vec<Vec<C64>> = picked.iter().map(|&(i, _)| vec![pairs[i].energy]).collect();
    for &h in &spec.spacings[1..] {
        let values = ses::solve_values(&curve_at(h)?, contour, kin, disc)?;
        for track in tracks.iter_mut() {
            let last = *track.last().expect("seeded");
            let best = values
                .iter()
                .copied()
                .min_by(|a, b| (a - last).norm().total_cmp(&(b - last).norm()))
                .ok_or_else(|| Error::Solver("empty spectrum".into()))?;
            track.push(best);
        }
    }

    picked
        .iter()
        .zip(tracks)
        .map(|(&(i, _), per_spacing)| {
            let psi = &pairs[i].vector;
            Ok(RefinedPole {
                energy: extrapolate_h2(&spec.spacings, &per_spacing)?,
                per_spacing,
                nodes: count_nodes(psi, node_range.clone(), amplitude_floor)?,
                interior_fraction: interior_fraction(psi, localization.clone()),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_is_symmetric_and_offset() {
        let r = half_integer_grid(0.5, 2.0).unwrap();
        assert_eq!(r, vec![-1.75, -1.25, -0.75, -0.25, 0.25, 0.75, 1.25, 1.75]);
    }

    #[test]
    fn extrapolation_removes_quadratic_and_quartic_terms() {
        let h = [0.1, 0.05, 0.025];
        let exact = C64::new(1.0, -0.5);
        let values: Vec<C64> = h
            .iter()
            .map(|&h| exact + C64::new(3.0, 1.0) * h * h + C64::new(-7.0, 2.0) * h.powi(4))
            .collect();
        let e = extrapolate_h2(&h, &values).unwrap();
        assert!((e - exact).norm() < 1e-13);
    }

    #[test]
    fn spacings_must_decrease() {
        let spec = RefineSpec {
            spacings: vec![0.05, 0.075],
            half_width: 10.0,
        };
        assert!(spec.validate().is_err());
    }
}
