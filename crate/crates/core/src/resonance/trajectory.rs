//! Continuation of eigenvalues along the rotation angle and detection of the
//! stationary (slowest) point of each path.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::C64;

/// A second candidate closer than this multiple of the best match makes the
/// continuation step ambiguous.
pub const AMBIGUITY_RATIO: f64 = 2.0;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ThetaTrajectory {
    pub theta_values: Vec<f64>,
    pub energies: Vec<C64>,
}

fn check_grid(theta: &[f64]) -> Result<()> {
    if theta.is_empty() {
        return Err(Error::InvalidInput("empty theta grid".into()));
    }
    if theta.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidInput(
            "theta grid must be strictly increasing".into(),
        ));
    }
    Ok(())
}

/// Index of the grid value nearest to `theta`.
pub fn nearest_index(grid: &[f64], theta: f64) -> usize {
    grid.iter()
        .enumerate()
        .min_by(|a, b| (a.1 - theta).abs().total_cmp(&(b.1 - theta).abs()))
        .map(|(i, _)| i)
        .unwrap_or(0)
}

fn nearest_two(spectrum: &[C64], target: C64) -> (usize, f64, f64) {
    let mut best = (usize::MAX, f64::INFINITY);
    let mut second = f64::INFINITY;
    for (i, z) in spectrum.iter().enumerate() {
        let d = (z - target).norm();
        if d < best.1 {
            second = best.1;
            best = (i, d);
        } else if d < second {
            second = d;
        }
    }
    (best.0, best.1, second)
}

/// Follows each seed through precomputed spectra, outward in both directions
/// from `start`. Each step matches the eigenvalue nearest to a linear
/// prediction from the last two points.
pub fn track(
    theta: &[f64],
    spectra: &[Vec<C64>],
    start: usize,
    seeds: &[C64],
) -> Result<Vec<ThetaTrajectory>> {
    check_grid(theta)?;
    if spectra.len() != theta.len() || start >= theta.len() {
        return Err(Error::InvalidInput(
            "one spectrum per theta value is required".into(),
        ));
    }
    let n = theta.len();
    let mut paths: Vec<Vec<Option<C64>>> = vec![vec![None; n]; seeds.len()];

    let step = |i: usize, targets: Vec<C64>, paths: &mut Vec<Vec<Option<C64>>>| -> Result<()> {
        let mut taken = Vec::with_capacity(targets.len());
        for (s, target) in targets.into_iter().enumerate() {
            let (k, d1, d2) = nearest_two(&spectra[i], target);
            if k == usize::MAX {
                return Err(Error::Tracking {
                    theta: theta[i],
                    detail: "empty spectrum".into(),
                });
            }
            if d2 < AMBIGUITY_RATIO * d1 {
                return Err(Error::Tracking {
                    theta: theta[i],
                    detail: format!(
                        "state {s}: two eigenvalues within matching radius (distances {d1:.3e} and {d2:.3e})"
                    ),
                });
            }
            if taken.contains(&k) {
                return Err(Error::Tracking {
                    theta: theta[i],
                    detail: format!("state {s} collapsed onto an eigenvalue already claimed"),
                });
            }
            taken.push(k);
            paths[s][i] = Some(spectra[i][k]);
        }
        Ok(())
    };

    step(start, seeds.to_vec(), &mut paths)?;
    // Linear extrapolation from the last two tracked points toward `next`.
    let predict = |path: &[Option<C64>], next: usize, last: usize, prev: Option<usize>| -> C64 {
        let a = path[last].expect("tracked");
        match prev.and_then(|p| path[p].map(|b| (p, b))) {
            Some((p, b)) => a + (a - b) * ((theta[next] - theta[last]) / (theta[last] - theta[p])),
            None => a,
        }
    };
    for i in start + 1..n {
        let prev = (i >= start + 2).then(|| i - 2);
        let targets = paths.iter().map(|p| predict(p, i, i - 1, prev)).collect();
        step(i, targets, &mut paths)?;
    }
    for i in (0..start).rev() {
        let prev = (i + 2 <= start).then(|| i + 2);
        let targets = paths.iter().map(|p| predict(p, i, i + 1, prev)).collect();
        step(i, targets, &mut paths)?;
    }
    Ok(paths
        .into_iter()
        .map(|p| ThetaTrajectory {
            theta_values: theta.to_vec(),
            energies: p
                .into_iter()
                .map(|z| z.expect("every theta visited"))
                .collect(),
        })
        .collect())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Stationary {
    pub index: usize,
    pub theta_star: f64,
    pub energy: C64,
    /// |dE/dθ| at the stationary point; `None` when the grid has one point.
    pub velocity: Option<f64>,
    /// The minimum sits on the first or last grid point, so it is not
    /// bracketed.
    pub at_boundary: bool,
}

/// |ΔE/Δθ| at every grid point: central differences inside, one-sided at the
/// ends.
pub fn velocities(traj: &ThetaTrajectory) -> Vec<f64> {
    let (t, e) = (&traj.theta_values, &traj.energies);
    let n = t.len();
    if n < 2 {
        return Vec::new();
    }
    (0..n)
        .map(|i| {
            let (a, b) = (i.saturating_sub(1), (i + 1).min(n - 1));
            (e[b] - e[a]).norm() / (t[b] - t[a])
        })
        .collect()
}

/// Grid point of minimal trajectory velocity. Exact ties go to the point
/// closest to the middle of the grid.
pub fn detect_stationary(traj: &ThetaTrajectory) -> Result<Stationary> {
    check_grid(&traj.theta_values)?;
    let n = traj.theta_values.len();
    if traj.energies.len() != n {
        return Err(Error::InvalidInput(
            "trajectory arrays differ in length".into(),
        ));
    }
    if n == 1 {
        return Ok(Stationary {
            index: 0,
            theta_star: traj.theta_values[0],
            energy: traj.energies[0],
            velocity: None,
            at_boundary: true,
        });
    }
    let v = velocities(traj);
    let min = v.iter().copied().fold(f64::INFINITY, f64::min);
    let middle = (n - 1) as f64 / 2.0;
    let index = (0..n)
        .filter(|&i| v[i] == min)
        .min_by(|&a, &b| {
            (a as f64 - middle)
                .abs()
                .total_cmp(&(b as f64 - middle).abs())
        })
        .unwrap_or(0);
    Ok(Stationary {
        index,
        theta_star: traj.theta_values[index],
        energy: traj.energies[index],
        velocity: Some(min),
        at_boundary: index == 0 || index == n - 1,
    })
}
