//! End-to-end resonance search on a prepared curve.

use log::{info, warn};
use serde::{Deserialize, Serialize};

use super::trajectory::{detect_stationary, nearest_index, track, Stationary, ThetaTrajectory};
use super::{
    c_normalize, count_nodes, dipole_matrix, select_candidates, window_range, DipoleTable,
    Resonance, Role, SelectionSpec, DEFAULT_AMPLITUDE_FLOOR,
};
use crate::error::{Error, Result};
use crate::linalg::{Eigenpair, C64};
use crate::pes::PesCurve;
use crate::ses::{self, Discretization, KineticSpec, SesContour};

/// Default θ grid: 41 points over [0.02, 0.30].
pub fn default_theta_grid() -> Vec<f64> {
    (0..41).map(|i| 0.02 + 0.28 * i as f64 / 40.0).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FinderSpec {
    pub theta_grid: Vec<f64>,
    pub selection: SelectionSpec,
    /// Region for node counting; defaults to the localization window.
    pub node_window: Option<(f64, f64)>,
    pub amplitude_floor: f64,
    /// Drop candidates whose minimal |dE/dθ| exceeds this (hartree/rad).
    pub cusp_threshold: Option<f64>,
}

impl Default for FinderSpec {
    fn default() -> Self {
        Self {
            theta_grid: default_theta_grid(),
            selection: SelectionSpec::default(),
            node_window: None,
            amplitude_floor: DEFAULT_AMPLITUDE_FLOOR,
            cusp_threshold: None,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ResonanceReport {
    /// Sorted by E^r.
    pub resonances: Vec<Resonance>,
    /// One per resonance, same order.
    pub trajectories: Vec<ThetaTrajectory>,
    pub stationary: Vec<Stationary>,
    /// Evaluated at `theta_dipole` over `resonances`.
    pub dipoles: DipoleTable,
    pub theta_dipole: f64,
    pub warnings: Vec<String>,
}

impl ResonanceReport {
    pub fn by_role(&self, role: Role) -> Option<&Resonance> {
        self.resonances.iter().find(|r| r.role == Some(role))
    }

    /// Index into `resonances` of the first state with the given node count.
    pub fn index_of_nodes(&self, nodes: usize) -> Option<usize> {
        self.resonances.iter().position(|r| r.nodes == nodes)
    }
}

fn spectra(
    curve: &PesCurve,
    contour: &SesContour,
    kin: &KineticSpec,
    disc: &Discretization,
    theta_grid: &[f64],
) -> Result<Vec<Vec<C64>>> {
    theta_grid
        .iter()
        .map(|&theta| {
            let c = contour.with_theta(theta);
            c.validate()?;
            let values = ses::solve_values(curve, &c, kin, disc);
            log::debug!("theta = {theta:.4}: spectrum done");
            values
        })
        .collect()
}

/// Tracks `seeds`, given as eigenvalues at `contour.theta`, over `theta_grid`.
pub fn run_theta_trajectory(
    curve: &PesCurve,
    contour: &SesContour,
    kin: &KineticSpec,
    disc: &Discretization,
    theta_grid: &[f64],
    seeds: &[C64],
) -> Result<Vec<ThetaTrajectory>> {
    let all = spectra(curve, contour, kin, disc, theta_grid)?;
    track(
        theta_grid,
        &all,
        nearest_index(theta_grid, contour.theta),
        seeds,
    )
}

fn nearest_pair(pairs: &[Eigenpair], target: C64) -> &Eigenpair {
    pairs
        .iter()
        .min_by(|a, b| {
            (a.energy - target)
                .norm()
                .total_cmp(&(b.energy - target).norm())
        })
        .expect("non-empty spectrum")
}

/// Selects localized decaying states at the reference angle, follows them
/// along θ, places each at its velocity minimum, classifies by nodes and
/// evaluates the dipole table at the TS angle.
pub fn find_resonances(
    curve: &PesCurve,
    contour: &SesContour,
    kin: &KineticSpec,
    disc: &Discretization,
    spec: &FinderSpec,
) -> Result<ResonanceReport> {
    contour.validate()?;
    let reference = ses::solve(curve, contour, kin, disc)?;
    let picked = select_candidates(&reference, curve.r(), contour, &spec.selection);
    info!(
        "{} candidate poles at theta = {}",
        picked.len(),
        contour.theta
    );

    let node_window = spec
        .node_window
        .or(spec.selection.localization_window)
        .unwrap_or((-contour.r_left, contour.r_right));
    let node_range = window_range(curve.r(), node_window);
    let mut nodes = Vec::with_capacity(picked.len());
    for &(i, _) in &picked {
        let psi = c_normalize(&reference[i].vector).unwrap_or_else(|_| reference[i].vector.clone());
        nodes.push(count_nodes(&psi, node_range.clone(), spec.amplitude_floor)?);
    }

    let seeds: Vec<C64> = picked.iter().map(|&(i, _)| reference[i].energy).collect();
    let all = spectra(curve, contour, kin, disc, &spec.theta_grid)?;
    let trajectories = track(
        &spec.theta_grid,
        &all,
        nearest_index(&spec.theta_grid, contour.theta),
        &seeds,
    )?;

    let mut warnings = Vec::new();
    let mut kept = Vec::new();
    for (k, traj) in trajectories.into_iter().enumerate() {
        let st = detect_stationary(&traj)?;
        if st.at_boundary {
            let msg = format!(
                "state {k} ({} nodes): velocity minimum at the theta grid edge {:.4}, stationary point not bracketed",
                nodes[k], st.theta_star
            );
            warn!("{msg}");
            warnings.push(msg);
        }
        if let (Some(limit), Some(v)) = (spec.cusp_threshold, st.velocity) {
            if v > limit {
                let msg = format!(
                    "state {k} dropped: minimal velocity {v:.3e} above cusp threshold {limit:.3e}"
                );
                warn!("{msg}");
                warnings.push(msg);
                continue;
            }
        }
        kept.push((k, traj, st));
    }
    kept.sort_by(|a, b| a.2.energy.re.total_cmp(&b.2.energy.re));

    let found: Vec<usize> = kept.iter().map(|(k, _, _)| nodes[*k]).collect();
    for required in [0, 3] {
        if !found.contains(&required) {
            return Err(Error::Classification {
                missing: required,
                found,
            });
        }
    }
    let ts = kept
        .iter()
        .position(|(k, _, _)| nodes[*k] == 3)
        .expect("checked");
    let gr = kept
        .iter()
        .enumerate()
        .filter(|(_, (k, _, _))| nodes[*k] == 0)
        .min_by(|a, b| (-a.1 .2.energy.im).total_cmp(&(-b.1 .2.energy.im)))
        .map(|(i, _)| i)
        .expect("checked");

    // All wavefunctions share the TS contour so their c-products are consistent.
    let ts_stationary = kept[ts].2;
    let theta_dipole = ts_stationary.theta_star;
    let at_dipole = if theta_dipole == contour.theta {
        reference
    } else {
        ses::solve(curve, &contour.with_theta(theta_dipole), kin, disc)?
    };
    let localization = window_range(
        curve.r(),
        spec.selection
            .localization_window
            .unwrap_or((-contour.r_left, contour.r_right)),
    );
    let mut resonances = Vec::with_capacity(kept.len());
    for (pos, (k, traj, st)) in kept.iter().enumerate() {
        let target = traj.energies[ts_stationary.index];
        let pair = nearest_pair(&at_dipole, target);
        let psi = c_normalize(&pair.vector)?;
        let role = if pos == ts {
            Some(Role::Ts)
        } else if pos == gr {
            Some(Role::Gr)
        } else {
            None
        };
        resonances.push(Resonance {
            e_r: st.energy.re,
            gamma: -2.0 * st.energy.im,
            nodes: nodes[*k],
            theta_star: st.theta_star,
            interior_fraction: super::interior_fraction(&pair.vector, localization.clone()),
            boundary_warning: st.at_boundary,
            role,
            psi,
        });
    }
    let psis: Vec<&[C64]> = resonances.iter().map(|r| r.psi.as_slice()).collect();
    let dx = curve
        .spacing()
        .ok_or_else(|| Error::InvalidInput("resonance search needs a uniform grid".into()))?;
    let dipoles = dipole_matrix(&psis, curve.r(), dx, &contour.with_theta(theta_dipole))?;

    Ok(ResonanceReport {
        resonances,
        trajectories: kept.iter().map(|(_, t, _)| t.clone()).collect(),
        stationary: kept.iter().map(|(_, _, s)| *s).collect(),
        dipoles,
        theta_dipole,
        warnings,
    })
}
