//! Physical constants in Hartree atomic units.

/// Electron masses per unified atomic mass unit.
pub const AMU: f64 = 1822.888486;

pub const NITROGEN_14_AMU: f64 = 14.003074;
pub const OXYGEN_16_AMU: f64 = 15.994915;

/// Speed of light in atomic units.
pub const SPEED_OF_LIGHT: f64 = 137.035999;

/// One bohr in micrometers.
pub const BOHR_IN_MICROMETERS: f64 = 5.29177210903e-5;
