//! Smooth exterior scaling: the complex contour, the kinetic absorbing terms it
//! generates, and the finite-difference Hamiltonian on a uniform grid.

use std::f64::consts::{FRAC_PI_4, LN_2};

use serde::{Deserialize, Serialize};

use crate::constants::{AMU, OXYGEN_16_AMU};
use crate::error::{Error, Result};
use crate::linalg::{self, ComplexMatrix, Eigenpair, C64};
use crate::pes::PesCurve;

/// Points with g above this value must sit where the potential is flat.
pub const FLAT_REGION_G: f64 = 1e-2;

/// Contour parameters: rotation angle, switch sharpness and the two switch
/// points. The unscaled interior is roughly (-r_left, r_right).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SesContour {
    pub theta: f64,
    pub lambda: f64,
    pub r_left: f64,
    pub r_right: f64,
}

impl SesContour {
    pub fn new(theta: f64, lambda: f64, r_left: f64, r_right: f64) -> Result<Self> {
        let c = Self {
            theta,
            lambda,
            r_left,
            r_right,
        };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..FRAC_PI_4).contains(&self.theta) {
            return Err(Error::InvalidInput(format!(
                "theta must lie in [0, pi/4), got {}",
                self.theta
            )));
        }
        if !(self.lambda > 0.0) || !self.lambda.is_finite() {
            return Err(Error::InvalidInput(format!(
                "lambda must be positive, got {}",
                self.lambda
            )));
        }
        if !self.r_left.is_finite()
            || !self.r_right.is_finite()
            || !(self.r_left + self.r_right > 0.0)
        {
            return Err(Error::InvalidInput(format!(
                "switch points must enclose an interior (r_left = {}, r_right = {})",
                self.r_left, self.r_right
            )));
        }
        Ok(())
    }

    pub fn with_theta(&self, theta: f64) -> Self {
        Self { theta, ..*self }
    }

    fn phase_minus_one(&self) -> C64 {
        C64::from_polar(1.0, self.theta) - 1.0
    }

    fn args(&self, r: f64) -> (f64, f64) {
        (
            self.lambda * (r - self.r_right),
            self.lambda * (r + self.r_left),
        )
    }

    pub fn g(&self, r: f64) -> f64 {
        let (a, b) = self.args(r);
        logistic(2.0 * a) + logistic(-2.0 * b)
    }

    pub fn g_prime(&self, r: f64) -> f64 {
        let (a, b) = self.args(r);
        0.5 * self.lambda * (sech2(a) - sech2(b))
    }

    pub fn g_second(&self, r: f64) -> f64 {
        let (a, b) = self.args(r);
        -self.lambda * self.lambda * (sech2(a) * a.tanh() - sech2(b) * b.tanh())
    }

    pub fn f(&self, r: f64) -> C64 {
        1.0 + self.phase_minus_one() * self.g(r)
    }

    pub fn f_prime(&self, r: f64) -> C64 {
        self.phase_minus_one() * self.g_prime(r)
    }

    pub fn f_second(&self, r: f64) -> C64 {
        self.phase_minus_one() * self.g_second(r)
    }

    /// The scaled coordinate, the integral of f from the interior.
    pub fn big_f(&self, r: f64) -> C64 {
        let (a, b) = self.args(r);
        let inner = r + (ln_cosh(a) - ln_cosh(b)) / (2.0 * self.lambda);
        r + self.phase_minus_one() * inner
    }
}

fn logistic(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

fn sech2(x: f64) -> f64 {
    4.0 * logistic(2.0 * x) * logistic(-2.0 * x)
}

/// ln cosh without overflow for large arguments.
pub fn ln_cosh(x: f64) -> f64 {
    let a = x.abs();
    a + (-2.0 * a).exp().ln_1p() - LN_2
}

/// Coefficient of -d²/dr² in the 1D Hamiltonian (ħ²/2M in atomic units).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KineticSpec {
    pub inverse_mass_prefactor: f64,
}

impl Default for KineticSpec {
    /// 1/m_O, the prefactor printed in the effective Hamiltonian.
    fn default() -> Self {
        Self {
            inverse_mass_prefactor: 1.0 / (OXYGEN_16_AMU * AMU),
        }
    }
}

impl KineticSpec {
    pub fn new(inverse_mass_prefactor: f64) -> Result<Self> {
        if !(inverse_mass_prefactor > 0.0) || !inverse_mass_prefactor.is_finite() {
            return Err(Error::InvalidInput(format!(
                "kinetic prefactor must be positive, got {inverse_mass_prefactor}"
            )));
        }
        Ok(Self {
            inverse_mass_prefactor,
        })
    }

    /// Prefactor ħ²/2M for an effective mass M.
    pub fn from_mass(mass: f64) -> Result<Self> {
        Self::new(1.0 / (2.0 * mass))
    }
}

/// The three kinetic absorbing terms: multiplicative, first and second
/// derivative coefficients.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CapTerms {
    pub v0: C64,
    pub v1: C64,
    pub v2: C64,
}

pub fn cap_terms(r: f64, contour: &SesContour, kin: &KineticSpec) -> CapTerms {
    let p = kin.inverse_mass_prefactor;
    let f = contour.f(r);
    let f1 = contour.f_prime(r);
    let f2 = contour.f_second(r);
    let f_inv = f.inv();
    let f_inv2 = f_inv * f_inv;
    let f_inv3 = f_inv2 * f_inv;
    CapTerms {
        v0: 0.5 * p * f2 * f_inv3 - 1.25 * p * f1 * f1 * f_inv3 * f_inv,
        v1: 2.0 * p * f1 * f_inv3,
        v2: p * (1.0 - f_inv2),
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum Stencil {
    /// Second derivative (1, -2, 1)/h², first derivative (-1, 0, 1)/2h.
    ThreePoint,
    /// Second derivative (-1, 16, -30, 16, -1)/12h², first derivative
    /// (1, -8, 0, 8, -1)/12h.
    #[default]
    FivePoint,
}

impl Stencil {
    pub fn from_order(order: u32) -> Result<Self> {
        match order {
            3 => Ok(Stencil::ThreePoint),
            5 => Ok(Stencil::FivePoint),
            other => Err(Error::Config(format!(
                "stencil_order must be 3 or 5, got {other}"
            ))),
        }
    }

    pub fn order(self) -> u32 {
        match self {
            Stencil::ThreePoint => 3,
            Stencil::FivePoint => 5,
        }
    }

    /// (offset, second-derivative weight, first-derivative weight) before
    /// division by h² and h.
    fn weights(self) -> &'static [(isize, f64, f64)] {
        match self {
            Stencil::ThreePoint => &[(-1, 1.0, -0.5), (0, -2.0, 0.0), (1, 1.0, 0.5)],
            Stencil::FivePoint => &[
                (-2, -1.0 / 12.0, 1.0 / 12.0),
                (-1, 16.0 / 12.0, -8.0 / 12.0),
                (0, -30.0 / 12.0, 0.0),
                (1, 16.0 / 12.0, 8.0 / 12.0),
                (2, -1.0 / 12.0, -1.0 / 12.0),
            ],
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Discretization {
    pub stencil: Stencil,
    /// Largest deviation (hartree) of V from its end value allowed where the
    /// contour is already switching.
    pub flat_tolerance: f64,
}

impl Default for Discretization {
    fn default() -> Self {
        Self {
            stencil: Stencil::FivePoint,
            flat_tolerance: 1e-4,
        }
    }
}

/// Fails unless the potential is flat wherever the contour has begun to turn.
pub fn check_flat_tails(curve: &PesCurve, contour: &SesContour, tolerance: f64) -> Result<()> {
    let (r, v) = (curve.r(), curve.v());
    let n = r.len();
    let middle = 0.5 * (contour.r_right - contour.r_left);
    for (i, (&x, &e)) in r.iter().zip(v).enumerate() {
        if contour.g(x) < FLAT_REGION_G {
            continue;
        }
        let edge = if x < middle { v[0] } else { v[n - 1] };
        if (e - edge).abs() > tolerance {
            return Err(Error::Config(format!(
                "contour switch overlaps a non-flat potential: at r = {x} (point {i}) V differs \
                 from its asymptote by {:.3e} hartree (tolerance {tolerance:.1e}); move r_left/r_right \
                 outward or extend the curve",
                (e - edge).abs()
            )));
        }
    }
    Ok(())
}

/// Dense matrix of -p d²/dr² + V + V0 + V1 d/dr + V2 d²/dr².
///
/// The wavefunction vanishes one spacing beyond each grid end. Wider stencils
/// reach past that wall through the odd mirror image, which keeps the
/// five-point operator fourth-order accurate up to the boundary.
pub fn assemble_hamiltonian(
    curve: &PesCurve,
    contour: &SesContour,
    kin: &KineticSpec,
    disc: &Discretization,
) -> Result<ComplexMatrix> {
    contour.validate()?;
    let h = curve
        .spacing()
        .ok_or_else(|| Error::InvalidInput("the Hamiltonian needs a uniform grid".into()))?;
    check_flat_tails(curve, contour, disc.flat_tolerance)?;
    let p = kin.inverse_mass_prefactor;
    let n = curve.len();
    let mut m = ComplexMatrix::zeros(n);
    for (i, (&r, &v)) in curve.r().iter().zip(curve.v()).enumerate() {
        let cap = cap_terms(r, contour, kin);
        let second = (cap.v2 - p) / (h * h);
        let first = cap.v1 / h;
        for &(k, w2, w1) in disc.stencil.weights() {
            let Some((j, sign)) = mirrored(i as isize + k, n as isize) else {
                continue;
            };
            m.add(i, j, sign * (second * w2 + first * w1));
        }
        m.add(i, i, v + cap.v0);
    }
    Ok(m)
}

/// Grid index and sign standing in for stencil point `j`; `None` on a wall.
fn mirrored(j: isize, n: isize) -> Option<(usize, f64)> {
    match j {
        j if j == -1 || j == n => None,
        j if j < -1 => Some(((-j - 2) as usize, -1.0)),
        j if j > n => Some(((2 * n - j) as usize, -1.0)),
        j => Some((j as usize, 1.0)),
    }
}

pub fn solve(
    curve: &PesCurve,
    contour: &SesContour,
    kin: &KineticSpec,
    disc: &Discretization,
) -> Result<Vec<Eigenpair>> {
    linalg::eigensolve(&assemble_hamiltonian(curve, contour, kin, disc)?)
}

pub fn solve_values(
    curve: &PesCurve,
    contour: &SesContour,
    kin: &KineticSpec,
    disc: &Discretization,
) -> Result<Vec<C64>> {
    linalg::eigenvalues(&assemble_hamiltonian(curve, contour, kin, disc)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn reference_contour(theta: f64) -> SesContour {
        SesContour::new(theta, 2.0, 4.73, 4.35).unwrap()
    }

    #[test]
    fn g_limits() {
        let c = reference_contour(0.14);
        assert!(c.g(0.0).abs() < 1e-6);
        assert!((c.g(100.0) - 1.0).abs() < 1e-12);
        assert!((c.g(-100.0) - 1.0).abs() < 1e-12);
        let want = 1.0 + 0.5 * (0.0 - (2.0_f64 * (4.35 + 4.73)).tanh());
        assert!((c.g(4.35) - want).abs() < 1e-15);
    }

    #[test]
    fn f_endpoints() {
        let c = reference_contour(0.0);
        assert_eq!(c.f(3.0), C64::new(1.0, 0.0));
        let c = reference_contour(0.14);
        assert!((c.f(1e3) - C64::from_polar(1.0, 0.14)).norm() < 1e-15);
    }

    #[test]
    fn big_f_is_identity_without_rotation() {
        let c = reference_contour(0.0);
        for r in [-30.0, -1.0, 0.0, 2.5, 400.0] {
            assert_eq!(c.big_f(r), C64::new(r, 0.0));
        }
    }

    #[test]
    fn ln_cosh_is_finite_far_out() {
        assert!((ln_cosh(1000.0) - (1000.0 - LN_2)).abs() < 1e-12);
        assert!((ln_cosh(0.3) - 0.3_f64.cosh().ln()).abs() < 1e-15);
    }

    #[test]
    fn cap_terms_vanish_without_rotation_and_in_asymptote() {
        let kin = KineticSpec::new(0.7).unwrap();
        let t = cap_terms(4.35, &reference_contour(0.0), &kin);
        assert_eq!(
            (t.v0, t.v1, t.v2),
            (C64::new(0.0, 0.0), C64::new(0.0, 0.0), C64::new(0.0, 0.0))
        );
        let t = cap_terms(200.0, &reference_contour(0.3), &kin);
        assert!(t.v0.norm() < 1e-15 && t.v1.norm() < 1e-15);
        let want = 0.7 * (1.0 - C64::from_polar(1.0, -0.6));
        assert!((t.v2 - want).norm() < 1e-15);
    }

    #[test]
    fn contour_validation() {
        assert!(SesContour::new(0.8, 2.0, 1.0, 1.0).is_err());
        assert!(SesContour::new(0.1, 0.0, 1.0, 1.0).is_err());
        assert!(SesContour::new(0.1, 1.0, -2.0, 1.0).is_err());
        assert!(SesContour::new(0.1, 1.0, -2.0, 3.0).is_ok());
    }

    #[test]
    fn stencil_rows_annihilate_constants() {
        let curve = PesCurve::sample_uniform(-10.0, 0.05, 401, |_| 0.0).unwrap();
        let contour = SesContour::new(0.3, 2.0, 4.0, 4.0).unwrap();
        let kin = KineticSpec::new(1.0).unwrap();
        for stencil in [Stencil::ThreePoint, Stencil::FivePoint] {
            let disc = Discretization {
                stencil,
                flat_tolerance: 1e-4,
            };
            let m = assemble_hamiltonian(&curve, &contour, &kin, &disc).unwrap();
            let ones = vec![C64::new(1.0, 0.0); curve.len()];
            let out = m.matvec(&ones);
            let cap_diag: Vec<C64> = curve
                .r()
                .iter()
                .map(|&r| cap_terms(r, &contour, &kin).v0)
                .collect();
            for i in 3..curve.len() - 3 {
                assert!((out[i] - cap_diag[i]).norm() < 1e-10, "row {i}");
            }
        }
    }

    #[test]
    fn switch_inside_structure_is_rejected() {
        let curve = PesCurve::sample_uniform(-6.0, 0.05, 241, |r| (-r * r).exp()).unwrap();
        let contour = SesContour::new(0.2, 2.0, 0.5, 0.5).unwrap();
        let err = assemble_hamiltonian(
            &curve,
            &contour,
            &KineticSpec::default(),
            &Discretization::default(),
        );
        assert!(matches!(err, Err(Error::Config(_))));
    }
}
