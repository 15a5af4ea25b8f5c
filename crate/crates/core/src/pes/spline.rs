//! Interpolating cubic splines on strictly increasing knots.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SplineEnd {
    /// Zero second derivative at both ends.
    #[default]
    Natural,
    /// Continuous third derivative across the second and penultimate knots.
    /// Reproduces cubic polynomials exactly.
    NotAKnot,
}

#[derive(Clone, Debug)]
pub struct CubicSpline {
    x: Vec<f64>,
    y: Vec<f64>,
    /// Second derivatives at the knots.
    m: Vec<f64>,
}

impl CubicSpline {
    pub fn new(x: &[f64], y: &[f64], end: SplineEnd) -> Result<Self> {
        if x.len() != y.len() || x.len() < 2 {
            return Err(Error::InvalidInput(format!(
                "spline needs matching knot arrays of length >= 2 (got {} and {})",
                x.len(),
                y.len()
            )));
        }
        if x.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidInput(
                "spline knots must be strictly increasing".into(),
            ));
        }
        let m = match end {
            SplineEnd::NotAKnot if x.len() >= 4 => not_a_knot_moments(x, y),
            _ => natural_moments(x, y),
        };
        Ok(Self {
            x: x.to_vec(),
            y: y.to_vec(),
            m,
        })
    }

    pub fn eval(&self, t: f64) -> f64 {
        let n = self.x.len();
        let i = match self.x.partition_point(|&k| k <= t) {
            0 => 0,
            p if p >= n => n - 2,
            p => p - 1,
        };
        let h = self.x[i + 1] - self.x[i];
        let a = (self.x[i + 1] - t) / h;
        let b = (t - self.x[i]) / h;
        a * self.y[i]
            + b * self.y[i + 1]
            + ((a * a * a - a) * self.m[i] + (b * b * b - b) * self.m[i + 1]) * h * h / 6.0
    }
}

/// Solves a tridiagonal system in place (Thomas algorithm).
fn solve_tridiagonal(sub: &[f64], diag: &mut [f64], sup: &[f64], rhs: &mut [f64]) {
    let n = diag.len();
    for i in 1..n {
        let w = sub[i] / diag[i - 1];
        diag[i] -= w * sup[i - 1];
        rhs[i] -= w * rhs[i - 1];
    }
    rhs[n - 1] /= diag[n - 1];
    for i in (0..n - 1).rev() {
        rhs[i] = (rhs[i] - sup[i] * rhs[i + 1]) / diag[i];
    }
}

fn steps_and_rhs(x: &[f64], y: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let h: Vec<f64> = x.windows(2).map(|w| w[1] - w[0]).collect();
    let slope: Vec<f64> = y
        .windows(2)
        .zip(&h)
        .map(|(w, h)| (w[1] - w[0]) / h)
        .collect();
    let rhs = slope.windows(2).map(|s| 6.0 * (s[1] - s[0])).collect();
    (h, rhs)
}

fn natural_moments(x: &[f64], y: &[f64]) -> Vec<f64> {
    let n = x.len();
    let mut m = vec![0.0; n];
    if n < 3 {
        return m;
    }
    let (h, mut rhs) = steps_and_rhs(x, y);
    let k = n - 2;
    let mut diag: Vec<f64> = (0..k).map(|i| 2.0 * (h[i] + h[i + 1])).collect();
    let sub: Vec<f64> = (0..k).map(|i| h[i]).collect();
    let sup: Vec<f64> = (0..k).map(|i| h[i + 1]).collect();
    solve_tridiagonal(&sub, &mut diag, &sup, &mut rhs);
    m[1..n - 1].copy_from_slice(&rhs);
    m
}

/// End moments are eliminated through the not-a-knot conditions, leaving a
/// diagonally dominant tridiagonal system for the interior moments.
fn not_a_knot_moments(x: &[f64], y: &[f64]) -> Vec<f64> {
    let n = x.len();
    let (h, mut rhs) = steps_and_rhs(x, y);
    let k = n - 2;
    let mut diag: Vec<f64> = (0..k).map(|i| 2.0 * (h[i] + h[i + 1])).collect();
    let mut sub: Vec<f64> = (0..k).map(|i| h[i]).collect();
    let mut sup: Vec<f64> = (0..k).map(|i| h[i + 1]).collect();

    let (h0, h1) = (h[0], h[1]);
    diag[0] = (h0 + h1) * (h0 + 2.0 * h1) / h1;
    sup[0] = (h1 * h1 - h0 * h0) / h1;
    let (ha, hb) = (h[n - 3], h[n - 2]);
    diag[k - 1] = (ha + hb) * (hb + 2.0 * ha) / ha;
    sub[k - 1] = (ha * ha - hb * hb) / ha;
    solve_tridiagonal(&sub, &mut diag, &sup, &mut rhs);

    let mut m = vec![0.0; n];
    m[1..n - 1].copy_from_slice(&rhs);
    m[0] = ((h0 + h1) * m[1] - h0 * m[2]) / h1;
    m[n - 1] = ((ha + hb) * m[n - 2] - hb * m[n - 3]) / ha;
    m
}
