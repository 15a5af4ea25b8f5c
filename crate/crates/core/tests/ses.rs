mod common;

use std::f64::consts::PI;

use cavres::linalg::{eigensolve, eigenvalues, ComplexMatrix, C64};
use cavres::pes::PesCurve;
use cavres::ses::{
    assemble_hamiltonian, cap_terms, check_flat_tails, solve_values, Discretization, KineticSpec,
    SesContour, Stencil,
};
use cavres::Error;

fn contour(theta: f64) -> SesContour {
    SesContour::new(theta, 2.0, 4.73, 4.35).unwrap()
}

/// Switching function written from its tanh form.
fn g_tanh(r: f64, c: &SesContour) -> f64 {
    1.0 + 0.5 * ((c.lambda * (r - c.r_right)).tanh() - (c.lambda * (r + c.r_left)).tanh())
}

fn f_tanh(r: f64, c: &SesContour) -> C64 {
    1.0 + (C64::from_polar(1.0, c.theta) - 1.0) * g_tanh(r, c)
}

fn sample_points() -> Vec<f64> {
    (0..20)
        .map(|i| -9.0 + 18.0 * ((i as f64 * 0.618_033_988_75) % 1.0))
        .collect()
}

#[test]
fn switching_function_examples() {
    let c = contour(0.14);
    assert!(c.g(0.0).abs() < 1e-6);
    assert!((c.g(100.0) - 1.0).abs() < 1e-12);
    let want = 1.0 + 0.5 * (0.0 - (2.0_f64 * 9.08).tanh());
    assert!((c.g(4.35) - want).abs() < 1e-14);
    for r in sample_points() {
        assert!((c.g(r) - g_tanh(r, &c)).abs() < 1e-14, "r = {r}");
    }
}

#[test]
fn contour_factor_examples() {
    let flat = contour(0.0);
    assert!(sample_points()
        .into_iter()
        .all(|r| flat.f(r) == C64::new(1.0, 0.0)));
    let c = contour(0.14);
    let far = c.f(500.0);
    assert!((far - C64::new(0.14f64.cos(), 0.14f64.sin())).norm() < 1e-15);
    assert!((c.f(4.35) - f_tanh(4.35, &c)).norm() < 1e-14);
}

#[test]
fn scaled_coordinate_derivative_matches_contour_factor() {
    let c = contour(0.14);
    let h = 1e-5;
    for r in sample_points() {
        let d = (c.big_f(r + h) - c.big_f(r - h)) / (2.0 * h);
        assert!((d - c.f(r)).norm() < 1e-8, "r = {r}: {d} vs {}", c.f(r));
    }
}

#[test]
fn scaled_coordinate_asymptote() {
    let c = contour(0.14);
    let phase = C64::from_polar(1.0, 0.14);
    let offset = |r: f64| c.big_f(r) - phase * r;
    assert!((offset(1e3) - offset(2e3)).norm() < 1e-9);
    assert!(c.big_f(1e6).re.is_finite());
    let flat = contour(0.0);
    assert_eq!(flat.big_f(1e3), C64::new(1e3, 0.0));
}

#[test]
fn cap_terms_vanish_without_rotation() {
    let c = contour(0.0);
    let kin = KineticSpec::new(1.0).unwrap();
    for r in sample_points() {
        let t = cap_terms(r, &c, &kin);
        assert_eq!(
            (t.v0, t.v1, t.v2),
            (C64::default(), C64::default(), C64::default())
        );
    }
}

#[test]
fn cap_terms_in_asymptotic_region() {
    let c = contour(0.3);
    let p = 0.25;
    let t = cap_terms(60.0, &c, &KineticSpec::new(p).unwrap());
    assert!(t.v0.norm() < 1e-15);
    assert!(t.v1.norm() < 1e-15);
    let want = p * (1.0 - C64::from_polar(1.0, -0.6));
    assert!((t.v2 - want).norm() < 1e-15);
}

#[test]
fn cap_terms_in_switch_region_match_numerical_derivatives() {
    let c = contour(0.14);
    let p = 0.5;
    let kin = KineticSpec::new(p).unwrap();
    let h = 1e-4;
    for r in [c.r_right, c.r_right - 0.3, -c.r_left, -c.r_left + 0.2] {
        let (fm, f0, fp) = (f_tanh(r - h, &c), f_tanh(r, &c), f_tanh(r + h, &c));
        let d1 = (fp - fm) / (2.0 * h);
        let d2 = (fp - 2.0 * f0 + fm) / (h * h);
        let v0 = p / 2.0 * d2 / f0.powi(3) - 5.0 * p / 4.0 * d1 * d1 / f0.powi(4);
        let v1 = 2.0 * p * d1 / f0.powi(3);
        let v2 = p * (1.0 - f0.powi(-2));
        let t = cap_terms(r, &c, &kin);
        assert!((t.v0 - v0).norm() < 1e-6 * v0.norm().max(1e-3), "V0 at {r}");
        assert!((t.v1 - v1).norm() < 1e-7 * v1.norm().max(1e-3), "V1 at {r}");
        assert!((t.v2 - v2).norm() < 1e-13, "V2 at {r}");
    }
}

#[test]
fn cap_terms_negligible_deep_inside() {
    let c = SesContour::new(0.14, 2.0, 20.0, 20.0).unwrap();
    let kin = KineticSpec::default();
    let mut checked = 0;
    for i in 0..=200 {
        let r = -10.0 + 0.1 * i as f64;
        if c.g(r) < 1e-12 {
            let t = cap_terms(r, &c, &kin);
            assert!(
                t.v0.norm().max(t.v1.norm()).max(t.v2.norm()) < 1e-14,
                "r = {r}"
            );
            checked += 1;
        }
    }
    assert!(checked > 100);
}

fn wide_flat(theta: f64) -> SesContour {
    SesContour::new(theta, 2.0, 100.0, 100.0).unwrap()
}

#[test]
fn unrotated_matrix_is_real_symmetric() {
    let curve = PesCurve::sample_uniform(-3.0, 0.1, 61, |x| 0.3 * x * x).unwrap();
    let kin = KineticSpec::new(0.5).unwrap();
    for stencil in [Stencil::ThreePoint, Stencil::FivePoint] {
        let disc = Discretization {
            stencil,
            flat_tolerance: 1e-4,
        };
        let m = assemble_hamiltonian(&curve, &wide_flat(0.0), &kin, &disc).unwrap();
        let n = m.dim();
        for i in 0..n {
            for j in 0..n {
                assert_eq!(m.get(i, j).im, 0.0);
                assert_eq!(m.get(i, j), m.get(j, i));
                let band = if stencil == Stencil::ThreePoint { 1 } else { 2 };
                if i.abs_diff(j) > band {
                    assert_eq!(m.get(i, j), C64::default());
                }
            }
        }
        // Diagonal carries the potential on top of the kinetic stencil.
        let h2 = 0.01;
        let centre = if stencil == Stencil::ThreePoint {
            2.0
        } else {
            2.5
        };
        assert!((m.get(30, 30).re - (0.5 * centre / h2 + 0.0)).abs() < 1e-10);
    }
}

#[test]
fn empty_box_spectrum() {
    // Dirichlet box of unit length with 64 interior points.
    let n = 64;
    let h = 1.0 / (n + 1) as f64;
    let curve = PesCurve::sample_uniform(h, h, n, |_| 0.0).unwrap();
    let p = 1.0;
    let disc = Discretization::default();
    let values = solve_values(
        &curve,
        &wide_flat(0.0),
        &KineticSpec::new(p).unwrap(),
        &disc,
    )
    .unwrap();
    for k in 1..=3 {
        let exact = p * (k as f64 * PI).powi(2);
        let rel = (values[k - 1].re - exact).abs() / exact;
        assert!(
            rel < 1e-3,
            "level {k}: {} vs {exact} (rel {rel:.2e})",
            values[k - 1].re
        );
    }
}

#[test]
fn kinetic_rows_annihilate_constants() {
    let curve = PesCurve::sample_uniform(-5.0, 0.05, 201, |_| 0.0).unwrap();
    let c = SesContour::new(0.2, 2.0, 1.5, 1.5).unwrap();
    let m = assemble_hamiltonian(
        &curve,
        &c,
        &KineticSpec::new(1.0).unwrap(),
        &Discretization::default(),
    )
    .unwrap();
    let ones = vec![C64::new(1.0, 0.0); 201];
    let out = m.matvec(&ones);
    // The potential is zero, so each interior row sum is the V0 term alone.
    for (i, (&r, sum)) in curve.r().iter().zip(&out).enumerate().take(199).skip(2) {
        let v0 = cap_terms(r, &c, &KineticSpec::new(1.0).unwrap()).v0;
        assert!((sum - v0).norm() < 1e-10, "row {i}");
    }
}

#[test]
fn switch_inside_structured_potential_is_rejected() {
    let curve = PesCurve::sample_uniform(-6.0, 0.05, 241, |x| (-x * x).exp()).unwrap();
    let c = SesContour::new(0.1, 2.0, 0.5, 0.5).unwrap();
    assert!(matches!(
        check_flat_tails(&curve, &c, 1e-4),
        Err(Error::Config(_))
    ));
    let err = assemble_hamiltonian(
        &curve,
        &c,
        &KineticSpec::default(),
        &Discretization::default(),
    )
    .unwrap_err();
    assert_eq!(err.exit_code(), 2);
}

#[test]
fn eigensolver_trivial_cases() {
    let d = ComplexMatrix::from_fn(2, |i, j| match (i, j) {
        (0, 0) => C64::new(1.0, 0.0),
        (1, 1) => C64::new(2.0, 3.0),
        _ => C64::default(),
    });
    let pairs = eigensolve(&d).unwrap();
    assert!((pairs[0].energy - C64::new(1.0, 0.0)).norm() < 1e-14);
    assert!((pairs[1].energy - C64::new(2.0, 3.0)).norm() < 1e-14);
    assert!((pairs[0].vector[0].norm() - 1.0).abs() < 1e-14);
    assert!((pairs[1].vector[1].norm() - 1.0).abs() < 1e-14);

    let (a, b) = (C64::new(0.3, -0.2), C64::new(1.1, 0.4));
    let s = ComplexMatrix::from_fn(2, |i, j| if i == j { a } else { b });
    let mut values = eigenvalues(&s).unwrap();
    values.sort_by(|x, y| x.re.total_cmp(&y.re));
    assert!((values[0] - (a - b)).norm() < 1e-14);
    assert!((values[1] - (a + b)).norm() < 1e-14);
}

/// Deterministic scrambled values in [-1, 1).
fn scrambled(k: usize) -> f64 {
    2.0 * ((k as f64 * 0.754_877_666_2 + 0.137).fract()) - 1.0
}

#[test]
fn eigenvalues_of_companion_matrix_are_polynomial_roots() {
    let n = 10;
    let roots: Vec<C64> = (0..n)
        .map(|k| {
            C64::from_polar(
                1.0 + 0.3 * scrambled(k),
                2.0 * PI * (k as f64 + 0.4 * scrambled(k + 17)) / n as f64,
            )
        })
        .collect();
    let mut coeffs = vec![C64::new(1.0, 0.0)];
    for &z in &roots {
        let mut next = vec![C64::default(); coeffs.len() + 1];
        for (i, &c) in coeffs.iter().enumerate() {
            next[i + 1] += c;
            next[i] -= z * c;
        }
        coeffs = next;
    }
    // coeffs[i] multiplies x^i; the leading coefficient is 1.
    let m = ComplexMatrix::from_fn(n, |i, j| {
        if i == 0 {
            -coeffs[n - 1 - j]
        } else if j + 1 == i {
            C64::new(1.0, 0.0)
        } else {
            C64::default()
        }
    });
    let values = eigenvalues(&m).unwrap();
    for z in &roots {
        let best = values
            .iter()
            .map(|v| (v - z).norm())
            .fold(f64::INFINITY, f64::min);
        assert!(
            best < 1e-10,
            "root {z}: nearest eigenvalue off by {best:.2e}"
        );
    }
}

/// Trace of (A - zI)^-1 by Gaussian elimination with partial pivoting.
fn resolvent_trace(a: &ComplexMatrix, z: C64) -> C64 {
    let n = a.dim();
    let mut m: Vec<Vec<C64>> = (0..n)
        .map(|i| {
            let mut row: Vec<C64> = a.row(i).to_vec();
            row[i] -= z;
            row.extend((0..n).map(|j| {
                if i == j {
                    C64::new(1.0, 0.0)
                } else {
                    C64::default()
                }
            }));
            row
        })
        .collect();
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&x, &y| m[x][col].norm().total_cmp(&m[y][col].norm()))
            .unwrap();
        m.swap(col, piv);
        let d = m[col][col];
        m[col].iter_mut().for_each(|x| *x /= d);
        for row in 0..n {
            if row != col {
                let f = m[row][col];
                let pivot_row = m[col].clone();
                m[row]
                    .iter_mut()
                    .zip(&pivot_row)
                    .for_each(|(x, p)| *x -= f * p);
            }
        }
    }
    (0..n).map(|i| m[i][n + i]).sum()
}

#[test]
fn dense_eigenvalues_are_characteristic_roots() {
    // Newton on ln det(A - zI) refines each eigenvalue independently of the
    // eigensolver; the converged root must coincide with it.
    let n = 50;
    let a = ComplexMatrix::from_fn(n, |i, j| {
        C64::new(scrambled(3 * i * n + j), scrambled(7 * j * n + i + 11))
    });
    let values = eigenvalues(&a).unwrap();
    for &lambda in values.iter().step_by(5) {
        let mut z = lambda + C64::new(1e-6, -1e-6);
        for _ in 0..50 {
            let step = resolvent_trace(&a, z).inv();
            z += step;
            if step.norm() < 1e-14 * (1.0 + z.norm()) {
                break;
            }
        }
        assert!(
            (z - lambda).norm() < 1e-8,
            "eigenvalue {lambda} vs root {z}"
        );
    }
}

#[test]
fn eigensolve_residuals_and_norms_on_dense_matrix() {
    let n = 50;
    let m = ComplexMatrix::from_fn(n, |i, j| {
        C64::new(scrambled(i * n + j), scrambled(i * n + j + 7919))
    });
    let norm = m.frobenius_norm();
    for pair in eigensolve(&m).unwrap() {
        let len: f64 = pair.vector.iter().map(|z| z.norm_sqr()).sum();
        assert!((len - 1.0).abs() < 1e-12);
        let hv = m.matvec(&pair.vector);
        let res: f64 = hv
            .iter()
            .zip(&pair.vector)
            .map(|(a, b)| (a - pair.energy * b).norm_sqr())
            .sum::<f64>()
            .sqrt();
        assert!(res <= 1e-8 * norm);
    }
}

#[test]
fn unrotated_example_spectrum_is_real() {
    let cfg = common::load("example.toml");
    let (curve, _) = cavres::commands::cmd_ingest(&cfg).unwrap();
    let c = cfg.config.contour().unwrap().with_theta(0.0);
    let values = solve_values(
        &curve,
        &c,
        &cfg.config.kinetic().unwrap(),
        &cfg.config.discretization().unwrap(),
    )
    .unwrap();
    let worst = values.iter().map(|z| z.im.abs()).fold(0.0, f64::max);
    assert!(worst < 1e-10, "max |Im E| = {worst:.2e}");
}
