mod common;

use cavres::linalg::C64;
use cavres::oracle::{
    find_pole, poles_from_scan, transfer_matrix, transmission, PiecewisePotential,
};
use cavres::Error;

fn det(m: &[[C64; 2]; 2]) -> C64 {
    m[0][0] * m[1][1] - m[0][1] * m[1][0]
}

fn double_barrier(height: f64, width: f64) -> PiecewisePotential {
    PiecewisePotential::from_inner(
        vec![-1.0 - width, -1.0, 1.0, 1.0 + width],
        &[height, 0.0, height],
    )
    .unwrap()
}

#[test]
fn free_space_transmits_fully() {
    let free = PiecewisePotential::from_inner(vec![-1.0, 1.0], &[0.0]).unwrap();
    let kin = common::unit_kinetic();
    for e in [0.01, 0.7, 3.0, 42.0] {
        let t = transmission(&free, C64::new(e, 0.0), &kin).unwrap();
        assert!((t - 1.0).norm() < 1e-13, "E = {e}: t = {t}");
    }
}

#[test]
fn rectangular_barrier_matches_closed_form() {
    let (v0, a, p) = (2.0, 1.3, 0.7);
    let pot = PiecewisePotential::from_inner(vec![0.0, a], &[v0]).unwrap();
    let kin = cavres::ses::KineticSpec::new(p).unwrap();
    for e in [0.05, 0.4, 1.1, 1.9, 2.3, 5.0, 11.0] {
        let t = transmission(&pot, C64::new(e, 0.0), &kin).unwrap();
        let want = if e < v0 {
            let kappa = ((v0 - e) / p).sqrt();
            1.0 / (1.0 + v0 * v0 * (kappa * a).sinh().powi(2) / (4.0 * e * (v0 - e)))
        } else {
            let k = ((e - v0) / p).sqrt();
            1.0 / (1.0 + v0 * v0 * (k * a).sin().powi(2) / (4.0 * e * (e - v0)))
        };
        assert!(
            (t.norm_sqr() - want).abs() < 1e-12,
            "E = {e}: {} vs {want}",
            t.norm_sqr()
        );
    }
}

#[test]
fn real_energy_determinant_is_one() {
    let pot =
        PiecewisePotential::from_inner(vec![-2.0, -0.4, 0.3, 1.7, 2.2], &[3.0, -0.5, 1.2, 4.0])
            .unwrap();
    let kin = common::unit_kinetic();
    for i in 0..40 {
        let e = 0.013 + 0.37 * i as f64;
        let m = transfer_matrix(&pot, C64::new(e, 0.0), &kin).unwrap();
        // Cancellation in the determinant scales with the size of its two products.
        let scale = (m[0][0] * m[1][1])
            .norm()
            .max((m[0][1] * m[1][0]).norm())
            .max(1.0);
        let d = det(&m);
        assert!(
            (d - 1.0).norm() < 1e-12 * scale,
            "E = {e}: det = {d}, scale {scale:e}"
        );
    }
}

#[test]
fn lowest_double_barrier_pole_sits_on_transmission_peak() {
    let pot = PiecewisePotential::from_inner(vec![-2.0, -1.0, 1.0, 2.0], &[0.5, 0.0, 0.5]).unwrap();
    let kin = common::unit_kinetic();
    let scan: Vec<(f64, f64)> = (1..=20_000)
        .map(|i| {
            let e = 1e-4 * i as f64 + 3e-7;
            (
                e,
                transmission(&pot, C64::new(e, 0.0), &kin).unwrap().norm(),
            )
        })
        .collect();
    let peak = scan
        .windows(3)
        .find(|w| w[1].1 > w[0].1 && w[1].1 > w[2].1)
        .map(|w| w[1])
        .expect("transmission has a peak");
    assert!(
        (peak.1 - 1.0).abs() < 1e-6,
        "symmetric barrier peaks at full transmission"
    );

    let pole = find_pole(&pot, C64::new(peak.0, -0.01), &kin).unwrap();
    assert!(pole.energy.im < 0.0 && pole.residual < 1e-10);
    assert!(
        (pole.energy.re - peak.0).abs() < -pole.energy.im,
        "pole {} vs peak {}",
        pole.energy,
        peak.0
    );

    // |t| diverges at the pole: maximize it on successively finer complex grids.
    let mut centre = C64::new(peak.0, -0.3);
    let mut half = 0.4;
    for _ in 0..6 {
        let step = half / 50.0;
        let mut best = (0.0, centre);
        for i in -50..=50 {
            for j in -50..=50 {
                let e = centre + C64::new(i as f64 * step, j as f64 * step);
                if e.im >= 0.0 {
                    continue;
                }
                let t = transmission(&pot, e, &kin).unwrap().norm();
                if t > best.0 {
                    best = (t, e);
                }
            }
        }
        centre = best.1;
        half = 4.0 * step;
    }
    assert!(
        (centre - pole.energy).norm() < 1e-6,
        "grid maximum {centre} vs pole {}",
        pole.energy
    );
}

#[test]
fn thicker_barriers_give_narrower_poles() {
    let kin = common::unit_kinetic();
    let mut previous = f64::NEG_INFINITY;
    for width in [0.25, 0.5, 1.0] {
        let pot = double_barrier(5.0, width);
        let poles = poles_from_scan(&pot, &kin, 1e-3, 4.9, 6000).unwrap();
        let im = poles[0].energy.im;
        assert!(im < 0.0);
        assert!(
            im > previous,
            "width {width}: Im E = {im:e} not closer to zero than {previous:e}"
        );
        previous = im;
    }
}

#[test]
fn far_guess_finds_no_pole() {
    let pot = double_barrier(5.0, 0.5);
    let err = find_pole(&pot, C64::new(-40.0, 30.0), &common::unit_kinetic()).unwrap_err();
    assert!(matches!(err, Error::NoPoleFound { .. }), "{err:?}");
    assert_eq!(err.exit_code(), 3);
}

#[test]
fn energy_on_segment_height_is_branch_point() {
    let pot = double_barrier(0.5, 1.0);
    let kin = common::unit_kinetic();
    assert!(matches!(
        transfer_matrix(&pot, C64::new(0.5, 0.0), &kin),
        Err(Error::BranchPoint { segment: 1, .. })
    ));
    assert!(matches!(
        transfer_matrix(&pot, C64::new(0.0, 0.0), &kin),
        Err(Error::BranchPoint { segment: 0, .. })
    ));
}

#[test]
fn nonzero_outer_segments_are_rejected() {
    assert!(PiecewisePotential::new(vec![0.0, 1.0], vec![0.1, 1.0, 0.0]).is_err());
    assert!(PiecewisePotential::new(vec![1.0, 0.0], vec![0.0, 1.0, 0.0]).is_err());
}

#[test]
fn shipped_barriers_have_three_narrow_poles() {
    let kin = common::unit_kinetic();
    for (name, pot) in common::synthetic_barriers() {
        let top = pot.max_height();
        let poles = poles_from_scan(&pot, &kin, 1e-3 * top, top, 6000).unwrap();
        assert!(poles.len() >= 3, "{name}: {} poles", poles.len());
        for p in &poles[..3] {
            assert!(p.energy.im < 0.0 && p.residual < 1e-10, "{name}: {p:?}");
            assert!(
                -2.0 * p.energy.im < 0.05 * p.energy.re,
                "{name}: broad pole {p:?}"
            );
        }
    }
}
