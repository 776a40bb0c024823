use ghostsim::coincidence::{
    build_layout, ghost_image, joint_intensity_classical, peak_centers, GhostImage, ImageOptions,
};
use ghostsim::fieldgrid::{make_grid, sample_spectrum, Grid1D, ObjectSpec, SpectrumKind, SpectrumProfile, SpectrumSpec};
use ghostsim::geometry::{solve_coincidence_image, Correlation, Geometry, Scheme, SourceKind};
use ghostsim::kernels::{closed_form_s1_arm1, compose_arm, relative_l2_after_phase, ArmDescription, ArmElement};
use ghostsim::montecarlo::accumulate;
use proptest::prelude::*;

fn k() -> f64 {
    Geometry::wavenumber_from_nm(800.0)
}

fn source(corr: Correlation) -> (SourceKind, SpectrumKind) {
    match corr {
        Correlation::Classical => (SourceKind::ThermalClassical, SpectrumKind::PowerSpectrum),
        Correlation::Quantum => (SourceKind::QuantumEntangled, SpectrumKind::BiphotonAmplitude),
    }
}

fn focused(base: &Geometry, corr: Correlation) -> Geometry {
    let sol = solve_coincidence_image(base, source(corr).0).unwrap();
    match base.scheme {
        Scheme::I => base.with_z1(sol.image_distance),
        Scheme::II => base.with_z3(sol.image_distance),
    }
}

fn image(geom: &Geometry, corr: Correlation, object: &ObjectSpec, g: &Grid1D, opts: &ImageOptions) -> GhostImage {
    let s = sample_spectrum(&SpectrumSpec::broadband(), source(corr).1, g).unwrap();
    ghost_image(geom, corr, object, g, &s, opts).unwrap()
}

#[test]
fn off_axis_slit_lands_where_the_image_law_puts_it() {
    let g = make_grid(1024, 5.0).unwrap();
    let slit = ObjectSpec::SingleSlit {
        width: 0.08,
        center: 0.15,
    };
    let layouts = [
        Geometry::scheme_i(20.0, 15.0, 10.0, 50.0, k()),
        Geometry::scheme_ii(5.0, 25.0, 10.0, 50.0, k()),
    ];
    for base in layouts {
        for corr in [Correlation::Quantum, Correlation::Classical] {
            let geom = focused(&base, corr);
            let img = image(&geom, corr, &slit, &g, &ImageOptions::default());
            let c = peak_centers(&img.coordinates, img.signal(), 1);
            let want = img.magnification * 0.15;
            assert_eq!(c.len(), 1, "{:?} {corr:?}", base.scheme);
            assert!(
                (c[0] - want).abs() <= g.dx(),
                "{:?} {corr:?}: peak {} expected {want}",
                base.scheme,
                c[0]
            );
        }
    }
}

#[test]
fn defocus_blurs_the_image() {
    let g = make_grid(1024, 5.0).unwrap();
    let slit = ObjectSpec::SingleSlit {
        width: 0.05,
        center: 0.0,
    };
    let base = Geometry::scheme_i(20.0, 15.0, 10.0, 50.0, k());
    let geom = focused(&base, Correlation::Quantum);
    let z1 = geom.require_z1().unwrap();
    let opts = ImageOptions {
        allow_defocus: true,
        ..ImageOptions::default()
    };
    // share of the signal inside the geometric image of the slit
    let sharp: Vec<f64> = [0.0, 1.0, 2.0, 4.0, 8.0]
        .iter()
        .map(|d| {
            let img = image(&base.with_z1(z1 + d), Correlation::Quantum, &slit, &g, &opts);
            let half = 0.5 * 0.05 * img.magnification.abs() + g.dx();
            let inside: f64 = img
                .coordinates
                .iter()
                .zip(img.signal())
                .filter(|(x, _)| x.abs() <= half)
                .map(|(_, v)| v)
                .sum();
            inside / img.signal().iter().sum::<f64>()
        })
        .collect();
    assert!(sharp[0] > 0.99, "{sharp:?}");
    for w in sharp.windows(2) {
        assert!(w[1] < w[0], "sharpness not decreasing: {sharp:?}");
    }
}

#[test]
fn entangled_image_has_higher_visibility() {
    let g = make_grid(1024, 5.0).unwrap();
    let object = ObjectSpec::DoubleSlit {
        separation: 0.4,
        width: 0.05,
    };
    let base = Geometry::scheme_i(20.0, 15.0, 10.0, 50.0, k());
    let q = image(&focused(&base, Correlation::Quantum), Correlation::Quantum, &object, &g, &Default::default());
    let c = image(&focused(&base, Correlation::Classical), Correlation::Classical, &object, &g, &Default::default());
    assert!(c.visibility < q.visibility, "classical {} quantum {}", c.visibility, q.visibility);
    assert!(c.visibility < 0.1);
}

#[test]
fn sampled_thermal_light_reveals_the_ghost_image() {
    let g = make_grid(256, 2.5).unwrap();
    let object = ObjectSpec::DoubleSlit {
        separation: 0.4,
        width: 0.08,
    };
    let base = Geometry::scheme_i(20.0, 15.0, 10.0, 50.0, k());
    let geom = focused(&base, Correlation::Classical);
    let layout = build_layout(&geom, Correlation::Classical, &object, &g, &ImageOptions::default()).unwrap();
    let s = sample_spectrum(
        &SpectrumSpec::Gaussian { width: 20.0 },
        SpectrumKind::PowerSpectrum,
        &g,
    )
    .unwrap();
    let analytic = joint_intensity_classical(&layout.h1, &layout.h2, &s).unwrap().correlation;
    let emp = accumulate(&s, &layout.h1, &layout.h2, 20_000, 17).unwrap();
    let a: Vec<f64> = analytic.iter().copied().collect();
    let e: Vec<f64> = emp.covariance.iter().copied().collect();
    let peak = a.iter().copied().fold(0.0, f64::max);
    let err = (a.iter().zip(&e).map(|(a, e)| (a - e).powi(2)).sum::<f64>() / a.iter().map(|a| a * a).sum::<f64>())
        .sqrt();
    assert!(err < 0.15, "relative error {err}");
    let want = peak_centers(layout.scan(), &a, 2);
    let got = peak_centers(layout.scan(), &e.iter().map(|v| v / peak).collect::<Vec<_>>(), 2);
    assert_eq!(want.len(), 2);
    assert_eq!(got.len(), 2);
    for (w, c) in want.iter().zip(&got) {
        assert!((w - c).abs() < 0.05, "{want:?} vs {got:?}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn free_space_composition_matches_closed_form(z1 in 0.5f64..15.0) {
        let g = make_grid(256, 4.0).unwrap();
        let xs = g.xs();
        let geom = Geometry::scheme_i(20.0, 15.0, 10.0, 50.0, k()).with_z1(z1);
        let arm = ArmDescription { elements: vec![ArmElement::FreeSpace(z1)], k: k() };
        let e = relative_l2_after_phase(
            &compose_arm(&arm, &g, &xs).unwrap().h,
            &closed_form_s1_arm1(&geom, &g, &xs).unwrap().h,
        );
        prop_assert!(e < 1e-9, "error {}", e);
    }

    #[test]
    fn thermal_total_splits_into_background_and_correlation(
        z1 in 1.0f64..20.0,
        z2 in 1.0f64..20.0,
        width in 5.0f64..60.0,
    ) {
        let g = make_grid(64, 2.0).unwrap();
        let xs = g.xs();
        let arm = |z: f64| ArmDescription { elements: vec![ArmElement::FreeSpace(z)], k: k() };
        let h1 = compose_arm(&arm(z1), &g, &xs).unwrap();
        let h2 = compose_arm(&arm(z2), &g, &xs).unwrap();
        let s: SpectrumProfile =
            sample_spectrum(&SpectrumSpec::Gaussian { width }, SpectrumKind::PowerSpectrum, &g).unwrap();
        let r = joint_intensity_classical(&h1, &h2, &s).unwrap();
        for ((t, b), c) in r.total.iter().zip(r.background.iter()).zip(r.correlation.iter()) {
            prop_assert!((t - b - c).abs() <= 1e-12 * t.abs().max(1.0));
            prop_assert!(*c <= *b * (1.0 + 1e-12) + 1e-300);
        }
    }
}
