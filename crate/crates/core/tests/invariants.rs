use proptest::prelude::*;

use rflow_core::determinant::{integrate_polyakov_along_flow, LengthSpectrum};
use rflow_core::flow::{run_flow, FlowConfig};
use rflow_core::renorm::renormalized_curvature_integral;
use rflow_core::surface::*;

#[test]
fn surface_document_round_trips_through_a_file() {
    let s = build_model_surface(EndKind::Funnel, EndKind::Cusp, 64).unwrap();
    let w = bump(&s, &BumpSpec { amplitude: 0.2, center: 0.4, width: 0.1 }).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("s.json");
    std::fs::write(&path, SurfaceDocument::from_surface(&s, Some(&w)).to_json()).unwrap();
    let doc = SurfaceDocument::from_json(&std::fs::read_to_string(&path).unwrap()).unwrap();
    let (s2, w2) = doc.build().unwrap();
    assert_eq!(s2.background_phi, s.background_phi);
    assert_eq!(w2.unwrap().omega, w.omega);
    assert_eq!(scalar_curvature(&s, &w), scalar_curvature(&s2, &w));
}

#[test]
fn wrong_format_version_is_rejected() {
    let s = build_model_surface(EndKind::Cusp, EndKind::Cusp, 16).unwrap();
    let text = SurfaceDocument::from_surface(&s, None).to_json().replace("\"format_version\": 1", "\"format_version\": 9");
    assert!(SurfaceDocument::from_json(&text).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn document_parser_never_panics(text in ".{0,200}") {
        let _ = SurfaceDocument::from_json(&text);
    }

    #[test]
    fn spectrum_parser_never_panics(text in "[0-9eE.+# \\-\n]{0,80}") {
        if let Ok(spec) = LengthSpectrum::parse(&text) {
            prop_assert!(spec.entries().iter().all(|&(l, m)| l > 0.0 && m > 0));
        }
    }

    // Random bumps may reach the ends, so this needs a fine grid.
    #[test]
    fn gauss_bonnet_for_random_factors(seed in 0u64..1000, off in -0.5f64..0.5) {
        let s = build_model_surface(EndKind::Funnel, EndKind::Cusp, 2048).unwrap();
        let mut w = random_bumps(&s, 2, 0.3, seed);
        w.omega.iter_mut().for_each(|v| *v += off);
        let r = renormalized_curvature_integral(&s, &w).unwrap();
        prop_assert!((r.value.finite_part - 2.0 * s.euler_characteristic as f64).abs() < 1e-4);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn ledger_increments_are_nonnegative(a in -0.2f64..0.2, c in 0.3f64..0.45) {
        let s = build_model_surface(EndKind::Funnel, EndKind::Cusp, 256).unwrap();
        let w = balanced_bump(
            &s,
            &BumpSpec { amplitude: a, center: c, width: 0.15 },
            &BumpSpec { amplitude: 0.1, center: 0.65, width: 0.15 },
        )
        .unwrap();
        let cfg = FlowConfig { t_end: 1.0, ..FlowConfig::default() };
        let (traj, _) = run_flow(&s, &w, &cfg).unwrap();
        let ledger = integrate_polyakov_along_flow(&s, &traj).unwrap();
        prop_assert!(ledger.increments.iter().all(|&(_, r)| r >= 0.0));
        prop_assert!(ledger.accumulated >= 0.0);
    }
}
