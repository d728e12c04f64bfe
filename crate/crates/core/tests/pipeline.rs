//! End-to-end checks that cross module boundaries.

use nonlocal_ist::evolution::{ist_solve, IstOptions};
use nonlocal_ist::io::{read_artifact, write_artifact, Artifact, Provenance};
use nonlocal_ist::numerics::{relative_l2, UniformGrid};
use nonlocal_ist::pde::{linf_distance, split_step};
use nonlocal_ist::reconstruction::reconstruct_q;
use nonlocal_ist::rh::RhOptions;
use nonlocal_ist::scattering::{
    reflection_bound, reflection_coefficients, resonance_floor, scattering_coefficients, Potential, ReflectionPair,
    Sigma,
};
use proptest::prelude::*;

fn xg() -> UniformGrid {
    UniformGrid::symmetric(16.0, 512).unwrap()
}

fn kg() -> UniformGrid {
    UniformGrid::symmetric(24.0, 1024).unwrap()
}

#[test]
fn reflection_survives_a_file_roundtrip_bit_for_bit() {
    let q = Potential::gaussian(xg(), Sigma::Minus, 0.07, 0.4).unwrap();
    let r = reflection_coefficients(&scattering_coefficients(&q, &kg()).unwrap()).unwrap();
    let path = std::env::temp_dir().join(format!("nonlocal-ist-pipeline-{}.json", std::process::id()));
    let art = Artifact::new("reflection", Provenance::new("test", Default::default()), r.clone());
    write_artifact(&path, &art).unwrap();
    let (prov, back): (_, ReflectionPair) = read_artifact(&path).unwrap();
    std::fs::remove_file(&path).ok();
    assert_eq!(prov.unwrap().command, "test");
    assert_eq!(back.r1, r.r1);
    assert_eq!(back.r2, r.r2);
    assert_eq!(back.sigma, r.sigma);

    let a = reconstruct_q(&r, &xg(), Sigma::Minus, &RhOptions::default()).unwrap();
    let b = reconstruct_q(&back, &xg(), Sigma::Minus, &RhOptions::default()).unwrap();
    assert_eq!(a.values(), b.values());
    assert!(relative_l2(a.values(), q.values(), xg().spacing()) < 1e-4);
}

#[test]
fn ist_at_time_zero_is_plain_reconstruction() {
    let q = Potential::gaussian(xg(), Sigma::Plus, 0.08, 0.5).unwrap();
    let out = ist_solve(&q, 0.0, &kg(), &xg(), &IstOptions::default()).unwrap();
    let direct = reconstruct_q(&out.initial, &xg(), Sigma::Plus, &RhOptions::default()).unwrap();
    assert_eq!(out.potential.values(), direct.values());
}

#[test]
fn ist_tracks_split_step_for_defocusing_sign() {
    let q = Potential::gaussian(xg(), Sigma::Minus, 0.08, 0.5).unwrap();
    let t = 0.1;
    let ist = ist_solve(&q, t, &kg(), &xg(), &IstOptions::default()).unwrap();
    let pde = split_step(&q, t, 1e-3).unwrap();
    let gap = linf_distance(&ist.potential, &pde).unwrap();
    assert!(gap < 1e-4, "{gap}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    // below the small-norm threshold the a, d floor and the reflection bound hold for any shape
    #[test]
    fn small_norm_bounds_hold_for_random_gaussians(
        amp in 0.005f64..0.09,
        center in -1.5f64..1.5,
        minus in any::<bool>(),
    ) {
        let sigma = if minus { Sigma::Minus } else { Sigma::Plus };
        let q = Potential::gaussian(xg(), sigma, amp, center).unwrap();
        prop_assume!(q.l1_norm() < 1.0 / 6.0);
        let s = scattering_coefficients(&q, &kg()).unwrap();
        prop_assert!(s.min_abs_a() >= resonance_floor());
        prop_assert!(s.min_abs_d() >= resonance_floor());
        prop_assert!(s.residuals.determinant < 1e-10);
        let r = reflection_coefficients(&s).unwrap();
        prop_assert!(r.sup_r <= reflection_bound());
    }
}
