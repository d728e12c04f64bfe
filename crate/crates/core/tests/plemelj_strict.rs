//! Strict projection identities of the lattice Plemelj operators.

use nonlocal_ist::numerics::UniformGrid;
use nonlocal_ist::plemelj::{Plemelj, Side};
use num_complex::Complex64;

fn gaussian_samples(g: &UniformGrid) -> Vec<Complex64> {
    g.nodes().iter().map(|k| Complex64::new((-k * k).exp(), 0.0)).collect()
}

fn sup_diff(a: &[Complex64], b: &[Complex64]) -> f64 {
    a.iter().zip(b).fold(0.0, |m, (x, y)| m.max((x - y).norm()))
}

/// Known failure: on the truncated lattice `P⁺P⁺ − P⁺ = −(I + H²)/4`, which is not small.
#[test]
#[ignore = "the whole-line lattice projection is not idempotent; see the acceptance output"]
fn plus_projection_is_idempotent_to_machine_precision() {
    let g = UniformGrid::symmetric(24.0, 1024).unwrap();
    let p = Plemelj::for_grid(&g).unwrap();
    let once = p.apply(&gaussian_samples(&g), Side::Plus);
    let twice = p.apply(&once, Side::Plus);
    assert!(sup_diff(&twice, &once) <= 1e-14);
}

#[test]
fn idempotence_defect_is_the_stated_operator() {
    let g = UniformGrid::symmetric(24.0, 1024).unwrap();
    let p = Plemelj::for_grid(&g).unwrap();
    let f = gaussian_samples(&g);
    let once = p.apply(&f, Side::Plus);
    let twice = p.apply(&once, Side::Plus);
    // P⁺ − P⁻ = I gives iH = P⁺ + P⁻, so −(I + H²)/4 = ((P⁺ + P⁻)² − I)/4
    let (a, b) = p.apply_both(&f);
    let s: Vec<Complex64> = a.iter().zip(&b).map(|(x, y)| x + y).collect();
    let (a2, b2) = p.apply_both(&s);
    let expected: Vec<Complex64> = (0..f.len()).map(|i| (a2[i] + b2[i] - f[i]) / 4.0).collect();
    let defect: Vec<Complex64> = (0..f.len()).map(|i| twice[i] - once[i]).collect();
    assert!(sup_diff(&defect, &expected) < 1e-14);
}
