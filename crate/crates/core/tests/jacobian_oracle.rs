//! The transform-based Jacobian against an independent direct-convolution
//! reference, plus hand-expanded small cases.

use kolmo_core::experiments::random_field;
use kolmo_core::norms::l2_norm;
use kolmo_core::ops::{inv_laplacian, jacobian, jacobian_direct};
use kolmo_core::{SpectralField, TorusConfig};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn max_rel_diff(a: &SpectralField, b: &SpectralField) -> f64 {
    let scale = a.linf_coeff().max(b.linf_coeff()).max(1e-300);
    a.max_coeff_diff(b).unwrap() / scale
}

#[test]
fn two_mode_case_matches_hand_expansion() {
    // J(cos(alpha x), cos(beta y)) = alpha beta sin(alpha x) sin(beta y),
    // whose cosine pair carries amplitudes +-(alpha beta / 2), stored as
    // half-coefficients +-(alpha beta / 4).
    let g = TorusConfig::new(2.0, 32, 32).unwrap();
    let mut phi = SpectralField::zeros(&g);
    phi.add_cos(1, 0, 1.0).unwrap();
    let mut w = SpectralField::zeros(&g);
    w.add_cos(0, 1, 1.0).unwrap();
    let expect = g.alpha * g.beta / 4.0;
    for out in [jacobian(&phi, &w).unwrap(), jacobian_direct(&phi, &w).unwrap()] {
        assert!((out.coeff(1, -1).re - expect).abs() < 1e-14 * expect);
        assert!((out.coeff(1, 1).re + expect).abs() < 1e-14 * expect);
        assert!(out.coeff(1, 1).im.abs() < 1e-16);
        assert!(out.coeff(0, 0).norm() == 0.0, "mean must stay zero");
    }
}

#[test]
fn fast_path_matches_direct_convolution_on_random_fields() {
    // For inputs inside the dealias box, every aliased image of the grid
    // products lands outside the box, so sharp truncation makes the
    // pseudo-spectral Jacobian equal the exact truncated convolution.
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for (alpha, nx, ny) in [(1.0, 32, 32), (2.0, 32, 32), (1.5, 48, 32)] {
        let g = TorusConfig::new(alpha, nx, ny).unwrap();
        for _ in 0..10 {
            let phi = random_field(&g, 0.0, f64::MAX, true, 1.0, &mut rng).unwrap();
            let w = random_field(&g, 0.0, f64::MAX, true, 1.0, &mut rng).unwrap();
            let fast = jacobian(&phi, &w).unwrap();
            let direct = jacobian_direct(&phi, &w).unwrap();
            let diff = max_rel_diff(&fast, &direct);
            assert!(
                diff < 1e-12,
                "alpha = {alpha}, {nx}x{ny}: fast vs direct differ by {diff:.3e}"
            );
        }
    }
}

#[test]
fn self_advection_of_random_data_is_orthogonal_to_the_state() {
    // <J(inv_lap w, w), w> = 0 and <J(inv_lap w, w), inv_lap w> = 0 hold for
    // the truncated convolution itself, hence for the fast path too.
    let g = TorusConfig::new(2.0, 48, 48).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..5 {
        let w = random_field(&g, 0.0, f64::MAX, true, 1.0, &mut rng).unwrap();
        let psi = inv_laplacian(&w);
        let jac = jacobian(&psi, &w).unwrap();
        let area = g.area();
        let inner = |a: &SpectralField, b: &SpectralField| -> f64 {
            area * a
                .iter_modes()
                .zip(b.iter_modes())
                .map(|((_, _, ca), (_, _, cb))| (ca * cb.conj()).re)
                .sum::<f64>()
        };
        let scale = l2_norm(&jac) * l2_norm(&w);
        assert!(inner(&jac, &w).abs() < 1e-12 * scale);
        assert!(inner(&jac, &psi).abs() < 1e-12 * scale);
    }
}
