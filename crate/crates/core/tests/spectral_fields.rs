use num_complex::Complex64;
use paraproduct_core::dyadic::build_cap_family;
use paraproduct_core::engine::{heat_evolve, schrodinger_evolve};
use paraproduct_core::spectral::{
    leray_project, make_grid, norm, physical_lp, synth_band_field, synth_band_scalar, NormSpec, SpectralField,
};
use paraproduct_core::window::kernel_diff_bound;
use proptest::prelude::*;

/// Direct `O(n⁶)` inverse transform of a scalar field at one point, with
/// the unitary `(2π)^{-3/2}` normalization.
fn direct_value(f: &SpectralField, x: [f64; 3]) -> Complex64 {
    let g = f.grid();
    let mut s = Complex64::default();
    for idx in 0..g.len() {
        let c = f.component(0)[idx];
        if c == Complex64::default() {
            continue;
        }
        let k = g.wavevector(idx);
        let phase = k[0] as f64 * x[0] + k[1] as f64 * x[1] + k[2] as f64 * x[2];
        s += c * Complex64::from_polar(1.0, phase);
    }
    s / (2.0 * std::f64::consts::PI).powf(1.5)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn plancherel_and_round_trip(seed in 0u64..10_000, e in 0u32..3) {
        let grid = make_grid(32).unwrap();
        let f = synth_band_field(grid, 1 << e, seed, false, NormSpec::L2).unwrap();
        let l2 = norm(&f, NormSpec::L2).unwrap();
        prop_assert!((physical_lp(&f, 2.0) - l2).abs() < 1e-12 * l2.max(1.0));
        let back = SpectralField::from_physical(grid, f.to_physical(), true).unwrap();
        prop_assert!(norm(&back.sub(&f).unwrap(), NormSpec::L2).unwrap() < 1e-12 * l2);
    }

    #[test]
    fn leray_is_an_orthogonal_projection(seed in 0u64..10_000) {
        let grid = make_grid(16).unwrap();
        let f = synth_band_field(grid, 2, seed, false, NormSpec::L2).unwrap();
        let p = leray_project(&f).unwrap();
        let pp = leray_project(&p).unwrap();
        prop_assert!(norm(&pp.sub(&p).unwrap(), NormSpec::L2).unwrap() < 1e-13);
        // Pythagoras: ‖f‖² = ‖ℙf‖² + ‖f − ℙf‖²
        let a = norm(&p, NormSpec::L2).unwrap().powi(2);
        let b = norm(&f.sub(&p).unwrap(), NormSpec::L2).unwrap().powi(2);
        prop_assert!((a + b - 1.0).abs() < 1e-12);
    }

    #[test]
    fn band_fields_are_real(seed in 0u64..10_000) {
        let grid = make_grid(32).unwrap();
        let f = synth_band_field(grid, 4, seed, true, NormSpec::sobolev(1, 1)).unwrap();
        prop_assert!(f.hermitian_residual() < 1e-14);
        let phys = f.to_physical();
        let imag = phys.iter().flatten().map(|z| z.im.abs()).fold(0.0, f64::max);
        prop_assert!(imag < 1e-12);
        prop_assert!((norm(&f, NormSpec::sobolev(1, 1)).unwrap() - 1.0).abs() < 1e-12);
    }
}

#[test]
fn fft_agrees_with_direct_sum() {
    let grid = make_grid(8).unwrap();
    let f = synth_band_scalar(grid, 1, 5, NormSpec::L2).unwrap();
    let phys = f.to_physical();
    for idx in [0, 7, 100, 313, 511] {
        let want = direct_value(&f, grid.point(idx));
        assert!((phys[0][idx] - want).norm() < 1e-13, "idx {idx}");
    }
}

#[test]
fn schrodinger_preserves_cap_energies() {
    let grid = make_grid(64).unwrap();
    let f = synth_band_field(grid, 8, 17, false, NormSpec::L2).unwrap();
    let caps = build_cap_family(8.0, num_rational::Rational64::new(2, 3)).unwrap();
    let g = schrodinger_evolve(&f, 0.37);
    for cap in 0..caps.len() {
        let a = norm(&caps.project(&f, cap).unwrap(), NormSpec::L2).unwrap();
        let b = norm(&caps.project(&g, cap).unwrap(), NormSpec::L2).unwrap();
        assert!((a - b).abs() < 1e-13, "cap {cap}: {a} vs {b}");
    }
}

#[test]
fn heat_minus_schrodinger_within_kernel_bound() {
    let grid = make_grid(64).unwrap();
    let n = 8.0;
    let f = synth_band_scalar(grid, 8, 3, NormSpec::L2).unwrap();
    for t in [1e-4, 1e-3, 5e-3, 2e-2] {
        let d = heat_evolve(&f, t).unwrap().sub(&schrodinger_evolve(&f, t)).unwrap();
        let measured = norm(&d, NormSpec::L2).unwrap();
        // the band reaches |k| < 2N, where the pointwise bound is evaluated
        let bound = kernel_diff_bound(t, 2.0 * n);
        assert!(measured <= bound, "t={t}: {measured} > {bound}");
    }
}
