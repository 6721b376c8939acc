use num_complex::Complex64;
use proptest::prelude::*;
use tunneltime::scatter::{
    inside_wavenumber, scattering_amplitudes, stationary_field, transmission_closed_form, BarrierSpec,
    PhysicalConstants,
};

const C: PhysicalConstants = PhysicalConstants::ELECTRON;

fn stationary_flux(x: f64, k: f64, b: &BarrierSpec) -> f64 {
    let amps = scattering_amplitudes(k, b).unwrap();
    let (psi, dpsi) = stationary_field(x, &amps);
    (Complex64::new(0.0, C.hbar_over_m()) * psi * dpsi.conj()).re
}

// Sub-barrier sample: V₀ in [0.5, 50] eV, a in [0, 20] Å, E in (0, V₀).
fn sub_barrier() -> impl Strategy<Value = (f64, f64, f64)> {
    (0.5f64..50.0, 0.0f64..20.0, 1e-4f64..0.9999).prop_map(|(v0, a, frac)| (v0, a, C.wavenumber(frac * v0)))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn reflection_plus_transmission_is_one((v0, a, k) in sub_barrier()) {
        let b = BarrierSpec::new(v0, a).unwrap();
        let amps = scattering_amplitudes(k, &b).unwrap();
        let sum = amps.r.norm_sqr() + amps.t.norm_sqr();
        prop_assert!((sum - 1.0).abs() <= 1e-12, "|r|²+|t|² = {sum}");
    }
}

proptest! {
    #[test]
    fn stationary_flux_is_uniform((v0, a, k) in sub_barrier(), u in 0.0f64..1.0, w in 0.0f64..1.0) {
        let b = BarrierSpec::new(v0, a).unwrap();
        let x1 = -10.0 + u * (a + 20.0);
        let x2 = -10.0 + w * (a + 20.0);
        let j_out = stationary_flux(a + 1.0, k, &b);
        let (j1, j2) = (stationary_flux(x1, k, &b), stationary_flux(x2, k, &b));
        // The incident flux ħk/m bounds every term; it sets the rounding scale.
        let scale = C.velocity(k);
        prop_assert!((j1 - j2).abs() <= 1e-10 * scale.max(j_out.abs()), "J({x1}) = {j1}, J({x2}) = {j2}");
    }

    #[test]
    fn transmitted_flux_equals_probability_times_velocity((v0, a, k) in sub_barrier()) {
        let b = BarrierSpec::new(v0, a).unwrap();
        let amps = scattering_amplitudes(k, &b).unwrap();
        let j = stationary_flux(a + 3.0, k, &b);
        let expected = amps.t.norm_sqr() * C.velocity(k);
        prop_assert!((j - expected).abs() <= 1e-12 * C.velocity(k));
    }
}

#[test]
fn solver_matches_closed_form_on_lattice() {
    let v0 = 10.0;
    let mut worst: f64 = 0.0;
    for i in 0..10 {
        let energy = 0.5 + 9.0 * i as f64 / 9.0;
        for a in [0.5, 2.0, 5.0, 10.0, 20.0] {
            let b = BarrierSpec::new(v0, a).unwrap();
            let k = C.wavenumber(energy);
            let solved = scattering_amplitudes(k, &b).unwrap().t.norm_sqr();
            let kappa = inside_wavenumber(k, &b).unwrap();
            let sinh = (kappa * a).sinh();
            let oracle = 1.0 / (1.0 + v0 * v0 * sinh * sinh / (4.0 * energy * (v0 - energy)));
            worst = worst.max((solved / oracle - 1.0).abs());
            let closed = transmission_closed_form(k, &b).unwrap();
            assert!((closed.norm_sqr() / oracle - 1.0).abs() < 1e-12);
        }
    }
    assert!(worst <= 1e-12, "worst relative deviation {worst:e}");
}

#[test]
fn transmission_phase_matches_closed_form() {
    let b = BarrierSpec::new(10.0, 5.0).unwrap();
    for energy in [1.0, 2.5, 5.0, 7.5, 9.5] {
        let k = C.wavenumber(energy);
        let solved = scattering_amplitudes(k, &b).unwrap().t;
        let closed = transmission_closed_form(k, &b).unwrap();
        assert!((solved / closed - 1.0).norm() < 1e-11, "E = {energy}: {solved} vs {closed}");
    }
}

#[test]
fn half_height_is_symmetric() {
    for v0 in [1.0, 10.0, 37.0] {
        let b = BarrierSpec::new(v0, 5.0).unwrap();
        let k = C.wavenumber(v0 / 2.0);
        let amps = scattering_amplitudes(k, &b).unwrap();
        assert!((amps.kappa - amps.k).abs() <= 1e-14 * k, "κ = {}, k = {}", amps.kappa, amps.k);
    }
}
