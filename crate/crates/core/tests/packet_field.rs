use rand::{Rng, SeedableRng};
use rand::rngs::StdRng;
use tunneltime::chronostats::split_flux;
use tunneltime::packet::{analytic_normalization, KGrid, PacketField, PacketSpec, Wave};
use tunneltime::quadrature::{build_time_grid, TimeGridOverrides};
use tunneltime::scatter::{BarrierSpec, PhysicalConstants};

const C: PhysicalConstants = PhysicalConstants::ELECTRON;

fn field(v0: f64, a: f64, ebar: f64, dk: f64, panels: usize) -> PacketField {
    let b = if v0 == 0.0 {
        BarrierSpec::transparent(a).unwrap()
    } else {
        BarrierSpec::new(v0, a).unwrap()
    };
    PacketField::build(b, PacketSpec::from_energy(ebar, dk).unwrap(), panels).unwrap()
}

#[test]
fn continuity_holds_at_random_points() {
    let f = field(10.0, 5.0, 5.0, 0.04, 8);
    let mut rng = StdRng::seed_from_u64(7);
    let mut worst: f64 = 0.0;
    for i in 0..200 {
        // A third of the samples fall inside the barrier.
        let x = match i % 3 {
            0 => rng.gen_range(0.0..5.0),
            1 => rng.gen_range(-30.0..0.0),
            _ => rng.gen_range(5.0..30.0),
        };
        let t = rng.gen_range(-3e-15..3e-15);
        let s = f.evaluate_field(x, t);
        let residual = (s.density_rate() + s.flux_gradient()).abs();
        let scale = s.psi.norm() * s.dpsi_dt.norm();
        if scale > 0.0 {
            worst = worst.max(residual / scale);
        }
    }
    assert!(worst <= 1e-6, "worst continuity residual {worst:e}");
}

#[test]
fn flux_is_real_current_of_psi() {
    let f = field(10.0, 5.0, 5.0, 0.02, 8);
    for (x, t) in [(-3.0, -1e-15), (2.0, 0.0), (7.0, 2e-15)] {
        let s = f.evaluate_field(x, t);
        let direct = C.hbar_over_m() * (s.psi.conj() * s.dpsi_dx).im;
        assert!((s.flux() - direct).abs() <= 1e-14 * direct.abs().max(C.hbar_over_m() * s.psi.norm() * s.dpsi_dx.norm()));
        assert!(s.density() >= 0.0);
    }
}

#[test]
fn flux_tables_are_bit_identical() {
    let f = field(10.0, 5.0, 5.0, 0.02, 8);
    let p = PacketSpec::from_energy(5.0, 0.02).unwrap();
    let times = build_time_grid(&p, TimeGridOverrides::default()).unwrap();
    let xs = [0.0, 2.5, 5.0];
    let first = f.flux_table(&xs, &times, Wave::Scattered);
    let second = field(10.0, 5.0, 5.0, 0.02, 8).flux_table(&xs, &times, Wave::Scattered);
    assert_eq!(first, second);
}

#[test]
fn grid_normalisation_approaches_analytic_value() {
    let b = BarrierSpec::new(10.0, 5.0).unwrap();
    let p = PacketSpec::from_energy(5.0, 0.01).unwrap();
    let grid = KGrid::build(&b, &p, 4).unwrap();
    let analytic = analytic_normalization(0.01);
    assert!((analytic - 2.5197943553838).abs() < 1e-12);
    assert!((grid.c_norm / analytic - 1.0).abs() < 1e-5);
}

#[test]
fn time_integrated_flux_reproduces_spectral_transmission() {
    let p = PacketSpec::from_energy(5.0, 0.02).unwrap();
    let f = field(10.0, 5.0, 5.0, 0.02, 17);
    let times = build_time_grid(&p, TimeGridOverrides::default()).unwrap();
    let j = f.flux_table(&[40.0], &times, Wave::Scattered).remove(0);
    let s = split_flux(40.0, times, j).unwrap();
    let through: f64 = s.j.iter().zip(s.times.weights()).map(|(j, w)| j * w).sum();
    let spectral = f.transmission_probability();
    assert!((through / spectral - 1.0).abs() <= 1e-3, "{through:e} vs {spectral:e}");
}

#[test]
fn free_packet_peak_moves_at_group_velocity() {
    let f = field(0.0, 5.0, 5.0, 0.15, 8);
    let v = C.velocity(C.wavenumber(5.0));
    let t = 2e-15;
    let expected = v * t;
    // Coarse search over ±3 packet widths, then golden-section style narrowing.
    let width = 1.0 / 0.15;
    let (mut lo, mut hi) = (expected - 3.0 * width, expected + 3.0 * width);
    let mut best = lo;
    for _ in 0..6 {
        let step = (hi - lo) / 200.0;
        best = (0..=200)
            .map(|i| lo + i as f64 * step)
            .max_by(|a, b| f.density(*a, t).total_cmp(&f.density(*b, t)))
            .unwrap();
        lo = best - step;
        hi = best + step;
    }
    assert!((best - expected).abs() <= 0.01 * width, "peak at {best}, expected {expected}");
}
