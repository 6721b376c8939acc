use tunneltime::chronostats::{presence_n, time_moments, DurationKind, Side, Sign};
use tunneltime::packet::{PacketSpec, Wave};
use tunneltime::quadrature::DEFAULT_TOL;
use tunneltime::scatter::{BarrierSpec, PhysicalConstants};
use tunneltime::Scenario;

const C: PhysicalConstants = PhysicalConstants::ELECTRON;

fn free(ebar: f64, dk: f64) -> Scenario {
    Scenario::new(BarrierSpec::transparent(5.0).unwrap(), PacketSpec::from_energy(ebar, dk).unwrap())
}

#[test]
fn free_packet_arrives_at_group_velocity() {
    let s = free(5.0, 0.01);
    let sim = s.simulate(&s.base_resolution(20.0).unwrap()).unwrap();
    let v = C.velocity(C.wavenumber(5.0));
    let m = sim.endpoint_moments(&[0.0, 10.0]).unwrap();
    assert!((m[1].plus.mean / (10.0 / v) - 1.0).abs() < 0.01, "{:e}", m[1].plus.mean);
    assert!((10.0 / v - 7.54e-16).abs() < 0.01 * 7.54e-16);
    assert!(m[0].plus.mean.abs() < 1e-3 * m[1].plus.mean);
}

#[test]
fn free_packet_has_no_backward_flux() {
    let s = free(5.0, 0.02);
    let sim = s.simulate(&s.base_resolution(20.0).unwrap()).unwrap();
    for series in sim.flux_series(&[-10.0, 0.0, 10.0, 20.0], Wave::Scattered).unwrap() {
        let m = time_moments(&series, Sign::Minus).unwrap();
        assert!(!m.reliable, "J₋ at x = {} carries {:e}", series.x, m.norm);
    }
}

#[test]
fn free_passage_spread_grows_with_distance() {
    let s = free(5.0, 0.04);
    let sim = s.simulate(&s.base_resolution(40.0).unwrap()).unwrap();
    let m = sim.endpoint_moments(&[0.0, 10.0, 20.0, 40.0]).unwrap();
    for w in m.windows(2) {
        assert!(w[1].plus.variance > w[0].plus.variance);
    }
}

#[test]
fn transmitted_presence_reaches_transmission_probability() {
    let s = Scenario::from_parameters(10.0, 5.0, 5.0, 0.02).unwrap();
    let sim = s.simulate(&s.base_resolution(5.0).unwrap()).unwrap();
    let series = sim.flux_series(&[5.0], Wave::Scattered).unwrap().remove(0);
    let n = presence_n(&series, Side::Right);
    let total = sim.field.transmission_probability();
    assert!((n.last().unwrap() / total - 1.0).abs() < 1e-3);
    assert!(n.windows(2).all(|w| w[1] >= w[0]));

    let free = free(5.0, 0.02);
    let sim = free.simulate(&free.base_resolution(10.0).unwrap()).unwrap();
    let series = sim.flux_series(&[10.0], Wave::Scattered).unwrap().remove(0);
    let n = presence_n(&series, Side::Right);
    assert!((n.last().unwrap() - 1.0).abs() < 1e-3);
}

#[test]
fn dwell_forms_agree() {
    for (ebar, dk) in [(2.5, 0.02), (5.0, 0.04), (7.5, 0.02)] {
        let s = Scenario::from_parameters(10.0, 5.0, ebar, dk).unwrap();
        let sim = s.simulate(&s.base_resolution(10.0).unwrap()).unwrap();
        let d = sim.dwell_times(-5.0, 10.0).unwrap();
        assert!(
            (d.flux_form / d.density_form - 1.0).abs() <= DEFAULT_TOL,
            "Ē = {ebar}: {:e} vs {:e}",
            d.flux_form,
            d.density_form
        );
    }
}

#[test]
fn free_dwell_time_is_length_over_velocity() {
    let s = free(5.0, 0.01);
    let sim = s.simulate(&s.base_resolution(10.0).unwrap()).unwrap();
    let d = sim.dwell_times(-5.0, 10.0).unwrap();
    let expected = 15.0 / C.velocity(C.wavenumber(5.0));
    assert!((d.density_form / expected - 1.0).abs() < 1e-3);
    assert!((d.flux_form / expected - 1.0).abs() < 1e-3);
}

#[test]
fn profile_inside_barrier() {
    let s = Scenario::from_parameters(10.0, 5.0, 5.0, 0.02).unwrap();
    let run = s.profile_refined(11, s.base_resolution(5.0).unwrap(), DEFAULT_TOL, 6).unwrap();
    assert!(run.report.converged);
    let pts = &run.points;
    assert_eq!(pts[0].penetration.mean, 0.0);
    for w in pts.windows(2) {
        assert!(w[1].penetration.mean >= w[0].penetration.mean);
    }
    // Backward passages follow forward ones wherever J₋ is resolved.
    for p in pts.iter().filter(|p| p.ret.reliable) {
        assert!(p.ret.mean >= 0.0, "τ_Ret({}) = {:e}", p.x, p.ret.mean);
        assert_eq!(p.ret.kind, DurationKind::Return);
    }
    // Return time roughly flat over the first 60% of the barrier.
    let early: Vec<f64> = pts.iter().filter(|p| p.x <= 3.0 && p.ret.reliable).map(|p| p.ret.mean).collect();
    let (lo, hi) = early.iter().fold((f64::MAX, f64::MIN), |(l, h), &v| (l.min(v), h.max(v)));
    assert!((hi - lo) / hi <= 0.25);
}

#[test]
fn reflection_at_entrance_equals_return_at_entrance() {
    let s = Scenario::from_parameters(10.0, 5.0, 5.0, 0.02).unwrap();
    let sim = s.simulate(&s.base_resolution(5.0).unwrap()).unwrap();
    let refl = sim.reflection(0.0).unwrap();
    let ret = sim.profile(&[0.0]).unwrap()[0].ret;
    assert_eq!(refl.mean, ret.mean);
    assert!(refl.mean > sim.tunnelling().unwrap().mean);
}

#[test]
fn transmission_time_exceeds_tunnelling_time() {
    let s = Scenario::from_parameters(10.0, 5.0, 5.0, 0.02).unwrap();
    let sim = s.simulate(&s.base_resolution(15.0).unwrap()).unwrap();
    let tun = sim.tunnelling().unwrap();
    let tr = sim.transmission(-5.0, 15.0).unwrap();
    assert!(tr.mean > tun.mean);
    assert!(sim.transmission(0.0, 15.0).is_err());
}
