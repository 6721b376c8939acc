//! The invariant suite run by `check`.
//!
//! Every entry is measured, compared with its bound and reported; nothing
//! stops at the first failure. Physics invariants on refined profiles are
//! only asserted where refinement converged, otherwise the entry is
//! reported as `unconverged`.

use std::fmt::Write as _;

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use rayon::prelude::*;
use tunneltime::chronostats::{passage_weights, time_moments, Sign};
use tunneltime::packet::{FieldSample, KGrid, Wave};
use tunneltime::quadrature::build_time_grid;
use tunneltime::scatter::{
    inside_wavenumber, scattering_amplitudes, stationary_field, transmission_closed_form, BarrierSpec,
    PhysicalConstants,
};
use tunneltime::{PacketField, PacketSpec, ProfileRun, Scenario};

use crate::commands::{base_resolution, curve_scenario, lattice_profiles, profile_rows, read_profile, write_profile};
use crate::config::{RunConfig, ScenarioConfig};
use crate::lattice::Curve;
use crate::CliError;

const C: PhysicalConstants = PhysicalConstants::ELECTRON;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Status {
    Pass,
    Fail,
    Unconverged,
}

impl Status {
    pub fn as_str(&self) -> &'static str {
        match self {
            Status::Pass => "pass",
            Status::Fail => "fail",
            Status::Unconverged => "unconverged",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CheckEntry {
    pub module: &'static str,
    pub invariant: &'static str,
    pub case: String,
    pub measured: f64,
    pub bound: f64,
    pub status: Status,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct CheckReport {
    pub entries: Vec<CheckEntry>,
}

impl CheckReport {
    fn push(&mut self, module: &'static str, invariant: &'static str, case: impl Into<String>, measured: f64, bound: f64) {
        let case = case.into();
        debug_assert!(!case.contains(',') && !invariant.contains(','));
        let status = if measured <= bound { Status::Pass } else { Status::Fail };
        self.entries.push(CheckEntry {
            module,
            invariant,
            case,
            measured,
            bound,
            status,
        });
    }

    fn push_gated(
        &mut self,
        converged: bool,
        module: &'static str,
        invariant: &'static str,
        case: impl Into<String>,
        measured: f64,
        bound: f64,
    ) {
        self.push(module, invariant, case, measured, bound);
        if !converged {
            self.entries.last_mut().unwrap().status = Status::Unconverged;
        }
    }

    pub fn failures(&self) -> usize {
        self.entries.iter().filter(|e| e.status == Status::Fail).count()
    }

    /// `module,invariant,case,measured,bound,status`, one line per entry.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("module,invariant,case,measured,bound,status\n");
        for e in &self.entries {
            writeln!(
                out,
                "{},{},{},{:.8e},{:.8e},{}",
                e.module,
                e.invariant,
                e.case,
                e.measured,
                e.bound,
                e.status.as_str()
            )
            .unwrap();
        }
        out
    }
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

pub fn check_scatter(report: &mut CheckReport) {
    const M: &str = "scatter_core";
    let mut rng = StdRng::seed_from_u64(1);
    let samples: Vec<(BarrierSpec, f64)> = (0..1000)
        .map(|_| {
            let v0 = rng.gen_range(0.5..50.0);
            let b = BarrierSpec::new(v0, rng.gen_range(0.0..20.0)).unwrap();
            (b, C.wavenumber(rng.gen_range(1e-4..0.9999) * v0))
        })
        .collect();

    let worst = samples
        .iter()
        .map(|(b, k)| {
            let s = scattering_amplitudes(*k, b).unwrap();
            (s.r.norm_sqr() + s.t.norm_sqr() - 1.0).abs()
        })
        .fold(0.0, f64::max);
    report.push(M, "unitarity", "1000 random sub-barrier samples", worst, 1e-12);

    let flux = |x: f64, k: f64, b: &BarrierSpec| {
        let s = scattering_amplitudes(k, b).unwrap();
        let (psi, dpsi) = stationary_field(x, &s);
        C.hbar_over_m() * (psi.conj() * dpsi).im
    };
    let worst = samples[..200]
        .iter()
        .map(|(b, k)| {
            let a = b.width();
            let x1 = rng.gen_range(-10.0..a + 10.0);
            let x2 = rng.gen_range(-10.0..a + 10.0);
            (flux(x1, *k, b) - flux(x2, *k, b)).abs() / C.velocity(*k)
        })
        .fold(0.0, f64::max);
    report.push(M, "stationary flux constancy", "200 random samples; relative to ħk/m", worst, 1e-10);

    let mut worst: f64 = 0.0;
    for i in 0..10 {
        let e = 0.5 + i as f64;
        for a in [0.5, 2.0, 5.0, 10.0, 20.0] {
            let b = BarrierSpec::new(10.0, a).unwrap();
            let k = C.wavenumber(e);
            let kappa = inside_wavenumber(k, &b).unwrap();
            let sinh = (kappa * a).sinh();
            let oracle = 1.0 / (1.0 + 100.0 * sinh * sinh / (4.0 * e * (10.0 - e)));
            worst = worst.max(rel(scattering_amplitudes(k, &b).unwrap().t.norm_sqr(), oracle));
            worst = worst.max(rel(transmission_closed_form(k, &b).unwrap().norm_sqr(), oracle));
        }
    }
    report.push(M, "closed-form transmission", "50-point (E; a) lattice", worst, 1e-12);

    let worst = [1.0, 10.0, 37.0]
        .iter()
        .map(|&v0| {
            let b = BarrierSpec::new(v0, 5.0).unwrap();
            let k = C.wavenumber(v0 / 2.0);
            rel(inside_wavenumber(k, &b).unwrap(), k)
        })
        .fold(0.0, f64::max);
    report.push(M, "half-height symmetry", "V0 in {1; 10; 37} eV", worst, 1e-14);
}

/// Worst continuity residual `|∂ρ/∂t + ∂J/∂x| / (|Ψ||∂Ψ/∂t|)` over 200
/// seeded samples, a third of them inside the barrier. `flux_gradient`
/// is a parameter so that a corrupted current can be shown to fail.
pub fn continuity_residual(field: &PacketField, flux_gradient: impl Fn(&FieldSample) -> f64) -> f64 {
    let mut rng = StdRng::seed_from_u64(2);
    let a = field.barrier().width();
    (0..200)
        .map(|i| {
            let x = match i % 3 {
                0 => rng.gen_range(0.0..a),
                1 => rng.gen_range(-30.0..0.0),
                _ => rng.gen_range(a..a + 30.0),
            };
            let t = rng.gen_range(-3e-15..3e-15);
            let s = field.evaluate_field(x, t);
            let scale = s.psi.norm() * s.dpsi_dt.norm();
            if scale > 0.0 {
                (s.density_rate() + flux_gradient(&s)).abs() / scale
            } else {
                0.0
            }
        })
        .fold(0.0, f64::max)
}

pub fn check_packet(report: &mut CheckReport) -> Result<(), CliError> {
    const M: &str = "packet_field";
    let barrier = BarrierSpec::new(10.0, 5.0)?;
    let packet = PacketSpec::from_energy(5.0, 0.04)?;
    let field = PacketField::build(barrier, packet, 8)?;
    report.push(
        M,
        "continuity equation",
        "200 random (x; t); V0=10 a=5 E=5 dk=0.04",
        continuity_residual(&field, FieldSample::flux_gradient),
        1e-6,
    );

    let mut rng = StdRng::seed_from_u64(3);
    let worst = (0..200)
        .map(|_| {
            let s = field.evaluate_field(rng.gen_range(-20.0..25.0), rng.gen_range(-3e-15..3e-15));
            let rho = s.psi * s.psi.conj();
            // (iħ/2m)(Ψ ∂Ψ*/∂x − Ψ* ∂Ψ/∂x) is real; its imaginary part is residue.
            let j = num_complex::Complex64::new(0.0, 0.5 * C.hbar_over_m())
                * (s.psi * s.dpsi_dx.conj() - s.psi.conj() * s.dpsi_dx);
            let rho_res = rho.im.abs() / rho.norm().max(f64::MIN_POSITIVE);
            let j_scale = C.hbar_over_m() * s.psi.norm() * s.dpsi_dx.norm();
            rho_res.max(j.im.abs() / j_scale.max(f64::MIN_POSITIVE))
        })
        .fold(0.0, f64::max);
    report.push(M, "reality of density and current", "200 random (x; t)", worst, 1e-14);

    let times = build_time_grid(&packet, Default::default())?;
    let xs = [-5.0, 0.0, 2.5, 5.0, 10.0];
    let one = field.flux_table(&xs, &times, Wave::Scattered);
    let two = PacketField::build(barrier, packet, 8)?.flux_table(&xs, &times, Wave::Scattered);
    let differing = one
        .iter()
        .flatten()
        .zip(two.iter().flatten())
        .filter(|(a, b)| a.to_bits() != b.to_bits())
        .count();
    report.push(M, "determinism", "flux table built twice", differing as f64, 0.0);

    let grid = field.grid();
    let mass: f64 = grid
        .nodes
        .iter()
        .zip(&grid.weights)
        .map(|(&k, w)| w * (grid.c_norm * packet.profile(k)).powi(2))
        .sum();
    report.push(
        M,
        "normalisation on the grid",
        "2π Σ w |G|²",
        (std::f64::consts::TAU * mass - 1.0).abs(),
        1e-12,
    );
    Ok(())
}

fn curve_case(c: &Curve) -> String {
    format!("a={} E={} dk={}", c.a_angstrom, c.ebar_ev, c.dk_inv_angstrom)
}

/// Linear interpolation of a profile at depth `x`.
fn interpolate(xs: &[f64], ys: &[f64], x: f64) -> f64 {
    let i = xs.partition_point(|&v| v < x).clamp(1, xs.len() - 1);
    let (x0, x1) = (xs[i - 1], xs[i]);
    ys[i - 1] + (ys[i] - ys[i - 1]) * (x - x0) / (x1 - x0)
}

/// Mean slope of `τ_Pen` over the last quarter of the barrier divided by
/// that over the first quarter.
pub fn saturation_ratio(run: &ProfileRun) -> f64 {
    let xs: Vec<f64> = run.points.iter().map(|p| p.x).collect();
    let ys: Vec<f64> = run.points.iter().map(|p| p.penetration.mean).collect();
    let a = *xs.last().unwrap();
    let first = interpolate(&xs, &ys, 0.25 * a) - ys[0];
    let last = ys[ys.len() - 1] - interpolate(&xs, &ys, 0.75 * a);
    last / first
}

/// Largest violation of `τ_Pen ≥ 0` and of `τ_Pen` non-decreasing, in s.
pub fn penetration_violation(run: &ProfileRun) -> f64 {
    let pen: Vec<f64> = run.points.iter().map(|p| p.penetration.mean).collect();
    let negative = pen.iter().fold(0.0f64, |m, &v| m.max(-v));
    let decrease = pen.windows(2).fold(0.0f64, |m, w| m.max(w[0] - w[1]));
    negative.max(decrease)
}

/// Relative spread `(max − min)/max` of reliable `τ_Ret` over `[0, 0.6a]`.
pub fn return_plateau_spread(run: &ProfileRun) -> f64 {
    let a = run.points.last().map_or(0.0, |p| p.x);
    let vals: Vec<f64> = run
        .points
        .iter()
        .filter(|p| p.x <= 0.6 * a + 1e-12 && p.ret.reliable)
        .map(|p| p.ret.mean)
        .collect();
    let (lo, hi) = vals.iter().fold((f64::MAX, f64::MIN), |(l, h), &v| (l.min(v), h.max(v)));
    if vals.is_empty() {
        0.0
    } else {
        (hi - lo) / hi.abs()
    }
}

pub fn check_chronostats(report: &mut CheckReport, run: &RunConfig, profiles: &[(Curve, ProfileRun)]) -> Result<(), CliError> {
    const M: &str = "chronostats";

    let s = Scenario::from_parameters(10.0, 5.0, 5.0, 0.02)?;
    let sim = s.simulate(&s.base_resolution(5.0)?)?;
    let mut worst: f64 = 0.0;
    for series in sim.flux_series(&[0.0, 2.5, 5.0], Wave::Scattered)? {
        let w = series.times.weights();
        for sign in [Sign::Plus, Sign::Minus] {
            // w± is undefined where J± vanishes, e.g. J₋ at x = a.
            if !time_moments(&series, sign)?.reliable {
                continue;
            }
            let total: f64 = passage_weights(&series, sign).iter().zip(&w).map(|(a, b)| a * b).sum();
            worst = worst.max((total - 1.0).abs());
        }
    }
    report.push(M, "passage weight normalisation", "x in {0; 2.5; 5}; resolved parts", worst, 1e-12);

    for (c, p) in profiles {
        let conv = p.report.converged;
        let case = curve_case(c);
        let min_ret = p
            .points
            .iter()
            .filter(|q| q.ret.reliable)
            .map(|q| q.ret.mean)
            .fold(f64::INFINITY, f64::min);
        report.push_gated(conv, M, "mean ordering (return time >= 0)", case.clone(), (-min_ret).max(0.0), 0.0);
        report.push_gated(conv, M, "penetration non-negative and non-decreasing", case.clone(), penetration_violation(p), 0.0);
        report.push_gated(conv, M, "penetration saturation slope ratio", case.clone(), saturation_ratio(p), 0.25);
        report.push_gated(conv, M, "return-time plateau over [0; 0.6a]", case, return_plateau_spread(p), 0.25);
    }

    let dwell: Vec<_> = [2.5, 5.0, 7.5]
        .iter()
        .flat_map(|&e| [0.01, 0.02, 0.04].map(move |dk| (e, dk)))
        .collect::<Vec<_>>()
        .into_par_iter()
        .map(|(e, dk)| -> Result<_, CliError> {
            let mut s = Scenario::from_parameters(10.0, 5.0, e, dk)?;
            s.time = run.time_overrides();
            let base = base_resolution(&s, 10.0, run)?;
            let out = s.summary_refined(-5.0, 10.0, base, run.tol, run.max_levels)?;
            Ok((e, dk, out))
        })
        .collect::<Result<_, _>>()?;
    for (e, dk, out) in dwell {
        report.push_gated(
            out.report.converged,
            M,
            "dwell time flux and density forms agree",
            format!("a=5 E={e} dk={dk} (-5; 10)"),
            rel(out.dwell.flux_form, out.dwell.density_form),
            1e-3,
        );
    }

    let mut s = Scenario::from_parameters(10.0, 5.0, 5.0, 0.005)?;
    s.time = run.time_overrides();
    let base = base_resolution(&s, 5.0, run)?;
    let (tun, _, rep) = s.tunnelling_refined(base, run.tol, run.max_levels)?;
    let phase = s.phase_time()?;
    report.push_gated(
        rep.converged,
        M,
        "quasi-monochromatic limit (tunnelling vs phase time)",
        "a=5 E=5 dk=0.005",
        rel(tun.mean, phase),
        0.05,
    );
    Ok(())
}

pub fn check_quadrature(report: &mut CheckReport, run: &RunConfig, profiles: &[(Curve, ProfileRun)]) -> Result<(), CliError> {
    const M: &str = "quadrature_ctl";
    let barrier = BarrierSpec::new(10.0, 5.0)?;
    let packet = PacketSpec::from_energy(5.0, 0.02)?;
    let same = build_time_grid(&packet, run.time_overrides())? == build_time_grid(&packet, run.time_overrides())?
        && KGrid::build(&barrier, &packet, 8)? == KGrid::build(&barrier, &packet, 8)?;
    report.push(M, "grid determinism", "time and k grids built twice", if same { 0.0 } else { 1.0 }, 0.0);

    let mut bad = 0usize;
    for (_, p) in profiles {
        for w in p.report.levels.windows(2) {
            let (r0, r1) = (w[0].resolution, w[1].resolution);
            if r1.k_panels != 2 * r0.k_panels || r1.t_intervals != 2 * r0.t_intervals {
                bad += 1;
            }
        }
    }
    report.push(M, "node counts double per level", "all lattice refinements", bad as f64, 0.0);

    // Spot check: one level beyond convergence changes nothing beyond tol.
    let (c, p) = &profiles[0];
    let s = curve_scenario(c, run)?;
    let finest = p.report.levels.last().expect("at least one level").resolution;
    let extra = s.simulate(&finest.refined(1))?.profile(&p.points.iter().map(|q| q.x).collect::<Vec<_>>())?;
    let scale = p.points.iter().map(|q| q.penetration.mean.abs()).fold(0.0, f64::max);
    let change = p
        .points
        .iter()
        .zip(&extra)
        .map(|(a, b)| (a.penetration.mean - b.penetration.mean).abs() / scale)
        .fold(0.0, f64::max);
    report.push_gated(
        p.report.converged,
        M,
        "converged profile stable under one more level",
        curve_case(c),
        change,
        run.tol,
    );
    Ok(())
}

/// Malformed configs and the key each must be blamed on.
pub const MALFORMED: [(&str, &str); 8] = [
    ("a_angstrom = 5\nebar_ev = 5\ndk_inv_angstrom = 0.02\n", "v0_ev"),
    ("v0_ev = 10\na_angstrom = -5\nebar_ev = 5\ndk_inv_angstrom = 0.02\n", "a_angstrom"),
    ("v0_ev = 10\na_angstrom = 5\nebar_ev = 12\ndk_inv_angstrom = 0.02\n", "ebar_ev"),
    ("v0_ev = 10\na_angstrom = 5\nebar_ev = 5\ndk_inv_angstrom = x\n", "dk_inv_angstrom"),
    ("v0_ev = 10\na_angstrom = 5\nebar_ev = 5\ndk_inv_angstrom = 0.02\nspeed = 3\n", "speed"),
    ("v0_ev = 10\na_angstrom = 5\nebar_ev = 5\ndk_inv_angstrom = 0.02\nn_x = 1\n", "n_x"),
    ("v0_ev = 10\na_angstrom = 5\nebar_ev = 5\ndk_inv_angstrom = 0.02\ntol = nan\n", "tol"),
    ("v0_ev = 10\na_angstrom = 5\nebar_ev = 5\ndk_inv_angstrom = 0.02\nt_window_s = 1e-16\n", "t_window_s"),
];

pub fn check_cli(report: &mut CheckReport, run: &RunConfig, profiles: &[(Curve, ProfileRun)]) -> Result<(), CliError> {
    const M: &str = "cli_runner";
    let mut mismatched = 0usize;
    for (_, p) in profiles {
        let text = write_profile(&profile_rows(p));
        match read_profile(&text) {
            Ok(rows) if write_profile(&rows) == text => {}
            _ => mismatched += 1,
        }
    }
    report.push(M, "csv round trip", "lattice profiles", mismatched as f64, 0.0);

    let misreported = MALFORMED
        .iter()
        .filter(|(text, key)| {
            !matches!(ScenarioConfig::parse(text), Err(e) if e.key.as_deref() == Some(*key))
        })
        .count();
    report.push(M, "config rejection names the key", "8 malformed configs", misreported as f64, 0.0);

    let (c, p) = &profiles[0];
    let again = crate::commands::profile_run(&curve_scenario(c, run)?, run)?;
    let same = write_profile(&profile_rows(p)) == write_profile(&profile_rows(&again));
    report.push(M, "output determinism", curve_case(c), if same { 0.0 } else { 1.0 }, 0.0);
    Ok(())
}

/// Runs the whole suite.
pub fn cmd_check(run: &RunConfig) -> Result<CheckReport, CliError> {
    let mut report = CheckReport::default();
    check_scatter(&mut report);
    check_packet(&mut report)?;
    let profiles = lattice_profiles(run)?;
    check_chronostats(&mut report, run, &profiles)?;
    check_quadrature(&mut report, run, &profiles)?;
    check_cli(&mut report, run, &profiles)?;
    Ok(report)
}
