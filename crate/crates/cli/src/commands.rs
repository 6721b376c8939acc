//! The `single`, `profile` and `figures` commands.

use std::path::Path;

use rayon::prelude::*;
use tunneltime::chronostats::DurationReport;
use tunneltime::packet::KGrid;
use tunneltime::quadrature::Resolution;
use tunneltime::{PacketField, ProfileRun, Scenario};

use crate::config::{RunConfig, ScenarioConfig};
use crate::lattice::{self, Curve, Plotted};
use crate::table::{Cell, Table};
use crate::CliError;

/// Output files by name, in a fixed order.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Bundle {
    pub files: Vec<(String, String)>,
    /// Names of the runs whose refinement did not converge.
    pub unconverged: Vec<String>,
}

impl Bundle {
    pub fn write(&self, dir: &Path) -> Result<(), CliError> {
        std::fs::create_dir_all(dir).map_err(|source| CliError::Io {
            path: dir.to_path_buf(),
            source,
        })?;
        for (name, contents) in &self.files {
            let path = dir.join(name);
            std::fs::write(&path, contents).map_err(|source| CliError::Io { path, source })?;
        }
        Ok(())
    }

    /// `Err(NotConverged)` if any run failed to converge.
    pub fn converged(&self) -> Result<(), CliError> {
        if self.unconverged.is_empty() {
            Ok(())
        } else {
            Err(CliError::NotConverged(self.unconverged.join("; ")))
        }
    }
}

pub fn base_resolution(scenario: &Scenario, max_abs_x: f64, run: &RunConfig) -> Result<Resolution, CliError> {
    let mut base = scenario.base_resolution(max_abs_x)?;
    if let Some(k) = run.k_panels {
        base.k_panels = k;
    }
    Ok(base)
}

/// One row of a penetration/return profile.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ProfileRow {
    pub x_angstrom: f64,
    pub tau_pen_s: f64,
    pub dtau_pen_s2: f64,
    pub tau_ret_s: f64,
    pub dtau_ret_s2: f64,
    pub reliable_ret: bool,
    pub refinement_level: usize,
}

impl ProfileRow {
    pub const HEADER: [&'static str; 7] = [
        "x_angstrom",
        "tau_pen_s",
        "dtau_pen_s2",
        "tau_ret_s",
        "dtau_ret_s2",
        "reliable_ret",
        "refinement_level",
    ];

    pub fn cells(&self) -> Vec<Cell> {
        vec![
            Cell::Real(self.x_angstrom),
            Cell::Real(self.tau_pen_s),
            Cell::Real(self.dtau_pen_s2),
            Cell::Real(self.tau_ret_s),
            Cell::Real(self.dtau_ret_s2),
            Cell::Flag(self.reliable_ret),
            Cell::Count(self.refinement_level),
        ]
    }

    pub fn from_cells(cells: &[Cell]) -> Option<Self> {
        match *cells {
            [Cell::Real(x), Cell::Real(pen), Cell::Real(dpen), Cell::Real(ret), Cell::Real(dret), Cell::Flag(rel), Cell::Count(level)] => {
                Some(Self {
                    x_angstrom: x,
                    tau_pen_s: pen,
                    dtau_pen_s2: dpen,
                    tau_ret_s: ret,
                    dtau_ret_s2: dret,
                    reliable_ret: rel,
                    refinement_level: level,
                })
            }
            _ => None,
        }
    }
}

pub fn profile_rows(run: &ProfileRun) -> Vec<ProfileRow> {
    let level = run.report.final_level();
    run.points
        .iter()
        .map(|p| ProfileRow {
            x_angstrom: p.x,
            tau_pen_s: p.penetration.mean,
            dtau_pen_s2: p.penetration.variance,
            tau_ret_s: p.ret.mean,
            dtau_ret_s2: p.ret.variance,
            reliable_ret: p.ret.reliable,
            refinement_level: level,
        })
        .collect()
}

pub fn write_profile(rows: &[ProfileRow]) -> String {
    let mut t = Table::new(ProfileRow::HEADER);
    for r in rows {
        t.push(r.cells());
    }
    t.to_csv()
}

pub fn read_profile(text: &str) -> Result<Vec<ProfileRow>, String> {
    let t = Table::from_csv(text)?;
    if t.header != ProfileRow::HEADER {
        return Err(format!("unexpected header {:?}", t.header));
    }
    t.rows
        .iter()
        .enumerate()
        .map(|(i, r)| ProfileRow::from_cells(r).ok_or_else(|| format!("row {} has the wrong cell types", i + 1)))
        .collect()
}

/// Refined profile over `run.n_x` depths.
pub fn profile_run(scenario: &Scenario, run: &RunConfig) -> Result<ProfileRun, CliError> {
    let base = base_resolution(scenario, scenario.barrier.width(), run)?;
    let out = scenario.profile_refined(run.n_x, base, run.tol, run.max_levels)?;
    if out.points.is_empty() {
        return Err(CliError::NotConverged(
            "no refinement level resolved the passage-time distributions".into(),
        ));
    }
    Ok(out)
}

pub fn cmd_profile(cfg: &ScenarioConfig) -> Result<Bundle, CliError> {
    let run = profile_run(&cfg.scenario()?, &cfg.run)?;
    let mut bundle = Bundle {
        files: vec![("profile.csv".into(), write_profile(&profile_rows(&run)))],
        ..Default::default()
    };
    if !run.report.converged {
        bundle.unconverged.push(format!(
            "profile stopped at level {} with relative change {:.3e}",
            run.report.final_level(),
            run.report.final_rel_change
        ));
    }
    Ok(bundle)
}

/// The quantities reported by `single`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Summary {
    pub tunnelling: DurationReport,
    pub reflection: DurationReport,
    pub dwell_flux_s: f64,
    pub dwell_density_s: f64,
    pub phase_time_s: f64,
    pub transmission_probability: f64,
    pub truncated_mass: f64,
    pub refinement_level: usize,
    pub converged: bool,
}

pub fn summarize(cfg: &ScenarioConfig) -> Result<Summary, CliError> {
    let scenario = cfg.scenario()?;
    let (xi, xf) = (cfg.dwell_xi_angstrom, cfg.dwell_xf_angstrom);
    let base = base_resolution(&scenario, xi.abs().max(xf), &cfg.run)?;
    let run = scenario.summary_refined(xi, xf, base, cfg.run.tol, cfg.run.max_levels)?;
    let finest = run
        .report
        .levels
        .iter()
        .rev()
        .find(|l| l.result.is_ok())
        .map(|l| l.resolution)
        .unwrap_or(base);
    let grid = KGrid::build(&scenario.barrier, &scenario.packet, finest.k_panels)?;
    let truncated_mass = grid.truncated_mass(&scenario.packet);
    let field = PacketField::new(scenario.barrier, scenario.packet, grid)?;
    Ok(Summary {
        tunnelling: run.tunnelling,
        reflection: run.reflection,
        dwell_flux_s: run.dwell.flux_form,
        dwell_density_s: run.dwell.density_form,
        phase_time_s: scenario.phase_time()?,
        transmission_probability: field.transmission_probability(),
        truncated_mass,
        refinement_level: run.report.final_level(),
        converged: run.report.converged,
    })
}

pub fn summary_table(cfg: &ScenarioConfig, s: &Summary) -> Table {
    let mut t = Table::new([
        "v0_ev",
        "a_angstrom",
        "ebar_ev",
        "dk_inv_angstrom",
        "tau_tun_s",
        "dtau_tun_s2",
        "reliable_tun",
        "tau_refl_s",
        "dtau_refl_s2",
        "reliable_refl",
        "dwell_xi_angstrom",
        "dwell_xf_angstrom",
        "dwell_flux_s",
        "dwell_density_s",
        "phase_time_s",
        "transmission_probability",
        "truncated_mass",
        "refinement_level",
        "converged",
    ]);
    t.push(vec![
        Cell::Real(cfg.v0_ev),
        Cell::Real(cfg.a_angstrom),
        Cell::Real(cfg.ebar_ev),
        Cell::Real(cfg.dk_inv_angstrom),
        Cell::Real(s.tunnelling.mean),
        Cell::Real(s.tunnelling.variance),
        Cell::Flag(s.tunnelling.reliable),
        Cell::Real(s.reflection.mean),
        Cell::Real(s.reflection.variance),
        Cell::Flag(s.reflection.reliable),
        Cell::Real(cfg.dwell_xi_angstrom),
        Cell::Real(cfg.dwell_xf_angstrom),
        Cell::Real(s.dwell_flux_s),
        Cell::Real(s.dwell_density_s),
        Cell::Real(s.phase_time_s),
        Cell::Real(s.transmission_probability),
        Cell::Real(s.truncated_mass),
        Cell::Count(s.refinement_level),
        Cell::Flag(s.converged),
    ]);
    t
}

pub fn cmd_single(cfg: &ScenarioConfig) -> Result<(Bundle, Summary), CliError> {
    let s = summarize(cfg)?;
    let mut bundle = Bundle {
        files: vec![("single.csv".into(), summary_table(cfg, &s).to_csv())],
        ..Default::default()
    };
    if !s.converged {
        bundle
            .unconverged
            .push(format!("single run stopped at level {}", s.refinement_level));
    }
    Ok((bundle, s))
}

pub fn curve_scenario(c: &Curve, run: &RunConfig) -> Result<Scenario, CliError> {
    let mut s = Scenario::from_parameters(lattice::V0_EV, c.a_angstrom, c.ebar_ev, c.dk_inv_angstrom)?;
    s.time = run.time_overrides();
    Ok(s)
}

/// Profiles for every distinct curve of the figure lattice, in lattice
/// order. Curves run in parallel.
pub fn lattice_profiles(run: &RunConfig) -> Result<Vec<(Curve, ProfileRun)>, CliError> {
    lattice::distinct_curves()
        .into_par_iter()
        .map(|c| Ok((c, profile_run(&curve_scenario(&c, run)?, run)?)))
        .collect()
}

/// `fig1.csv` ... `fig5.csv` plus `curves.csv`.
pub fn cmd_figures(run: &RunConfig) -> Result<Bundle, CliError> {
    let runs = lattice_profiles(run)?;
    let lookup = |c: &Curve| &runs.iter().find(|(k, _)| k == c).expect("curve in lattice").1;
    let mut bundle = Bundle::default();
    let mut curves = Table::new([
        "figure",
        "curve",
        "a_angstrom",
        "ebar_ev",
        "dk_inv_angstrom",
        "refinement_level",
        "converged",
    ]);
    for fig in lattice::figures() {
        let mut header = Vec::new();
        let (label, dlabel, rlabel) = match fig.plotted {
            Plotted::Penetration => ("tau_pen_s", "dtau_pen_s2", "reliable_pen"),
            Plotted::Return => ("tau_ret_s", "dtau_ret_s2", "reliable_ret"),
        };
        for n in 1..=fig.curves.len() {
            for col in ["x_angstrom", label, dlabel, rlabel] {
                header.push(format!("c{n}_{col}"));
            }
        }
        let mut table = Table::new(header);
        for row in 0..run.n_x {
            let mut cells = Vec::new();
            for c in &fig.curves {
                let p = &lookup(c).points[row];
                let d = match fig.plotted {
                    Plotted::Penetration => p.penetration,
                    Plotted::Return => p.ret,
                };
                cells.extend([Cell::Real(p.x), Cell::Real(d.mean), Cell::Real(d.variance), Cell::Flag(d.reliable)]);
            }
            table.push(cells);
        }
        bundle.files.push((format!("fig{}.csv", fig.number), table.to_csv()));
        for (i, c) in fig.curves.iter().enumerate() {
            let report = &lookup(c).report;
            curves.push(vec![
                Cell::Count(fig.number),
                Cell::Count(i + 1),
                Cell::Real(c.a_angstrom),
                Cell::Real(c.ebar_ev),
                Cell::Real(c.dk_inv_angstrom),
                Cell::Count(report.final_level()),
                Cell::Flag(report.converged),
            ]);
        }
    }
    bundle.files.push(("curves.csv".into(), curves.to_csv()));
    for (c, r) in &runs {
        if !r.report.converged {
            bundle.unconverged.push(format!(
                "a = {} Å, Ē = {} eV, Δk = {} Å⁻¹",
                c.a_angstrom, c.ebar_ev, c.dk_inv_angstrom
            ));
        }
    }
    Ok(bundle)
}
