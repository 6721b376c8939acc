use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use tunneltime_cli::check::{cmd_check, Status};
use tunneltime_cli::commands::{cmd_figures, cmd_profile, cmd_single, Bundle};
use tunneltime_cli::{CliError, RawConfig, RunConfig, ScenarioConfig};

/// Tunnelling, penetration and return times of Gaussian packets on a
/// rectangular barrier.
#[derive(Parser)]
#[command(name = "tunneltime", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Tunnelling, reflection, dwell and phase times for one scenario.
    Single(Common),
    /// Penetration and return times across the barrier.
    Profile(Common),
    /// Profile sweeps for figures 1-5.
    Figures(Common),
    /// Invariant suite; exits 4 if any invariant fails.
    Check(Common),
}

#[derive(Args)]
struct Common {
    /// `key = value` configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory; overrides `output_path`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Relative refinement tolerance.
    #[arg(long)]
    tol: Option<f64>,
    /// Maximum number of refinement levels.
    #[arg(long)]
    max_levels: Option<usize>,
    /// Worker threads (default: all cores).
    #[arg(long)]
    jobs: Option<usize>,
}

impl Common {
    fn raw(&self) -> Result<RawConfig, CliError> {
        Ok(match &self.config {
            Some(path) => RawConfig::read(path)?,
            None => RawConfig::default(),
        })
    }

    fn apply(&self, run: RunConfig) -> Result<RunConfig, CliError> {
        Ok(run.with_overrides(self.tol, self.max_levels, self.out.clone())?)
    }

    fn scenario(&self) -> Result<ScenarioConfig, CliError> {
        let raw = self.raw()?;
        if self.config.is_none() {
            return Err(tunneltime_cli::ConfigError {
                line: None,
                key: Some("--config".into()),
                message: "this command needs a scenario config".into(),
            }
            .into());
        }
        let mut cfg = ScenarioConfig::from_raw(&raw)?;
        cfg.run = self.apply(cfg.run)?;
        Ok(cfg)
    }

    fn sweep(&self) -> Result<RunConfig, CliError> {
        self.apply(RunConfig::sweep_only(&self.raw()?)?)
    }
}

fn finish(bundle: &Bundle, dir: &std::path::Path) -> Result<(), CliError> {
    bundle.write(dir)?;
    for (name, _) in &bundle.files {
        eprintln!("wrote {}", dir.join(name).display());
    }
    bundle.converged()
}

fn run(cli: Cli) -> Result<(), CliError> {
    let common = match &cli.command {
        Command::Single(c) | Command::Profile(c) | Command::Figures(c) | Command::Check(c) => c,
    };
    if let Some(jobs) = common.jobs {
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs.max(1))
            .build_global()
            .expect("thread pool is configured once");
    }
    match &cli.command {
        Command::Single(c) => {
            let cfg = c.scenario()?;
            let (bundle, s) = cmd_single(&cfg)?;
            println!("tau_tun_s        {:.8e}", s.tunnelling.mean);
            println!("dtau_tun_s2      {:.8e}", s.tunnelling.variance);
            println!("tau_refl_s       {:.8e}", s.reflection.mean);
            println!("dwell_flux_s     {:.8e}", s.dwell_flux_s);
            println!("dwell_density_s  {:.8e}", s.dwell_density_s);
            println!("phase_time_s     {:.8e}", s.phase_time_s);
            println!("transmission     {:.8e}", s.transmission_probability);
            println!("truncated_mass   {:.8e}", s.truncated_mass);
            println!("refinement_level {} (converged: {})", s.refinement_level, s.converged);
            finish(&bundle, &cfg.run.output_path)
        }
        Command::Profile(c) => {
            let cfg = c.scenario()?;
            finish(&cmd_profile(&cfg)?, &cfg.run.output_path)
        }
        Command::Figures(c) => {
            let run = c.sweep()?;
            finish(&cmd_figures(&run)?, &run.output_path)
        }
        Command::Check(c) => {
            let run = c.sweep()?;
            let report = cmd_check(&run)?;
            for e in &report.entries {
                println!(
                    "{:<11} {:<14} {:<55} {:<28} measured {:.3e} bound {:.3e}",
                    e.status.as_str().to_uppercase(),
                    e.module,
                    e.invariant,
                    e.case,
                    e.measured,
                    e.bound
                );
            }
            let bundle = Bundle {
                files: vec![("check_report.csv".into(), report.to_csv())],
                unconverged: Vec::new(),
            };
            bundle.write(&run.output_path)?;
            let skipped = report.entries.iter().filter(|e| e.status == Status::Unconverged).count();
            if skipped > 0 {
                eprintln!("{skipped} entries not asserted: refinement did not converge");
            }
            match report.failures() {
                0 => Ok(()),
                n => Err(CliError::InvariantFailure(n)),
            }
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
