//! Command-line front end.

use std::ffi::OsString;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

use crate::config::RunConfig;
use crate::coupled::AssemblyOptions;
use crate::error::{Error, Result};
use crate::mesh::generate_mesh;
use crate::output::{fluid_summary, mode_rows, modes_csv, operator_summary, timeseries_writer};
use crate::timeloop::simulate_with;
use crate::verify::{run_verify, thread_cap, VerifyOptions};

#[derive(Debug, Parser)]
#[command(name = "floatbeam", version, about = "Floating platform, tip-mass beam and tank waves in the time domain")]
pub struct Cli {
    /// Run configuration (TOML, or JSON with a .json extension).
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Directory for output files.
    #[arg(long, global = true, value_name = "DIR", default_value = ".")]
    pub out: PathBuf,
    /// Suppress progress output.
    #[arg(long, global = true)]
    pub quiet: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write the fluid mesh and its quality report.
    Mesh,
    /// Write a JSON summary of the platform and fluid operators.
    Operators,
    /// Integrate in time and write the CSV time series.
    Simulate,
    /// Write the lowest modes of the coupled system.
    Modes {
        /// Number of modes (defaults to numerics.modes).
        #[arg(long)]
        count: Option<usize>,
    },
    /// Run the property suite; exit 1 if any check fails.
    Verify {
        /// Test hook: flip the sign of the platform-side coupling.
        #[arg(long, hide = true)]
        inject_fault: bool,
    },
}

/// Outcome of a command that ran to completion.
enum Outcome {
    Ok,
    VerificationFailed,
}

struct Runner {
    config: RunConfig,
    out: PathBuf,
    quiet: bool,
}

impl Runner {
    fn say(&self, msg: impl AsRef<str>) {
        if !self.quiet {
            println!("{}", msg.as_ref());
        }
    }

    fn path(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }

    fn create(&self, name: &str) -> Result<BufWriter<File>> {
        Ok(BufWriter::new(File::create(self.path(name))?))
    }

    fn mesh(&self) -> Result<Outcome> {
        let mesh = generate_mesh(&self.config.geometry()?)?;
        let quality = mesh.quality();
        std::fs::write(self.path(&self.config.output.mesh), mesh.to_text())?;
        let json = serde_json::to_string_pretty(&quality).map_err(|e| Error::Parse(e.to_string()))?;
        std::fs::write(self.path(&self.config.output.mesh_quality), json + "\n")?;
        self.say(format!("mesh: {} nodes, {} triangles, min angle {:.1} deg", quality.nodes, quality.triangles, quality.min_angle_deg));
        Ok(Outcome::Ok)
    }

    fn operators(&self) -> Result<Outcome> {
        let geom = self.config.geometry()?;
        let summary = if geom.has_hull() {
            operator_summary(&self.config.assemble(AssemblyOptions::default())?, 10)?
        } else {
            fluid_summary(&geom, self.config.numerics.solver_tolerance, 10)?
        };
        let json = serde_json::to_string_pretty(&summary).map_err(|e| Error::Parse(e.to_string()))?;
        std::fs::write(self.path(&self.config.output.operators), json + "\n")?;
        self.say(format!("operators: {} nodes, {} surface nodes", summary.nodes, summary.surface_nodes));
        Ok(Outcome::Ok)
    }

    fn simulate(&self) -> Result<Outcome> {
        let assembly = self.config.assemble(AssemblyOptions::default())?;
        let sys = &assembly.system;
        let init = self.config.initial_data(sys)?;
        let mut file = self.create(&self.config.output.timeseries)?;
        let mut last = None;
        {
            let mut sink = timeseries_writer(&mut file)?;
            simulate_with(sys, &init, &self.config.forcing, &self.config.settings(), |r| {
                last = Some(r.energy);
                sink(r)
            })?;
        }
        file.flush()?;
        if let Some(e) = last {
            self.say(format!("simulate: E = {:.6e} J/m, work = {:.6e}, residual = {:.3e}", e.total, e.work, e.residual));
        }
        Ok(Outcome::Ok)
    }

    fn modes(&self, count: Option<usize>) -> Result<Outcome> {
        let assembly = self.config.assemble(AssemblyOptions::default())?;
        let spectrum = assembly.system.spectrum()?;
        let rows = mode_rows(&assembly.system, &spectrum, count.unwrap_or(self.config.numerics.modes));
        std::fs::write(self.path(&self.config.output.modes), modes_csv(&rows))?;
        self.say(format!(
            "modes: {} written, zero modes {}, pairing residual {:.2e}",
            rows.len(),
            spectrum.zero_count(1e-10),
            spectrum.pairing_residual()
        ));
        Ok(Outcome::Ok)
    }

    fn verify(&self, inject_fault: bool) -> Result<Outcome> {
        let results = run_verify(&self.config, &VerifyOptions { inject_fault, threads: thread_cap() })?;
        let mut report = String::new();
        for r in &results {
            report.push_str(&r.line());
            report.push('\n');
        }
        std::fs::write(self.path(&self.config.output.verify), &report)?;
        self.say(report.trim_end());
        if results.iter().all(|r| r.passed) {
            Ok(Outcome::Ok)
        } else {
            Ok(Outcome::VerificationFailed)
        }
    }
}

fn execute(cli: Cli) -> Result<Outcome> {
    let path = cli.config.ok_or_else(|| Error::Config("--config PATH is required".into()))?;
    let config = RunConfig::load(&path)?;
    ensure_dir(&cli.out)?;
    let runner = Runner { config, out: cli.out, quiet: cli.quiet };
    match cli.command {
        Command::Mesh => runner.mesh(),
        Command::Operators => runner.operators(),
        Command::Simulate => runner.simulate(),
        Command::Modes { count } => runner.modes(count),
        Command::Verify { inject_fault } => runner.verify(inject_fault),
    }
}

fn ensure_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    Ok(())
}

/// Parses `args` (program name first) and runs; returns the process exit code.
pub fn run_from<I, A>(args: I) -> i32
where
    I: IntoIterator<Item = A>,
    A: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(cli) {
        Ok(Outcome::Ok) => 0,
        Ok(Outcome::VerificationFailed) => 1,
        Err(e) => {
            eprintln!("floatbeam: {e}");
            e.exit_code()
        }
    }
}
