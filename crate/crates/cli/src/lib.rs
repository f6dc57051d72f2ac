//! Command-line layer for `chflow`: configuration, on-disk formats and the
//! `simulate`, `recurrence`, `verify` and `annulus` commands.
//!
//! Exit codes: 0 success, 1 configuration or output error, 2 numerical abort,
//! 3 failed check.

pub mod commands;
pub mod config;
pub mod error;
pub mod output;
pub mod preset;
pub mod snapshot;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

pub use config::{Overrides, RawConfig, RunConfig};
pub use error::CliError;

#[derive(Debug, Parser)]
#[command(name = "chflow", version, about = "Inviscid channel flow: simulation, recurrence detection and checks")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Clone, Args)]
pub struct CommonArgs {
    /// TOML configuration file; built-in defaults are used when omitted.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Output directory (overrides `output.dir`).
    #[arg(long, global = true, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Seed for random presets and the verify battery.
    #[arg(long, global = true, value_name = "N")]
    pub seed: Option<u64>,
    /// Initial condition, e.g. "random seed=7 max_mode=4".
    #[arg(long, global = true, value_name = "NAME")]
    pub preset: Option<String>,
    /// Fault injection: disable dealiasing and use the convective advection form.
    #[arg(long, global = true)]
    pub break_dealias: bool,
}

#[derive(Debug, Clone, Copy, Subcommand)]
pub enum Command {
    /// Integrate to `solver.t_end`, writing diagnostics.csv and optional snapshots.
    Simulate,
    /// Sample at multiples of T, build the cover net and report returns.
    Recurrence,
    /// Run the identity, tail-bound and conservation checks.
    Verify,
    /// Print the annulus contrast table.
    Annulus,
}

pub fn load_config(common: &CommonArgs) -> Result<RunConfig, CliError> {
    let raw = match &common.config {
        Some(p) => RawConfig::load(p)?,
        None => RawConfig::parse("")?,
    };
    raw.validate(&Overrides {
        out: common.out.clone(),
        seed: common.seed,
        preset: common.preset.clone(),
        break_dealias: common.break_dealias,
    })
}

/// Runs one command and returns the text to print on success.
pub fn execute(command: Command, cfg: &RunConfig) -> Result<String, CliError> {
    match command {
        Command::Simulate => {
            let s = commands::simulate(cfg)?;
            Ok(format!(
                "simulate: reached t = {} ({} snapshots), wrote {}",
                s.t_final,
                s.snapshots,
                cfg.out_dir.join(output::DIAGNOSTICS_FILE).display()
            ))
        }
        Command::Recurrence => {
            let r = commands::recurrence(cfg)?;
            let mut text = format!(
                "recurrence: {} samples, T = {}, delta = {}, {} centers, {} returns\n{}",
                r.samples,
                r.period,
                r.delta,
                r.n_centers,
                r.returns.len(),
                r.pigeonhole_line()
            );
            for c in &r.returns {
                text.push_str(&format!("\nreturn center m = {}: visits {:?}", c.center_index, c.visits));
            }
            println!("{text}");
            commands::recurrence_verdict(&r)?;
            Ok(format!("cover audit passed, wrote {}", cfg.out_dir.join(output::COVER_FILE).display()))
        }
        Command::Verify => {
            let r = commands::verify(cfg)?;
            let mut text = String::new();
            let mut line = |name: &str, passed: bool| text.push_str(&format!("{name}: {}\n", if passed { "pass" } else { "FAIL" }));
            if let Some(v) = &r.lemma1 {
                line("lemma1", v.passed);
            }
            if let Some(v) = &r.tail_bound {
                line("tail_bound", v.passed);
            }
            if let Some(v) = &r.conservation {
                line("conservation", v.passed);
            }
            print!("{text}");
            commands::verify_verdict(&r)?;
            Ok(format!("all checks passed, wrote {}", cfg.out_dir.join(output::VERIFY_FILE).display()))
        }
        Command::Annulus => {
            let rows = commands::annulus(cfg)?;
            print!("{}", commands::annulus_table(&rows));
            commands::annulus_verdict(&rows)?;
            Ok("annulus contrast: all rows pass".into())
        }
    }
}

/// Parses `args` (including the program name) and runs the command; returns the exit code.
pub fn run<I, T>(args: I) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    let result = load_config(&cli.common).and_then(|cfg| execute(cli.command, &cfg));
    match result {
        Ok(msg) => {
            println!("{msg}");
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
