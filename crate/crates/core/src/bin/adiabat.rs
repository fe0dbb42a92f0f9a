use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use adiabat::config::RunConfig;
use adiabat::runner::{plot_script, run_simulate, run_sweep, run_verify, CsvTable, RunSummary};
use adiabat::Error;

#[derive(Parser)]
#[command(name = "adiabat", version, about = "Audit adiabatic conditions against exact propagation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Propagate, audit and write the fidelity/condition curve.
    Simulate(RunArgs),
    /// Check the primal/dual identities and the Marzlin–Sanders chain.
    Verify(RunArgs),
    /// Tabulate conditions and fidelities over a parameter sweep.
    Sweep(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    /// TOML run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Replace a config value, e.g. `--override grid.steps=20000`.
    #[arg(long = "override", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Do not print the summary on standard output.
    #[arg(long)]
    quiet: bool,
}

fn write_file(path: &Path, contents: &str) -> Result<(), Error> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    std::fs::write(path, contents)?;
    Ok(())
}

fn emit_table(cfg: &RunConfig, table: &CsvTable) -> Result<(), Error> {
    let csv = table.to_csv_string();
    match &cfg.output.csv {
        Some(path) => {
            write_file(path, &csv)?;
            if let Some(plot) = &cfg.output.plot {
                write_file(plot, &plot_script(path, table))?;
            }
        }
        None => print!("{csv}"),
    }
    Ok(())
}

fn emit_summary(cfg: &RunConfig, summary: &RunSummary, quiet: bool) -> Result<(), Error> {
    let json = summary.to_json();
    if let Some(path) = &cfg.output.summary {
        write_file(path, &format!("{json}\n"))?;
    }
    if !quiet {
        println!("{json}");
    }
    Ok(())
}

fn run(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Simulate(args) => {
            let cfg = RunConfig::load(&args.config, &args.overrides)?;
            let (table, summary) = run_simulate(&cfg)?;
            emit_table(&cfg, &table)?;
            emit_summary(&cfg, &summary, args.quiet)
        }
        Command::Verify(args) => {
            let cfg = RunConfig::load(&args.config, &args.overrides)?;
            let summary = run_verify(&cfg)?;
            emit_summary(&cfg, &summary, args.quiet)?;
            if summary.passed() {
                Ok(())
            } else {
                Err(Error::Verification(summary.failures.join("; ")))
            }
        }
        Command::Sweep(args) => {
            let cfg = RunConfig::load(&args.config, &args.overrides)?;
            let table = run_sweep(&cfg)?;
            emit_table(&cfg, &table)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
