use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use squid_qed::analysis::SweepGrid;
use squid_qed_cli::commands::{apply_grid_axis, emit, render_run, render_table, to_json};
use squid_qed_cli::{cmd_run, cmd_sweep, cmd_validate, CliError, Document, OutputFormat, RunConfig};

/// Two-SQUID qutrit entanglement simulator.
#[derive(Debug, Parser)]
#[command(name = "squid-qed", version)]
struct Cli {
    /// Config file with `key = value` entries.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Override one config key; repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    set: Vec<String>,
    /// Output file (stdout if omitted).
    #[arg(long, global = true)]
    output: Option<PathBuf>,
    #[arg(long, value_parser = ["json", "csv"], global = true)]
    format: Option<String>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run the protocol once and emit a result record.
    Run,
    /// Run the protocol over a parameter grid and emit a table.
    Sweep {
        /// Grid axis `KEY=v1,v2,...` for delta, k, k_prime, nbar or n_max; repeatable.
        #[arg(long = "grid", value_name = "KEY=VALUES")]
        grid: Vec<String>,
        /// Derive k and k_prime from each delta so both drives reach this `2Ω/δ`.
        #[arg(long)]
        regime_ratio: Option<f64>,
    },
    /// Run the built-in verification battery.
    Validate,
}

fn load_config(cli: &Cli) -> Result<RunConfig, CliError> {
    let mut doc = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|source| CliError::Io { path: path.clone(), source })?;
            Document::parse(&text)?
        }
        None => Document::default(),
    };
    for assignment in &cli.set {
        doc.set(assignment)?;
    }
    if let Some(path) = &cli.output {
        doc.insert("output_path", &path.display().to_string())?;
    }
    if let Some(format) = &cli.format {
        doc.insert("output_format", format)?;
    }
    Ok(RunConfig::from_document(&doc)?)
}

fn execute(cli: &Cli) -> Result<(), CliError> {
    match &cli.command {
        Command::Run => {
            let config = load_config(cli)?;
            let record = cmd_run(&config)?;
            emit(&render_run(&record, config.output_format)?, config.output_path.as_deref())
        }
        Command::Sweep { grid, regime_ratio } => {
            let config = load_config(cli)?;
            let mut sweep_grid = SweepGrid { regime_ratio: *regime_ratio, ..SweepGrid::default() };
            for axis in grid {
                apply_grid_axis(&mut sweep_grid, axis)?;
            }
            let rows = cmd_sweep(&config, &sweep_grid)?;
            emit(&render_table(&rows, config.output_format)?, config.output_path.as_deref())
        }
        Command::Validate => {
            let format = cli.format.as_deref().map(|f| f.parse::<OutputFormat>()).transpose();
            if let Ok(Some(OutputFormat::Csv)) = format {
                return Err(CliError::Config(squid_qed_cli::ConfigError::InvalidValue {
                    key: "output_format".into(),
                    reason: "validate reports are JSON only".into(),
                }));
            }
            let summary = cmd_validate()?;
            emit(&to_json(&summary)?, cli.output.as_deref())?;
            if summary.passed {
                Ok(())
            } else {
                let failed: Vec<_> = summary.checks.iter().filter(|c| !c.passed).map(|c| c.name.as_str()).collect();
                Err(CliError::Validation(format!("failed checks: {}", failed.join(", "))))
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("squid-qed: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
