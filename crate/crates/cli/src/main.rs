mod commands;
mod config;
mod output;

use clap::{Parser, Subcommand};
use commands::{Failure, Report};
use config::{Check, Config, PolarizationKind, Quantity};
use serde_json::json;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "fiberpath", version = fiberpath::VERSION, about = "Path-integral estimators and Fock-space oracle for fiber Hamiltonians")]
struct Cli {
    /// Experiment configuration (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory; overrides `output.dir`.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Master seed; overrides `paths.seed`.
    #[arg(long, global = true, env = "FIBERPATH_SEED")]
    seed: Option<u64>,
    /// Worker threads for the path ensembles.
    #[arg(long, global = true, env = "FIBERPATH_THREADS")]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Ground-state energy from the two-point ratio of partition functions.
    Energy,
    /// Ground-state observables: expN, weyl or green.
    Observable {
        #[arg(long, value_parser = parse_quantity)]
        quantity: Option<Quantity>,
    },
    /// Monte Carlo estimates against the truncated Fock-space oracle.
    CompareOracle,
    /// Truncated Fock-space diagnostics.
    Oracle {
        #[arg(long, value_enum, value_delimiter = ',')]
        checks: Vec<Check>,
    },
    /// Sampled checks of a polarization construction.
    CheckPolarization {
        #[arg(long, value_enum, default_value = "axis-cross")]
        construction: PolarizationKind,
        #[arg(long, value_delimiter = ',', default_value = "1,0,0")]
        axis: Vec<f64>,
        #[arg(long, default_value_t = 10_000)]
        samples: usize,
    },
    /// Build or inspect a radial kernel table.
    KernelTable {
        #[command(subcommand)]
        action: TableAction,
    },
}

#[derive(Subcommand)]
enum TableAction {
    /// Build the table described by the configuration and write it to `table.path`.
    Build,
    /// Print the header of an existing table.
    Inspect {
        /// Table file; defaults to `table.path`.
        #[arg(long)]
        table: Option<PathBuf>,
    },
}

fn parse_quantity(s: &str) -> Result<Quantity, String> {
    match s {
        "expN" | "expn" => Ok(Quantity::ExpN),
        "weyl" => Ok(Quantity::Weyl),
        "green" => Ok(Quantity::Green),
        _ => Err(format!("unknown quantity {s:?}; expected expN, weyl or green")),
    }
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Energy => "energy",
            Command::Observable { .. } => "observable",
            Command::CompareOracle => "compare-oracle",
            Command::Oracle { .. } => "oracle",
            Command::CheckPolarization { .. } => "check-polarization",
            Command::KernelTable { action: TableAction::Build } => "kernel-table build",
            Command::KernelTable { action: TableAction::Inspect { .. } } => "kernel-table inspect",
        }
    }
}

fn load_config(path: Option<&Path>) -> Result<Config, Failure> {
    match path {
        None => Ok(Config::default()),
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .map_err(|e| Failure::Validation(vec![format!("cannot read {}: {e}", p.display())]))?;
            Config::parse(&text).map_err(|e| Failure::Validation(vec![format!("{}: {e}", p.display())]))
        }
    }
}

fn run(cli: &Cli, cfg: &Config, seed: u64) -> Result<Report, Failure> {
    match &cli.command {
        Command::Energy => commands::energy(cfg, seed),
        Command::Observable { quantity } => commands::observable(cfg, seed, *quantity),
        Command::CompareOracle => commands::compare_oracle(cfg, seed),
        Command::Oracle { checks } => commands::oracle(cfg, seed, checks),
        Command::CheckPolarization { construction, axis, samples } => {
            commands::check_polarization(*construction, axis, *samples, seed)
        }
        Command::KernelTable { action: TableAction::Build } => commands::kernel_table_build(cfg),
        Command::KernelTable { action: TableAction::Inspect { table } } => {
            let path = table
                .clone()
                .or_else(|| cfg.table.path.as_ref().map(PathBuf::from))
                .ok_or_else(|| Failure::Validation(vec!["give --table or table.path".into()]))?;
            commands::kernel_table_inspect(&path)
        }
    }
}

fn report_validation(command: &str, errors: &[String]) -> ExitCode {
    let body = json!({ "command": command, "status": "invalid-input", "exit_code": 2, "errors": errors });
    eprintln!("{}", serde_json::to_string_pretty(&body).expect("json"));
    ExitCode::from(2)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let command = cli.command.name();
    let cfg = match load_config(cli.config.as_deref()) {
        Ok(c) => c,
        Err(f) => return report_validation(command, &f.messages()),
    };
    if let Some(n) = cli.threads {
        if n == 0 {
            return report_validation(command, &["--threads must be at least 1".into()]);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("warning: could not size the thread pool: {e}");
        }
    }
    let seed = cli.seed.unwrap_or(cfg.paths.seed);
    let out_dir = cli.out.clone().unwrap_or_else(|| PathBuf::from(&cfg.output.dir));

    let outcome = run(&cli, &cfg, seed);
    if let Err(f @ Failure::Validation(_)) = &outcome {
        return report_validation(command, &f.messages());
    }

    let (status, code, errors, results, csvs) = match outcome {
        Ok(r) => ("ok", 0, Vec::new(), r.results, r.csvs),
        Err(f) => {
            let status = if f.exit_code() == 3 { "statistical-failure" } else { "error" };
            (status, f.exit_code(), f.messages(), serde_json::Value::Null, Vec::new())
        }
    };
    let summary = json!({
        "schema_version": output::SUMMARY_SCHEMA_VERSION,
        "command": command,
        "version": output::version_string(),
        "seed": seed,
        "config": cfg,
        "status": status,
        "exit_code": code,
        "errors": errors,
        "outputs": csvs.iter().map(|c| c.name.clone()).collect::<Vec<_>>(),
        "results": results,
    });
    for e in &errors {
        eprintln!("error: {e}");
    }
    let write = || -> std::io::Result<()> {
        for c in &csvs {
            output::write_atomic(&out_dir, &c.name, c.render().as_bytes())?;
        }
        let mut text = serde_json::to_string_pretty(&summary).expect("summary serializes");
        text.push('\n');
        output::write_atomic(&out_dir, "summary.json", text.as_bytes())
    };
    if let Err(e) = write() {
        eprintln!("error: writing outputs to {}: {e}", out_dir.display());
        return ExitCode::from(1);
    }
    if code == 0 {
        println!("{}", serde_json::to_string_pretty(&summary["results"]).expect("json"));
    }
    ExitCode::from(code as u8)
}
