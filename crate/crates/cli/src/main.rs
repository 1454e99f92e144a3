//! `wpadam`: train, compare, probe and self-verify from the command line.
//!
//! Exit codes: 0 success, 1 failed self-check, 2 configuration or input
//! error, 3 divergence, 4 I/O error.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use wpadam::harness::{
    aggregate, run_comparison, run_one, run_probe, write_metrics_csv, write_probe_csv,
    write_trace_csv, ExperimentConfig, Problem, METRICS_FILE, PROBE_FILE, TRACE_FILE,
};
use wpadam::verify::{all_passed, run_checks, Fault};
use wpadam::Error;

const EXIT_CHECK_FAILED: u8 = 1;
const EXIT_CONFIG: u8 = 2;
const EXIT_DIVERGENCE: u8 = 3;
const EXIT_IO: u8 = 4;

#[derive(Parser, Debug)]
#[command(
    name = "wpadam",
    version,
    about = "AdamW with s-step weight prediction: training, sweeps and checks"
)]
struct Cli {
    #[command(flatten)]
    global: Global,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct Global {
    /// TOML experiment config; built-in defaults are used when omitted.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,

    /// Override one config key, e.g. `--set optimizer.s=2`. Repeatable.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    overrides: Vec<String>,

    /// Output directory (overrides `experiment.output`).
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,

    /// Comma-separated seeds (overrides `experiment.seeds`).
    #[arg(long, global = true, value_name = "LIST", value_delimiter = ',')]
    seeds: Option<Vec<u64>>,

    /// Only report errors.
    #[arg(long, global = true)]
    quiet: bool,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// One training run in `training.mode`, first seed.
    Train,
    /// Every mode in `experiment.modes` against every seed, then a summary table.
    Compare,
    /// How closely summed and extrapolated updates track the true trajectory.
    Probe,
    /// Built-in oracle suite.
    Verify {
        #[arg(long, hide = true)]
        fault: Option<String>,
    },
}

impl Global {
    fn load(&self) -> Result<ExperimentConfig, Error> {
        let mut overrides = self.overrides.clone();
        if let Some(out) = &self.out {
            overrides.push(format!(
                "experiment.output={}",
                toml_string(&out.display().to_string())
            ));
        }
        if let Some(seeds) = &self.seeds {
            let list: Vec<String> = seeds.iter().map(u64::to_string).collect();
            overrides.push(format!("experiment.seeds=[{}]", list.join(", ")));
        }
        match &self.config {
            Some(path) => ExperimentConfig::load(path, &overrides),
            None => ExperimentConfig::default().with_overrides(&overrides),
        }
    }

    fn say(&self, text: impl AsRef<str>) {
        if !self.quiet {
            println!("{}", text.as_ref());
        }
    }
}

fn toml_string(text: &str) -> String {
    format!("\"{}\"", text.replace('\\', "\\\\").replace('"', "\\\""))
}

fn exit_code(error: &Error) -> u8 {
    match error {
        Error::Io { .. } => EXIT_IO,
        e if e.is_divergence() => EXIT_DIVERGENCE,
        _ => EXIT_CONFIG,
    }
}

fn output_dir(config: &ExperimentConfig) -> Result<PathBuf, Error> {
    let dir = config.experiment.output.clone();
    std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    Ok(dir)
}

fn cmd_train(global: &Global) -> Result<u8, Error> {
    let config = global.load()?;
    let problem = Problem::build(&config.problem)?;
    let mode = config.train_mode();
    let seed = config.experiment.seeds[0];
    let record = run_one(&problem, &config, mode, seed)?;

    let dir = output_dir(&config)?;
    let records = std::slice::from_ref(&record);
    write_metrics_csv(records, &dir.join(METRICS_FILE))?;
    if config.experiment.trace {
        write_trace_csv(records, &dir.join(TRACE_FILE))?;
    }

    global.say(format!("problem: {}", record.problem));
    global.say(format!(
        "mode: {mode}  seed: {seed}  epochs: {}",
        record.epochs.len()
    ));
    let s = &record.summary;
    if !record.epochs.is_empty() {
        global.say(format!("final train loss: {:.6e}", s.final_train_loss));
        global.say(format!(
            "min val loss:     {:.6e} (epoch {})",
            s.min_val_loss, s.best_epoch
        ));
    }
    if s.max_val_acc.is_finite() {
        global.say(format!("max val accuracy: {:.4}", s.max_val_acc));
    }
    global.say(format!("metrics: {}", dir.join(METRICS_FILE).display()));

    if let Some(step) = record.diverged_at {
        let reason = record
            .divergence_reason
            .as_deref()
            .unwrap_or("non-finite value");
        eprintln!("error: training diverged at step {step}: {reason}");
        return Ok(EXIT_DIVERGENCE);
    }
    Ok(0)
}

fn cmd_compare(global: &Global) -> Result<u8, Error> {
    let config = global.load()?;
    let records = run_comparison(&config)?;
    let table = aggregate(&records)?;
    global.say(table.render().trim_end());
    for r in records.iter().filter(|r| r.diverged_at.is_some()) {
        global.say(format!(
            "note: {} seed {} diverged at step {}",
            r.mode,
            r.seed,
            r.diverged_at.unwrap_or_default()
        ));
    }
    global.say(format!(
        "metrics: {}",
        config.experiment.output.join(METRICS_FILE).display()
    ));
    Ok(0)
}

fn cmd_probe(global: &Global) -> Result<u8, Error> {
    let config = global.load()?;
    let report = run_probe(&config)?;
    let dir = output_dir(&config)?;
    write_probe_csv(&report, &dir.join(PROBE_FILE))?;
    global.say(format!(
        "{:>10} {:>3} {:>14} {:>20}",
        "checkpoint", "s", "sum error", "extrapolation error"
    ));
    for row in &report.rows {
        global.say(format!(
            "{:>10} {:>3} {:>14.4e} {:>20.4e}",
            row.checkpoint, row.s, row.sum_error, row.extrapolation_error
        ));
    }
    global.say(format!("probe: {}", dir.join(PROBE_FILE).display()));
    Ok(0)
}

fn cmd_verify(global: &Global, fault: Option<&str>) -> Result<u8, Error> {
    let fault = fault.map(str::parse::<Fault>).transpose()?;
    let outcomes = run_checks(fault);
    for outcome in &outcomes {
        global.say(outcome.to_string());
    }
    let passed = outcomes.iter().filter(|o| o.passed).count();
    global.say(format!("{passed}/{} checks passed", outcomes.len()));
    Ok(if all_passed(&outcomes) {
        0
    } else {
        EXIT_CHECK_FAILED
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Train => cmd_train(&cli.global),
        Command::Compare => cmd_compare(&cli.global),
        Command::Probe => cmd_probe(&cli.global),
        Command::Verify { fault } => cmd_verify(&cli.global, fault.as_deref()),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
