use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use oris_noma::scenario::{preset, write_csv, Scenario, SeriesTerms, PRESETS};
use oris_noma::Error;

/// Outage sweeps for the ORIS-assisted FSO NOMA downlink.
#[derive(Parser)]
#[command(version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a sweep and write CSV rows.
    Run {
        #[command(flatten)]
        input: Input,
        /// Output file; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        /// Monte Carlo trials per point.
        #[arg(long)]
        trials: Option<u64>,
        /// Series terms of the exact CDF, or `auto`.
        #[arg(long)]
        terms: Option<SeriesTerms>,
    },
    /// Check a scenario and print its derived channel parameters.
    Validate {
        #[command(flatten)]
        input: Input,
        /// Emit the report as JSON.
        #[arg(long)]
        json: bool,
    },
    /// Print a figure preset as scenario JSON.
    Preset { name: String },
}

#[derive(Args)]
struct Input {
    /// Scenario JSON file.
    #[arg(required_unless_present = "preset", conflicts_with = "preset")]
    scenario: Option<PathBuf>,
    /// Built-in scenario: fig3 .. fig8.
    #[arg(long)]
    preset: Option<String>,
}

const EXIT_INVALID: u8 = 2;
const EXIT_NUMERICAL: u8 = 3;

fn fail(code: u8, msg: impl std::fmt::Display) -> ExitCode {
    eprintln!("error: {msg}");
    ExitCode::from(code)
}

impl Input {
    /// The scenario as written, before invariant checks.
    fn load(&self) -> Result<Scenario, String> {
        match (&self.preset, &self.scenario) {
            (Some(name), _) => preset(name).ok_or_else(|| {
                format!("unknown preset {name:?}; available: {}", PRESETS.join(", "))
            }),
            (None, Some(path)) => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| format!("{}: {e}", path.display()))?;
                Scenario::parse(&text).map_err(|e| format!("{}: {e}", path.display()))
            }
            (None, None) => Err("no scenario given".into()),
        }
    }
}

fn configure_threads() {
    let Ok(s) = std::env::var("ORIS_NOMA_THREADS") else {
        return;
    };
    match s.parse::<usize>() {
        Ok(n) if n > 0 => {
            if let Err(e) = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build_global()
            {
                log::warn!("ORIS_NOMA_THREADS ignored: {e}");
            }
        }
        _ => log::warn!("ORIS_NOMA_THREADS={s:?} is not a positive integer; ignored"),
    }
}

fn run(
    input: &Input,
    out: Option<PathBuf>,
    seed: Option<u64>,
    trials: Option<u64>,
    terms: Option<SeriesTerms>,
) -> ExitCode {
    let mut scenario = match input.load() {
        Ok(s) => s,
        Err(e) => return fail(EXIT_INVALID, e),
    };
    if let Some(s) = seed {
        scenario.seed = s;
    }
    if let Some(n) = trials {
        scenario.mc_trials = n;
    }
    if let Some(k) = terms {
        scenario.series_terms = k;
    }
    let outcome = match scenario.run() {
        Ok(o) => o,
        Err(e) => return fail(EXIT_INVALID, e),
    };
    let written = match &out {
        Some(path) => File::create(path)
            .map_err(|e| Error::Io(format!("{}: {e}", path.display())))
            .and_then(|f| write_csv(&outcome.rows, BufWriter::new(f))),
        None => write_csv(&outcome.rows, io::stdout().lock()),
    };
    if let Err(e) = written {
        return fail(1, e);
    }
    if outcome.failures.is_empty() {
        ExitCode::SUCCESS
    } else {
        fail(
            EXIT_NUMERICAL,
            format!(
                "{} of {} rows failed numerically (p_out = NaN)",
                outcome.failures.len(),
                outcome.rows.len()
            ),
        )
    }
}

fn validate(input: &Input, json: bool) -> ExitCode {
    let scenario = match input.load() {
        Ok(s) => s,
        Err(e) => return fail(EXIT_INVALID, e),
    };
    let report = scenario.report();
    if json {
        println!(
            "{}",
            serde_json::to_string_pretty(&report).expect("report serializes")
        );
    } else {
        print!("{report}");
    }
    if report.ok {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(EXIT_INVALID)
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    configure_threads();
    match Cli::parse().command {
        Command::Run {
            input,
            out,
            seed,
            trials,
            terms,
        } => run(&input, out, seed, trials, terms),
        Command::Validate { input, json } => validate(&input, json),
        Command::Preset { name } => match preset(&name) {
            Some(s) => {
                let mut stdout = io::stdout().lock();
                let _ = writeln!(stdout, "{}", s.to_json());
                ExitCode::SUCCESS
            }
            None => fail(
                EXIT_INVALID,
                format!("unknown preset {name:?}; available: {}", PRESETS.join(", ")),
            ),
        },
    }
}
