use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};
use patgen::oracle::{parse_fraction, OracleSpec};
use patgen::pipeline::{run, OutputFormat, RunConfig};
use patgen_core::measure::Matching;

/// Pattern-based generalization of a process model for an event log:
/// detects repetitive and concurrent patterns in the log, tests them
/// against the model through optimal alignments, and reports the weighted
/// generalization scores.
#[derive(Parser)]
#[command(name = "patgen", version, about)]
struct Cli {
    /// Event log (XES or `count;a,b,...` CSV).
    #[arg(long)]
    log: PathBuf,

    /// Process model (PNML workflow net).
    #[arg(long)]
    model: PathBuf,

    /// Concurrency oracle: alpha, alpha-plus or explicit:<path>.
    #[arg(long, default_value = "alpha-plus")]
    oracle: String,

    /// Directly-follows noise filter in [0, 1], e.g. 0.05 or 1/20.
    #[arg(long = "df-filter", default_value = "0")]
    df_filter: String,

    /// Fulfilment mode for concurrent patterns.
    #[arg(long, value_enum, default_value_t = MatchingArg::Interleavings)]
    matching: MatchingArg,

    /// Maximum linearizations per partial order.
    #[arg(long, default_value_t = 10_000)]
    cap: u64,

    /// Wall-clock timeout in seconds.
    #[arg(long, default_value_t = 600)]
    timeout: u64,

    /// Report format.
    #[arg(long, value_enum, default_value_t = OutputArg::Text)]
    output: OutputArg,

    /// Include the per-pattern breakdown in the text report.
    #[arg(long)]
    breakdown: bool,

    /// Alignment worker threads (defaults to PATGEN_THREADS or 1).
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(ValueEnum, Clone, Copy)]
enum MatchingArg {
    Partial,
    Interleavings,
}

#[derive(ValueEnum, Clone, Copy)]
enum OutputArg {
    Json,
    Csv,
    Text,
}

fn main() -> ExitCode {
    let cli = Cli::parse();

    let oracle: OracleSpec = match cli.oracle.parse() {
        Ok(spec) => spec,
        Err(message) => {
            eprintln!("patgen: {message}");
            return ExitCode::from(2);
        }
    };
    let noise = match parse_fraction(&cli.df_filter) {
        Ok(noise) => noise,
        Err(message) => {
            eprintln!("patgen: --df-filter: {message}");
            return ExitCode::from(2);
        }
    };
    let threads = cli
        .threads
        .or_else(|| {
            std::env::var("PATGEN_THREADS")
                .ok()
                .and_then(|v| v.parse().ok())
        })
        .unwrap_or(1)
        .max(1);

    let config = RunConfig {
        log_path: cli.log,
        model_path: cli.model,
        oracle,
        noise,
        noise_text: cli.df_filter,
        matching: match cli.matching {
            MatchingArg::Partial => Matching::Partial,
            MatchingArg::Interleavings => Matching::Interleavings,
        },
        linearization_cap: cli.cap,
        timeout_secs: cli.timeout,
        output: match cli.output {
            OutputArg::Json => OutputFormat::Json,
            OutputArg::Csv => OutputFormat::Csv,
            OutputArg::Text => OutputFormat::Text,
        },
        breakdown: cli.breakdown,
        threads,
    };

    match run(&config) {
        Ok(rendered) => {
            print!("{rendered}");
            ExitCode::SUCCESS
        }
        Err(error) => {
            eprintln!("patgen: {error}");
            ExitCode::from(error.exit_code() as u8)
        }
    }
}
