//! `basket` command-line entry point.
//!
//! Exit codes: 0 on success, 2 on a config or usage error, 3 when a
//! pricing method fails numerically. `BASKET_THREADS` caps the worker pool.

use std::path::PathBuf;
use std::process::ExitCode;

use basket_cli::config::{MethodName, OutputFormat};
use basket_cli::run::outcome_rows;
use basket_cli::tables::{reproduce_table, TableOptions};
use basket_cli::{emit_report, parse_config, run_price, CliError, ConfigError, ExperimentConfig};
use basket_core::PricingError;
use clap::{Parser, Subcommand};

#[derive(Parser, Debug)]
#[command(name = "basket", version, about = "Basket option pricing under local volatility jump-diffusion")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Price a basket described by a JSON config.
    Price {
        #[arg(long)]
        config: PathBuf,
        /// Overrides the config's strike or moneyness list.
        #[arg(long)]
        strike: Option<f64>,
        #[arg(long)]
        maturity: Option<f64>,
        /// Comma-separated method list, e.g. `lba,mc`.
        #[arg(long, value_delimiter = ',')]
        methods: Option<Vec<String>>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        format: Option<OutputFormat>,
    },
    /// Recompute one of the built-in comparison tables.
    Reproduce {
        #[arg(long, value_parser = clap::value_parser!(u8).range(1..=4))]
        table: u8,
        #[arg(long)]
        paths: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        /// Euler steps per year for the MC column.
        #[arg(long)]
        steps: Option<usize>,
        #[arg(long, default_value = "csv")]
        format: OutputFormat,
    },
    /// Check a config without pricing anything.
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
}

fn read_config(path: &PathBuf) -> Result<ExperimentConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_config(&text)
}

fn price(
    config: PathBuf,
    strike: Option<f64>,
    maturity: Option<f64>,
    methods: Option<Vec<String>>,
    seed: Option<u64>,
    format: Option<OutputFormat>,
) -> Result<String, CliError> {
    let mut cfg = read_config(&config)?;
    if let Some(k) = strike {
        cfg.strike = Some(k);
        cfg.moneyness = None;
    }
    if let Some(t) = maturity {
        cfg.maturity = t;
    }
    if let Some(ms) = methods {
        cfg.methods = ms
            .into_iter()
            .map(MethodName::try_from)
            .collect::<Result<_, _>>()
            .map_err(|e| ConfigError::Invalid(vec![format!("--methods: {e}")]))?;
    }
    if let Some(s) = seed {
        cfg.mc.seed = s;
    }
    if let Some(f) = format {
        cfg.output = f;
    }
    let cfg = parse_config(&cfg.to_json())?;

    let outcomes = run_price(&cfg)?;
    let rows = outcome_rows(&cfg, &outcomes);
    let preamble = vec![format!("{}: T = {}, MC {}", cfg.id, cfg.maturity, cfg.mc)];
    let report = emit_report(&rows, cfg.output, &preamble);
    let mut first_error = None;
    for o in &outcomes {
        if let Err(e) = &o.result {
            eprintln!("{} at K={}: {e}", o.method, o.strike);
            first_error.get_or_insert_with(|| e.clone());
        }
        if let Ok(r) = &o.result {
            for w in &r.warnings {
                eprintln!("warning: {} at K={}: {w}", o.method, o.strike);
            }
        }
    }
    match first_error {
        None => Ok(report),
        Some(e) => {
            print!("{report}");
            Err(CliError::Numerical(e))
        }
    }
}

fn reproduce(
    table: u8,
    paths: Option<usize>,
    seed: Option<u64>,
    steps: Option<usize>,
    format: OutputFormat,
) -> Result<String, CliError> {
    let mut options = TableOptions::default();
    if let Some(n) = paths {
        options.mc.n_paths = n;
    }
    if let Some(s) = seed {
        options.mc.seed = s;
    }
    if let Some(s) = steps {
        options.mc.steps_per_year = s;
    }
    if options.mc.n_paths < 2 || options.mc.steps_per_year < 1 {
        return Err(CliError::Usage("--paths must be >= 2 and --steps >= 1".into()));
    }
    let report = reproduce_table(table, &options).ok_or_else(|| CliError::Usage(format!("no table {table}")))?;
    let preamble = report.preamble();
    if format == OutputFormat::Csv {
        for line in &preamble[1..2] {
            eprintln!("{line}");
        }
    }
    let text = emit_report(&report.rows, format, &preamble);
    if let Some((config, method, e)) = report.failures.first() {
        print!("{text}");
        eprintln!("{method} failed for {config}: {e}");
        return Err(CliError::Numerical(PricingError::clone(e)));
    }
    Ok(text)
}

fn validate(config: PathBuf) -> Result<String, CliError> {
    let cfg = read_config(&config)?;
    let methods: Vec<String> = cfg.methods.iter().map(|m| String::from(*m)).collect();
    Ok(format!(
        "ok: {} assets, {} strike(s), methods {}\n",
        cfg.assets.len(),
        cfg.strikes().len(),
        methods.join(",")
    ))
}

fn configure_threads() -> Result<(), CliError> {
    if let Ok(v) = std::env::var("BASKET_THREADS") {
        let n: usize = v
            .trim()
            .parse()
            .ok()
            .filter(|&n| n > 0)
            .ok_or_else(|| CliError::Usage(format!("BASKET_THREADS must be a positive integer, got '{v}'")))?;
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Usage(e.to_string()))?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = configure_threads().and_then(|()| match cli.command {
        Command::Price {
            config,
            strike,
            maturity,
            methods,
            seed,
            format,
        } => price(config, strike, maturity, methods, seed, format),
        Command::Reproduce {
            table,
            paths,
            seed,
            steps,
            format,
        } => reproduce(table, paths, seed, steps, format),
        Command::Validate { config } => validate(config),
    });
    match result {
        Ok(text) => {
            print!("{text}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
