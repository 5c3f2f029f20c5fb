//! `rwfit`: fit reflected Weibull models to data files and run Monte Carlo
//! comparisons of the estimators.
//!
//! Exit codes: 0 success, 1 input/output or configuration error, 2 a fit failed.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rwfit_core::estimate::Method;
use rwfit_core::io::{fit_report, write_plot_data, FitInput, FitSettings, InputFormat};
use rwfit_core::simulation::{self, SimConfig};

const SEED_ENV: &str = "RWFIT_SEED";

#[derive(Parser)]
#[command(name = "rwfit", version, about = "Reflected Weibull estimation: MLE, moments and location/scale-free fits")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit one or all estimators to a data file and write a JSON report.
    Fit(FitArgs),
    /// Run the Monte Carlo comparison over a grid of shapes and sample sizes.
    Simulate(SimulateArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    /// One numeric column, optional header `value`.
    Raw,
    /// Header `lower,upper,frequency`. Integer-age classes such as 5-14 are
    /// written with real boundaries 4.5,14.5 so that classes are contiguous.
    Grouped,
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    Mle,
    Mme,
    Lspfe,
    All,
}

#[derive(Args)]
struct FitArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long, value_enum, default_value = "raw")]
    format: FormatArg,
    #[arg(long, value_enum, default_value = "all")]
    method: MethodArg,
    /// Fit -X instead of X (for data following the ordinary Weibull form).
    #[arg(long)]
    negate: bool,
    /// Report path; the JSON goes to stdout when omitted.
    #[arg(long)]
    output: Option<PathBuf>,
    /// CSV of empirical and fitted curves on a 200-point grid.
    #[arg(long)]
    plot_data: Option<PathBuf>,
}

#[derive(Args)]
struct SimulateArgs {
    /// JSON configuration; flags below override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Comma-separated true shapes.
    #[arg(long, value_delimiter = ',')]
    deltas: Option<Vec<f64>>,
    /// Comma-separated sample sizes.
    #[arg(long, value_delimiter = ',')]
    ns: Option<Vec<usize>>,
    #[arg(long)]
    replications: Option<usize>,
    /// Comma-separated subset of lspfe, mle, mme.
    #[arg(long, value_delimiter = ',')]
    methods: Option<Vec<Method>>,
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long)]
    gamma: Option<f64>,
    /// Base seed. Without it the config file value is used, then RWFIT_SEED,
    /// then the built-in default.
    #[arg(long)]
    seed: Option<u64>,
    /// Results CSV. A table (`.txt`) and the effective configuration
    /// (`.config.json`) are written next to it. Without it the table goes to
    /// stdout.
    #[arg(long)]
    output: Option<PathBuf>,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match cli.command {
        Command::Fit(args) => cmd_fit(&args),
        Command::Simulate(args) => cmd_simulate(&args),
    }
}

fn fail(code: u8, err: anyhow::Error) -> ExitCode {
    eprintln!("error: {err:#}");
    ExitCode::from(code)
}

fn methods_of(arg: MethodArg) -> Vec<Method> {
    match arg {
        MethodArg::Mle => vec![Method::Mle],
        MethodArg::Mme => vec![Method::Mme],
        MethodArg::Lspfe => vec![Method::Lspfe],
        MethodArg::All => Method::ALL.to_vec(),
    }
}

fn cmd_fit(args: &FitArgs) -> ExitCode {
    let format = match args.format {
        FormatArg::Raw => InputFormat::Raw,
        FormatArg::Grouped => InputFormat::Grouped,
    };
    let input = match FitInput::read(&args.input, format) {
        Ok(input) if args.negate => input.negated(),
        Ok(input) => input,
        Err(e) => return fail(1, e.into()),
    };
    let timestamp = chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true);
    let report = fit_report(
        &args.input,
        &input,
        args.negate,
        &methods_of(args.method),
        &FitSettings::default(),
        timestamp,
    );

    let written = (|| -> Result<()> {
        let json = report.to_json()?;
        match &args.output {
            Some(path) => {
                fs::write(path, json + "\n").with_context(|| format!("writing {}", path.display()))?;
                for f in &report.fits {
                    match (&f.result, &f.error) {
                        (Some(r), _) => println!(
                            "{:<6} delta = {:<12.6} beta = {:<12.6} gamma = {:<12.6}{}",
                            f.method,
                            r.params.delta,
                            r.params.beta,
                            r.params.gamma,
                            if r.boundary_hit { "  (boundary)" } else { "" }
                        ),
                        (None, Some(e)) => println!("{:<6} failed: {e}", f.method),
                        (None, None) => {}
                    }
                }
            }
            None => println!("{json}"),
        }
        if let Some(path) = &args.plot_data {
            let fits: Vec<_> = report.fits.iter().filter_map(|f| f.result.as_ref()).collect();
            let file = fs::File::create(path).with_context(|| format!("creating {}", path.display()))?;
            write_plot_data(&input.sample(), &fits, file).with_context(|| format!("writing {}", path.display()))?;
        }
        Ok(())
    })();
    if let Err(e) = written {
        return fail(1, e);
    }
    for f in &report.fits {
        if let Some(e) = &f.error {
            eprintln!("error: {} fit failed: {e}", f.method);
        }
    }
    if report.all_succeeded() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(2)
    }
}

fn effective_config(args: &SimulateArgs) -> Result<SimConfig> {
    let mut config = SimConfig::default();
    if let Ok(text) = std::env::var(SEED_ENV) {
        config.base_seed = text
            .trim()
            .parse()
            .with_context(|| format!("{SEED_ENV} must be an unsigned integer, got `{text}`"))?;
    }
    if let Some(path) = &args.config {
        let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let env_seed = config.base_seed;
        let mut value: serde_json::Value =
            serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
        if let Some(obj) = value.as_object_mut() {
            obj.entry("base_seed").or_insert(env_seed.into());
        }
        config = serde_json::from_value(value).with_context(|| format!("parsing {}", path.display()))?;
    }
    if let Some(v) = &args.deltas {
        config.delta_values = v.clone();
    }
    if let Some(v) = &args.ns {
        config.n_values = v.clone();
    }
    if let Some(v) = args.replications {
        config.replications = v;
    }
    if let Some(v) = &args.methods {
        config.methods = v.clone();
    }
    if let Some(v) = args.beta {
        config.beta_true = v;
    }
    if let Some(v) = args.gamma {
        config.gamma_true = v;
    }
    if let Some(v) = args.seed {
        config.base_seed = v;
    }
    config.validate()?;
    Ok(config)
}

fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    path.with_file_name(format!("{stem}{suffix}"))
}

fn cmd_simulate(args: &SimulateArgs) -> ExitCode {
    let config = match effective_config(args) {
        Ok(c) => c,
        Err(e) => return fail(1, e),
    };
    let report = match simulation::run(&config) {
        Ok(r) => r,
        Err(e) => return fail(2, e.into()),
    };
    let table = simulation::render_text(&report.cells);
    let written = (|| -> Result<()> {
        match &args.output {
            Some(path) => {
                let file = fs::File::create(path).with_context(|| format!("creating {}", path.display()))?;
                simulation::write_csv(&report.cells, file)?;
                let table_path = sibling(path, ".txt");
                fs::write(&table_path, &table).with_context(|| format!("writing {}", table_path.display()))?;
                let config_path = sibling(path, ".config.json");
                fs::write(&config_path, serde_json::to_string_pretty(&config)? + "\n")
                    .with_context(|| format!("writing {}", config_path.display()))?;
                print!("{table}");
            }
            None => print!("{table}"),
        }
        Ok(())
    })();
    match written {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => fail(1, e),
    }
}
