use std::path::PathBuf;
use std::process::ExitCode;

use bnqd_cli::config::KernelEntry;
use bnqd_cli::report::VERSION;
use bnqd_cli::{analyze, simulate, AnalyzeConfig, CliError, SimulateConfig};
use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(name = "bnqd", about = "Bayesian nonparametric discontinuity analysis", version = VERSION)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compare continuous and discontinuous GP models on a CSV data set.
    Analyze(AnalyzeArgs),
    /// Run the simulation grid over latent functions and effect sizes.
    Simulate(SimulateArgs),
    /// Print the version.
    Version,
}

/// Every flag overrides the config key of the same name.
#[derive(Args)]
struct AnalyzeArgs {
    /// TOML config file.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    data: Option<PathBuf>,
    #[arg(long, value_delimiter = ',')]
    x_columns: Option<Vec<String>>,
    #[arg(long)]
    y_column: Option<String>,
    #[arg(long, allow_negative_numbers = true)]
    threshold: Option<f64>,
    #[arg(long)]
    threshold_dim: Option<usize>,
    #[arg(long)]
    boundary: Option<PathBuf>,
    /// Comma-separated kernel names: linear, polyN, exp, matern32, se.
    #[arg(long, value_delimiter = ',')]
    kernels: Option<Vec<String>>,
    #[arg(long)]
    restarts: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    max_iter: Option<usize>,
    #[arg(long)]
    tolerance: Option<f64>,
    #[arg(long)]
    prior_m1: Option<f64>,
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    effect_point: Option<Vec<f64>>,
    #[arg(long)]
    output: Option<PathBuf>,
    #[arg(long)]
    curves_output: Option<PathBuf>,
    #[arg(long)]
    density_output: Option<PathBuf>,
    #[arg(long)]
    profile_output: Option<PathBuf>,
    #[arg(long)]
    mc_samples: Option<usize>,
    #[arg(long)]
    profile_count: Option<usize>,
    #[arg(long)]
    curve_points: Option<usize>,
}

macro_rules! override_fields {
    ($cfg:ident, $args:ident; $($field:ident),* ; $($opt:ident),*) => {
        $(if let Some(v) = $args.$field { $cfg.$field = v; })*
        $(if $args.$opt.is_some() { $cfg.$opt = $args.$opt; })*
    };
}

fn names_to_kernels(names: Vec<String>) -> Vec<KernelEntry> {
    names.into_iter().map(KernelEntry::Name).collect()
}

impl AnalyzeArgs {
    fn into_config(self) -> Result<AnalyzeConfig, CliError> {
        let mut cfg = match &self.config {
            Some(p) => AnalyzeConfig::from_file(p)?,
            None => AnalyzeConfig::default(),
        };
        let args = self;
        if let Some(k) = args.kernels {
            cfg.kernels = names_to_kernels(k);
        }
        override_fields!(cfg, args;
            x_columns, y_column, threshold_dim, restarts, seed, max_iter, tolerance, prior_m1,
            output, mc_samples, profile_count, curve_points;
            data, threshold, boundary, effect_point, curves_output, density_output, profile_output);
        Ok(cfg)
    }
}

#[derive(Args)]
struct SimulateArgs {
    /// TOML config file.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_delimiter = ',')]
    latents: Option<Vec<String>>,
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    d_values: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    sigmas: Option<Vec<f64>>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    repetitions: Option<usize>,
    #[arg(long, value_delimiter = ',')]
    kernels: Option<Vec<String>>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    restarts: Option<usize>,
    #[arg(long)]
    rmse_samples: Option<usize>,
    #[arg(long, allow_negative_numbers = true)]
    x0: Option<f64>,
    #[arg(long)]
    output_csv: Option<PathBuf>,
    #[arg(long)]
    output_json: Option<PathBuf>,
}

impl SimulateArgs {
    fn into_config(self) -> Result<SimulateConfig, CliError> {
        let mut cfg = match &self.config {
            Some(p) => SimulateConfig::from_file(p)?,
            None => SimulateConfig::default(),
        };
        let args = self;
        if let Some(k) = args.kernels {
            cfg.kernels = names_to_kernels(k);
        }
        override_fields!(cfg, args;
            latents, d_values, sigmas, n, repetitions, seed, restarts, x0, output_csv, output_json;
            rmse_samples);
        Ok(cfg)
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Analyze(args) => {
            let cfg = args.into_config()?;
            let report = analyze(&cfg)?;
            let t = &report.totals;
            eprintln!(
                "log BF10 = {:.4}, p(M1|D) = {:.4}, BMA effect = {:.4}; report written to {}",
                t.log_bf10,
                t.p_m1,
                t.bma_mean,
                cfg.output.display()
            );
        }
        Command::Simulate(args) => {
            let cfg = args.into_config()?;
            let report = simulate(&cfg)?;
            eprintln!(
                "{} summary rows, {} failed repetitions; written to {} and {}",
                report.summary.rows.len(),
                report.summary.failures.len(),
                cfg.output_csv.display(),
                cfg.output_json.display()
            );
        }
        Command::Version => println!("bnqd {VERSION}"),
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(2) } else { ExitCode::SUCCESS };
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
