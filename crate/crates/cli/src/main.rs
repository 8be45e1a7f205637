// `!(x > 0.0)` also rejects NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use arcd_core::grid::Method;
use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(name = "arcd", version, about = "Confidence distributions and regions for zero-mean AR models")]
struct Cli {
    /// Worker threads (default: all cores). Results do not depend on it.
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Root seed; drawn from entropy and printed when omitted.
    #[arg(long, global = true)]
    seed: Option<u64>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate one AR(p) series.
    Simulate(SimulateArgs),
    /// Fit an AR(p) model to a series.
    Fit(FitArgs),
    /// Confidence surface and region for one method.
    Region(RegionArgs),
    /// Fit, all four confidence regions, and the flat-prior credibility region.
    Analyze(AnalyzeArgs),
    /// Coverage and mean area of the region methods over simulated replicates.
    Coverage(CoverageArgs),
    /// Mean residual of the log implied prior over simulated replicates.
    ImpliedPrior(ImpliedPriorArgs),
}

fn parse_vec(s: &str) -> Result<Vec<f64>, String> {
    s.split(',')
        .map(|x| x.trim().parse::<f64>().map_err(|_| format!("'{x}' is not a number")))
        .collect()
}

fn parse_pair(s: &str) -> Result<[f64; 2], String> {
    match parse_vec(s)?.as_slice() {
        &[a, b] => Ok([a, b]),
        _ => Err("expected two comma-separated numbers".into()),
    }
}

fn parse_level(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|_| format!("'{s}' is not a number"))?;
    if v > 0.0 && v < 1.0 {
        Ok(v)
    } else {
        Err(format!("level must lie strictly between 0 and 1, got {v}"))
    }
}

fn parse_method(s: &str) -> Result<Method, String> {
    let m: Method = s.parse().map_err(|e: arcd_core::ArcdError| e.to_string())?;
    if Method::CONFIDENCE.contains(&m) {
        Ok(m)
    } else {
        Err(format!("'{s}' is not one of cd_bootstrap, cd_asymptotic, wald_asymptotic, wald_bootstrap"))
    }
}

#[derive(Args)]
struct SimulateArgs {
    /// Coefficients, comma-separated.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required = true)]
    phi: Vec<f64>,
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 1.0)]
    sigma2: f64,
    /// Output CSV; stdout when omitted. The config goes to `<output>.json`.
    #[arg(long)]
    output: Option<PathBuf>,
    /// Column header for the CSV.
    #[arg(long)]
    header: Option<String>,
}

#[derive(Args, Clone)]
struct SeriesInput {
    /// Single-column series CSV.
    #[arg(long)]
    input: PathBuf,
    /// The first line of the input is a header.
    #[arg(long)]
    header: bool,
    /// `logshift`: z = log(y - min y + shift).
    #[arg(long, value_parser = ["logshift"])]
    transform: Option<String>,
    #[arg(long, default_value_t = 0.1)]
    shift: f64,
    /// Subtract the sample mean (after any transform).
    #[arg(long)]
    demean: bool,
}

#[derive(Args)]
struct FitArgs {
    #[command(flatten)]
    series: SeriesInput,
    #[arg(long, default_value_t = 2)]
    order: usize,
}

#[derive(Args, Clone)]
struct GridArgs {
    /// Grid subdivisions per axis.
    #[arg(long, default_value_t = 100)]
    m: usize,
    /// Window half-width in standard errors around the estimate.
    #[arg(long, default_value_t = 5.0)]
    window_se: f64,
    #[arg(long, default_value_t = 500)]
    n_bootstrap: usize,
    #[arg(long, default_value_t = 500)]
    n_mc: usize,
    /// Subdivisions of the simulated-cdf grid.
    #[arg(long, default_value_t = 24)]
    cdf_m: usize,
}

#[derive(Args)]
struct RegionArgs {
    /// Series CSV (or use --simulate).
    #[arg(long, conflicts_with = "simulate", required_unless_present = "simulate")]
    input: Option<PathBuf>,
    #[arg(long)]
    header: bool,
    /// Simulate the input from --phi, --n and --sigma2.
    #[arg(long, requires_all = ["phi", "n"])]
    simulate: bool,
    #[arg(long, value_parser = parse_pair, allow_hyphen_values = true)]
    phi: Option<[f64; 2]>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long, default_value_t = 1.0)]
    sigma2: f64,
    #[arg(long, value_parser = parse_method)]
    method: Method,
    #[arg(long, value_parser = parse_level, default_value_t = 0.95)]
    level: f64,
    /// Report whether this point is covered.
    #[arg(long, value_parser = parse_pair, allow_hyphen_values = true)]
    truth: Option<[f64; 2]>,
    #[command(flatten)]
    grid: GridArgs,
    /// Surface CSV output.
    #[arg(long)]
    surface_out: Option<PathBuf>,
    /// Region JSON output.
    #[arg(long)]
    region_out: Option<PathBuf>,
}

#[derive(Args)]
struct AnalyzeArgs {
    #[command(flatten)]
    series: SeriesInput,
    #[arg(long, default_value_t = 2)]
    order: usize,
    #[arg(long, value_parser = parse_level, default_value_t = 0.95)]
    level: f64,
    /// Methods to run; all four by default.
    #[arg(long, value_parser = parse_method, value_delimiter = ',')]
    methods: Vec<Method>,
    #[command(flatten)]
    grid: GridArgs,
    /// Directory for surface CSVs and region JSONs.
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

#[derive(Args)]
struct CoverageArgs {
    /// JSON config; flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_parser = parse_pair, allow_hyphen_values = true)]
    phi0: Option<[f64; 2]>,
    /// Sample sizes, comma-separated.
    #[arg(long, value_delimiter = ',')]
    n: Option<Vec<usize>>,
    #[arg(long, value_parser = parse_level, value_delimiter = ',')]
    levels: Option<Vec<f64>>,
    #[arg(long, value_parser = parse_method, value_delimiter = ',')]
    methods: Option<Vec<Method>>,
    #[arg(long)]
    replicates: Option<usize>,
    #[arg(long)]
    n_bootstrap: Option<usize>,
    #[arg(long)]
    n_mc: Option<usize>,
    #[arg(long)]
    m: Option<usize>,
    #[arg(long)]
    cdf_m: Option<usize>,
    #[arg(long)]
    window_se: Option<f64>,
    /// Results CSV; stdout when omitted.
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct ImpliedPriorArgs {
    #[arg(long, value_parser = parse_pair, allow_hyphen_values = true)]
    phi0: [f64; 2],
    #[arg(long)]
    n: usize,
    #[arg(long)]
    reps: usize,
    #[arg(long, default_value_t = 1.0)]
    sigma2: f64,
    /// Half-width of the square window around phi0.
    #[arg(long, default_value_t = 0.5)]
    half_width: f64,
    #[arg(long, default_value_t = 40)]
    m: usize,
    /// Contour levels, comma-separated.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    contours: Vec<f64>,
    /// Average |residual| instead of the residual.
    #[arg(long)]
    absolute: bool,
    /// Surface CSV; stdout when omitted.
    #[arg(long)]
    output: Option<PathBuf>,
    /// Contour JSON output.
    #[arg(long)]
    contour_out: Option<PathBuf>,
}

/// The given seed, or a fresh one that is printed so the run can be repeated.
pub(crate) fn resolve_seed(seed: Option<u64>) -> u64 {
    seed.unwrap_or_else(|| {
        let s = rand::random::<u64>();
        eprintln!("seed: {s}");
        s
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(t) = cli.threads {
        if t == 0 {
            eprintln!("error: --threads must be at least 1");
            return ExitCode::from(2);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(t).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    }
    let seed = cli.seed;
    let result = match cli.command {
        Command::Simulate(a) => commands::simulate(a, resolve_seed(seed)),
        Command::Fit(a) => commands::fit(a),
        Command::Region(a) => commands::region(a, resolve_seed(seed)),
        Command::Analyze(a) => commands::analyze(a, resolve_seed(seed)),
        Command::Coverage(a) => commands::coverage(a, seed),
        Command::ImpliedPrior(a) => commands::implied_prior(a, resolve_seed(seed)),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
