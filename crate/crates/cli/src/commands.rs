use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use arcd_core::ar::{fit as fit_ar, is_causal, omega_hat, simulate_with_rng, ArParams, FitResult, SeriesSample};
use arcd_core::bayes::{
    corrected_region, flat_prior_posterior_from_fit, likelihood_extension, spike_correction, SpikeCorrection, Variance,
};
use arcd_core::cd::cd_asymptotic_surface_raw;
use arcd_core::contour::contour_lines;
use arcd_core::experiments::{run_coverage_study, run_implied_prior_study, ExperimentConfig};
use arcd_core::grid::{ConfidenceSurface, Method, ParamGrid2D, TRIANGLE_BOX};
use arcd_core::io::{read_series_csv, rows_to_csv, sig6, surface_to_csv, write_series_csv};
use arcd_core::methods::{default_window, method_surface, region_at, standard_errors, MethodSettings};
use arcd_core::region::RegionResult;
use arcd_core::rng::ArRng;
use arcd_core::ArcdError;
use serde_json::json;

use crate::{
    resolve_seed, AnalyzeArgs, CoverageArgs, FitArgs, GridArgs, ImpliedPriorArgs, RegionArgs, SeriesInput,
    SimulateArgs,
};

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Io(PathBuf, std::io::Error),
    Core(ArcdError),
}

impl CliError {
    /// 2 for bad input, 1 for failures while computing or writing.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Io(..) => 1,
            CliError::Core(ArcdError::InvalidParameter(_) | ArcdError::Parse(_)) => 2,
            CliError::Core(_) => 1,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) => f.write_str(m),
            CliError::Io(p, e) => write!(f, "{}: {e}", p.display()),
            CliError::Core(e) => write!(f, "{e}"),
        }
    }
}

impl From<ArcdError> for CliError {
    fn from(e: ArcdError) -> Self {
        CliError::Core(e)
    }
}

type Result<T> = std::result::Result<T, CliError>;

fn read_file(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| CliError::Io(path.to_path_buf(), e))
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| CliError::Io(path.to_path_buf(), e))
}

/// Writes to `path`, or to stdout when there is none.
fn emit(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => write_file(p, text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn to_json<T: serde::Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable");
    s.push('\n');
    s
}

fn load_series(input: &SeriesInput) -> Result<SeriesSample> {
    let mut s = read_series_csv(&read_file(&input.input)?, input.header)?;
    if input.transform.as_deref() == Some("logshift") {
        s = s.log_shift(input.shift)?;
    }
    if input.demean {
        s = s.demean();
    }
    Ok(s)
}

fn settings(g: &GridArgs) -> MethodSettings {
    MethodSettings {
        n_bootstrap: g.n_bootstrap,
        n_mc: g.n_mc,
        cdf_m: g.cdf_m,
    }
}

fn joined(v: &[f64]) -> String {
    v.iter().map(|x| sig6(*x)).collect::<Vec<_>>().join(" ")
}

fn print_fit(fit: &FitResult) {
    println!("n           {}", fit.n);
    println!("order       {}", fit.order());
    println!("phi_hat     {}", joined(&fit.phi_hat));
    match omega_hat(&fit.phi_hat) {
        Ok(o) if !o.near_singular => {
            let se: Vec<f64> = (0..fit.order()).map(|j| (o.omega[(j, j)] / fit.n as f64).sqrt()).collect();
            println!("se          {}", joined(&se));
        }
        _ => println!("se          unavailable (estimate is not causal)"),
    }
    println!("sigma2_hat  {}", sig6(fit.sigma2_hat));
}

pub fn simulate(a: SimulateArgs, seed: u64) -> Result<()> {
    let params = ArParams::new(a.phi.clone(), a.sigma2)?;
    if !is_causal(&params.phi) {
        eprintln!("warning: non-causal parameters {}; the series may explode", joined(&params.phi));
    }
    let series = simulate_with_rng(&params, a.n, &mut ArRng::new(seed))?;
    emit(a.output.as_deref(), &write_series_csv(&series, a.header.as_deref()))?;
    let config = to_json(&json!({ "phi": params.phi, "sigma2": params.sigma2, "n": a.n, "seed": seed }));
    match &a.output {
        Some(p) => {
            let mut side = p.clone().into_os_string();
            side.push(".json");
            write_file(Path::new(&side), &config)
        }
        None => {
            eprint!("{config}");
            Ok(())
        }
    }
}

pub fn fit(a: FitArgs) -> Result<()> {
    let s = load_series(&a.series)?;
    print_fit(&fit_ar(&s, a.order)?);
    Ok(())
}

fn check_order_two(fit: &FitResult) -> Result<()> {
    if fit.order() != 2 {
        return Err(CliError::Usage("regions are computed for order 2 only".into()));
    }
    Ok(())
}

pub fn region(a: RegionArgs, seed: u64) -> Result<()> {
    let root = ArRng::new(seed);
    let series = if a.simulate {
        let phi = a.phi.expect("clap requires --phi");
        let params = ArParams::new(phi.to_vec(), a.sigma2)?;
        if !is_causal(&params.phi) {
            eprintln!("warning: non-causal parameters {}", joined(&params.phi));
        }
        simulate_with_rng(&params, a.n.expect("clap requires --n"), &mut root.split(0))?
    } else {
        let path = a.input.as_ref().expect("clap requires --input");
        read_series_csv(&read_file(path)?, a.header)?
    };
    let fit = fit_ar(&series, 2)?;
    check_order_two(&fit)?;
    let grid = default_window(&fit, a.grid.window_se, a.grid.m)?;
    let surface = method_surface(&fit, a.method, &grid, &settings(&a.grid), &root.split(1))?;
    let region = region_at(&surface, a.level)?;
    println!("phi_hat   {}", joined(&fit.phi_hat));
    println!("method    {}", a.method);
    println!("level     {}", sig6(a.level));
    println!("area      {}", sig6(region.area));
    println!("cells     {}", region.len());
    if let Some(t) = a.truth {
        println!("covered   {}", region.contains(t));
    }
    for w in &region.warnings {
        eprintln!("warning: {w}");
    }
    if let Some(p) = &a.surface_out {
        write_file(p, &surface_to_csv(&surface))?;
    }
    if let Some(p) = &a.region_out {
        write_file(p, &to_json(&region.to_json()))?;
    }
    Ok(())
}

struct Outcome {
    method: Method,
    region: RegionResult,
    surface: Option<ConfidenceSurface>,
}

fn print_region(name: &str, region: &RegionResult, band: f64) {
    println!(
        "{name:<16} {:>10} {:>6}",
        sig6(region.area),
        if region.touches_unit_root_line(band) { "yes" } else { "no" }
    );
}

pub fn analyze(a: AnalyzeArgs, seed: u64) -> Result<()> {
    let series = load_series(&a.series)?;
    let fit = fit_ar(&series, a.order)?;
    print_fit(&fit);
    if fit.order() != 2 {
        println!("regions are computed for order 2 only");
        return Ok(());
    }
    let methods = if a.methods.is_empty() { Method::CONFIDENCE.to_vec() } else { a.methods.clone() };
    let grid = default_window(&fit, a.grid.window_se, a.grid.m)?;
    let band = grid.cell_diagonal();
    let root = ArRng::new(seed);
    let st = settings(&a.grid);

    println!();
    println!("{:<16} {:>10} {:>6}", "method", "area", "band");
    let mut outcomes = Vec::new();
    for &m in &methods {
        let stream = Method::CONFIDENCE.iter().position(|c| *c == m).unwrap_or(0) as u64;
        let surface = method_surface(&fit, m, &grid, &st, &root.split(stream))?;
        let region = region_at(&surface, a.level)?;
        print_region(m.as_str(), &region, band);
        outcomes.push(Outcome {
            method: m,
            region,
            surface: Some(surface),
        });
    }

    let posterior = flat_prior_posterior_from_fit(&fit, &grid, Variance::Profile)?;
    let flat = region_at(&posterior, a.level)?;
    print_region(Method::BayesFlat.as_str(), &flat, band);
    let touches = flat.touches_unit_root_line(band);
    let correction = if touches {
        let ext = likelihood_extension(&fit, &grid, Variance::Profile)?;
        let reference = cd_asymptotic_surface_raw(&fit, &grid, false)?;
        Some(spike_correction(&ext, &reference, band)?)
    } else {
        None
    };
    outcomes.push(Outcome {
        method: Method::BayesFlat,
        region: flat,
        surface: Some(posterior.clone()),
    });
    match &correction {
        Some(c) => {
            let corrected = corrected_region(&posterior, c, a.level)?;
            print_region(Method::BayesCorrected.as_str(), &corrected, band);
            println!();
            println!("spike correction  b {}  k {}  a {}", sig6(c.b), sig6(c.k), sig6(c.a));
            outcomes.push(Outcome {
                method: Method::BayesCorrected,
                region: corrected,
                surface: None,
            });
        }
        None => {
            println!();
            println!("the flat-prior region stays off the unit-root line; no spike correction");
        }
    }

    if let Some(dir) = &a.out_dir {
        fs::create_dir_all(dir).map_err(|e| CliError::Io(dir.clone(), e))?;
        for o in &outcomes {
            if let Some(s) = &o.surface {
                write_file(&dir.join(format!("{}_surface.csv", o.method)), &surface_to_csv(s))?;
            }
            write_file(&dir.join(format!("{}_region.json", o.method)), &to_json(&o.region.to_json()))?;
        }
        let se = standard_errors(&fit)?;
        let summary = json!({
            "n": fit.n,
            "phi_hat": fit.phi_hat,
            "se": se,
            "sigma2_hat": fit.sigma2_hat,
            "level": a.level,
            "seed": seed,
            "band": band,
            "spike_correction": correction.as_ref().map(|c: &SpikeCorrection| c),
            "areas": outcomes.iter().map(|o| (o.method.as_str(), o.region.area)).collect::<std::collections::BTreeMap<_, _>>(),
        });
        write_file(&dir.join("summary.json"), &to_json(&summary))?;
    }
    Ok(())
}

pub fn coverage(a: CoverageArgs, seed: Option<u64>) -> Result<()> {
    let (mut config, file_seed) = match &a.config {
        Some(p) => {
            let value: serde_json::Value = serde_json::from_str(&read_file(p)?).map_err(ArcdError::from)?;
            let has_seed = value.get("root_seed").is_some();
            let config: ExperimentConfig = serde_json::from_value(value).map_err(ArcdError::from)?;
            let s = has_seed.then_some(config.root_seed);
            (config, s)
        }
        None => (ExperimentConfig::default(), None),
    };
    if let Some(v) = a.phi0 {
        config.phi0 = v;
    }
    if let Some(v) = a.n {
        config.n_values = v;
    }
    if let Some(v) = a.levels {
        config.levels = v;
    }
    if let Some(v) = a.methods {
        config.methods = v;
    }
    if let Some(v) = a.replicates {
        config.replicates = Some(v);
    }
    if let Some(v) = a.n_bootstrap {
        config.n_bootstrap = v;
    }
    if let Some(v) = a.n_mc {
        config.n_mc = v;
    }
    if let Some(v) = a.m {
        config.grid.m = v;
    }
    if let Some(v) = a.cdf_m {
        config.grid.cdf_m = v;
    }
    if let Some(v) = a.window_se {
        config.grid.window_se = v;
    }
    config.root_seed = match seed.or(file_seed) {
        Some(s) => s,
        None => resolve_seed(None),
    };
    config.validate()?;
    let rows = run_coverage_study(&config)?;
    for r in rows.iter().filter(|r| r.failures > 0) {
        eprintln!("warning: n = {} {}: {} failed replicates skipped", r.n, r.method, r.failures);
    }
    emit(a.output.as_deref(), &rows_to_csv(&rows))
}

pub fn implied_prior(a: ImpliedPriorArgs, seed: u64) -> Result<()> {
    if !(a.half_width > 0.0) {
        return Err(CliError::Usage("--half-width must be positive".into()));
    }
    if a.contour_out.is_some() && a.contours.is_empty() {
        return Err(CliError::Usage("--contour-out needs --contours".into()));
    }
    let (b1, b2) = TRIANGLE_BOX;
    let clip = |c: f64, b: [f64; 2]| [(c - a.half_width).max(b[0]), (c + a.half_width).min(b[1])];
    let grid = ParamGrid2D::new(clip(a.phi0[0], b1), clip(a.phi0[1], b2), a.m)?;
    let study = run_implied_prior_study(a.phi0, a.sigma2, a.n, a.reps, &grid, seed)?;
    let surface = if a.absolute { &study.mean_abs } else { &study.mean };
    let finite: Vec<f64> = surface.values.iter().cloned().filter(|v| v.is_finite()).collect();
    let max_abs = finite.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    eprintln!(
        "{} replicates, {} nodes in the triangle, max |value| {}",
        study.replications,
        finite.len(),
        sig6(max_abs)
    );
    emit(a.output.as_deref(), &surface_to_csv(surface))?;
    if let Some(p) = &a.contour_out {
        write_file(p, &to_json(&contour_lines(surface, &a.contours)))?;
    }
    Ok(())
}
