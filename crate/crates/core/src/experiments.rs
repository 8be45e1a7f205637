//! Coverage/area studies and mean implied-prior surfaces over simulated
//! replicates.

use serde::{Deserialize, Serialize};

use crate::ar::{fit, is_stationary_p2, simulate_with_rng, ArParams};
use crate::error::{ArcdError, Result};
use crate::grid::{ConfidenceSurface, Method, ParamGrid2D, SurfaceKind};
use crate::implied_prior::ImpliedPrior;
use crate::methods::{default_window, method_surface, region_at, MethodSettings};
use crate::par::map_indexed;
use crate::rng::ArRng;

/// Largest tolerated share of failed replicates in one result row.
pub const MAX_FAILURE_SHARE: f64 = 0.01;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GridSpec {
    /// Subdivisions per axis of the region grid.
    pub m: usize,
    /// Subdivisions per axis of the simulated-cdf grid.
    pub cdf_m: usize,
    /// Half-width of the window in standard errors.
    pub window_se: f64,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            m: 100,
            cdf_m: 24,
            window_se: 5.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub phi0: [f64; 2],
    pub sigma2: f64,
    pub n_values: Vec<usize>,
    pub levels: Vec<f64>,
    pub methods: Vec<Method>,
    /// Replicates per sample size; `None` picks 2000 for `n <= 200` and 1000
    /// above.
    pub replicates: Option<usize>,
    pub n_bootstrap: usize,
    pub n_mc: usize,
    pub grid: GridSpec,
    pub root_seed: u64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            phi0: [0.0, 0.0],
            sigma2: 1.0,
            n_values: vec![50, 100, 200, 400],
            levels: vec![0.9, 0.95],
            methods: Method::CONFIDENCE.to_vec(),
            replicates: None,
            n_bootstrap: 500,
            n_mc: 500,
            grid: GridSpec::default(),
            root_seed: 1,
        }
    }
}

impl ExperimentConfig {
    pub fn replicates_for(&self, n: usize) -> usize {
        self.replicates.unwrap_or(if n <= 200 { 2000 } else { 1000 })
    }

    fn settings(&self) -> MethodSettings {
        MethodSettings {
            n_bootstrap: self.n_bootstrap,
            n_mc: self.n_mc,
            cdf_m: self.grid.cdf_m,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(ArcdError::InvalidParameter(msg));
        if !is_stationary_p2(self.phi0) {
            return bad(format!("phi0 {:?} lies outside the stationarity triangle", self.phi0));
        }
        if !(self.sigma2 > 0.0) {
            return bad(format!("sigma2 must be positive, got {}", self.sigma2));
        }
        if self.n_values.is_empty() || self.n_values.iter().any(|&n| n <= 2) {
            return bad("every sample size must exceed 2".into());
        }
        if self.levels.is_empty() || self.levels.iter().any(|l| !(*l > 0.0 && *l < 1.0)) {
            return bad("levels must lie in (0, 1)".into());
        }
        if self.methods.is_empty() {
            return bad("no methods requested".into());
        }
        if let Some(m) = self.methods.iter().find(|m| !Method::CONFIDENCE.contains(m)) {
            return bad(format!("{m} is not a confidence-region method"));
        }
        if self.replicates == Some(0) {
            return bad("replicates must be at least 1".into());
        }
        if self.methods.contains(&Method::WaldBootstrap) && self.n_bootstrap == 0 {
            return bad("n_bootstrap must be positive".into());
        }
        if self.methods.contains(&Method::CdBootstrap) && (self.n_mc == 0 || self.grid.cdf_m < 2) {
            return bad("cd_bootstrap needs n_mc >= 1 and cdf_m >= 2".into());
        }
        if self.grid.m < 2 || !(self.grid.window_se > 0.0) {
            return bad("grid needs m >= 2 and a positive window".into());
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoverageRow {
    pub n: usize,
    pub method: Method,
    pub level: f64,
    pub coverage: f64,
    pub mc_se: f64,
    pub mean_area: f64,
    /// Replicates that produced a region.
    pub replicates: usize,
    pub failures: usize,
}

/// Per method, per level: `(covered, area)` or `None` on failure.
type ReplicateOutcome = Vec<Option<Vec<Option<(bool, f64)>>>>;

fn run_replicate(config: &ExperimentConfig, params: &ArParams, n: usize, rng: &ArRng) -> ReplicateOutcome {
    let failed = || vec![None; config.methods.len()];
    let Ok(series) = simulate_with_rng(params, n, &mut rng.split(0)) else {
        return failed();
    };
    let Ok(fitted) = fit(&series, 2) else {
        return failed();
    };
    let Ok(grid) = default_window(&fitted, config.grid.window_se, config.grid.m) else {
        return failed();
    };
    let settings = config.settings();
    config
        .methods
        .iter()
        .enumerate()
        .map(|(i, &method)| {
            let surface = method_surface(&fitted, method, &grid, &settings, &rng.split(1 + i as u64)).ok()?;
            config
                .levels
                .iter()
                .map(|&level| {
                    region_at(&surface, level)
                        .ok()
                        .map(|r| (r.contains(config.phi0), r.area))
                })
                .collect::<Vec<_>>()
                .into()
        })
        .collect()
}

/// Coverage and mean area per `(n, method, level)`, rows ordered by the
/// config's lists. Replicate `r` at sample size `n` draws from stream
/// `(n, r)` of the root seed, so results do not depend on thread count or on
/// which other sample sizes are run.
pub fn run_coverage_study(config: &ExperimentConfig) -> Result<Vec<CoverageRow>> {
    config.validate()?;
    let params = ArParams::new(config.phi0.to_vec(), config.sigma2)?;
    let root = ArRng::new(config.root_seed);
    let mut rows = Vec::new();
    for &n in &config.n_values {
        let reps = config.replicates_for(n);
        let per_n = root.split(n as u64);
        let outcomes: Vec<ReplicateOutcome> =
            map_indexed(reps, |r| run_replicate(config, &params, n, &per_n.split(r as u64)));
        for (mi, &method) in config.methods.iter().enumerate() {
            for (li, &level) in config.levels.iter().enumerate() {
                let (mut ok, mut covered, mut area) = (0usize, 0usize, 0.0);
                for o in &outcomes {
                    if let Some((c, a)) = o[mi].as_ref().and_then(|levels| levels[li]) {
                        ok += 1;
                        covered += c as usize;
                        area += a;
                    }
                }
                let failures = reps - ok;
                if failures as f64 > MAX_FAILURE_SHARE * reps as f64 || ok == 0 {
                    return Err(ArcdError::TooManyFailures(format!(
                        "n={n}, {method}, level {level}: {failures} of {reps} replicates failed"
                    )));
                }
                let coverage = covered as f64 / ok as f64;
                rows.push(CoverageRow {
                    n,
                    method,
                    level,
                    coverage,
                    mc_se: (coverage * (1.0 - coverage) / ok as f64).sqrt(),
                    mean_area: area / ok as f64,
                    replicates: ok,
                    failures,
                });
            }
        }
    }
    Ok(rows)
}

/// Nodewise mean of the implied-prior residual and of its absolute value.
#[derive(Clone, Debug, PartialEq)]
pub struct ImpliedPriorStudy {
    pub mean: ConfidenceSurface,
    pub mean_abs: ConfidenceSurface,
    pub replications: usize,
}

/// Simulates `replications` series at `phi0`, evaluates the residual of the
/// log implied prior on `grid` with the simulation variance, and averages
/// nodewise in replicate order. Nodes outside the triangle hold `NaN`.
pub fn run_implied_prior_study(
    phi0: [f64; 2],
    sigma2: f64,
    n: usize,
    replications: usize,
    grid: &ParamGrid2D,
    seed: u64,
) -> Result<ImpliedPriorStudy> {
    if replications == 0 {
        return Err(ArcdError::InvalidParameter("replications must be at least 1".into()));
    }
    if grid.in_region_count() == 0 {
        return Err(ArcdError::InvalidParameter("grid does not meet the stationarity triangle".into()));
    }
    let params = ArParams::new(phi0.to_vec(), sigma2)?;
    let root = ArRng::new(seed);
    let surfaces = map_indexed(replications, |r| -> Result<Vec<f64>> {
        let series = simulate_with_rng(&params, n, &mut root.split(r as u64))?;
        let fitted = fit(&series, 2)?;
        Ok(ImpliedPrior::from_fit(&fitted, sigma2)?.residual_surface(grid)?.values)
    });
    let mut sum = vec![0.0; grid.len()];
    let mut sum_abs = vec![0.0; grid.len()];
    for s in surfaces {
        for (k, v) in s?.into_iter().enumerate() {
            sum[k] += v;
            sum_abs[k] += v.abs();
        }
    }
    let scale = 1.0 / replications as f64;
    let wrap = |values: Vec<f64>| {
        ConfidenceSurface::new(
            grid.clone(),
            values.into_iter().map(|v| v * scale).collect(),
            SurfaceKind::LogImpliedPrior,
            None,
        )
    };
    Ok(ImpliedPriorStudy {
        mean: wrap(sum),
        mean_abs: wrap(sum_abs),
        replications,
    })
}
