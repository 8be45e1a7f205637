//! Wald statistic, its chi-square and residual-bootstrap reference laws, and
//! confidence curves on a parameter grid.

use rand::Rng;

use crate::ar::{fit, fit_coefficients, omega_hat, CovMatrix, FitResult, SeriesSample};
use crate::error::{ArcdError, Result};
use crate::grid::{ConfidenceSurface, Method, ParamGrid2D, SurfaceKind};
use crate::par::map_indexed;
use crate::rng::ArRng;
use crate::special::chi2_cdf;

/// Inverse of a covariance matrix, ready for repeated quadratic forms.
#[derive(Clone, Debug)]
pub struct PrecisionForm {
    inv: Vec<f64>,
    p: usize,
    pub logdet: f64,
}

impl PrecisionForm {
    pub fn new(omega: &CovMatrix) -> Result<Self> {
        let (inv, logdet) = omega.inverse_and_logdet()?;
        let p = omega.dim();
        // row-major copy; the inverse is symmetric
        let inv = (0..p * p).map(|k| inv[(k / p, k % p)]).collect();
        Ok(Self { inv, p, logdet })
    }

    pub fn dim(&self) -> usize {
        self.p
    }

    /// `d' Omega^{-1} d`
    pub fn eval(&self, d: &[f64]) -> f64 {
        debug_assert_eq!(d.len(), self.p);
        let mut acc = 0.0;
        for i in 0..self.p {
            let mut row = 0.0;
            for j in 0..self.p {
                row += self.inv[i * self.p + j] * d[j];
            }
            acc += d[i] * row;
        }
        acc
    }
}

/// `Q = n (phi_hat - phi0)' Omega^{-1} (phi_hat - phi0)`.
pub fn wald_statistic(phi0: &[f64], phi_hat: &[f64], omega: &CovMatrix, n: usize) -> Result<f64> {
    if phi0.len() != phi_hat.len() || phi0.len() != omega.dim() {
        return Err(ArcdError::InvalidParameter("dimension mismatch in Wald statistic".into()));
    }
    let form = PrecisionForm::new(omega)?;
    let d: Vec<f64> = phi_hat.iter().zip(phi0).map(|(a, b)| a - b).collect();
    Ok(n as f64 * form.eval(&d))
}

/// Sorted residual-bootstrap replicates of the Wald statistic.
#[derive(Clone, Debug, PartialEq)]
pub struct BootstrapWald {
    pub q: Vec<f64>,
    pub redraws: usize,
}

impl BootstrapWald {
    /// Proportion of replicates strictly below `q_obs`.
    pub fn confidence(&self, q_obs: f64) -> f64 {
        self.q.partition_point(|&q| q < q_obs) as f64 / self.q.len() as f64
    }
}

fn centred_residuals(fit: &FitResult) -> Vec<f64> {
    let mean = fit.residuals.iter().sum::<f64>() / fit.residuals.len() as f64;
    fit.residuals.iter().map(|r| r - mean).collect()
}

/// One bootstrap replicate: resample residuals, regenerate from `phi_obs`,
/// refit, and standardize with the covariance at the refit estimate.
/// Returns the statistic and the number of redraws it needed.
fn bootstrap_replicate(
    phi_obs: &[f64],
    residuals: &[f64],
    n: usize,
    rng: &mut ArRng,
    max_redraws: usize,
) -> Result<(f64, usize)> {
    let p = phi_obs.len();
    let mut y = Vec::with_capacity(n);
    let mut redraws = 0;
    loop {
        y.clear();
        for t in 0..n {
            let mut v = residuals[rng.gen_range(0..residuals.len())];
            for (k, &c) in phi_obs.iter().enumerate() {
                if t > k {
                    v += c * y[t - 1 - k];
                }
            }
            y.push(v);
        }
        let q = fit_coefficients(&y, p).and_then(|phi_k| {
            let omega_k = omega_hat(&phi_k)?;
            wald_statistic(phi_obs, &phi_k, &omega_k, n)
        });
        match q {
            Ok(q) if q.is_finite() => return Ok((q, redraws)),
            _ => {
                redraws += 1;
                if redraws > max_redraws {
                    return Err(ArcdError::TooManyFailures(format!(
                        "bootstrap replicate failed {redraws} times"
                    )));
                }
            }
        }
    }
}

/// Bootstrap law of `Q` around an existing fit.
pub fn bootstrap_wald_from_fit(fit: &FitResult, n_boot: usize, rng: &ArRng) -> Result<BootstrapWald> {
    if n_boot == 0 {
        return Err(ArcdError::InvalidParameter("bootstrap needs at least one replicate".into()));
    }
    let residuals = centred_residuals(fit);
    let results = map_indexed(n_boot, |k| {
        let mut stream = rng.split(k as u64);
        bootstrap_replicate(&fit.phi_hat, &residuals, fit.n, &mut stream, n_boot)
    });
    let mut q = Vec::with_capacity(n_boot);
    let mut redraws = 0;
    for r in results {
        let (value, extra) = r?;
        q.push(value);
        redraws += extra;
    }
    if redraws > n_boot {
        return Err(ArcdError::TooManyFailures(format!(
            "{redraws} bootstrap redraws for {n_boot} replicates"
        )));
    }
    q.sort_by(f64::total_cmp);
    Ok(BootstrapWald { q, redraws })
}

/// Residual-bootstrap distribution of `Q` for an AR(`p`) fit of `series`,
/// sorted ascending.
pub fn bootstrap_wald_distribution(series: &SeriesSample, p: usize, n_boot: usize, seed: u64) -> Result<Vec<f64>> {
    if n_boot < 100 {
        return Err(ArcdError::InvalidParameter(format!(
            "at least 100 bootstrap replicates are required, got {n_boot}"
        )));
    }
    let fitted = fit(series, p)?;
    Ok(bootstrap_wald_from_fit(&fitted, n_boot, &ArRng::new(seed))?.q)
}

/// Wald confidence curve over `grid` from an AR(2) fit. Nodes outside the
/// stationarity triangle carry the value 1.
pub fn confidence_curve_from_fit(
    fit: &FitResult,
    grid: &ParamGrid2D,
    method: Method,
    bootstrap: Option<&BootstrapWald>,
) -> Result<ConfidenceSurface> {
    if fit.order() != 2 {
        return Err(ArcdError::InvalidParameter("confidence curves are two-dimensional".into()));
    }
    let omega = omega_hat(&fit.phi_hat)?;
    let form = PrecisionForm::new(&omega)?;
    let n = fit.n as f64;
    let q_at = |node: [f64; 2]| n * form.eval(&[fit.phi_hat[0] - node[0], fit.phi_hat[1] - node[1]]);
    let values: Vec<f64> = match method {
        Method::WaldAsymptotic => grid
            .nodes()
            .map(|(node, inside)| if inside { chi2_cdf(q_at(node), 2) } else { 1.0 })
            .collect(),
        Method::WaldBootstrap => {
            let boot = bootstrap.ok_or_else(|| {
                ArcdError::InvalidParameter("wald_bootstrap needs a bootstrap distribution".into())
            })?;
            grid.nodes()
                .map(|(node, inside)| if inside { boot.confidence(q_at(node)) } else { 1.0 })
                .collect()
        }
        other => {
            return Err(ArcdError::InvalidParameter(format!(
                "{other} is not a Wald confidence-curve method"
            )))
        }
    };
    Ok(ConfidenceSurface::new(grid.clone(), values, SurfaceKind::ConfidenceCurve, Some(method)))
}

/// Wald confidence curve for an observed AR(2) series.
pub fn confidence_curve(
    series: &SeriesSample,
    grid: &ParamGrid2D,
    method: Method,
    n_boot: usize,
    seed: u64,
) -> Result<ConfidenceSurface> {
    let fitted = fit(series, 2)?;
    let boot = match method {
        Method::WaldBootstrap => Some(bootstrap_wald_from_fit(&fitted, n_boot, &ArRng::new(seed))?),
        _ => None,
    };
    confidence_curve_from_fit(&fitted, grid, method, boot.as_ref())
}
