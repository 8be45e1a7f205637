//! One entry point per region construction, shared by the studies, the CLI
//! and the browser demo.

use serde::{Deserialize, Serialize};

use crate::ar::{omega_p2, FitResult};
use crate::cd::{cd_asymptotic_surface, cd_bootstrap_surface, estimate_cdf_grid, fit_probit_quadratic, DeltaRule};
use crate::error::{ArcdError, Result};
use crate::grid::{ConfidenceSurface, Method, ParamGrid2D, SurfaceKind};
use crate::region::{region_from_curve, region_from_density, RegionResult};
use crate::rng::ArRng;
use crate::wald::{bootstrap_wald_from_fit, confidence_curve_from_fit};

/// Floor on the diagonal of `Omega` when sizing windows, so that estimates
/// next to `phi_2 = +-1` still get a window of useful width.
pub const OMEGA_DIAG_FLOOR: f64 = 0.05;

/// Times the cdf grid is doubled when the probit regression lacks usable nodes.
pub const CDF_REFINEMENTS: u64 = 2;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MethodSettings {
    pub n_bootstrap: usize,
    pub n_mc: usize,
    /// Subdivisions of the coarse grid carrying the simulated cdf.
    pub cdf_m: usize,
}

impl Default for MethodSettings {
    fn default() -> Self {
        Self {
            n_bootstrap: 500,
            n_mc: 500,
            cdf_m: 24,
        }
    }
}

/// `sqrt(Omega_jj / n)` with `Omega` at the estimate.
pub fn standard_errors(fit: &FitResult) -> Result<[f64; 2]> {
    if fit.order() != 2 {
        return Err(ArcdError::InvalidParameter("standard errors are reported for AR(2)".into()));
    }
    let o = omega_p2([fit.phi_hat[0], fit.phi_hat[1]]).omega;
    let n = fit.n as f64;
    Ok([(o[(0, 0)] / n).sqrt(), (o[(1, 1)] / n).sqrt()])
}

/// Window of `window_se` floored standard errors around the estimate,
/// clipped to the triangle's bounding box.
pub fn default_window(fit: &FitResult, window_se: f64, m: usize) -> Result<ParamGrid2D> {
    if !(window_se > 0.0) {
        return Err(ArcdError::InvalidParameter(format!("window width must be positive, got {window_se}")));
    }
    let o = omega_p2([fit.phi_hat[0], fit.phi_hat[1]]).omega;
    let n = fit.n as f64;
    let se = [
        (o[(0, 0)].max(OMEGA_DIAG_FLOOR) / n).sqrt(),
        (o[(1, 1)].max(OMEGA_DIAG_FLOOR) / n).sqrt(),
    ];
    ParamGrid2D::around([fit.phi_hat[0], fit.phi_hat[1]], se, window_se, m)
}

/// Confidence curve (Wald methods) or normalized confidence density (cd
/// methods) on `grid`.
pub fn method_surface(
    fit: &FitResult,
    method: Method,
    grid: &ParamGrid2D,
    settings: &MethodSettings,
    rng: &ArRng,
) -> Result<ConfidenceSurface> {
    match method {
        Method::WaldAsymptotic => confidence_curve_from_fit(fit, grid, method, None),
        Method::WaldBootstrap => {
            let boot = bootstrap_wald_from_fit(fit, settings.n_bootstrap, rng)?;
            confidence_curve_from_fit(fit, grid, method, Some(&boot))
        }
        Method::CdAsymptotic => cd_asymptotic_surface(fit, grid),
        Method::CdBootstrap => {
            let obs = [fit.phi_hat[0], fit.phi_hat[1]];
            let mut cdf_m = settings.cdf_m;
            let mut attempt = 0;
            let smoother = loop {
                let coarse = ParamGrid2D::new(
                    [grid.phi1_min, grid.phi1_max],
                    [grid.phi2_min, grid.phi2_max],
                    cdf_m,
                )?;
                let estimate = estimate_cdf_grid(&coarse, fit.n, 1.0, settings.n_mc, obs, &rng.split(attempt))?;
                match fit_probit_quadratic(&estimate, DeltaRule::Printed) {
                    // too few usable nodes, typically next to the triangle's
                    // edge: refine the cdf grid
                    Err(ArcdError::UnderIdentified { .. }) if attempt < CDF_REFINEMENTS => {
                        attempt += 1;
                        cdf_m *= 2;
                    }
                    other => break other?,
                }
            };
            cd_bootstrap_surface(&smoother, grid)
        }
        other => Err(ArcdError::InvalidParameter(format!("{other} is not a confidence-region method"))),
    }
}

/// Level set of a confidence curve, or highest-density set of a density.
pub fn region_at(surface: &ConfidenceSurface, level: f64) -> Result<RegionResult> {
    match surface.kind {
        SurfaceKind::ConfidenceCurve => region_from_curve(surface, level),
        SurfaceKind::Density | SurfaceKind::Posterior => region_from_density(surface, level),
        SurfaceKind::LogImpliedPrior => {
            Err(ArcdError::InvalidParameter("implied prior surfaces do not define regions".into()))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ar::{fit, simulate, ArParams};

    #[test]
    fn every_method_covers_its_own_estimate() {
        let s = simulate(&ArParams::new(vec![0.3, 0.1], 1.0).unwrap(), 100, 21).unwrap();
        let f = fit(&s, 2).unwrap();
        let g = default_window(&f, 5.0, 60).unwrap();
        let settings = MethodSettings {
            n_bootstrap: 200,
            n_mc: 200,
            cdf_m: 14,
        };
        for method in Method::CONFIDENCE {
            let surface = method_surface(&f, method, &g, &settings, &ArRng::new(3)).unwrap();
            let r = region_at(&surface, 0.95).unwrap();
            assert!(r.area > 0.0, "{method}");
            if method != Method::CdBootstrap {
                assert!(r.contains([f.phi_hat[0], f.phi_hat[1]]), "{method}");
            }
        }
        assert!(method_surface(&f, Method::BayesFlat, &g, &settings, &ArRng::new(3)).is_err());
    }

    #[test]
    fn standard_errors_from_omega() {
        let s = simulate(&ArParams::new(vec![0.3, 0.1], 1.0).unwrap(), 100, 2).unwrap();
        let f = fit(&s, 2).unwrap();
        let se = standard_errors(&f).unwrap();
        let b = f.phi_hat[1];
        assert!((se[0] - ((1.0 - b * b) / 100.0).sqrt()).abs() < 1e-12);
        assert_eq!(se[0], se[1]);
    }
}
