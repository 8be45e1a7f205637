//! Flat-prior posterior over the stationarity triangle, credibility regions,
//! and the boundary-spike correction.

use serde::{Deserialize, Serialize};

use crate::ar::{fit, FitResult, SeriesSample};
use crate::error::{ArcdError, Result};
use crate::grid::{ConfidenceSurface, Method, ParamGrid2D, SurfaceKind};
use crate::region::{region_with_mass, RegionResult};

/// How the innovation variance enters the likelihood of the coefficients.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variance {
    /// Maximized out at each node: `L(phi) ~ A(phi)^{-n/2}`.
    Profile,
    Fixed(f64),
}

/// Log-likelihood of the AR(2) fit at every node of `grid`, up to a constant.
fn log_likelihood_grid(fit: &FitResult, grid: &ParamGrid2D, variance: Variance) -> Result<Vec<f64>> {
    let n = fit.n as f64;
    match variance {
        Variance::Profile => Ok(grid.nodes().map(|(node, _)| -0.5 * n * fit.sum_sq(&node).ln()).collect()),
        Variance::Fixed(sigma2) => {
            if !(sigma2 > 0.0 && sigma2.is_finite()) {
                return Err(ArcdError::InvalidParameter(format!("sigma2 must be positive, got {sigma2}")));
            }
            Ok(grid.nodes().map(|(node, _)| -fit.sum_sq(&node) / (2.0 * sigma2)).collect())
        }
    }
}

/// Posterior under a flat prior on the triangle: `exp(loglik - max)` on
/// in-region nodes, zero elsewhere, normalized by its Riemann sum.
pub fn flat_prior_posterior_from_fit(fit: &FitResult, grid: &ParamGrid2D, variance: Variance) -> Result<ConfidenceSurface> {
    if fit.order() != 2 {
        return Err(ArcdError::InvalidParameter("posterior surfaces are two-dimensional".into()));
    }
    if grid.in_region_count() == 0 {
        return Err(ArcdError::InvalidParameter("grid does not meet the stationarity triangle".into()));
    }
    let ll = log_likelihood_grid(fit, grid, variance)?;
    let max = (0..grid.len())
        .filter(|&k| grid.in_region(k))
        .map(|k| ll[k])
        .fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return Err(ArcdError::Underflow(
            "likelihood is not finite on the grid; use a tighter window around the estimate".into(),
        ));
    }
    let values = (0..grid.len())
        .map(|k| if grid.in_region(k) { (ll[k] - max).exp() } else { 0.0 })
        .collect();
    let mut s = ConfidenceSurface::new(grid.clone(), values, SurfaceKind::Posterior, Some(Method::BayesFlat));
    s.normalize().map_err(|_| {
        ArcdError::Underflow("posterior vanished on the grid; use a tighter window around the estimate".into())
    })?;
    Ok(s)
}

/// Flat-prior posterior for an observed series, variance profiled out.
pub fn flat_prior_posterior(series: &SeriesSample, grid: &ParamGrid2D) -> Result<ConfidenceSurface> {
    flat_prior_posterior_from_fit(&fit(series, 2)?, grid, Variance::Profile)
}

/// Likelihood over the whole window, the non-stationary side included,
/// scaled to unit Riemann sum over all window cells.
pub fn likelihood_extension(fit: &FitResult, grid: &ParamGrid2D, variance: Variance) -> Result<ConfidenceSurface> {
    let ll = log_likelihood_grid(fit, grid, variance)?;
    let max = ll.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let values: Vec<f64> = ll.iter().map(|v| (v - max).exp()).collect();
    Ok(ConfidenceSurface::new(grid.clone(), values, SurfaceKind::Posterior, Some(Method::BayesFlat)))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpikeCorrection {
    /// Boundary-band mass of the reference confidence density.
    pub b: f64,
    /// Boundary-band mass of the likelihood extension.
    pub k: f64,
    /// `(1 - b) / (1 - k)`
    pub a: f64,
    pub band: f64,
}

impl SpikeCorrection {
    pub fn new(b: f64, k: f64, band: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&b) || !(0.0..1.0).contains(&k) {
            return Err(ArcdError::DegenerateSpike { b, k });
        }
        Ok(Self {
            b,
            k,
            a: (1.0 - b) / (1.0 - k),
            band,
        })
    }

    pub fn identity() -> Self {
        Self {
            b: 0.0,
            k: 0.0,
            a: 1.0,
            band: 0.0,
        }
    }
}

/// Share of the window mass within `band` of, or beyond, `phi_1 + phi_2 = 1`.
fn band_share(surface: &ConfidenceSurface, band: f64) -> Result<f64> {
    let (mut total, mut near) = (0.0, 0.0);
    for (k, ([a, b], _)) in surface.grid.nodes().enumerate() {
        let v = surface.values[k].max(0.0);
        total += v;
        if a + b >= 1.0 - band {
            near += v;
        }
    }
    if !(total > 0.0) || !total.is_finite() {
        return Err(ArcdError::Underflow("surface carries no mass on the window".into()));
    }
    Ok(near / total)
}

/// `k` from the window-normalized likelihood extension, `b` from the
/// un-truncated reference confidence density, both on one grid.
pub fn spike_correction(
    likelihood_ext: &ConfidenceSurface,
    reference_cd: &ConfidenceSurface,
    band: f64,
) -> Result<SpikeCorrection> {
    if !likelihood_ext.grid.same_geometry(&reference_cd.grid) {
        return Err(ArcdError::InvalidParameter("surfaces must share one grid".into()));
    }
    if !(band >= 0.0) {
        return Err(ArcdError::InvalidParameter(format!("band must be nonnegative, got {band}")));
    }
    let k = band_share(likelihood_ext, band)?;
    let b = band_share(reference_cd, band)?;
    SpikeCorrection::new(b, k, band)
}

/// `{h > K / a}` where the threshold leaves posterior mass `(1 - alpha) / a`.
pub fn corrected_region(posterior: &ConfidenceSurface, correction: &SpikeCorrection, level: f64) -> Result<RegionResult> {
    if posterior.kind != SurfaceKind::Posterior {
        return Err(ArcdError::InvalidParameter("corrected_region needs a posterior surface".into()));
    }
    if !(level > 0.0 && level < 1.0) {
        return Err(ArcdError::InvalidParameter(format!("level must lie in (0, 1), got {level}")));
    }
    if !(correction.a > 0.0) {
        return Err(ArcdError::DegenerateSpike {
            b: correction.b,
            k: correction.k,
        });
    }
    let target = level / correction.a;
    let available = posterior.positive_mass();
    if target > available {
        return Err(ArcdError::NoSolution { level: target, available });
    }
    region_with_mass(posterior, target, level)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ar::{simulate, ArParams};
    use crate::grid::TRIANGLE_AREA;
    use crate::region::region_from_density;

    fn truck_like(seed: u64) -> FitResult {
        let s = simulate(&ArParams::new(vec![0.45, 0.25], 1.0).unwrap(), 45, seed).unwrap();
        fit(&s, 2).unwrap()
    }

    #[test]
    fn flat_likelihood_gives_uniform_posterior() {
        // all-zero lag sums except y'y: the likelihood does not depend on phi
        let mut f = fit(&SeriesSample::new(vec![1.0, 0.5, -0.2, 0.3, 0.1, -0.4]), 2).unwrap();
        f.xtx.fill(0.0);
        f.xty.fill(0.0);
        f.sum_y2 = 1.0;
        let g = ParamGrid2D::full_triangle(60).unwrap();
        let post = flat_prior_posterior_from_fit(&f, &g, Variance::Fixed(1.0)).unwrap();
        let inside = g.in_region_count() as f64;
        for k in 0..g.len() {
            if g.in_region(k) {
                assert!((post.values[k] * g.cell_area() - 1.0 / inside).abs() < 1e-12);
            } else {
                assert_eq!(post.values[k], 0.0);
            }
        }
        // node-count area against the true triangle area
        assert!((inside * g.cell_area() - TRIANGLE_AREA).abs() < 0.15);
    }

    #[test]
    fn posterior_normalized_with_mode_at_estimate() {
        let f = truck_like(4);
        let g = ParamGrid2D::new(
            [f.phi_hat[0] - 0.7, f.phi_hat[0] + 0.7],
            [f.phi_hat[1] - 0.7, f.phi_hat[1] + 0.7],
            100,
        )
        .unwrap();
        let post = flat_prior_posterior_from_fit(&f, &g, Variance::Profile).unwrap();
        assert!((post.positive_mass() - 1.0).abs() < 1e-6);
        let mode = post.argmax().unwrap();
        if crate::ar::is_stationary_p2([f.phi_hat[0], f.phi_hat[1]]) {
            assert_eq!(Some(mode), g.nearest_node([f.phi_hat[0], f.phi_hat[1]]));
        }
        let r = region_from_density(&post, 0.95).unwrap();
        assert!(r.is_member(mode));
    }

    #[test]
    fn underflow_is_reported() {
        let mut f = truck_like(2);
        // lag sums overflowing double precision
        f.sum_y2 = f64::INFINITY;
        let g = ParamGrid2D::full_triangle(10).unwrap();
        let err = flat_prior_posterior_from_fit(&f, &g, Variance::Fixed(1.0)).unwrap_err();
        assert!(matches!(err, ArcdError::Underflow(_)));
    }

    #[test]
    fn correction_factor_arithmetic() {
        let c = SpikeCorrection::new(0.1, 0.2, 0.01).unwrap();
        assert!((c.a - 1.125).abs() < 1e-15);
        assert_eq!(SpikeCorrection::new(0.3, 0.3, 0.0).unwrap().a, 1.0);
        assert!(matches!(SpikeCorrection::new(1.0, 0.1, 0.0), Err(ArcdError::DegenerateSpike { .. })));
    }

    #[test]
    fn corrected_regions_shrink_with_a() {
        let f = truck_like(9);
        let g = ParamGrid2D::around([f.phi_hat[0], f.phi_hat[1]], [0.15, 0.15], 5.0, 120).unwrap();
        let post = flat_prior_posterior_from_fit(&f, &g, Variance::Profile).unwrap();
        let plain = region_from_density(&post, 0.95).unwrap();
        let same = corrected_region(&post, &SpikeCorrection::identity(), 0.95).unwrap();
        assert_eq!(plain.member_mask(), same.member_mask());
        let mut prev = same.area;
        for a in [1.05, 1.1] {
            let c = SpikeCorrection { b: 0.0, k: 1.0 - 1.0 / a, a, band: 0.0 };
            let r = corrected_region(&post, &c, 0.95).unwrap();
            assert!(r.is_subset_of(&plain));
            assert!(r.area < prev);
            prev = r.area;
        }
        let c = SpikeCorrection { b: 0.5, k: 0.0, a: 0.5, band: 0.0 };
        assert!(matches!(corrected_region(&post, &c, 0.95), Err(ArcdError::NoSolution { .. })));
    }

    #[test]
    fn spike_masses_vanish_far_from_the_line() {
        let s = simulate(&ArParams::new(vec![0.0, 0.0], 1.0).unwrap(), 200, 1).unwrap();
        let f = fit(&s, 2).unwrap();
        let g = ParamGrid2D::around([f.phi_hat[0], f.phi_hat[1]], [0.07, 0.07], 5.0, 80).unwrap();
        let ext = likelihood_extension(&f, &g, Variance::Profile).unwrap();
        let cd = crate::cd::cd_asymptotic_surface_raw(&f, &g, false).unwrap();
        let c = spike_correction(&ext, &cd, g.cell_diagonal()).unwrap();
        assert!(c.b < 1e-12 && c.k < 1e-12);
        assert!((c.a - 1.0).abs() < 1e-12);
    }
}
