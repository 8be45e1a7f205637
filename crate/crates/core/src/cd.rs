//! Confidence densities for `(phi_1, phi_2)`.
//!
//! Two constructions:
//!
//! * the asymptotic density, the Gaussian `N(phi_hat_obs, Omega_hat / n)`
//!   read as a function of the parameter;
//! * the finite-sample density. The joint confidence distribution
//!   `C(phi) = P_phi(phi_hat_1 > phi_hat_obs_1, phi_hat_2 > phi_hat_obs_2)` is
//!   estimated by simulation on a grid, `Phi^{-1}(C)` is smoothed by a
//!   quadratic least-squares fit, and the density is the analytic mixed
//!   derivative of `Phi(z)` for the fitted quadratic `z`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::ar::{fit_coefficients, omega_hat, simulate_into, FitResult};
use crate::error::{ArcdError, Result};
use crate::grid::{ConfidenceSurface, Method, ParamGrid2D, SurfaceKind};
use crate::par::map_indexed;
use crate::rng::ArRng;
use crate::special::{norm_inv, norm_pdf};
use crate::wald::PrecisionForm;

/// Default Monte Carlo replicates per grid node.
pub const DEFAULT_N_MC: usize = 1000;

/// Lower clamp on the truncation bound.
pub const DELTA_FLOOR: f64 = 1e-6;

/// Log of the asymptotic confidence density at `phi`.
pub fn log_cd_asymptotic(phi: &[f64], phi_hat_obs: &[f64], form: &PrecisionForm, n: usize) -> f64 {
    let p = form.dim() as f64;
    let n = n as f64;
    let d: Vec<f64> = phi_hat_obs.iter().zip(phi).map(|(a, b)| a - b).collect();
    0.5 * p * n.ln() - 0.5 * p * (2.0 * std::f64::consts::PI).ln() - 0.5 * form.logdet - 0.5 * n * form.eval(&d)
}

/// `n^{p/2} (2 pi)^{-p/2} |Omega|^{-1/2} exp{-(n/2) d' Omega^{-1} d}` with
/// `d = phi_hat_obs - phi`.
pub fn cd_asymptotic_density(
    phi: &[f64],
    phi_hat_obs: &[f64],
    omega_hat: &crate::ar::CovMatrix,
    n: usize,
) -> Result<f64> {
    if phi.len() != phi_hat_obs.len() || phi.len() != omega_hat.dim() {
        return Err(ArcdError::InvalidParameter("dimension mismatch in confidence density".into()));
    }
    let form = PrecisionForm::new(omega_hat)?;
    Ok(log_cd_asymptotic(phi, phi_hat_obs, &form, n).exp())
}

/// Asymptotic confidence density on `grid`, zero outside the triangle when
/// `truncate` is set. Not normalized.
pub fn cd_asymptotic_surface_raw(fit: &FitResult, grid: &ParamGrid2D, truncate: bool) -> Result<ConfidenceSurface> {
    let omega = omega_hat(&fit.phi_hat)?;
    let form = PrecisionForm::new(&omega)?;
    let values = grid
        .nodes()
        .map(|(node, inside)| {
            if truncate && !inside {
                0.0
            } else {
                log_cd_asymptotic(&node, &fit.phi_hat, &form, fit.n).exp()
            }
        })
        .collect();
    Ok(ConfidenceSurface::new(
        grid.clone(),
        values,
        SurfaceKind::Density,
        Some(Method::CdAsymptotic),
    ))
}

/// Asymptotic confidence density restricted to the triangle and normalized.
pub fn cd_asymptotic_surface(fit: &FitResult, grid: &ParamGrid2D) -> Result<ConfidenceSurface> {
    let mut s = cd_asymptotic_surface_raw(fit, grid, true)?;
    s.normalize()?;
    Ok(s)
}

/// Simulated joint confidence distribution on a grid.
#[derive(Clone, Debug, PartialEq)]
pub struct CdfGridEstimate {
    pub grid: ParamGrid2D,
    /// Proportions with denominator `n_mc`; zero at out-of-region nodes.
    pub cdf: Vec<f64>,
    pub n_mc: usize,
    pub n: usize,
    pub phi_hat_obs: [f64; 2],
    pub redraws: usize,
}

/// Estimates `C(node) = P_node(phi_hat_1 > obs_1, phi_hat_2 > obs_2)` at each
/// in-region node from `n_mc` series of length `n` simulated with the node as
/// the true coefficients.
pub fn estimate_cdf_grid(
    grid: &ParamGrid2D,
    n: usize,
    sigma2: f64,
    n_mc: usize,
    phi_hat_obs: [f64; 2],
    rng: &ArRng,
) -> Result<CdfGridEstimate> {
    if n_mc < 1 {
        return Err(ArcdError::InvalidParameter("n_mc must be positive".into()));
    }
    if !(sigma2 > 0.0) {
        return Err(ArcdError::InvalidParameter(format!("sigma2 must be positive, got {sigma2}")));
    }
    if n <= 2 {
        return Err(ArcdError::InvalidParameter(format!("series length {n} too short for AR(2)")));
    }
    let sigma = sigma2.sqrt();
    let per_node = map_indexed(grid.len(), |k| -> Result<(f64, usize)> {
        if !grid.in_region(k) {
            return Ok((0.0, 0));
        }
        let phi = grid.node(k);
        let mut stream = rng.split(k as u64);
        let mut y = Vec::with_capacity(n);
        let (mut hits, mut done, mut redraws) = (0usize, 0usize, 0usize);
        while done < n_mc {
            simulate_into(&phi, sigma, &mut stream, &mut y, n);
            match fit_coefficients(&y, 2) {
                Ok(est) => {
                    if est[0] > phi_hat_obs[0] && est[1] > phi_hat_obs[1] {
                        hits += 1;
                    }
                    done += 1;
                }
                Err(_) => {
                    redraws += 1;
                    if redraws > n_mc {
                        return Err(ArcdError::TooManyFailures(format!(
                            "cdf simulation at node {phi:?} failed {redraws} times"
                        )));
                    }
                }
            }
        }
        Ok((hits as f64 / n_mc as f64, redraws))
    });
    let mut cdf = Vec::with_capacity(grid.len());
    let mut redraws = 0;
    for r in per_node {
        let (c, extra) = r?;
        cdf.push(c);
        redraws += extra;
    }
    Ok(CdfGridEstimate {
        grid: grid.clone(),
        cdf,
        n_mc,
        n,
        phi_hat_obs,
        redraws,
    })
}

/// Truncation bound for the probit regression.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum DeltaRule {
    /// `min{0.1, exp(6.04 - 2.64 log n + 4.39 phi_1 + 9.92 phi_2)}` at each
    /// node, clamped below at [`DELTA_FLOOR`].
    Printed,
    Fixed(f64),
}

impl DeltaRule {
    pub fn delta(&self, n: usize, phi: [f64; 2]) -> f64 {
        match *self {
            DeltaRule::Printed => {
                let e = (6.04 - 2.64 * (n as f64).ln() + 4.39 * phi[0] + 9.92 * phi[1]).exp();
                e.min(0.1).max(DELTA_FLOOR)
            }
            DeltaRule::Fixed(d) => d,
        }
    }
}

/// `Phi^{-1}(C) ~ c0 + c1 phi_1 + c2 phi_2 + c11 phi_1^2 + c22 phi_2^2 + c12 phi_1 phi_2`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProbitQuadFit {
    pub c0: f64,
    pub c1: f64,
    pub c2: f64,
    pub c11: f64,
    pub c22: f64,
    pub c12: f64,
    pub n_used: usize,
    /// Truncation bound evaluated at the observed estimate.
    pub delta: f64,
}

impl ProbitQuadFit {
    pub fn z(&self, phi: [f64; 2]) -> f64 {
        let [a, b] = phi;
        self.c0 + self.c1 * a + self.c2 * b + self.c11 * a * a + self.c22 * b * b + self.c12 * a * b
    }
}

fn regressors(phi: [f64; 2]) -> [f64; 6] {
    let [a, b] = phi;
    [1.0, a, b, a * a, b * b, a * b]
}

/// Least-squares probit-quadratic smoother over the usable nodes: in-region,
/// strictly inside `(0, 1)` and inside `(delta, 1 - delta)`.
pub fn fit_probit_quadratic(estimate: &CdfGridEstimate, rule: DeltaRule) -> Result<ProbitQuadFit> {
    let grid = &estimate.grid;
    let rows: Vec<([f64; 6], f64)> = (0..grid.len())
        .filter(|&k| grid.in_region(k))
        .filter_map(|k| {
            let c = estimate.cdf[k];
            let node = grid.node(k);
            let delta = rule.delta(estimate.n, node);
            (c > 0.0 && c < 1.0 && c > delta && c < 1.0 - delta).then(|| (regressors(node), norm_inv(c)))
        })
        .collect();
    fit_probit_rows(&rows, rule.delta(estimate.n, estimate.phi_hat_obs))
}

pub(crate) fn fit_probit_rows(rows: &[([f64; 6], f64)], delta: f64) -> Result<ProbitQuadFit> {
    const REQUIRED: usize = 6;
    if rows.len() < REQUIRED {
        return Err(ArcdError::UnderIdentified {
            used: rows.len(),
            required: REQUIRED,
        });
    }
    let x = DMatrix::from_fn(rows.len(), 6, |i, j| rows[i].0[j]);
    let y = DVector::from_iterator(rows.len(), rows.iter().map(|r| r.1));
    let svd = x.svd(true, true);
    let rank = svd.rank(1e-12 * svd.singular_values.max());
    if rank < REQUIRED {
        return Err(ArcdError::UnderIdentified {
            used: rank,
            required: REQUIRED,
        });
    }
    let c = svd
        .solve(&y, 0.0)
        .map_err(|e| ArcdError::Singular(format!("probit regression: {e}")))?;
    if c.iter().any(|v| !v.is_finite()) {
        return Err(ArcdError::Singular("probit regression produced non-finite coefficients".into()));
    }
    Ok(ProbitQuadFit {
        c0: c[0],
        c1: c[1],
        c2: c[2],
        c11: c[3],
        c22: c[4],
        c12: c[5],
        n_used: rows.len(),
        delta,
    })
}

/// Mixed derivative `d^2 Phi(z) / d phi_1 d phi_2` of the fitted smoother:
/// `{c12 - (c1 + 2 c11 phi_1 + c12 phi_2)(c2 + 2 c22 phi_2 + c12 phi_1) z} phi(z)`.
/// May be negative.
pub fn cd_bootstrap_density(fit: &ProbitQuadFit, phi: [f64; 2]) -> f64 {
    let [a, b] = phi;
    let z = fit.z(phi);
    let dz1 = fit.c1 + 2.0 * fit.c11 * a + fit.c12 * b;
    let dz2 = fit.c2 + 2.0 * fit.c22 * b + fit.c12 * a;
    (fit.c12 - dz1 * dz2 * z) * norm_pdf(z)
}

/// Finite-sample confidence density on `grid`, zero outside the triangle,
/// normalized over the positive part. Negative raw values are kept.
pub fn cd_bootstrap_surface(fit: &ProbitQuadFit, grid: &ParamGrid2D) -> Result<ConfidenceSurface> {
    let values = grid
        .nodes()
        .map(|(node, inside)| if inside { cd_bootstrap_density(fit, node) } else { 0.0 })
        .collect();
    let mut s = ConfidenceSurface::new(grid.clone(), values, SurfaceKind::Density, Some(Method::CdBootstrap));
    s.normalize()?;
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ar::{fit, simulate, ArParams, CovMatrix};
    use crate::region::region_from_density;
    use crate::special::norm_cdf;
    use rand::Rng;

    #[test]
    fn asymptotic_density_mode_and_value() {
        let omega = CovMatrix {
            omega: DMatrix::identity(2, 2),
            near_singular: false,
        };
        let mode = cd_asymptotic_density(&[0.2, 0.1], &[0.2, 0.1], &omega, 100).unwrap();
        assert!((mode - 100.0 / (2.0 * std::f64::consts::PI)).abs() < 1e-10);
        let v = cd_asymptotic_density(&[0.1, 0.0], &[0.2, 0.1], &omega, 100).unwrap();
        let expected = 100.0 / (2.0 * std::f64::consts::PI) * (-1.0f64).exp();
        assert!((v - expected).abs() < 1e-10);
        assert!((v - 5.855).abs() < 1e-3);
        let o = crate::ar::omega_p2([0.4, 0.2]);
        let mode = cd_asymptotic_density(&[0.4, 0.2], &[0.4, 0.2], &o, 50).unwrap();
        let det: f64 = 0.96 * 0.96 - 0.48 * 0.48;
        assert!((mode - 50.0 / (2.0 * std::f64::consts::PI * det.sqrt())).abs() < 1e-9);
    }

    #[test]
    fn asymptotic_density_integrates_to_one() {
        let s = simulate(&ArParams::new(vec![0.1, 0.0], 1.0).unwrap(), 200, 1).unwrap();
        let f = fit(&s, 2).unwrap();
        let g = ParamGrid2D::new(
            [f.phi_hat[0] - 0.6, f.phi_hat[0] + 0.6],
            [f.phi_hat[1] - 0.6, f.phi_hat[1] + 0.6],
            200,
        )
        .unwrap();
        let raw = cd_asymptotic_surface_raw(&f, &g, false).unwrap();
        let total: f64 = raw.values.iter().sum::<f64>() * g.cell_area();
        assert!((total - 1.0).abs() < 1e-3, "{total}");
        let norm = cd_asymptotic_surface(&f, &g).unwrap();
        assert!((norm.positive_mass() - 1.0).abs() < 1e-6);
        let r = region_from_density(&norm, 0.95).unwrap();
        assert_eq!(r.components(), 1);
    }

    #[test]
    fn printed_delta_rule() {
        let d = DeltaRule::Printed.delta(100, [0.0, 0.0]);
        let expected = (6.04 - 2.64 * 100f64.ln()).exp();
        assert!((d - expected).abs() < 1e-15);
        assert!((d - 0.00220).abs() < 1e-5);
        assert_eq!(DeltaRule::Printed.delta(50, [0.4, 0.2]), 0.1);
        assert_eq!(DeltaRule::Printed.delta(100_000, [-1.0, -1.0]), DELTA_FLOOR);
    }

    fn synthetic(truth: &ProbitQuadFit, cdf_of: impl Fn(f64) -> f64) -> CdfGridEstimate {
        let grid = ParamGrid2D::new([-0.6, 0.6], [-0.6, 0.6], 30).unwrap();
        let cdf = grid.nodes().map(|(node, _)| cdf_of(truth.z(node))).collect();
        CdfGridEstimate {
            grid,
            cdf,
            n_mc: 1,
            n: 100,
            phi_hat_obs: [0.0, 0.0],
            redraws: 0,
        }
    }

    fn truth() -> ProbitQuadFit {
        ProbitQuadFit {
            c0: 0.1,
            c1: 2.0,
            c2: 1.5,
            c11: -0.3,
            c22: 0.4,
            c12: 0.7,
            n_used: 0,
            delta: 0.0,
        }
    }

    #[test]
    fn probit_fit_recovers_noise_free_coefficients() {
        let t = truth();
        let est = synthetic(&t, norm_cdf);
        let f = fit_probit_quadratic(&est, DeltaRule::Fixed(1e-9)).unwrap();
        for (a, b) in [(f.c0, t.c0), (f.c1, t.c1), (f.c2, t.c2), (f.c11, t.c11), (f.c22, t.c22), (f.c12, t.c12)] {
            assert!((a - b).abs() < 1e-8, "{a} vs {b}");
        }
    }

    #[test]
    fn probit_fit_excludes_zero_and_one() {
        let t = truth();
        let mut est = synthetic(&t, norm_cdf);
        let usable = fit_probit_quadratic(&est, DeltaRule::Fixed(0.0)).unwrap().n_used;
        let interior: Vec<usize> = (0..est.cdf.len())
            .filter(|&k| est.grid.in_region(k) && est.cdf[k] > 0.0 && est.cdf[k] < 1.0)
            .take(2)
            .collect();
        est.cdf[interior[0]] = 0.0;
        est.cdf[interior[1]] = 1.0;
        let f = fit_probit_quadratic(&est, DeltaRule::Fixed(0.0)).unwrap();
        assert_eq!(f.n_used, usable - 2);
        for c in est.cdf.iter_mut() {
            *c = if *c < 0.5 { 0.0 } else { 1.0 };
        }
        assert!(matches!(
            fit_probit_quadratic(&est, DeltaRule::Fixed(0.0)),
            Err(ArcdError::UnderIdentified { used: 0, .. })
        ));
    }

    #[test]
    fn probit_fit_ignores_row_order() {
        let mut rng = ArRng::new(4);
        let rows: Vec<([f64; 6], f64)> = (0..60)
            .map(|_| {
                let phi = [rng.gen_range(-0.5..0.5), rng.gen_range(-0.5..0.5)];
                (regressors(phi), truth().z(phi) + rng.gen_range(-0.1..0.1))
            })
            .collect();
        let a = fit_probit_rows(&rows, 0.1).unwrap();
        let mut shuffled = rows.clone();
        shuffled.reverse();
        shuffled.swap(3, 40);
        let b = fit_probit_rows(&shuffled, 0.1).unwrap();
        for (x, y) in [(a.c0, b.c0), (a.c1, b.c1), (a.c12, b.c12), (a.c22, b.c22)] {
            assert!((x - y).abs() < 1e-10);
        }
    }

    #[test]
    fn bootstrap_density_plug_in() {
        let mut f = ProbitQuadFit {
            c0: 0.0,
            c1: 0.0,
            c2: 0.0,
            c11: 0.0,
            c22: 0.0,
            c12: 1.0,
            n_used: 6,
            delta: 0.1,
        };
        assert!((cd_bootstrap_density(&f, [0.0, 0.0]) - 0.398_942_280_401_432_7).abs() < 1e-12);
        // z depending on one coordinate only has no mixed derivative
        f.c12 = 0.0;
        f.c0 = 0.3;
        f.c11 = 1.2;
        for phi in [[0.1, 0.2], [-0.4, 0.3], [0.0, 0.0]] {
            assert_eq!(cd_bootstrap_density(&f, phi).abs(), 0.0);
        }
        // with both squares present the product term survives off the axes
        f.c22 = -0.7;
        let v = cd_bootstrap_density(&f, [0.1, 0.2]);
        let z = f.z([0.1, 0.2]);
        let expected = -(2.0 * 1.2 * 0.1) * (2.0 * -0.7 * 0.2) * z * norm_pdf(z);
        assert!((v - expected).abs() < 1e-15);
        assert_eq!(cd_bootstrap_density(&f, [0.0, 0.3]), 0.0);
    }

    #[test]
    fn cdf_grid_limits_and_orthant_value() {
        let obs = [0.0, 0.0];
        let g = ParamGrid2D::new([-0.6, 0.6], [-0.6, 0.6], 2).unwrap();
        let est = estimate_cdf_grid(&g, 400, 1.0, 2000, obs, &ArRng::new(12)).unwrap();
        let at = |i, j| est.cdf[g.index(i, j)];
        // node at the observed estimate: both refits above it about 1/4 of the time
        assert!((at(1, 1) - 0.25).abs() < 0.035, "{}", at(1, 1));
        // node far below the estimate: refits rarely exceed it
        assert!(at(0, 0) < 0.01);
        // far above: almost always
        assert!(at(2, 2) > 0.99 || !g.in_region(g.index(2, 2)));
        assert!(est.cdf.iter().all(|c| (0.0..=1.0).contains(c)));
        let again = estimate_cdf_grid(&g, 400, 1.0, 2000, obs, &ArRng::new(12)).unwrap();
        assert_eq!(est, again);
    }

    #[test]
    fn cdf_grid_is_monotone_along_axes() {
        let n_mc = 400;
        let obs = [0.2, 0.1];
        let g = ParamGrid2D::new([-0.1, 0.5], [-0.2, 0.4], 6).unwrap();
        let est = estimate_cdf_grid(&g, 100, 1.0, n_mc, obs, &ArRng::new(3)).unwrap();
        let tol = 3.0 / (n_mc as f64).sqrt();
        for j in 0..=6 {
            for i in 0..6 {
                let (a, b) = (g.index(i, j), g.index(i + 1, j));
                if g.in_region(a) && g.in_region(b) {
                    assert!(est.cdf[b] >= est.cdf[a] - tol);
                }
            }
        }
        for i in 0..=6 {
            for j in 0..6 {
                let (a, b) = (g.index(i, j), g.index(i, j + 1));
                if g.in_region(a) && g.in_region(b) {
                    assert!(est.cdf[b] >= est.cdf[a] - tol);
                }
            }
        }
    }

    #[test]
    fn cdf_grid_scale_invariance() {
        // phi_hat does not depend on the innovation scale
        let g = ParamGrid2D::new([-0.3, 0.3], [-0.3, 0.3], 3).unwrap();
        let a = estimate_cdf_grid(&g, 60, 1.0, 200, [0.05, 0.0], &ArRng::new(2)).unwrap();
        let b = estimate_cdf_grid(&g, 60, 4.0, 200, [0.05, 0.0], &ArRng::new(2)).unwrap();
        for (x, y) in a.cdf.iter().zip(&b.cdf) {
            assert!((x - y).abs() < 1e-12);
        }
    }
}
