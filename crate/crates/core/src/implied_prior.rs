//! Log implied prior `n^{-1} log{c(phi) / L(phi, sigma2)}` of the asymptotic
//! confidence density, its large-sample residual, and the AR(1) rest term.

use crate::ar::{omega_hat, CovMatrix, FitResult};
use crate::cd::log_cd_asymptotic;
use crate::error::{ArcdError, Result};
use crate::grid::{ConfidenceSurface, ParamGrid2D, SurfaceKind};
use crate::wald::PrecisionForm;

/// Floor on the confidence density before taking logs.
pub const DENSITY_FLOOR: f64 = 1e-323;

/// `(log(2 pi sigma2) + 1) / 2`
pub fn main_term(sigma2: f64) -> f64 {
    0.5 * ((2.0 * std::f64::consts::PI * sigma2).ln() + 1.0)
}

/// Log implied prior evaluator for one fitted series.
#[derive(Clone, Debug)]
pub struct ImpliedPrior<'a> {
    fit: &'a FitResult,
    form: PrecisionForm,
    sigma2: f64,
}

impl<'a> ImpliedPrior<'a> {
    /// `omega_hat` is the asymptotic covariance at the fitted coefficients.
    pub fn new(fit: &'a FitResult, omega_hat: &CovMatrix, sigma2: f64) -> Result<Self> {
        if !(sigma2 > 0.0 && sigma2.is_finite()) {
            return Err(ArcdError::InvalidParameter(format!("sigma2 must be positive, got {sigma2}")));
        }
        if omega_hat.dim() != fit.order() {
            return Err(ArcdError::InvalidParameter("covariance does not match the model order".into()));
        }
        Ok(Self {
            fit,
            form: PrecisionForm::new(omega_hat)?,
            sigma2,
        })
    }

    /// Uses the covariance at the fitted coefficients.
    pub fn from_fit(fit: &'a FitResult, sigma2: f64) -> Result<Self> {
        let omega = omega_hat(&fit.phi_hat)?;
        Self::new(fit, &omega, sigma2)
    }

    fn n(&self) -> f64 {
        self.fit.n as f64
    }

    fn log_density(&self, phi: &[f64]) -> f64 {
        log_cd_asymptotic(phi, &self.fit.phi_hat, &self.form, self.fit.n).max(DENSITY_FLOOR.ln())
    }

    fn log_likelihood(&self, phi: &[f64]) -> f64 {
        -0.5 * self.n() * (2.0 * std::f64::consts::PI * self.sigma2).ln() - self.fit.sum_sq(phi) / (2.0 * self.sigma2)
    }

    /// `n^{-1} [log c(phi) - log L(phi, sigma2)]`
    pub fn log_implied_prior(&self, phi: &[f64]) -> f64 {
        (self.log_density(phi) - self.log_likelihood(phi)) / self.n()
    }

    /// Log implied prior minus `(log(2 pi sigma2) + 1)/2 + (p/2) log(n) / n`.
    pub fn residual(&self, phi: &[f64]) -> f64 {
        let n = self.n();
        let p = self.fit.order() as f64;
        self.log_implied_prior(phi) - main_term(self.sigma2) - 0.5 * p * n.ln() / n
    }

    /// `B = n sigma2 (phi_hat - phi)' Omega^{-1} (phi_hat - phi) - A(phi)`
    pub fn b_statistic(&self, phi: &[f64]) -> f64 {
        let d: Vec<f64> = self.fit.phi_hat.iter().zip(phi).map(|(a, b)| a - b).collect();
        self.n() * self.sigma2 * self.form.eval(&d) - self.fit.sum_sq(phi)
    }

    /// Residual on the in-region nodes of `grid`; `NaN` elsewhere.
    pub fn residual_surface(&self, grid: &ParamGrid2D) -> Result<ConfidenceSurface> {
        if self.fit.order() != 2 {
            return Err(ArcdError::InvalidParameter("implied prior surfaces are two-dimensional".into()));
        }
        let values = grid
            .nodes()
            .map(|(node, inside)| if inside { self.residual(&node) } else { f64::NAN })
            .collect();
        Ok(ConfidenceSurface::new(grid.clone(), values, SurfaceKind::LogImpliedPrior, None))
    }
}

pub fn log_implied_prior(phi: &[f64], fit: &FitResult, omega_hat: &CovMatrix, sigma2: f64) -> Result<f64> {
    check_dim(phi, fit)?;
    Ok(ImpliedPrior::new(fit, omega_hat, sigma2)?.log_implied_prior(phi))
}

pub fn proposition1_residual(phi: &[f64], fit: &FitResult, omega_hat: &CovMatrix, sigma2: f64) -> Result<f64> {
    check_dim(phi, fit)?;
    Ok(ImpliedPrior::new(fit, omega_hat, sigma2)?.residual(phi))
}

fn check_dim(phi: &[f64], fit: &FitResult) -> Result<()> {
    if phi.len() != fit.order() {
        return Err(ArcdError::InvalidParameter("parameter dimension does not match the fit".into()));
    }
    Ok(())
}

/// Rest term `h(phi0, phi) = -phi0 (1 - 2 phi0 phi + phi^2) / (1 - phi0^2)^{3/2}` for AR(1).
pub fn rest_term_h_p1(phi0: f64, phi: f64) -> Result<f64> {
    if !(phi0.abs() < 1.0) {
        return Err(ArcdError::Domain(format!("|phi0| must be below 1, got {phi0}")));
    }
    Ok(-phi0 * (1.0 - 2.0 * phi0 * phi + phi * phi) / (1.0 - phi0 * phi0).powf(1.5))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ar::{fit, simulate, ArParams};

    fn fitted(phi: Vec<f64>, n: usize, seed: u64) -> FitResult {
        fit(&simulate(&ArParams::new(phi.clone(), 1.0).unwrap(), n, seed).unwrap(), phi.len()).unwrap()
    }

    #[test]
    fn main_term_constant() {
        assert!((main_term(1.0) - 1.4189385332046727).abs() < 1e-12);
    }

    #[test]
    fn rest_term_values() {
        for phi in [-0.9, 0.0, 0.3, 2.0] {
            assert_eq!(rest_term_h_p1(0.0, phi).unwrap(), 0.0);
        }
        let h = rest_term_h_p1(0.5, 0.5).unwrap();
        assert!((h - (-0.375 / 0.75f64.powf(1.5))).abs() < 1e-12);
        assert!((h + 0.57735).abs() < 1e-5);
        assert!(matches!(rest_term_h_p1(1.0, 0.2), Err(ArcdError::Domain(_))));
        assert!(matches!(rest_term_h_p1(-1.3, 0.2), Err(ArcdError::Domain(_))));
    }

    #[test]
    fn residual_is_prior_minus_constants() {
        let f = fitted(vec![0.4, 0.2], 150, 3);
        let ip = ImpliedPrior::from_fit(&f, 1.3).unwrap();
        let n = f.n as f64;
        for phi in [[0.0, 0.0], [0.4, 0.2], [-0.3, 0.5]] {
            let lhs = ip.residual(&phi);
            let rhs = ip.log_implied_prior(&phi) - main_term(1.3) - n.ln() / n;
            assert!((lhs - rhs).abs() < 1e-12);
        }
    }

    #[test]
    fn closed_form_of_the_ratio() {
        // log(c/L) = (p/2) log n - (1/2) log|Omega| + ((n - p)/2) log 2pi
        //            + (n/2) log sigma2 - B / (2 sigma2)
        let f = fitted(vec![0.4, 0.2], 80, 11);
        let sigma2 = 0.8;
        let omega = omega_hat(&f.phi_hat).unwrap();
        let ip = ImpliedPrior::new(&f, &omega, sigma2).unwrap();
        let o = &omega.omega;
        let det = o[(0, 0)] * o[(1, 1)] - o[(0, 1)] * o[(1, 0)];
        let n = f.n as f64;
        let phi = [0.35, 0.1];
        let expected = (n.ln() - 0.5 * det.ln() + 0.5 * (n - 2.0) * (2.0 * std::f64::consts::PI).ln()
            + 0.5 * n * sigma2.ln()
            - ip.b_statistic(&phi) / (2.0 * sigma2))
            / n;
        assert!((ip.log_implied_prior(&phi) - expected).abs() < 1e-10);
    }

    #[test]
    fn floor_keeps_values_finite_far_away() {
        let f = fitted(vec![0.0, 0.0], 2000, 5);
        let ip = ImpliedPrior::from_fit(&f, 1.0).unwrap();
        let v = ip.log_implied_prior(&[1.5, -0.9]);
        assert!(v.is_finite());
        // the floor is active there
        assert!(log_cd_asymptotic(&[1.5, -0.9], &f.phi_hat, &ip.form, f.n) < DENSITY_FLOOR.ln());
    }

    #[test]
    fn surface_marks_outside_nodes() {
        let f = fitted(vec![0.4, 0.2], 100, 1);
        let ip = ImpliedPrior::from_fit(&f, 1.0).unwrap();
        let g = ParamGrid2D::full_triangle(20).unwrap();
        let s = ip.residual_surface(&g).unwrap();
        for (k, (_, inside)) in g.nodes().enumerate() {
            assert_eq!(s.values[k].is_nan(), !inside);
        }
    }
}
