//! Zero-mean AR(p) models: simulation, conditional least squares, the
//! Gaussian likelihood, causality checks and the asymptotic covariance of
//! the coefficient estimator.
//!
//! Throughout, the pre-sample values `y_0 = y_-1 = ... = y_{1-p}` are zero and
//! never stored. The first `p` regressor rows are therefore truncated, and the
//! fit and the likelihood share exactly this design.

use nalgebra::{Complex, DMatrix, DVector};
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{ArcdError, Result};
use crate::rng::ArRng;

/// Spectral-radius margin below 1 required for causality.
pub const TOL_EIG: f64 = 1e-8;

/// Relative eigenvalue floor below which `X'X` counts as singular.
const SINGULAR_RCOND: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ArParams {
    pub phi: Vec<f64>,
    pub sigma2: f64,
}

impl ArParams {
    pub fn new(phi: Vec<f64>, sigma2: f64) -> Result<Self> {
        let params = Self { phi, sigma2 };
        params.validate()?;
        Ok(params)
    }

    pub fn order(&self) -> usize {
        self.phi.len()
    }

    fn validate(&self) -> Result<()> {
        if self.phi.is_empty() {
            return Err(ArcdError::InvalidParameter("AR order must be at least 1".into()));
        }
        if !(self.sigma2 > 0.0) || !self.sigma2.is_finite() {
            return Err(ArcdError::InvalidParameter(format!(
                "innovation variance must be positive, got {}",
                self.sigma2
            )));
        }
        if self.phi.iter().any(|v| !v.is_finite()) {
            return Err(ArcdError::InvalidParameter("non-finite AR coefficient".into()));
        }
        Ok(())
    }
}

/// An observed or simulated series `y_1, ..., y_n`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeriesSample {
    pub values: Vec<f64>,
}

impl SeriesSample {
    pub fn new(values: Vec<f64>) -> Self {
        Self { values }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// `z_t = log(y_t - min y + shift)`.
    pub fn log_shift(&self, shift: f64) -> Result<SeriesSample> {
        if !(shift > 0.0) {
            return Err(ArcdError::InvalidParameter(format!("log shift must be positive, got {shift}")));
        }
        let min = self.values.iter().cloned().fold(f64::INFINITY, f64::min);
        Ok(SeriesSample::new(self.values.iter().map(|y| (y - min + shift).ln()).collect()))
    }

    pub fn demean(&self) -> SeriesSample {
        if self.values.is_empty() {
            return self.clone();
        }
        let mean = self.values.iter().sum::<f64>() / self.values.len() as f64;
        SeriesSample::new(self.values.iter().map(|y| y - mean).collect())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FitResult {
    pub phi_hat: Vec<f64>,
    /// ML innovation variance, divisor `n`.
    pub sigma2_hat: f64,
    pub residuals: Vec<f64>,
    /// `sum_t y_{t-} y_{t-}'`
    pub xtx: DMatrix<f64>,
    /// `sum_t y_{t-} y_t`
    pub xty: DVector<f64>,
    /// `sum_t y_t^2`
    pub sum_y2: f64,
    pub n: usize,
}

impl FitResult {
    pub fn order(&self) -> usize {
        self.phi_hat.len()
    }

    /// Sum of squared one-step errors `A(phi)` from the stored lag sums.
    pub fn sum_sq(&self, phi: &[f64]) -> f64 {
        let p = self.order();
        assert_eq!(phi.len(), p);
        let mut a = self.sum_y2;
        for i in 0..p {
            a -= 2.0 * phi[i] * self.xty[i];
            for j in 0..p {
                a += phi[i] * self.xtx[(i, j)] * phi[j];
            }
        }
        a
    }
}

/// Asymptotic covariance of `sqrt(n) (phi_hat - phi)`.
#[derive(Clone, Debug, PartialEq)]
pub struct CovMatrix {
    pub omega: DMatrix<f64>,
    /// Set when the coefficients it was evaluated at are on or outside the
    /// causal region, where the formula no longer describes a covariance.
    pub near_singular: bool,
}

impl CovMatrix {
    pub fn dim(&self) -> usize {
        self.omega.nrows()
    }

    /// Inverse and log-determinant, requiring positive definiteness.
    pub fn inverse_and_logdet(&self) -> Result<(DMatrix<f64>, f64)> {
        let chol = self
            .omega
            .clone()
            .cholesky()
            .ok_or_else(|| ArcdError::Singular("covariance matrix is not positive definite".into()))?;
        let logdet = 2.0 * chol.l().diagonal().iter().map(|d| d.ln()).sum::<f64>();
        if !logdet.is_finite() {
            return Err(ArcdError::Singular("covariance matrix has zero determinant".into()));
        }
        Ok((chol.inverse(), logdet))
    }
}

/// `y_t = sum_k phi_k y_{t-k} + eps_t` from given innovations, zero pre-sample.
pub fn simulate_with_innovations(phi: &[f64], innovations: &[f64]) -> SeriesSample {
    let mut y = Vec::with_capacity(innovations.len());
    for (t, &e) in innovations.iter().enumerate() {
        let mut v = e;
        for (k, &c) in phi.iter().enumerate() {
            if t > k {
                v += c * y[t - 1 - k];
            }
        }
        y.push(v);
    }
    SeriesSample::new(y)
}

/// Fills `out` with an AR path driven by fresh N(0, sigma2) innovations.
pub(crate) fn simulate_into(phi: &[f64], sigma: f64, rng: &mut ArRng, out: &mut Vec<f64>, n: usize) {
    out.clear();
    for t in 0..n {
        let e: f64 = StandardNormal.sample(rng);
        let mut v = sigma * e;
        for (k, &c) in phi.iter().enumerate() {
            if t > k {
                v += c * out[t - 1 - k];
            }
        }
        out.push(v);
    }
}

pub fn simulate_with_rng(params: &ArParams, n: usize, rng: &mut ArRng) -> Result<SeriesSample> {
    params.validate()?;
    if n == 0 {
        return Err(ArcdError::InvalidParameter("series length must be at least 1".into()));
    }
    let mut out = Vec::with_capacity(n);
    simulate_into(&params.phi, params.sigma2.sqrt(), rng, &mut out, n);
    Ok(SeriesSample::new(out))
}

pub fn simulate(params: &ArParams, n: usize, seed: u64) -> Result<SeriesSample> {
    simulate_with_rng(params, n, &mut ArRng::new(seed))
}

/// Lag cross-product sums `(X'X, X'y, y'y)` under the zero pre-sample rule.
pub fn lag_sums(values: &[f64], p: usize) -> (DMatrix<f64>, DVector<f64>, f64) {
    let mut xtx = DMatrix::zeros(p, p);
    let mut xty = DVector::zeros(p);
    let mut yy = 0.0;
    for t in 0..values.len() {
        let yt = values[t];
        yy += yt * yt;
        for i in 0..p {
            if t <= i {
                break;
            }
            let a = values[t - 1 - i];
            xty[i] += a * yt;
            for j in 0..=i {
                xtx[(i, j)] += a * values[t - 1 - j];
            }
        }
    }
    for i in 0..p {
        for j in 0..i {
            xtx[(j, i)] = xtx[(i, j)];
        }
    }
    (xtx, xty, yy)
}

fn check_design(xtx: &DMatrix<f64>) -> Result<()> {
    let eig = xtx.clone().symmetric_eigenvalues();
    let max = eig.iter().cloned().fold(0.0_f64, f64::max);
    let min = eig.iter().cloned().fold(f64::INFINITY, f64::min);
    if !(max > 0.0) || !max.is_finite() {
        return Err(ArcdError::DegenerateDesign { condition: f64::INFINITY });
    }
    if min <= SINGULAR_RCOND * max {
        let condition = if min > 0.0 { max / min } else { f64::INFINITY };
        return Err(ArcdError::DegenerateDesign { condition });
    }
    Ok(())
}

fn check_order(n: usize, p: usize) -> Result<()> {
    if p == 0 {
        return Err(ArcdError::InvalidParameter("AR order must be at least 1".into()));
    }
    if n <= p {
        return Err(ArcdError::InvalidParameter(format!(
            "series length {n} must exceed the AR order {p}"
        )));
    }
    Ok(())
}

/// Least-squares (conditional ML) fit of an AR(p) without intercept.
pub fn fit(series: &SeriesSample, p: usize) -> Result<FitResult> {
    let n = series.len();
    check_order(n, p)?;
    let (xtx, xty, sum_y2) = lag_sums(&series.values, p);
    check_design(&xtx)?;
    let chol = xtx
        .clone()
        .cholesky()
        .ok_or(ArcdError::DegenerateDesign { condition: f64::INFINITY })?;
    let phi = chol.solve(&xty);
    let phi_hat: Vec<f64> = phi.iter().cloned().collect();
    let y = &series.values;
    let residuals: Vec<f64> = (0..n)
        .map(|t| {
            let mut r = y[t];
            for (k, c) in phi_hat.iter().enumerate() {
                if t > k {
                    r -= c * y[t - 1 - k];
                }
            }
            r
        })
        .collect();
    let sigma2_hat = residuals.iter().map(|r| r * r).sum::<f64>() / n as f64;
    Ok(FitResult {
        phi_hat,
        sigma2_hat,
        residuals,
        xtx,
        xty,
        sum_y2,
        n,
    })
}

/// Coefficient estimate only; the inner loop of every Monte Carlo routine.
pub(crate) fn fit_coefficients(values: &[f64], p: usize) -> Result<Vec<f64>> {
    check_order(values.len(), p)?;
    if p != 2 {
        return fit(&SeriesSample::new(values.to_vec()), p).map(|f| f.phi_hat);
    }
    let (mut s11, mut s12, mut s22, mut r1, mut r2) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for t in 1..values.len() {
        let y = values[t];
        let a = values[t - 1];
        let b = if t >= 2 { values[t - 2] } else { 0.0 };
        s11 += a * a;
        s12 += a * b;
        s22 += b * b;
        r1 += a * y;
        r2 += b * y;
    }
    let det = s11 * s22 - s12 * s12;
    let tr = s11 + s22;
    // smaller eigenvalue of the 2x2 block, compared as in `check_design`
    let disc = ((s11 - s22) * (s11 - s22) + 4.0 * s12 * s12).sqrt();
    let max = 0.5 * (tr + disc);
    let min = 0.5 * (tr - disc);
    if !(max > 0.0) || min <= SINGULAR_RCOND * max || det <= 0.0 {
        let condition = if min > 0.0 { max / min } else { f64::INFINITY };
        return Err(ArcdError::DegenerateDesign { condition });
    }
    Ok(vec![(s22 * r1 - s12 * r2) / det, (s11 * r2 - s12 * r1) / det])
}

/// `A(phi) = sum_{t=1}^n (y_t - phi' y_{t-})^2`, summed term by term.
pub fn sum_sq_direct(phi: &[f64], series: &SeriesSample) -> f64 {
    let y = &series.values;
    (0..y.len())
        .map(|t| {
            let mut r = y[t];
            for (k, c) in phi.iter().enumerate() {
                if t > k {
                    r -= c * y[t - 1 - k];
                }
            }
            r * r
        })
        .sum()
}

/// `A(phi)` through the MLE: `sum y^2 - phi' (X'X) (2 phi_hat - phi)`.
pub fn sum_sq_via_mle(phi: &[f64], fit: &FitResult) -> f64 {
    let p = fit.order();
    let mut acc = fit.sum_y2;
    for i in 0..p {
        for j in 0..p {
            acc -= phi[i] * fit.xtx[(i, j)] * (2.0 * fit.phi_hat[j] - phi[j]);
        }
    }
    acc
}

/// Gaussian log-likelihood `-(n/2) log(2 pi sigma2) - A / (2 sigma2)`.
pub fn log_likelihood(params: &ArParams, series: &SeriesSample) -> Result<f64> {
    params.validate()?;
    let n = series.len() as f64;
    let a = sum_sq_direct(&params.phi, series);
    Ok(-0.5 * n * (2.0 * std::f64::consts::PI * params.sigma2).ln() - a / (2.0 * params.sigma2))
}

/// The AR(2) stationarity triangle, strict inequalities.
pub fn is_stationary_p2(phi: [f64; 2]) -> bool {
    let [a, b] = phi;
    a + b < 1.0 && b - a < 1.0 && b > -1.0
}

/// Companion matrix with the coefficients in its first row.
pub fn companion(phi: &[f64]) -> DMatrix<f64> {
    let p = phi.len();
    let mut m = DMatrix::zeros(p, p);
    for (j, &c) in phi.iter().enumerate() {
        m[(0, j)] = c;
    }
    for i in 1..p {
        m[(i, i - 1)] = 1.0;
    }
    m
}

/// Roots of `z^p - phi_1 z^{p-1} - ... - phi_p` (the companion eigenvalues).
pub fn characteristic_roots(phi: &[f64]) -> Vec<Complex<f64>> {
    match phi.len() {
        0 => vec![],
        1 => vec![Complex::new(phi[0], 0.0)],
        2 => {
            let (b, c) = (-phi[0], -phi[1]);
            let disc = b * b - 4.0 * c;
            if disc >= 0.0 {
                let s = disc.sqrt();
                vec![Complex::new(0.5 * (-b + s), 0.0), Complex::new(0.5 * (-b - s), 0.0)]
            } else {
                let s = (-disc).sqrt();
                vec![Complex::new(-0.5 * b, 0.5 * s), Complex::new(-0.5 * b, -0.5 * s)]
            }
        }
        _ => durand_kerner(phi),
    }
}

/// Weierstrass iteration on the monic characteristic polynomial.
fn durand_kerner(phi: &[f64]) -> Vec<Complex<f64>> {
    let p = phi.len();
    let eval = |z: Complex<f64>| {
        let mut v = Complex::new(1.0, 0.0);
        for &c in phi {
            v = v * z - Complex::new(c, 0.0);
        }
        v
    };
    let bound = 1.0 + phi.iter().map(|c| c.abs()).fold(0.0, f64::max);
    let seed = Complex::new(0.4, 0.9);
    let mut roots: Vec<Complex<f64>> = (0..p).map(|k| seed.powu(k as u32) * bound).collect();
    for _ in 0..1000 {
        let mut moved = 0.0_f64;
        for i in 0..p {
            let mut denom = Complex::new(1.0, 0.0);
            for j in 0..p {
                if i != j {
                    denom *= roots[i] - roots[j];
                }
            }
            if denom.norm() == 0.0 {
                continue;
            }
            let delta = eval(roots[i]) / denom;
            roots[i] -= delta;
            moved = moved.max(delta.norm());
        }
        if moved < 1e-15 * bound {
            break;
        }
    }
    roots
}

/// Eigenvalues of the companion matrix from a general eigen-solver.
pub fn companion_eigenvalues(phi: &[f64]) -> Vec<Complex<f64>> {
    companion(phi).complex_eigenvalues().iter().cloned().collect()
}

pub fn spectral_radius(phi: &[f64]) -> f64 {
    let roots = if phi.len() <= 3 {
        characteristic_roots(phi)
    } else {
        companion_eigenvalues(phi)
    };
    roots.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Causality: companion spectral radius below `1 - TOL_EIG`.
pub fn is_causal(phi: &[f64]) -> bool {
    !phi.is_empty() && phi.iter().all(|c| c.is_finite()) && spectral_radius(phi) < 1.0 - TOL_EIG
}

/// Closed-form asymptotic covariance for p = 2.
pub fn omega_p2(phi: [f64; 2]) -> CovMatrix {
    let [a, b] = phi;
    let d = 1.0 - b * b;
    let off = -a * (1.0 + b);
    CovMatrix {
        omega: DMatrix::from_row_slice(2, 2, &[d, off, off, d]),
        near_singular: !is_stationary_p2(phi),
    }
}

/// `R = vec^{-1}{(I - Phi (x) Phi)^{-1} vec(M)}` with `M = e_1 e_1'`, i.e. the
/// lag-covariance matrix of the stationary process divided by `sigma^2`.
pub fn stationary_gram(phi: &[f64]) -> Result<DMatrix<f64>> {
    let p = phi.len();
    if p == 0 {
        return Err(ArcdError::InvalidParameter("AR order must be at least 1".into()));
    }
    let c = companion(phi);
    let kron = c.kronecker(&c);
    let system = DMatrix::<f64>::identity(p * p, p * p) - kron;
    let mut vec_m = DVector::zeros(p * p);
    vec_m[0] = 1.0;
    let lu = system.lu();
    let x = lu
        .solve(&vec_m)
        .ok_or_else(|| ArcdError::Singular("I - Phi (x) Phi is singular (unit root)".into()))?;
    if x.iter().any(|v| !v.is_finite()) {
        return Err(ArcdError::Singular("I - Phi (x) Phi is numerically singular".into()));
    }
    // vec stacks columns
    let r = DMatrix::from_column_slice(p, p, x.as_slice());
    Ok(r)
}

/// General-order asymptotic covariance `Omega = R^{-1}`.
pub fn omega_general(phi: &[f64]) -> Result<CovMatrix> {
    if !is_causal(phi) {
        let radius = spectral_radius(phi);
        if (radius - 1.0).abs() < 1e-6 {
            return Err(ArcdError::Singular("unit root in the companion matrix".into()));
        }
        return Err(ArcdError::Domain(format!("coefficients are not causal (spectral radius {radius})")));
    }
    let r = stationary_gram(phi)?;
    let asym = (&r - r.transpose()).abs().max();
    if asym > 1e-9 * (1.0 + r.abs().max()) {
        return Err(ArcdError::Singular(format!("R is not symmetric (deviation {asym:.3e})")));
    }
    let r = (&r + r.transpose()) * 0.5;
    let chol = r
        .clone()
        .cholesky()
        .ok_or_else(|| ArcdError::Singular("R is not positive definite".into()))?;
    let omega = chol.inverse();
    Ok(CovMatrix {
        omega: (&omega + omega.transpose()) * 0.5,
        near_singular: false,
    })
}

/// Plug-in covariance at an estimate: the closed form for p = 2, the general
/// solver otherwise. Outside the causal region the p = 2 formula is still
/// returned, flagged as near-singular.
pub fn omega_hat(phi: &[f64]) -> Result<CovMatrix> {
    if phi.len() == 2 {
        Ok(omega_p2([phi[0], phi[1]]))
    } else {
        omega_general(phi)
    }
}
