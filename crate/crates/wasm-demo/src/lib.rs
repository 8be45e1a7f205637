//! Browser bindings: simulate and fit a series, draw one region, and map the
//! implied-prior residual. The plain functions are usable natively; the
//! `#[wasm_bindgen]` wrappers hand their results to JavaScript as objects.

use arcd_core::ar::{fit, is_causal, simulate, ArParams, SeriesSample};
use arcd_core::bayes::{flat_prior_posterior_from_fit, Variance};
use arcd_core::contour::{contour_lines, ContourSet};
use arcd_core::experiments::run_implied_prior_study;
use arcd_core::grid::{ConfidenceSurface, Method, ParamGrid2D, TRIANGLE_BOX};
use arcd_core::methods::{default_window, method_surface, region_at, standard_errors, MethodSettings};
use arcd_core::rng::ArRng;
use arcd_core::Result;
use serde::Serialize;
use wasm_bindgen::prelude::*;

/// Node values in `phi1`-fastest order; `NaN` becomes `null`.
#[derive(Serialize)]
pub struct SurfaceView {
    pub phi1: [f64; 2],
    pub phi2: [f64; 2],
    pub side: usize,
    pub values: Vec<Option<f64>>,
}

impl SurfaceView {
    fn new(s: &ConfidenceSurface) -> Self {
        let g = &s.grid;
        Self {
            phi1: [g.phi1_min, g.phi1_max],
            phi2: [g.phi2_min, g.phi2_max],
            side: g.side(),
            values: s.values.iter().map(|v| v.is_finite().then_some(*v)).collect(),
        }
    }
}

#[derive(Serialize)]
pub struct FitView {
    pub series: Vec<f64>,
    pub phi_hat: [f64; 2],
    pub se: [f64; 2],
    pub sigma2_hat: f64,
    pub causal: bool,
}

#[derive(Serialize)]
pub struct RegionView {
    pub method: String,
    pub area: f64,
    pub covers_truth: Option<bool>,
    pub boundary: Vec<[[f64; 2]; 2]>,
    pub surface: SurfaceView,
}

#[derive(Serialize)]
pub struct PriorView {
    pub surface: SurfaceView,
    pub contours: ContourSet,
}

pub fn simulate_and_fit(phi1: f64, phi2: f64, n: usize, seed: u64) -> Result<FitView> {
    let params = ArParams::new(vec![phi1, phi2], 1.0)?;
    let series = simulate(&params, n, seed)?;
    let f = fit(&series, 2)?;
    Ok(FitView {
        phi_hat: [f.phi_hat[0], f.phi_hat[1]],
        se: standard_errors(&f)?,
        sigma2_hat: f.sigma2_hat,
        causal: is_causal(&params.phi),
        series: series.values,
    })
}

/// `method` is one of the four confidence methods or `bayes_flat`.
pub fn region(series: Vec<f64>, method: &str, level: f64, m: usize, seed: u64, truth: Option<[f64; 2]>) -> Result<RegionView> {
    let method: Method = method.parse()?;
    let f = fit(&SeriesSample::new(series), 2)?;
    let grid = default_window(&f, 5.0, m)?;
    let surface = if method == Method::BayesFlat {
        flat_prior_posterior_from_fit(&f, &grid, Variance::Profile)?
    } else {
        // lighter Monte Carlo than the command line, for interactive use
        let settings = MethodSettings {
            n_bootstrap: 200,
            n_mc: 200,
            cdf_m: 16,
        };
        method_surface(&f, method, &grid, &settings, &ArRng::new(seed))?
    };
    let r = region_at(&surface, level)?;
    Ok(RegionView {
        method: method.to_string(),
        area: r.area,
        covers_truth: truth.map(|t| r.contains(t)),
        boundary: r.boundary_edges(),
        surface: SurfaceView::new(&surface),
    })
}

pub fn implied_prior(phi1: f64, phi2: f64, n: usize, reps: usize, m: usize, seed: u64, levels: &[f64]) -> Result<PriorView> {
    let (b1, b2) = TRIANGLE_BOX;
    let grid = ParamGrid2D::new(
        [(phi1 - 0.5).max(b1[0]), (phi1 + 0.5).min(b1[1])],
        [(phi2 - 0.5).max(b2[0]), (phi2 + 0.5).min(b2[1])],
        m,
    )?;
    let study = run_implied_prior_study([phi1, phi2], 1.0, n, reps, &grid, seed)?;
    Ok(PriorView {
        contours: contour_lines(&study.mean, levels),
        surface: SurfaceView::new(&study.mean),
    })
}

fn to_js<T: Serialize>(r: Result<T>) -> std::result::Result<JsValue, JsError> {
    let v = r.map_err(|e| JsError::new(&e.to_string()))?;
    // json-compatible so that missing values arrive as `null`
    v.serialize(&serde_wasm_bindgen::Serializer::json_compatible())
        .map_err(|e| JsError::new(&e.to_string()))
}

#[wasm_bindgen(js_name = simulateAndFit)]
pub fn simulate_and_fit_js(phi1: f64, phi2: f64, n: usize, seed: u32) -> std::result::Result<JsValue, JsError> {
    to_js(simulate_and_fit(phi1, phi2, n, seed as u64))
}

#[wasm_bindgen(js_name = region)]
pub fn region_js(
    series: Vec<f64>,
    method: &str,
    level: f64,
    m: usize,
    seed: u32,
    truth1: f64,
    truth2: f64,
) -> std::result::Result<JsValue, JsError> {
    let truth = (truth1.is_finite() && truth2.is_finite()).then_some([truth1, truth2]);
    to_js(region(series, method, level, m, seed as u64, truth))
}

#[wasm_bindgen(js_name = impliedPrior)]
pub fn implied_prior_js(
    phi1: f64,
    phi2: f64,
    n: usize,
    reps: usize,
    m: usize,
    seed: u32,
    levels: Vec<f64>,
) -> std::result::Result<JsValue, JsError> {
    to_js(implied_prior(phi1, phi2, n, reps, m, seed as u64, &levels))
}
