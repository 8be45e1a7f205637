//! Rectangular parameter grids over `(phi_1, phi_2)` and scalar fields on them.

use serde::{Deserialize, Serialize};

use crate::ar::is_stationary_p2;
use crate::error::{ArcdError, Result};

/// Bounding box of the AR(2) stationarity triangle.
pub const TRIANGLE_BOX: ([f64; 2], [f64; 2]) = ([-2.0, 2.0], [-1.0, 1.0]);

/// Area of the stationarity triangle.
pub const TRIANGLE_AREA: f64 = 4.0;

/// Grid with nodes `phi_j = min_j + k h_j`, `k = 0..=m`, `h_j = (max_j - min_j) / m`.
///
/// Node `(i, j)` has index `j * (m + 1) + i`; `i` runs along `phi_1`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParamGrid2D {
    pub phi1_min: f64,
    pub phi1_max: f64,
    pub phi2_min: f64,
    pub phi2_max: f64,
    pub m: usize,
    in_region: Vec<bool>,
}

impl ParamGrid2D {
    pub fn new(phi1: [f64; 2], phi2: [f64; 2], m: usize) -> Result<Self> {
        if m < 1 {
            return Err(ArcdError::InvalidParameter("grid needs at least one subdivision".into()));
        }
        if !(phi1[1] > phi1[0]) || !(phi2[1] > phi2[0]) {
            return Err(ArcdError::InvalidParameter(format!(
                "empty grid window {phi1:?} x {phi2:?}"
            )));
        }
        let mut grid = Self {
            phi1_min: phi1[0],
            phi1_max: phi1[1],
            phi2_min: phi2[0],
            phi2_max: phi2[1],
            m,
            in_region: Vec::new(),
        };
        grid.in_region = (0..grid.len()).map(|k| is_stationary_p2(grid.node(k))).collect();
        Ok(grid)
    }

    /// Window of `half_width_se` standard errors around an estimate, clipped
    /// to the triangle's bounding box.
    pub fn around(center: [f64; 2], se: [f64; 2], half_width_se: f64, m: usize) -> Result<Self> {
        let (bx, by) = TRIANGLE_BOX;
        let lo1 = (center[0] - half_width_se * se[0]).max(bx[0]);
        let hi1 = (center[0] + half_width_se * se[0]).min(bx[1]);
        let lo2 = (center[1] - half_width_se * se[1]).max(by[0]);
        let hi2 = (center[1] + half_width_se * se[1]).min(by[1]);
        Self::new([lo1, hi1], [lo2, hi2], m)
    }

    /// The whole bounding box of the triangle.
    pub fn full_triangle(m: usize) -> Result<Self> {
        Self::new(TRIANGLE_BOX.0, TRIANGLE_BOX.1, m)
    }

    pub fn side(&self) -> usize {
        self.m + 1
    }

    pub fn len(&self) -> usize {
        self.side() * self.side()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn h1(&self) -> f64 {
        (self.phi1_max - self.phi1_min) / self.m as f64
    }

    pub fn h2(&self) -> f64 {
        (self.phi2_max - self.phi2_min) / self.m as f64
    }

    pub fn cell_area(&self) -> f64 {
        self.h1() * self.h2()
    }

    pub fn index(&self, i: usize, j: usize) -> usize {
        j * self.side() + i
    }

    pub fn coords(&self, k: usize) -> (usize, usize) {
        (k % self.side(), k / self.side())
    }

    pub fn node(&self, k: usize) -> [f64; 2] {
        let (i, j) = self.coords(k);
        [
            self.phi1_min + i as f64 * self.h1(),
            self.phi2_min + j as f64 * self.h2(),
        ]
    }

    pub fn in_region(&self, k: usize) -> bool {
        self.in_region[k]
    }

    pub fn in_region_mask(&self) -> &[bool] {
        &self.in_region
    }

    pub fn in_region_count(&self) -> usize {
        self.in_region.iter().filter(|&&b| b).count()
    }

    /// `(phi_1, phi_2, in_region)` for every node in index order.
    pub fn nodes(&self) -> impl Iterator<Item = ([f64; 2], bool)> + '_ {
        (0..self.len()).map(move |k| (self.node(k), self.in_region[k]))
    }

    /// Node whose cell (of size `h_1 x h_2`, centred on the node) holds `point`.
    pub fn nearest_node(&self, point: [f64; 2]) -> Option<usize> {
        let fi = ((point[0] - self.phi1_min) / self.h1()).round();
        let fj = ((point[1] - self.phi2_min) / self.h2()).round();
        if !(fi >= 0.0 && fj >= 0.0 && fi <= self.m as f64 && fj <= self.m as f64) {
            return None;
        }
        Some(self.index(fi as usize, fj as usize))
    }

    /// Diagonal length of one cell.
    pub fn cell_diagonal(&self) -> f64 {
        self.h1().hypot(self.h2())
    }

    pub fn same_geometry(&self, other: &ParamGrid2D) -> bool {
        self.m == other.m
            && self.phi1_min == other.phi1_min
            && self.phi1_max == other.phi1_max
            && self.phi2_min == other.phi2_min
            && self.phi2_max == other.phi2_max
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SurfaceKind {
    ConfidenceCurve,
    Density,
    Posterior,
    LogImpliedPrior,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    CdBootstrap,
    CdAsymptotic,
    WaldAsymptotic,
    WaldBootstrap,
    BayesFlat,
    BayesCorrected,
}

impl Method {
    /// The four confidence-region constructions, in table order.
    pub const CONFIDENCE: [Method; 4] = [
        Method::CdBootstrap,
        Method::CdAsymptotic,
        Method::WaldAsymptotic,
        Method::WaldBootstrap,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Method::CdBootstrap => "cd_bootstrap",
            Method::CdAsymptotic => "cd_asymptotic",
            Method::WaldAsymptotic => "wald_asymptotic",
            Method::WaldBootstrap => "wald_bootstrap",
            Method::BayesFlat => "bayes_flat",
            Method::BayesCorrected => "bayes_corrected",
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Method {
    type Err = ArcdError;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "cd_bootstrap" => Method::CdBootstrap,
            "cd_asymptotic" => Method::CdAsymptotic,
            "wald_asymptotic" => Method::WaldAsymptotic,
            "wald_bootstrap" => Method::WaldBootstrap,
            "bayes_flat" => Method::BayesFlat,
            "bayes_corrected" => Method::BayesCorrected,
            other => return Err(ArcdError::InvalidParameter(format!("unknown method '{other}'"))),
        })
    }
}

/// Per-node scalar field.
#[derive(Clone, Debug, PartialEq)]
pub struct ConfidenceSurface {
    pub grid: ParamGrid2D,
    pub values: Vec<f64>,
    pub kind: SurfaceKind,
    pub method: Option<Method>,
}

impl ConfidenceSurface {
    pub fn new(grid: ParamGrid2D, values: Vec<f64>, kind: SurfaceKind, method: Option<Method>) -> Self {
        assert_eq!(grid.len(), values.len(), "surface size must match the grid");
        Self { grid, values, kind, method }
    }

    /// Riemann sum of the positive part over in-region cells.
    pub fn positive_mass(&self) -> f64 {
        let area = self.grid.cell_area();
        self.values
            .iter()
            .zip(self.grid.in_region_mask())
            .filter(|(v, &inside)| inside && **v > 0.0)
            .map(|(v, _)| v * area)
            .sum()
    }

    /// Scales the surface so that its positive part integrates to one over the
    /// in-region cells. Negative values are kept (scaled) but carry no mass.
    pub fn normalize(&mut self) -> Result<()> {
        let mass = self.positive_mass();
        if !(mass > 0.0) || !mass.is_finite() {
            return Err(ArcdError::Underflow(format!(
                "surface has no positive mass to normalize ({mass})"
            )));
        }
        for v in &mut self.values {
            *v /= mass;
        }
        Ok(())
    }

    /// Index of the largest in-region value.
    pub fn argmax(&self) -> Option<usize> {
        (0..self.values.len())
            .filter(|&k| self.grid.in_region(k) && self.values[k].is_finite())
            .max_by(|&a, &b| self.values[a].total_cmp(&self.values[b]))
    }

    pub fn argmin(&self) -> Option<usize> {
        (0..self.values.len())
            .filter(|&k| self.grid.in_region(k) && self.values[k].is_finite())
            .min_by(|&a, &b| self.values[a].total_cmp(&self.values[b]))
    }

    pub fn max_abs_in_region(&self) -> f64 {
        (0..self.values.len())
            .filter(|&k| self.grid.in_region(k))
            .map(|k| self.values[k].abs())
            .fold(0.0, f64::max)
    }
}
