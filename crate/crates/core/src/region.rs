//! Extraction of `(1 - alpha)` regions from confidence curves and densities.
//!
//! Membership is decided at node centres; each member node stands for one
//! `h_1 x h_2` cell, so the area of a region is `members * cell_area`.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::error::{ArcdError, Result};
use crate::grid::{ConfidenceSurface, ParamGrid2D, SurfaceKind};

/// Mass tolerance for the threshold search.
pub const MASS_TOL: f64 = 1e-6;

#[derive(Clone, Debug, PartialEq)]
pub struct RegionResult {
    pub level: f64,
    /// `K`: the curve level for curve regions, the density cut otherwise.
    pub threshold: f64,
    pub grid: ParamGrid2D,
    members: Vec<bool>,
    pub area: f64,
    pub warnings: Vec<String>,
}

/// Region export record: `{level, threshold, area, cells: [[i, j], ...]}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegionJson {
    pub level: f64,
    pub threshold: f64,
    pub area: f64,
    pub cells: Vec<[usize; 2]>,
}

impl RegionResult {
    fn from_mask(level: f64, threshold: f64, grid: ParamGrid2D, members: Vec<bool>) -> Self {
        let count = members.iter().filter(|&&b| b).count();
        let area = count as f64 * grid.cell_area();
        let mut warnings = Vec::new();
        if count == 0 {
            warnings.push(format!("region at level {level} is empty"));
        }
        Self {
            level,
            threshold,
            grid,
            members,
            area,
            warnings,
        }
    }

    pub fn member_nodes(&self) -> Vec<usize> {
        (0..self.members.len()).filter(|&k| self.members[k]).collect()
    }

    pub fn member_mask(&self) -> &[bool] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.iter().filter(|&&b| b).count()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn is_member(&self, k: usize) -> bool {
        self.members[k]
    }

    /// True when the cell holding `point` is a member.
    pub fn contains(&self, point: [f64; 2]) -> bool {
        self.grid
            .nearest_node(point)
            .map(|k| self.members[k])
            .unwrap_or(false)
    }

    /// Cell-set inclusion on a shared grid.
    pub fn is_subset_of(&self, other: &RegionResult) -> bool {
        assert!(self.grid.same_geometry(&other.grid));
        self.members.iter().zip(&other.members).all(|(&a, &b)| !a || b)
    }

    /// `(symmetric difference area, union area)` on a shared grid.
    pub fn symmetric_difference(&self, other: &RegionResult) -> (f64, f64) {
        assert!(self.grid.same_geometry(&other.grid));
        let (mut diff, mut union) = (0usize, 0usize);
        for (&a, &b) in self.members.iter().zip(&other.members) {
            if a != b {
                diff += 1;
            }
            if a || b {
                union += 1;
            }
        }
        let area = self.grid.cell_area();
        (diff as f64 * area, union as f64 * area)
    }

    /// Whether any member cell lies within `band` of the line `phi_1 + phi_2 = 1`.
    pub fn touches_unit_root_line(&self, band: f64) -> bool {
        self.member_nodes().into_iter().any(|k| {
            let [a, b] = self.grid.node(k);
            a + b >= 1.0 - band
        })
    }

    /// Number of 4-connected components of the member cells.
    pub fn components(&self) -> usize {
        let side = self.grid.side();
        let mut seen = vec![false; self.members.len()];
        let mut count = 0;
        for start in 0..self.members.len() {
            if !self.members[start] || seen[start] {
                continue;
            }
            count += 1;
            let mut queue = VecDeque::from([start]);
            seen[start] = true;
            while let Some(k) = queue.pop_front() {
                let (i, j) = self.grid.coords(k);
                let mut push = |ii: usize, jj: usize| {
                    let q = self.grid.index(ii, jj);
                    if self.members[q] && !seen[q] {
                        seen[q] = true;
                        queue.push_back(q);
                    }
                };
                if i > 0 {
                    push(i - 1, j);
                }
                if i + 1 < side {
                    push(i + 1, j);
                }
                if j > 0 {
                    push(i, j - 1);
                }
                if j + 1 < side {
                    push(i, j + 1);
                }
            }
        }
        count
    }

    /// Outer edges of the member cells, each as a pair of endpoints.
    pub fn boundary_edges(&self) -> Vec<[[f64; 2]; 2]> {
        let side = self.grid.side();
        let (h1, h2) = (self.grid.h1(), self.grid.h2());
        let member = |i: isize, j: isize| {
            i >= 0 && j >= 0 && (i as usize) < side && (j as usize) < side && self.members[self.grid.index(i as usize, j as usize)]
        };
        let mut edges = Vec::new();
        for k in self.member_nodes() {
            let (i, j) = self.grid.coords(k);
            let [x, y] = self.grid.node(k);
            let (x0, x1, y0, y1) = (x - 0.5 * h1, x + 0.5 * h1, y - 0.5 * h2, y + 0.5 * h2);
            let (i, j) = (i as isize, j as isize);
            if !member(i - 1, j) {
                edges.push([[x0, y0], [x0, y1]]);
            }
            if !member(i + 1, j) {
                edges.push([[x1, y0], [x1, y1]]);
            }
            if !member(i, j - 1) {
                edges.push([[x0, y0], [x1, y0]]);
            }
            if !member(i, j + 1) {
                edges.push([[x0, y1], [x1, y1]]);
            }
        }
        edges
    }

    pub fn to_json(&self) -> RegionJson {
        RegionJson {
            level: self.level,
            threshold: self.threshold,
            area: self.area,
            cells: self
                .member_nodes()
                .into_iter()
                .map(|k| {
                    let (i, j) = self.grid.coords(k);
                    [i, j]
                })
                .collect(),
        }
    }
}

/// In-region nodes whose confidence-curve value is at most `level`.
pub fn region_from_curve(surface: &ConfidenceSurface, level: f64) -> Result<RegionResult> {
    if surface.kind != SurfaceKind::ConfidenceCurve {
        return Err(ArcdError::InvalidParameter("region_from_curve needs a confidence curve".into()));
    }
    if !(0.0..=1.0).contains(&level) {
        return Err(ArcdError::InvalidParameter(format!("level must lie in [0, 1], got {level}")));
    }
    let grid = &surface.grid;
    let members = (0..grid.len())
        .map(|k| grid.in_region(k) && surface.values[k] <= level)
        .collect();
    Ok(RegionResult::from_mask(level, level, grid.clone(), members))
}

fn mass_above(surface: &ConfidenceSurface, cut: f64) -> f64 {
    let area = surface.grid.cell_area();
    surface
        .values
        .iter()
        .zip(surface.grid.in_region_mask())
        .filter(|(v, &inside)| inside && **v > cut && **v > 0.0)
        .map(|(v, _)| v * area)
        .sum()
}

/// Bisection for `K >= 0` with `mass{value > K} = target`.
///
/// Stops once the mass error is within [`MASS_TOL`]; on a grid the mass is a
/// step function of `K`, so when no cut gets that close the search settles on
/// the largest cut whose region still carries at least `target`.
pub fn threshold_for_mass(surface: &ConfidenceSurface, target: f64) -> Result<f64> {
    let available = mass_above(surface, 0.0);
    if !(target > 0.0) || target >= available {
        return Err(ArcdError::NoSolution { level: target, available });
    }
    let mut lo = 0.0;
    let mut hi = surface
        .values
        .iter()
        .zip(surface.grid.in_region_mask())
        .filter(|(_, &inside)| inside)
        .map(|(v, _)| *v)
        .fold(0.0, f64::max);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let g = mass_above(surface, mid) - target;
        if g.abs() <= MASS_TOL {
            return Ok(mid);
        }
        if g > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= f64::EPSILON * hi {
            break;
        }
    }
    Ok(lo)
}

/// Region `{value > K}` whose mass equals `target` (see [`threshold_for_mass`]).
pub fn region_with_mass(surface: &ConfidenceSurface, target: f64, level: f64) -> Result<RegionResult> {
    let cut = threshold_for_mass(surface, target)?;
    let grid = &surface.grid;
    let members = (0..grid.len())
        .map(|k| grid.in_region(k) && surface.values[k] > cut)
        .collect();
    Ok(RegionResult::from_mask(level, cut, grid.clone(), members))
}

/// Highest-density region of a normalized density or posterior surface.
pub fn region_from_density(surface: &ConfidenceSurface, level: f64) -> Result<RegionResult> {
    if !matches!(surface.kind, SurfaceKind::Density | SurfaceKind::Posterior) {
        return Err(ArcdError::InvalidParameter("region_from_density needs a density surface".into()));
    }
    if !(level > 0.0 && level < 1.0) {
        return Err(ArcdError::InvalidParameter(format!("level must lie in (0, 1), got {level}")));
    }
    region_with_mass(surface, level, level)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bump(m: usize) -> ConfidenceSurface {
        let g = ParamGrid2D::new([-0.5, 0.5], [-0.5, 0.5], m).unwrap();
        let values = g
            .nodes()
            .map(|([a, b], _)| (-(a * a + b * b) / (2.0 * 0.01)).exp())
            .collect();
        let mut s = ConfidenceSurface::new(g, values, SurfaceKind::Density, None);
        s.normalize().unwrap();
        s
    }

    fn curve(m: usize) -> ConfidenceSurface {
        let g = ParamGrid2D::new([-0.5, 0.5], [-0.5, 0.5], m).unwrap();
        let values = g.nodes().map(|([a, b], _)| (10.0 * (a * a + b * b)).min(1.0)).collect();
        ConfidenceSurface::new(g, values, SurfaceKind::ConfidenceCurve, None)
    }

    #[test]
    fn curve_regions_nest() {
        let s = curve(50);
        let r90 = region_from_curve(&s, 0.90).unwrap();
        let r95 = region_from_curve(&s, 0.95).unwrap();
        assert!(r90.is_subset_of(&r95));
        assert!(r90.area <= r95.area);
        let r0 = region_from_curve(&s, 0.0).unwrap();
        assert_eq!(r0.member_nodes(), vec![s.grid.index(25, 25)]);
        assert!(region_from_curve(&s, 1.5).is_err());
    }

    #[test]
    fn empty_region_warns() {
        let mut s = curve(10);
        for v in &mut s.values {
            *v = 0.5;
        }
        let r = region_from_curve(&s, 0.1).unwrap();
        assert_eq!(r.area, 0.0);
        assert_eq!(r.warnings.len(), 1);
    }

    #[test]
    fn density_region_mass_and_shape() {
        let s = bump(200);
        let r = region_from_density(&s, 0.95).unwrap();
        let mass: f64 = r.member_nodes().iter().map(|&k| s.values[k]).sum::<f64>() * s.grid.cell_area();
        assert!(mass >= 0.95 - MASS_TOL);
        assert!(mass - 0.95 < 2.0 * s.values.iter().cloned().fold(0.0, f64::max) * s.grid.cell_area());
        assert_eq!(r.components(), 1);
        // disc of radius sqrt(chi2_2(0.95)) * 0.1
        let exact = std::f64::consts::PI * 5.991_464_547 * 0.01;
        assert!((r.area - exact).abs() < 0.03 * exact);
        let r80 = region_from_density(&s, 0.80).unwrap();
        assert!(r80.is_subset_of(&r));
    }

    #[test]
    fn density_level_near_one_takes_all_positive_cells() {
        let s = bump(40);
        let r = region_from_density(&s, 1.0 - 1e-9).unwrap();
        let mass: f64 = r.member_nodes().iter().map(|&k| s.values[k]).sum::<f64>() * s.grid.cell_area();
        assert!(mass >= 1.0 - 2.0 * MASS_TOL);
        let peak = s.values.iter().cloned().fold(0.0, f64::max);
        assert!(r.threshold < 1e-4 * peak);
        assert!(r.threshold < region_from_density(&s, 0.99).unwrap().threshold);
        assert!(region_from_density(&s, 1.0).is_err());
    }

    #[test]
    fn no_solution_when_mass_short() {
        let s = bump(20);
        assert!(matches!(threshold_for_mass(&s, 1.5), Err(ArcdError::NoSolution { .. })));
    }

    #[test]
    fn boundary_of_single_cell() {
        let g = ParamGrid2D::new([-0.5, 0.5], [-0.5, 0.5], 4).unwrap();
        let mut values = vec![1.0; g.len()];
        values[g.index(2, 2)] = 0.0;
        let s = ConfidenceSurface::new(g, values, SurfaceKind::ConfidenceCurve, None);
        let r = region_from_curve(&s, 0.5).unwrap();
        assert_eq!(r.boundary_edges().len(), 4);
        assert!(r.contains([0.01, -0.02]));
        assert!(!r.contains([0.3, 0.3]));
        let json = r.to_json();
        assert_eq!(json.cells, vec![[2, 2]]);
    }
}
