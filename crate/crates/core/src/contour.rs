//! Iso-level polylines of a surface by marching squares.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::grid::ConfidenceSurface;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ContourLevel {
    pub level: f64,
    pub polylines: Vec<Vec<[f64; 2]>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ContourSet {
    pub levels: Vec<ContourLevel>,
}

/// Polylines of `{value = level}` for each requested level. Cells with a
/// non-finite corner (e.g. nodes outside the triangle) are skipped.
pub fn contour_lines(surface: &ConfidenceSurface, levels: &[f64]) -> ContourSet {
    ContourSet {
        levels: levels
            .iter()
            .map(|&level| ContourLevel {
                level,
                polylines: trace(surface, level),
            })
            .collect(),
    }
}

// Edge ids: 2k for the edge from node k to its right neighbour, 2k + 1 for
// the edge from node k to its upper neighbour.
fn trace(surface: &ConfidenceSurface, level: f64) -> Vec<Vec<[f64; 2]>> {
    let g = &surface.grid;
    let m = g.m;
    let v = &surface.values;
    let crossing = |edge: usize| -> [f64; 2] {
        let k0 = edge / 2;
        let k1 = if edge.is_multiple_of(2) { k0 + 1 } else { k0 + g.side() };
        let (a, b) = (v[k0], v[k1]);
        let t = if a == b { 0.5 } else { ((level - a) / (b - a)).clamp(0.0, 1.0) };
        let (p, q) = (g.node(k0), g.node(k1));
        [p[0] + t * (q[0] - p[0]), p[1] + t * (q[1] - p[1])]
    };

    let mut segments: Vec<[usize; 2]> = Vec::new();
    for j in 0..m {
        for i in 0..m {
            let k = [g.index(i, j), g.index(i + 1, j), g.index(i + 1, j + 1), g.index(i, j + 1)];
            let c = k.map(|k| v[k]);
            if c.iter().any(|x| !x.is_finite()) {
                continue;
            }
            let bottom = 2 * k[0];
            let right = 2 * k[1] + 1;
            let top = 2 * k[3];
            let left = 2 * k[0] + 1;
            let case = (0..4).fold(0, |acc, n| acc | (((c[n] >= level) as usize) << n));
            let centre_high = c.iter().sum::<f64>() / 4.0 >= level;
            let pairs: &[[usize; 2]] = match case {
                0 | 15 => &[],
                1 | 14 => &[[left, bottom]],
                2 | 13 => &[[bottom, right]],
                3 | 12 => &[[left, right]],
                4 | 11 => &[[right, top]],
                6 | 9 => &[[bottom, top]],
                7 | 8 => &[[left, top]],
                5 if centre_high => &[[left, top], [bottom, right]],
                5 => &[[left, bottom], [right, top]],
                10 if centre_high => &[[left, bottom], [right, top]],
                _ => &[[left, top], [bottom, right]],
            };
            segments.extend_from_slice(pairs);
        }
    }

    let mut by_edge: HashMap<usize, Vec<usize>> = HashMap::new();
    for (s, seg) in segments.iter().enumerate() {
        for &e in seg {
            by_edge.entry(e).or_default().push(s);
        }
    }
    let mut used = vec![false; segments.len()];
    let next_segment = |edge: usize, used: &[bool]| by_edge[&edge].iter().copied().find(|&s| !used[s]);

    // open chains first (start at edges touched once), then closed loops
    let mut starts: Vec<usize> = (0..segments.len()).collect();
    starts.sort_by_key(|&s| segments[s].iter().all(|e| by_edge[e].len() > 1));
    let mut lines = Vec::new();
    for s in starts {
        if used[s] {
            continue;
        }
        used[s] = true;
        let [a, b] = segments[s];
        let (first, mut edge) = if by_edge[&b].len() == 1 { (b, a) } else { (a, b) };
        let mut edges = vec![first, edge];
        while let Some(t) = next_segment(edge, &used) {
            used[t] = true;
            edge = if segments[t][0] == edge { segments[t][1] } else { segments[t][0] };
            edges.push(edge);
        }
        lines.push(edges.into_iter().map(crossing).collect());
    }
    lines
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{ParamGrid2D, SurfaceKind};

    fn radial(m: usize) -> ConfidenceSurface {
        let g = ParamGrid2D::new([-1.0, 1.0], [-0.5, 0.5], m).unwrap();
        let values = g.nodes().map(|([a, b], _)| (a * a + b * b).sqrt()).collect();
        ConfidenceSurface::new(g, values, SurfaceKind::LogImpliedPrior, None)
    }

    #[test]
    fn circle_is_one_closed_loop() {
        let s = radial(80);
        let set = contour_lines(&s, &[0.3]);
        let lines = &set.levels[0].polylines;
        assert_eq!(lines.len(), 1);
        let line = &lines[0];
        assert_eq!(line.first(), line.last());
        for p in line {
            assert!((p[0].hypot(p[1]) - 0.3).abs() < 2e-3);
        }
    }

    #[test]
    fn clipped_circle_gives_open_arcs() {
        // radius 0.7 leaves the window through top and bottom
        let set = contour_lines(&radial(60), &[0.7]);
        let lines = &set.levels[0].polylines;
        assert_eq!(lines.len(), 2);
        for l in lines {
            assert_ne!(l.first(), l.last());
        }
    }

    #[test]
    fn no_crossings_no_lines() {
        let set = contour_lines(&radial(10), &[5.0, -1.0]);
        assert!(set.levels.iter().all(|l| l.polylines.is_empty()));
    }

    #[test]
    fn nan_cells_are_skipped() {
        let mut s = radial(40);
        for v in s.values.iter_mut().step_by(7) {
            *v = f64::NAN;
        }
        let set = contour_lines(&s, &[0.3]);
        assert!(set.levels[0].polylines.iter().flatten().all(|p| p[0].is_finite() && p[1].is_finite()));
    }
}
