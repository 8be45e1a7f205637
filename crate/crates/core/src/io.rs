//! Series, surface and study-result files.

use serde::{Deserialize, Serialize};

use crate::ar::SeriesSample;
use crate::error::{ArcdError, Result};
use crate::grid::ConfidenceSurface;

fn csv_err(e: csv::Error) -> ArcdError {
    ArcdError::Parse(e.to_string())
}

/// Single-column series; blank lines are skipped, extra columns ignored.
pub fn read_series_csv(text: &str, has_header: bool) -> Result<SeriesSample> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(has_header)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut values = Vec::new();
    for (line, record) in reader.records().enumerate() {
        let record = record.map_err(csv_err)?;
        let Some(field) = record.get(0).filter(|f| !f.is_empty()) else {
            continue;
        };
        let v: f64 = field
            .parse()
            .map_err(|_| ArcdError::Parse(format!("row {}: '{field}' is not a number", line + 1)))?;
        if !v.is_finite() {
            return Err(ArcdError::Parse(format!("row {}: non-finite value", line + 1)));
        }
        values.push(v);
    }
    Ok(SeriesSample::new(values))
}

pub fn write_series_csv(series: &SeriesSample, header: Option<&str>) -> String {
    let mut out = String::new();
    if let Some(h) = header {
        out.push_str(h);
        out.push('\n');
    }
    for v in &series.values {
        out.push_str(&v.to_string());
        out.push('\n');
    }
    out
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SurfaceRow {
    pub phi1: f64,
    pub phi2: f64,
    pub value: f64,
    pub in_region: u8,
}

/// `phi1,phi2,value,in_region` in node order, full precision.
pub fn surface_to_csv(surface: &ConfidenceSurface) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    for (k, (node, inside)) in surface.grid.nodes().enumerate() {
        w.serialize(SurfaceRow {
            phi1: node[0],
            phi2: node[1],
            value: surface.values[k],
            in_region: inside as u8,
        })
        .expect("writing to memory");
    }
    String::from_utf8(w.into_inner().expect("writing to memory")).expect("csv output is utf-8")
}

pub fn parse_surface_csv(text: &str) -> Result<Vec<SurfaceRow>> {
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    let header = reader.headers().map_err(csv_err)?.clone();
    if header.iter().collect::<Vec<_>>() != ["phi1", "phi2", "value", "in_region"] {
        return Err(ArcdError::Parse(format!("unexpected surface header {header:?}")));
    }
    reader.deserialize().map(|r| r.map_err(csv_err)).collect()
}

/// Serializes rows with a header derived from the row type.
pub fn rows_to_csv<T: Serialize>(rows: &[T]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r).expect("writing to memory");
    }
    String::from_utf8(w.into_inner().expect("writing to memory")).expect("csv output is utf-8")
}

pub fn parse_rows_csv<T: for<'de> Deserialize<'de>>(text: &str) -> Result<Vec<T>> {
    csv::Reader::from_reader(text.as_bytes())
        .deserialize()
        .map(|r| r.map_err(csv_err))
        .collect()
}

/// `x` with six significant digits, for terminal output.
pub fn sig6(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    let exp = x.abs().log10().floor() as i32;
    if (-4..6).contains(&exp) {
        let decimals = (5 - exp).max(0) as usize;
        format!("{x:.decimals$}")
    } else {
        format!("{x:.5e}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{ParamGrid2D, SurfaceKind};

    #[test]
    fn series_round_trip() {
        let s = SeriesSample::new(vec![1.0, -0.5, 1.75, 1e-17, 123456.789]);
        for header in [None, Some("y")] {
            let text = write_series_csv(&s, header);
            assert_eq!(read_series_csv(&text, header.is_some()).unwrap(), s);
        }
    }

    #[test]
    fn series_parse_errors() {
        assert!(matches!(read_series_csv("1.0\nabc\n", false), Err(ArcdError::Parse(_))));
        // header read as data
        assert!(read_series_csv("y\n1.0\n", false).is_err());
        let s = read_series_csv("y\n 1.5 \n\n2.5\n", true).unwrap();
        assert_eq!(s.values, vec![1.5, 2.5]);
    }

    #[test]
    fn surface_round_trip() {
        let g = ParamGrid2D::new([-0.3, 0.7], [0.1, 0.9], 7).unwrap();
        let values: Vec<f64> = (0..g.len()).map(|k| (k as f64).sin() / 3.0).collect();
        let s = ConfidenceSurface::new(g.clone(), values.clone(), SurfaceKind::Density, None);
        let text = surface_to_csv(&s);
        assert!(text.starts_with("phi1,phi2,value,in_region\n"));
        let rows = parse_surface_csv(&text).unwrap();
        assert_eq!(rows.len(), g.len());
        for (k, r) in rows.iter().enumerate() {
            assert_eq!([r.phi1, r.phi2], g.node(k));
            assert_eq!(r.value, values[k]);
            assert_eq!(r.in_region == 1, g.in_region(k));
        }
    }

    #[test]
    fn nan_values_survive() {
        let g = ParamGrid2D::new([0.0, 1.0], [0.0, 1.0], 1).unwrap();
        let s = ConfidenceSurface::new(g, vec![f64::NAN, 1.0, 2.0, 3.0], SurfaceKind::LogImpliedPrior, None);
        let rows = parse_surface_csv(&surface_to_csv(&s)).unwrap();
        assert!(rows[0].value.is_nan());
    }

    #[test]
    fn six_significant_digits() {
        assert_eq!(sig6(0.4719123), "0.471912");
        assert_eq!(sig6(1.0441), "1.04410");
        assert_eq!(sig6(-0.25031), "-0.250310");
        assert_eq!(sig6(123.4567891), "123.457");
        assert_eq!(sig6(1.5e-7), "1.50000e-7");
    }
}
