//! File formats: JSON metric and scenario documents, grid CSV, SVG ternary plots.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::equilibrium::eps_from_sigma;
use crate::metric::{MetricError, MetricMatrix};
use crate::scenario::{resolve_metric, GridCell, MetricSpec, Scenario, ScenarioError, StabilityGrid};

pub const GRID_HEADER: &str = "alpha,beta,gamma,stable,index";

#[derive(Debug, Error)]
pub enum DocError {
    #[error("parse error: {0}")]
    Parse(String),
    #[error("invalid metric: {0}")]
    Metric(#[from] MetricError),
    #[error("invalid scenario: {0}")]
    Scenario(#[from] ScenarioError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl From<serde_json::Error> for DocError {
    fn from(e: serde_json::Error) -> Self {
        DocError::Parse(e.to_string())
    }
}

/// Reads a metric document: any tagged metric spec, validated with `tol`.
pub fn parse_metric_document(text: &str, tol: f64) -> Result<MetricMatrix, DocError> {
    let spec: MetricSpec = serde_json::from_str(text)?;
    Ok(resolve_metric(&spec, tol)?)
}

/// Writes `m` as an explicit metric document.
pub fn metric_document(m: &MetricMatrix) -> String {
    let spec = MetricSpec::Explicit { distances: m.to_rows() };
    let mut s = serde_json::to_string_pretty(&spec).expect("finite matrix serializes");
    s.push('\n');
    s
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioDocument {
    pub countries: Vec<String>,
    pub labor: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma: Option<f64>,
    pub t: f64,
    pub metric: MetricSpec,
}

/// A parsed scenario. `sigma` is kept only when the document supplied it.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioFile {
    pub scenario: Scenario,
    pub sigma: Option<f64>,
}

pub fn parse_scenario_document(text: &str, tol: f64) -> Result<ScenarioFile, DocError> {
    let doc: ScenarioDocument = serde_json::from_str(text)?;
    let eps = match (doc.epsilon, doc.sigma) {
        (Some(eps), None) => eps,
        (None, Some(sigma)) => {
            eps_from_sigma(sigma).map_err(|e| DocError::Scenario(ScenarioError::Equilibrium(e)))?
        }
        _ => return Err(DocError::Parse("exactly one of `epsilon` and `sigma` is required".into())),
    };
    let scenario = Scenario::new(doc.countries, doc.metric, doc.labor, eps, doc.t, tol)?;
    Ok(ScenarioFile {
        scenario,
        sigma: doc.sigma,
    })
}

pub fn scenario_document(file: &ScenarioFile) -> String {
    let s = &file.scenario;
    let doc = ScenarioDocument {
        countries: s.names().to_vec(),
        labor: s.labor().to_vec(),
        epsilon: if file.sigma.is_none() { Some(s.eps()) } else { None },
        sigma: file.sigma,
        t: s.t(),
        metric: s.spec().clone(),
    };
    let mut out = serde_json::to_string_pretty(&doc).expect("finite values serialize");
    out.push('\n');
    out
}

/// `x` with 9 significant digits, positional unless very large or small.
pub fn format_sig9(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return if x == 0.0 { "0.00000000".into() } else { x.to_string() };
    }
    let sci = format!("{x:.8e}");
    let exp: i32 = sci[sci.find('e').unwrap() + 1..].parse().unwrap();
    if (-5..9).contains(&exp) {
        let decimals = (8 - exp) as usize;
        format!("{x:.decimals$}")
    } else {
        sci
    }
}

pub fn grid_csv(cells: &[GridCell]) -> String {
    let mut out = String::with_capacity(48 * (cells.len() + 1));
    out.push_str(GRID_HEADER);
    out.push('\n');
    for c in cells {
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            format_sig9(c.alpha),
            format_sig9(c.beta),
            format_sig9(c.gamma),
            u8::from(c.stable),
            format_sig9(c.index)
        );
    }
    out
}

/// Parses grid CSV, returning the resolution and the cells.
pub fn parse_grid_csv(text: &str) -> Result<(usize, Vec<GridCell>), DocError> {
    let mut lines = text.lines();
    if lines.next() != Some(GRID_HEADER) {
        return Err(DocError::Parse(format!("expected header `{GRID_HEADER}`")));
    }
    let mut cells = Vec::new();
    for (k, line) in lines.enumerate() {
        let lineno = k + 2;
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 5 {
            return Err(DocError::Parse(format!("line {lineno}: expected 5 fields")));
        }
        let real = |s: &str| {
            s.parse::<f64>()
                .map_err(|_| DocError::Parse(format!("line {lineno}: bad number {s:?}")))
        };
        let stable = match fields[3] {
            "0" => false,
            "1" => true,
            other => return Err(DocError::Parse(format!("line {lineno}: bad stable flag {other:?}"))),
        };
        cells.push(GridCell {
            alpha: real(fields[0])?,
            beta: real(fields[1])?,
            gamma: real(fields[2])?,
            stable,
            index: real(fields[4])?,
        });
    }
    let r = (1..=cells.len())
        .find(|&r| (r + 1) * (r + 2) / 2 == cells.len())
        .ok_or_else(|| DocError::Parse(format!("{} rows is not a triangular grid", cells.len())))?;
    Ok((r, cells))
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

/// Ternary plot of a stability grid: first vertex on top, second bottom
/// left, third bottom right; blue dots are stable, red unstable.
pub fn grid_svg(grid: &StabilityGrid, labels: [&str; 3]) -> String {
    const SIZE: f64 = 600.0;
    const MARGIN: f64 = 60.0;
    let side = SIZE - 2.0 * MARGIN;
    let height = side * 3f64.sqrt() / 2.0;
    let top = (SIZE / 2.0, MARGIN);
    let left = (MARGIN, MARGIN + height);
    let right = (SIZE - MARGIN, MARGIN + height);
    let canvas_h = height + 2.0 * MARGIN;
    let radius = (0.45 * side / grid.resolution as f64).clamp(0.5, 6.0);

    let mut out = String::new();
    let _ = writeln!(out, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{SIZE:.0}" height="{canvas_h:.3}" viewBox="0 0 {SIZE:.0} {canvas_h:.3}">"#
    );
    let _ = writeln!(
        out,
        r#"<polygon points="{:.3},{:.3} {:.3},{:.3} {:.3},{:.3}" fill="none" stroke="black" stroke-width="1"/>"#,
        top.0, top.1, left.0, left.1, right.0, right.1
    );
    let _ = writeln!(out, r#"<g stroke="none">"#);
    for c in &grid.cells {
        let x = c.alpha * top.0 + c.beta * left.0 + c.gamma * right.0;
        let y = c.alpha * top.1 + c.beta * left.1 + c.gamma * right.1;
        let fill = if c.stable { "blue" } else { "red" };
        let _ = writeln!(out, r#"<circle cx="{x:.3}" cy="{y:.3}" r="{radius:.3}" fill="{fill}"/>"#);
    }
    let _ = writeln!(out, "</g>");
    let font = r#"font-family="sans-serif" font-size="16""#;
    let _ = writeln!(
        out,
        r#"<text x="{:.3}" y="{:.3}" text-anchor="middle" {font}>{}</text>"#,
        top.0,
        top.1 - 16.0,
        xml_escape(labels[0])
    );
    let _ = writeln!(
        out,
        r#"<text x="{:.3}" y="{:.3}" text-anchor="middle" {font}>{}</text>"#,
        left.0,
        left.1 + 28.0,
        xml_escape(labels[1])
    );
    let _ = writeln!(
        out,
        r#"<text x="{:.3}" y="{:.3}" text-anchor="middle" {font}>{}</text>"#,
        right.0,
        right.1 + 28.0,
        xml_escape(labels[2])
    );
    out.push_str("</svg>\n");
    out
}

/// Writes via a temporary file in the same directory, renamed into place.
pub fn write_atomic(path: &Path, contents: &[u8]) -> std::io::Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(contents)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metric::{bipartite_metric, discrete_metric};
    use crate::scenario::scan_triangle;
    use crate::spectral::StabilityOptions;

    #[test]
    fn sig9_formatting() {
        assert_eq!(format_sig9(0.5), "0.500000000");
        assert_eq!(format_sig9(1.0), "1.00000000");
        assert_eq!(format_sig9(0.02), "0.0200000000");
        assert_eq!(format_sig9(3f64.sqrt().recip()), "0.577350269");
        assert_eq!(format_sig9(0.0), "0.00000000");
        assert_eq!(format_sig9(0.999_999_999_9), "1.00000000");
        assert_eq!(format_sig9(1.5e-7), "1.50000000e-7");
        for x in [0.123456789, 0.987654321, 1e-3, 0.3333333333] {
            let back: f64 = format_sig9(x).parse().unwrap();
            assert!((back - x).abs() <= 5e-9 * x.abs());
        }
    }

    #[test]
    fn metric_document_round_trip() {
        let m = bipartite_metric(3, 2).unwrap().scaled(0.1).unwrap();
        let text = metric_document(&m);
        assert_eq!(parse_metric_document(&text, 1e-12).unwrap(), m);
        assert!(text.contains(r#""kind": "explicit""#));
    }

    #[test]
    fn metric_document_errors() {
        assert!(matches!(parse_metric_document("{", 1e-12), Err(DocError::Parse(_))));
        assert!(matches!(parse_metric_document(r#"{"kind":"ring","n":3}"#, 1e-12), Err(DocError::Parse(_))));
        let bad = r#"{"kind":"explicit","distances":[[0,1,3],[1,0,1],[3,1,0]]}"#;
        assert!(matches!(
            parse_metric_document(bad, 1e-12),
            Err(DocError::Metric(MetricError::TriangleViolation { .. }))
        ));
    }

    #[test]
    fn scenario_document_round_trip() {
        let text = r#"{
            "countries": ["a","b","c","d","e","f"],
            "labor": [1,1,1,1,1,1],
            "sigma": 1.0256410256410255,
            "t": 0.75,
            "metric": {"kind": "bipartite", "n": 3, "m": 3}
        }"#;
        let file = parse_scenario_document(text, 1e-12).unwrap();
        assert!((file.scenario.eps() - 40.0).abs() < 1e-9);
        let again = parse_scenario_document(&scenario_document(&file), 1e-12).unwrap();
        assert_eq!(again, file);
    }

    #[test]
    fn scenario_document_errors() {
        let both = r#"{"countries":["a"],"labor":[1],"epsilon":2,"sigma":2,"t":0.5,"metric":{"kind":"discrete","n":1}}"#;
        assert!(matches!(parse_scenario_document(both, 1e-12), Err(DocError::Parse(_))));
        let extra = r#"{"countries":["a"],"labor":[1],"epsilon":2,"t":0.5,"metric":{"kind":"discrete","n":1},"x":1}"#;
        assert!(matches!(parse_scenario_document(extra, 1e-12), Err(DocError::Parse(_))));
        let short = r#"{"countries":["a"],"labor":[1,1],"epsilon":2,"t":0.5,"metric":{"kind":"discrete","n":2}}"#;
        assert!(matches!(parse_scenario_document(short, 1e-12), Err(DocError::Scenario(_))));
    }

    #[test]
    fn grid_csv_round_trip() {
        let d = discrete_metric(4).unwrap();
        let k = bipartite_metric(2, 2).unwrap();
        let grid = scan_triangle(&d, &k, &d, 6, &StabilityOptions::default()).unwrap();
        let text = grid_csv(&grid.cells);
        assert!(text.starts_with("alpha,beta,gamma,stable,index\n"));
        let (r, cells) = parse_grid_csv(&text).unwrap();
        assert_eq!(r, 6);
        assert_eq!(grid_csv(&cells), text);
        assert!(parse_grid_csv("alpha,beta\n").is_err());
        assert!(parse_grid_csv(&format!("{GRID_HEADER}\n1,0,0,1,1\n0,1,0,1,1\n")).is_err());
    }

    #[test]
    fn svg_marks_cells() {
        let k = bipartite_metric(3, 3).unwrap();
        let d = discrete_metric(6).unwrap();
        let grid = scan_triangle(&k, &d, &d, 4, &StabilityOptions::default()).unwrap();
        let svg = grid_svg(&grid, ["k33", "d6", "a<b"]);
        assert_eq!(svg.matches("<circle").count(), 15);
        assert!(svg.contains(r#"fill="red""#) && svg.contains(r#"fill="blue""#));
        assert!(svg.contains(">k33</text>") && svg.contains(">a&lt;b</text>"));
        assert!(svg.contains(r#"version="1.1""#));
    }

    #[test]
    fn atomic_write_replaces() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("out.txt");
        write_atomic(&p, b"one").unwrap();
        write_atomic(&p, b"two").unwrap();
        assert_eq!(std::fs::read_to_string(&p).unwrap(), "two");
        assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 1);
    }
}
