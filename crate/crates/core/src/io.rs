//! Scan CSV files, plot-ready curves and key=value reports.
//!
//! Scan files have the header `position_mm,expected_rate,counts` and one row
//! per lattice point. Momentum scans carry a leading comment line
//! `# mapping_scale_radpermm_per_mm=<value>`. Floats are written in the
//! shortest form that parses back to the same value, so a scan written and
//! read again is bit-identical.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde_json::{Map, Value};

use crate::apparatus::{ScanMode, ScanResult};
use crate::engine::Density1D;
use crate::error::{Error, Result};

pub const SCAN_HEADER: &str = "position_mm,expected_rate,counts";
pub const MAPPING_COMMENT: &str = "# mapping_scale_radpermm_per_mm=";

pub fn format_scan_csv(sr: &ScanResult) -> String {
    let mut out = String::new();
    if sr.mode == ScanMode::Momentum {
        writeln!(out, "{MAPPING_COMMENT}{}", sr.mapping_scale).unwrap();
    }
    out.push_str(SCAN_HEADER);
    out.push('\n');
    for (i, (x, r)) in sr.positions_mm.iter().zip(&sr.expected_rate).enumerate() {
        let c = sr.counts.as_ref().map_or(0, |c| c[i]);
        writeln!(out, "{x},{r},{c}").unwrap();
    }
    out
}

/// Columns of a scan file.
#[derive(Debug, Clone, PartialEq)]
pub struct ScanData {
    pub positions_mm: Vec<f64>,
    pub expected_rate: Vec<f64>,
    pub counts: Vec<u64>,
    pub mapping_scale: Option<f64>,
}

pub fn parse_scan_csv(text: &str, path: &Path) -> Result<ScanData> {
    let schema = |line: usize, reason: String| Error::Schema {
        path: path.to_path_buf(),
        line,
        reason,
    };
    let mut mapping_scale = None;
    let mut header_seen = false;
    let mut data = ScanData {
        positions_mm: Vec::new(),
        expected_rate: Vec::new(),
        counts: Vec::new(),
        mapping_scale: None,
    };
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim_end_matches('\r');
        if line.starts_with('#') {
            if header_seen {
                return Err(schema(line_no, "comment after header".into()));
            }
            if let Some(v) = line.strip_prefix(MAPPING_COMMENT) {
                let scale: f64 = v
                    .trim()
                    .parse()
                    .map_err(|_| schema(line_no, format!("bad mapping scale `{v}`")))?;
                if !(scale.is_finite() && scale > 0.0) {
                    return Err(schema(line_no, format!("mapping scale must be > 0, got {scale}")));
                }
                mapping_scale = Some(scale);
            }
            continue;
        }
        if !header_seen {
            if line != SCAN_HEADER {
                return Err(schema(line_no, format!("expected header `{SCAN_HEADER}`, found `{line}`")));
            }
            header_seen = true;
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 3 {
            return Err(schema(line_no, format!("expected 3 columns, found {}", fields.len())));
        }
        let x: f64 = fields[0]
            .trim()
            .parse()
            .map_err(|_| schema(line_no, format!("position `{}` is not a number", fields[0])))?;
        let r: f64 = fields[1]
            .trim()
            .parse()
            .map_err(|_| schema(line_no, format!("expected_rate `{}` is not a number", fields[1])))?;
        let c: u64 = fields[2]
            .trim()
            .parse()
            .map_err(|_| schema(line_no, format!("counts `{}` is not a non-negative integer", fields[2])))?;
        if !x.is_finite() {
            return Err(schema(line_no, format!("position {x} is not finite")));
        }
        if !(r.is_finite() && r >= 0.0) {
            return Err(schema(line_no, format!("expected_rate {r} must be finite and >= 0")));
        }
        if let Some(&prev) = data.positions_mm.last() {
            if x <= prev {
                return Err(schema(line_no, format!("position {x} does not increase (previous {prev})")));
            }
        }
        data.positions_mm.push(x);
        data.expected_rate.push(r);
        data.counts.push(c);
    }
    if !header_seen {
        return Err(schema(0, "missing header".into()));
    }
    if data.counts.iter().all(|c| *c == 0) {
        return Err(schema(0, "all counts are zero".into()));
    }
    data.mapping_scale = mapping_scale;
    Ok(data)
}

pub fn read_scan_csv(path: &Path) -> Result<ScanData> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_scan_csv(&text, path)
}

/// Scan curve with the fitted background alongside (empty column when no
/// background was fitted).
pub fn format_plot_csv(sr: &ScanResult, background: Option<&[f64]>) -> String {
    let mut out = String::from("position_mm,expected_rate,counts,fit_background\n");
    for (i, (x, r)) in sr.positions_mm.iter().zip(&sr.expected_rate).enumerate() {
        let c = sr.counts.as_ref().map_or(0, |c| c[i]);
        match background {
            Some(bg) => writeln!(out, "{x},{r},{c},{}", bg[i]).unwrap(),
            None => writeln!(out, "{x},{r},{c},").unwrap(),
        }
    }
    out
}

/// A conditional density as `<coordinate>,density` rows, skipping the
/// negligible tails (below 1e-12 of the peak).
pub fn format_density_csv(d: &Density1D, coordinate: &str) -> String {
    let peak = d.values().iter().cloned().fold(0.0, f64::max);
    let mut out = format!("{coordinate},density\n");
    for (x, v) in d.grid().coords().zip(d.values()) {
        if *v > 1e-12 * peak {
            writeln!(out, "{x},{v}").unwrap();
        }
    }
    out
}

/// Ordered key/value report rendered both as `key=value` text and as JSON.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ReportDoc {
    entries: Vec<(String, Value)>,
}

impl ReportDoc {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, key: impl Into<String>, value: impl Into<Value>) {
        self.entries.push((key.into(), value.into()));
    }

    /// Appends every field of a serializable struct, optionally prefixed.
    pub fn push_fields(&mut self, prefix: &str, value: &impl serde::Serialize) {
        let Ok(Value::Object(map)) = serde_json::to_value(value) else {
            panic!("report section must serialize to an object")
        };
        for (k, v) in map {
            self.push(format!("{prefix}{k}"), v);
        }
    }

    pub fn entries(&self) -> &[(String, Value)] {
        &self.entries
    }

    pub fn get(&self, key: &str) -> Option<&Value> {
        self.entries.iter().find(|(k, _)| k == key).map(|(_, v)| v)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.entries {
            let text = match v {
                Value::String(s) => s.clone(),
                Value::Null => "none".to_string(),
                other => other.to_string(),
            };
            writeln!(out, "{k}={text}").unwrap();
        }
        out
    }

    pub fn to_json(&self) -> String {
        let map: Map<String, Value> = self.entries.iter().cloned().collect();
        let mut s = serde_json::to_string_pretty(&Value::Object(map)).expect("json values serialize");
        s.push('\n');
        s
    }
}

/// Parses `key=value` lines; blank lines and `#` comments are skipped.
pub fn parse_report_text(text: &str) -> Result<Vec<(String, String)>> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty() && !l.starts_with('#'))
        .map(|(i, l)| {
            l.split_once('=')
                .map(|(k, v)| (k.to_string(), v.to_string()))
                .ok_or_else(|| Error::Schema {
                    path: PathBuf::from("report.txt"),
                    line: i + 1,
                    reason: format!("expected key=value, found `{l}`"),
                })
        })
        .collect()
}

/// Writes a set of named files into `dir`, creating it if needed. If any
/// write fails the files already written are removed.
pub fn write_files(dir: &Path, files: &[(String, String)]) -> Result<()> {
    let io_err = |path: &Path| {
        let path = path.to_path_buf();
        move |source| Error::Io { path, source }
    };
    std::fs::create_dir_all(dir).map_err(io_err(dir))?;
    let mut written = Vec::new();
    for (name, contents) in files {
        let path = dir.join(name);
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent).map_err(io_err(parent))?;
        }
        if let Err(e) = std::fs::write(&path, contents) {
            for p in &written {
                let _ = std::fs::remove_file(p);
            }
            return Err(io_err(&path)(e));
        }
        written.push(path);
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::apparatus::ScanConfig;

    fn scan(mode: ScanMode) -> ScanResult {
        let cfg = ScanConfig::nominal(mode);
        ScanResult {
            mode,
            positions_mm: vec![-0.1, 0.1 / 3.0, 0.2],
            expected_rate: vec![1e-7, 0.123456789012345678, 2.5],
            counts: Some(vec![0, 17, 10_000]),
            mapping_scale: if mode == ScanMode::Momentum { 80.553_659_9 } else { 1.0 },
            fixed_slit_mm: Some(0.0),
            wing_sigma_mm: None,
            config: cfg,
        }
    }

    #[test]
    fn scan_csv_round_trips_exactly() {
        for mode in [ScanMode::Position, ScanMode::Momentum] {
            let sr = scan(mode);
            let text = format_scan_csv(&sr);
            let back = parse_scan_csv(&text, Path::new("s.csv")).unwrap();
            assert_eq!(back.positions_mm, sr.positions_mm);
            assert_eq!(back.expected_rate, sr.expected_rate);
            assert_eq!(Some(back.counts), sr.counts);
            let expect_scale = (mode == ScanMode::Momentum).then_some(sr.mapping_scale);
            assert_eq!(back.mapping_scale, expect_scale);
        }
    }

    #[test]
    fn scan_csv_layout() {
        let text = format_scan_csv(&scan(ScanMode::Momentum));
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "# mapping_scale_radpermm_per_mm=80.5536599");
        assert_eq!(lines[1], SCAN_HEADER);
        assert_eq!(lines[2], "-0.1,0.0000001,0");
        assert!(text.ends_with('\n'));
        assert_eq!(format_scan_csv(&scan(ScanMode::Position)).lines().next(), Some(SCAN_HEADER));
    }

    #[test]
    fn malformed_row_names_line() {
        let text = "position_mm,expected_rate,counts\n0.0,1.0,3\n0.1,abc,4\n";
        match parse_scan_csv(text, Path::new("bad.csv")) {
            Err(Error::Schema { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
        let text = "position_mm,expected_rate,counts\n0.0,1.0\n";
        assert!(matches!(parse_scan_csv(text, Path::new("b")), Err(Error::Schema { line: 2, .. })));
        let text = "position_mm,expected_rate,counts\n0.0,1.0,-3\n";
        assert!(matches!(parse_scan_csv(text, Path::new("b")), Err(Error::Schema { line: 2, .. })));
        let text = "x,y,z\n";
        assert!(matches!(parse_scan_csv(text, Path::new("b")), Err(Error::Schema { line: 1, .. })));
    }

    #[test]
    fn non_monotone_and_zero_counts_rejected() {
        let text = "position_mm,expected_rate,counts\n0.0,1.0,3\n0.0,1.0,4\n";
        let err = parse_scan_csv(text, Path::new("b")).unwrap_err();
        assert!(matches!(err, Error::Schema { line: 3, .. }));
        assert_eq!(err.exit_code(), 3);
        let text = "position_mm,expected_rate,counts\n0.0,1.0,0\n0.1,1.0,0\n";
        assert!(matches!(parse_scan_csv(text, Path::new("b")), Err(Error::Schema { .. })));
    }

    #[test]
    fn report_text_and_json_agree() {
        let mut doc = ReportDoc::new();
        doc.push("product_hbar2", 0.0036);
        doc.push("epr_violated", true);
        doc.push("provenance", "theory_grid");
        doc.push("seed", 7u64);
        doc.push("config.condition_x2_mm", Value::Null);
        let text = doc.to_text();
        assert_eq!(
            text,
            "product_hbar2=0.0036\nepr_violated=true\nprovenance=theory_grid\nseed=7\nconfig.condition_x2_mm=none\n"
        );
        let parsed = parse_report_text(&text).unwrap();
        assert_eq!(parsed.len(), 5);
        let json: Value = serde_json::from_str(&doc.to_json()).unwrap();
        assert_eq!(json["product_hbar2"], 0.0036);
        assert_eq!(json["seed"], 7);
    }

    #[test]
    fn files_written_into_nested_dir() {
        let tmp = tempfile::tempdir().unwrap();
        let dir = tmp.path().join("a/b");
        write_files(&dir, &[("x.txt".into(), "1\n".into()), ("sub/y.txt".into(), "2\n".into())]).unwrap();
        assert_eq!(std::fs::read_to_string(dir.join("sub/y.txt")).unwrap(), "2\n");
    }
}
