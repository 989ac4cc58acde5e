//! Deterministic text output: CSV tables and JSON reports whose floating-point
//! numbers are written with 17 significant digits.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Serialize, Serializer};
use serde_json::value::RawValue;

/// Version of the JSON report layout.
pub const SCHEMA: u32 = 1;

/// `x` with 17 significant digits in scientific notation, or `NaN`/`inf`.
pub fn fmt_f64(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        x.to_string()
    }
}

/// A float that serializes with [`fmt_f64`]; non-finite values become `null`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Num(pub f64);

impl Serialize for Num {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        if !self.0.is_finite() {
            return s.serialize_none();
        }
        let raw = RawValue::from_string(fmt_f64(self.0)).map_err(serde::ser::Error::custom)?;
        raw.serialize(s)
    }
}

/// Pretty-printed JSON with a trailing newline.
pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut text = serde_json::to_string_pretty(value).expect("reports serialize");
    text.push('\n');
    text
}

/// A CSV table with a fixed header.
pub struct Csv {
    text: String,
    columns: usize,
}

/// A CSV cell.
pub enum Cell {
    F(f64),
    I(i64),
    S(String),
}

impl Csv {
    pub fn new(header: &[&str]) -> Self {
        Self { text: format!("{}\n", header.join(",")), columns: header.len() }
    }

    pub fn row(&mut self, cells: &[Cell]) {
        assert_eq!(cells.len(), self.columns, "row width must match the header");
        let rendered: Vec<String> = cells
            .iter()
            .map(|c| match c {
                Cell::F(x) => fmt_f64(*x),
                Cell::I(i) => i.to_string(),
                Cell::S(s) => s.replace([',', '\n'], " "),
            })
            .collect();
        let _ = writeln!(self.text, "{}", rendered.join(","));
    }

    pub fn finish(self) -> String {
        self.text
    }
}

/// Output formats requested on the command line.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Formats {
    pub csv: bool,
    pub json: bool,
    pub svg: bool,
}

impl Formats {
    pub fn parse(list: &str) -> Result<Self, String> {
        let mut f = Formats { csv: false, json: false, svg: false };
        for item in list.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            match item {
                "csv" => f.csv = true,
                "json" => f.json = true,
                "svg" => f.svg = true,
                other => return Err(format!("unknown output format {other:?} (expected csv, json or svg)")),
            }
        }
        Ok(f)
    }
}

/// Writes `contents` to `dir/name` and returns the path.
pub fn write_file(dir: &Path, name: &str, contents: &str) -> std::io::Result<PathBuf> {
    fs::create_dir_all(dir)?;
    let path = dir.join(name);
    fs::write(&path, contents)?;
    Ok(path)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seventeen_digits() {
        assert_eq!(fmt_f64(0.1), "1.0000000000000001e-1");
        assert_eq!(fmt_f64(-1.9), "-1.8999999999999999e0");
        assert_eq!(fmt_f64(0.0), "0.0000000000000000e0");
        assert_eq!(fmt_f64(f64::NAN), "NaN");
    }

    #[test]
    fn numbers_round_trip_through_json() {
        let text = serde_json::to_string(&vec![Num(0.1), Num(-2.5e-300), Num(f64::INFINITY)]).unwrap();
        assert_eq!(text, "[1.0000000000000001e-1,-2.5000000000000000e-300,null]");
        let back: Vec<Option<f64>> = serde_json::from_str(&text).unwrap();
        assert_eq!(back, vec![Some(0.1), Some(-2.5e-300), None]);
    }

    #[test]
    fn csv_header_is_fixed() {
        let mut csv = Csv::new(&["k2", "re", "im"]);
        csv.row(&[Cell::F(0.5), Cell::F(1.0), Cell::F(-1.0)]);
        assert_eq!(csv.finish(), "k2,re,im\n5.0000000000000000e-1,1.0000000000000000e0,-1.0000000000000000e0\n");
    }

    #[test]
    fn formats_parse() {
        assert_eq!(Formats::parse("csv,svg").unwrap(), Formats { csv: true, json: false, svg: true });
        assert!(Formats::parse("png").is_err());
    }
}
