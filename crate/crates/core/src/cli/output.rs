//! Flat-file emission: CSV (header row, LF endings) and a JSON mirror.

use std::fs;
use std::io::{self, Write};
use std::path::Path;

use serde_json::{Map, Number, Value};

/// Shortest `%.12g`-style rendering, so identical numbers always print
/// identically. Non-finite values print as `nan`, `inf`, `-inf`.
pub fn fmt_g(x: f64) -> String {
    const SIG: i32 = 12;
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return if x.is_sign_negative() { "-0".into() } else { "0".into() };
    }
    let sci = format!("{:.*e}", (SIG - 1) as usize, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if exp < -4 || exp >= SIG {
        let m = trim_zeros(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{m}e{sign}{:02}", exp.abs())
    } else {
        let decimals = (SIG - 1 - exp).max(0) as usize;
        trim_zeros(&format!("{:.*}", decimals, x)).to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    /// Blank in CSV, `null` in JSON.
    Missing,
    Text(String),
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Num(x)
    }
}

impl From<Option<f64>> for Cell {
    fn from(x: Option<f64>) -> Self {
        x.map_or(Cell::Missing, Cell::Num)
    }
}

impl From<&str> for Cell {
    fn from(s: &str) -> Self {
        Cell::Text(s.to_string())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(header: Vec<&'static str>) -> Self {
        Table { header, rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn write_csv<W: Write + ?Sized>(&self, w: &mut W) -> io::Result<()> {
        writeln!(w, "{}", self.header.join(","))?;
        for row in &self.rows {
            let line: Vec<String> = row
                .iter()
                .map(|c| match c {
                    Cell::Num(x) => fmt_g(*x),
                    Cell::Missing => String::new(),
                    Cell::Text(s) => s.clone(),
                })
                .collect();
            writeln!(w, "{}", line.join(","))?;
        }
        Ok(())
    }

    pub fn to_json(&self) -> Value {
        let records = self
            .rows
            .iter()
            .map(|row| {
                let mut obj = Map::new();
                for (key, cell) in self.header.iter().zip(row) {
                    obj.insert((*key).to_string(), cell_json(cell));
                }
                Value::Object(obj)
            })
            .collect();
        Value::Array(records)
    }

    pub fn write<W: Write + ?Sized>(&self, w: &mut W, format: Format) -> io::Result<()> {
        match format {
            Format::Csv => self.write_csv(w),
            Format::Json => {
                serde_json::to_writer_pretty(&mut *w, &self.to_json())?;
                writeln!(w)
            }
        }
    }

    pub fn write_file(&self, path: &Path, format: Format) -> io::Result<()> {
        let mut buf = Vec::new();
        self.write(&mut buf, format)?;
        fs::write(path, buf)
    }
}

pub fn cell_json(cell: &Cell) -> Value {
    match cell {
        Cell::Num(x) => Number::from_f64(*x).map_or(Value::Null, Value::Number),
        Cell::Missing => Value::Null,
        Cell::Text(s) => Value::String(s.clone()),
    }
}

/// Ordered `key = value` summary, printed as text or as one JSON object.
#[derive(Debug, Default, Clone)]
pub struct Summary {
    entries: Vec<(&'static str, Cell)>,
}

impl Summary {
    pub fn add(&mut self, key: &'static str, value: impl Into<Cell>) -> &mut Self {
        self.entries.push((key, value.into()));
        self
    }

    pub fn write<W: Write + ?Sized>(&self, w: &mut W, format: Format) -> io::Result<()> {
        match format {
            Format::Csv => {
                for (k, v) in &self.entries {
                    let v = match v {
                        Cell::Num(x) => fmt_g(*x),
                        Cell::Missing => "none".into(),
                        Cell::Text(s) => s.clone(),
                    };
                    writeln!(w, "{k} = {v}")?;
                }
                Ok(())
            }
            Format::Json => {
                let mut obj = Map::new();
                for (k, v) in &self.entries {
                    obj.insert((*k).to_string(), cell_json(v));
                }
                serde_json::to_writer(&mut *w, &Value::Object(obj))?;
                writeln!(w)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn twelve_significant_digits() {
        assert_eq!(fmt_g(0.5), "0.5");
        assert_eq!(fmt_g(0.500000000056321), "0.500000000056");
        assert_eq!(fmt_g(1.0 / 3.0), "0.333333333333");
        assert_eq!(fmt_g(-1e-5), "-1e-05");
        assert_eq!(fmt_g(1.5e-7), "1.5e-07");
        assert_eq!(fmt_g(-500.0), "-500");
        assert_eq!(fmt_g(123456789012.0), "123456789012");
        assert_eq!(fmt_g(1234567890123.0), "1.23456789012e+12");
        assert_eq!(fmt_g(0.0001), "0.0001");
        assert_eq!(fmt_g(0.0), "0");
        assert_eq!(fmt_g(f64::NAN), "nan");
        assert_eq!(fmt_g(f64::NEG_INFINITY), "-inf");
        assert_eq!(fmt_g(81377.39570642984), "81377.3957064");
    }

    #[test]
    fn fmt_g_round_trips_to_twelve_digits() {
        for &x in &[std::f64::consts::PI, -2.718281828459045e-300, 6.02214076e23, 1e-5 / 6.73] {
            let back: f64 = fmt_g(x).parse().unwrap();
            assert!((back - x).abs() <= 5e-12 * x.abs(), "{x} -> {}", fmt_g(x));
        }
    }

    #[test]
    fn csv_and_json_layout() {
        let mut t = Table::new(vec!["tau", "alpha_sq", "status"]);
        t.push(vec![1.0.into(), Some(0.5).into(), "ReachedEnd".into()]);
        t.push(vec![2.0.into(), None.into(), "NonFinite".into()]);
        let mut buf = Vec::new();
        t.write_csv(&mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "tau,alpha_sq,status\n1,0.5,ReachedEnd\n2,,NonFinite\n"
        );
        let json = t.to_json();
        assert_eq!(json[1]["alpha_sq"], Value::Null);
        assert_eq!(json[0]["status"], "ReachedEnd");
        let keys: Vec<_> = json[0].as_object().unwrap().keys().cloned().collect();
        assert_eq!(keys, ["tau", "alpha_sq", "status"]);
    }

    #[test]
    fn summary_text() {
        let mut s = Summary::default();
        s.add("alpha_sq", 0.25).add("status", "ReachedEnd").add("beta", None::<f64>);
        let mut buf = Vec::new();
        s.write(&mut buf, Format::Csv).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "alpha_sq = 0.25\nstatus = ReachedEnd\nbeta = none\n"
        );
    }

    proptest::proptest! {
        #[test]
        fn fmt_g_keeps_twelve_digits(x in proptest::num::f64::NORMAL) {
            let back: f64 = fmt_g(x).parse().unwrap();
            proptest::prop_assert!((back - x).abs() <= 5e-12 * x.abs());
        }
    }
}
