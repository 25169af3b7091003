//! Result records and their CSV / JSON serialization.
//!
//! Numbers are written with 17 significant digits, which round-trips every
//! finite `f64` exactly. Absent values are empty CSV cells or JSON `null`.

use std::fmt::Write as _;
use std::io::{self, Write};
use std::path::Path;

use serde_json::Value;

/// CSV header, in order.
pub const COLUMNS: [&str; 16] = [
    "command",
    "n",
    "N",
    "J",
    "mu",
    "omega",
    "delta",
    "eps",
    "method",
    "value_re",
    "value_im",
    "abs_error",
    "samples",
    "seed",
    "stream",
    "wall_ms",
];

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ResultRecord {
    pub command: String,
    pub n: Option<u64>,
    pub dim: Option<u64>,
    pub coupling: Option<f64>,
    pub mu: Option<f64>,
    pub omega: Option<f64>,
    pub delta: Option<f64>,
    pub eps: Option<f64>,
    pub method: String,
    pub value_re: f64,
    pub value_im: f64,
    pub abs_error: f64,
    pub samples: Option<u64>,
    pub seed: Option<u64>,
    pub stream: Option<u64>,
    pub wall_ms: f64,
    // JSON only
    pub tol: Option<f64>,
    pub p: Option<u64>,
    pub k: Option<f64>,
    pub cutoff_x: Option<f64>,
    pub note: Option<String>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

/// `{:.16e}` for finite values, `NaN` / `inf` / `-inf` otherwise.
pub fn fmt_f64(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else if v.is_nan() {
        "NaN".into()
    } else if v > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

fn opt_f(v: Option<f64>) -> String {
    v.map(fmt_f64).unwrap_or_default()
}

fn opt_u(v: Option<u64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

impl ResultRecord {
    fn csv_fields(&self) -> [String; 16] {
        [
            self.command.clone(),
            opt_u(self.n),
            opt_u(self.dim),
            opt_f(self.coupling),
            opt_f(self.mu),
            opt_f(self.omega),
            opt_f(self.delta),
            opt_f(self.eps),
            self.method.clone(),
            fmt_f64(self.value_re),
            fmt_f64(self.value_im),
            fmt_f64(self.abs_error),
            opt_u(self.samples),
            opt_u(self.seed),
            opt_u(self.stream),
            fmt_f64(self.wall_ms),
        ]
    }
}

pub fn write_csv<W: Write>(records: &[ResultRecord], out: W) -> io::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(COLUMNS).map_err(io::Error::other)?;
    for r in records {
        w.write_record(r.csv_fields()).map_err(io::Error::other)?;
    }
    w.flush()
}

fn json_num(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        "null".into()
    }
}

fn json_opt_num(v: Option<f64>) -> String {
    v.map(json_num).unwrap_or_else(|| "null".into())
}

fn json_opt_int(v: Option<u64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_else(|| "null".into())
}

fn json_str(s: &str) -> String {
    serde_json::to_string(s).expect("string serialization cannot fail")
}

fn json_opt_str(s: &Option<String>) -> String {
    s.as_deref().map(json_str).unwrap_or_else(|| "null".into())
}

/// A JSON array with one object per record; keys match the CSV columns plus
/// `tol`, `p`, `k`, `X`, `note`, `error` and `version`.
pub fn write_json<W: Write>(records: &[ResultRecord], mut out: W) -> io::Result<()> {
    let mut s = String::from("[");
    for (i, r) in records.iter().enumerate() {
        if i > 0 {
            s.push(',');
        }
        let _ = write!(
            s,
            "\n  {{\"command\": {}, \"n\": {}, \"N\": {}, \"J\": {}, \"mu\": {}, \"omega\": {}, \
             \"delta\": {}, \"eps\": {}, \"method\": {}, \"value_re\": {}, \"value_im\": {}, \
             \"abs_error\": {}, \"samples\": {}, \"seed\": {}, \"stream\": {}, \"wall_ms\": {}, \
             \"tol\": {}, \"p\": {}, \"k\": {}, \"X\": {}, \"note\": {}, \"error\": {}, \"version\": {}}}",
            json_str(&r.command),
            json_opt_int(r.n),
            json_opt_int(r.dim),
            json_opt_num(r.coupling),
            json_opt_num(r.mu),
            json_opt_num(r.omega),
            json_opt_num(r.delta),
            json_opt_num(r.eps),
            json_str(&r.method),
            json_num(r.value_re),
            json_num(r.value_im),
            json_num(r.abs_error),
            json_opt_int(r.samples),
            json_opt_int(r.seed),
            json_opt_int(r.stream),
            json_num(r.wall_ms),
            json_opt_num(r.tol),
            json_opt_int(r.p),
            json_opt_num(r.k),
            json_opt_num(r.cutoff_x),
            json_opt_str(&r.note),
            json_opt_str(&r.error),
            json_str(VERSION),
        );
    }
    s.push_str(if records.is_empty() { "]\n" } else { "\n]\n" });
    out.write_all(s.as_bytes())
}

/// Writes to `path`, or to standard output when `path` is `None`.
pub fn write_results(
    records: &[ResultRecord],
    path: Option<&Path>,
    format: Format,
) -> io::Result<()> {
    match path {
        Some(p) => {
            let f = io::BufWriter::new(std::fs::File::create(p)?);
            match format {
                Format::Csv => write_csv(records, f),
                Format::Json => write_json(records, f),
            }
        }
        None => {
            let stdout = io::stdout();
            let lock = stdout.lock();
            match format {
                Format::Csv => write_csv(records, lock),
                Format::Json => write_json(records, lock),
            }
        }
    }
}

fn parse_err(msg: impl Into<String>) -> io::Error {
    io::Error::new(io::ErrorKind::InvalidData, msg.into())
}

fn parse_f(s: &str) -> io::Result<f64> {
    s.parse::<f64>()
        .map_err(|_| parse_err(format!("bad number '{s}'")))
}

fn parse_opt_f(s: &str) -> io::Result<Option<f64>> {
    if s.is_empty() {
        Ok(None)
    } else {
        parse_f(s).map(Some)
    }
}

fn parse_opt_u(s: &str) -> io::Result<Option<u64>> {
    if s.is_empty() {
        Ok(None)
    } else {
        s.parse()
            .map(Some)
            .map_err(|_| parse_err(format!("bad integer '{s}'")))
    }
}

pub fn read_csv<R: io::Read>(input: R) -> io::Result<Vec<ResultRecord>> {
    let mut rd = csv::Reader::from_reader(input);
    let header = rd.headers().map_err(io::Error::other)?.clone();
    if header.iter().ne(COLUMNS.iter().copied()) {
        return Err(parse_err("unexpected CSV header"));
    }
    let mut out = Vec::new();
    for row in rd.records() {
        let row = row.map_err(io::Error::other)?;
        let f = |i: usize| row.get(i).unwrap_or("");
        out.push(ResultRecord {
            command: f(0).to_string(),
            n: parse_opt_u(f(1))?,
            dim: parse_opt_u(f(2))?,
            coupling: parse_opt_f(f(3))?,
            mu: parse_opt_f(f(4))?,
            omega: parse_opt_f(f(5))?,
            delta: parse_opt_f(f(6))?,
            eps: parse_opt_f(f(7))?,
            method: f(8).to_string(),
            value_re: parse_f(f(9))?,
            value_im: parse_f(f(10))?,
            abs_error: parse_f(f(11))?,
            samples: parse_opt_u(f(12))?,
            seed: parse_opt_u(f(13))?,
            stream: parse_opt_u(f(14))?,
            wall_ms: parse_f(f(15))?,
            ..Default::default()
        });
    }
    Ok(out)
}

pub fn read_json<R: io::Read>(input: R) -> io::Result<Vec<ResultRecord>> {
    let v: Value = serde_json::from_reader(input).map_err(io::Error::other)?;
    let arr = v
        .as_array()
        .ok_or_else(|| parse_err("expected a JSON array"))?;
    let num = |o: &Value, k: &str| o.get(k).and_then(Value::as_f64);
    let int = |o: &Value, k: &str| o.get(k).and_then(Value::as_u64);
    let text = |o: &Value, k: &str| o.get(k).and_then(Value::as_str).map(str::to_string);
    Ok(arr
        .iter()
        .map(|o| ResultRecord {
            command: text(o, "command").unwrap_or_default(),
            n: int(o, "n"),
            dim: int(o, "N"),
            coupling: num(o, "J"),
            mu: num(o, "mu"),
            omega: num(o, "omega"),
            delta: num(o, "delta"),
            eps: num(o, "eps"),
            method: text(o, "method").unwrap_or_default(),
            value_re: num(o, "value_re").unwrap_or(f64::NAN),
            value_im: num(o, "value_im").unwrap_or(f64::NAN),
            abs_error: num(o, "abs_error").unwrap_or(f64::NAN),
            samples: int(o, "samples"),
            seed: int(o, "seed"),
            stream: int(o, "stream"),
            wall_ms: num(o, "wall_ms").unwrap_or(f64::NAN),
            tol: num(o, "tol"),
            p: int(o, "p"),
            k: num(o, "k"),
            cutoff_x: num(o, "X"),
            note: text(o, "note"),
            error: text(o, "error"),
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> ResultRecord {
        ResultRecord {
            command: "fn-eval".into(),
            n: Some(1),
            eps: Some(1.0),
            method: "quadrature".into(),
            value_re: 1.144_463_079_806_894_7,
            value_im: 0.0,
            abs_error: 3.3e-17,
            wall_ms: 0.123,
            tol: Some(1e-8),
            ..Default::default()
        }
    }

    #[test]
    fn seventeen_digits() {
        assert_eq!(fmt_f64(0.1), "1.0000000000000001e-1");
        assert_eq!(fmt_f64(f64::NAN), "NaN");
    }

    #[test]
    fn csv_round_trip() {
        let mut buf = Vec::new();
        write_csv(&[sample()], &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert_eq!(text.lines().count(), 2);
        assert_eq!(text.lines().next().unwrap(), COLUMNS.join(","));
        let back = read_csv(&buf[..]).unwrap();
        let want = ResultRecord {
            tol: None,
            ..sample()
        };
        assert_eq!(back, vec![want]);
    }

    #[test]
    fn json_round_trip() {
        let mut buf = Vec::new();
        write_json(&[sample(), sample()], &mut buf).unwrap();
        let back = read_json(&buf[..]).unwrap();
        assert_eq!(back, vec![sample(), sample()]);
    }

    #[test]
    fn empty_outputs() {
        let mut buf = Vec::new();
        write_csv(&[], &mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap().trim_end(),
            COLUMNS.join(",")
        );
        let mut buf = Vec::new();
        write_json(&[], &mut buf).unwrap();
        assert!(read_json(&buf[..]).unwrap().is_empty());
    }
}
