//! CSV and JSON-lines report files.
//!
//! CSV output starts with two comment lines, the schema tag and the
//! resolved config as JSON, followed by an RFC 4180 table. JSON-lines
//! output starts with one header object carrying the same information.

use std::io::{self, Write};

use serde::Serialize;

use crate::config::{ExperimentConfig, Format};

pub const SCHEMA: &str = "percolab-schema/1";

/// Decimal rendering of `exp(ln)` that survives magnitudes far outside the
/// `f64` range, e.g. `3.051758e-5` or `8.744729e-1830`.
pub fn sci_from_ln(ln: f64) -> String {
    if ln == f64::NEG_INFINITY {
        return "0".to_string();
    }
    if !ln.is_finite() {
        return format!("{ln}");
    }
    let log10 = ln / std::f64::consts::LN_10;
    let mut exp = log10.floor();
    let mut mantissa = 10f64.powf(log10 - exp);
    if format!("{mantissa:.6}").starts_with("10") {
        mantissa /= 10.0;
        exp += 1.0;
    }
    format!("{mantissa:.6}e{}", exp as i64)
}

#[derive(Serialize)]
struct Header<'a> {
    schema: &'a str,
    report: &'a str,
    config: &'a ExperimentConfig,
}

pub fn write_report<W: Write, R: Serialize>(
    mut out: W,
    format: Format,
    report: &str,
    config: &ExperimentConfig,
    rows: &[R],
) -> io::Result<()> {
    match format {
        Format::Csv => {
            writeln!(out, "# {SCHEMA} report={report}")?;
            writeln!(out, "# config {}", serde_json::to_string(config).map_err(io::Error::other)?)?;
            let mut w = csv::Writer::from_writer(out);
            for r in rows {
                w.serialize(r).map_err(io::Error::other)?;
            }
            w.flush()
        }
        Format::Jsonl => {
            let header = Header { schema: SCHEMA, report, config };
            serde_json::to_writer(&mut out, &header).map_err(io::Error::other)?;
            writeln!(out)?;
            for r in rows {
                serde_json::to_writer(&mut out, r).map_err(io::Error::other)?;
                writeln!(out)?;
            }
            out.flush()
        }
    }
}

/// Comment lines and the table body of a CSV report.
pub fn split_csv(text: &str) -> (Vec<&str>, csv::Reader<&[u8]>) {
    let body_start = text.lines().take_while(|l| l.starts_with('#')).map(|l| l.len() + 1).sum::<usize>();
    let comments = text.lines().take_while(|l| l.starts_with('#')).collect();
    (comments, csv::Reader::from_reader(&text.as_bytes()[body_start.min(text.len())..]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::Command;

    #[derive(Serialize)]
    struct Row {
        name: &'static str,
        value: f64,
    }

    #[test]
    fn sci_formatting() {
        assert_eq!(sci_from_ln(0.0), "1.000000e0");
        assert_eq!(sci_from_ln(f64::NEG_INFINITY), "0");
        assert_eq!(sci_from_ln((0.5f64).ln() * 16.0), "1.525879e-5");
        assert_eq!(sci_from_ln(6076.0 * 0.5f64.ln()), "8.744729e-1830");
    }

    #[test]
    fn csv_quoting_and_header() {
        let cfg = ExperimentConfig::for_command(Command::Crossing);
        let mut buf = Vec::new();
        write_report(&mut buf, Format::Csv, "demo", &cfg, &[Row { name: "a,\"b\"", value: 0.5 }]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let (comments, mut rd) = split_csv(&text);
        assert_eq!(comments[0], "# percolab-schema/1 report=demo");
        let echoed: ExperimentConfig = serde_json::from_str(comments[1].trim_start_matches("# config ")).unwrap();
        assert_eq!(echoed, cfg);
        let rec = rd.records().next().unwrap().unwrap();
        assert_eq!(&rec[0], "a,\"b\"");
        assert!(text.contains("\"a,\"\"b\"\"\""));
    }

    #[test]
    fn jsonl_header() {
        let cfg = ExperimentConfig::for_command(Command::Onearm);
        let mut buf = Vec::new();
        write_report(&mut buf, Format::Jsonl, "demo", &cfg, &[Row { name: "x", value: 1.0 }]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<serde_json::Value> = text.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
        assert_eq!(lines[0]["schema"], SCHEMA);
        assert_eq!(lines[0]["config"]["command"], "onearm");
        assert_eq!(lines[1]["value"], 1.0);
    }
}
