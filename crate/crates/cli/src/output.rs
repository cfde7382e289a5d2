//! Output helpers. Every real number is printed with 17 significant digits
//! so results round-trip and reruns can be compared byte for byte.

use std::io::{self, Write};
use std::str::FromStr;

use mmv_core::io::fmt_sig17;
use serde_json::{Number, Value};

/// JSON number with 17 significant digits; `null` if not finite.
pub fn num(x: f64) -> Value {
    if !x.is_finite() {
        return Value::Null;
    }
    Value::Number(Number::from_str(&fmt_sig17(x)).expect("fmt_sig17 emits JSON numbers"))
}

pub fn opt_num(x: Option<f64>) -> Value {
    x.map_or(Value::Null, num)
}

/// CSV cell: 17 significant digits, empty if absent or not finite.
pub fn cell(x: Option<f64>) -> String {
    match x {
        Some(v) if v.is_finite() => fmt_sig17(v),
        _ => String::new(),
    }
}

/// Space-separated 1-based indices, used for index sets inside CSV cells.
pub fn index_cell(indices: &[usize]) -> String {
    indices
        .iter()
        .map(usize::to_string)
        .collect::<Vec<_>>()
        .join(" ")
}

pub fn write_json<W: Write>(mut out: W, value: &Value) -> io::Result<()> {
    serde_json::to_writer_pretty(&mut out, value)?;
    writeln!(out)
}

/// Minimal CSV writer for rows of already formatted cells; quotes cells
/// holding commas, quotes or newlines.
pub fn write_csv<W: Write>(mut out: W, header: &[&str], rows: &[Vec<String>]) -> io::Result<()> {
    let quote = |c: &str| {
        if c.contains([',', '"', '\n']) {
            format!("\"{}\"", c.replace('"', "\"\""))
        } else {
            c.to_string()
        }
    };
    writeln!(out, "{}", header.join(","))?;
    for row in rows {
        let cells: Vec<String> = row.iter().map(|c| quote(c)).collect();
        writeln!(out, "{}", cells.join(","))?;
    }
    Ok(())
}
