//! File formats: `W` as CSV, instance dumps as JSON, and the 17-digit
//! number formatting used by every textual output.

use std::io::{Read, Write};

use base64::engine::general_purpose::STANDARD as B64;
use base64::Engine;
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{SignalValueMatrix, SparseInstance, WMode};

/// `%.17g`-style rendering: 17 significant digits, fixed notation for
/// decimal exponents in `[-5, 17)`, scientific otherwise. Non-finite values
/// render as `NaN`, `inf`, `-inf`.
pub fn fmt_sig17(x: f64) -> String {
    if !x.is_finite() {
        return if x.is_nan() {
            "NaN".into()
        } else if x > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        };
    }
    if x == 0.0 {
        return if x.is_sign_negative() { "-0".into() } else { "0".into() };
    }
    let sci = format!("{:.16e}", x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent marker");
    let exp: i32 = exp.parse().expect("exponent digits");
    if (-5..17).contains(&exp) {
        let decimals = (16 - exp).max(0) as usize;
        format!("{:.*}", decimals, x)
    } else {
        format!("{mantissa}e{exp}")
    }
}

/// Reads `W` from CSV: one row per line, comma separated, `.` decimal point,
/// no header. Blank lines are ignored.
pub fn read_w_csv<R: Read>(reader: R, mode: WMode) -> Result<SignalValueMatrix> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(reader);
    let mut rows = Vec::new();
    for (line, record) in rdr.records().enumerate() {
        let record = record?;
        if record.iter().all(str::is_empty) {
            continue;
        }
        let row = record
            .iter()
            .map(|field| {
                field.parse::<f64>().map_err(|_| {
                    Error::invalid(format!("row {}: cannot parse {field:?} as a number", line + 1))
                })
            })
            .collect::<Result<Vec<f64>>>()?;
        rows.push(row);
    }
    SignalValueMatrix::from_rows(&rows, mode)
}

pub fn write_w_csv<W: Write>(mut out: W, w: &SignalValueMatrix) -> Result<()> {
    for row in w.rows() {
        let line: Vec<String> = row.iter().map(|v| fmt_sig17(*v)).collect();
        writeln!(out, "{}", line.join(","))?;
    }
    Ok(())
}

/// A dense matrix as shape plus base64 of its row-major little-endian f64s.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EncodedMatrix {
    pub rows: usize,
    pub cols: usize,
    pub data: String,
}

impl EncodedMatrix {
    pub fn encode(m: &DMatrix<f64>) -> Self {
        let mut bytes = Vec::with_capacity(m.len() * 8);
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                bytes.extend_from_slice(&m[(i, j)].to_le_bytes());
            }
        }
        Self {
            rows: m.nrows(),
            cols: m.ncols(),
            data: B64.encode(bytes),
        }
    }

    pub fn decode(&self) -> Result<DMatrix<f64>> {
        let bytes = B64
            .decode(&self.data)
            .map_err(|e| Error::invalid(format!("bad base64 matrix data: {e}")))?;
        if bytes.len() != self.rows * self.cols * 8 {
            return Err(Error::invalid(format!(
                "matrix data holds {} bytes, shape {}x{} needs {}",
                bytes.len(),
                self.rows,
                self.cols,
                self.rows * self.cols * 8
            )));
        }
        let flat: Vec<f64> = bytes
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
            .collect();
        Ok(DMatrix::from_row_slice(self.rows, self.cols, &flat))
    }
}

/// JSON layout of an instance dump. `support` is 1-based.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub struct InstanceDocument {
    #[serde(rename = "support")]
    pub support: Vec<usize>,
    pub a: EncodedMatrix,
    pub x: EncodedMatrix,
    pub z: EncodedMatrix,
    pub y: EncodedMatrix,
}

impl InstanceDocument {
    pub fn from_instance(inst: &SparseInstance) -> Self {
        Self {
            support: inst.support_one_based(),
            a: EncodedMatrix::encode(inst.a()),
            x: EncodedMatrix::encode(inst.x()),
            z: EncodedMatrix::encode(inst.z()),
            y: EncodedMatrix::encode(inst.y()),
        }
    }

    pub fn into_instance(self) -> Result<SparseInstance> {
        if self.support.contains(&0) {
            return Err(Error::invalid("support indices are 1-based"));
        }
        SparseInstance::from_parts(
            self.support.iter().map(|s| s - 1).collect(),
            self.a.decode()?,
            self.x.decode()?,
            self.z.decode()?,
            self.y.decode()?,
        )
    }
}

pub fn write_instance_json<W: Write>(out: W, inst: &SparseInstance) -> Result<()> {
    serde_json::to_writer(out, &InstanceDocument::from_instance(inst))?;
    Ok(())
}

pub fn read_instance_json<R: Read>(reader: R) -> Result<SparseInstance> {
    let doc: InstanceDocument = serde_json::from_reader(reader)?;
    doc.into_instance()
}
