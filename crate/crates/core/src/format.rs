//! Sentence-vector matrix files.
//!
//! * TSV: one row per line, tab-separated, each value printed like C's `%.9g`.
//! * Binary: 16-byte little-endian header `b"SVEC"`, `u32` rows, `u32` cols,
//!   `u32` float width in bytes (4 or 8), then the values row-major.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;
use std::str::FromStr;

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub const SVEC_MAGIC: &[u8; 4] = b"SVEC";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MatrixFormat {
    #[default]
    Tsv,
    Bin,
}

impl FromStr for MatrixFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "tsv" => Ok(MatrixFormat::Tsv),
            "bin" => Ok(MatrixFormat::Bin),
            other => Err(Error::Config(format!("unknown matrix format {other:?}"))),
        }
    }
}

/// Storage width of binary matrix values.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FloatWidth {
    F32,
    #[default]
    F64,
}

impl FloatWidth {
    fn bytes(self) -> u32 {
        match self {
            FloatWidth::F32 => 4,
            FloatWidth::F64 => 8,
        }
    }
}

/// Formats `x` the way `printf("%.9g", x)` does.
pub fn format_g9(x: f64) -> String {
    format_g(x, 9)
}

fn format_g(x: f64, precision: usize) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf" } else { "-inf" }.into();
    }
    if x == 0.0 {
        return if x.is_sign_negative() { "-0" } else { "0" }.into();
    }
    let p = precision.max(1);
    // Round to p significant digits first; the exponent decides the style.
    let sci = format!("{:.*e}", p - 1, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    if exp < -4 || exp >= p as i32 {
        let mantissa = trim_fraction(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{mantissa}e{sign}{:02}", exp.abs())
    } else {
        let decimals = (p as i32 - 1 - exp).max(0) as usize;
        trim_fraction(&format!("{x:.decimals$}")).to_owned()
    }
}

fn trim_fraction(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

pub fn write_tsv<W: Write>(matrix: &DMatrix<f64>, mut out: W) -> Result<()> {
    let mut line = String::new();
    for row in matrix.row_iter() {
        line.clear();
        for (j, v) in row.iter().enumerate() {
            if j > 0 {
                line.push('\t');
            }
            line.push_str(&format_g9(*v));
        }
        line.push('\n');
        out.write_all(line.as_bytes())?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_tsv<R: BufRead>(reader: R) -> Result<DMatrix<f64>> {
    let mut cols = None;
    let mut data = Vec::new();
    let mut rows = 0;
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let before = data.len();
        for field in line.split('\t') {
            let v = f64::from_str(field.trim()).map_err(|_| Error::Parse {
                line: i + 1,
                msg: format!("malformed float {field:?}"),
            })?;
            data.push(v);
        }
        let width = data.len() - before;
        let expected = *cols.get_or_insert(width);
        if width != expected {
            return Err(Error::LineDimension {
                line: i + 1,
                expected,
                found: width,
            });
        }
        rows += 1;
    }
    let cols = cols.ok_or_else(|| Error::EmptyInput("vector file has no rows".into()))?;
    Ok(DMatrix::from_row_slice(rows, cols, &data))
}

pub fn write_bin<W: Write>(matrix: &DMatrix<f64>, width: FloatWidth, mut out: W) -> Result<()> {
    let rows = u32::try_from(matrix.nrows())
        .map_err(|_| Error::Format("too many rows for SVEC".into()))?;
    let cols = u32::try_from(matrix.ncols())
        .map_err(|_| Error::Format("too many columns for SVEC".into()))?;
    out.write_all(SVEC_MAGIC)?;
    out.write_u32::<LittleEndian>(rows)?;
    out.write_u32::<LittleEndian>(cols)?;
    out.write_u32::<LittleEndian>(width.bytes())?;
    for row in matrix.row_iter() {
        for &v in row.iter() {
            match width {
                FloatWidth::F32 => out.write_f32::<LittleEndian>(v as f32)?,
                FloatWidth::F64 => out.write_f64::<LittleEndian>(v)?,
            }
        }
    }
    out.flush()?;
    Ok(())
}

pub fn read_bin<R: Read>(mut reader: R) -> Result<DMatrix<f64>> {
    let mut magic = [0u8; 4];
    reader
        .read_exact(&mut magic)
        .map_err(|_| Error::Format("truncated SVEC header".into()))?;
    if &magic != SVEC_MAGIC {
        return Err(Error::Format(format!("bad magic {magic:?}, expected SVEC")));
    }
    let rows = reader.read_u32::<LittleEndian>()? as usize;
    let cols = reader.read_u32::<LittleEndian>()? as usize;
    let width = reader.read_u32::<LittleEndian>()?;
    let mut data = Vec::with_capacity(rows * cols);
    for _ in 0..rows * cols {
        let v = match width {
            4 => f64::from(reader.read_f32::<LittleEndian>()?),
            8 => reader.read_f64::<LittleEndian>()?,
            w => return Err(Error::Format(format!("unsupported float width {w}"))),
        };
        data.push(v);
    }
    Ok(DMatrix::from_row_slice(rows, cols, &data))
}

pub fn save_matrix(
    path: impl AsRef<Path>,
    matrix: &DMatrix<f64>,
    format: MatrixFormat,
    width: FloatWidth,
) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let out = BufWriter::new(file);
    match format {
        MatrixFormat::Tsv => write_tsv(matrix, out),
        MatrixFormat::Bin => write_bin(matrix, width, out),
    }
}

/// Reads either format; binary files are recognized by their magic.
pub fn load_matrix(path: impl AsRef<Path>) -> Result<DMatrix<f64>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = BufReader::new(file);
    let is_bin = reader.fill_buf()?.starts_with(SVEC_MAGIC);
    if is_bin {
        read_bin(reader)
    } else {
        read_tsv(reader)
    }
}
