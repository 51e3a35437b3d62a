//! JSON encoding of complex matrices and deterministic float formatting.
//!
//! Matrices are nested row arrays whose entries are `[re, im]` pairs. On
//! input a bare number is accepted as a real entry.

use std::io;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use serde_json::ser::{Formatter, PrettyFormatter};

use crate::linalg::CMat;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Entry {
    Pair([f64; 2]),
    Real(f64),
}

impl From<Entry> for Complex64 {
    fn from(e: Entry) -> Self {
        match e {
            Entry::Pair([re, im]) => Complex64::new(re, im),
            Entry::Real(re) => Complex64::new(re, 0.0),
        }
    }
}

pub type Rows = Vec<Vec<Entry>>;

pub fn encode(m: &CMat) -> Rows {
    (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| Entry::Pair([m[(i, j)].re, m[(i, j)].im])).collect()).collect()
}

/// Builds a matrix from nested rows. `cols_hint` supplies the column count
/// for matrices with zero rows and is checked against non-empty input.
pub fn decode(rows: &Rows, cols_hint: Option<usize>, name: &str) -> Result<CMat, String> {
    let nrows = rows.len();
    let ncols = match rows.first() {
        Some(r) => r.len(),
        None => cols_hint.unwrap_or(0),
    };
    if let Some(h) = cols_hint {
        if nrows > 0 && ncols != h {
            return Err(format!("{name}: expected {h} columns, found {ncols}"));
        }
    }
    for (i, r) in rows.iter().enumerate() {
        if r.len() != ncols {
            return Err(format!("{name}: row {i} has {} entries, expected {ncols}", r.len()));
        }
    }
    Ok(CMat::from_fn(nrows, ncols, |i, j| rows[i][j].into()))
}

pub fn encode_vec(v: &crate::linalg::CVec) -> Vec<Entry> {
    v.iter().map(|z| Entry::Pair([z.re, z.im])).collect()
}

pub fn decode_vec(v: &[Entry]) -> crate::linalg::CVec {
    crate::linalg::CVec::from_iterator(v.len(), v.iter().map(|&e| e.into()))
}

/// Pretty JSON formatter printing every float with 17 significant digits so
/// that reports are byte-identical across runs and round-trip exactly.
pub struct FixedPrecision<'a>(PrettyFormatter<'a>);

impl Default for FixedPrecision<'_> {
    fn default() -> Self {
        FixedPrecision(PrettyFormatter::with_indent(b"  "))
    }
}

impl Formatter for FixedPrecision<'_> {
    fn write_f64<W: ?Sized + io::Write>(&mut self, w: &mut W, value: f64) -> io::Result<()> {
        if value.is_finite() {
            write!(w, "{value:.16e}")
        } else {
            w.write_all(b"null")
        }
    }
    fn write_f32<W: ?Sized + io::Write>(&mut self, w: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(w, value as f64)
    }
    fn begin_array<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_array(w)
    }
    fn end_array<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array(w)
    }
    fn begin_array_value<W: ?Sized + io::Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_array_value(w, first)
    }
    fn end_array_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array_value(w)
    }
    fn begin_object<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object(w)
    }
    fn end_object<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object(w)
    }
    fn begin_object_key<W: ?Sized + io::Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_object_key(w, first)
    }
    fn begin_object_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object_value(w)
    }
    fn end_object_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object_value(w)
    }
}

/// Serializes with [`FixedPrecision`].
pub fn to_string_fixed<T: Serialize>(value: &T) -> serde_json::Result<String> {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, FixedPrecision::default());
    value.serialize(&mut ser)?;
    Ok(String::from_utf8(buf).expect("serde_json emits UTF-8"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::c;

    #[test]
    fn accepts_pairs_and_bare_numbers() {
        let rows: Rows = serde_json::from_str("[[[1.0, 2.0], 3.0]]").unwrap();
        let m = decode(&rows, Some(2), "m").unwrap();
        assert_eq!(m[(0, 0)], c(1.0, 2.0));
        assert_eq!(m[(0, 1)], c(3.0, 0.0));
    }

    #[test]
    fn empty_matrix_takes_hint() {
        let m = decode(&Vec::new(), Some(4), "w").unwrap();
        assert_eq!(m.shape(), (0, 4));
    }

    #[test]
    fn ragged_rows_rejected() {
        let rows: Rows = serde_json::from_str("[[1.0, 2.0], [3.0]]").unwrap();
        assert!(decode(&rows, None, "m").is_err());
    }

    #[test]
    fn fixed_precision_round_trips() {
        let x = 0.1_f64 + 0.2;
        let s = to_string_fixed(&vec![x]).unwrap();
        let back: Vec<f64> = serde_json::from_str(&s).unwrap();
        assert_eq!(back[0], x);
        assert!(s.contains("3.0000000000000004e-1"));
    }
}
