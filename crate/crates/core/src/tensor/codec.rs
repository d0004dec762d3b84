//! JSON encoding of dense complex matrices.
//!
//! A matrix is a list of rows; each entry is either a real number or a
//! `[re, im]` pair:
//!
//! ```json
//! [[0, [0, -1]], [[0, 1], 0]]
//! ```

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::{Operator, C64};
use crate::error::{Error, Result};

/// One matrix entry as it appears in JSON.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum EntryJson {
    Real(f64),
    Complex([f64; 2]),
}

impl From<EntryJson> for C64 {
    fn from(e: EntryJson) -> Self {
        match e {
            EntryJson::Real(x) => C64::new(x, 0.0),
            EntryJson::Complex([re, im]) => C64::new(re, im),
        }
    }
}

impl From<C64> for EntryJson {
    fn from(z: C64) -> Self {
        if z.im == 0.0 {
            EntryJson::Real(z.re)
        } else {
            EntryJson::Complex([z.re, z.im])
        }
    }
}

/// Row-major JSON form of a square complex matrix.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct MatrixJson(pub Vec<Vec<EntryJson>>);

impl TryFrom<MatrixJson> for Operator {
    type Error = Error;

    fn try_from(m: MatrixJson) -> Result<Self> {
        let rows = m.0.len();
        if rows == 0 {
            return Err(Error::NotSquare { rows: 0, cols: 0 });
        }
        let mut entries = Vec::with_capacity(rows * rows);
        for row in m.0 {
            if row.len() != rows {
                return Err(Error::NotSquare {
                    rows,
                    cols: row.len(),
                });
            }
            entries.extend(row.into_iter().map(C64::from));
        }
        Operator::new(DMatrix::from_row_slice(rows, rows, &entries))
    }
}

impl From<&Operator> for MatrixJson {
    fn from(op: &Operator) -> Self {
        let m = super::MatrixView::matrix(op);
        MatrixJson(
            (0..m.nrows())
                .map(|r| (0..m.ncols()).map(|c| m[(r, c)].into()).collect())
                .collect(),
        )
    }
}

impl Serialize for Operator {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        MatrixJson::from(self).serialize(s)
    }
}

impl<'de> Deserialize<'de> for Operator {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let m = MatrixJson::deserialize(d)?;
        Operator::try_from(m).map_err(serde::de::Error::custom)
    }
}

/// Parses a square complex matrix from JSON text.
pub fn decode_matrix(text: &str) -> Result<Operator> {
    let m: MatrixJson = serde_json::from_str(text)
        .map_err(|e| Error::OutOfRange(format!("malformed matrix JSON: {e}")))?;
    Operator::try_from(m)
}

/// Serializes an operator as JSON text.
pub fn encode_matrix(op: &Operator) -> String {
    serde_json::to_string(&MatrixJson::from(op)).expect("matrix JSON is always serializable")
}
