//! Matrix JSON: `{"n": N, "entries": [[[re, im], ...], ...]}` with row-major
//! nested arrays. Writers format every double with 17 significant digits.

use std::path::Path;

use serde::de::Error as _;
use serde::ser::{Error as _, SerializeSeq, SerializeStruct};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use serde_json::value::RawValue;

use super::matrix::{ComplexMatrix, C64};
use crate::error::{Error, Result};

/// Formats a finite double with 17 significant digits.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// A double serialized with 17 significant digits.
pub struct Sig17(pub f64);

impl Serialize for Sig17 {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        if !self.0.is_finite() {
            return Err(S::Error::custom("non-finite value cannot be written as JSON"));
        }
        let raw = RawValue::from_string(fmt_f64(self.0)).map_err(S::Error::custom)?;
        raw.serialize(s)
    }
}

struct Row<'a>(&'a ComplexMatrix, usize);

impl Serialize for Row<'_> {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let n = self.0.dim();
        let mut seq = s.serialize_seq(Some(n))?;
        for j in 0..n {
            let z = self.0[(self.1, j)];
            seq.serialize_element(&[Sig17(z.re), Sig17(z.im)])?;
        }
        seq.end()
    }
}

struct Rows<'a>(&'a ComplexMatrix);

impl Serialize for Rows<'_> {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let n = self.0.dim();
        let mut seq = s.serialize_seq(Some(n))?;
        for i in 0..n {
            seq.serialize_element(&Row(self.0, i))?;
        }
        seq.end()
    }
}

impl Serialize for ComplexMatrix {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut st = s.serialize_struct("Matrix", 2)?;
        st.serialize_field("n", &self.dim())?;
        st.serialize_field("entries", &Rows(self))?;
        st.end()
    }
}

#[derive(Deserialize)]
struct MatrixRepr {
    n: usize,
    entries: Vec<Vec<[f64; 2]>>,
}

impl<'de> Deserialize<'de> for ComplexMatrix {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let repr = MatrixRepr::deserialize(d)?;
        if repr.n == 0 {
            return Err(D::Error::custom("matrix dimension must be positive"));
        }
        if repr.entries.len() != repr.n || repr.entries.iter().any(|r| r.len() != repr.n) {
            return Err(D::Error::custom(format!(
                "entries must be a {0}x{0} array",
                repr.n
            )));
        }
        let rows: Vec<Vec<C64>> = repr
            .entries
            .iter()
            .map(|r| r.iter().map(|&[re, im]| C64::new(re, im)).collect())
            .collect();
        ComplexMatrix::from_rows(&rows).map_err(D::Error::custom)
    }
}

pub fn matrix_to_json(m: &ComplexMatrix) -> Result<String> {
    Ok(serde_json::to_string(m)?)
}

pub fn matrix_from_json(s: &str) -> Result<ComplexMatrix> {
    serde_json::from_str(s).map_err(|e| Error::Parse(format!("matrix JSON: {e}")))
}

pub fn read_matrix(path: impl AsRef<Path>) -> Result<ComplexMatrix> {
    let text = std::fs::read_to_string(path)?;
    matrix_from_json(&text)
}

pub fn write_matrix(path: impl AsRef<Path>, m: &ComplexMatrix) -> Result<()> {
    std::fs::write(path, matrix_to_json(m)? + "\n")?;
    Ok(())
}
