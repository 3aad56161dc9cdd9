//! JSON encoding of instances and reports.
//!
//! Instance files look like
//! `{"n0":1,"n1":1,"lambda":0,"A0":[[[-1,0]]],"A1":[[[1,0]]],"V":[[[1,0]]]}`:
//! matrices are arrays of rows, complex entries are `[re, im]` pairs, and
//! `meta` is optional. Floats are written with 17 significant digits.

use std::io;

use serde::{Deserialize, Serialize};
use serde_json::ser::Formatter;

use super::BlockOperator;
use crate::error::{Error, Result};
use crate::linalg::{c, Matrix};

type Rows = Vec<Vec<[f64; 2]>>;

#[derive(Debug, Serialize, Deserialize)]
struct InstanceFile {
    n0: usize,
    n1: usize,
    lambda: f64,
    #[serde(rename = "A0")]
    a0: Rows,
    #[serde(rename = "A1")]
    a1: Rows,
    #[serde(rename = "V")]
    v: Rows,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    meta: Option<serde_json::Value>,
}

fn to_rows(m: &Matrix) -> Rows {
    m.row_iter()
        .map(|row| row.iter().map(|z| [z.re, z.im]).collect())
        .collect()
}

fn from_rows(name: &str, rows: &Rows, nrows: usize, ncols: usize) -> Result<Matrix> {
    if rows.len() != nrows || rows.iter().any(|r| r.len() != ncols) {
        return Err(Error::Malformed(format!(
            "{name} must be {nrows}x{ncols}"
        )));
    }
    Ok(Matrix::from_fn(nrows, ncols, |i, j| {
        let [re, im] = rows[i][j];
        c(re, im)
    }))
}

/// Writes every float as `{:.16e}` (17 significant digits).
#[derive(Debug, Default, Clone, Copy)]
pub struct SeventeenDigits;

impl Formatter for SeventeenDigits {
    fn write_f64<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        if value.is_finite() {
            write!(writer, "{value:.16e}")
        } else {
            writer.write_all(b"null")
        }
    }

    fn write_f32<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(writer, value as f64)
    }
}

/// Serializes any value with [`SeventeenDigits`] float formatting.
pub fn to_json<T: Serialize + ?Sized>(value: &T) -> String {
    let mut out = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut out, SeventeenDigits);
    value.serialize(&mut ser).expect("in-memory serialization");
    String::from_utf8(out).expect("serde_json emits UTF-8")
}

pub fn instance_to_json(op: &BlockOperator) -> String {
    to_json(&InstanceFile {
        n0: op.n0(),
        n1: op.n1(),
        lambda: op.lambda(),
        a0: to_rows(op.a0()),
        a1: to_rows(op.a1()),
        v: to_rows(op.v()),
        meta: op.meta().cloned(),
    })
}

pub fn instance_from_json(text: &str) -> Result<BlockOperator> {
    let file: InstanceFile =
        serde_json::from_str(text).map_err(|e| Error::Malformed(e.to_string()))?;
    let a0 = from_rows("A0", &file.a0, file.n0, file.n0)?;
    let a1 = from_rows("A1", &file.a1, file.n1, file.n1)?;
    let v = from_rows("V", &file.v, file.n0, file.n1)?;
    let op = BlockOperator::new(a0, a1, v, file.lambda)?;
    Ok(match file.meta {
        Some(meta) => op.with_meta(meta),
        None => op,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{generate, GeneratorSpec};
    use proptest::prelude::*;

    #[test]
    fn parses_hand_written_instance() {
        let text = r#"{"n0":1,"n1":1,"lambda":0,"A0":[[[-1,0]]],"A1":[[[1,0]]],"V":[[[0,2]]]}"#;
        let op = instance_from_json(text).unwrap();
        assert_eq!(op.v()[(0, 0)], c(0.0, 2.0));
        assert!(op.meta().is_none());
    }

    #[test]
    fn floats_have_seventeen_digits() {
        let s = to_json(&[0.1_f64, -1.0]);
        assert_eq!(s, "[1.0000000000000001e-1,-1.0000000000000000e0]");
    }

    #[test]
    fn rejects_wrong_shapes() {
        let text = r#"{"n0":2,"n1":1,"lambda":0,"A0":[[[-1,0]]],"A1":[[[1,0]]],"V":[[[1,0]]]}"#;
        assert!(matches!(instance_from_json(text), Err(Error::Malformed(_))));
        assert!(matches!(instance_from_json("{"), Err(Error::Malformed(_))));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]
        #[test]
        fn round_trip_is_bit_exact(n0 in 1usize..6, n1 in 1usize..6, seed in any::<u64>(), vnorm in 0.0f64..5.0, lambda in -3.0f64..3.0) {
            let spec = GeneratorSpec { lambda, ..GeneratorSpec::simple(n0, n1, 0.1, vnorm, seed) };
            let op = generate(&spec).unwrap();
            let back = instance_from_json(&instance_to_json(&op)).unwrap();
            prop_assert_eq!(back, op);
        }
    }
}
