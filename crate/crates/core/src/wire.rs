//! JSON/CSV plumbing: complex numbers as `{"re":…,"im":…}` and floats
//! written with 17 significant digits.

use std::io;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::types::{CMatrix, ComplexPoint, HermitianForm, C64};

/// Serialized complex number.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Cx {
    pub re: f64,
    #[serde(default)]
    pub im: f64,
}

impl From<C64> for Cx {
    fn from(z: C64) -> Self {
        Self { re: z.re, im: z.im }
    }
}

impl From<Cx> for C64 {
    fn from(z: Cx) -> Self {
        C64::new(z.re, z.im)
    }
}

impl From<ComplexPoint> for Vec<Cx> {
    fn from(p: ComplexPoint) -> Self {
        p.coords().iter().map(|&z| z.into()).collect()
    }
}

impl From<Vec<Cx>> for ComplexPoint {
    fn from(v: Vec<Cx>) -> Self {
        ComplexPoint::new(v.into_iter().map(C64::from).collect())
    }
}

pub fn matrix_to_rows(m: &CMatrix) -> Vec<Vec<Cx>> {
    m.row_iter().map(|r| r.iter().map(|&z| z.into()).collect()).collect()
}

pub fn rows_to_matrix(rows: &[Vec<Cx>]) -> std::result::Result<CMatrix, String> {
    let n = rows.len();
    if n == 0 || rows.iter().any(|r| r.len() != rows[0].len()) {
        return Err("matrix rows must be non-empty and of equal length".into());
    }
    let cols = rows[0].len();
    Ok(CMatrix::from_fn(n, cols, |i, j| rows[i][j].into()))
}

impl From<HermitianForm> for Vec<Vec<Cx>> {
    fn from(h: HermitianForm) -> Self {
        matrix_to_rows(h.matrix())
    }
}

impl TryFrom<Vec<Vec<Cx>>> for HermitianForm {
    type Error = String;

    fn try_from(rows: Vec<Vec<Cx>>) -> std::result::Result<Self, String> {
        let m = rows_to_matrix(&rows)?;
        HermitianForm::new(m).map_err(|e| e.to_string())
    }
}

/// serde adapter for a single `C64` field.
pub mod cx {
    use super::*;
    use serde::{Deserializer, Serializer};

    pub fn serialize<S: Serializer>(z: &C64, s: S) -> std::result::Result<S::Ok, S::Error> {
        Cx::from(*z).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<C64, D::Error> {
        Cx::deserialize(d).map(C64::from)
    }
}

/// serde adapter for a dense complex matrix stored as rows.
pub mod cx_matrix {
    use super::*;
    use serde::de::Error;
    use serde::{Deserializer, Serializer};

    pub fn serialize<S: Serializer>(m: &CMatrix, s: S) -> std::result::Result<S::Ok, S::Error> {
        matrix_to_rows(m).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<CMatrix, D::Error> {
        let rows = Vec::<Vec<Cx>>::deserialize(d)?;
        rows_to_matrix(&rows).map_err(D::Error::custom)
    }
}

/// Formats a float with 17 significant digits.
pub fn fmt17(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        format!("{x}")
    }
}

/// JSON formatter that writes every float with 17 significant digits;
/// non-finite values become `null`.
#[derive(Debug, Clone, Copy, Default)]
pub struct SeventeenDigits;

impl serde_json::ser::Formatter for SeventeenDigits {
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

/// Pretty-printed variant of [`SeventeenDigits`].
struct PrettySeventeen<'a> {
    pretty: serde_json::ser::PrettyFormatter<'a>,
}

macro_rules! forward {
    ($($name:ident($($arg:ident: $ty:ty),*);)*) => {
        $(fn $name<W: ?Sized + io::Write>(&mut self, w: &mut W $(, $arg: $ty)*) -> io::Result<()> {
            self.pretty.$name(w $(, $arg)*)
        })*
    };
}

impl serde_json::ser::Formatter for PrettySeventeen<'_> {
    fn write_f64<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        SeventeenDigits.write_f64(writer, value)
    }

    forward! {
        begin_array();
        end_array();
        begin_array_value(first: bool);
        end_array_value();
        begin_object();
        end_object();
        begin_object_key(first: bool);
        begin_object_value();
        end_object_value();
    }
}

/// Serializes to JSON text with 17-significant-digit floats.
pub fn to_json_string<T: Serialize + ?Sized>(value: &T, pretty: bool) -> Result<String> {
    let mut buf = Vec::new();
    if pretty {
        let fmt = PrettySeventeen {
            pretty: serde_json::ser::PrettyFormatter::with_indent(b"  "),
        };
        let mut ser = serde_json::Serializer::with_formatter(&mut buf, fmt);
        value.serialize(&mut ser)?;
    } else {
        let mut ser = serde_json::Serializer::with_formatter(&mut buf, SeventeenDigits);
        value.serialize(&mut ser)?;
    }
    Ok(String::from_utf8(buf).expect("serde_json writes UTF-8"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_carry_seventeen_digits() {
        let s = to_json_string(&vec![0.1f64, 1.0, f64::NAN], false).unwrap();
        assert_eq!(s, "[1.0000000000000001e-1,1.0000000000000000e0,null]");
        let back: Vec<Option<f64>> = serde_json::from_str(&s).unwrap();
        assert_eq!(back[0], Some(0.1));
    }

    #[test]
    fn complex_wire_shape() {
        let p = ComplexPoint::new(vec![C64::new(0.5, -1.0)]);
        let v: Vec<Cx> = p.clone().into();
        let s = serde_json::to_string(&v).unwrap();
        assert_eq!(s, r#"[{"re":0.5,"im":-1.0}]"#);
        let q: ComplexPoint = serde_json::from_str::<Vec<Cx>>(&s).unwrap().into();
        assert_eq!(p, q);
    }
}
