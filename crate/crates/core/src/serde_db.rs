//! dB values that may be `-inf`. JSON has no infinities, so non-finite
//! values are written as the strings `"-inf"`, `"inf"` or `"nan"`.

use serde::{de, Deserialize, Deserializer, Serialize, Serializer};

#[derive(Clone, Copy, Debug, PartialEq, PartialOrd, Default)]
pub struct Db(pub f64);

impl From<f64> for Db {
    fn from(v: f64) -> Self {
        Db(v)
    }
}

impl From<Db> for f64 {
    fn from(v: Db) -> Self {
        v.0
    }
}

impl Serialize for Db {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let v = self.0;
        if v.is_finite() {
            s.serialize_f64(v)
        } else if v.is_nan() {
            s.serialize_str("nan")
        } else if v > 0.0 {
            s.serialize_str("inf")
        } else {
            s.serialize_str("-inf")
        }
    }
}

impl<'de> Deserialize<'de> for Db {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Num(f64),
            Str(String),
        }
        match Repr::deserialize(d)? {
            Repr::Num(v) => Ok(Db(v)),
            Repr::Str(s) => match s.as_str() {
                "-inf" => Ok(Db(f64::NEG_INFINITY)),
                "inf" => Ok(Db(f64::INFINITY)),
                "nan" => Ok(Db(f64::NAN)),
                other => Err(de::Error::custom(format!("not a dB value: {other:?}"))),
            },
        }
    }
}

/// `Display` for CSV cells: plain number or `-inf`.
impl std::fmt::Display for Db {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.0.is_finite() {
            write!(f, "{}", self.0)
        } else if self.0.is_nan() {
            f.write_str("nan")
        } else if self.0 > 0.0 {
            f.write_str("inf")
        } else {
            f.write_str("-inf")
        }
    }
}

/// `#[serde(with = "crate::serde_db::plain")]` adapter for bare `f64` fields.
pub mod plain {
    use super::*;

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        Db(*v).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        Db::deserialize(d).map(|v| v.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn infinities_survive_json() {
        let v = vec![Db(-3.5), Db(f64::NEG_INFINITY), Db(f64::INFINITY)];
        let s = serde_json::to_string(&v).unwrap();
        assert_eq!(s, r#"[-3.5,"-inf","inf"]"#);
        let back: Vec<Db> = serde_json::from_str(&s).unwrap();
        assert_eq!(back, v);
    }
}
