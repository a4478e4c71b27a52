//! Natural logarithms of exact quantities.

use std::fmt;

use num_bigint::BigUint;
use num_traits::{ToPrimitive, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// A value in natural-log units. `+inf` is used as the sentinel for an
/// unbounded complement sparsity; it serializes as the string `"inf"`.
#[derive(Clone, Copy, PartialEq, PartialOrd, Default)]
pub struct LogValue(pub f64);

impl LogValue {
    pub const INFINITY: LogValue = LogValue(f64::INFINITY);

    pub fn value(self) -> f64 {
        self.0
    }

    pub fn is_infinite(self) -> bool {
        self.0.is_infinite()
    }

    /// `ln(num / den)` for positive exact integers.
    pub fn ratio(num: &BigUint, den: &BigUint) -> LogValue {
        LogValue(ln_big(num) - ln_big(den))
    }
}

impl fmt::Debug for LogValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl fmt::Display for LogValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_infinite() {
            write!(f, "inf")
        } else {
            write!(f, "{}", self.0)
        }
    }
}

impl Serialize for LogValue {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        serialize_real(&self.0, s)
    }
}

impl<'de> Deserialize<'de> for LogValue {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        deserialize_real(d).map(LogValue)
    }
}

/// Serializes a real as a JSON number, or `"inf"` / `"-inf"` when infinite.
pub fn serialize_real<S: Serializer>(x: &f64, s: S) -> Result<S::Ok, S::Error> {
    if x.is_infinite() {
        s.serialize_str(if *x > 0.0 { "inf" } else { "-inf" })
    } else {
        s.serialize_f64(*x)
    }
}

pub fn deserialize_real<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Real {
        Num(f64),
        Text(String),
    }
    match Real::deserialize(d)? {
        Real::Num(x) => Ok(x),
        Real::Text(t) => match t.as_str() {
            "inf" => Ok(f64::INFINITY),
            "-inf" => Ok(f64::NEG_INFINITY),
            other => Err(serde::de::Error::custom(format!("not a real: {other:?}"))),
        },
    }
}

/// Bits kept from the top of a big integer before conversion to `f64`.
const MANTISSA_BITS: u64 = 96;

/// Natural log of a big integer from its exact bit length and its top 96 bits.
/// Returns `-inf` for zero.
pub fn ln_big(x: &BigUint) -> f64 {
    if x.is_zero() {
        return f64::NEG_INFINITY;
    }
    let bits = x.bits();
    if bits <= MANTISSA_BITS {
        return x.to_f64().expect("fits").ln();
    }
    let shift = bits - MANTISSA_BITS;
    let top: BigUint = x >> shift;
    let top = top.to_u128().expect("96 bits fit in u128") as f64;
    top.ln() + shift as f64 * std::f64::consts::LN_2
}

/// Serde adapter writing a big integer as a JSON number when it fits in
/// `u64` and as a decimal string otherwise.
pub mod big {
    use super::*;

    pub fn serialize<S: Serializer>(x: &BigUint, s: S) -> Result<S::Ok, S::Error> {
        match x.to_u64() {
            Some(v) => s.serialize_u64(v),
            None => s.serialize_str(&x.to_string()),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<BigUint, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Big {
            Num(u64),
            Text(String),
        }
        match Big::deserialize(d)? {
            Big::Num(v) => Ok(BigUint::from(v)),
            Big::Text(t) => t.parse().map_err(serde::de::Error::custom),
        }
    }
}
