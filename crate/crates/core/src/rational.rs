//! Exact rational arithmetic helpers and the `{"num","den"}` JSON encoding.

use std::str::FromStr;

use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// Arbitrary-precision rational, the number type of every exact computation.
pub type Rational = num_rational::BigRational;

/// Shorthand for `num/den` from machine integers.
pub fn rat(num: i64, den: i64) -> Rational {
    Rational::new(BigInt::from(num), BigInt::from(den))
}

/// Shorthand for an integer rational.
pub fn rat_int(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

/// `(1/2)^k` as an exact rational.
pub fn half_pow(k: usize) -> Rational {
    Rational::new(BigInt::one(), BigInt::one() << k)
}

/// True if the reduced denominator is a power of two (includes integers).
pub fn is_dyadic(r: &Rational) -> bool {
    let den = r.denom();
    // reduced form: denom > 0; power of two iff a single bit is set
    den.bits() == den.trailing_zeros().unwrap_or(0) + 1
}

/// Exact conversion of a finite `f64` into a rational. Every finite float is
/// a dyadic rational, so this is lossless. Returns `None` for NaN/infinity.
pub fn rational_from_f64(x: f64) -> Option<Rational> {
    Rational::from_float(x)
}

/// Nearest-float conversion, for handing exact results to float consumers.
pub fn rational_to_f64(r: &Rational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

/// Wire form of a rational: decimal strings so arbitrary precision survives JSON.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RationalRepr {
    pub num: String,
    pub den: String,
}

impl RationalRepr {
    pub fn to_rational(&self) -> Result<Rational, String> {
        let num = BigInt::from_str(&self.num).map_err(|e| format!("bad numerator: {e}"))?;
        let den = BigInt::from_str(&self.den).map_err(|e| format!("bad denominator: {e}"))?;
        if den.is_zero() {
            return Err("zero denominator".to_string());
        }
        Ok(Rational::new(num, den))
    }
}

impl From<&Rational> for RationalRepr {
    fn from(r: &Rational) -> Self {
        RationalRepr {
            num: r.numer().to_string(),
            den: r.denom().to_string(),
        }
    }
}

/// A config-side number: either a plain JSON number or a `{"num","den"}` object.
/// Plain floats convert exactly (they are dyadic rationals).
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum FlexibleNumber {
    Integer(i64),
    Float(f64),
    Repr(RationalRepr),
}

impl FlexibleNumber {
    pub fn to_rational(&self) -> Result<Rational, String> {
        match self {
            FlexibleNumber::Integer(n) => Ok(rat_int(*n)),
            FlexibleNumber::Float(x) => {
                rational_from_f64(*x).ok_or_else(|| format!("non-finite number {x}"))
            }
            FlexibleNumber::Repr(repr) => repr.to_rational(),
        }
    }
}

/// Serde adapter for `Rational` fields: serializes as `{"num","den"}`,
/// deserializes from that form or a plain number.
pub mod serde_repr {
    use super::*;

    pub fn serialize<S: Serializer>(r: &Rational, s: S) -> Result<S::Ok, S::Error> {
        RationalRepr::from(r).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Rational, D::Error> {
        FlexibleNumber::deserialize(d)?
            .to_rational()
            .map_err(D::Error::custom)
    }
}

/// Same adapter for `Option<Rational>` fields.
pub mod serde_repr_opt {
    use super::*;

    pub fn serialize<S: Serializer>(r: &Option<Rational>, s: S) -> Result<S::Ok, S::Error> {
        r.as_ref().map(RationalRepr::from).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<Rational>, D::Error> {
        match Option::<FlexibleNumber>::deserialize(d)? {
            None => Ok(None),
            Some(n) => n.to_rational().map(Some).map_err(D::Error::custom),
        }
    }
}

/// Render as `num/den` (or just `num` for integers), for labels and CSV.
pub fn format_rational(r: &Rational) -> String {
    if r.denom().is_one() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

/// True if `r` is strictly between 0 and 1.
pub fn in_open_unit_interval(r: &Rational) -> bool {
    r.is_positive() && *r < Rational::one()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn half_pow_values() {
        assert_eq!(half_pow(0), rat_int(1));
        assert_eq!(half_pow(1), rat(1, 2));
        assert_eq!(half_pow(10), rat(1, 1024));
    }

    #[test]
    fn dyadic_detection() {
        assert!(is_dyadic(&rat(3, 8)));
        assert!(is_dyadic(&rat_int(7)));
        assert!(is_dyadic(&rat(0, 5))); // reduces to 0/1
        assert!(!is_dyadic(&rat(1, 3)));
        assert!(!is_dyadic(&rat(5, 6)));
    }

    #[test]
    fn float_roundtrip_is_exact() {
        let r = rational_from_f64(0.5).unwrap();
        assert_eq!(r, rat(1, 2));
        let r = rational_from_f64(0.1).unwrap();
        // 0.1 is not 1/10 in binary; conversion must reflect the actual float
        assert_ne!(r, rat(1, 10));
        assert_eq!(rational_to_f64(&r), 0.1);
        assert!(rational_from_f64(f64::NAN).is_none());
    }

    #[test]
    fn repr_roundtrip() {
        let r = rat(-22, 7);
        let repr = RationalRepr::from(&r);
        assert_eq!(repr.num, "-22");
        assert_eq!(repr.den, "7");
        assert_eq!(repr.to_rational().unwrap(), r);
    }

    #[test]
    fn repr_rejects_zero_denominator() {
        let repr = RationalRepr {
            num: "1".into(),
            den: "0".into(),
        };
        assert!(repr.to_rational().is_err());
    }

    #[test]
    fn flexible_number_forms() {
        let n: FlexibleNumber = serde_json::from_str("3").unwrap();
        assert_eq!(n.to_rational().unwrap(), rat_int(3));
        let n: FlexibleNumber = serde_json::from_str("0.25").unwrap();
        assert_eq!(n.to_rational().unwrap(), rat(1, 4));
        let n: FlexibleNumber = serde_json::from_str(r#"{"num":"1","den":"100"}"#).unwrap();
        assert_eq!(n.to_rational().unwrap(), rat(1, 100));
    }
}
