//! Coefficient scalar abstraction for the symbolic layer.
//!
//! Everything in [`crate::poly`], [`crate::operators`] and the eigenvalue
//! formulas of [`crate::spectrum`] only needs exact field arithmetic, so it
//! is written against this trait. `BigRational` gives the exact path used
//! for theorem-level verification; `f64`/`f32` give the approximate path
//! used when an irrational exponent is wanted.

use num_traits::{FromPrimitive, Num, NumAssign, Signed, ToPrimitive};
use std::fmt::{Debug, Display};

use crate::Rat;

/// Field scalar usable as a polynomial coefficient.
pub trait Scalar:
    Num + NumAssign + Signed + FromPrimitive + ToPrimitive + Clone + PartialOrd + Debug + Display
{
    /// `p/q` as a scalar; panics if `q == 0`.
    fn ratio(p: i64, q: i64) -> Self {
        assert!(q != 0, "zero denominator");
        Self::from_i64(p).expect("numerator representable")
            / Self::from_i64(q).expect("denominator representable")
    }

    /// Lossy conversion used when handing exact data to the numeric layer.
    fn to_float(&self) -> f64 {
        self.to_f64().expect("scalar convertible to f64")
    }
}

impl<T> Scalar for T where
    T: Num
        + NumAssign
        + Signed
        + FromPrimitive
        + ToPrimitive
        + Clone
        + PartialOrd
        + Debug
        + Display
{
}

/// Parses a scalar written either as a fraction `p/q` or as a plain
/// decimal/integer literal. Decimals are read digit-exactly (`1.25` becomes
/// `5/4` when `T` is rational).
pub fn parse_ratio<T: Scalar>(text: &str) -> Result<T, String> {
    let text = text.trim();
    if let Some((p, q)) = text.split_once('/') {
        let p: i64 = p
            .trim()
            .parse()
            .map_err(|_| format!("invalid numerator in `{text}`"))?;
        let q: i64 = q
            .trim()
            .parse()
            .map_err(|_| format!("invalid denominator in `{text}`"))?;
        if q == 0 {
            return Err(format!("zero denominator in `{text}`"));
        }
        return Ok(T::ratio(p, q));
    }
    if let Some((int, frac)) = text.split_once('.') {
        let sign = if int.trim_start().starts_with('-') { -1 } else { 1 };
        let int: i64 = if int.is_empty() || int == "-" {
            0
        } else {
            int.parse().map_err(|_| format!("invalid number `{text}`"))?
        };
        if frac.is_empty() || !frac.bytes().all(|b| b.is_ascii_digit()) {
            return Err(format!("invalid number `{text}`"));
        }
        let digits: i64 = frac
            .parse()
            .map_err(|_| format!("fractional part of `{text}` too long"))?;
        let scale = 10i64
            .checked_pow(frac.len() as u32)
            .ok_or_else(|| format!("fractional part of `{text}` too long"))?;
        return Ok(T::from_i64(int).expect("integer part representable")
            + T::ratio(sign * digits, scale));
    }
    let int: i64 = text
        .parse()
        .map_err(|_| format!("invalid number `{text}`"))?;
    Ok(T::from_i64(int).expect("integer representable"))
}

/// Exact rational from a flag-style string, see [`parse_ratio`].
pub fn parse_rat(text: &str) -> Result<Rat, String> {
    parse_ratio::<Rat>(text)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rat;

    #[test]
    fn ratio_on_both_scalars() {
        assert_eq!(Rat::ratio(3, 2), rat(3, 2));
        assert_eq!(f64::ratio(3, 2), 1.5);
    }

    #[test]
    fn parse_fraction_and_decimal() {
        assert_eq!(parse_rat("3/2").unwrap(), rat(3, 2));
        assert_eq!(parse_rat("1.25").unwrap(), rat(5, 4));
        assert_eq!(parse_rat("-0.5").unwrap(), rat(-1, 2));
        assert_eq!(parse_rat("2").unwrap(), rat(2, 1));
        assert_eq!(parse_ratio::<f64>("3/2").unwrap(), 1.5);
        assert!(parse_rat("1/0").is_err());
        assert!(parse_rat("abc").is_err());
    }
}
