//! Scalar abstraction shared by the parity and aggregation code.
//!
//! Scores are carried either as machine floats or as exact rationals. The
//! rational form is what the golden-table checks use, so that a printed
//! value sitting exactly on a rounding boundary compares exactly.

use std::fmt::{Debug, Display};

use num_rational::Ratio;
use num_traits::{FromPrimitive, Num, ToPrimitive};

/// A real-valued score type.
pub trait Scalar:
    Num + Clone + PartialOrd + Debug + Display + ToPrimitive + FromPrimitive + Send + Sync + 'static
{
    /// Parses a plain decimal literal (`-12.375`, `43.40`, `7`).
    fn parse_decimal(text: &str) -> Option<Self>;

    fn is_finite_value(&self) -> bool;

    fn as_f64(&self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    /// Converts a count into the scalar type.
    fn from_count(n: usize) -> Self {
        Self::from_usize(n).expect("count representable in scalar type")
    }
}

macro_rules! impl_float_scalar {
    ($t:ty) => {
        impl Scalar for $t {
            fn parse_decimal(text: &str) -> Option<Self> {
                text.trim().parse::<$t>().ok().filter(|v| v.is_finite())
            }

            fn is_finite_value(&self) -> bool {
                self.is_finite()
            }
        }
    };
}

impl_float_scalar!(f32);
impl_float_scalar!(f64);

impl Scalar for Ratio<i64> {
    fn parse_decimal(text: &str) -> Option<Self> {
        let (negative, digits) = split_sign(text.trim())?;
        let (int_part, frac_part) = match digits.split_once('.') {
            Some((i, f)) => (i, f),
            None => (digits, ""),
        };
        if int_part.is_empty() && frac_part.is_empty() {
            return None;
        }
        if !int_part.bytes().chain(frac_part.bytes()).all(|b| b.is_ascii_digit()) {
            return None;
        }
        let mut numer: i64 = 0;
        for b in int_part.bytes().chain(frac_part.bytes()) {
            numer = numer.checked_mul(10)?.checked_add(i64::from(b - b'0'))?;
        }
        let denom = 10i64.checked_pow(u32::try_from(frac_part.len()).ok()?)?;
        let value = Ratio::new(numer, denom);
        Some(if negative { -value } else { value })
    }

    fn is_finite_value(&self) -> bool {
        true
    }
}

fn split_sign(text: &str) -> Option<(bool, &str)> {
    match text.as_bytes().first()? {
        b'-' => Some((true, &text[1..])),
        b'+' => Some((false, &text[1..])),
        _ => Some((false, text)),
    }
}

/// Rounds to `places` decimal places, half away from zero.
pub fn round_to(value: f64, places: u32) -> f64 {
    let scale = 10f64.powi(places as i32);
    (value * scale).round() / scale
}
