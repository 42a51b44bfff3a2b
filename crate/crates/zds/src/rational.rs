//! Exact-rational helpers: extended-precision conversion to `f64` and exact
//! decimal rendering.
//!
//! Totals like nᴺ overflow a naive numerator-to-double / denominator-to-double
//! conversion long before the quotient itself leaves double range, so the
//! quotient is formed at extended precision first and scaled back by exact
//! powers of two.

use num_bigint::{BigUint, Sign};
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};

/// Quotient bit width carried before the final rounding; 96 bits keep the
/// truncation error at the two stages well below one double ulp combined.
const QUOTIENT_BITS: i64 = 96;

/// `num / den` as the nearest representable `f64`, correct to within 1 ulp
/// at any operand magnitude. `den` must be nonzero.
pub fn ratio_to_f64(num: &BigUint, den: &BigUint) -> f64 {
    assert!(!den.is_zero(), "ratio denominator must be nonzero");
    if num.is_zero() {
        return 0.0;
    }
    let shift = QUOTIENT_BITS - (num.bits() as i64 - den.bits() as i64);
    let quotient = if shift >= 0 {
        (num << shift as u64) / den
    } else {
        num / (den << (-shift) as u64)
    };
    let q = quotient.to_f64().expect("quotient fits f64 after scaling");
    scale_by_pow2(q, -shift)
}

/// Signed rational to `f64`, same guarantees as [`ratio_to_f64`].
pub fn rational_to_f64(r: &BigRational) -> f64 {
    let magnitude = ratio_to_f64(r.numer().magnitude(), r.denom().magnitude());
    match r.numer().sign() {
        Sign::Minus => -magnitude,
        _ => magnitude,
    }
}

/// Multiplies by 2^e in exact chunks so intermediate scaling never rounds;
/// only the final under/overflow to subnormal, zero, or infinity can lose
/// information.
fn scale_by_pow2(mut x: f64, mut e: i64) -> f64 {
    while e > 0 {
        let step = e.min(512);
        x *= 2f64.powi(step as i32);
        if x.is_infinite() {
            return x;
        }
        e -= step;
    }
    while e < 0 {
        let step = (-e).min(512);
        x *= 2f64.powi(-(step as i32));
        if x == 0.0 {
            return x;
        }
        e += step;
    }
    x
}

/// Renders a rational exactly in base 10: a plain decimal when the reduced
/// denominator divides a power of ten, otherwise `num/den`.
///
/// Counts and statistics must survive round-trips through text; a rounded
/// decimal would silently break exactness, so non-terminating expansions fall
/// back to fraction form.
pub fn exact_decimal_string(r: &BigRational) -> String {
    let negative = r.numer().sign() == Sign::Minus;
    let num = r.numer().magnitude().clone();
    let den = r.denom().magnitude();
    let sign = if negative { "-" } else { "" };

    let (twos, rest) = strip_factor(den.clone(), 2u32);
    let (fives, rest) = strip_factor(rest, 5u32);
    if !rest.is_one() {
        return format!("{sign}{num}/{den}");
    }
    let digits = twos.max(fives);
    if digits == 0 {
        return format!("{sign}{num}");
    }
    // num / (2^twos 5^fives) == num * 2^(digits-twos) * 5^(digits-fives) / 10^digits
    let scaled = num
        * BigUint::from(2u32).pow(digits - twos)
        * BigUint::from(5u32).pow(digits - fives);
    let text = scaled.to_string();
    let text = if (text.len() as u32) <= digits {
        format!("{}{}", "0".repeat((digits + 1) as usize - text.len()), text)
    } else {
        text
    };
    let split = text.len() - digits as usize;
    let frac = text[split..].trim_end_matches('0');
    if frac.is_empty() {
        format!("{sign}{}", &text[..split])
    } else {
        format!("{sign}{}.{}", &text[..split], frac)
    }
}

fn strip_factor(mut value: BigUint, factor: u32) -> (u32, BigUint) {
    let factor = BigUint::from(factor);
    let mut count = 0;
    while !value.is_one() && (&value % &factor).is_zero() {
        value /= &factor;
        count += 1;
    }
    (count, value)
}
