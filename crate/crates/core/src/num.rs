//! Numeric formatting and floating-point slack helpers.

use serde::{ser::Error as _, Serialize, Serializer};
use serde_json::value::RawValue;

/// Renders `x` like C's `%.17g`: 17 significant digits, trailing zeros
/// removed, scientific notation outside `[1e-4, 1e17)`. Round-trips every
/// finite `f64`. Non-finite values render as `null`.
pub fn fmt_g17(x: f64) -> String {
    if !x.is_finite() {
        return "null".to_string();
    }
    if x == 0.0 {
        return "0".to_string();
    }
    let sci = format!("{:.16e}", x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent marker");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-4..17).contains(&exp) {
        let mantissa = strip_zeros(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{mantissa}e{sign}{:02}", exp.abs())
    } else {
        let decimals = (16 - exp) as usize;
        strip_zeros(&format!("{:.*}", decimals, x)).to_string()
    }
}

fn strip_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// `k` ulps of a magnitude, used as rounding slack when checking inequalities
/// that hold with equality in exact arithmetic.
pub fn ulp_slack(magnitude: f64, k: u32) -> f64 {
    k as f64 * f64::EPSILON * magnitude.abs()
}

/// Inflates a nonnegative bound computed with `ops` rounded operations so it
/// stays an upper bound of the exact quantity.
pub(crate) fn round_up(x: f64, ops: usize) -> f64 {
    if x == 0.0 {
        return 0.0;
    }
    x * (1.0 + (ops as f64 + 2.0) * f64::EPSILON)
}

fn raw<S: Serializer>(text: String, s: S) -> Result<S::Ok, S::Error> {
    RawValue::from_string(text)
        .map_err(S::Error::custom)?
        .serialize(s)
}

/// serde `serialize_with` helper emitting a number with 17 significant digits.
pub fn ser_g17<S: Serializer>(x: &f64, s: S) -> Result<S::Ok, S::Error> {
    raw(fmt_g17(*x), s)
}

pub fn ser_g17_opt<S: Serializer>(x: &Option<f64>, s: S) -> Result<S::Ok, S::Error> {
    match x {
        Some(v) => raw(fmt_g17(*v), s),
        None => s.serialize_none(),
    }
}

pub fn ser_g17_vec<S: Serializer>(xs: &[f64], s: S) -> Result<S::Ok, S::Error> {
    let body: Vec<String> = xs.iter().map(|x| fmt_g17(*x)).collect();
    raw(format!("[{}]", body.join(",")), s)
}
