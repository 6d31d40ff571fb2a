//! Fixed significant-digit number formatting shared by every emitter.

/// Significant digits used for all emitted numbers.
pub const DIGITS: usize = 6;

/// Formats `x` with `digits` significant digits in the style of C's `%g`:
/// fixed notation for moderate exponents, scientific otherwise, trailing
/// zeros removed.
pub fn format_sig(x: f64, digits: usize) -> String {
    let digits = digits.max(1);
    if x == 0.0 {
        return "0".to_string();
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    let sci = format!("{:.*e}", digits - 1, x);
    let (mantissa, exponent) = sci.split_once('e').expect("`{:e}` always has an exponent");
    let exponent: i32 = exponent.parse().expect("exponent is an integer");
    if exponent < -5 || exponent >= digits as i32 {
        format!("{}e{}", trim_zeros(mantissa), exponent)
    } else {
        let decimals = (digits as i32 - 1 - exponent).max(0) as usize;
        trim_zeros(&format!("{x:.decimals$}")).to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// Formats with [`DIGITS`] significant digits.
pub fn fmt6(x: f64) -> String {
    format_sig(x, DIGITS)
}

/// Rounds `x` to [`DIGITS`] significant digits.
pub fn round6(x: f64) -> f64 {
    if x.is_finite() {
        fmt6(x).parse().expect("formatted number parses")
    } else {
        x
    }
}

/// `serialize_with` adaptors so serde output carries exactly six significant digits.
pub mod serde6 {
    use serde::Serializer;

    pub fn f64<S: Serializer>(x: &f64, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_f64(super::round6(*x))
    }

    pub fn opt_f64<S: Serializer>(x: &Option<f64>, s: S) -> Result<S::Ok, S::Error> {
        match x {
            Some(v) => s.serialize_some(&super::round6(*v)),
            None => s.serialize_none(),
        }
    }
}
