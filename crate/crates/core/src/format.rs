//! Fixed-precision number formatting shared by every text output.

/// Significant digits written for every real number in text outputs.
pub const SIGNIFICANT_DIGITS: usize = 9;

/// Formats `x` with nine significant digits in the style of C's `%.9g`.
///
/// The output is stable across runs and platforms, which keeps written files
/// byte-comparable.
pub fn fmt_g9(x: f64) -> String {
    fmt_sig(x, SIGNIFICANT_DIGITS)
}

/// `%.{digits}g` formatting.
pub fn fmt_sig(x: f64, digits: usize) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    let digits = digits.max(1);
    // Round in scientific form first so the exponent reflects the rounded value.
    let sci = format!("{:.*e}", digits - 1, x);
    let (mantissa, exp) = sci.split_once('e').expect("scientific format");
    let exp: i32 = exp.parse().expect("exponent");
    if exp < -4 || exp >= digits as i32 {
        let mantissa = trim_zeros(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{mantissa}e{sign}{:02}", exp.abs())
    } else {
        let decimals = (digits as i32 - 1 - exp).max(0) as usize;
        trim_zeros(&format!("{:.*}", decimals, x)).to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}
