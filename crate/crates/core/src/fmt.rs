//! Number formatting for text outputs.

/// Formats `x` with `digits` significant digits in the style of C's `%g`:
/// plain decimal for moderate exponents, scientific otherwise, trailing zeros
/// trimmed.
pub fn sig(x: f64, digits: usize) -> String {
    let digits = digits.max(1);
    if x == 0.0 {
        return "0".to_string();
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    let sci = format!("{:.*e}", digits - 1, x);
    let (mantissa, exp) = sci.split_once('e').expect("scientific format has an exponent");
    let exp: i32 = exp.parse().expect("exponent is an integer");
    if exp < -5 || exp >= digits as i32 {
        let mantissa = trim_zeros(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        return format!("{mantissa}e{sign}{:02}", exp.abs());
    }
    let decimals = (digits as i32 - 1 - exp).max(0) as usize;
    trim_zeros(&format!("{:.*}", decimals, x)).to_string()
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

#[cfg(test)]
mod tests {
    use super::sig;

    #[test]
    fn matches_printf_g() {
        assert_eq!(sig(0.0, 12), "0");
        assert_eq!(sig(1.0, 12), "1");
        assert_eq!(sig(2.0 / 3.0, 12), "0.666666666667");
        assert_eq!(sig(0.25, 12), "0.25");
        assert_eq!(sig(1e-7, 12), "1e-07");
        assert_eq!(sig(-1234.5, 3), "-1.23e+03");
        assert_eq!(sig(0.000123456, 3), "0.000123");
    }

    #[test]
    fn twelve_digits_round_trip_within_precision() {
        for &x in &[0.123456789012345, 3.0 / 7.0, 1e-3, 0.999999999999] {
            let back: f64 = sig(x, 12).parse().unwrap();
            assert!((back - x).abs() <= 1e-12 * x.abs().max(1e-300) * 10.0);
        }
    }
}
