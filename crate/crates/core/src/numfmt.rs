//! Number formatting shared by the CSV and text writers.

/// `printf("%.*g")`-style formatting with `digits` significant digits and
/// trailing zeros removed.
pub fn format_sig(v: f64, digits: usize) -> String {
    if v.is_nan() {
        return "NaN".into();
    }
    if v.is_infinite() {
        return if v > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if v == 0.0 {
        return "0".into();
    }
    let digits = digits.max(1);
    // Round once in scientific form; the exponent after rounding decides the layout.
    let sci = format!("{:.*e}", digits - 1, v);
    let (mantissa, exp) = sci.split_once('e').expect("scientific format has an exponent");
    let exp: i32 = exp.parse().expect("exponent is an integer");
    if exp < -4 || exp >= digits as i32 {
        format!("{}e{}{:02}", trim_zeros(mantissa), if exp < 0 { '-' } else { '+' }, exp.abs())
    } else {
        let decimals = (digits as i32 - 1 - exp).max(0) as usize;
        trim_zeros(&format!("{:.*}", decimals, v)).to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// Fixed three-decimal rendering used in human-readable tables.
pub fn fixed3(v: f64) -> String {
    let s = format!("{v:.3}");
    if s == "-0.000" {
        "0.000".into()
    } else {
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matches_printf_g() {
        // expected strings from C printf("%.9g")
        assert_eq!(format_sig(1.0, 9), "1");
        assert_eq!(format_sig(0.5, 9), "0.5");
        assert_eq!(format_sig(1.0 / 3.0, 9), "0.333333333");
        assert_eq!(format_sig(2.0 / 3.0, 9), "0.666666667");
        assert_eq!(format_sig(123456789.0, 9), "123456789");
        assert_eq!(format_sig(1234567890.0, 9), "1.23456789e+09");
        assert_eq!(format_sig(9.9999999999, 9), "10");
        assert_eq!(format_sig(0.0001, 9), "0.0001");
        assert_eq!(format_sig(0.00001, 9), "1e-05");
        assert_eq!(format_sig(-1.5e-7, 9), "-1.5e-07");
        assert_eq!(format_sig(1e-5, 9), "1e-05");
        assert_eq!(format_sig(0.99999, 9), "0.99999");
        assert_eq!(format_sig(0.0, 9), "0");
    }

    #[test]
    fn three_decimals() {
        assert_eq!(fixed3(0.3094), "0.309");
        assert_eq!(fixed3(-0.0001), "0.000");
        assert_eq!(fixed3(-0.7514), "-0.751");
    }
}
