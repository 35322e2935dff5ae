//! C-style `%.Ng` formatting.

/// Formats `x` like C's `printf("%.*g", precision, x)`.
pub fn fmt_g(x: f64, precision: usize) -> String {
    let p = precision.max(1);
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return if x.is_sign_negative() { "-0".into() } else { "0".into() };
    }
    let sci = format!("{:.*e}", p - 1, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if exp < -4 || exp >= p as i32 {
        let m = strip_zeros(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{m}e{sign}{:02}", exp.abs())
    } else {
        let decimals = (p as i32 - 1 - exp).max(0) as usize;
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

pub fn g9(x: f64) -> String {
    fmt_g(x, 9)
}

pub fn g17(x: f64) -> String {
    fmt_g(x, 17)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matches_printf() {
        // Reference strings from printf("%.9g") / printf("%.17g").
        let cases = [
            (0.1, 9, "0.1"),
            (1.0 / 3.0, 9, "0.333333333"),
            (123456789.0, 9, "123456789"),
            (1234567890.0, 9, "1.23456789e+09"),
            (1e-5, 9, "1e-05"),
            (0.0001, 9, "0.0001"),
            (-2.5, 9, "-2.5"),
            (0.1, 17, "0.10000000000000001"),
            (100.0, 3, "100"),
            (1000.0, 3, "1e+03"),
            (9.9999999999, 9, "10"),
        ];
        for (x, p, want) in cases {
            assert_eq!(fmt_g(x, p), want, "x = {x}, p = {p}");
        }
    }

    #[test]
    fn round_trips_at_17_digits() {
        for x in [std::f64::consts::PI, -1e-300, 6.02214076e23, 0.1 + 0.2] {
            assert_eq!(g17(x).parse::<f64>().unwrap(), x);
        }
    }

    #[test]
    fn specials() {
        assert_eq!(g9(f64::NAN), "nan");
        assert_eq!(g9(f64::NEG_INFINITY), "-inf");
        assert_eq!(g9(0.0), "0");
    }
}
