//! Fixed, platform-independent float formatting for every text artifact.

/// Formats `x` like C's `%.12g`: 12 significant digits, trailing zeros
/// trimmed, scientific notation outside [1e-4, 1e12).
pub fn g12(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let sci = format!("{:.11e}", x);
    let (mant, exp) = sci.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-4..12).contains(&exp) {
        let decimals = (11 - exp).max(0) as usize;
        trim(format!("{:.*}", decimals, x))
    } else {
        let m = trim(mant.to_string());
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{m}e{sign}{:02}", exp.abs())
    }
}

fn trim(s: String) -> String {
    if !s.contains('.') {
        return s;
    }
    let t = s.trim_end_matches('0').trim_end_matches('.');
    if t == "-0" {
        "0".into()
    } else {
        t.to_string()
    }
}

#[cfg(test)]
mod tests {
    use super::g12;

    #[test]
    fn matches_percent_g() {
        assert_eq!(g12(0.0), "0");
        assert_eq!(g12(-0.0), "0");
        assert_eq!(g12(1.0), "1");
        assert_eq!(g12(0.5), "0.5");
        assert_eq!(g12(-1.0 / 3.0), "-0.333333333333");
        assert_eq!(g12(2.0 / 3.0), "0.666666666667");
        assert_eq!(g12(7.5624), "7.5624");
        assert_eq!(g12(123456789012.0), "123456789012");
        assert_eq!(g12(1e12), "1e+12");
        assert_eq!(g12(1.5e-7), "1.5e-07");
        assert_eq!(g12(0.0001), "0.0001");
        assert_eq!(g12(-2.5e-300), "-2.5e-300");
        assert_eq!(g12(9.9999999999999e-6), "1e-05");
    }
}
