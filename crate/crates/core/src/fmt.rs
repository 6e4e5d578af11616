//! Number formatting for reproducible text output.
//!
//! All floats written to reports or artifacts pass through here so two
//! runs of the same build produce byte-identical files.

/// Format with nine significant digits, trailing zeros trimmed.
pub fn sig9(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    // Round through the exponent form, then let Display pick the
    // shortest representation of the rounded value.
    let rounded: f64 = format!("{x:.8e}").parse().expect("roundtrip");
    format!("{rounded}")
}

/// Round to nine decimal places, for floats embedded in JSON.
pub fn round9(x: f64) -> f64 {
    if !x.is_finite() {
        return x;
    }
    (x * 1e9).round() / 1e9
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sig9_trims_and_rounds() {
        assert_eq!(sig9(0.0), "0");
        assert_eq!(sig9(1.0), "1");
        assert_eq!(sig9(-2.5), "-2.5");
        assert_eq!(sig9(1.0 / 3.0), "0.333333333");
        assert_eq!(sig9(123456789.123), "123456789");
        assert_eq!(sig9(0.1 + 0.2), "0.3");
    }

    #[test]
    fn round9_is_stable() {
        assert_eq!(round9(0.1 + 0.2), 0.3);
        assert_eq!(round9(1.23456789049), 1.23456789);
        assert_eq!(round9(-0.000000000_4), -0.0);
    }
}
