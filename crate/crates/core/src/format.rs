//! Number formatting shared by the CSV and report writers.

/// Formats `x` with at most six significant digits, `%g` style.
pub fn sig6(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let exp = x.abs().log10().floor() as i32;
    if (-5..6).contains(&exp) {
        let decimals = (5 - exp).max(0) as usize;
        let s = format!("{x:.decimals$}");
        // Rounding can carry into a new digit (999999.5 → 1000000); re-check.
        let s = if s.trim_start_matches('-').split('.').next().map_or(0, str::len) > 6 {
            format!("{x:.5e}")
        } else {
            s
        };
        trim_zeros(&s)
    } else {
        let s = format!("{x:.5e}");
        match s.split_once('e') {
            Some((mantissa, e)) => format!("{}e{}", trim_zeros(mantissa), e),
            None => s,
        }
    }
}

fn trim_zeros(s: &str) -> String {
    if s.contains('.') && !s.contains('e') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s.to_string()
    }
}

#[cfg(test)]
mod tests {
    use super::sig6;

    #[test]
    fn six_significant_digits() {
        assert_eq!(sig6(0.0), "0");
        assert_eq!(sig6(22.5), "22.5");
        assert_eq!(sig6(2.8284271247), "2.82843");
        assert_eq!(sig6(-0.0507123), "-0.0507123");
        assert_eq!(sig6(1800.0), "1800");
        assert_eq!(sig6(4.0e6), "4e6");
        assert_eq!(sig6(1.23456789e-7), "1.23457e-7");
        assert_eq!(sig6(0.93493333), "0.934933");
    }
}
