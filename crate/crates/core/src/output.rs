//! Deterministic text formatting shared by the CSV and JSON writers.

/// Formats `x` with six significant digits and no trailing zeros.
///
/// Fixed notation is used for decimal exponents in `[-5, 6)`, scientific
/// notation otherwise. Non-finite values print as `nan`, `inf` or `-inf`.
pub fn sig6(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let sci = format!("{x:.5e}");
    let (mantissa, exp) = sci.split_once('e').expect("scientific format");
    let exp: i32 = exp.parse().expect("exponent");
    if (-5..6).contains(&exp) {
        let decimals = (5 - exp).max(0) as usize;
        trim_zeros(format!("{x:.decimals$}"))
    } else {
        format!("{}e{exp}", trim_zeros(mantissa.to_string()))
    }
}

/// Six-digit value or an empty field.
pub fn sig6_opt(x: Option<f64>) -> String {
    x.map(sig6).unwrap_or_default()
}

fn trim_zeros(s: String) -> String {
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
