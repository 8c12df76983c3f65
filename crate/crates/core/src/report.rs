//! Number formatting shared by every CSV writer.

/// Round to 9 significant digits and print the shortest decimal form that
/// reads back to the rounded value. Integral values keep a trailing `.0`;
/// non-finite values print as `inf`, `-inf` or `NaN`.
pub fn fmt_num(x: f64) -> String {
    if !x.is_finite() {
        return format!("{x:?}");
    }
    let rounded: f64 = format!("{x:.8e}").parse().expect("formatted float parses");
    // avoid "-0.0"
    let rounded = if rounded == 0.0 { 0.0 } else { rounded };
    format!("{rounded:?}")
}

/// Power ratio in decibels; zero maps to negative infinity.
pub fn to_db(ratio: f64) -> f64 {
    10.0 * ratio.log10()
}

pub fn from_db(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}
