/// Formats a float with 17 significant digits so that it parses back to the
/// identical value.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}
