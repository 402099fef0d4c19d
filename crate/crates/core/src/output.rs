//! Fixed-format numeric output. Every data column is written as
//! full-precision scientific notation so repeated runs diff cleanly and
//! parse back to bit-identical doubles.

/// 17 significant digits, scientific: enough to round-trip any f64.
pub fn full_precision(v: f64) -> String {
    format!("{v:.16e}")
}
