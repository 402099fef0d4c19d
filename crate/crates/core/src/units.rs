//! Unit conventions and conversions.
//!
//! Device files store linear frequencies (GHz for mode/qubit frequencies,
//! MHz for couplings and spacings, matching how such parameters are usually
//! tabulated). All internal computation uses angular frequency in rad/µs and
//! time in µs, which keeps Hamiltonian entries O(1)–O(10^4) after the frame
//! shift.
//!
//! 1 GHz = 1000 cycles/µs, 1 MHz = 1 cycle/µs.

use std::f64::consts::TAU;

/// Linear GHz to angular rad/µs.
pub fn ghz_to_rad_per_us(f_ghz: f64) -> f64 {
    TAU * 1000.0 * f_ghz
}

/// Angular rad/µs to linear GHz.
pub fn rad_per_us_to_ghz(w: f64) -> f64 {
    w / (TAU * 1000.0)
}

/// Linear MHz to angular rad/µs.
pub fn mhz_to_rad_per_us(f_mhz: f64) -> f64 {
    TAU * f_mhz
}

/// Angular rad/µs to linear MHz.
pub fn rad_per_us_to_mhz(w: f64) -> f64 {
    w / TAU
}

/// GHz to MHz.
pub fn ghz_to_mhz(f_ghz: f64) -> f64 {
    1000.0 * f_ghz
}
