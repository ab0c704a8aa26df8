//! Physical constants and unit conversions.
//!
//! All rates and frequencies inside the library are angular (rad/s).
//! Hz, kelvin, tesla and seconds appear only at I/O boundaries.

/// Planck constant, exact SI value (J·s).
pub const PLANCK: f64 = 6.626_070_15e-34;

/// Boltzmann constant, exact SI value (J/K).
pub const BOLTZMANN: f64 = 1.380_649e-23;

/// 2π, for Hz ↔ rad/s conversions.
pub const TAU: f64 = std::f64::consts::TAU;

/// Convert an ordinary frequency in Hz to angular frequency in rad/s.
#[inline]
pub fn hz_to_rad(f_hz: f64) -> f64 {
    TAU * f_hz
}

/// Convert an angular frequency in rad/s to ordinary frequency in Hz.
#[inline]
pub fn rad_to_hz(w_rad: f64) -> f64 {
    w_rad / TAU
}
