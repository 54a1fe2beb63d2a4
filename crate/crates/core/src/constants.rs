//! Physical constants and species masses, SI units.
//!
//! | name | value | unit |
//! |------|-------|------|
//! | `PLANCK` | 6.626 070 15e-34 | J s (exact, unreduced h) |
//! | `STANDARD_GRAVITY` | 9.806 65 | m s^-2 |
//! | cesium-133 | 2.2069e-25 | kg |
//! | rubidium-87 | 1.443 16e-25 | kg |
//! | sodium-23 | 3.817 54e-26 | kg |
//! | neon-20 | 3.320 4e-26 | kg |
//! | helium-4 | 6.646 48e-27 | kg |
//!
//! The effective expansion length uses the unreduced Planck constant,
//! `L^2 = h t / M`.

/// Planck constant h (not h-bar), J s.
pub const PLANCK: f64 = 6.626_070_15e-34;

pub const STANDARD_GRAVITY: f64 = 9.806_65;

pub const CESIUM_MASS: f64 = 2.2069e-25;
pub const RUBIDIUM87_MASS: f64 = 1.443_16e-25;
pub const SODIUM_MASS: f64 = 3.817_54e-26;
pub const NEON20_MASS: f64 = 3.320_4e-26;
pub const HELIUM4_MASS: f64 = 6.646_48e-27;

/// Lattice constant used by the resolution figures when none is configured.
pub const DEFAULT_LATTICE_CONST: f64 = 0.5e-6;
/// Local packet width used by the resolution figures when none is configured.
pub const DEFAULT_PACKET_WIDTH: f64 = 30e-9;

/// Looks up an atomic mass by (case-insensitive) species name.
pub fn species_mass(name: &str) -> Option<f64> {
    match name.to_ascii_lowercase().as_str() {
        "cesium" | "caesium" | "cs" | "cs133" => Some(CESIUM_MASS),
        "rubidium" | "rb" | "rb87" | "rubidium87" => Some(RUBIDIUM87_MASS),
        "sodium" | "na" | "na23" => Some(SODIUM_MASS),
        "neon" | "ne" | "ne20" => Some(NEON20_MASS),
        "helium" | "he" | "he4" => Some(HELIUM4_MASS),
        _ => None,
    }
}
