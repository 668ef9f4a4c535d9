//! Physical constants carried explicitly so the light speed can be rescaled.

use crate::error::CoreError;

/// Speed of light in vacuum (m/s, exact by SI definition).
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Reduced Planck constant (J s, exact by SI definition of h).
pub const HBAR: f64 = 1.054_571_817e-34;

/// Constants threaded through every operation.
///
/// `c` is overridable: the validation oracle reruns the whole engine at
/// artificially reduced light speeds to amplify the 1/c effects.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PhysicalConstants {
    pub c: f64,
    pub hbar: f64,
}

impl PhysicalConstants {
    pub const SI: PhysicalConstants = PhysicalConstants {
        c: SPEED_OF_LIGHT,
        hbar: HBAR,
    };

    pub fn new(c: f64, hbar: f64) -> Result<Self, CoreError> {
        if !(c > 0.0) || !c.is_finite() {
            return Err(CoreError::InvalidInput(format!(
                "speed of light must be positive and finite, got {c:e}"
            )));
        }
        if !(hbar > 0.0) || !hbar.is_finite() {
            return Err(CoreError::InvalidInput(format!(
                "hbar must be positive and finite, got {hbar:e}"
            )));
        }
        Ok(PhysicalConstants { c, hbar })
    }

    /// Same constants with a different light speed.
    pub fn with_light_speed(self, c: f64) -> Result<Self, CoreError> {
        PhysicalConstants::new(c, self.hbar)
    }
}

impl Default for PhysicalConstants {
    fn default() -> Self {
        PhysicalConstants::SI
    }
}
