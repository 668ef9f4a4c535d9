//! Error type shared across the engine.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CoreError {
    /// Scenario, geometry, or mechanism inputs violate a stated constraint.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// Pulse schedule does not return both arms to the same phase-space point.
    #[error(
        "geometry does not close in phase space: dz = {dz:e} m, dv = {dv:e} m/s \
         (normalized {dz_natural:e}, {dv_natural:e})"
    )]
    OpenGeometry {
        dz: f64,
        dv: f64,
        dz_natural: f64,
        dv_natural: f64,
    },

    /// The artificial light speed does not outrun the atoms.
    #[error(
        "causality violated: light speed {c_tilde:e} m/s must exceed 10x the \
         maximum atomic speed {max_speed:e} m/s"
    )]
    Causality { c_tilde: f64, max_speed: f64 },

    /// Root bracketing failed to find a sign change.
    #[error("no sign change found around {center:e} within half-width {half_width:e}")]
    NoBracket { center: f64, half_width: f64 },

    /// Operation is not defined for this diffraction mechanism.
    #[error("{operation} is not supported for the {mechanism} mechanism: {reason}")]
    UnsupportedMechanism {
        operation: &'static str,
        mechanism: &'static str,
        reason: &'static str,
    },

    /// Requested time lies outside the trajectory span.
    #[error("time {t:e} s outside trajectory span [{start:e}, {end:e}] s")]
    OutsideSpan { t: f64, start: f64, end: f64 },

    /// Series extraction needs at least four samples.
    #[error("series fit needs at least 4 points, got {points}")]
    FitUnderdetermined { points: usize },

    /// Degenerate design matrix (sample speeds too clustered).
    #[error("series fit is ill-conditioned: sample points too clustered")]
    FitIllConditioned,
}
