//! Phase engine for light-pulse atom interferometers.
//!
//! Models chirped laser beams propagating in weak gravity, the effective
//! two-photon field they form, and the first-order corrections the finite
//! speed of light, the frequency chirp, and the internal-state mass defect
//! imprint on closed interferometer geometries. A nonperturbative
//! reduced-light-speed oracle revalidates every closed-form result, and a
//! gravimetry layer inverts the zero fringe for the gravitational
//! acceleration with analytic offset and error budgets.

// Validation guards use `!(x > 0.0)` so NaN inputs are rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod constants;
pub mod error;
pub mod geometry;
pub mod gravimetry;
pub mod light_field;
pub mod numerics;
pub mod oracle;
pub mod perturbation;
pub mod trajectory;

pub use constants::{PhysicalConstants, HBAR, SPEED_OF_LIGHT};
pub use error::CoreError;
pub use geometry::{build_butterfly, build_mzi, check_closure, Arm, Geometry, PulseEvent};
pub use gravimetry::{
    compensation_delay, e1m1_differential_phase, error_budget, offset_gamma_analytic,
    offset_report, solve_zero_fringe, ErrorBudget, OffsetReport, ZeroFringe, ZeroFringeUnknown,
};
pub use light_field::{
    envelope, phase_effective, phase_single, resonant_delta_omega, BeamDirection, EffectiveField,
    LaserBeam, Mechanism, MechanismKind, MechanismParams, PulseEnvelope,
};
pub use oracle::{exact_arm_phase, exact_phase_difference, extract_series, OracleRun};
pub use perturbation::{
    arm_phase_functional_a, arm_phase_functional_b, compensation_phase, total_phase,
    unperturbed_phase, Compensation, PhaseBreakdown, Scenario, ScenarioSpec,
};
pub use trajectory::{
    interaction_delay, propagate_idealized, solve_exact_interaction_time, velocity_symmetric,
    ArmTrajectory, AtomSpecies, InitialConditions,
};
