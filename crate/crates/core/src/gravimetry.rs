//! Gravimetric use of the interferometer: invert the zero fringe for the
//! gravitational acceleration, compare against analytic offsets, propagate
//! measurement uncertainties, and pick timing-shift compensation delays.

use crate::constants::PhysicalConstants;
use crate::error::CoreError;
use crate::light_field::{Mechanism, MechanismKind};
use crate::numerics::{brent, expand_bracket};
use crate::perturbation::{total_phase, Scenario};

/// Which variable the zero-fringe solve treats as unknown.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ZeroFringeUnknown {
    /// Solve `phase(g) = 0` at fixed chirp rate.
    GravityGivenChirp,
    /// Solve `phase(sigma) = 0` at fixed gravity.
    ChirpGivenGravity,
}

/// Zero-fringe inversion result.
#[derive(Clone, Copy, Debug)]
pub struct ZeroFringe {
    /// The root (g or sigma depending on the unknown).
    pub root: f64,
    /// Fractional offset `g / sigma - 1` at the root.
    pub gamma: f64,
}

/// Analytic vs. numeric fractional offset for one mechanism.
#[derive(Clone, Copy, Debug)]
pub struct OffsetReport {
    pub mechanism: MechanismKind,
    pub gamma_analytic: f64,
    pub gamma_numeric: f64,
}

/// Gravimetric uncertainty budget.
#[derive(Clone, Copy, Debug)]
pub struct ErrorBudget {
    /// Phase uncertainty input (rad).
    pub delta_phi: f64,
    /// Initial-velocity spread input (m/s).
    pub delta_v0: f64,
    /// Resulting gravity uncertainty (m/s^2).
    pub delta_g: f64,
    /// Prior gravity uncertainty used by the compensated budget (m/s^2).
    pub gamma_prior: f64,
    pub compensated: bool,
}

/// Find the zero fringe by safeguarded root solving.
///
/// The bracket starts at one part in 1e4 around the seed (the offsets are
/// parts in 1e8 physically) and widens geometrically if needed.
type PhaseFn<'a> = Box<dyn Fn(f64) -> f64 + 'a>;

pub fn solve_zero_fringe(
    s: &Scenario,
    unknown: ZeroFringeUnknown,
) -> Result<ZeroFringe, CoreError> {
    let (seed, eval): (f64, PhaseFn) = match unknown {
        ZeroFringeUnknown::GravityGivenChirp => (
            s.chirp_rate,
            Box::new(move |g| {
                total_phase(&s.with_gravity(g))
                    .map(|b| b.total)
                    .unwrap_or(f64::NAN)
            }),
        ),
        ZeroFringeUnknown::ChirpGivenGravity => (
            s.gravity,
            Box::new(move |sigma| {
                total_phase(&s.with_chirp_rate(sigma))
                    .map(|b| b.total)
                    .unwrap_or(f64::NAN)
            }),
        ),
    };
    if !(seed > 0.0) {
        return Err(CoreError::InvalidInput(
            "zero-fringe seed (chirp rate or gravity) must be positive".into(),
        ));
    }
    let f = |x: f64| eval(x);
    let (a, b) = expand_bracket(&f, seed, 1e-4 * seed, 24)?;
    let root = if a == b { a } else { brent(&f, a, b, 1e-15)? };
    let gamma = match unknown {
        ZeroFringeUnknown::GravityGivenChirp => root / s.chirp_rate - 1.0,
        ZeroFringeUnknown::ChirpGivenGravity => s.gravity / root - 1.0,
    };
    Ok(ZeroFringe { root, gamma })
}

/// Closed-form fractional offset `g/sigma - 1` at the zero fringe for a
/// three-pulse gravimeter.
///
/// Recoilless drives are refused: with no momentum transfer the signal
/// carries no gravity fringe to lock to.
pub fn offset_gamma_analytic(
    mech: &Mechanism,
    v_res: f64,
    v0: f64,
    sigma: f64,
    t_interrogation: f64,
    consts: &PhysicalConstants,
) -> Result<f64, CoreError> {
    let c = consts.c;
    let doppler = (v_res - v0) / c;
    match mech.kind {
        MechanismKind::Spt => Ok(doppler + sigma * t_interrogation / c),
        MechanismKind::Bragg => Ok(doppler),
        MechanismKind::Raman => {
            Ok(doppler + (mech.delta_k / mech.k_eff) * sigma * t_interrogation / c)
        }
        MechanismKind::E1M1 => Err(CoreError::UnsupportedMechanism {
            operation: "gravimetric offset",
            mechanism: "E1-M1",
            reason: "recoilless drives transfer no momentum and are not suitable for gravimetry",
        }),
    }
}

/// Numeric and analytic offsets side by side.
pub fn offset_report(s: &Scenario) -> Result<OffsetReport, CoreError> {
    let t = s.mzi_interrogation_time().ok_or_else(|| {
        CoreError::InvalidInput("gravimetric offsets are derived for the three-pulse sequence".into())
    })?;
    let gamma_analytic = offset_gamma_analytic(
        &s.mechanism,
        s.initial.v_res,
        s.initial.v0,
        s.chirp_rate,
        t,
        &s.constants,
    )?;
    let zero = solve_zero_fringe(s, ZeroFringeUnknown::GravityGivenChirp)?;
    Ok(OffsetReport {
        mechanism: s.mechanism.kind,
        gamma_analytic,
        gamma_numeric: zero.gamma,
    })
}

/// Gaussian error propagation for the single-photon gravimeter, linearized
/// in 1/c, keeping the phase-noise and initial-velocity channels.
///
/// Uncompensated: `(dg/sigma)^2 = (1 + 2 (v_res - v0 + 2 sigma T)/c) (dphi/(K sigma T^2))^2 + (dv0/c)^2`.
/// Compensated:   `(dg/sigma)^2 = (1 - 2 (Gamma - sigma) T / c) (dphi/(K sigma T^2))^2 + (Gamma dv0 / (sigma c))^2`.
pub fn error_budget(
    s: &Scenario,
    delta_phi: f64,
    delta_v0: f64,
    compensated: bool,
    gamma_prior: f64,
) -> Result<ErrorBudget, CoreError> {
    if s.mechanism.kind != MechanismKind::Spt {
        return Err(CoreError::UnsupportedMechanism {
            operation: "error budget",
            mechanism: s.mechanism.kind.name(),
            reason: "the published budgets are derived for single-photon drives",
        });
    }
    let t = s.mzi_interrogation_time().ok_or_else(|| {
        CoreError::InvalidInput("error budgets are derived for the three-pulse sequence".into())
    })?;
    let c = s.constants.c;
    let sigma = s.chirp_rate;
    let phase_gain = delta_phi / (s.mechanism.k_eff * sigma * t * t);
    let rel_var = if compensated {
        (1.0 - 2.0 * (gamma_prior - sigma) * t / c) * phase_gain * phase_gain
            + (gamma_prior * delta_v0 / (sigma * c)).powi(2)
    } else {
        (1.0 + 2.0 * (s.initial.v_res - s.initial.v0 + 2.0 * sigma * t) / c)
            * phase_gain
            * phase_gain
            + (delta_v0 / c).powi(2)
    };
    Ok(ErrorBudget {
        delta_phi,
        delta_v0,
        delta_g: sigma * rel_var.sqrt(),
        gamma_prior,
        compensated,
    })
}

/// Mirror-pulse delay that cancels the initial-velocity dependence of a
/// three-pulse gravimeter at first order.
pub fn compensation_delay(
    kind: MechanismKind,
    g_estimate: f64,
    gamma_prior: f64,
    sigma: f64,
    t_interrogation: f64,
    consts: &PhysicalConstants,
) -> Result<f64, CoreError> {
    let c = consts.c;
    let t2 = t_interrogation * t_interrogation;
    match kind {
        MechanismKind::Spt => Ok(-(g_estimate + gamma_prior) * t2 / (2.0 * c)),
        MechanismKind::Bragg => {
            Ok(-(3.0 * g_estimate + 3.0 * gamma_prior - 2.0 * sigma) * t2 / (2.0 * c))
        }
        other => Err(CoreError::UnsupportedMechanism {
            operation: "compensation delay",
            mechanism: other.name(),
            reason: "published delays exist for single-photon and Bragg drives only",
        }),
    }
}

/// Differential phase of the recoilless test geometry: two interferometers
/// whose arms are first separated at velocity `v_b` and then driven by
/// Doppler-free pulses; the difference isolates the light-delay signal.
pub fn e1m1_differential_phase(
    v_b: f64,
    t_interrogation: f64,
    k_a: f64,
    g: f64,
    consts: &PhysicalConstants,
) -> Result<f64, CoreError> {
    for (name, v) in [
        ("separation velocity", v_b),
        ("interrogation time", t_interrogation),
        ("atomic wave number", k_a),
        ("gravity", g),
    ] {
        if !(v > 0.0) {
            return Err(CoreError::InvalidInput(format!(
                "{name} must be positive, got {v:e}"
            )));
        }
    }
    Ok(k_a * g * t_interrogation * t_interrogation * 4.0 * v_b / consts.c)
}
