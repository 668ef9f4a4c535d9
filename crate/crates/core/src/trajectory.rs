//! Classical arm trajectories: free fall between instantaneous recoil kicks,
//! plus the retarded-time solver that locates when a pulse front actually
//! meets a moving atom.

use crate::constants::PhysicalConstants;
use crate::error::CoreError;
use crate::geometry::{Arm, Geometry};
use crate::light_field::{recoil_velocity, Mechanism};
use crate::numerics::{brent, expand_bracket};

/// Atom species: mean mass and internal splitting.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AtomSpecies {
    /// Mean mass over the two internal states (kg).
    pub m_bar: f64,
    /// Internal splitting (rad/s).
    pub omega_a: f64,
}

impl AtomSpecies {
    pub fn new(m_bar: f64, omega_a: f64) -> Result<Self, CoreError> {
        if !(m_bar > 0.0) {
            return Err(CoreError::InvalidInput(format!(
                "mean mass must be positive, got {m_bar:e}"
            )));
        }
        Ok(AtomSpecies { m_bar, omega_a })
    }

    /// State-dependent mass difference `hbar * omega_a / c^2` (kg).
    pub fn delta_m(&self, consts: &PhysicalConstants) -> f64 {
        consts.hbar * self.omega_a / (consts.c * consts.c)
    }

    /// The perturbative treatment assumes `delta_m / m_bar` is tiny; above
    /// this ratio a warning is warranted.
    pub fn mass_defect_ratio(&self, consts: &PhysicalConstants) -> f64 {
        self.delta_m(consts) / self.m_bar
    }
}

/// Where the atom starts and which velocity class the lasers address.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct InitialConditions {
    pub z0: f64,
    pub v0: f64,
    /// Resonant velocity the lasers are tuned to (m/s).
    pub v_res: f64,
}

/// One free-fall piece: `z(t) = z_start + v_start dt - g dt^2 / 2`.
#[derive(Clone, Copy, Debug)]
pub struct Segment {
    pub t_start: f64,
    pub t_end: f64,
    pub z_start: f64,
    pub v_start: f64,
    /// Constant acceleration, `-g` in uniform gravity.
    pub accel: f64,
}

impl Segment {
    #[inline]
    pub fn position(&self, t: f64) -> f64 {
        let dt = t - self.t_start;
        self.z_start + dt * (self.v_start + 0.5 * self.accel * dt)
    }

    #[inline]
    pub fn velocity(&self, t: f64) -> f64 {
        self.v_start + self.accel * (t - self.t_start)
    }
}

/// Velocity jump applied at a pulse.
#[derive(Clone, Copy, Debug)]
pub struct Kick {
    pub time: f64,
    pub delta_v: f64,
    pub pulse_index: usize,
}

/// Piecewise-parabolic trajectory of one interferometer arm.
#[derive(Clone, Debug)]
pub struct ArmTrajectory {
    segments: Vec<Segment>,
    kicks: Vec<Kick>,
    end_time: f64,
    end_velocity: f64,
}

impl ArmTrajectory {
    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    pub fn kicks(&self) -> &[Kick] {
        &self.kicks
    }

    pub fn span(&self) -> (f64, f64) {
        (self.segments.first().map_or(0.0, |s| s.t_start), self.end_time)
    }

    fn segment_at(&self, t: f64) -> Option<&Segment> {
        // Last segment whose start does not exceed t.
        let idx = self
            .segments
            .partition_point(|s| s.t_start <= t)
            .checked_sub(1)?;
        Some(&self.segments[idx])
    }

    /// Position at `t`; continuous across kicks.
    pub fn position(&self, t: f64) -> Result<f64, CoreError> {
        let (start, end) = self.span();
        if t < start || t > end {
            return Err(CoreError::OutsideSpan { t, start, end });
        }
        Ok(self.segment_at(t).expect("span checked").position(t))
    }

    /// Right-sided velocity at `t` (post-kick value at kick times).
    pub fn velocity_right(&self, t: f64) -> Result<f64, CoreError> {
        let (start, end) = self.span();
        if t < start || t > end {
            return Err(CoreError::OutsideSpan { t, start, end });
        }
        if t >= end {
            return Ok(self.end_velocity);
        }
        Ok(self.segment_at(t).expect("span checked").velocity(t))
    }

    /// Largest speed reached anywhere on the trajectory.
    pub fn max_speed(&self) -> f64 {
        let mut m = self.end_velocity.abs();
        for s in &self.segments {
            m = m.max(s.velocity(s.t_start).abs());
            m = m.max(s.velocity(s.t_end).abs());
        }
        m
    }
}

/// Idealized trajectories for both arms: each pulse transfers
/// `weight * hbar K / m_bar` instantaneously at its nominal time.
pub fn propagate_idealized(
    geom: &Geometry,
    mech: &Mechanism,
    species: &AtomSpecies,
    ic: &InitialConditions,
    g: f64,
    consts: &PhysicalConstants,
) -> (ArmTrajectory, ArmTrajectory) {
    let v_kick = recoil_velocity(mech.k_eff, species.m_bar, consts);
    let arm = |arm: Arm| {
        let mut segments = Vec::with_capacity(geom.pulses().len() + 1);
        let mut t = 0.0;
        let mut z = ic.z0;
        let mut v = ic.v0;
        let mut kicks = Vec::new();
        for (idx, pulse) in geom.pulses().iter().enumerate() {
            let w = pulse.weight(arm);
            let seg = Segment {
                t_start: t,
                t_end: pulse.time,
                z_start: z,
                v_start: v,
                accel: -g,
            };
            if pulse.time > t || segments.is_empty() {
                segments.push(seg);
            }
            z = seg.position(pulse.time);
            v = seg.velocity(pulse.time);
            t = pulse.time;
            if w != 0 {
                let dv = w as f64 * v_kick;
                kicks.push(Kick {
                    time: t,
                    delta_v: dv,
                    pulse_index: idx,
                });
                v += dv;
            }
        }
        ArmTrajectory {
            segments,
            kicks,
            end_time: t,
            end_velocity: v,
        }
    };
    (arm(Arm::One), arm(Arm::Two))
}

/// Velocity with kick discontinuities symmetrically regularized: at a kick
/// time the mean of the one-sided limits, elsewhere the segment value.
pub fn velocity_symmetric(arm: &ArmTrajectory, t: f64) -> Result<f64, CoreError> {
    let v_right = arm.velocity_right(t)?;
    if let Ok(k) = arm.kicks.binary_search_by(|k| k.time.total_cmp(&t)) {
        return Ok(v_right - 0.5 * arm.kicks[k].delta_v);
    }
    Ok(v_right)
}

/// First-order time delay between a pulse's nominal time and the actual
/// interaction: `z/c * (1 + v/c)` with the symmetric velocity.
pub fn interaction_delay(
    arm: &ArmTrajectory,
    t_pulse: f64,
    consts: &PhysicalConstants,
) -> Result<f64, CoreError> {
    let z = arm.position(t_pulse)?;
    let v = velocity_symmetric(arm, t_pulse)?;
    Ok(z / consts.c * (1.0 + v / consts.c))
}

/// Root of `t - t_pulse - z(t)/c = 0` on one free-fall segment, by
/// safeguarded bracketing. The segment is treated as unbounded; the caller
/// restricts the search window.
pub(crate) fn solve_delay_on_segment(
    seg: &Segment,
    t_pulse: f64,
    c_tilde: f64,
) -> Result<f64, CoreError> {
    let f = |t: f64| t - t_pulse - seg.position(t) / c_tilde;
    // First-order guess; the bracket expands from there.
    let guess = t_pulse + seg.position(t_pulse.clamp(seg.t_start, seg.t_end)) / c_tilde;
    let width = (seg.position(guess.clamp(seg.t_start, seg.t_end)).abs() / c_tilde).max(1e-18)
        * 2.0
        + 4.0 * f64::EPSILON * guess.abs();
    let (a, b) = expand_bracket(&f, guess, width, 60)?;
    if a == b {
        return Ok(a);
    }
    brent(&f, a, b, 1e-15)
}

/// Exact interaction time of the pulse nominally fired at `t_pulse` with
/// the atom on `arm`, at light speed `c_tilde`: the first causal root of
/// `t - t_pulse - z(t)/c_tilde = 0`, searched segment by segment (the first
/// and last segments are treated as extending beyond the span).
pub fn solve_exact_interaction_time(
    arm: &ArmTrajectory,
    t_pulse: f64,
    c_tilde: f64,
) -> Result<f64, CoreError> {
    let max_speed = arm.max_speed();
    if c_tilde <= max_speed {
        return Err(CoreError::Causality {
            c_tilde,
            max_speed,
        });
    }
    let f = |seg: &Segment, t: f64| t - t_pulse - seg.position(t) / c_tilde;
    let n = arm.segments.len();
    for (i, seg) in arm.segments.iter().enumerate() {
        // f is increasing in t on every segment (c_tilde outruns the atom),
        // so the root lies in the first segment whose end value is positive.
        let first = i == 0;
        let last = i + 1 == n;
        let lo_ok = first || f(seg, seg.t_start) <= 0.0;
        let hi_ok = last || f(seg, seg.t_end) >= 0.0;
        if lo_ok && hi_ok {
            return solve_delay_on_segment(seg, t_pulse, c_tilde);
        }
    }
    Err(CoreError::NoBracket {
        center: t_pulse,
        half_width: arm.span().1 - arm.span().0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::build_mzi;
    use crate::light_field::MechanismParams;
    use crate::numerics::Dd;
    use approx::assert_relative_eq;

    const SI: PhysicalConstants = PhysicalConstants::SI;
    const M_RB: f64 = 1.443_161e-25;

    fn bragg() -> Mechanism {
        Mechanism::resolve(MechanismParams::Bragg { k_eff: 1.6e7 }, 0.0, M_RB, &SI).unwrap()
    }

    fn species() -> AtomSpecies {
        AtomSpecies::new(M_RB, 0.0).unwrap()
    }

    #[test]
    fn flat_space_mzi_velocities() {
        let geom = build_mzi(1.0).unwrap();
        let mech = bragg();
        let ic = InitialConditions::default();
        let (a1, a2) = propagate_idealized(&geom, &mech, &species(), &ic, 0.0, &SI);
        let v_k = recoil_velocity(mech.k_eff, M_RB, &SI);
        assert_eq!(a1.velocity_right(0.5).unwrap(), v_k);
        assert_eq!(a1.velocity_right(1.5).unwrap(), 0.0);
        assert_eq!(a2.velocity_right(0.5).unwrap(), 0.0);
        assert_eq!(a2.velocity_right(1.5).unwrap(), v_k);
    }

    #[test]
    fn mirror_pulse_mean_velocity() {
        // Symmetric velocity at the mirror is v0 - g T + v_k / 2 on both arms.
        let t_big = 0.73;
        let g = 9.81;
        let ic = InitialConditions {
            z0: 0.13,
            v0: 0.21,
            v_res: 0.0,
        };
        let geom = build_mzi(t_big).unwrap();
        let mech = bragg();
        let v_k = recoil_velocity(mech.k_eff, M_RB, &SI);
        let v_pi = ic.v0 - g * t_big + 0.5 * v_k;
        let (a1, a2) = propagate_idealized(&geom, &mech, &species(), &ic, g, &SI);
        assert_relative_eq!(velocity_symmetric(&a1, t_big).unwrap(), v_pi, max_relative = 1e-13);
        assert_relative_eq!(velocity_symmetric(&a2, t_big).unwrap(), v_pi, max_relative = 1e-13);
    }

    #[test]
    fn positions_match_polynomial_reference() {
        let geom = build_mzi(0.4).unwrap();
        let mech = bragg();
        let g = 9.81;
        let ic = InitialConditions {
            z0: -0.05,
            v0: 0.4,
            v_res: 0.0,
        };
        let (a1, _) = propagate_idealized(&geom, &mech, &species(), &ic, g, &SI);
        let v_k = recoil_velocity(mech.k_eff, M_RB, &SI);
        // Independent extended-precision evaluation of the kicked parabola.
        for t in [0.1, 0.3, 0.55, 0.79] {
            let t_dd = Dd::from_f64(t);
            let free = Dd::from_f64(ic.z0) + t_dd * ic.v0 - t_dd * t_dd * (0.5 * g);
            let kicked = if t <= 0.4 {
                free + t_dd * v_k
            } else {
                free + Dd::from_f64(0.4 * v_k)
            };
            assert_relative_eq!(
                a1.position(t).unwrap(),
                kicked.to_f64(),
                max_relative = 1e-14
            );
        }
    }

    #[test]
    fn symmetric_velocity_is_central_difference_limit() {
        let geom = build_mzi(0.5).unwrap();
        let mech = bragg();
        let g = 3.7;
        let ic = InitialConditions {
            z0: 0.0,
            v0: 0.1,
            v_res: 0.0,
        };
        let (a1, _) = propagate_idealized(&geom, &mech, &species(), &ic, g, &SI);
        for t in [0.5, 0.2] {
            let eps = 1e-7;
            let central =
                (a1.position(t + eps).unwrap() - a1.position(t - eps).unwrap()) / (2.0 * eps);
            assert_relative_eq!(
                velocity_symmetric(&a1, t).unwrap(),
                central,
                epsilon = 1e-6
            );
        }
    }

    #[test]
    fn delay_values_and_sign() {
        let geom = build_mzi(1.0).unwrap();
        let mech = bragg();
        // Start high enough that the atom sits at exactly z = 0.5 m at the
        // mirror with v = 10 m/s by construction at g = 0.
        let ic = InitialConditions {
            z0: -9.5,
            v0: 10.0,
            v_res: 0.0,
        };
        let (_, a2) = propagate_idealized(&geom, &mech, &species(), &ic, 0.0, &SI);
        // Arm 2 has no kick before T, so v_sym(T) blends in half a recoil.
        let z = a2.position(1.0).unwrap();
        let v = velocity_symmetric(&a2, 1.0).unwrap();
        let d = interaction_delay(&a2, 1.0, &SI).unwrap();
        assert_relative_eq!(z, 0.5, max_relative = 1e-12);
        assert_relative_eq!(d, z / SI.c * (1.0 + v / SI.c), max_relative = 1e-15);
        assert_relative_eq!(d, 1.6678e-9, max_relative = 1e-3);
        // Negative height gives a negative (advanced) delay.
        let below = InitialConditions {
            z0: -1.0,
            v0: 0.0,
            v_res: 0.0,
        };
        let (a1, _) = propagate_idealized(&geom, &mech, &species(), &below, 0.0, &SI);
        assert!(interaction_delay(&a1, 0.0, &SI).unwrap() < 0.0);
    }

    #[test]
    fn exact_time_constant_height() {
        let geom = build_mzi(1.0).unwrap();
        let mech = bragg();
        let ic = InitialConditions {
            z0: 0.5,
            v0: 0.0,
            v_res: 0.0,
        };
        let (_, a2) = propagate_idealized(&geom, &mech, &species(), &ic, 0.0, &SI);
        let c_tilde = 1e6;
        let t_star = solve_exact_interaction_time(&a2, 0.0, c_tilde).unwrap();
        assert_relative_eq!(t_star, 0.5 / c_tilde, max_relative = 1e-12);
        // Huge light speeds collapse the root onto the nominal time.
        let t_star = solve_exact_interaction_time(&a2, 1.0, 1e18).unwrap();
        assert_relative_eq!(t_star, 1.0, max_relative = 1e-15);
    }

    #[test]
    fn exact_time_matches_quadratic_formula() {
        // Extended-precision quadratic-formula root as the independent check.
        let geom = build_mzi(0.8).unwrap();
        let mech = bragg();
        let g = 9.81;
        let ic = InitialConditions {
            z0: 0.4,
            v0: 1.5,
            v_res: 0.0,
        };
        let (a1, _) = propagate_idealized(&geom, &mech, &species(), &ic, g, &SI);
        let c_tilde = 1e6;
        for t_pulse in [0.0, 0.8, 1.6] {
            let t_star = solve_exact_interaction_time(&a1, t_pulse, c_tilde).unwrap();
            // Identify the segment holding the root and solve
            // (g/2) tau^2 + (c - v) tau - (z + c (t_pulse - t_s)) = 0 in dd.
            let seg = a1
                .segments()
                .iter()
                .rev()
                .find(|s| s.t_start <= t_star)
                .unwrap();
            let a = Dd::from_f64(0.5 * g);
            let b = Dd::from_f64(c_tilde - seg.v_start);
            let cc = -(Dd::from_f64(seg.z_start)
                + Dd::from_f64(c_tilde) * Dd::from_sum(t_pulse, -seg.t_start));
            let disc = (b * b - a * cc * 4.0).sqrt();
            let q = -(b + disc) * 0.5;
            // Causal branch: tau = c/q for the root with f' > 0.
            let tau = cc / q;
            let reference = (Dd::from_f64(seg.t_start) + tau).to_f64();
            assert_relative_eq!(t_star, reference, max_relative = 1e-15);
        }
    }

    #[test]
    fn delay_matches_exact_root_to_third_order() {
        // At a pulse that does not kick this arm, interaction_delay and the
        // exact root agree one power of c beyond the delay itself: slope -3.
        let geom = build_mzi(0.6).unwrap();
        let mech = bragg();
        let g = 9.81;
        let ic = InitialConditions {
            z0: 0.8,
            v0: 0.9,
            v_res: 0.0,
        };
        let (a1, _) = propagate_idealized(&geom, &mech, &species(), &ic, g, &SI);
        // Arm 1 has weight 0 at the final pulse: the trajectory is smooth
        // there and the symmetric velocity is the plain one.
        let t_pulse = 1.2;
        // The root solver converges to 1e-15 relative, so the sweep stays
        // low enough that the third-order signal clears that floor.
        let mut logs_c = Vec::new();
        let mut logs_e = Vec::new();
        for i in 0..6 {
            let c_tilde = 1e3 * 10f64.powf(0.4 * i as f64);
            let consts = PhysicalConstants::new(c_tilde, SI.hbar).unwrap();
            let approx_delay = interaction_delay(&a1, t_pulse, &consts).unwrap();
            let t_star = solve_exact_interaction_time(&a1, t_pulse, c_tilde).unwrap();
            let err = (approx_delay - (t_star - t_pulse)).abs();
            logs_c.push(c_tilde.ln());
            logs_e.push(err.ln());
        }
        let (slope, _) = crate::numerics::linear_fit(&logs_c, &logs_e);
        assert!((slope + 3.0).abs() < 0.2, "slope = {slope}");
    }

    #[test]
    fn delay_at_kicked_pulse_differs_at_second_order() {
        // At a kick the delay uses the symmetric velocity while the exact
        // root runs on the pre-kick branch; the mismatch is second order.
        let geom = build_mzi(0.6).unwrap();
        let mech = bragg();
        let g = 9.81;
        let ic = InitialConditions {
            z0: 0.8,
            v0: 0.9,
            v_res: 0.0,
        };
        let (a1, _) = propagate_idealized(&geom, &mech, &species(), &ic, g, &SI);
        // The mirror kicks arm 1 by -v_k, so the symmetric velocity sits
        // v_k/2 below the pre-kick branch the root runs on:
        // delay - (t* - T) = -z v_k / (2 c^2) + O(c^-3).
        // Extrapolate the c^-2 coefficient from two sweep points.
        let gap_at = |c_tilde: f64| {
            let consts = PhysicalConstants::new(c_tilde, SI.hbar).unwrap();
            let approx_delay = interaction_delay(&a1, 0.6, &consts).unwrap();
            let t_star = solve_exact_interaction_time(&a1, 0.6, c_tilde).unwrap();
            approx_delay - (t_star - 0.6)
        };
        let (c1, c2) = (1e4, 1e5);
        let (y1, y2) = (gap_at(c1) * c1 * c1, gap_at(c2) * c2 * c2);
        let (x1, x2) = (1.0 / c1, 1.0 / c2);
        let coeff = (y2 * x1 - y1 * x2) / (x1 - x2);
        let v_k = recoil_velocity(mech.k_eff, M_RB, &SI);
        let z = a1.position(0.6).unwrap();
        assert_relative_eq!(coeff, -z * v_k / 2.0, max_relative = 0.01);
    }

    #[test]
    fn causality_violation_reported() {
        let geom = build_mzi(1.0).unwrap();
        let mech = bragg();
        let ic = InitialConditions {
            z0: 0.0,
            v0: 50.0,
            v_res: 0.0,
        };
        let (a1, _) = propagate_idealized(&geom, &mech, &species(), &ic, 9.81, &SI);
        let err = solve_exact_interaction_time(&a1, 0.0, 40.0).unwrap_err();
        assert!(matches!(err, CoreError::Causality { .. }));
    }

    #[test]
    fn continuity_across_kicks() {
        let geom = crate::geometry::build_butterfly(0.3).unwrap();
        let mech = bragg();
        let ic = InitialConditions {
            z0: 0.7,
            v0: -0.4,
            v_res: 0.0,
        };
        let (a1, a2) = propagate_idealized(&geom, &mech, &species(), &ic, 9.81, &SI);
        let (_, t_end) = a1.span();
        for arm in [&a1, &a2] {
            for kick in arm.kicks().iter().filter(|k| k.time > 0.0 && k.time < t_end) {
                let eps = 1e-9;
                let before = arm.position(kick.time - eps).unwrap();
                let after = arm.position(kick.time + eps).unwrap();
                // Position continuous; velocity jumps by exactly the kick.
                assert!((after - before).abs() < 1e-6);
                let v_before = arm.velocity_right(kick.time - eps).unwrap();
                let v_after = arm.velocity_right(kick.time).unwrap();
                assert_relative_eq!(
                    v_after - v_before,
                    kick.delta_v,
                    epsilon = 1e-7
                );
            }
        }
    }

    #[test]
    fn mass_defect_ratio() {
        // Optical splitting on a strontium-mass atom stays well below the
        // warning threshold.
        let sp = AtomSpecies::new(1.459_773e-25, 2.698e15).unwrap();
        let ratio = sp.mass_defect_ratio(&SI);
        assert!(ratio > 0.0 && ratio < 1e-6, "ratio = {ratio:e}");
    }
}
