//! Pulse schedules and the per-arm idealized state-response function, plus
//! the phase-space closure check that gates every interferometer phase.
//!
//! Each pulse carries a signed weight per arm: +1 for absorption, -1 for
//! emission, 0 when the arm does not interact. The running weight sum tracks
//! the internal state (or momentum-state occupation for state-preserving
//! diffraction) and must return to the ground value on both arms.

use crate::constants::PhysicalConstants;
use crate::error::CoreError;
use crate::light_field::{recoil_velocity, Mechanism};
use crate::trajectory::{AtomSpecies, InitialConditions};

/// Interferometer arm selector.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Arm {
    One,
    Two,
}

impl Arm {
    pub const BOTH: [Arm; 2] = [Arm::One, Arm::Two];
}

/// One light pulse: nominal firing time and the signed transfer weight on
/// each arm.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PulseEvent {
    pub time: f64,
    pub weight_arm1: i32,
    pub weight_arm2: i32,
}

impl PulseEvent {
    #[inline]
    pub fn weight(&self, arm: Arm) -> i32 {
        match arm {
            Arm::One => self.weight_arm1,
            Arm::Two => self.weight_arm2,
        }
    }
}

/// Value of the idealized state-response function at one instant.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ResponseSample {
    /// Half-integer response value; the symmetric average at pulse times.
    pub lambda: f64,
    pub is_discontinuity: bool,
}

/// An ordered pulse schedule with validated bookkeeping.
#[derive(Clone, Debug, PartialEq)]
pub struct Geometry {
    pulses: Vec<PulseEvent>,
    label: String,
}

impl Geometry {
    /// Validate and freeze a pulse schedule.
    ///
    /// Times must be strictly increasing and nonnegative; weights live in
    /// {-1, 0, +1} with at least one nonzero per pulse; each arm's running
    /// sum stays in {0, 1} and ends at 0.
    pub fn new(pulses: Vec<PulseEvent>, label: impl Into<String>) -> Result<Self, CoreError> {
        if pulses.len() < 2 {
            return Err(CoreError::InvalidInput(
                "a geometry needs at least two pulses".into(),
            ));
        }
        let mut prev = f64::NEG_INFINITY;
        for (i, p) in pulses.iter().enumerate() {
            if !p.time.is_finite() || p.time < 0.0 {
                return Err(CoreError::InvalidInput(format!(
                    "pulse {i} time must be finite and nonnegative, got {:e}",
                    p.time
                )));
            }
            if p.time <= prev {
                return Err(CoreError::InvalidInput(format!(
                    "pulse times must be strictly increasing (pulse {i})"
                )));
            }
            prev = p.time;
            if p.weight_arm1 == 0 && p.weight_arm2 == 0 {
                return Err(CoreError::InvalidInput(format!(
                    "pulse {i} addresses neither arm"
                )));
            }
            for w in [p.weight_arm1, p.weight_arm2] {
                if !(-1..=1).contains(&w) {
                    return Err(CoreError::InvalidInput(format!(
                        "pulse {i} weight {w} outside {{-1, 0, 1}}"
                    )));
                }
            }
        }
        for arm in Arm::BOTH {
            let mut running = 0i32;
            for (i, p) in pulses.iter().enumerate() {
                running += p.weight(arm);
                if !(0..=1).contains(&running) {
                    return Err(CoreError::InvalidInput(format!(
                        "arm {arm:?} leaves the two-level manifold at pulse {i}"
                    )));
                }
            }
            if running != 0 {
                return Err(CoreError::InvalidInput(format!(
                    "arm {arm:?} does not return to the ground state"
                )));
            }
        }
        Ok(Geometry {
            pulses,
            label: label.into(),
        })
    }

    pub fn pulses(&self) -> &[PulseEvent] {
        &self.pulses
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    /// Duration of the sequence (time of the final pulse).
    pub fn total_time(&self) -> f64 {
        self.pulses.last().expect("validated nonempty").time
    }

    /// Idealized state-response function of one arm, offset so the ground
    /// state sits at -1/2. At a pulse the symmetric average of the one-sided
    /// limits is returned.
    pub fn response(&self, arm: Arm, t: f64) -> ResponseSample {
        let mut running = 0i32;
        for p in &self.pulses {
            if p.time > t {
                break;
            }
            let w = p.weight(arm);
            if p.time == t {
                return ResponseSample {
                    lambda: running as f64 + 0.5 * w as f64 - 0.5,
                    is_discontinuity: w != 0,
                };
            }
            running += w;
        }
        ResponseSample {
            lambda: running as f64 - 0.5,
            is_discontinuity: false,
        }
    }
}

/// Mach-Zehnder sequence: splitter, mirror, splitter at 0, T, 2T.
pub fn build_mzi(interrogation_time: f64) -> Result<Geometry, CoreError> {
    if !(interrogation_time > 0.0) || !interrogation_time.is_finite() {
        return Err(CoreError::InvalidInput(format!(
            "interrogation time must be positive, got {interrogation_time:e}"
        )));
    }
    let t = interrogation_time;
    Geometry::new(
        vec![
            PulseEvent {
                time: 0.0,
                weight_arm1: 1,
                weight_arm2: 0,
            },
            PulseEvent {
                time: t,
                weight_arm1: -1,
                weight_arm2: 1,
            },
            PulseEvent {
                time: 2.0 * t,
                weight_arm1: 0,
                weight_arm2: -1,
            },
        ],
        "mzi",
    )
}

/// Figure-of-eight sequence: splitter, mirror, mirror, splitter at
/// 0, T, 3T, 4T; the arms cross without interacting at 2T.
pub fn build_butterfly(interrogation_time: f64) -> Result<Geometry, CoreError> {
    if !(interrogation_time > 0.0) || !interrogation_time.is_finite() {
        return Err(CoreError::InvalidInput(format!(
            "interrogation time must be positive, got {interrogation_time:e}"
        )));
    }
    let t = interrogation_time;
    Geometry::new(
        vec![
            PulseEvent {
                time: 0.0,
                weight_arm1: 1,
                weight_arm2: 0,
            },
            PulseEvent {
                time: t,
                weight_arm1: -1,
                weight_arm2: 1,
            },
            PulseEvent {
                time: 3.0 * t,
                weight_arm1: 1,
                weight_arm2: -1,
            },
            PulseEvent {
                time: 4.0 * t,
                weight_arm1: -1,
                weight_arm2: 0,
            },
        ],
        "butterfly",
    )
}

/// Outcome of the phase-space closure check.
#[derive(Clone, Copy, Debug)]
pub struct ClosureReport {
    pub dz_final: f64,
    pub dv_final: f64,
    /// Position mismatch in units of the recoil displacement over the
    /// sequence duration.
    pub dz_natural: f64,
    /// Velocity mismatch in recoil-velocity units.
    pub dv_natural: f64,
    pub closed: bool,
}

impl ClosureReport {
    pub const TOLERANCE: f64 = 1e-12;
}

/// Propagate both arms under idealized kicks and compare their phase-space
/// endpoints. A geometry counts as closed when both mismatches stay below
/// 1e-12 in natural (recoil) units.
///
/// Endpoints are evaluated in double-double arithmetic: plain f64
/// propagation leaves eps-level velocity noise that a small recoil unit
/// would mistake for an open geometry.
pub fn check_closure(
    geom: &Geometry,
    mech: &Mechanism,
    species: &AtomSpecies,
    ic: &InitialConditions,
    g: f64,
    consts: &PhysicalConstants,
) -> ClosureReport {
    use crate::numerics::Dd;
    let v_kick = recoil_velocity(mech.k_eff, species.m_bar, consts);
    let endpoint = |arm: Arm| -> (Dd, Dd) {
        let mut t = Dd::ZERO;
        let mut z = Dd::from_f64(ic.z0);
        let mut v = Dd::from_f64(ic.v0);
        for pulse in geom.pulses() {
            let dt = Dd::from_f64(pulse.time) - t;
            z += dt * v - dt * dt * (0.5 * g);
            v -= dt * g;
            t = Dd::from_f64(pulse.time);
            v += Dd::from_f64(pulse.weight(arm) as f64 * v_kick);
        }
        (z, v)
    };
    let (z1, v1) = endpoint(Arm::One);
    let (z2, v2) = endpoint(Arm::Two);
    let t_end = geom.total_time();
    let dz = (z1 - z2).to_f64();
    let dv = (v1 - v2).to_f64();
    let v_k = v_kick;
    // Recoil-free drives never separate the arms; fall back to raw units.
    let (z_scale, v_scale) = if v_k > 0.0 {
        (v_k * t_end, v_k)
    } else {
        (1.0, 1.0)
    };
    let dz_natural = dz / z_scale;
    let dv_natural = dv / v_scale;
    ClosureReport {
        dz_final: dz,
        dv_final: dv,
        dz_natural,
        dv_natural,
        closed: dz_natural.abs() < ClosureReport::TOLERANCE
            && dv_natural.abs() < ClosureReport::TOLERANCE,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::light_field::MechanismParams;
    use proptest::prelude::*;

    const SI: PhysicalConstants = PhysicalConstants::SI;
    const M_RB: f64 = 1.443_161e-25;

    fn bragg() -> Mechanism {
        Mechanism::resolve(MechanismParams::Bragg { k_eff: 1.6e7 }, 0.0, M_RB, &SI).unwrap()
    }

    #[test]
    fn mzi_structure() {
        let g = build_mzi(1.0).unwrap();
        let times: Vec<f64> = g.pulses().iter().map(|p| p.time).collect();
        assert_eq!(times, vec![0.0, 1.0, 2.0]);
        assert_eq!(
            g.pulses()
                .iter()
                .map(|p| (p.weight_arm1, p.weight_arm2))
                .collect::<Vec<_>>(),
            vec![(1, 0), (-1, 1), (0, -1)]
        );
        assert!(build_mzi(0.0).is_err());
        assert!(build_mzi(-1.0).is_err());
    }

    #[test]
    fn butterfly_structure() {
        let g = build_butterfly(1.0).unwrap();
        let times: Vec<f64> = g.pulses().iter().map(|p| p.time).collect();
        assert_eq!(times, vec![0.0, 1.0, 3.0, 4.0]);
        for arm in Arm::BOTH {
            let total: i32 = g.pulses().iter().map(|p| p.weight(arm)).sum();
            assert_eq!(total, 0);
        }
        assert!(build_butterfly(0.0).is_err());
    }

    #[test]
    fn response_steps_and_averages() {
        let g = build_mzi(1.0).unwrap();
        assert_eq!(g.response(Arm::One, 0.5).lambda, 0.5);
        assert_eq!(g.response(Arm::One, 1.5).lambda, -0.5);
        // Symmetric average at the discontinuity.
        let at_mirror = g.response(Arm::One, 1.0);
        assert_eq!(at_mirror.lambda, 0.0);
        assert!(at_mirror.is_discontinuity);
        // Arm 2 does not interact with the first pulse.
        let at_start = g.response(Arm::Two, 0.0);
        assert_eq!(at_start.lambda, -0.5);
        assert!(!at_start.is_discontinuity);
        // Ground state before the sequence.
        assert_eq!(g.response(Arm::Two, f64::MIN_POSITIVE).lambda, -0.5);
    }

    #[test]
    fn butterfly_response_arm2() {
        let g = build_butterfly(1.0).unwrap();
        // Arm 2 is excited only on (T, 3T); flat elsewhere.
        assert_eq!(g.response(Arm::Two, 0.5).lambda, -0.5);
        assert_eq!(g.response(Arm::Two, 2.0).lambda, 0.5);
        assert_eq!(g.response(Arm::Two, 3.5).lambda, -0.5);
    }

    #[test]
    fn invalid_schedules_rejected() {
        // Times not increasing.
        assert!(Geometry::new(
            vec![
                PulseEvent { time: 0.0, weight_arm1: 1, weight_arm2: 0 },
                PulseEvent { time: 0.0, weight_arm1: -1, weight_arm2: 0 },
            ],
            "bad"
        )
        .is_err());
        // Arm leaves the ladder.
        assert!(Geometry::new(
            vec![
                PulseEvent { time: 0.0, weight_arm1: 1, weight_arm2: 1 },
                PulseEvent { time: 1.0, weight_arm1: 1, weight_arm2: -1 },
            ],
            "bad"
        )
        .is_err());
        // Does not return to ground.
        assert!(Geometry::new(
            vec![PulseEvent { time: 0.0, weight_arm1: 1, weight_arm2: 0 }],
            "bad"
        )
        .is_err());
    }

    #[test]
    fn closure_verdicts() {
        let mech = bragg();
        let sp = AtomSpecies::new(M_RB, 0.0).unwrap();
        let ic = InitialConditions {
            z0: 0.3,
            v0: -0.2,
            v_res: 0.0,
        };
        for geom in [build_mzi(0.7).unwrap(), build_butterfly(0.7).unwrap()] {
            let report = check_closure(&geom, &mech, &sp, &ic, 9.81, &SI);
            assert!(report.closed, "{}: {report:?}", geom.label());
        }
        // Splitter plus recombiner with no mirror leaves a recoil behind.
        let open = Geometry::new(
            vec![
                PulseEvent { time: 0.0, weight_arm1: 1, weight_arm2: 0 },
                PulseEvent { time: 1.0, weight_arm1: -1, weight_arm2: 0 },
            ],
            "open",
        )
        .unwrap();
        let report = check_closure(&open, &mech, &sp, &ic, 9.81, &SI);
        assert!(!report.closed);
        assert!(report.dv_natural.abs() < 1e-12); // velocities rejoin
        assert!(report.dz_natural.abs() > 0.5); // but positions do not
    }

    proptest! {
        #[test]
        fn closure_invariant_under_ic_shifts(
            z0 in -5.0f64..5.0,
            v0 in -2.0f64..2.0,
            g in 0.0f64..20.0,
        ) {
            let mech = bragg();
            let sp = AtomSpecies::new(M_RB, 0.0).unwrap();
            let ic = InitialConditions { z0, v0, v_res: 0.0 };
            let geom = build_mzi(0.375).unwrap();
            let report = check_closure(&geom, &mech, &sp, &ic, g, &SI);
            prop_assert!(report.closed);
        }

        #[test]
        fn response_stays_half_integer(t in 0.0f64..4.0) {
            let g = build_butterfly(1.0).unwrap();
            for arm in Arm::BOTH {
                let s = g.response(arm, t);
                if !s.is_discontinuity {
                    prop_assert!(s.lambda == 0.5 || s.lambda == -0.5);
                }
            }
        }
    }
}
