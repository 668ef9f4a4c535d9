//! First-order interferometer phases: the unperturbed phase of a closed
//! geometry plus the named relativistic corrections, evaluated along
//! idealized classical trajectories.
//!
//! Two algebraically equivalent arm-phase functionals are kept side by
//! side: a delay-form that multiplies frequency content by interaction-time
//! shifts, and a reduced form that needs only step and kick evaluations
//! plus one segment integral. The reduced form is the production path and
//! supplies the per-term decomposition; the delay form is its cross-check.
//!
//! Carrier-scale sums (laser phase at pulse times, action difference) run
//! in double-double arithmetic and are paired arm against arm pulse by
//! pulse, otherwise the f64 rounding of 1e15-rad intermediates would bury
//! the answer. Frequency differences are always assembled from wave-number
//! differences for the same reason.

use crate::constants::PhysicalConstants;
use crate::error::CoreError;
use crate::geometry::{check_closure, Arm, Geometry};
use crate::light_field::{recoil_velocity, EffectiveField, Mechanism, MechanismParams};
use crate::numerics::{CompensatedSum, Dd};
use crate::trajectory::{
    propagate_idealized, velocity_symmetric, ArmTrajectory, AtomSpecies, InitialConditions,
};

/// Intentional timing shift of one pulse, used to cancel the
/// initial-velocity dependence of the signal.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Compensation {
    /// Pulse delay (s).
    pub delta_t: f64,
    /// Index of the shifted pulse in the schedule (the mirror of a
    /// three-pulse sequence).
    pub pulse_index: usize,
    /// Prior uncertainty on the gravitational acceleration (m/s^2).
    pub gamma_prior: f64,
}

/// Everything needed to evaluate one interferometer: schedule, mechanism,
/// atom, fields, and environment.
#[derive(Clone, Debug)]
pub struct Scenario {
    pub geometry: Geometry,
    pub mechanism: Mechanism,
    pub species: AtomSpecies,
    pub initial: InitialConditions,
    /// Gravitational acceleration (m/s^2).
    pub gravity: f64,
    /// Common chirp rate (m/s^2).
    pub chirp_rate: f64,
    pub field: EffectiveField,
    pub constants: PhysicalConstants,
    pub compensation: Option<Compensation>,
    mech_params: MechanismParams,
}

/// Construction inputs for [`Scenario::new`].
#[derive(Clone, Debug)]
pub struct ScenarioSpec {
    pub mechanism: MechanismParams,
    pub geometry: Geometry,
    /// Mean atomic mass (kg).
    pub m_bar: f64,
    pub initial: InitialConditions,
    pub gravity: f64,
    pub chirp_rate: f64,
    /// Offset phase of the effective field (rad).
    pub phi_off: f64,
    pub constants: PhysicalConstants,
    pub compensation: Option<Compensation>,
}

impl Scenario {
    /// Resolve the mechanism on resonance for the given atom and freeze the
    /// effective field in the frame where the retarded initiation time is
    /// zero (pulse times are measured in that frame).
    pub fn new(spec: ScenarioSpec) -> Result<Scenario, CoreError> {
        if !spec.gravity.is_finite() || !spec.chirp_rate.is_finite() {
            return Err(CoreError::InvalidInput(
                "gravity and chirp rate must be finite".into(),
            ));
        }
        let mechanism = Mechanism::resolve(
            spec.mechanism,
            spec.initial.v_res,
            spec.m_bar,
            &spec.constants,
        )?;
        let species = AtomSpecies::new(spec.m_bar, mechanism.omega_a)?;
        let field = mechanism.field(spec.phi_off, spec.chirp_rate, &spec.constants);
        if let Some(comp) = &spec.compensation {
            if comp.pulse_index >= spec.geometry.pulses().len() {
                return Err(CoreError::InvalidInput(format!(
                    "compensation targets pulse {} but the schedule has {} pulses",
                    comp.pulse_index,
                    spec.geometry.pulses().len()
                )));
            }
        }
        Ok(Scenario {
            geometry: spec.geometry,
            mechanism,
            species,
            initial: spec.initial,
            gravity: spec.gravity,
            chirp_rate: spec.chirp_rate,
            field,
            constants: spec.constants,
            compensation: spec.compensation,
            mech_params: spec.mechanism,
        })
    }

    pub fn mech_params(&self) -> MechanismParams {
        self.mech_params
    }

    /// Same experiment retuned for a different light speed: wave-number-side
    /// quantities stay fixed, frequencies follow the resonance condition and
    /// the dispersion relation, and any pulse-timing compensation rescales
    /// with 1/c.
    pub fn at_light_speed(&self, c: f64) -> Result<Scenario, CoreError> {
        let consts = self.constants.with_light_speed(c)?;
        let mechanism = Mechanism::resolve(
            self.mech_params,
            self.initial.v_res,
            self.species.m_bar,
            &consts,
        )?;
        let species = AtomSpecies::new(self.species.m_bar, mechanism.omega_a)?;
        let field = mechanism.field(self.field.phi_off, self.chirp_rate, &consts);
        let compensation = self.compensation.map(|comp| Compensation {
            delta_t: comp.delta_t * self.constants.c / c,
            ..comp
        });
        Ok(Scenario {
            geometry: self.geometry.clone(),
            mechanism,
            species,
            initial: self.initial,
            gravity: self.gravity,
            chirp_rate: self.chirp_rate,
            field,
            constants: consts,
            compensation,
            mech_params: self.mech_params,
        })
    }

    /// Copy with a different gravitational acceleration.
    pub fn with_gravity(&self, g: f64) -> Scenario {
        let mut s = self.clone();
        s.gravity = g;
        s
    }

    /// Copy with a different chirp rate (field rebuilt accordingly).
    pub fn with_chirp_rate(&self, sigma: f64) -> Scenario {
        let mut s = self.clone();
        s.chirp_rate = sigma;
        s.field = s.mechanism.field(s.field.phi_off, sigma, &s.constants);
        s
    }

    /// Interrogation time if the schedule is a canonical three-pulse
    /// splitter-mirror-splitter sequence starting at t = 0.
    pub fn mzi_interrogation_time(&self) -> Option<f64> {
        mzi_interrogation_time(&self.geometry)
    }

    fn closure_gate(&self) -> Result<(), CoreError> {
        let report = check_closure(
            &self.geometry,
            &self.mechanism,
            &self.species,
            &self.initial,
            self.gravity,
            &self.constants,
        );
        if !report.closed {
            return Err(CoreError::OpenGeometry {
                dz: report.dz_final,
                dv: report.dv_final,
                dz_natural: report.dz_natural,
                dv_natural: report.dv_natural,
            });
        }
        Ok(())
    }
}

/// Recognize a splitter-mirror-splitter schedule; returns the pulse spacing.
pub fn mzi_interrogation_time(geom: &Geometry) -> Option<f64> {
    let p = geom.pulses();
    if p.len() != 3 || p[0].time != 0.0 {
        return None;
    }
    let weights: Vec<(i32, i32)> = p.iter().map(|e| (e.weight_arm1, e.weight_arm2)).collect();
    if weights != [(1, 0), (-1, 1), (0, -1)] {
        return None;
    }
    let spacing = p[1].time;
    if (p[2].time - 2.0 * spacing).abs() > 1e-12 * spacing {
        return None;
    }
    Some(spacing)
}

/// Unperturbed phase plus the named first-order contributions.
///
/// `total` is the compensated sum of all other fields. The `ts_*` entries
/// stay zero unless a pulse-timing compensation is active.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct PhaseBreakdown {
    pub unperturbed: f64,
    pub fsl_clock: f64,
    pub fsl_doppler: f64,
    pub chirp: f64,
    pub time_dilation: f64,
    pub ts_clock: f64,
    pub ts_doppler: f64,
    pub ts_chirp: f64,
    pub total: f64,
}

impl PhaseBreakdown {
    pub const COLUMNS: [&'static str; 9] = [
        "unperturbed",
        "fsl_clock",
        "fsl_doppler",
        "chirp",
        "time_dilation",
        "ts_clock",
        "ts_doppler",
        "ts_chirp",
        "total",
    ];

    /// Field values in the fixed column order.
    pub fn values(&self) -> [f64; 9] {
        [
            self.unperturbed,
            self.fsl_clock,
            self.fsl_doppler,
            self.chirp,
            self.time_dilation,
            self.ts_clock,
            self.ts_doppler,
            self.ts_chirp,
            self.total,
        ]
    }

    fn assemble(parts: [f64; 8]) -> Self {
        let mut total = CompensatedSum::new();
        for p in parts {
            total.add(p);
        }
        let [unperturbed, fsl_clock, fsl_doppler, chirp, time_dilation, ts_clock, ts_doppler, ts_chirp] =
            parts;
        PhaseBreakdown {
            unperturbed,
            fsl_clock,
            fsl_doppler,
            chirp,
            time_dilation,
            ts_clock,
            ts_doppler,
            ts_chirp,
            total: total.value(),
        }
    }
}

/// Pulse-time kinematics of one arm, shared by the functionals.
struct PulseData {
    weight: f64,
    /// Time from the retarded initiation time.
    dt: f64,
    z: f64,
    v_sym: f64,
}

fn pulse_data(
    s: &Scenario,
    geom_arm: Arm,
    traj: &ArmTrajectory,
) -> Result<Vec<PulseData>, CoreError> {
    s.geometry
        .pulses()
        .iter()
        .map(|p| {
            Ok(PulseData {
                weight: p.weight(geom_arm) as f64,
                dt: p.time - s.field.t_init_retarded,
                z: traj.position(p.time)?,
                v_sym: velocity_symmetric(traj, p.time)?,
            })
        })
        .collect()
}

/// Piecewise-linear-velocity integrals on one inter-pulse interval.
struct IntervalData {
    /// Response value on the open interval.
    lambda1: f64,
    lambda2: f64,
    /// Integral of v^2 dt per arm.
    iv2_1: f64,
    iv2_2: f64,
    /// Integral of z dt per arm.
    iz_1: f64,
    iz_2: f64,
}

fn interval_data(
    s: &Scenario,
    a1: &ArmTrajectory,
    a2: &ArmTrajectory,
) -> Result<Vec<IntervalData>, CoreError> {
    let pulses = s.geometry.pulses();
    let mut out = Vec::with_capacity(pulses.len().saturating_sub(1));
    for pair in pulses.windows(2) {
        let (ta, tb) = (pair[0].time, pair[1].time);
        let mid = 0.5 * (ta + tb);
        let len = tb - ta;
        let per_arm = |traj: &ArmTrajectory, arm: Arm| -> Result<(f64, f64, f64), CoreError> {
            let va = traj.velocity_right(ta)?;
            let vb = va - s.gravity * len;
            // Exact for linear velocity / parabolic position.
            let iv2 = len * (va * va + va * vb + vb * vb) / 3.0;
            let iz = len / 6.0
                * (traj.position(ta)? + 4.0 * traj.position(mid)? + traj.position(tb)?);
            Ok((s.geometry.response(arm, mid).lambda, iv2, iz))
        };
        let (l1, iv2_1, iz_1) = per_arm(a1, Arm::One)?;
        let (l2, iv2_2, iz_2) = per_arm(a2, Arm::Two)?;
        out.push(IntervalData {
            lambda1: l1,
            lambda2: l2,
            iv2_1,
            iv2_2,
            iz_1,
            iz_2,
        });
    }
    Ok(out)
}

/// Unperturbed interferometer phase: action difference plus the dominant
/// light and internal phases imprinted at the nominal pulse times.
///
/// Requires a closed geometry. For a splitter-mirror-splitter sequence the
/// result is `-K (g - sigma) T^2`.
pub fn unperturbed_phase(s: &Scenario) -> Result<f64, CoreError> {
    s.closure_gate()?;
    Ok(unperturbed_phase_unchecked(s))
}

pub(crate) fn unperturbed_phase_unchecked(s: &Scenario) -> f64 {
    let g = s.gravity;
    let v_kick = recoil_velocity(s.mechanism.k_eff, s.species.m_bar, &s.constants);
    let arm_phase = |arm: Arm| -> Dd {
        let mut t = Dd::ZERO;
        let mut z = Dd::from_f64(s.initial.z0);
        let mut v = Dd::from_f64(s.initial.v0);
        let mut action = Dd::ZERO;
        let mut imprint = Dd::ZERO;
        for pulse in s.geometry.pulses() {
            let dt = Dd::from_f64(pulse.time) - t;
            let (iv2, iz, z_new, v_new) = dd_advance(z, v, dt, g);
            // m_bar and g stay separate factors: a pre-rounded m_bar * g
            // would break the kinetic/potential cancellation at one ulp.
            action += iv2 * (0.5 * s.species.m_bar) - iz * s.species.m_bar * g;
            t = Dd::from_f64(pulse.time);
            z = z_new;
            v = v_new;
            let w = pulse.weight(arm);
            if w != 0 {
                let dt_field = t - s.field.t_init_retarded;
                // Dominant light phase; the frequency part is grouped as
                // -c (delta_k - k_a) dt so the 1e15-scale carriers never
                // appear as separate summands.
                let freq = Dd::from_prod(s.constants.c, s.mechanism.delta_k - s.mechanism.k_a);
                let phi = Dd::from_f64(s.field.phi_off) + z * s.field.k_eff
                    - dt_field * freq
                    + dt_field
                        * dt_field
                        * Dd::from_prod(s.field.k_eff, s.field.chirp_rate)
                        * 0.5;
                imprint += phi * (w as f64);
                v += Dd::from_f64(w as f64 * v_kick);
            }
        }
        action / s.constants.hbar + imprint
    };
    (arm_phase(Arm::One) - arm_phase(Arm::Two)).to_f64()
}

/// Advance a free-fall state by `dt` in double-double arithmetic; returns
/// the integrals of v^2 and z over the step plus the new state.
pub(crate) fn dd_advance(z: Dd, v: Dd, dt: Dd, g: f64) -> (Dd, Dd, Dd, Dd) {
    let dt2 = dt * dt;
    let dt3 = dt2 * dt;
    let iv2 = dt * v * v - dt2 * v * g + dt3 * (g * g / 3.0);
    let iz = dt * z + dt2 * v * 0.5 - dt3 * (g / 6.0);
    let z_new = z + dt * v - dt2 * (0.5 * g);
    let v_new = v - dt * g;
    (iv2, iz, z_new, v_new)
}

/// Delay-form arm phase: interaction-time shifts multiply the frequency
/// content of the light and internal phases at each pulse, plus the
/// response-weighted time-dilation and redshift integral.
///
/// Evaluated at the same working order as the reduced form, so the two
/// functionals agree identically on closed geometries (their difference is
/// a pure boundary term plus response-weighted terms that vanish because
/// the response averages to zero at its own pulses).
pub fn arm_phase_functional_a(s: &Scenario, arm: Arm) -> Result<f64, CoreError> {
    let (a1, a2) = propagate_idealized(
        &s.geometry,
        &s.mechanism,
        &s.species,
        &s.initial,
        s.gravity,
        &s.constants,
    );
    let traj = match arm {
        Arm::One => &a1,
        Arm::Two => &a2,
    };
    let c = s.constants.c;
    let mech = &s.mechanism;
    let mut acc = CompensatedSum::new();
    for p in pulse_data(s, arm, traj)? {
        if p.weight == 0.0 {
            continue;
        }
        // Wave-vector chirp part of the field remainder.
        let remainder = -mech.delta_k * p.z * s.chirp_rate * p.dt / c;
        // Frequency mismatch times the full first-order delay; assembled
        // from wave numbers, c (delta_k - k_a) never being formed.
        let delay = p.z / c * (1.0 + p.v_sym / c);
        let freq_shift = -(mech.delta_k - mech.k_a) * c * delay;
        // Dominant chirp and momentum-transfer frequency content times the
        // leading delay z/c.
        let dominant_shift =
            (mech.k_eff * s.chirp_rate * p.dt + mech.k_eff * p.v_sym) * (p.z / c);
        acc.add(p.weight * (remainder + freq_shift + dominant_shift));
    }
    let mut integral = CompensatedSum::new();
    for iv in interval_data(s, &a1, &a2)? {
        let (lambda, iv2, iz) = match arm {
            Arm::One => (iv.lambda1, iv.iv2_1, iv.iz_1),
            Arm::Two => (iv.lambda2, iv.iv2_2, iv.iz_2),
        };
        integral.add(lambda * mech.k_a * (iv2 / (2.0 * c) - s.gravity * iz / c));
    }
    Ok(acc.value() + integral.value())
}

/// Reduced-form arm phase: step and kick evaluations at the pulses plus the
/// response-weighted kinetic integral.
pub fn arm_phase_functional_b(s: &Scenario, arm: Arm) -> Result<f64, CoreError> {
    let (a1, a2) = propagate_idealized(
        &s.geometry,
        &s.mechanism,
        &s.species,
        &s.initial,
        s.gravity,
        &s.constants,
    );
    let traj = match arm {
        Arm::One => &a1,
        Arm::Two => &a2,
    };
    let c = s.constants.c;
    let mech = &s.mechanism;
    let mut acc = CompensatedSum::new();
    for p in pulse_data(s, arm, traj)? {
        if p.weight == 0.0 {
            continue;
        }
        let step = (mech.k_a - mech.delta_k) * p.z
            + (mech.k_eff - mech.delta_k) * p.z * (p.v_sym + s.chirp_rate * p.dt) / c;
        acc.add(p.weight * step);
    }
    let mut integral = CompensatedSum::new();
    for iv in interval_data(s, &a1, &a2)? {
        let (lambda, iv2) = match arm {
            Arm::One => (iv.lambda1, iv.iv2_1),
            Arm::Two => (iv.lambda2, iv.iv2_2),
        };
        integral.add(-lambda * mech.k_a * iv2 / (2.0 * c));
    }
    Ok(acc.value() + integral.value())
}

/// Timing-shift contributions of a delayed mirror pulse:
/// `(ts_clock, ts_doppler, ts_chirp)`.
///
/// Only defined for a splitter-mirror-splitter sequence, whose symmetric
/// kick structure the closed forms rely on.
pub fn compensation_phase(s: &Scenario) -> Result<(f64, f64, f64), CoreError> {
    let comp = s.compensation.as_ref().ok_or_else(|| {
        CoreError::InvalidInput("no compensation delay configured in this scenario".into())
    })?;
    let t_interrogation = s.mzi_interrogation_time().ok_or_else(|| {
        CoreError::InvalidInput(
            "timing-shift compensation is derived for the three-pulse sequence only".into(),
        )
    })?;
    if comp.pulse_index != 1 {
        return Err(CoreError::InvalidInput(
            "compensation must target the mirror pulse (index 1)".into(),
        ));
    }
    let (a1, _) = propagate_idealized(
        &s.geometry,
        &s.mechanism,
        &s.species,
        &s.initial,
        s.gravity,
        &s.constants,
    );
    let v_pi = velocity_symmetric(&a1, t_interrogation)?;
    let mech = &s.mechanism;
    let dt_mirror = t_interrogation - s.field.t_init_retarded;
    let ts_clock = 2.0 * (mech.delta_k - mech.k_a) * s.constants.c * comp.delta_t;
    let ts_doppler = 2.0 * (mech.delta_k - mech.k_a - mech.k_eff) * v_pi * comp.delta_t;
    let ts_chirp = -2.0 * mech.k_eff * s.chirp_rate * dt_mirror * comp.delta_t;
    Ok((ts_clock, ts_doppler, ts_chirp))
}

/// Full phase of a closed interferometer, decomposed by named contribution.
///
/// The perturbation terms come from the reduced-form functional, with the
/// arm difference paired pulse by pulse inside each term; timing-shift
/// terms are added when a compensation delay is configured.
pub fn total_phase(s: &Scenario) -> Result<PhaseBreakdown, CoreError> {
    s.closure_gate()?;
    let (a1, a2) = propagate_idealized(
        &s.geometry,
        &s.mechanism,
        &s.species,
        &s.initial,
        s.gravity,
        &s.constants,
    );
    let mech = &s.mechanism;
    let c = s.constants.c;
    let data1 = pulse_data(s, Arm::One, &a1)?;
    let data2 = pulse_data(s, Arm::Two, &a2)?;

    // Geometric combinations, differenced arm against arm per pulse.
    let mut comb_z = CompensatedSum::new();
    let mut comb_zv = CompensatedSum::new();
    let mut comb_zt = CompensatedSum::new();
    for (p1, p2) in data1.iter().zip(&data2) {
        comb_z.add(p1.weight * p1.z - p2.weight * p2.z);
        comb_zv.add(p1.weight * p1.z * p1.v_sym - p2.weight * p2.z * p2.v_sym);
        comb_zt.add(p1.weight * p1.z * p1.dt - p2.weight * p2.z * p2.dt);
    }
    let mut comb_v2 = CompensatedSum::new();
    for iv in interval_data(s, &a1, &a2)? {
        comb_v2.add(iv.lambda1 * iv.iv2_1 - iv.lambda2 * iv.iv2_2);
    }

    let fsl_clock = (mech.k_a - mech.delta_k) * comb_z.value();
    let fsl_doppler = (mech.k_eff - mech.delta_k) / c * comb_zv.value();
    let chirp = (mech.k_eff - mech.delta_k) * s.chirp_rate / c * comb_zt.value();
    let time_dilation = -mech.k_a / (2.0 * c) * comb_v2.value();

    let (ts_clock, ts_doppler, ts_chirp) = match &s.compensation {
        Some(_) => compensation_phase(s)?,
        None => (0.0, 0.0, 0.0),
    };

    let unperturbed = unperturbed_phase_unchecked(s);
    Ok(PhaseBreakdown::assemble([
        unperturbed,
        fsl_clock,
        fsl_doppler,
        chirp,
        time_dilation,
        ts_clock,
        ts_doppler,
        ts_chirp,
    ]))
}
