//! Chirped laser phases propagating in weak gravity, the effective
//! two-photon field, diffraction-mechanism records, and pulse envelopes.
//!
//! A beam phase is split into a spatial part (zero at the source) and a
//! purely time-dependent part; both are truncated at second order in 1/c.
//! Two counterpropagating beams combine into an effective field whose
//! dominant part drives the interferometer and whose remainder carries the
//! wave-vector chirp and redshift corrections.

use crate::constants::PhysicalConstants;
use crate::error::CoreError;
use crate::numerics::Dd;

/// Propagation direction along the vertical axis.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BeamDirection {
    Up,
    Down,
}

impl BeamDirection {
    /// Sign convention: +1 for up, -1 for down.
    #[inline]
    pub fn sign(self) -> f64 {
        match self {
            BeamDirection::Up => 1.0,
            BeamDirection::Down => -1.0,
        }
    }
}

/// One chirped beam. Up-beams source below the reference height, down-beams
/// above, at distance `L` given by `source_position = -sign * L`.
///
/// `omega` may be negative: recoilless two-photon drives are modeled by
/// sign-flipping the down-beam's frequency, wave number, and offset phase.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LaserBeam {
    pub direction: BeamDirection,
    /// Angular frequency (rad/s).
    pub omega: f64,
    /// Wave number (rad/m); `k * c == omega` exactly as stored.
    pub k: f64,
    /// Chirp rate in acceleration units (m/s^2), sign as stored.
    pub chirp_rate: f64,
    /// Offset phase of the phase ansatz (rad).
    pub phi0: f64,
    /// Source height (m).
    pub source_position: f64,
    /// Initiation time at the source (s).
    pub t_init: f64,
}

impl LaserBeam {
    /// Build a beam from its wave number; the frequency is derived so the
    /// stored pair satisfies the light dispersion relation exactly.
    pub fn from_wave_number(
        direction: BeamDirection,
        k: f64,
        chirp_rate: f64,
        phi0: f64,
        source_distance: f64,
        t_init: f64,
        consts: &PhysicalConstants,
    ) -> Result<Self, CoreError> {
        if !source_distance.is_finite() || source_distance < 0.0 {
            return Err(CoreError::InvalidInput(format!(
                "beam source distance must be nonnegative, got {source_distance:e}"
            )));
        }
        Ok(LaserBeam {
            direction,
            omega: k * consts.c,
            k,
            chirp_rate,
            phi0,
            source_position: -direction.sign() * source_distance,
            t_init,
        })
    }

    /// Distance from the source to the reference height z = 0.
    #[inline]
    pub fn source_distance(&self) -> f64 {
        -self.direction.sign() * self.source_position
    }
}

/// Beam phase at `(z, t)`: offset + spatial part + time part, truncated at
/// second order in 1/c. The spatial part vanishes at the source height for
/// all times.
pub fn phase_single(beam: &LaserBeam, g: f64, z: f64, t: f64, consts: &PhysicalConstants) -> f64 {
    phase_single_dd(beam, g, Dd::from_f64(z), Dd::from_f64(t), consts).to_f64()
}

/// Same phase evaluated in double-double arithmetic. Carrier terms reach
/// 1e15 rad, so downstream differences need the extra digits.
pub fn phase_single_dd(
    beam: &LaserBeam,
    g: f64,
    z: Dd,
    t: Dd,
    consts: &PhysicalConstants,
) -> Dd {
    let s = beam.direction.sign();
    let c = consts.c;
    let big_l = beam.source_distance();
    let dt = t - beam.t_init;
    // spatial part: s*(z + s*L)*k * [1 + sigma*dt/c - ((g + s*sigma)z + (sigma - s*g)L)/(2c^2)]
    let bracket = Dd::ONE + dt * (beam.chirp_rate / c)
        - (z * ((g + s * beam.chirp_rate) / (2.0 * c * c))
            + Dd::from_f64((beam.chirp_rate - s * g) * big_l / (2.0 * c * c)));
    let spatial = (z + s * big_l) * (s * beam.k) * bracket;
    // time part: -omega*dt * [1 + sigma*dt/(2c)], with the carrier expanded
    // as the exact product k*c so the dispersion relation holds to working
    // precision (the stored f64 omega alone misses it by one ulp).
    let omega = Dd::from_prod(beam.k, c);
    let time_part = -(dt * omega) * (Dd::ONE + dt * (beam.chirp_rate / (2.0 * c)));
    spatial + time_part + beam.phi0
}

/// Two-beam combination: dominant light phase plus relativistic remainder.
///
/// `delta_omega == delta_k * c` exactly as stored. The common chirp rate
/// follows the opposite-chirping convention (up-beam chirped at `-sigma`,
/// down-beam at `+sigma`).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EffectiveField {
    /// Offset phase, the field value at (z = 0, t = retarded init time).
    pub phi_off: f64,
    /// Effective wave number, sum of the two beam wave numbers (rad/m).
    pub k_eff: f64,
    /// Transferred angular frequency (rad/s).
    pub delta_omega: f64,
    /// Wave-number difference, `delta_omega / c` (rad/m).
    pub delta_k: f64,
    /// Common chirp rate (m/s^2).
    pub chirp_rate: f64,
    /// Initiation time advanced by the source-to-center flight time (s).
    pub t_init_retarded: f64,
}

impl EffectiveField {
    /// Assemble the field from its parameters, normalizing the dispersion
    /// pair so `delta_omega == delta_k * c` holds bit-exactly.
    pub fn new(
        phi_off: f64,
        k_eff: f64,
        delta_k: f64,
        chirp_rate: f64,
        t_init_retarded: f64,
        consts: &PhysicalConstants,
    ) -> Self {
        EffectiveField {
            phi_off,
            k_eff,
            delta_omega: delta_k * consts.c,
            delta_k,
            chirp_rate,
            t_init_retarded,
        }
    }

    /// Combine an up- and a down-beam. The down-beam must mirror the
    /// up-beam's geometry and carry the opposite chirp unless it is null.
    pub fn from_beams(
        up: &LaserBeam,
        down: &LaserBeam,
        g: f64,
        consts: &PhysicalConstants,
    ) -> Result<Self, CoreError> {
        if up.direction != BeamDirection::Up || down.direction != BeamDirection::Down {
            return Err(CoreError::InvalidInput(
                "effective field needs one up-beam and one down-beam".into(),
            ));
        }
        if up.t_init != down.t_init {
            return Err(CoreError::InvalidInput(
                "beams must be initiated at the same time".into(),
            ));
        }
        let down_is_null = down.omega == 0.0 && down.k == 0.0;
        if !down_is_null && up.source_distance() != down.source_distance() {
            return Err(CoreError::InvalidInput(
                "beam sources must sit at equal distances from the center".into(),
            ));
        }
        if !down_is_null && down.chirp_rate != -up.chirp_rate {
            return Err(CoreError::InvalidInput(
                "beams must be chirped in opposite directions".into(),
            ));
        }
        let sigma = -up.chirp_rate;
        let t_ret = up.t_init + up.source_distance() / consts.c;
        let t_ret_dd = Dd::from_sum(up.t_init, up.source_distance() / consts.c);
        // Offset phase is the beam difference at the retarded origin.
        let phi_off = (phase_single_dd(up, g, Dd::ZERO, t_ret_dd, consts)
            - phase_single_dd(down, g, Dd::ZERO, t_ret_dd, consts))
        .to_f64();
        Ok(EffectiveField::new(
            phi_off,
            up.k + down.k,
            (up.omega - down.omega) / consts.c,
            sigma,
            t_ret,
            consts,
        ))
    }

    /// Field with the beam roles exchanged (all imprint signs flipped).
    pub fn negated(&self) -> Self {
        EffectiveField {
            phi_off: -self.phi_off,
            k_eff: -self.k_eff,
            delta_omega: -self.delta_omega,
            delta_k: -self.delta_k,
            chirp_rate: self.chirp_rate,
            t_init_retarded: self.t_init_retarded,
        }
    }

    /// Dominant phase and its relativistic remainder at `(z, t)`.
    pub fn phase_split(
        &self,
        g: f64,
        z: f64,
        t: f64,
        consts: &PhysicalConstants,
    ) -> (f64, f64) {
        let c = consts.c;
        let dt = t - self.t_init_retarded;
        let dominant =
            self.phi_off + self.k_eff * z - self.delta_omega * dt
                + 0.5 * self.k_eff * self.chirp_rate * dt * dt;
        let remainder = -self.delta_k * z * self.chirp_rate * dt / c
            - self.k_eff * z * (g - self.chirp_rate) * z / (2.0 * c * c);
        (dominant, remainder)
    }

    /// Total phase (dominant + remainder) in double-double arithmetic.
    pub fn phase_total_dd(&self, g: f64, z: Dd, t: Dd, consts: &PhysicalConstants) -> Dd {
        let c = consts.c;
        let dt = t - self.t_init_retarded;
        let dominant = Dd::from_f64(self.phi_off) + z * self.k_eff
            - dt * self.delta_omega
            + dt * dt * Dd::from_prod(self.k_eff, self.chirp_rate) * 0.5;
        let remainder = -(z * dt * (Dd::from_prod(self.delta_k, self.chirp_rate) / c))
            - z * z * (Dd::from_prod(self.k_eff, g - self.chirp_rate) / (2.0 * c * c));
        dominant + remainder
    }

    /// Spatial gradient of the total phase, i.e. the local wave number
    /// including the chirped and redshifted corrections.
    pub fn gradient_z_dd(&self, g: f64, z: Dd, t: Dd, consts: &PhysicalConstants) -> Dd {
        let c = consts.c;
        let dt = t - self.t_init_retarded;
        Dd::from_f64(self.k_eff) - dt * (Dd::from_prod(self.delta_k, self.chirp_rate) / c)
            - z * (Dd::from_prod(self.k_eff, g - self.chirp_rate) / (c * c))
    }
}

/// Dominant phase and remainder of an effective field (free-function form).
pub fn phase_effective(
    field: &EffectiveField,
    g: f64,
    z: f64,
    t: f64,
    consts: &PhysicalConstants,
) -> (f64, f64) {
    field.phase_split(g, z, t, consts)
}

/// Diffraction mechanism.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MechanismKind {
    /// Single-photon transition: momentum and energy tied by light dispersion.
    Spt,
    /// Two-photon Bragg diffraction: momentum only, internal state unchanged.
    Bragg,
    /// Two-photon Raman diffraction: hyperfine state change, small delta_k.
    Raman,
    /// Recoilless E1-M1 transition: energy only, Doppler-free.
    E1M1,
}

impl MechanismKind {
    pub fn name(self) -> &'static str {
        match self {
            MechanismKind::Spt => "single-photon",
            MechanismKind::Bragg => "Bragg",
            MechanismKind::Raman => "Raman",
            MechanismKind::E1M1 => "E1-M1",
        }
    }
}

/// Construction parameters for a mechanism: the quantities an experimenter
/// fixes while everything frequency-like follows from the resonance
/// condition and the dispersion relation at the operating light speed.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum MechanismParams {
    Spt { k_eff: f64 },
    Bragg { k_eff: f64 },
    Raman { k_eff: f64, k_a: f64 },
    E1M1 { k_a: f64 },
}

impl MechanismParams {
    pub fn kind(&self) -> MechanismKind {
        match self {
            MechanismParams::Spt { .. } => MechanismKind::Spt,
            MechanismParams::Bragg { .. } => MechanismKind::Bragg,
            MechanismParams::Raman { .. } => MechanismKind::Raman,
            MechanismParams::E1M1 { .. } => MechanismKind::E1M1,
        }
    }
}

/// Resolved mechanism record: effective wave number, wave-number difference,
/// internal splitting and the matching atomic wave number.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Mechanism {
    pub kind: MechanismKind,
    /// Transferred wave number K (rad/m).
    pub k_eff: f64,
    /// Wave-number difference delta_k (rad/m).
    pub delta_k: f64,
    /// Internal splitting (rad/s), `k_a * c` as stored.
    pub omega_a: f64,
    /// Atomic wave number omega_a / c (rad/m).
    pub k_a: f64,
}

/// Recoil velocity `hbar K / m_bar`.
#[inline]
pub fn recoil_velocity(k_eff: f64, m_bar: f64, consts: &PhysicalConstants) -> f64 {
    consts.hbar * k_eff / m_bar
}

impl Mechanism {
    /// Resolve a mechanism tuned to resonance for an atom of mean mass
    /// `m_bar` at resonant velocity `v_res`.
    pub fn resolve(
        params: MechanismParams,
        v_res: f64,
        m_bar: f64,
        consts: &PhysicalConstants,
    ) -> Result<Mechanism, CoreError> {
        if !(m_bar > 0.0) {
            return Err(CoreError::InvalidInput(format!(
                "mean mass must be positive, got {m_bar:e}"
            )));
        }
        let c = consts.c;
        match params {
            MechanismParams::Spt { k_eff } => {
                if !(k_eff > 0.0) {
                    return Err(CoreError::InvalidInput(
                        "single-photon k_eff must be positive".into(),
                    ));
                }
                let v_k = recoil_velocity(k_eff, m_bar, consts);
                // Dispersion ties delta_k to K; resonance fixes the splitting.
                let k_a = k_eff - k_eff * (v_res + 0.5 * v_k) / c;
                if !(k_a > 0.0) {
                    return Err(CoreError::InvalidInput(
                        "single-photon resonance puts the internal splitting below zero".into(),
                    ));
                }
                Ok(Mechanism {
                    kind: MechanismKind::Spt,
                    k_eff,
                    delta_k: k_eff,
                    omega_a: k_a * c,
                    k_a,
                })
            }
            MechanismParams::Bragg { k_eff } => {
                if !(k_eff > 0.0) {
                    return Err(CoreError::InvalidInput(
                        "Bragg k_eff must be positive".into(),
                    ));
                }
                let v_k = recoil_velocity(k_eff, m_bar, consts);
                let delta_omega = k_eff * (v_res + 0.5 * v_k);
                Ok(Mechanism {
                    kind: MechanismKind::Bragg,
                    k_eff,
                    delta_k: delta_omega / c,
                    omega_a: 0.0,
                    k_a: 0.0,
                })
            }
            MechanismParams::Raman { k_eff, k_a } => {
                if !(k_eff > 0.0) || !(k_a > 0.0) {
                    return Err(CoreError::InvalidInput(
                        "Raman k_eff and k_a must be positive".into(),
                    ));
                }
                let v_k = recoil_velocity(k_eff, m_bar, consts);
                let omega_a = k_a * c;
                let delta_k = (omega_a + k_eff * (v_res + 0.5 * v_k)) / c;
                if delta_k >= 0.1 * k_eff {
                    return Err(CoreError::InvalidInput(format!(
                        "Raman delta_k/k_eff = {:e} is not small; use the single-photon \
                         mechanism for comparable wave numbers",
                        delta_k / k_eff
                    )));
                }
                Ok(Mechanism {
                    kind: MechanismKind::Raman,
                    k_eff,
                    delta_k,
                    omega_a,
                    k_a,
                })
            }
            MechanismParams::E1M1 { k_a } => {
                if !(k_a > 0.0) {
                    return Err(CoreError::InvalidInput(
                        "recoilless k_a must be positive".into(),
                    ));
                }
                Ok(Mechanism {
                    kind: MechanismKind::E1M1,
                    k_eff: 0.0,
                    delta_k: k_a,
                    omega_a: k_a * c,
                    k_a,
                })
            }
        }
    }

    /// Effective field tuned to this mechanism, expressed in the frame where
    /// the retarded initiation time is zero.
    pub fn field(&self, phi_off: f64, chirp_rate: f64, consts: &PhysicalConstants) -> EffectiveField {
        EffectiveField::new(phi_off, self.k_eff, self.delta_k, chirp_rate, 0.0, consts)
    }
}

/// Resonant frequency difference: internal splitting plus recoil plus
/// Doppler term. Doppler-free (velocity-independent) for recoilless drives.
pub fn resonant_delta_omega(
    mech: &Mechanism,
    v_res: f64,
    m_bar: f64,
    consts: &PhysicalConstants,
) -> f64 {
    let v_k = recoil_velocity(mech.k_eff, m_bar, consts);
    mech.omega_a + mech.k_eff * (0.5 * v_k + v_res)
}

/// Gaussian pulse envelope of spectral width `sigma_omega`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PulseEnvelope {
    pub sigma_omega: f64,
}

impl PulseEnvelope {
    pub fn new(sigma_omega: f64) -> Result<Self, CoreError> {
        if !(sigma_omega >= 0.0) {
            return Err(CoreError::InvalidInput(format!(
                "spectral width must be nonnegative, got {sigma_omega:e}"
            )));
        }
        Ok(PulseEnvelope { sigma_omega })
    }
}

/// Unit-normalized field magnitude of a pulsed beam at `(z, t)`. The peak
/// travels on the retarded line `t = t_init' + z/c`.
pub fn envelope(
    beam: &LaserBeam,
    env: &PulseEnvelope,
    z: f64,
    t: f64,
    consts: &PhysicalConstants,
) -> f64 {
    let t_ret = beam.t_init + beam.source_distance() / consts.c;
    let arg = env.sigma_omega * (t - t_ret - z / consts.c);
    (-0.5 * arg * arg).exp()
}

/// Residual of the light-propagation equation evaluated by central finite
/// differences of `phase_single`:
/// `(1 + gz/c^2)^-2 (d_t phi / c)^2 - (d_z phi)^2`.
///
/// Steps default to 1e-4 of the local wavelength in z and 1e-4 of the
/// inverse frequency in t; oversized steps let discretization dominate.
/// Differences run in double-double arithmetic because the phase magnitude
/// dwarfs the residual.
pub fn eikonal_residual(
    beam: &LaserBeam,
    g: f64,
    z: f64,
    t: f64,
    steps: Option<(f64, f64)>,
    consts: &PhysicalConstants,
) -> f64 {
    let (hz, ht) = steps.unwrap_or_else(|| {
        (
            1e-4 * std::f64::consts::TAU / beam.k.abs(),
            1e-4 / beam.omega.abs(),
        )
    });
    let c = consts.c;
    // The offsets can sit far below one ulp of z or t, so the evaluation
    // points are carried as exact double-double sums.
    let zc = Dd::from_f64(z);
    let tc = Dd::from_f64(t);
    let dphi_dz = (phase_single_dd(beam, g, zc + hz, tc, consts)
        - phase_single_dd(beam, g, zc - hz, tc, consts))
        / (2.0 * hz);
    let dphi_dt = (phase_single_dd(beam, g, zc, tc + ht, consts)
        - phase_single_dd(beam, g, zc, tc - ht, consts))
        / (2.0 * ht);
    let lapse = Dd::ONE + Dd::from_f64(g * z / (c * c));
    let time_term = (dphi_dt / c) * (dphi_dt / c) / (lapse * lapse);
    (time_term - dphi_dz * dphi_dz).to_f64()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    const SI: PhysicalConstants = PhysicalConstants::SI;

    fn up_beam(k: f64, sigma: f64, phi0: f64, l: f64) -> LaserBeam {
        LaserBeam::from_wave_number(BeamDirection::Up, k, sigma, phi0, l, 0.0, &SI).unwrap()
    }

    fn down_beam(k: f64, sigma: f64, phi0: f64, l: f64) -> LaserBeam {
        LaserBeam::from_wave_number(BeamDirection::Down, k, sigma, phi0, l, 0.0, &SI).unwrap()
    }

    /// Independent term-by-term evaluation of the spatial + time split,
    /// kept deliberately separate from the production code path.
    fn phase_single_reference(beam: &LaserBeam, g: f64, z: f64, t: f64, c: f64) -> Dd {
        let s = beam.direction.sign();
        let l = -s * beam.source_position;
        let z = Dd::from_f64(z);
        let dt = Dd::from_sum(t, -beam.t_init);
        let sigma = beam.chirp_rate;
        let one = Dd::ONE;
        let term_chirp = dt * sigma / c;
        let term_red = (z * (g + s * sigma) + Dd::from_prod(sigma - s * g, l)) / (2.0 * c * c);
        let kappa = (z + s * l) * s * beam.k * (one + term_chirp - term_red);
        let time = -(dt * beam.omega) * (one + dt * (sigma / (2.0 * c)));
        kappa + time + beam.phi0
    }

    #[test]
    fn plane_wave_limit_large_c() {
        // With a huge light speed and no chirp the phase is a plane wave.
        let consts = PhysicalConstants::new(1e30, HBAR_TEST).unwrap();
        let k = 8e6;
        let beam =
            LaserBeam::from_wave_number(BeamDirection::Up, k, 0.0, 0.3, 0.5, 0.0, &consts)
                .unwrap();
        let (z, t) = (0.2, 1e-6);
        let expected = 0.3 + k * (z + 0.5) - beam.omega * t;
        assert_relative_eq!(
            phase_single(&beam, 9.81, z, t, &consts),
            expected,
            max_relative = 1e-12
        );
    }

    const HBAR_TEST: f64 = 1.054_571_817e-34;

    #[test]
    fn spatial_part_vanishes_at_source() {
        for beam in [up_beam(8e6, 9.81, 0.4, 0.5), down_beam(7.9e6, -9.81, -0.2, 0.5)] {
            for t in [0.0, 1e-3, 0.27] {
                let at_source = phase_single(&beam, 9.81, beam.source_position, t, &SI);
                let dt = t - beam.t_init;
                let time_only =
                    beam.phi0 - beam.omega * dt * (1.0 + beam.chirp_rate * dt / (2.0 * SI.c));
                assert_relative_eq!(at_source, time_only, max_relative = 1e-12);
            }
        }
    }

    #[test]
    fn matches_term_by_term_reference() {
        // Deterministic pseudo-random parameter sets.
        let mut state = 0x9e3779b97f4a7c15u64;
        let mut next = move || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (state >> 11) as f64 / (1u64 << 53) as f64
        };
        for _ in 0..64 {
            let k = 1e6 + 2e7 * next();
            let sigma = -20.0 + 40.0 * next();
            let g = 1.0 + 19.0 * next();
            let l = 2.0 * next();
            let z = -3.0 + 6.0 * next();
            let t = 2.0 * next();
            let dir = if next() > 0.5 {
                BeamDirection::Up
            } else {
                BeamDirection::Down
            };
            let beam =
                LaserBeam::from_wave_number(dir, k, sigma, next(), l, 0.1 * next(), &SI).unwrap();
            let got = phase_single_dd(&beam, g, Dd::from_f64(z), Dd::from_f64(t), &SI);
            let want = phase_single_reference(&beam, g, z, t, SI.c);
            let err = (got - want).to_f64().abs();
            assert!(
                err < 1e-12 * want.to_f64().abs().max(1.0),
                "term-by-term mismatch: {err:e}"
            );
        }
    }

    #[test]
    fn effective_from_beams_matches_closed_form() {
        // The beam difference equals dominant + remainder up to the known
        // second-order cross term sigma*L*delta_k*z/c^2.
        let sigma = 12.5;
        let g = 9.3;
        let l = 0.75;
        let up = up_beam(8.1e6, -sigma, 0.9, l);
        let down = down_beam(7.9e6, sigma, -0.4, l);
        let field = EffectiveField::from_beams(&up, &down, g, &SI).unwrap();
        assert_eq!(field.delta_omega, field.delta_k * SI.c);
        for (z, t) in [(0.3, 0.1), (-1.2, 0.8), (2.0, 1.7)] {
            let diff = (phase_single_dd(&up, g, Dd::from_f64(z), Dd::from_f64(t), &SI)
                - phase_single_dd(&down, g, Dd::from_f64(z), Dd::from_f64(t), &SI))
            .to_f64();
            let (dom, rem) = field.phase_split(g, z, t, &SI);
            let cross = sigma * l * field.delta_k * z / (SI.c * SI.c);
            assert_relative_eq!(diff, dom + rem + cross, max_relative = 1e-9, epsilon = 1e-9);
        }
    }

    #[test]
    fn effective_origin_is_offset_phase() {
        let field = EffectiveField::new(1.25, 1.6e7, 0.002, 9.81, 0.0, &SI);
        let (dom, rem) = field.phase_split(9.81, 0.0, 0.0, &SI);
        assert_eq!(dom, 1.25);
        assert_eq!(rem, 0.0);
    }

    #[test]
    fn perfect_chirp_kills_quadratic_remainder() {
        let g = 9.81;
        let field = EffectiveField::new(0.0, 1.6e7, 0.002, g, 0.0, &SI);
        // With sigma = g the z^2 term vanishes; remainder is linear in dt.
        let (_, rem) = field.phase_split(g, 2.0, 0.0, &SI);
        assert_eq!(rem, 0.0);
        let (_, rem) = field.phase_split(g, 2.0, 0.5, &SI);
        assert_relative_eq!(
            rem,
            -field.delta_k * 2.0 * g * 0.5 / SI.c,
            max_relative = 1e-14
        );
    }

    #[test]
    fn swapped_beams_negate_phase() {
        let field = EffectiveField::new(0.7, 1.6e7, 0.002, 9.5, 0.0, &SI);
        let swapped = field.negated();
        for (z, t) in [(0.4, 0.2), (-0.9, 1.4)] {
            let (d, r) = field.phase_split(9.81, z, t, &SI);
            let (ds, rs) = swapped.phase_split(9.81, z, t, &SI);
            assert_relative_eq!(ds + rs, -(d + r), max_relative = 1e-14);
        }
    }

    #[test]
    fn spt_reduction_to_single_beam() {
        // Null down-beam: the effective field is the up-beam phase and the
        // dispersion identity k_eff = delta_k holds.
        let sigma = 9.81;
        let g = 9.81;
        let l = 0.5;
        let up = up_beam(9.0e6, -sigma, 0.3, l);
        let null_down = down_beam(0.0, 0.0, 0.0, l);
        let field = EffectiveField::from_beams(&up, &null_down, g, &SI).unwrap();
        assert_eq!(field.k_eff, field.delta_k);
        for (z, t) in [(0.1, 0.05), (-0.4, 0.9)] {
            let (dom, rem) = field.phase_split(g, z, t, &SI);
            let single = phase_single(&up, g, z, t, &SI);
            let cross = sigma * l * field.delta_k * z / (SI.c * SI.c);
            assert_relative_eq!(dom + rem + cross, single, max_relative = 1e-12);
        }
    }

    #[test]
    fn dispersion_pair_exact_as_stored() {
        for k in [8e6, 9001698.147821756, -7.9e6] {
            let beam =
                LaserBeam::from_wave_number(BeamDirection::Up, k, 1.0, 0.0, 0.5, 0.0, &SI)
                    .unwrap();
            assert_eq!(beam.omega, beam.k * SI.c);
        }
        let field = EffectiveField::new(0.0, 1.6e7, 3.1e-4, 9.81, 0.0, &SI);
        assert_eq!(field.delta_omega, field.delta_k * SI.c);
    }

    #[test]
    fn resonance_values() {
        let m_bar = 1.443_161e-25;
        // Doppler-free drive ignores the resonant velocity.
        let e1m1 = Mechanism::resolve(MechanismParams::E1M1 { k_a: 9.0e6 }, 0.0, m_bar, &SI)
            .unwrap();
        for v in [-5.0, 0.0, 3.3] {
            assert_eq!(resonant_delta_omega(&e1m1, v, m_bar, &SI), e1m1.omega_a);
        }
        // Two-photon recoil for a 780 nm retroreflected pair.
        let k = 2.0 * std::f64::consts::TAU / 780e-9;
        let bragg = Mechanism::resolve(MechanismParams::Bragg { k_eff: k }, 0.0, m_bar, &SI)
            .unwrap();
        let v_k = recoil_velocity(k, m_bar, &SI);
        assert_relative_eq!(v_k, 1.178e-2, max_relative = 2e-3);
        let d_omega = resonant_delta_omega(&bragg, 0.0, m_bar, &SI);
        assert_relative_eq!(d_omega, 0.5 * k * v_k, max_relative = 1e-14);
        assert_relative_eq!(d_omega, 9.49e4, max_relative = 2e-3);
    }

    #[test]
    fn resonance_affine_in_velocity() {
        let m_bar = 1.443_161e-25;
        let mech =
            Mechanism::resolve(MechanismParams::Bragg { k_eff: 1.6e7 }, 0.0, m_bar, &SI).unwrap();
        let base = resonant_delta_omega(&mech, 0.0, m_bar, &SI);
        for v in [0.25, 1.0, -2.0] {
            let shifted = resonant_delta_omega(&mech, v, m_bar, &SI);
            assert_relative_eq!(shifted - base, mech.k_eff * v, max_relative = 1e-12);
        }
    }

    #[test]
    fn envelope_peak_and_width() {
        let beam = up_beam(8e6, 0.0, 0.0, 0.5);
        let env = PulseEnvelope::new(2.0e9).unwrap();
        let t_ret = 0.5 / SI.c;
        let z = 0.5;
        let peak_time = t_ret + z / SI.c;
        assert_eq!(envelope(&beam, &env, z, peak_time, &SI), 1.0);
        let one_sigma = envelope(&beam, &env, z, peak_time + 1.0 / env.sigma_omega, &SI);
        assert_relative_eq!(one_sigma, (-0.5f64).exp(), max_relative = 1e-12);
        // Peak arrival at z = 0.5 m lags the retarded init time by z/c.
        assert_relative_eq!(peak_time - t_ret, 1.668e-9, max_relative = 1e-3);
    }

    #[test]
    fn eikonal_flat_space_plane_wave() {
        let consts = SI;
        let beam =
            LaserBeam::from_wave_number(BeamDirection::Up, 8e6, 0.0, 0.0, 0.5, 0.0, &consts)
                .unwrap();
        let steps = Some((1e-2, 1e-6));
        let r = eikonal_residual(&beam, 0.0, 0.3, 1e-4, steps, &consts);
        assert!(
            r.abs() / (beam.k * beam.k) < 1e-20,
            "flat-space residual {r:e}"
        );
    }

    #[test]
    fn eikonal_residual_decays_with_light_speed() {
        // Fixed wave number, sweep c over two decades: residual ~ c^-3.
        // The phase is quadratic in z and t, so central differences carry
        // no truncation error and a roomy time step just reduces noise.
        let g = 9.81;
        let (z, t) = (0.4, 2e-4);
        let k = 8e6;
        // Derivative noise scales as eps_dd * |phase| / step, so roomy
        // steps condition the difference; truncation stays exactly zero.
        let steps = Some((1e-2, 1e-6));
        let mut logs_c = Vec::new();
        let mut logs_r = Vec::new();
        for i in 0..5 {
            let c = 1e4 * 10f64.powf(0.5 * i as f64);
            let consts = PhysicalConstants::new(c, SI.hbar).unwrap();
            let beam =
                LaserBeam::from_wave_number(BeamDirection::Up, k, -9.81, 0.1, 0.5, 0.0, &consts)
                    .unwrap();
            let r = eikonal_residual(&beam, g, z, t, steps, &consts).abs();
            logs_c.push(c.ln());
            logs_r.push(r.ln());
        }
        let (slope, _) = crate::numerics::linear_fit(&logs_c, &logs_r);
        assert!(slope <= -3.0 + 0.15, "decay slope {slope}");
        // Leading closed form of the residual at the largest c on the grid:
        // -2 k^2 g z sigma (t - t_i) / c^3.
        let c = 1e6;
        let consts = PhysicalConstants::new(c, SI.hbar).unwrap();
        let beam = LaserBeam::from_wave_number(BeamDirection::Up, k, -9.81, 0.1, 0.5, 0.0, &consts)
            .unwrap();
        let r = eikonal_residual(&beam, g, z, t, steps, &consts);
        let expected = -2.0 * k * k * g * z * beam.chirp_rate * t / (c * c * c);
        assert_relative_eq!(r, expected, max_relative = 1e-2);
    }

    #[test]
    fn eikonal_residual_small_at_physical_c() {
        let mut state = 0xdeadbeefu64;
        let mut next = move || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1);
            (state >> 11) as f64 / (1u64 << 53) as f64
        };
        for _ in 0..16 {
            let beam = up_beam(1e6 + 1.5e7 * next(), -25.0 + 50.0 * next(), next(), next());
            let r = eikonal_residual(&beam, 1.0 + 19.0 * next(), -2.0 + 4.0 * next(),
                1e-3 * next(), None, &SI);
            assert!(
                r.abs() / (beam.k * beam.k) < 1e-12,
                "residual/k^2 = {:e}",
                r.abs() / (beam.k * beam.k)
            );
        }
    }
}
