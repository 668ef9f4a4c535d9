//! Scenario files: a TOML schema with unit-suffixed keys, strict validation,
//! and a canonical writer for round-tripping.
//!
//! Frequency-like quantities are derived from the resonance condition and
//! the dispersion relation; when the file states them explicitly they are
//! cross-checked against the derived values instead of trusted.

use std::path::Path;

use serde::{Deserialize, Serialize};

use lightpulse_core::gravimetry::compensation_delay;
use lightpulse_core::perturbation::{Compensation, Scenario, ScenarioSpec};
use lightpulse_core::{
    build_butterfly, build_mzi, Geometry, InitialConditions, MechanismParams, PhysicalConstants,
    PulseEvent, HBAR, SPEED_OF_LIGHT,
};

use crate::CliError;

/// Relative tolerance for redundant fields against their derived values.
const CONSISTENCY_TOL: f64 = 1e-9;

fn default_c() -> f64 {
    SPEED_OF_LIGHT
}

fn default_hbar() -> f64 {
    HBAR
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ConstantsSection {
    #[serde(default = "default_c")]
    pub c_m_s: f64,
    #[serde(default = "default_hbar")]
    #[serde(rename = "hbar_J_s")]
    pub hbar_j_s: f64,
}

impl Default for ConstantsSection {
    fn default() -> Self {
        ConstantsSection {
            c_m_s: default_c(),
            hbar_j_s: default_hbar(),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct AtomSection {
    pub m_bar_kg: f64,
    /// Internal splitting; required for raman and e1m1, derived for spt,
    /// zero for bragg. Validated when redundant.
    #[serde(rename = "omega_A_rad_s", skip_serializing_if = "Option::is_none")]
    pub omega_a_rad_s: Option<f64>,
    pub z0_m: f64,
    pub v0_m_s: f64,
    pub v_res_m_s: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct LasersSection {
    /// One of "spt", "bragg", "raman", "e1m1".
    pub mechanism: String,
    #[serde(rename = "K_rad_m")]
    pub k_rad_m: f64,
    /// Wave-number difference; derived from resonance when omitted.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delta_k_rad_m: Option<f64>,
    pub sigma_m_s2: f64,
    /// Source distance from the reference height (both beams).
    #[serde(rename = "L_m")]
    pub l_m: f64,
    pub phi_off_rad: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct PulseRow {
    pub time_s: f64,
    pub w1: i32,
    pub w2: i32,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct GeometrySection {
    /// "mzi" or "butterfly"; mutually exclusive with `pulses`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub builtin: Option<String>,
    #[serde(rename = "T_s", skip_serializing_if = "Option::is_none")]
    pub t_s: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pulses: Option<Vec<PulseRow>>,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct GravitySection {
    pub g_m_s2: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct CompensationSection {
    pub enabled: bool,
    #[serde(rename = "Gamma_m_s2")]
    pub gamma_m_s2: f64,
}

/// On-disk scenario description.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    #[serde(default)]
    pub constants: ConstantsSection,
    pub atom: AtomSection,
    pub lasers: LasersSection,
    pub geometry: GeometrySection,
    pub gravity: GravitySection,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub compensation: Option<CompensationSection>,
}

impl ScenarioFile {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            CliError::validation(format!("cannot read scenario file {}: {e}", path.display()))
        })?;
        toml::from_str(&text).map_err(|e| {
            CliError::validation(format!("invalid scenario file {}: {e}", path.display()))
        })
    }

    /// Canonical serialization with all derived fields filled in, so a
    /// written file reloads to the identical scenario.
    pub fn canonical_toml(&self) -> Result<String, CliError> {
        let built = self.build()?;
        let mut normalized = self.clone();
        normalized.lasers.delta_k_rad_m = Some(built.scenario.mechanism.delta_k);
        normalized.atom.omega_a_rad_s = Some(built.scenario.mechanism.omega_a);
        toml::to_string_pretty(&normalized)
            .map_err(|e| CliError::computation(format!("cannot serialize scenario: {e}")))
    }

    /// Validate and build the in-memory scenario.
    pub fn build(&self) -> Result<BuiltScenario, CliError> {
        let consts = PhysicalConstants::new(self.constants.c_m_s, self.constants.hbar_j_s)
            .map_err(CliError::from_validation)?;

        let key = |k: &str| format!("invalid value for {k}");
        if !(self.atom.m_bar_kg > 0.0) {
            return Err(CliError::validation(key("atom.m_bar_kg")));
        }
        if !(self.lasers.l_m >= 0.0) {
            return Err(CliError::validation(key("lasers.L_m")));
        }

        let mechanism = self.mechanism_params(&consts)?;

        let geometry = self.geometry()?;

        let compensation = match &self.compensation {
            Some(section) if section.enabled => {
                let t = lightpulse_core::perturbation::mzi_interrogation_time(&geometry)
                    .ok_or_else(|| {
                        CliError::validation(
                            "compensation.enabled requires the three-pulse mzi geometry"
                                .to_string(),
                        )
                    })?;
                let delta_t = compensation_delay(
                    mechanism.kind(),
                    self.gravity.g_m_s2,
                    section.gamma_m_s2,
                    self.lasers.sigma_m_s2,
                    t,
                    &consts,
                )
                .map_err(CliError::from_validation)?;
                Some(Compensation {
                    delta_t,
                    pulse_index: 1,
                    gamma_prior: section.gamma_m_s2,
                })
            }
            _ => None,
        };

        let scenario = Scenario::new(ScenarioSpec {
            mechanism,
            geometry,
            m_bar: self.atom.m_bar_kg,
            initial: InitialConditions {
                z0: self.atom.z0_m,
                v0: self.atom.v0_m_s,
                v_res: self.atom.v_res_m_s,
            },
            gravity: self.gravity.g_m_s2,
            chirp_rate: self.lasers.sigma_m_s2,
            phi_off: self.lasers.phi_off_rad,
            constants: consts,
            compensation,
        })
        .map_err(CliError::from_validation)?;

        // Cross-check redundant frequency-side fields against the resolved
        // mechanism instead of trusting them.
        if let Some(dk) = self.lasers.delta_k_rad_m {
            let derived = scenario.mechanism.delta_k;
            if (dk - derived).abs() > CONSISTENCY_TOL * derived.abs().max(dk.abs()) {
                return Err(CliError::validation(format!(
                    "lasers.delta_k_rad_m = {dk:e} conflicts with the resonance condition \
                     (derived {derived:e})"
                )));
            }
        }
        if let Some(omega_a) = self.atom.omega_a_rad_s {
            let derived = scenario.mechanism.omega_a;
            if (omega_a - derived).abs() > CONSISTENCY_TOL * derived.abs().max(omega_a.abs()) {
                return Err(CliError::validation(format!(
                    "atom.omega_A_rad_s = {omega_a:e} conflicts with the {} mechanism \
                     (expected {derived:e})",
                    scenario.mechanism.kind.name()
                )));
            }
        }

        let mut warnings = Vec::new();
        let ratio = scenario.species.mass_defect_ratio(&scenario.constants);
        if ratio > 1e-6 {
            warnings.push(format!(
                "mass-defect ratio {ratio:e} exceeds 1e-6; first-order results degrade"
            ));
        }

        Ok(BuiltScenario { scenario, warnings })
    }

    fn mechanism_params(&self, consts: &PhysicalConstants) -> Result<MechanismParams, CliError> {
        let k = self.lasers.k_rad_m;
        let omega_a = self.atom.omega_a_rad_s;
        match self.lasers.mechanism.as_str() {
            "spt" => Ok(MechanismParams::Spt { k_eff: k }),
            "bragg" => {
                if let Some(w) = omega_a {
                    if w != 0.0 {
                        return Err(CliError::validation(
                            "atom.omega_A_rad_s must be 0 for the bragg mechanism".into(),
                        ));
                    }
                }
                Ok(MechanismParams::Bragg { k_eff: k })
            }
            "raman" => {
                let w = omega_a.ok_or_else(|| {
                    CliError::validation(
                        "atom.omega_A_rad_s is required for the raman mechanism".into(),
                    )
                })?;
                Ok(MechanismParams::Raman {
                    k_eff: k,
                    k_a: w / consts.c,
                })
            }
            "e1m1" => {
                if k != 0.0 {
                    return Err(CliError::validation(
                        "lasers.K_rad_m must be 0 for the e1m1 mechanism".into(),
                    ));
                }
                let w = omega_a.ok_or_else(|| {
                    CliError::validation(
                        "atom.omega_A_rad_s is required for the e1m1 mechanism".into(),
                    )
                })?;
                Ok(MechanismParams::E1M1 { k_a: w / consts.c })
            }
            other => Err(CliError::validation(format!(
                "lasers.mechanism must be one of spt, bragg, raman, e1m1; got {other:?}"
            ))),
        }
    }

    fn geometry(&self) -> Result<Geometry, CliError> {
        match (&self.geometry.builtin, &self.geometry.pulses) {
            (Some(name), None) => {
                let t = self.geometry.t_s.ok_or_else(|| {
                    CliError::validation("geometry.T_s is required with geometry.builtin".into())
                })?;
                match name.as_str() {
                    "mzi" => build_mzi(t).map_err(CliError::from_validation),
                    "butterfly" => build_butterfly(t).map_err(CliError::from_validation),
                    other => Err(CliError::validation(format!(
                        "geometry.builtin must be mzi or butterfly, got {other:?}"
                    ))),
                }
            }
            (None, Some(rows)) => {
                let pulses = rows
                    .iter()
                    .map(|r| PulseEvent {
                        time: r.time_s,
                        weight_arm1: r.w1,
                        weight_arm2: r.w2,
                    })
                    .collect();
                Geometry::new(pulses, "custom").map_err(CliError::from_validation)
            }
            _ => Err(CliError::validation(
                "geometry needs either builtin + T_s or a pulses list (not both)".into(),
            )),
        }
    }

    /// Patch one numeric field by dotted path, used by parameter sweeps.
    /// Redundant derived fields are cleared so the rebuild re-derives them.
    pub fn set_parameter(&mut self, path: &str, value: f64) -> Result<(), CliError> {
        match path {
            "atom.m_bar_kg" => self.atom.m_bar_kg = value,
            "atom.omega_A_rad_s" => self.atom.omega_a_rad_s = Some(value),
            "atom.z0_m" => self.atom.z0_m = value,
            "atom.v0_m_s" => self.atom.v0_m_s = value,
            "atom.v_res_m_s" => self.atom.v_res_m_s = value,
            "lasers.K_rad_m" => self.lasers.k_rad_m = value,
            "lasers.sigma_m_s2" => self.lasers.sigma_m_s2 = value,
            "lasers.L_m" => self.lasers.l_m = value,
            "lasers.phi_off_rad" => self.lasers.phi_off_rad = value,
            "gravity.g_m_s2" => self.gravity.g_m_s2 = value,
            "geometry.T_s" => {
                if self.geometry.builtin.is_none() {
                    return Err(CliError::validation(
                        "geometry.T_s can only be swept for builtin geometries".into(),
                    ));
                }
                self.geometry.t_s = Some(value);
            }
            other => {
                return Err(CliError::validation(format!(
                    "unknown sweep parameter {other:?}; supported: atom.m_bar_kg, \
                     atom.omega_A_rad_s, atom.z0_m, atom.v0_m_s, atom.v_res_m_s, \
                     lasers.K_rad_m, lasers.sigma_m_s2, lasers.L_m, lasers.phi_off_rad, \
                     gravity.g_m_s2, geometry.T_s"
                )))
            }
        }
        // Frequency-side fields follow the swept primaries.
        self.lasers.delta_k_rad_m = None;
        if matches!(self.lasers.mechanism.as_str(), "spt" | "bragg") {
            self.atom.omega_a_rad_s = None;
        }
        Ok(())
    }
}

/// A validated scenario plus any non-fatal warnings.
pub struct BuiltScenario {
    pub scenario: Scenario,
    pub warnings: Vec<String>,
}
