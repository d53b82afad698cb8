//! Scenario configuration: a JSON document whose fields all default to the
//! 8-element L-band demonstrator (1.16 GHz carrier, 1 MHz modulation,
//! half-wavelength spacing, quarter-period windows).

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use tma_core::array::{synthesize_steering, ArrayConfig};
use tma_core::nonideal::{quantize_schedule, PhaseErrorModel};
use tma_core::waveform::ModulationSchedule;

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub carrier_hz: f64,
    pub mod_hz: f64,
    pub n_elements: usize,
    pub spacing_wavelengths: f64,
    pub tau_fraction: f64,
    pub phase_error_bound_deg: f64,
    pub clock_hz: Option<f64>,
    pub seed: u64,
    /// Keep the 0° state error-free when drawing phase errors.
    pub error_free_reference_state: bool,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            carrier_hz: 1.16e9,
            mod_hz: 1e6,
            n_elements: 8,
            spacing_wavelengths: 0.5,
            tau_fraction: 0.25,
            phase_error_bound_deg: 0.0,
            clock_hz: None,
            seed: 0,
            error_free_reference_state: false,
        }
    }
}

impl ScenarioConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        serde_json::from_str(&text)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |msg: String| Err(CliError::Config(msg));
        if !(self.carrier_hz.is_finite() && self.carrier_hz > 0.0) {
            return bad(format!("carrier_hz {} must be positive", self.carrier_hz));
        }
        if !(self.mod_hz.is_finite() && self.mod_hz > 0.0 && self.mod_hz < self.carrier_hz) {
            return bad(format!(
                "mod_hz {} must be positive and below carrier_hz",
                self.mod_hz
            ));
        }
        if self.n_elements == 0 {
            return bad("n_elements must be at least 1".into());
        }
        if !(self.spacing_wavelengths.is_finite() && self.spacing_wavelengths > 0.0) {
            return bad(format!(
                "spacing_wavelengths {} must be positive",
                self.spacing_wavelengths
            ));
        }
        if !(self.tau_fraction > 0.0 && self.tau_fraction <= 0.25) {
            return bad(format!(
                "tau_fraction {} must lie in (0, 0.25]",
                self.tau_fraction
            ));
        }
        if !(self.phase_error_bound_deg.is_finite() && self.phase_error_bound_deg >= 0.0) {
            return bad(format!(
                "phase_error_bound_deg {} must be non-negative",
                self.phase_error_bound_deg
            ));
        }
        if let Some(clock) = self.clock_hz {
            if !(clock.is_finite() && clock >= 8.0 * self.mod_hz) {
                return bad(format!("clock_hz {clock} must be at least 8 x mod_hz"));
            }
        }
        Ok(())
    }

    pub fn period(&self) -> f64 {
        1.0 / self.mod_hz
    }

    /// Steered schedules with this scenario's clock quantization and phase
    /// error draw applied.
    pub fn schedules(&self, steer_deg: f64) -> Result<Vec<ModulationSchedule>, CliError> {
        let period = self.period();
        let mut schedules = synthesize_steering(
            self.n_elements,
            self.spacing_wavelengths,
            period,
            self.tau_fraction * period,
            steer_deg,
        )?;
        if let Some(clock) = self.clock_hz {
            schedules = schedules
                .iter()
                .map(|s| quantize_schedule(s, 1.0 / clock))
                .collect::<Result<_, _>>()?;
        }
        if self.phase_error_bound_deg > 0.0 {
            let model = PhaseErrorModel::uniform(
                self.n_elements,
                self.phase_error_bound_deg,
                self.seed,
                self.error_free_reference_state,
            )?;
            schedules = model.apply(&schedules)?;
        }
        Ok(schedules)
    }

    pub fn array(&self, schedules: Vec<ModulationSchedule>) -> Result<ArrayConfig, CliError> {
        Ok(ArrayConfig::new(
            self.spacing_wavelengths,
            self.carrier_hz,
            schedules,
        )?)
    }
}
