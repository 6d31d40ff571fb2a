//! TOML configuration files.
//!
//! A file names a `mode` and optionally a `label`, then overrides any subset
//! of the built-in plant for that mode:
//!
//! ```toml
//! label = "bigger tank"
//! mode = "hybrid"
//!
//! [fuel_tank]
//! fuel_mass = 0.9
//!
//! [controller]
//! fc_setpoint_w = 44.0
//! ```
//!
//! Unknown keys are rejected so that typos surface as parse errors.

use std::path::Path;

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::powertrain::BatterySpec;
use crate::presets;
use crate::simulator::{HybridConfig, Mode, SimOptions};
use crate::sizing::{SizingConstants, SizingInputs};

use super::ComparisonEntry;

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FuelCellSection {
    pub mass: Option<f64>,
    pub rated_power: Option<f64>,
    pub cell_voltage: Option<f64>,
    pub ideal_voltage: Option<f64>,
    pub specific_power: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BatterySection {
    /// `nanophosphate`, `nimh` or `li_ion`; starts from that chemistry's defaults.
    pub chemistry: Option<String>,
    pub mass: Option<f64>,
    pub specific_energy: Option<f64>,
    pub specific_power: Option<f64>,
    pub charge_efficiency: Option<f64>,
    pub discharge_efficiency: Option<f64>,
    pub cycle_life: Option<f64>,
    pub soc_min: Option<f64>,
    pub soc_max: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FuelTankSection {
    pub fuel_mass: Option<f64>,
    pub specific_energy_electric: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ElectronicsSection {
    pub mass: Option<f64>,
    pub converter_efficiency: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DegradationSection {
    pub ref_voltage: Option<f64>,
    pub ref_life: Option<f64>,
    pub slope: Option<f64>,
    pub ripple_gain: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ControllerSection {
    pub fc_setpoint_w: Option<f64>,
    pub filter_time_constant_s: Option<f64>,
    pub trickle_headroom: Option<f64>,
}

/// Load the comparison run-time is measured at and the peak it must cover.
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MissionSection {
    pub load_basis_w: Option<f64>,
    pub peak_power_w: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SizingSection {
    pub mass_budget_kg: Option<f64>,
    pub steady_power_w: Option<f64>,
    pub peak_power_w: Option<f64>,
    /// Lower bound on system life for the setpoint search, hours.
    pub life_floor_h: Option<f64>,
    pub stack_specific_power: Option<f64>,
    pub battery_specific_power: Option<f64>,
    pub battery_specific_energy: Option<f64>,
    pub fuel_specific_energy: Option<f64>,
    pub electronics_mass: Option<f64>,
    pub direct_stack_factor: Option<f64>,
    pub operating_cell_voltage: Option<f64>,
    pub direct_cell_voltage: Option<f64>,
    /// Mass rounding step in kilograms; 0 disables rounding.
    pub mass_resolution: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationSection {
    pub dt_s: Option<f64>,
    #[serde(rename = "loop")]
    pub loop_profile: Option<bool>,
    pub max_duration_h: Option<f64>,
    pub unmet_grace_s: Option<f64>,
    pub unmet_tolerance: Option<f64>,
    pub initial_soc: Option<f64>,
    pub flow_decimation: Option<usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub label: Option<String>,
    pub mode: Option<Mode>,
    #[serde(default)]
    pub fuel_cell: FuelCellSection,
    #[serde(default)]
    pub battery: BatterySection,
    #[serde(default)]
    pub fuel_tank: FuelTankSection,
    #[serde(default)]
    pub electronics: ElectronicsSection,
    #[serde(default)]
    pub degradation: DegradationSection,
    #[serde(default)]
    pub controller: ControllerSection,
    #[serde(default)]
    pub mission: MissionSection,
    #[serde(default)]
    pub sizing: SizingSection,
    #[serde(default)]
    pub simulation: SimulationSection,
}

fn set<T: Copy>(target: &mut T, value: Option<T>) {
    if let Some(v) = value {
        *target = v;
    }
}

fn battery_template(chemistry: &str, mass: f64) -> Result<BatterySpec> {
    match chemistry {
        "nanophosphate" => Ok(BatterySpec::nanophosphate(mass)),
        "nimh" => Ok(BatterySpec::nimh(mass)),
        "li_ion" | "li-ion" => Ok(BatterySpec::li_ion(mass)),
        other => Err(Error::validation(
            "battery.chemistry",
            format!("unknown chemistry `{other}` (expected nanophosphate, nimh or li_ion)"),
        )),
    }
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| {
            let line = e
                .span()
                .map(|span| text[..span.start.min(text.len())].matches('\n').count() + 1)
                .unwrap_or(0);
            Error::Parse {
                line,
                message: e.message().to_string(),
            }
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn mode(&self) -> Mode {
        self.mode.unwrap_or(Mode::Hybrid)
    }

    /// The preset for the file's mode with every given key applied.
    pub fn hybrid_config(&self) -> Result<HybridConfig> {
        let mode = self.mode();
        let mut config = match mode {
            Mode::Hybrid => presets::hybrid(),
            Mode::DirectFc => presets::direct_fc(),
            Mode::BatteryOnly => match self.battery.chemistry.as_deref() {
                Some("nimh") => presets::nimh(),
                _ => presets::li_ion(),
            },
        };

        let fc = &self.fuel_cell;
        let stack = &mut config.stack;
        set(&mut stack.cell_voltage, fc.cell_voltage);
        set(&mut stack.ideal_voltage, fc.ideal_voltage);
        set(&mut stack.specific_power, fc.specific_power);
        match (fc.mass, fc.rated_power) {
            (Some(_), Some(_)) => {
                return Err(Error::validation(
                    "fuel_cell",
                    "give either mass or rated_power, not both",
                ))
            }
            (Some(mass), None) => stack.mass = mass,
            (None, Some(rated)) => stack.mass = rated / stack.specific_power,
            (None, None) => {}
        }
        stack.rated_power = stack.mass * stack.specific_power;

        let b = &self.battery;
        if let Some(chemistry) = b.chemistry.as_deref() {
            if chemistry != config.battery.chemistry {
                config.battery = battery_template(chemistry, config.battery.mass)?;
            }
        }
        let battery = &mut config.battery;
        set(&mut battery.mass, b.mass);
        set(&mut battery.specific_energy, b.specific_energy);
        set(&mut battery.specific_power, b.specific_power);
        set(&mut battery.charge_efficiency, b.charge_efficiency);
        set(&mut battery.discharge_efficiency, b.discharge_efficiency);
        set(&mut battery.cycle_life, b.cycle_life);
        set(&mut battery.soc_min, b.soc_min);
        set(&mut battery.soc_max, b.soc_max);

        set(&mut config.tank.fuel_mass, self.fuel_tank.fuel_mass);
        set(
            &mut config.tank.specific_energy_electric,
            self.fuel_tank.specific_energy_electric,
        );
        set(&mut config.electronics.mass, self.electronics.mass);
        set(
            &mut config.electronics.converter_efficiency,
            self.electronics.converter_efficiency,
        );

        let d = &self.degradation;
        set(&mut config.degradation.ref_voltage, d.ref_voltage);
        set(&mut config.degradation.ref_life, d.ref_life);
        set(&mut config.degradation.slope, d.slope);
        set(&mut config.degradation.ripple_gain, d.ripple_gain);

        let c = &self.controller;
        set(&mut config.controller.fc_setpoint, c.fc_setpoint_w);
        set(
            &mut config.controller.filter_time_constant,
            c.filter_time_constant_s,
        );
        set(&mut config.controller.trickle_headroom, c.trickle_headroom);

        config.validate()?;
        Ok(config)
    }

    pub fn sizing_inputs(&self) -> Result<SizingInputs> {
        let s = &self.sizing;
        let mut inputs = SizingInputs::reference();
        set(&mut inputs.mass_budget, s.mass_budget_kg);
        set(&mut inputs.steady_power, s.steady_power_w);
        set(&mut inputs.peak_power, s.peak_power_w);
        let c: &mut SizingConstants = &mut inputs.constants;
        set(&mut c.stack_specific_power, s.stack_specific_power);
        set(&mut c.battery_specific_power, s.battery_specific_power);
        set(&mut c.battery_specific_energy, s.battery_specific_energy);
        set(&mut c.fuel_specific_energy, s.fuel_specific_energy);
        set(&mut c.electronics_mass, s.electronics_mass);
        set(&mut c.direct_stack_factor, s.direct_stack_factor);
        set(&mut c.operating_cell_voltage, s.operating_cell_voltage);
        set(&mut c.direct_cell_voltage, s.direct_cell_voltage);
        if let Some(res) = s.mass_resolution {
            c.mass_resolution = (res > 0.0).then_some(res);
        }
        inputs.validate()?;
        Ok(inputs)
    }

    pub fn life_floor(&self) -> f64 {
        self.sizing.life_floor_h.unwrap_or(0.0)
    }

    /// `base` with the `[simulation]` keys applied.
    pub fn sim_options(&self, base: SimOptions) -> SimOptions {
        let s = &self.simulation;
        let mut options = base;
        set(&mut options.dt, s.dt_s);
        set(&mut options.loop_profile, s.loop_profile);
        set(&mut options.max_duration_h, s.max_duration_h);
        set(&mut options.unmet_grace_s, s.unmet_grace_s);
        set(&mut options.unmet_tolerance, s.unmet_tolerance);
        set(&mut options.flow_decimation, s.flow_decimation);
        if s.initial_soc.is_some() {
            options.initial_soc = s.initial_soc;
        }
        options
    }

    /// A comparison entry; the load basis defaults to the mode's built-in one.
    pub fn comparison_entry(&self, fallback_label: &str) -> Result<ComparisonEntry> {
        let mode = self.mode();
        let default_load = match mode {
            Mode::BatteryOnly => presets::BATTERY_LOAD,
            _ => presets::FUEL_CELL_LOAD,
        };
        let label = self
            .label
            .clone()
            .unwrap_or_else(|| fallback_label.to_string());
        let config = self.hybrid_config().map_err(|e| match e {
            Error::Validation { field, reason } => Error::Validation {
                field: format!("{label}: {field}"),
                reason,
            },
            other => other,
        })?;
        Ok(ComparisonEntry::new(
            label,
            config,
            self.mission.load_basis_w.unwrap_or(default_load),
            self.mission.peak_power_w.unwrap_or(presets::PEAK_POWER),
        ))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_is_the_hybrid_preset() {
        let cfg = ConfigFile::parse("").unwrap();
        assert_eq!(cfg.hybrid_config().unwrap(), presets::hybrid());
        assert_eq!(cfg.sizing_inputs().unwrap(), SizingInputs::reference());
    }

    #[test]
    fn overrides_apply() {
        let cfg = ConfigFile::parse(
            "mode = \"hybrid\"\n[fuel_tank]\nfuel_mass = 0.9\n[controller]\nfc_setpoint_w = 44\n[fuel_cell]\nmass = 0.2\n",
        )
        .unwrap();
        let c = cfg.hybrid_config().unwrap();
        assert_eq!(c.tank.fuel_mass, 0.9);
        assert_eq!(c.controller.fc_setpoint, 44.0);
        assert!((c.stack.rated_power - 60.0).abs() < 1e-9);
    }

    #[test]
    fn battery_chemistry_selects_preset() {
        let cfg = ConfigFile::parse("mode = \"battery_only\"\n[battery]\nchemistry = \"nimh\"\n")
            .unwrap();
        assert_eq!(cfg.hybrid_config().unwrap(), presets::nimh());
        let bad = ConfigFile::parse("[battery]\nchemistry = \"lead\"\n").unwrap();
        assert!(matches!(bad.hybrid_config(), Err(Error::Validation { .. })));
    }

    #[test]
    fn unknown_key_reports_its_line() {
        match ConfigFile::parse("mode = \"hybrid\"\n\n[fuel_tank]\nfuel_mas = 1\n") {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 4),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn invalid_values_are_validation_errors() {
        let cfg = ConfigFile::parse("[battery]\nsoc_min = 1.5\n").unwrap();
        assert!(matches!(cfg.hybrid_config(), Err(Error::Validation { .. })));
        let cfg = ConfigFile::parse("[sizing]\nmass_budget_kg = -1\n").unwrap();
        assert!(matches!(cfg.sizing_inputs(), Err(Error::Validation { .. })));
    }

    #[test]
    fn entry_label_falls_back() {
        let cfg = ConfigFile::parse("mode = \"direct_fc\"\n").unwrap();
        let e = cfg.comparison_entry("file.toml").unwrap();
        assert_eq!(e.label, "file.toml");
        assert_eq!(e.load_basis, presets::FUEL_CELL_LOAD);
    }
}
