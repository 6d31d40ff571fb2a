//! Closed-form component sizing under a mass budget, system-life estimates,
//! and the fuel-cell setpoint optimizer.

mod setpoint;

pub use setpoint::{
    evaluate_setpoint, optimize_setpoint, Constraint, SearchMethod, SetpointCandidate,
    SetpointOutcome, SetpointSearch,
};

use serde::{Deserialize, Serialize};

use crate::controller::ControllerParams;
use crate::error::{ensure_non_negative, ensure_positive, Error, Result};
use crate::powertrain::{
    fc_life, fuel_energy, BatterySpec, DegradationParams, ElectronicsSpec, FuelCellStackSpec,
    FuelTankSpec, ELECTRONICS_MASS, FUEL_SPECIFIC_ENERGY, OPERATING_CELL_VOLTAGE,
    STACK_SPECIFIC_POWER, STRESS_CELL_VOLTAGE,
};
use crate::profile::PowerProfile;
use crate::sigfig::fmt6;
use crate::simulator::{HybridConfig, Mode, SimulationResult};

/// Technology constants behind the sizing rules.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SizingConstants {
    pub stack_specific_power: f64,
    pub battery_specific_power: f64,
    pub battery_specific_energy: f64,
    pub fuel_specific_energy: f64,
    pub electronics_mass: f64,
    /// Direct-mode stack mass as a multiple of the steady-power stack.
    pub direct_stack_factor: f64,
    pub operating_cell_voltage: f64,
    /// Effective cell voltage of an unbuffered stack.
    pub direct_cell_voltage: f64,
    /// Stack and battery masses are rounded to this step, kilograms.
    pub mass_resolution: Option<f64>,
}

impl Default for SizingConstants {
    fn default() -> Self {
        Self {
            stack_specific_power: STACK_SPECIFIC_POWER,
            battery_specific_power: 1850.0,
            battery_specific_energy: 90.0,
            fuel_specific_energy: FUEL_SPECIFIC_ENERGY,
            electronics_mass: ELECTRONICS_MASS,
            direct_stack_factor: 2.0,
            operating_cell_voltage: OPERATING_CELL_VOLTAGE,
            direct_cell_voltage: STRESS_CELL_VOLTAGE,
            mass_resolution: Some(0.001),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SizingInputs {
    pub mass_budget: f64,
    /// Fuel-cell setpoint, watts.
    pub steady_power: f64,
    pub peak_power: f64,
    pub constants: SizingConstants,
}

impl SizingInputs {
    /// Like-for-like replacement of a 1.2 kg pack on a robot averaging 45 W
    /// with 250 W peaks.
    pub fn reference() -> Self {
        Self {
            mass_budget: 1.2,
            steady_power: 45.0,
            peak_power: 250.0,
            constants: SizingConstants::default(),
        }
    }

    pub fn with_steady_power(self, steady_power: f64) -> Self {
        Self {
            steady_power,
            ..self
        }
    }

    pub fn validate(&self) -> Result<()> {
        ensure_positive("mass_budget", self.mass_budget)?;
        ensure_non_negative("steady_power", self.steady_power)?;
        ensure_non_negative("peak_power", self.peak_power)?;
        if self.peak_power < self.steady_power {
            return Err(Error::validation(
                "peak_power",
                format!(
                    "must be >= steady_power ({} < {})",
                    self.peak_power, self.steady_power
                ),
            ));
        }
        let c = &self.constants;
        ensure_positive("stack_specific_power", c.stack_specific_power)?;
        ensure_positive("battery_specific_power", c.battery_specific_power)?;
        ensure_non_negative("battery_specific_energy", c.battery_specific_energy)?;
        ensure_positive("fuel_specific_energy", c.fuel_specific_energy)?;
        ensure_non_negative("electronics_mass", c.electronics_mass)?;
        ensure_positive("direct_stack_factor", c.direct_stack_factor)?;
        if let Some(res) = c.mass_resolution {
            ensure_positive("mass_resolution", res)?;
        }
        Ok(())
    }

    fn quantize(&self, mass: f64) -> f64 {
        match self.constants.mass_resolution {
            Some(res) => (mass / res).round() * res,
            None => mass,
        }
    }

    /// Rounds up to the mass grid, so a stack sized for a power still
    /// delivers it. Values within rounding noise of a grid point stay there.
    fn quantize_up(&self, mass: f64) -> f64 {
        match self.constants.mass_resolution {
            Some(res) => ((mass / res) - 1e-9).ceil() * res,
            None => mass,
        }
    }

    /// Budget left after `committed`, snapped to the mass grid when the
    /// budget itself lies on it.
    fn remainder(&self, committed: f64) -> f64 {
        match self.constants.mass_resolution {
            Some(res)
                if ((self.mass_budget / res).round() - self.mass_budget / res).abs() < 1e-9 =>
            {
                ((self.mass_budget - committed) / res).round() * res
            }
            _ => self.mass_budget - committed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SizingResult {
    pub mode: Mode,
    #[serde(
        rename = "stack_mass_kg",
        serialize_with = "crate::sigfig::serde6::f64"
    )]
    pub stack_mass: f64,
    #[serde(
        rename = "battery_mass_kg",
        serialize_with = "crate::sigfig::serde6::f64"
    )]
    pub battery_mass: f64,
    #[serde(rename = "fuel_mass_kg", serialize_with = "crate::sigfig::serde6::f64")]
    pub fuel_mass: f64,
    #[serde(
        rename = "electronics_mass_kg",
        serialize_with = "crate::sigfig::serde6::f64"
    )]
    pub electronics_mass: f64,
    #[serde(rename = "run_time_h", serialize_with = "crate::sigfig::serde6::f64")]
    pub run_time: f64,
    #[serde(
        rename = "system_life_h",
        serialize_with = "crate::sigfig::serde6::f64"
    )]
    pub system_life: f64,
    /// Fuel-basis (or cell-basis, for batteries) energy density, Wh/kg.
    #[serde(
        rename = "energy_density_wh_per_kg",
        serialize_with = "crate::sigfig::serde6::f64"
    )]
    pub energy_density: f64,
    /// Stored energy over total supply mass, Wh/kg.
    #[serde(
        rename = "system_energy_density_wh_per_kg",
        serialize_with = "crate::sigfig::serde6::f64"
    )]
    pub system_energy_density: f64,
    pub feasible: bool,
    #[serde(default)]
    pub warnings: Vec<String>,
    /// Plant realizing this sizing; not serialized.
    #[serde(skip)]
    pub config: Option<HybridConfig>,
}

impl SizingResult {
    pub fn total_mass(&self) -> f64 {
        self.stack_mass + self.battery_mass + self.fuel_mass + self.electronics_mass
    }
}

/// What a run did to the components, for life estimation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LifeUsage {
    /// Relative fuel-cell power ripple.
    pub ripple: f64,
    /// Equivalent full battery cycles per mission run.
    pub battery_cycles_per_run: f64,
}

impl Default for LifeUsage {
    /// Ripple-free stack, one full battery cycle per run.
    fn default() -> Self {
        Self {
            ripple: 0.0,
            battery_cycles_per_run: 1.0,
        }
    }
}

impl LifeUsage {
    pub fn from_simulation(result: &SimulationResult) -> Self {
        Self {
            ripple: result.ripple,
            battery_cycles_per_run: result.battery_cycles,
        }
    }
}

/// Hours of service before the first component wears out.
///
/// Batteries last `cycle_life` runs' worth of cycling; the stack follows the
/// exponential voltage-life law; a hybrid is limited by whichever goes first.
pub fn system_life(config: &HybridConfig, run_time_h: f64, usage: &LifeUsage) -> Result<f64> {
    let battery_horizon = || -> Result<f64> {
        ensure_positive("run_time", run_time_h)?;
        Ok(if usage.battery_cycles_per_run > 0.0 {
            config.battery.cycle_life * run_time_h / usage.battery_cycles_per_run
        } else {
            f64::INFINITY
        })
    };
    let stack = || fc_life(config.stack.cell_voltage, usage.ripple, &config.degradation);
    match config.mode {
        Mode::BatteryOnly => battery_horizon(),
        Mode::DirectFc => stack(),
        Mode::Hybrid => {
            let fc = stack()?;
            if config.battery.mass > 0.0 && run_time_h > 0.0 {
                Ok(fc.min(battery_horizon()?))
            } else {
                Ok(fc)
            }
        }
    }
}

fn nanophosphate(inputs: &SizingInputs, mass: f64) -> BatterySpec {
    BatterySpec {
        specific_energy: inputs.constants.battery_specific_energy,
        specific_power: inputs.constants.battery_specific_power,
        ..BatterySpec::nanophosphate(mass)
    }
}

/// Largest energy shortfall, Wh, the battery must cover when the fuel cell
/// holds `steady` under `profile` (maximum drawdown of the cumulative surplus).
pub fn worst_sustained_deficit(profile: &PowerProfile, steady: f64) -> f64 {
    let mut level = 0.0f64;
    let mut high = 0.0f64;
    let mut worst = 0.0f64;
    for w in profile.samples().windows(2) {
        level += (steady - w[0].power) * (w[1].time - w[0].time) / 3600.0;
        high = high.max(level);
        worst = worst.max(high - level);
    }
    worst
}

/// Sizes a hybrid supply: stack for the steady power, battery for the peak,
/// fixed electronics, and the remaining budget as fuel.
///
/// Overspending the budget yields `feasible = false` with a warning rather than
/// an error. With a `profile`, warns when the battery cannot cover its worst
/// sustained deficit.
pub fn size_hybrid(inputs: &SizingInputs, profile: Option<&PowerProfile>) -> Result<SizingResult> {
    inputs.validate()?;
    let c = &inputs.constants;
    let stack_mass = inputs.quantize_up(inputs.steady_power / c.stack_specific_power);
    let battery_mass = inputs.quantize(inputs.peak_power / c.battery_specific_power);
    let electronics_mass = c.electronics_mass;
    let committed = stack_mass + battery_mass + electronics_mass;
    let remainder = inputs.remainder(committed);

    let mut warnings = Vec::new();
    let feasible = remainder >= -1e-12;
    if !feasible {
        warnings.push(format!(
            "stack, battery and electronics need {} kg, exceeding the {} kg budget",
            fmt6(committed),
            fmt6(inputs.mass_budget)
        ));
    }
    let fuel_mass = remainder.max(0.0);

    let stack =
        FuelCellStackSpec::from_mass(stack_mass, c.stack_specific_power, c.operating_cell_voltage)?;
    let battery = nanophosphate(inputs, battery_mass);
    let tank = FuelTankSpec {
        fuel_mass,
        specific_energy_electric: c.fuel_specific_energy,
    };
    let config = HybridConfig {
        mode: Mode::Hybrid,
        stack,
        battery,
        tank,
        electronics: ElectronicsSpec {
            mass: electronics_mass,
            converter_efficiency: 1.0,
        },
        controller: ControllerParams::with_setpoint(inputs.steady_power),
        degradation: DegradationParams::default(),
    };

    if stack.rated_power + config.battery.max_power_w() < inputs.peak_power * (1.0 - 1e-9) {
        warnings.push(format!(
            "stack plus battery deliver {} W, below the {} W peak",
            fmt6(stack.rated_power + config.battery.max_power_w()),
            fmt6(inputs.peak_power)
        ));
    }
    if let Some(profile) = profile {
        let deficit = worst_sustained_deficit(profile, inputs.steady_power);
        let reserve = config.battery.usable_energy_wh() * config.battery.discharge_efficiency;
        if deficit > reserve {
            warnings.push(format!(
                "worst sustained deficit {} Wh exceeds usable battery energy {} Wh",
                fmt6(deficit),
                fmt6(reserve)
            ));
        }
    }

    let run_time = if inputs.steady_power > 0.0 {
        fuel_energy(&tank) / inputs.steady_power
    } else {
        warnings.push("zero steady power: the fuel cell never runs".into());
        0.0
    };
    let system_life = if run_time > 0.0 {
        system_life(&config, run_time, &LifeUsage::default())?
    } else {
        0.0
    };
    Ok(SizingResult {
        mode: Mode::Hybrid,
        stack_mass,
        battery_mass,
        fuel_mass,
        electronics_mass,
        run_time,
        system_life,
        energy_density: c.fuel_specific_energy,
        system_energy_density: fuel_energy(&tank) / inputs.mass_budget,
        feasible,
        warnings,
        config: Some(config),
    })
}

/// Sizes an unbuffered fuel-cell supply: an oversized stack (see
/// `direct_stack_factor`) and the rest of the budget as fuel, no battery or
/// electronics allocation. Warns when the stack cannot reach the peak.
pub fn size_direct_fc(inputs: &SizingInputs) -> Result<SizingResult> {
    inputs.validate()?;
    let c = &inputs.constants;
    let stack_mass =
        inputs.quantize_up(c.direct_stack_factor * inputs.steady_power / c.stack_specific_power);
    let remainder = inputs.remainder(stack_mass);
    let mut warnings = Vec::new();
    let feasible = remainder >= -1e-12;
    if !feasible {
        warnings.push(format!(
            "stack needs {} kg, exceeding the {} kg budget",
            fmt6(stack_mass),
            fmt6(inputs.mass_budget)
        ));
    }
    let fuel_mass = remainder.max(0.0);
    let stack =
        FuelCellStackSpec::from_mass(stack_mass, c.stack_specific_power, c.direct_cell_voltage)?;
    if stack.rated_power < inputs.peak_power * (1.0 - 1e-9) {
        warnings.push(format!(
            "stack delivers at most {} W, below the {} W peak",
            fmt6(stack.rated_power),
            fmt6(inputs.peak_power)
        ));
    }
    let tank = FuelTankSpec {
        fuel_mass,
        specific_energy_electric: c.fuel_specific_energy,
    };
    let config = HybridConfig {
        mode: Mode::DirectFc,
        stack,
        battery: BatterySpec::none(),
        tank,
        electronics: ElectronicsSpec {
            mass: 0.0,
            converter_efficiency: 1.0,
        },
        controller: ControllerParams::with_setpoint(stack.rated_power),
        degradation: DegradationParams::default(),
    };
    let run_time = if inputs.steady_power > 0.0 {
        fuel_energy(&tank) / inputs.steady_power
    } else {
        0.0
    };
    Ok(SizingResult {
        mode: Mode::DirectFc,
        stack_mass,
        battery_mass: 0.0,
        fuel_mass,
        electronics_mass: 0.0,
        run_time,
        system_life: system_life(&config, run_time, &LifeUsage::default())?,
        energy_density: c.fuel_specific_energy,
        system_energy_density: fuel_energy(&tank) / inputs.mass_budget,
        feasible,
        warnings,
        config: Some(config),
    })
}

/// Spends the whole budget on `template`'s chemistry. Run-time counts the
/// pack's nominal capacity; life is `cycle_life` runs.
pub fn size_battery_only(
    template: &BatterySpec,
    mass_budget: f64,
    average_load: f64,
) -> Result<SizingResult> {
    ensure_positive("mass_budget", mass_budget)?;
    ensure_positive("average_load", average_load)?;
    let battery = template.with_mass(mass_budget);
    battery.validate()?;
    let run_time = battery.capacity_wh() / average_load;
    let config = HybridConfig {
        mode: Mode::BatteryOnly,
        stack: FuelCellStackSpec::none(),
        battery: battery.clone(),
        tank: FuelTankSpec::new(0.0),
        electronics: ElectronicsSpec {
            mass: 0.0,
            converter_efficiency: 1.0,
        },
        controller: ControllerParams::with_setpoint(0.0),
        degradation: DegradationParams::default(),
    };
    let mut warnings = Vec::new();
    if battery.soc_min > 0.0 || battery.soc_max < 1.0 || battery.discharge_efficiency < 1.0 {
        warnings.push(
            "run-time counts nominal capacity; the pack's soc window and losses shorten it in simulation"
                .into(),
        );
    }
    Ok(SizingResult {
        mode: Mode::BatteryOnly,
        stack_mass: 0.0,
        battery_mass: mass_budget,
        fuel_mass: 0.0,
        electronics_mass: 0.0,
        run_time,
        system_life: system_life(&config, run_time, &LifeUsage::default())?,
        energy_density: battery.specific_energy,
        system_energy_density: battery.specific_energy,
        feasible: true,
        warnings,
        config: Some(config),
    })
}
