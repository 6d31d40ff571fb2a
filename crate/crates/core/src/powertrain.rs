//! Behavioral models of the hybrid supply's hardware: fuel-cell stack,
//! battery, fuel tank and power electronics.

use serde::{Deserialize, Serialize};

use crate::error::{ensure_fraction, ensure_non_negative, ensure_positive, Error, Result};

/// Lower-heating-value ideal cell voltage, volts.
pub const IDEAL_CELL_VOLTAGE: f64 = 1.23;
/// Long-life operating point, volts per cell.
pub const OPERATING_CELL_VOLTAGE: f64 = 0.8;
/// Stack power per kilogram: 45 W from a 150 g stack.
pub const STACK_SPECIFIC_POWER: f64 = 300.0;
/// Deliverable electrical energy per kilogram of hydride fuel.
pub const FUEL_SPECIFIC_ENERGY: f64 = 4950.0;
/// Power electronics allocation, kilograms.
pub const ELECTRONICS_MASS: f64 = 0.115;

pub const HOURS_PER_YEAR: f64 = 8760.0;
/// Stack life at the operating point: three years.
pub const REFERENCE_LIFE_H: f64 = 3.0 * HOURS_PER_YEAR;
/// Effective stress voltage of an unbuffered stack exposed to idle and
/// open-circuit excursions.
pub const STRESS_CELL_VOLTAGE: f64 = 0.95;
/// Stack life at [`STRESS_CELL_VOLTAGE`]: five days.
pub const STRESS_LIFE_H: f64 = 5.0 * 24.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FuelCellStackSpec {
    /// Maximum electrical output, watts.
    pub rated_power: f64,
    pub mass: f64,
    /// Per-cell operating voltage.
    pub cell_voltage: f64,
    pub ideal_voltage: f64,
    /// Watts per kilogram of stack.
    pub specific_power: f64,
}

impl FuelCellStackSpec {
    /// Stack whose rated power follows from its mass.
    pub fn from_mass(mass: f64, specific_power: f64, cell_voltage: f64) -> Result<Self> {
        let spec = Self {
            rated_power: mass * specific_power,
            mass,
            cell_voltage,
            ideal_voltage: IDEAL_CELL_VOLTAGE,
            specific_power,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// A massless, powerless stack for battery-only supplies.
    pub fn none() -> Self {
        Self {
            rated_power: 0.0,
            mass: 0.0,
            cell_voltage: OPERATING_CELL_VOLTAGE,
            ideal_voltage: IDEAL_CELL_VOLTAGE,
            specific_power: STACK_SPECIFIC_POWER,
        }
    }

    pub fn validate(&self) -> Result<()> {
        ensure_non_negative("fuel_cell.mass", self.mass)?;
        ensure_non_negative("fuel_cell.rated_power", self.rated_power)?;
        ensure_positive("fuel_cell.specific_power", self.specific_power)?;
        ensure_positive("fuel_cell.ideal_voltage", self.ideal_voltage)?;
        if !(self.cell_voltage > 0.0 && self.cell_voltage <= self.ideal_voltage) {
            return Err(Error::validation(
                "fuel_cell.cell_voltage",
                format!(
                    "must be in (0, {}], got {}",
                    self.ideal_voltage, self.cell_voltage
                ),
            ));
        }
        Ok(())
    }

    pub fn efficiency(&self) -> Result<f64> {
        fc_efficiency(self.cell_voltage, self.ideal_voltage)
    }
}

/// Stack efficiency as the ratio of operating to ideal cell voltage.
pub fn fc_efficiency(cell_voltage: f64, ideal_voltage: f64) -> Result<f64> {
    if !(ideal_voltage.is_finite() && ideal_voltage > 0.0) {
        return Err(Error::validation(
            "ideal_voltage",
            format!("must be > 0, got {ideal_voltage}"),
        ));
    }
    if !(cell_voltage > 0.0 && cell_voltage <= ideal_voltage) {
        return Err(Error::validation(
            "cell_voltage",
            format!("must be in (0, {ideal_voltage}], got {cell_voltage}"),
        ));
    }
    Ok(cell_voltage / ideal_voltage)
}

/// Exponential voltage-life law.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DegradationParams {
    /// Voltage at which the stack lasts `ref_life`.
    pub ref_voltage: f64,
    /// Hours.
    pub ref_life: f64,
    /// Natural-log life lost per volt above `ref_voltage`.
    pub slope: f64,
    /// Volts of effective stress added per unit of relative power ripple.
    pub ripple_gain: f64,
}

impl DegradationParams {
    /// Calibrates the slope from two (voltage, life) anchors.
    pub fn from_anchors(
        ref_voltage: f64,
        ref_life: f64,
        stress_voltage: f64,
        stress_life: f64,
        ripple_gain: f64,
    ) -> Result<Self> {
        ensure_positive("stress_life", stress_life)?;
        if stress_voltage <= ref_voltage {
            return Err(Error::validation(
                "stress_voltage",
                "must exceed the reference voltage",
            ));
        }
        let params = Self {
            ref_voltage,
            ref_life,
            slope: (ref_life / stress_life).ln() / (stress_voltage - ref_voltage),
            ripple_gain,
        };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        ensure_positive("degradation.ref_life", self.ref_life)?;
        ensure_positive("degradation.slope", self.slope)?;
        ensure_non_negative("degradation.ripple_gain", self.ripple_gain)?;
        if !self.ref_voltage.is_finite() {
            return Err(Error::validation(
                "degradation.ref_voltage",
                "must be finite",
            ));
        }
        Ok(())
    }
}

impl Default for DegradationParams {
    /// 0.8 V lasts three years, 0.95 V lasts five days (slope ≈ 35.93 V⁻¹).
    fn default() -> Self {
        Self::from_anchors(
            OPERATING_CELL_VOLTAGE,
            REFERENCE_LIFE_H,
            STRESS_CELL_VOLTAGE,
            STRESS_LIFE_H,
            0.15,
        )
        .expect("built-in anchors are valid")
    }
}

/// Stack life in hours at `cell_voltage` with the given relative power ripple.
///
/// Ripple raises the effective stress voltage by `ripple_gain` per unit.
pub fn fc_life(cell_voltage: f64, relative_ripple: f64, params: &DegradationParams) -> Result<f64> {
    params.validate()?;
    ensure_non_negative("relative_ripple", relative_ripple)?;
    if !cell_voltage.is_finite() {
        return Err(Error::validation("cell_voltage", "must be finite"));
    }
    let effective = cell_voltage + params.ripple_gain * relative_ripple;
    Ok(params.ref_life * (-params.slope * (effective - params.ref_voltage)).exp())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatterySpec {
    pub chemistry: String,
    pub mass: f64,
    /// Wh/kg.
    pub specific_energy: f64,
    /// W/kg, applies to both charge and discharge.
    pub specific_power: f64,
    pub charge_efficiency: f64,
    pub discharge_efficiency: f64,
    /// Equivalent full cycles to end of life.
    pub cycle_life: f64,
    pub soc_min: f64,
    pub soc_max: f64,
}

impl BatterySpec {
    /// Nanophosphate lithium-ion pack (APR18650-class cells).
    pub fn nanophosphate(mass: f64) -> Self {
        Self {
            chemistry: "nanophosphate".into(),
            mass,
            specific_energy: 90.0,
            specific_power: 1850.0,
            charge_efficiency: 0.95,
            discharge_efficiency: 0.95,
            cycle_life: 1000.0,
            soc_min: 0.1,
            soc_max: 1.0,
        }
    }

    /// Nickel-metal-hydride pack rated on nominal capacity.
    pub fn nimh(mass: f64) -> Self {
        Self {
            chemistry: "nimh".into(),
            mass,
            specific_energy: 40.0,
            specific_power: 250.0,
            charge_efficiency: 1.0,
            discharge_efficiency: 1.0,
            cycle_life: 1000.0,
            soc_min: 0.0,
            soc_max: 1.0,
        }
    }

    /// Conventional lithium-ion pack rated on nominal capacity.
    pub fn li_ion(mass: f64) -> Self {
        Self {
            chemistry: "li_ion".into(),
            mass,
            specific_energy: 120.0,
            specific_power: 500.0,
            charge_efficiency: 1.0,
            discharge_efficiency: 1.0,
            cycle_life: 1000.0,
            soc_min: 0.0,
            soc_max: 1.0,
        }
    }

    /// Placeholder for supplies without a battery.
    pub fn none() -> Self {
        Self {
            chemistry: "none".into(),
            ..Self::nanophosphate(0.0)
        }
    }

    pub fn with_mass(&self, mass: f64) -> Self {
        Self {
            mass,
            ..self.clone()
        }
    }

    pub fn capacity_wh(&self) -> f64 {
        self.mass * self.specific_energy
    }

    pub fn max_power_w(&self) -> f64 {
        self.mass * self.specific_power
    }

    /// Stored energy between `soc_min` and `soc_max`.
    pub fn usable_energy_wh(&self) -> f64 {
        (self.soc_max - self.soc_min) * self.capacity_wh()
    }

    pub fn validate(&self) -> Result<()> {
        ensure_non_negative("battery.mass", self.mass)?;
        ensure_non_negative("battery.specific_energy", self.specific_energy)?;
        ensure_non_negative("battery.specific_power", self.specific_power)?;
        ensure_fraction("battery.charge_efficiency", self.charge_efficiency)?;
        ensure_fraction("battery.discharge_efficiency", self.discharge_efficiency)?;
        ensure_positive("battery.cycle_life", self.cycle_life)?;
        if !(0.0 <= self.soc_min && self.soc_min < self.soc_max && self.soc_max <= 1.0) {
            return Err(Error::validation(
                "battery.soc_min/soc_max",
                format!(
                    "need 0 <= soc_min < soc_max <= 1, got {} and {}",
                    self.soc_min, self.soc_max
                ),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BatteryState {
    pub soc: f64,
    /// Cumulative terminal energy delivered, Wh.
    pub discharge_throughput: f64,
    /// Cumulative terminal energy absorbed, Wh.
    pub charge_throughput: f64,
}

impl BatteryState {
    pub fn at_soc(soc: f64) -> Self {
        Self {
            soc,
            discharge_throughput: 0.0,
            charge_throughput: 0.0,
        }
    }

    /// Fully charged (at `soc_max`) with no history.
    pub fn full(spec: &BatterySpec) -> Self {
        Self::at_soc(spec.soc_max)
    }

    pub fn stored_wh(&self, spec: &BatterySpec) -> f64 {
        self.soc * spec.capacity_wh()
    }
}

/// Advances the battery by `dt` seconds at a requested terminal power
/// (`+` discharge, `−` charge) and returns the new state with the power
/// actually delivered.
///
/// The request is clipped to the pack's power rating and then to whatever
/// keeps the state of charge inside `[soc_min, soc_max]`.
pub fn battery_step(
    spec: &BatterySpec,
    state: &BatteryState,
    terminal_power: f64,
    dt: f64,
) -> (BatteryState, f64) {
    let capacity = spec.capacity_wh();
    if capacity <= 0.0 || dt <= 0.0 || terminal_power == 0.0 || !terminal_power.is_finite() {
        return (*state, 0.0);
    }
    let hours = dt / 3600.0;
    let p_max = spec.max_power_w();
    let requested = terminal_power.clamp(-p_max, p_max);
    let mut next = *state;

    let actual = if requested > 0.0 {
        let eta = spec.discharge_efficiency;
        let available = ((state.soc - spec.soc_min) * capacity).max(0.0);
        let draw = requested * hours / eta;
        if draw >= available {
            if available > 0.0 {
                next.soc = spec.soc_min;
            }
            available * eta / hours
        } else {
            next.soc = ((state.soc * capacity - draw) / capacity).max(spec.soc_min);
            requested
        }
    } else {
        let eta = spec.charge_efficiency;
        let room = ((spec.soc_max - state.soc) * capacity).max(0.0);
        let gain = -requested * hours * eta;
        if gain >= room {
            if room > 0.0 {
                next.soc = spec.soc_max;
            }
            -room / (hours * eta)
        } else {
            next.soc = ((state.soc * capacity + gain) / capacity).min(spec.soc_max);
            requested
        }
    };

    if actual > 0.0 {
        next.discharge_throughput += actual * hours;
    } else if actual < 0.0 {
        next.charge_throughput += -actual * hours;
    }
    (next, actual)
}

/// Equivalent full cycles: discharge throughput over nominal capacity.
pub fn equivalent_full_cycles(spec: &BatterySpec, state: &BatteryState) -> Result<f64> {
    let capacity = spec.capacity_wh();
    if capacity <= 0.0 {
        return Err(Error::validation(
            "battery capacity",
            "must be > 0 to count cycles",
        ));
    }
    Ok(state.discharge_throughput / capacity)
}

/// Fraction of cycle life consumed.
pub fn battery_cycle_damage(spec: &BatterySpec, state: &BatteryState) -> Result<f64> {
    Ok(equivalent_full_cycles(spec, state)? / spec.cycle_life)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FuelTankSpec {
    pub fuel_mass: f64,
    /// Net deliverable electrical energy per kilogram of fuel, Wh/kg.
    pub specific_energy_electric: f64,
}

impl FuelTankSpec {
    pub fn new(fuel_mass: f64) -> Self {
        Self {
            fuel_mass,
            specific_energy_electric: FUEL_SPECIFIC_ENERGY,
        }
    }

    pub fn validate(&self) -> Result<()> {
        ensure_non_negative("fuel_tank.fuel_mass", self.fuel_mass)?;
        ensure_positive(
            "fuel_tank.specific_energy_electric",
            self.specific_energy_electric,
        )
    }
}

/// Deliverable electrical energy in the tank, Wh.
pub fn fuel_energy(tank: &FuelTankSpec) -> f64 {
    tank.fuel_mass * tank.specific_energy_electric
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ElectronicsSpec {
    pub mass: f64,
    /// Efficiency of the stack-to-bus converter.
    pub converter_efficiency: f64,
}

impl Default for ElectronicsSpec {
    fn default() -> Self {
        Self {
            mass: ELECTRONICS_MASS,
            converter_efficiency: 1.0,
        }
    }
}

impl ElectronicsSpec {
    pub fn validate(&self) -> Result<()> {
        ensure_non_negative("electronics.mass", self.mass)?;
        ensure_fraction(
            "electronics.converter_efficiency",
            self.converter_efficiency,
        )
    }
}
