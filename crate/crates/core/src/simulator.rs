//! Time-stepping engine that marches a supply configuration through a
//! mission profile, plus the closed-form constant-load run-time used as its
//! oracle.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::controller::{dispatch, suppression_filter, ControllerParams, EnergyFlow};
use crate::error::{ensure_positive, Error, Result};
use crate::powertrain::{
    fc_life, fuel_energy, BatterySpec, BatteryState, DegradationParams, ElectronicsSpec,
    FuelCellStackSpec, FuelTankSpec,
};
use crate::profile::PowerProfile;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    /// Fuel cell at constant output with a battery for peaks.
    Hybrid,
    /// Fuel cell following the load directly, no battery.
    DirectFc,
    BatteryOnly,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Hybrid => "hybrid",
            Mode::DirectFc => "direct_fc",
            Mode::BatteryOnly => "battery_only",
        }
    }

    pub fn uses_fuel(self) -> bool {
        !matches!(self, Mode::BatteryOnly)
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "hybrid" => Ok(Mode::Hybrid),
            "direct_fc" | "direct-fc" => Ok(Mode::DirectFc),
            "battery_only" | "battery-only" => Ok(Mode::BatteryOnly),
            other => Err(Error::Usage(format!(
                "unknown mode `{other}` (expected hybrid, direct_fc or battery_only)"
            ))),
        }
    }
}

/// Complete plant description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HybridConfig {
    pub mode: Mode,
    pub stack: FuelCellStackSpec,
    pub battery: BatterySpec,
    pub tank: FuelTankSpec,
    pub electronics: ElectronicsSpec,
    pub controller: ControllerParams,
    pub degradation: DegradationParams,
}

impl HybridConfig {
    pub fn validate(&self) -> Result<()> {
        self.stack.validate()?;
        self.battery.validate()?;
        self.tank.validate()?;
        self.electronics.validate()?;
        self.controller.validate()?;
        self.degradation.validate()?;
        match self.mode {
            Mode::BatteryOnly if self.tank.fuel_mass != 0.0 || self.stack.mass != 0.0 => Err(
                Error::validation("mode", "battery_only requires zero stack and fuel mass"),
            ),
            Mode::DirectFc if self.battery.mass != 0.0 => Err(Error::validation(
                "mode",
                "direct_fc requires zero battery mass",
            )),
            _ => Ok(()),
        }
    }

    pub fn total_mass(&self) -> f64 {
        self.stack.mass + self.battery.mass + self.tank.fuel_mass + self.electronics.mass
    }

    /// Fuel energy available on the bus after conversion, Wh.
    pub fn bus_fuel_energy(&self) -> f64 {
        fuel_energy(&self.tank) * self.electronics.converter_efficiency
    }

    /// Largest instantaneous power the supply can put on the bus.
    pub fn max_power(&self) -> f64 {
        match self.mode {
            Mode::Hybrid => self.steady_fc_power() + self.battery.max_power_w(),
            Mode::DirectFc => self.stack.rated_power,
            Mode::BatteryOnly => self.battery.max_power_w(),
        }
    }

    /// Fuel-cell output the controller holds in hybrid mode.
    pub fn steady_fc_power(&self) -> f64 {
        self.controller.fc_setpoint.min(self.stack.rated_power)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    FuelExhausted,
    BatteryDepleted,
    /// The profile ran out, or the looping horizon was reached.
    ProfileEnded,
    UnmetDemand,
}

impl Termination {
    pub fn as_str(self) -> &'static str {
        match self {
            Termination::FuelExhausted => "fuel_exhausted",
            Termination::BatteryDepleted => "battery_depleted",
            Termination::ProfileEnded => "profile_ended",
            Termination::UnmetDemand => "unmet_demand",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimOptions {
    /// Step length, seconds.
    pub dt: f64,
    /// Repeat the profile until a termination condition.
    pub loop_profile: bool,
    /// Stop a looping run at this many hours.
    pub max_duration_h: f64,
    pub record_flows: bool,
    /// Keep every Nth step in the flow log.
    pub flow_decimation: usize,
    /// Continuous shortfall, seconds, before a run counts as failed.
    pub unmet_grace_s: f64,
    /// Shortfall below this fraction of demand does not count toward the grace window.
    pub unmet_tolerance: f64,
    /// Starting state of charge; `None` starts at `soc_max`.
    pub initial_soc: Option<f64>,
}

impl SimOptions {
    /// Gait-scale defaults: 10 ms steps, single pass.
    pub fn gait() -> Self {
        Self {
            dt: 0.01,
            ..Self::endurance()
        }
        .single_pass()
    }

    /// Endurance defaults: 1 s steps, looping.
    pub fn endurance() -> Self {
        Self {
            dt: 1.0,
            loop_profile: true,
            max_duration_h: 2000.0,
            record_flows: false,
            flow_decimation: 100,
            unmet_grace_s: 5.0,
            unmet_tolerance: 0.01,
            initial_soc: None,
        }
    }

    pub fn single_pass(mut self) -> Self {
        self.loop_profile = false;
        self
    }

    pub fn with_dt(mut self, dt: f64) -> Self {
        self.dt = dt;
        self
    }

    fn validate(&self) -> Result<()> {
        ensure_positive("dt", self.dt)?;
        ensure_positive("max_duration_h", self.max_duration_h)?;
        if self.flow_decimation == 0 {
            return Err(Error::validation("flow_decimation", "must be >= 1"));
        }
        Ok(())
    }
}

impl Default for SimOptions {
    fn default() -> Self {
        Self::endurance()
    }
}

/// Logged step with the battery's state of charge after the step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FlowRecord {
    #[serde(flatten)]
    pub flow: EnergyFlow,
    #[serde(serialize_with = "crate::sigfig::serde6::f64")]
    pub soc: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationResult {
    #[serde(rename = "run_time_h", serialize_with = "crate::sigfig::serde6::f64")]
    pub run_time: f64,
    pub termination: Termination,
    #[serde(
        rename = "fuel_consumed_kg",
        serialize_with = "crate::sigfig::serde6::f64"
    )]
    pub fuel_consumed: f64,
    /// Demand actually served.
    #[serde(
        rename = "energy_delivered_wh",
        serialize_with = "crate::sigfig::serde6::f64"
    )]
    pub energy_delivered: f64,
    /// Brownout energy before termination (the terminating shortfall excluded).
    #[serde(
        rename = "unmet_energy_wh",
        serialize_with = "crate::sigfig::serde6::f64"
    )]
    pub unmet_energy: f64,
    /// Equivalent full cycles.
    #[serde(serialize_with = "crate::sigfig::serde6::f64")]
    pub battery_cycles: f64,
    /// Fraction of stack life consumed.
    #[serde(serialize_with = "crate::sigfig::serde6::f64")]
    pub fc_damage: f64,
    #[serde(serialize_with = "crate::sigfig::serde6::f64")]
    pub ripple: f64,
    #[serde(
        rename = "fc_operating_h",
        serialize_with = "crate::sigfig::serde6::f64"
    )]
    pub fc_operating_hours: f64,
    /// Fuel energy drawn from the tank.
    #[serde(
        rename = "fuel_energy_wh",
        serialize_with = "crate::sigfig::serde6::f64"
    )]
    pub fuel_energy: f64,
    #[serde(
        rename = "conversion_loss_wh",
        serialize_with = "crate::sigfig::serde6::f64"
    )]
    pub conversion_loss: f64,
    /// Stored energy at start minus stored energy at end.
    #[serde(
        rename = "battery_release_wh",
        serialize_with = "crate::sigfig::serde6::f64"
    )]
    pub battery_release: f64,
    #[serde(
        rename = "battery_loss_wh",
        serialize_with = "crate::sigfig::serde6::f64"
    )]
    pub battery_loss: f64,
    #[serde(
        rename = "curtailed_energy_wh",
        serialize_with = "crate::sigfig::serde6::f64"
    )]
    pub curtailed_energy: f64,
    #[serde(serialize_with = "crate::sigfig::serde6::f64")]
    pub final_soc: f64,
    #[serde(serialize_with = "crate::sigfig::serde6::f64")]
    pub min_soc: f64,
    #[serde(serialize_with = "crate::sigfig::serde6::f64")]
    pub max_soc: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub flows: Vec<FlowRecord>,
}

impl SimulationResult {
    /// Sources minus sinks of the run's energy ledger, Wh. Zero up to rounding.
    pub fn energy_imbalance(&self) -> f64 {
        (self.fuel_energy + self.battery_release)
            - (self.energy_delivered
                + self.battery_loss
                + self.conversion_loss
                + self.curtailed_energy)
    }
}

/// Min/max/sum over fixed blocks of the fuel-cell output series, enough to
/// evaluate ripple over (approximately, to block granularity) the last half
/// of an arbitrarily long run.
struct RippleTracker {
    blocks: Vec<(f64, f64, f64, usize)>,
    len: usize,
}

impl RippleTracker {
    const BLOCK: usize = 256;

    fn new() -> Self {
        Self {
            blocks: Vec::new(),
            len: 0,
        }
    }

    fn push(&mut self, x: f64) {
        if self.len.is_multiple_of(Self::BLOCK) {
            self.blocks.push((x, x, 0.0, 0));
        }
        let b = self.blocks.last_mut().expect("block pushed above");
        b.0 = b.0.min(x);
        b.1 = b.1.max(x);
        b.2 += x;
        b.3 += 1;
        self.len += 1;
    }

    fn ripple(&self) -> f64 {
        if self.len == 0 {
            return 0.0;
        }
        let first = (self.len / 2) / Self::BLOCK;
        let (lo, hi, sum, n) = self.blocks[first..].iter().fold(
            (f64::INFINITY, f64::NEG_INFINITY, 0.0, 0usize),
            |(lo, hi, sum, n), b| (lo.min(b.0), hi.max(b.1), sum + b.2, n + b.3),
        );
        let mean = sum / n as f64;
        if mean > 0.0 {
            (hi - lo) / mean
        } else {
            0.0
        }
    }
}

/// Hold lookup with a forward-moving cursor; wraps when the profile loops.
struct DemandCursor<'a> {
    profile: &'a PowerProfile,
    index: usize,
}

impl<'a> DemandCursor<'a> {
    fn at(&mut self, t: f64) -> f64 {
        let samples = self.profile.samples();
        if t < samples[self.index].time {
            self.index = 0;
        }
        while self.index + 1 < samples.len() && samples[self.index + 1].time <= t {
            self.index += 1;
        }
        samples[self.index].power
    }
}

/// Runs `config` against `profile`.
///
/// Each step takes the held demand at the step's start, lets the controller
/// dispatch it, draws fuel for the fuel cell's output, and checks for
/// termination: a shortfall with both fuel and battery exhausted ends the run
/// immediately; any other shortfall above `unmet_tolerance` of demand that
/// persists for `unmet_grace_s` ends it as `UnmetDemand`, timed from the
/// shortfall's onset.
pub fn simulate(
    config: &HybridConfig,
    profile: &PowerProfile,
    options: &SimOptions,
) -> Result<SimulationResult> {
    config.validate()?;
    options.validate()?;
    let dt = options.dt;
    let duration = profile.duration();
    let spec = &config.battery;
    let eta_conv = config.electronics.converter_efficiency;
    let capacity = spec.capacity_wh();
    let tank_energy = fuel_energy(&config.tank);
    let horizon_s = options.max_duration_h * 3600.0;

    let mut battery = match options.initial_soc {
        Some(soc) => {
            if !(spec.soc_min..=spec.soc_max).contains(&soc) {
                return Err(Error::validation(
                    "initial_soc",
                    format!(
                        "must lie in [{}, {}], got {soc}",
                        spec.soc_min, spec.soc_max
                    ),
                ));
            }
            BatteryState::at_soc(soc)
        }
        None => BatteryState::full(spec),
    };
    let initial_stored = battery.stored_wh(spec);
    let battery_empty = |b: &BatteryState| capacity <= 0.0 || b.soc <= spec.soc_min;
    let battery_full = |b: &BatteryState| capacity <= 0.0 || b.soc >= spec.soc_max;

    let mut fuel_left = if config.mode.uses_fuel() {
        tank_energy
    } else {
        0.0
    };
    let mut cursor = DemandCursor { profile, index: 0 };
    let mut ripple = RippleTracker::new();
    let mut flows = Vec::new();

    let fc_command = |demand: f64, b: &BatteryState| -> f64 {
        match config.mode {
            Mode::Hybrid if battery_full(b) => config.controller.fc_setpoint.min(demand),
            Mode::Hybrid => config.controller.fc_setpoint,
            Mode::DirectFc => demand,
            Mode::BatteryOnly => 0.0,
        }
    };
    let mut filtered = fc_command(cursor.at(0.0), &battery);

    let mut fuel_bus_used = 0.0;
    let mut delivered = 0.0;
    let mut unmet_energy = 0.0;
    let mut battery_loss = 0.0;
    let mut curtailed = 0.0;
    let mut fc_hours = 0.0;
    let (mut min_soc, mut max_soc) = (battery.soc, battery.soc);
    let mut streak_start: Option<f64> = None;

    let mut k: u64 = 0;
    let (run_time, termination) = loop {
        let t = k as f64 * dt;
        if !options.loop_profile && t >= duration {
            break (duration, Termination::ProfileEnded);
        }
        if options.loop_profile && t >= horizon_s {
            break (t, Termination::ProfileEnded);
        }
        let step = if options.loop_profile {
            dt
        } else {
            dt.min(duration - t)
        };
        let hours = step / 3600.0;
        let phase = if options.loop_profile {
            t % duration
        } else {
            t
        };
        let demand = cursor.at(phase);

        let command = fc_command(demand, &battery);
        let fc_power = match config.mode {
            Mode::Hybrid => {
                filtered = suppression_filter(
                    filtered,
                    command,
                    step,
                    config.controller.filter_time_constant,
                );
                filtered.min(config.stack.rated_power)
            }
            Mode::DirectFc => command.min(config.stack.rated_power),
            Mode::BatteryOnly => 0.0,
        };
        let params = ControllerParams {
            fc_setpoint: fc_power,
            ..config.controller
        };
        let fuel_bus = fuel_left * eta_conv;
        let (mut flow, next) = dispatch(demand, &params, spec, &battery, fuel_bus, step);
        flow.time = t;

        let fuel_limited = flow.fc_output < fc_power;
        if fuel_limited {
            fuel_left = 0.0;
        } else {
            fuel_left = (fuel_left - flow.fc_output * hours / eta_conv).max(0.0);
        }
        if flow.fc_output > 0.0 {
            fc_hours += hours;
            fuel_bus_used += flow.fc_output * hours;
            if !fuel_limited {
                ripple.push(flow.fc_output);
            }
        }
        if flow.battery_power > 0.0 {
            battery_loss += flow.battery_power * hours * (1.0 / spec.discharge_efficiency - 1.0);
        } else if flow.battery_power < 0.0 {
            battery_loss += -flow.battery_power * hours * (1.0 - spec.charge_efficiency);
        }
        curtailed += flow.curtailed * hours;
        battery = next;
        min_soc = min_soc.min(battery.soc);
        max_soc = max_soc.max(battery.soc);

        let served = demand - flow.unmet;
        delivered += served * hours;
        let served_time = if demand > 0.0 {
            t + step * served / demand
        } else {
            t + step
        };

        if options.record_flows && k.is_multiple_of(options.flow_decimation as u64) {
            flows.push(FlowRecord {
                flow,
                soc: battery.soc,
            });
        }

        if flow.unmet > 0.0 {
            let fuel_dry = fuel_left * eta_conv * 3600.0 / dt < command || fuel_left <= 0.0;
            if fuel_dry && battery_empty(&battery) {
                let reason = if config.mode.uses_fuel() {
                    Termination::FuelExhausted
                } else {
                    Termination::BatteryDepleted
                };
                break (served_time, reason);
            }
        }
        unmet_energy += flow.unmet * hours;
        if flow.unmet > options.unmet_tolerance * demand {
            let onset = *streak_start.get_or_insert(t);
            if t + step - onset >= options.unmet_grace_s {
                break (onset, Termination::UnmetDemand);
            }
        } else {
            streak_start = None;
        }
        k += 1;
    };

    let fc_damage = if fc_hours > 0.0 {
        fc_hours
            / fc_life(
                config.stack.cell_voltage,
                ripple.ripple(),
                &config.degradation,
            )?
    } else {
        0.0
    };
    let battery_cycles = if capacity > 0.0 {
        battery.discharge_throughput / capacity
    } else {
        0.0
    };
    let fuel_tank_used = fuel_bus_used / eta_conv;
    Ok(SimulationResult {
        run_time: run_time / 3600.0,
        termination,
        fuel_consumed: fuel_tank_used / config.tank.specific_energy_electric,
        energy_delivered: delivered,
        unmet_energy,
        battery_cycles,
        fc_damage,
        ripple: ripple.ripple(),
        fc_operating_hours: fc_hours,
        fuel_energy: fuel_tank_used,
        conversion_loss: fuel_tank_used - fuel_bus_used,
        battery_release: initial_stored - battery.stored_wh(spec),
        battery_loss,
        curtailed_energy: curtailed,
        final_soc: battery.soc,
        min_soc,
        max_soc,
        flows,
    })
}

/// Closed-form endurance at a constant load.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConstantLoadRunTime {
    /// Total hours until the supply can no longer carry the load.
    pub run_time_h: f64,
    /// Hours the fuel lasts at the fuel cell's steady output.
    pub fuel_limited_h: f64,
    /// Hours the battery carries the load after the fuel is gone.
    pub bridge_h: f64,
    /// Whether the load is within the supply's steady deliverable power.
    pub sustainable: bool,
}

/// Analytic run-time at a constant `load`, starting from a full battery.
pub fn run_time_constant_load(config: &HybridConfig, load: f64) -> Result<ConstantLoadRunTime> {
    config.validate()?;
    ensure_positive("load", load)?;
    let bat = &config.battery;
    let usable = bat.usable_energy_wh() * bat.discharge_efficiency;
    let p_batt = bat.max_power_w();
    let fuel = config.bus_fuel_energy();
    let battery_alone = |energy: f64| if load <= p_batt { energy / load } else { 0.0 };

    let result = match config.mode {
        Mode::BatteryOnly => {
            let t = battery_alone(usable);
            ConstantLoadRunTime {
                run_time_h: t,
                fuel_limited_h: 0.0,
                bridge_h: t,
                sustainable: load <= p_batt,
            }
        }
        Mode::DirectFc => {
            let sustainable = load <= config.stack.rated_power;
            let t = if sustainable { fuel / load } else { 0.0 };
            ConstantLoadRunTime {
                run_time_h: t,
                fuel_limited_h: t,
                bridge_h: 0.0,
                sustainable,
            }
        }
        Mode::Hybrid => {
            let fc = config.steady_fc_power();
            if load <= fc {
                // The full battery refuses charge, so the stack follows the load.
                let bridge = battery_alone(usable);
                ConstantLoadRunTime {
                    run_time_h: fuel / load + bridge,
                    fuel_limited_h: fuel / load,
                    bridge_h: bridge,
                    sustainable: true,
                }
            } else {
                let deficit = load - fc;
                if deficit > p_batt || fc <= 0.0 {
                    let t = if fc <= 0.0 {
                        battery_alone(usable)
                    } else {
                        0.0
                    };
                    ConstantLoadRunTime {
                        run_time_h: t,
                        fuel_limited_h: 0.0,
                        bridge_h: t,
                        sustainable: false,
                    }
                } else {
                    let fuel_h = fuel / fc;
                    let battery_h = usable / deficit;
                    if battery_h <= fuel_h {
                        ConstantLoadRunTime {
                            run_time_h: battery_h,
                            fuel_limited_h: fuel_h,
                            bridge_h: 0.0,
                            sustainable: false,
                        }
                    } else {
                        let bridge = battery_alone(usable - deficit * fuel_h);
                        ConstantLoadRunTime {
                            run_time_h: fuel_h + bridge,
                            fuel_limited_h: fuel_h,
                            bridge_h: bridge,
                            sustainable: false,
                        }
                    }
                }
            }
        }
    };
    Ok(result)
}
