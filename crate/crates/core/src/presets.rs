//! Built-in supply configurations for a 7.8 kg humanoid whose stock 1.2 kg
//! NiMH pack is replaced like-for-like.
//!
//! The two battery rows are evaluated at a 16 W average load and the two
//! fuel-cell rows at 45 W; each row reports its own load basis.

use crate::powertrain::BatterySpec;
use crate::report::ComparisonEntry;
use crate::simulator::HybridConfig;
use crate::sizing::{size_battery_only, size_direct_fc, size_hybrid, SizingInputs, SizingResult};

/// Mass of the stock battery pack, kilograms.
pub const PACK_MASS: f64 = 1.2;
/// Rated peak power of the robot, watts.
pub const PEAK_POWER: f64 = 250.0;
/// Always-on computer and sensor load, watts.
pub const BASE_LOAD: f64 = 40.0;
/// Average walking demand carried by the fuel cell, watts.
pub const FUEL_CELL_LOAD: f64 = 45.0;
/// Average load implied by the battery rows' run-times, watts.
pub const BATTERY_LOAD: f64 = 16.0;

fn battery_only(template: BatterySpec) -> HybridConfig {
    size_battery_only(&template, PACK_MASS, BATTERY_LOAD)
        .ok()
        .and_then(|r| r.config)
        .expect("built-in battery preset is valid")
}

pub fn nimh() -> HybridConfig {
    battery_only(BatterySpec::nimh(0.0))
}

pub fn li_ion() -> HybridConfig {
    battery_only(BatterySpec::li_ion(0.0))
}

/// 300 g stack, 900 g fuel, no battery.
pub fn direct_fc() -> HybridConfig {
    size_direct_fc(&SizingInputs::reference())
        .ok()
        .and_then(|r| r.config)
        .expect("built-in direct preset is valid")
}

/// 150 g stack, 135 g battery, 115 g electronics, 800 g fuel, 45 W setpoint.
pub fn hybrid() -> HybridConfig {
    size_hybrid(&SizingInputs::reference(), None)
        .ok()
        .and_then(|r| r.config)
        .expect("built-in hybrid preset is valid")
}

/// Looks a preset up by its CLI name.
pub fn by_name(name: &str) -> Option<HybridConfig> {
    match name {
        "nimh" => Some(nimh()),
        "li_ion" | "li-ion" => Some(li_ion()),
        "direct_fc" | "direct-fc" => Some(direct_fc()),
        "hybrid" => Some(hybrid()),
        _ => None,
    }
}

/// The four-way comparison in table order.
pub fn table1_entries() -> Vec<ComparisonEntry> {
    vec![
        ComparisonEntry::new("NiMH Battery", nimh(), BATTERY_LOAD, PEAK_POWER),
        ComparisonEntry::new("Li Ion Battery", li_ion(), BATTERY_LOAD, PEAK_POWER),
        ComparisonEntry::new("Fuel Cell", direct_fc(), FUEL_CELL_LOAD, PEAK_POWER),
        ComparisonEntry::new("Fuel Cell Hybrid", hybrid(), FUEL_CELL_LOAD, PEAK_POWER),
    ]
}

/// Sizing results behind the four comparison rows, in table order.
pub fn table1_sizing() -> Vec<SizingResult> {
    let reference = SizingInputs::reference();
    vec![
        size_battery_only(&BatterySpec::nimh(0.0), PACK_MASS, BATTERY_LOAD),
        size_battery_only(&BatterySpec::li_ion(0.0), PACK_MASS, BATTERY_LOAD),
        size_direct_fc(&reference),
        size_hybrid(&reference, None),
    ]
    .into_iter()
    .map(|r| r.expect("built-in presets are valid"))
    .collect()
}
