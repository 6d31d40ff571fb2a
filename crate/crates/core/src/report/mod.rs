//! Comparison tables and JSON/CSV emission for results.
//!
//! Every number is written with six significant digits and fields appear in
//! a fixed order, so identical inputs give byte-identical output.

pub mod config;

use std::fmt::Write as _;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{ensure_non_negative, Error, Result};
use crate::profile::{PowerProfile, ProfileStats};
use crate::sigfig::fmt6;
use crate::simulator::{simulate, HybridConfig, Mode, SimOptions, SimulationResult};
use crate::sizing::{system_life, LifeUsage, SizingResult};

/// Header of the comparison CSV.
pub const COMPARISON_HEADER: &str = "label,stack_mass_kg,fuel_mass_kg,energy_density_wh_per_kg,system_life_h,run_time_h,load_basis_w,feasible_at_peak";
pub const SIMULATION_HEADER: &str = "run_time_h,termination,fuel_consumed_kg,energy_delivered_wh,unmet_energy_wh,battery_cycles,fc_damage,ripple,fc_operating_h,fuel_energy_wh,conversion_loss_wh,battery_release_wh,battery_loss_wh,curtailed_energy_wh,final_soc,min_soc,max_soc";
pub const SIZING_HEADER: &str = "mode,stack_mass_kg,battery_mass_kg,fuel_mass_kg,electronics_mass_kg,run_time_h,system_life_h,energy_density_wh_per_kg,system_energy_density_wh_per_kg,feasible,warnings";
pub const FLOW_HEADER: &str = "time_s,demand_w,fc_output_w,battery_power_w,unmet_w,curtailed_w,soc";
pub const STATS_HEADER: &str =
    "average_power_w,peak_power_w,idle_fraction,duration_s,energy_wh,idle_threshold_w";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Json,
    Csv,
}

impl FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "json" => Ok(Format::Json),
            "csv" => Ok(Format::Csv),
            other => Err(Error::Usage(format!(
                "unsupported format `{other}` (expected json or csv)"
            ))),
        }
    }
}

/// One supply to compare, evaluated at a constant load.
#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonEntry {
    pub label: String,
    pub config: HybridConfig,
    /// Constant load the run-time is measured at, watts.
    pub load_basis: f64,
    /// Peak the supply must be able to deliver, watts.
    pub peak_power: f64,
}

impl ComparisonEntry {
    pub fn new(
        label: impl Into<String>,
        config: HybridConfig,
        load_basis: f64,
        peak_power: f64,
    ) -> Self {
        Self {
            label: label.into(),
            config,
            load_basis,
            peak_power,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub label: String,
    /// `None` for supplies without a fuel cell.
    #[serde(
        rename = "stack_mass_kg",
        default,
        skip_serializing_if = "Option::is_none",
        serialize_with = "crate::sigfig::serde6::opt_f64"
    )]
    pub stack_mass: Option<f64>,
    #[serde(
        rename = "fuel_mass_kg",
        default,
        skip_serializing_if = "Option::is_none",
        serialize_with = "crate::sigfig::serde6::opt_f64"
    )]
    pub fuel_mass: Option<f64>,
    #[serde(
        rename = "energy_density_wh_per_kg",
        serialize_with = "crate::sigfig::serde6::f64"
    )]
    pub energy_density: f64,
    #[serde(
        rename = "system_life_h",
        serialize_with = "crate::sigfig::serde6::f64"
    )]
    pub system_life: f64,
    #[serde(rename = "run_time_h", serialize_with = "crate::sigfig::serde6::f64")]
    pub run_time: f64,
    #[serde(rename = "load_basis_w", serialize_with = "crate::sigfig::serde6::f64")]
    pub load_basis: f64,
    pub feasible_at_peak: bool,
}

fn name_entry(label: &str, err: Error) -> Error {
    match err {
        Error::Validation { field, reason } => Error::Validation {
            field: format!("{label}: {field}"),
            reason,
        },
        other => other,
    }
}

/// Evaluates each entry: run-time from a looping constant-load simulation
/// (1 s steps), system life from that run's wear, and peak feasibility from
/// the supply's maximum bus power. Output order follows input order.
pub fn compare(entries: &[ComparisonEntry]) -> Result<Vec<ComparisonRow>> {
    if entries.is_empty() {
        return Err(Error::Usage(
            "compare needs at least one configuration".into(),
        ));
    }
    entries
        .iter()
        .map(|entry| compare_one(entry).map_err(|e| name_entry(&entry.label, e)))
        .collect()
}

fn compare_one(entry: &ComparisonEntry) -> Result<ComparisonRow> {
    let config = &entry.config;
    config.validate()?;
    ensure_non_negative("load_basis", entry.load_basis)?;
    ensure_non_negative("peak_power", entry.peak_power)?;
    let profile = PowerProfile::constant("load-basis", entry.load_basis, 3600.0)?;
    let sim = simulate(config, &profile, &SimOptions::endurance())?;
    let system_life = if sim.run_time > 0.0 {
        system_life(config, sim.run_time, &LifeUsage::from_simulation(&sim))?
    } else {
        0.0
    };
    let fuel_cell = config.mode != Mode::BatteryOnly;
    Ok(ComparisonRow {
        label: entry.label.clone(),
        stack_mass: fuel_cell.then_some(config.stack.mass),
        fuel_mass: fuel_cell.then_some(config.tank.fuel_mass),
        energy_density: if fuel_cell {
            config.tank.specific_energy_electric
        } else {
            config.battery.specific_energy
        },
        system_life,
        run_time: sim.run_time,
        load_basis: entry.load_basis,
        feasible_at_peak: config.max_power() >= entry.peak_power * (1.0 - 1e-9),
    })
}

fn json<T: Serialize + ?Sized>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report types serialize");
    s.push('\n');
    s
}

fn opt(x: Option<f64>) -> String {
    x.map(fmt6).unwrap_or_default()
}

/// Quotes a CSV field when it contains a separator, quote or newline.
fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

pub fn emit_comparison(rows: &[ComparisonRow], format: Format) -> String {
    match format {
        Format::Json => json(rows),
        Format::Csv => {
            let mut out = format!("{COMPARISON_HEADER}\n");
            for r in rows {
                let _ = writeln!(
                    out,
                    "{},{},{},{},{},{},{},{}",
                    csv_field(&r.label),
                    opt(r.stack_mass),
                    opt(r.fuel_mass),
                    fmt6(r.energy_density),
                    fmt6(r.system_life),
                    fmt6(r.run_time),
                    fmt6(r.load_basis),
                    r.feasible_at_peak
                );
            }
            out
        }
    }
}

/// Summary only; see [`emit_flow_series`] for the per-step log.
pub fn emit_simulation(result: &SimulationResult, format: Format) -> String {
    match format {
        Format::Json => json(result),
        Format::Csv => {
            let r = result;
            let values = [
                fmt6(r.run_time),
                r.termination.as_str().to_string(),
                fmt6(r.fuel_consumed),
                fmt6(r.energy_delivered),
                fmt6(r.unmet_energy),
                fmt6(r.battery_cycles),
                fmt6(r.fc_damage),
                fmt6(r.ripple),
                fmt6(r.fc_operating_hours),
                fmt6(r.fuel_energy),
                fmt6(r.conversion_loss),
                fmt6(r.battery_release),
                fmt6(r.battery_loss),
                fmt6(r.curtailed_energy),
                fmt6(r.final_soc),
                fmt6(r.min_soc),
                fmt6(r.max_soc),
            ];
            format!("{SIMULATION_HEADER}\n{}\n", values.join(","))
        }
    }
}

/// Plot-ready time series: demand, fuel-cell output, battery power and soc.
pub fn emit_flow_series(result: &SimulationResult) -> String {
    let mut out = format!("{FLOW_HEADER}\n");
    for rec in &result.flows {
        let f = &rec.flow;
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            fmt6(f.time),
            fmt6(f.demand),
            fmt6(f.fc_output),
            fmt6(f.battery_power),
            fmt6(f.unmet),
            fmt6(f.curtailed),
            fmt6(rec.soc)
        );
    }
    out
}

pub fn emit_sizing(results: &[SizingResult], format: Format) -> String {
    match format {
        Format::Json if results.len() == 1 => json(&results[0]),
        Format::Json => json(results),
        Format::Csv => {
            let mut out = format!("{SIZING_HEADER}\n");
            for r in results {
                let _ = writeln!(
                    out,
                    "{},{},{},{},{},{},{},{},{},{},{}",
                    r.mode,
                    fmt6(r.stack_mass),
                    fmt6(r.battery_mass),
                    fmt6(r.fuel_mass),
                    fmt6(r.electronics_mass),
                    fmt6(r.run_time),
                    fmt6(r.system_life),
                    fmt6(r.energy_density),
                    fmt6(r.system_energy_density),
                    r.feasible,
                    csv_field(&r.warnings.join("; "))
                );
            }
            out
        }
    }
}

pub fn emit_stats(stats: &ProfileStats, format: Format) -> String {
    match format {
        Format::Json => json(stats),
        Format::Csv => format!(
            "{STATS_HEADER}\n{},{},{},{},{},{}\n",
            fmt6(stats.average_power),
            fmt6(stats.peak_power),
            fmt6(stats.idle_fraction),
            fmt6(stats.duration),
            fmt6(stats.energy),
            fmt6(stats.idle_threshold)
        ),
    }
}
