//! Browser bindings for the fchybrid simulator.
//!
//! Each exported function takes plain numbers and returns a JSON string, so
//! the page needs no generated TypeScript types. The `*_json` functions hold
//! the logic and are callable (and tested) natively.

use serde::Serialize;
use wasm_bindgen::prelude::*;

use fchybrid::presets;
use fchybrid::profile::{
    profile_stats, synthesize_walk_profile, GaitParams, ProfileStats, IDLE_MARGIN_W,
};
use fchybrid::report::{compare, ComparisonRow};
use fchybrid::simulator::{simulate, FlowRecord, SimOptions, SimulationResult};
use fchybrid::sizing::{size_hybrid, SizingInputs, SizingResult};
use fchybrid::Result;

/// Most points a plotted series carries back to the page.
const MAX_POINTS: usize = 2000;

#[derive(Serialize)]
struct WalkProfile {
    stats: ProfileStats,
    /// `[time_s, power_w]` pairs.
    samples: Vec<[f64; 2]>,
}

#[derive(Serialize)]
struct WalkSimulation {
    summary: SimulationResult,
    series: Vec<FlowRecord>,
}

#[derive(Serialize)]
struct Sizing {
    result: SizingResult,
    table: Vec<ComparisonRow>,
}

fn gait(base: f64, period: f64, duty: f64, mech_peak: f64, duration: f64) -> GaitParams {
    GaitParams {
        base_load: base,
        gait_period: period,
        stride_duty: duty,
        mech_peak,
        duration,
        ..GaitParams::default()
    }
}

fn to_json<T: Serialize>(value: &T) -> String {
    serde_json::to_string(value).expect("demo types serialize")
}

/// Walking-gait profile and its statistics.
pub fn walk_profile_json(
    base: f64,
    period: f64,
    duty: f64,
    mech_peak: f64,
    duration: f64,
) -> Result<String> {
    let profile = synthesize_walk_profile(&gait(base, period, duty, mech_peak, duration))?;
    let stats = profile_stats(&profile, base + IDLE_MARGIN_W);
    let samples = profile
        .samples()
        .iter()
        .map(|s| [s.time, s.power])
        .collect();
    Ok(to_json(&WalkProfile { stats, samples }))
}

/// The built-in hybrid plant walking the gait once at `setpoint` watts.
#[allow(clippy::too_many_arguments)]
pub fn simulate_walk_json(
    base: f64,
    period: f64,
    duty: f64,
    mech_peak: f64,
    duration: f64,
    setpoint: f64,
    filter_time_constant: f64,
    dt: f64,
) -> Result<String> {
    let profile = synthesize_walk_profile(&gait(base, period, duty, mech_peak, duration))?;
    let mut config = presets::hybrid();
    config.controller.fc_setpoint = setpoint;
    config.controller.filter_time_constant = filter_time_constant;
    let steps = (duration / dt).ceil().max(1.0) as usize;
    let options = SimOptions {
        record_flows: true,
        flow_decimation: steps.div_ceil(MAX_POINTS).max(1),
        ..SimOptions::gait().with_dt(dt)
    };
    let mut summary = simulate(&config, &profile, &options)?;
    let series = std::mem::take(&mut summary.flows);
    Ok(to_json(&WalkSimulation { summary, series }))
}

/// Hybrid sizing for a mass budget, plus the four-way comparison with that
/// hybrid in place of the built-in one.
pub fn size_json(mass_budget: f64, steady_power: f64, peak_power: f64) -> Result<String> {
    let inputs = SizingInputs {
        mass_budget,
        steady_power,
        peak_power,
        ..SizingInputs::reference()
    };
    let result = size_hybrid(&inputs, None)?;
    let mut entries = presets::table1_entries();
    if let (Some(hybrid), true) = (entries.last_mut(), result.feasible) {
        hybrid.config = result
            .config
            .clone()
            .expect("size_hybrid attaches its plant");
        hybrid.load_basis = steady_power;
        hybrid.peak_power = peak_power;
    }
    let table = compare(&entries)?;
    Ok(to_json(&Sizing { result, table }))
}

fn js(result: Result<String>) -> std::result::Result<String, JsError> {
    result.map_err(|e| JsError::new(&e.to_string()))
}

#[wasm_bindgen]
pub fn walk_profile(
    base: f64,
    period: f64,
    duty: f64,
    mech_peak: f64,
    duration: f64,
) -> std::result::Result<String, JsError> {
    js(walk_profile_json(base, period, duty, mech_peak, duration))
}

#[wasm_bindgen]
#[allow(clippy::too_many_arguments)]
pub fn simulate_walk(
    base: f64,
    period: f64,
    duty: f64,
    mech_peak: f64,
    duration: f64,
    setpoint: f64,
    filter_time_constant: f64,
    dt: f64,
) -> std::result::Result<String, JsError> {
    js(simulate_walk_json(
        base,
        period,
        duty,
        mech_peak,
        duration,
        setpoint,
        filter_time_constant,
        dt,
    ))
}

#[wasm_bindgen]
pub fn size(
    mass_budget: f64,
    steady_power: f64,
    peak_power: f64,
) -> std::result::Result<String, JsError> {
    js(size_json(mass_budget, steady_power, peak_power))
}
