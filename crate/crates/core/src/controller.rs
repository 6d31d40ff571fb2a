//! Energy-management policy: the fuel cell holds a constant output, the
//! battery absorbs surpluses and covers deficits, and a first-order low-pass
//! shields the stack from load ripple.

use serde::{Deserialize, Serialize};

use crate::error::{ensure_fraction, ensure_non_negative, ensure_positive, Error, Result};
use crate::powertrain::{battery_step, BatterySpec, BatteryState};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ControllerParams {
    /// Constant fuel-cell output, watts.
    pub fc_setpoint: f64,
    /// Oscillation-suppression time constant, seconds.
    pub filter_time_constant: f64,
    /// Charge power cap as a fraction of the battery's power rating.
    pub trickle_headroom: f64,
}

impl ControllerParams {
    pub fn with_setpoint(fc_setpoint: f64) -> Self {
        Self {
            fc_setpoint,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        ensure_non_negative("controller.fc_setpoint_w", self.fc_setpoint)?;
        ensure_positive(
            "controller.filter_time_constant_s",
            self.filter_time_constant,
        )?;
        ensure_fraction("controller.trickle_headroom", self.trickle_headroom)
    }
}

impl Default for ControllerParams {
    fn default() -> Self {
        Self {
            fc_setpoint: 45.0,
            filter_time_constant: 1.0,
            trickle_headroom: 1.0,
        }
    }
}

/// One dispatch step on the power bus.
///
/// `fc_output + battery_power - demand == curtailed - unmet` holds exactly
/// (bit-for-bit in that evaluation order), with at most one of `curtailed`
/// and `unmet` non-zero.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyFlow {
    #[serde(rename = "time_s", serialize_with = "crate::sigfig::serde6::f64")]
    pub time: f64,
    #[serde(rename = "demand_w", serialize_with = "crate::sigfig::serde6::f64")]
    pub demand: f64,
    #[serde(rename = "fc_output_w", serialize_with = "crate::sigfig::serde6::f64")]
    pub fc_output: f64,
    /// Positive when discharging.
    #[serde(
        rename = "battery_power_w",
        serialize_with = "crate::sigfig::serde6::f64"
    )]
    pub battery_power: f64,
    #[serde(rename = "unmet_w", serialize_with = "crate::sigfig::serde6::f64")]
    pub unmet: f64,
    #[serde(rename = "curtailed_w", serialize_with = "crate::sigfig::serde6::f64")]
    pub curtailed: f64,
}

/// Dispatches one step of `dt` seconds.
///
/// The fuel cell delivers `fc_setpoint`, or less if the remaining fuel
/// (bus-side watt-hours) cannot sustain it for the whole step. A surplus is
/// offered to the battery, capped by `trickle_headroom`, and anything left is
/// curtailed. A deficit is drawn from the battery and any shortfall is
/// reported as `unmet`. `time` is left at zero for the caller to stamp.
pub fn dispatch(
    demand: f64,
    params: &ControllerParams,
    spec: &BatterySpec,
    state: &BatteryState,
    fuel_remaining: f64,
    dt: f64,
) -> (EnergyFlow, BatteryState) {
    let fuel_limit = fuel_remaining.max(0.0) * 3600.0 / dt;
    let fc_output = params.fc_setpoint.min(fuel_limit).max(0.0);

    let (next, mut battery_power, battery_limited) = if demand < fc_output {
        let surplus = fc_output - demand;
        let request = surplus.min(params.trickle_headroom * spec.max_power_w());
        let (next, actual) = battery_step(spec, state, -request, dt);
        (next, actual, false)
    } else if demand > fc_output {
        let deficit = demand - fc_output;
        let (next, actual) = battery_step(spec, state, deficit, dt);
        (next, actual, actual < deficit)
    } else {
        (*state, 0.0, false)
    };

    // Rounding may leave a residual of a few ulps with the wrong sign; unless
    // the battery genuinely fell short, nudge its power so no spurious unmet
    // demand appears.
    let mut residual = fc_output + battery_power - demand;
    while residual < 0.0 && !battery_limited {
        battery_power = battery_power.next_up();
        residual = fc_output + battery_power - demand;
    }

    let flow = EnergyFlow {
        time: 0.0,
        demand,
        fc_output,
        battery_power,
        unmet: if residual < 0.0 { -residual } else { 0.0 },
        curtailed: if residual > 0.0 { residual } else { 0.0 },
    };
    (flow, next)
}

/// First-order low-pass step: `y + dt / (tau + dt) · (u − y)`.
pub fn suppression_filter(previous_filtered: f64, commanded: f64, dt: f64, tau: f64) -> f64 {
    let alpha = dt / (tau + dt);
    previous_filtered + alpha * (commanded - previous_filtered)
}

/// Peak-to-peak ripple relative to the mean over the second half of the series.
pub fn measure_ripple(fc_output_series: &[f64]) -> Result<f64> {
    if fc_output_series.is_empty() {
        return Err(Error::validation("fc_output_series", "must not be empty"));
    }
    let window = &fc_output_series[fc_output_series.len() / 2..];
    let mean = window.iter().sum::<f64>() / window.len() as f64;
    if mean.is_nan() || mean <= 0.0 {
        return Err(Error::validation(
            "fc_output_series",
            format!("mean must be positive, got {mean}"),
        ));
    }
    let (lo, hi) = window
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| {
            (lo.min(x), hi.max(x))
        });
    Ok((hi - lo) / mean)
}
