//! One-dimensional search for the fuel-cell setpoint.
//!
//! Each candidate setpoint is sized with [`size_hybrid`](super::size_hybrid)
//! and simulated over two passes of the mission profile, the second starting
//! where the first left the battery. A candidate is feasible when it serves
//! every watt of demand, does not drain the battery from pass to pass, fits
//! the mass budget and meets the life floor. Feasible candidates are scored
//! by fuel endurance; infeasible ones get a negative merit that shrinks
//! toward the feasible region, which keeps the merit unimodal for golden
//! section search.

use crate::error::{ensure_non_negative, ensure_positive, Error, Result};
use crate::powertrain::fuel_energy;
use crate::profile::PowerProfile;
use crate::simulator::{simulate, SimOptions};

use super::{size_hybrid, system_life, LifeUsage, SizingInputs, SizingResult};

const INV_PHI: f64 = 0.618_033_988_749_894_9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SetpointSearch {
    /// Simulation step, seconds.
    pub dt: f64,
    /// Final bracket width, watts.
    pub tolerance: f64,
    /// Step of the fallback grid sweep, watts.
    pub grid_step: f64,
    /// Allowed pass-to-pass battery drain relative to the pass's demand energy.
    pub drift_tolerance: f64,
}

impl Default for SetpointSearch {
    fn default() -> Self {
        Self {
            dt: 0.01,
            tolerance: 0.1,
            grid_step: 0.5,
            drift_tolerance: 1e-6,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Constraint {
    MassBudget,
    UnmetDemand,
    BatteryDrift,
    LifeFloor,
}

impl Constraint {
    pub fn as_str(self) -> &'static str {
        match self {
            Constraint::MassBudget => "mass_budget",
            Constraint::UnmetDemand => "unmet_demand",
            Constraint::BatteryDrift => "battery_drift",
            Constraint::LifeFloor => "life_floor",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SetpointCandidate {
    pub setpoint: f64,
    /// Fuel endurance at the steady-state fuel draw, hours.
    pub run_time_h: f64,
    pub system_life_h: f64,
    pub unmet_wh: f64,
    /// Battery energy lost over the second pass, Wh.
    pub drift_wh: f64,
    /// First violated constraint, if any.
    pub violation: Option<Constraint>,
    /// Run-time when feasible, negative penalty otherwise.
    pub merit: f64,
}

impl SetpointCandidate {
    pub fn feasible(&self) -> bool {
        self.violation.is_none()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SearchMethod {
    GoldenSection,
    /// The golden bracket turned out inconsistent and a grid sweep decided.
    GridFallback,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SetpointOutcome {
    pub best_setpoint: f64,
    pub sizing: SizingResult,
    pub best: SetpointCandidate,
    pub method: SearchMethod,
    /// Every candidate evaluated, in evaluation order.
    pub evaluations: Vec<SetpointCandidate>,
}

/// Scores one setpoint.
pub fn evaluate_setpoint(
    profile: &PowerProfile,
    inputs: &SizingInputs,
    setpoint: f64,
    life_floor: f64,
    search: &SetpointSearch,
) -> Result<SetpointCandidate> {
    let sizing = size_hybrid(&inputs.with_steady_power(setpoint), None)?;
    if !sizing.feasible {
        let committed = sizing.stack_mass + sizing.battery_mass + sizing.electronics_mass;
        let excess = (committed - inputs.mass_budget).max(0.0) / inputs.mass_budget;
        return Ok(SetpointCandidate {
            setpoint,
            run_time_h: 0.0,
            system_life_h: 0.0,
            unmet_wh: 0.0,
            drift_wh: 0.0,
            violation: Some(Constraint::MassBudget),
            merit: -(1.0 + excess),
        });
    }
    let config = sizing
        .config
        .as_ref()
        .expect("size_hybrid attaches its plant");
    let options = SimOptions::gait().with_dt(search.dt);
    let first = simulate(config, profile, &options)?;
    let second = simulate(
        config,
        profile,
        &SimOptions {
            initial_soc: Some(first.final_soc),
            ..options
        },
    )?;

    let duration_h = profile.duration() / 3600.0;
    let pass_energy = profile.energy_wh().max(f64::MIN_POSITIVE);
    let unmet_wh = first.unmet_energy + second.unmet_energy;
    let drift_wh = second.battery_release;
    let draw_rate = second.fuel_energy / duration_h;
    let run_time_h = if draw_rate > 0.0 {
        fuel_energy(&config.tank) / draw_rate
    } else {
        0.0
    };
    let usage = LifeUsage {
        ripple: second.ripple,
        battery_cycles_per_run: second.battery_cycles * run_time_h / duration_h,
    };
    let system_life_h = if run_time_h > 0.0 {
        system_life(config, run_time_h, &usage)?
    } else {
        0.0
    };

    let unmet_excess = unmet_wh / pass_energy;
    let drift_excess = (drift_wh / pass_energy - search.drift_tolerance).max(0.0);
    let life_excess = if system_life_h >= life_floor {
        0.0
    } else if life_floor.is_infinite() {
        1.0
    } else {
        (life_floor - system_life_h) / life_floor
    };
    let violation = if unmet_wh > 1e-9 {
        Some(Constraint::UnmetDemand)
    } else if drift_excess > 0.0 {
        Some(Constraint::BatteryDrift)
    } else if life_excess > 0.0 {
        Some(Constraint::LifeFloor)
    } else {
        None
    };
    let merit = match violation {
        None => run_time_h,
        Some(_) => -(1.0 + unmet_excess + drift_excess + life_excess),
    };
    Ok(SetpointCandidate {
        setpoint,
        run_time_h,
        system_life_h,
        unmet_wh,
        drift_wh,
        violation,
        merit,
    })
}

/// Finds the setpoint in `[0, peak_power]` with the longest fuel endurance
/// subject to zero unmet demand, no battery drift and `system_life >= life_floor`.
///
/// Golden-section search on the merit; ties go to the lower setpoint. If an
/// evaluation outside the final bracket beats everything inside it, the merit
/// is not unimodal and a grid sweep at `grid_step` decides instead. The
/// returned incumbent is always feasible.
pub fn optimize_setpoint(
    profile: &PowerProfile,
    inputs: &SizingInputs,
    life_floor: f64,
    search: &SetpointSearch,
) -> Result<SetpointOutcome> {
    inputs.validate()?;
    if life_floor.is_nan() || life_floor < 0.0 {
        return Err(Error::validation(
            "life_floor",
            format!("must be >= 0, got {life_floor}"),
        ));
    }
    ensure_positive("tolerance", search.tolerance)?;
    ensure_positive("grid_step", search.grid_step)?;
    ensure_non_negative("drift_tolerance", search.drift_tolerance)?;

    let mut evaluations: Vec<SetpointCandidate> = Vec::new();
    let eval = |s: f64, evals: &mut Vec<SetpointCandidate>| -> Result<f64> {
        if let Some(c) = evals.iter().find(|c| c.setpoint == s) {
            return Ok(c.merit);
        }
        let c = evaluate_setpoint(profile, inputs, s, life_floor, search)?;
        let merit = c.merit;
        evals.push(c);
        Ok(merit)
    };

    let (mut a, mut b) = (0.0, inputs.peak_power);
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = eval(c, &mut evaluations)?;
    let mut fd = eval(d, &mut evaluations)?;
    while b - a > search.tolerance {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = eval(c, &mut evaluations)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = eval(d, &mut evaluations)?;
        }
    }
    eval(a, &mut evaluations)?;
    eval(b, &mut evaluations)?;

    let inside_best = evaluations
        .iter()
        .filter(|e| e.setpoint >= a && e.setpoint <= b)
        .map(|e| e.merit)
        .fold(f64::NEG_INFINITY, f64::max);
    let consistent = evaluations
        .iter()
        .all(|e| (e.setpoint >= a && e.setpoint <= b) || e.merit <= inside_best);

    let mut method = SearchMethod::GoldenSection;
    if !consistent || !evaluations.iter().any(SetpointCandidate::feasible) {
        method = SearchMethod::GridFallback;
        let steps = (inputs.peak_power / search.grid_step).floor() as usize;
        for i in 0..=steps {
            eval(i as f64 * search.grid_step, &mut evaluations)?;
        }
        eval(inputs.peak_power, &mut evaluations)?;
    }

    let best = best_feasible(&evaluations).cloned().ok_or_else(|| {
        let closest = evaluations
            .iter()
            .max_by(|x, y| x.merit.total_cmp(&y.merit))
            .expect("at least two candidates were evaluated");
        let constraint = closest.violation.expect("no feasible candidate").as_str();
        Error::Infeasible {
            constraint: constraint.to_string(),
            detail: format!(
                "no setpoint in [0, {}] W satisfies it (life floor {} h)",
                inputs.peak_power, life_floor
            ),
        }
    })?;
    debug_assert!(best.system_life_h >= life_floor);
    let sizing = size_hybrid(&inputs.with_steady_power(best.setpoint), Some(profile))?;
    Ok(SetpointOutcome {
        best_setpoint: best.setpoint,
        sizing,
        best,
        method,
        evaluations,
    })
}

/// Highest merit among feasible candidates; ties go to the lowest setpoint.
pub(crate) fn best_feasible(candidates: &[SetpointCandidate]) -> Option<&SetpointCandidate> {
    candidates
        .iter()
        .filter(|c| c.feasible())
        .fold(None, |best, c| match best {
            Some(b) if b.merit > c.merit || (b.merit == c.merit && b.setpoint <= c.setpoint) => {
                Some(b)
            }
            _ => Some(c),
        })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::profile::{synthesize_walk_profile, GaitParams};

    fn search() -> SetpointSearch {
        SetpointSearch {
            dt: 0.05,
            ..SetpointSearch::default()
        }
    }

    #[test]
    fn constant_load_optimum_is_the_load() {
        let profile = PowerProfile::constant("c", 45.0, 60.0).unwrap();
        let out = optimize_setpoint(&profile, &SizingInputs::reference(), 0.0, &search()).unwrap();
        assert!(
            (out.best_setpoint - 45.0).abs() <= 0.1,
            "{}",
            out.best_setpoint
        );
        assert!(out.best.feasible());
    }

    #[test]
    fn unreachable_life_floor_is_infeasible() {
        let profile = PowerProfile::constant("c", 45.0, 60.0).unwrap();
        let err = optimize_setpoint(
            &profile,
            &SizingInputs::reference(),
            f64::INFINITY,
            &search(),
        )
        .unwrap_err();
        match err {
            Error::Infeasible { constraint, .. } => assert_eq!(constraint, "life_floor"),
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn below_average_setpoint_drains_battery() {
        let profile = synthesize_walk_profile(&GaitParams {
            duration: 20.0,
            ..GaitParams::default()
        })
        .unwrap();
        let c =
            evaluate_setpoint(&profile, &SizingInputs::reference(), 40.0, 0.0, &search()).unwrap();
        assert_eq!(c.violation, Some(Constraint::BatteryDrift));
        assert!(c.merit < 0.0);
    }

    #[test]
    fn tie_break_prefers_lower_setpoint() {
        let mk = |s: f64, m: f64| SetpointCandidate {
            setpoint: s,
            run_time_h: m,
            system_life_h: 1.0,
            unmet_wh: 0.0,
            drift_wh: 0.0,
            violation: None,
            merit: m,
        };
        let cands = [mk(46.0, 10.0), mk(45.0, 10.0), mk(50.0, 9.0)];
        assert_eq!(best_feasible(&cands).unwrap().setpoint, 45.0);
    }
}
