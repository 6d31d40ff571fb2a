//! Acceptance checks. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use proptest::strategy::{Strategy, ValueTree};
use proptest::test_runner::TestRunner;
use rayon::prelude::*;

use fchybrid::controller::{dispatch, ControllerParams};
use fchybrid::powertrain::{fc_efficiency, fc_life, BatterySpec, BatteryState, DegradationParams};
use fchybrid::presets;
use fchybrid::profile::{synthesize_walk_profile, GaitParams, PowerProfile, Sample};
use fchybrid::report::{compare, ComparisonEntry};
use fchybrid::simulator::{run_time_constant_load, simulate, SimOptions};
use fchybrid::sizing::{evaluate_setpoint, optimize_setpoint, SetpointSearch, SizingInputs};

type Check = std::result::Result<String, String>;
type Criterion = (&'static str, fn() -> Check);

fn within(actual: f64, expected: f64, rel: f64) -> bool {
    (actual - expected).abs() <= rel * expected.abs()
}

fn sample<S: Strategy>(runner: &mut TestRunner, strategy: S) -> S::Value {
    strategy
        .new_tree(runner)
        .expect("strategy generates")
        .current()
}

fn table_reproduction() -> Check {
    let start = Instant::now();
    let output = Command::new(env!("CARGO_BIN_EXE_fchybrid"))
        .args(["compare", "--table1", "--format", "csv"])
        .output()
        .map_err(|e| format!("could not run the CLI: {e}"))?;
    let elapsed = start.elapsed();
    if !output.status.success() {
        return Err(format!("CLI exited with {}", output.status));
    }
    let text = String::from_utf8(output.stdout).map_err(|e| e.to_string())?;
    let rows: Vec<Vec<String>> = text
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect();
    if rows.len() != 4 {
        return Err(format!("expected 4 rows, got {}", rows.len()));
    }
    let year = 8760.0;
    // label, stack kg, fuel kg, run-time h, life h
    let expected = [
        ("NiMH Battery", "", "", 3.0, 0.3 * year),
        ("Li Ion Battery", "", "", 9.0, 1.0 * year),
        ("Fuel Cell", "0.3", "0.9", 99.0, 5.0 * 24.0),
        ("Fuel Cell Hybrid", "0.15", "0.8", 88.0, 3.0 * year),
    ];
    for (row, (label, stack, fuel, run_time, life)) in rows.iter().zip(expected) {
        let num = |i: usize| row[i].parse::<f64>().unwrap_or(f64::NAN);
        if row[0] != label || row[1] != stack || row[2] != fuel {
            return Err(format!("row {label}: masses {:?}", &row[..3]));
        }
        if !within(num(5), run_time, 0.01) {
            return Err(format!("{label}: run-time {} h vs {run_time} h", row[5]));
        }
        if !within(num(4), life, 0.15) {
            return Err(format!("{label}: life {} h vs {life} h", row[4]));
        }
    }
    if elapsed >= Duration::from_secs(5) {
        return Err(format!("took {elapsed:?}"));
    }
    Ok(format!(
        "4 rows match; {:.0} ms",
        elapsed.as_secs_f64() * 1e3
    ))
}

fn efficiency_anchor() -> Check {
    let eta = fc_efficiency(0.8, 1.23).map_err(|e| e.to_string())?;
    if (eta - 0.650).abs() <= 0.001 {
        Ok(format!("efficiency at 0.8 V = {eta:.4}"))
    } else {
        Err(format!("efficiency at 0.8 V = {eta}"))
    }
}

fn degradation_anchors() -> Check {
    let params = DegradationParams::default();
    let life = |v: f64| fc_life(v, 0.0, &params).map_err(|e| e.to_string());
    let (nominal, stressed) = (life(0.8)?, life(0.95)?);
    if !within(nominal, 26_280.0, 0.01) || !within(stressed, 120.0, 0.01) {
        return Err(format!("anchors {nominal} h, {stressed} h"));
    }
    let mut runner = TestRunner::deterministic();
    for _ in 0..5 {
        let (v1, v2) = sample(&mut runner, (0.5..1.1f64, 0.5..1.1f64));
        let lhs = (life(v1)? / life(v2)?).ln();
        let rhs = -params.slope * (v1 - v2);
        if (lhs - rhs).abs() > 1e-9 * rhs.abs().max(1.0) {
            return Err(format!("log-linearity at ({v1}, {v2}): {lhs} vs {rhs}"));
        }
    }
    Ok(format!(
        "{nominal:.0} h at 0.8 V, {stressed:.1} h at 0.95 V, 5 log-linear pairs"
    ))
}

fn oracle_equivalence() -> Check {
    let start = Instant::now();
    let configs = [
        ("nimh", presets::nimh()),
        ("li_ion", presets::li_ion()),
        ("direct_fc", presets::direct_fc()),
        ("hybrid", presets::hybrid()),
    ];
    let loads = [10.0, 16.0, 30.0, 45.0, 60.0];
    let cases: Vec<_> = configs
        .iter()
        .flat_map(|c| loads.iter().map(move |&l| (c, l)))
        .collect();
    let options = SimOptions::endurance();
    let failures: Vec<String> = cases
        .par_iter()
        .filter_map(|((name, config), load)| {
            let oracle = run_time_constant_load(config, *load).ok()?.run_time_h;
            let profile = PowerProfile::constant("c", *load, 3600.0).ok()?;
            let sim = simulate(config, &profile, &options).ok()?.run_time;
            let energy_gap = (sim - oracle).abs() * load;
            let one_step = load * options.dt / 3600.0;
            (energy_gap > one_step)
                .then(|| format!("{name} @ {load} W: simulated {sim} h, oracle {oracle} h"))
        })
        .collect();
    let elapsed = start.elapsed();
    if let Some(f) = failures.first() {
        return Err(f.clone());
    }
    if elapsed >= Duration::from_secs(30) {
        return Err(format!("took {elapsed:?}"));
    }
    Ok(format!(
        "{} runs within one step; {:.1} s",
        cases.len(),
        elapsed.as_secs_f64()
    ))
}

fn energy_closure() -> Check {
    let mut runner = TestRunner::deterministic();
    let gait = (
        20.0..60.0f64,
        0.5..2.0f64,
        0.05..0.95f64,
        0.0..40.0f64,
        0.3..0.9f64,
    );
    let cases: Vec<(GaitParams, f64)> = (0..100)
        .map(|_| {
            let (base_load, gait_period, stride_duty, mech_peak, servo_efficiency) =
                sample(&mut runner, gait.clone());
            let params = GaitParams {
                base_load,
                gait_period,
                stride_duty,
                mech_peak,
                servo_efficiency,
                duration: 3600.0,
                ..GaitParams::default()
            };
            let setpoint_scale = sample(&mut runner, 0.7..1.3f64);
            (params, setpoint_scale)
        })
        .collect();
    let options = SimOptions::gait();
    let failures: Vec<String> = cases
        .par_iter()
        .enumerate()
        .filter_map(|(i, (params, scale))| {
            let profile = synthesize_walk_profile(params).expect("valid gait");
            let mut config = presets::hybrid();
            config.controller.fc_setpoint = params.average_demand() * scale;
            let r = simulate(&config, &profile, &options).expect("valid run");
            let scale = r.fuel_energy + r.battery_release.abs() + r.energy_delivered;
            let rel = r.energy_imbalance().abs() / scale;
            let b = &config.battery;
            if rel > 1e-6 {
                Some(format!("run {i}: imbalance {rel:e}"))
            } else if r.min_soc < b.soc_min || r.max_soc > b.soc_max {
                Some(format!("run {i}: soc range [{}, {}]", r.min_soc, r.max_soc))
            } else {
                None
            }
        })
        .collect();
    match failures.first() {
        Some(f) => Err(f.clone()),
        None => Ok("100 one-hour gait runs at dt = 0.01 s close to 1e-6".into()),
    }
}

fn dispatch_properties() -> Check {
    let mut runner = TestRunner::deterministic();
    let spec = BatterySpec::nanophosphate(0.135);
    let p_max = spec.max_power_w();
    let mut state = BatteryState::at_soc(0.6);
    let mut unmet_events = 0;
    for i in 0..100_000 {
        let (demand, setpoint, fuel, dt) = sample(
            &mut runner,
            (0.0..250.0f64, 0.0..120.0f64, 0.0..0.05f64, 0.001..2.0f64),
        );
        let fuel = if i % 7 == 0 { 0.0 } else { fuel };
        let params = ControllerParams {
            fc_setpoint: setpoint,
            ..ControllerParams::default()
        };
        let (flow, next) = dispatch(demand, &params, &spec, &state, fuel, dt);
        let residual = flow.fc_output + flow.battery_power - demand;
        if residual != flow.curtailed - flow.unmet {
            return Err(format!(
                "step {i}: balance off by {}",
                residual - (flow.curtailed - flow.unmet)
            ));
        }
        if flow.unmet > 0.0 && flow.curtailed > 0.0 {
            return Err(format!("step {i}: unmet and curtailed at once"));
        }
        if flow.unmet > 0.0 {
            unmet_events += 1;
            let power_clip = flow.battery_power >= p_max;
            let soc_floor = next.soc <= spec.soc_min;
            if !(power_clip || soc_floor) {
                return Err(format!("step {i}: unmet {} W without a cause", flow.unmet));
            }
        }
        // Occasionally restart so the stream visits full, empty and mid states.
        state = if i % 1000 == 999 {
            BatteryState::at_soc(sample(&mut runner, 0.1..1.0f64))
        } else {
            next
        };
    }
    Ok(format!(
        "1e5 steps balanced; {unmet_events} unmet events all explained"
    ))
}

fn peak_infeasibility() -> Check {
    let config = presets::direct_fc();
    // 45 W baseline with a 0.5 s 250 W burst every 10 s, for one minute.
    let mut samples = Vec::new();
    for k in 0..6 {
        let t = k as f64 * 10.0;
        samples.push(Sample::new(t, 45.0));
        samples.push(Sample::new(t + 5.0, 250.0));
        samples.push(Sample::new(t + 5.5, 45.0));
    }
    samples.push(Sample::new(60.0, 45.0));
    let profile = PowerProfile::new("bursts", samples).map_err(|e| e.to_string())?;
    let sim = simulate(&config, &profile, &SimOptions::gait()).map_err(|e| e.to_string())?;
    let rows = compare(&[ComparisonEntry::new("direct", config, 45.0, 250.0)])
        .map_err(|e| e.to_string())?;
    if rows[0].feasible_at_peak {
        return Err("feasible_at_peak is true".into());
    }
    if sim.unmet_energy <= 0.0 {
        return Err("no unmet energy".into());
    }
    Ok(format!(
        "feasible_at_peak = false, unmet {:.4} Wh",
        sim.unmet_energy
    ))
}

fn setpoint_optimizer() -> Check {
    let inputs = SizingInputs::reference();
    let search = SetpointSearch::default();
    let constant = PowerProfile::constant("c", 45.0, 60.0).map_err(|e| e.to_string())?;
    let out = optimize_setpoint(&constant, &inputs, 0.0, &search).map_err(|e| e.to_string())?;
    if (out.best_setpoint - 45.0).abs() > 0.1 {
        return Err(format!("constant 45 W: best {} W", out.best_setpoint));
    }
    let gaits = [(40.0, 0.25, 10.0), (35.0, 0.5, 10.0), (42.0, 0.1, 15.0)];
    let mut report = format!("constant: {:.2} W", out.best_setpoint);
    for (base_load, stride_duty, mech_peak) in gaits {
        let profile = synthesize_walk_profile(&GaitParams {
            base_load,
            stride_duty,
            mech_peak,
            duration: 60.0,
            ..GaitParams::default()
        })
        .map_err(|e| e.to_string())?;
        let found = optimize_setpoint(&profile, &inputs, 0.0, &search)
            .map_err(|e| e.to_string())?
            .best_setpoint;
        let grid: Vec<_> = (0..=60)
            .into_par_iter()
            .map(|i| {
                evaluate_setpoint(&profile, &inputs, 30.0 + 0.5 * i as f64, 0.0, &search)
                    .expect("valid candidate")
            })
            .collect();
        let oracle = grid
            .iter()
            .filter(|c| c.feasible())
            .fold(
                None::<&fchybrid::sizing::SetpointCandidate>,
                |best, c| match best {
                    Some(b) if b.merit >= c.merit => Some(b),
                    _ => Some(c),
                },
            )
            .ok_or("grid found no feasible setpoint")?;
        if (found - oracle.setpoint).abs() > 0.5 {
            return Err(format!(
                "gait ({base_load}, {stride_duty}, {mech_peak}): optimizer {found} W, grid {} W",
                oracle.setpoint
            ));
        }
        report.push_str(&format!(
            ", gait {found:.2} W vs grid {} W",
            oracle.setpoint
        ));
    }
    Ok(report)
}

fn main() -> ExitCode {
    let criteria: [Criterion; 8] = [
        ("table reproduction", table_reproduction),
        ("efficiency anchor", efficiency_anchor),
        ("degradation anchors", degradation_anchors),
        ("oracle equivalence", oracle_equivalence),
        ("energy closure", energy_closure),
        ("dispatch properties", dispatch_properties),
        ("peak infeasibility", peak_infeasibility),
        ("setpoint optimizer", setpoint_optimizer),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        match check() {
            Ok(detail) => println!("PASS {}. {name}: {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL {}. {name}: {detail}", i + 1);
            }
        }
    }
    println!(
        "{} of {} criteria passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
