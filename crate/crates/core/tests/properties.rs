use proptest::prelude::*;

use fchybrid::controller::{dispatch, ControllerParams};
use fchybrid::powertrain::{battery_step, BatterySpec, BatteryState};
use fchybrid::presets;
use fchybrid::profile::{
    load_profile, profile_to_csv, resample, synthesize_walk_profile, GaitParams, PowerProfile,
    Sample,
};
use fchybrid::report::{
    compare, emit_comparison, emit_simulation, ComparisonEntry, ComparisonRow, Format,
};
use fchybrid::simulator::{run_time_constant_load, simulate, SimOptions, SimulationResult};
use fchybrid::sizing::{size_hybrid, SizingInputs};

fn battery() -> impl Strategy<Value = BatterySpec> {
    (
        0.05..1.0f64,
        0.5..1.0f64,
        0.5..1.0f64,
        0.0..0.3f64,
        0.7..1.0f64,
    )
        .prop_map(|(mass, ce, de, soc_min, soc_max)| BatterySpec {
            charge_efficiency: ce,
            discharge_efficiency: de,
            soc_min,
            soc_max,
            ..BatterySpec::nanophosphate(mass)
        })
}

fn gait() -> impl Strategy<Value = GaitParams> {
    (
        20.0..60.0f64,
        0.5..2.0f64,
        0.05..0.95f64,
        0.0..40.0f64,
        10.0..120.0f64,
    )
        .prop_map(
            |(base_load, gait_period, stride_duty, mech_peak, duration)| GaitParams {
                base_load,
                gait_period,
                stride_duty,
                mech_peak,
                duration,
                ..GaitParams::default()
            },
        )
}

fn profile() -> impl Strategy<Value = PowerProfile> {
    prop::collection::vec((0.001..10.0f64, 0.0..300.0f64), 1..40).prop_map(|steps| {
        let mut t = 0.0;
        let mut samples = vec![Sample::new(0.0, steps[0].1)];
        for (dt, p) in steps {
            t += dt;
            samples.push(Sample::new(t, p));
        }
        PowerProfile::new("random", samples).unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn battery_soc_stays_in_window(
        spec in battery(),
        start in 0.0..1.0f64,
        requests in prop::collection::vec((-500.0..500.0f64, 0.01..60.0f64), 1..200),
    ) {
        let soc = spec.soc_min + start * (spec.soc_max - spec.soc_min);
        let mut state = BatteryState::at_soc(soc);
        for (power, dt) in requests {
            let (next, actual) = battery_step(&spec, &state, power, dt);
            prop_assert!(next.soc >= spec.soc_min && next.soc <= spec.soc_max);
            prop_assert!(actual.abs() <= spec.max_power_w());
            prop_assert!(actual * power >= 0.0, "never reverses direction");
            state = next;
        }
    }

    #[test]
    fn dispatch_balances_power(
        demand in 0.0..300.0f64,
        setpoint in 0.0..120.0f64,
        soc in 0.1..1.0f64,
        fuel in 0.0..1.0f64,
        dt in 0.001..5.0f64,
    ) {
        let spec = BatterySpec::nanophosphate(0.135);
        let params = ControllerParams::with_setpoint(setpoint);
        let (flow, _) = dispatch(demand, &params, &spec, &BatteryState::at_soc(soc), fuel, dt);
        prop_assert_eq!(flow.fc_output + flow.battery_power - demand, flow.curtailed - flow.unmet);
        prop_assert!(flow.unmet >= 0.0 && flow.curtailed >= 0.0);
        prop_assert!(flow.fc_output <= setpoint);
    }

    #[test]
    fn profile_csv_round_trips(p in profile()) {
        let text = profile_to_csv(&p);
        let back = load_profile(text.as_bytes(), "random").unwrap();
        prop_assert_eq!(profile_to_csv(&back), text);
        prop_assert_eq!(back.samples().len(), p.samples().len());
    }

    #[test]
    fn resampling_preserves_energy(p in profile(), dt in 0.01..5.0f64) {
        let r = resample(&p, dt).unwrap();
        let (a, b) = (p.energy_wh(), r.energy_wh());
        prop_assert!((a - b).abs() <= 1e-9 * a.max(1e-9), "{} vs {}", a, b);
    }

    #[test]
    fn gait_simulation_closes_and_is_deterministic(params in gait(), scale in 0.7..1.3f64) {
        let profile = synthesize_walk_profile(&params).unwrap();
        let mut config = presets::hybrid();
        config.controller.fc_setpoint = params.average_demand() * scale;
        let opts = SimOptions::gait().with_dt(0.05);
        let a = simulate(&config, &profile, &opts).unwrap();
        let b = simulate(&config, &profile, &opts).unwrap();
        prop_assert_eq!(&a, &b);
        let scale = a.fuel_energy + a.battery_release.abs() + a.energy_delivered;
        prop_assert!(a.energy_imbalance().abs() <= 1e-9 * scale);
        prop_assert!(a.min_soc >= config.battery.soc_min && a.max_soc <= config.battery.soc_max);
    }

    #[test]
    fn halving_dt_changes_constant_load_run_time_by_at_most_a_step(load in 5.0..80.0f64) {
        let config = presets::hybrid();
        let profile = PowerProfile::constant("c", load, 3600.0).unwrap();
        let coarse = simulate(&config, &profile, &SimOptions::endurance().with_dt(20.0)).unwrap();
        let fine = simulate(&config, &profile, &SimOptions::endurance().with_dt(10.0)).unwrap();
        prop_assert!((coarse.run_time - fine.run_time).abs() <= 20.0 / 3600.0);
    }

    #[test]
    fn larger_budget_never_shrinks_fuel(budget in 0.5..3.0f64, extra in 0.0..1.0f64, steady in 20.0..80.0f64) {
        let small = size_hybrid(&SizingInputs { mass_budget: budget, ..SizingInputs::reference() }.with_steady_power(steady), None).unwrap();
        let large = size_hybrid(&SizingInputs { mass_budget: budget + extra, ..SizingInputs::reference() }.with_steady_power(steady), None).unwrap();
        prop_assert!(large.fuel_mass >= small.fuel_mass);
        prop_assert!(large.run_time >= small.run_time);
        if small.feasible {
            prop_assert!((small.total_mass() - budget).abs() <= 1e-9);
            let oracle = run_time_constant_load(small.config.as_ref().unwrap(), steady).unwrap();
            prop_assert!((oracle.fuel_limited_h - small.run_time).abs() <= 1e-9 * small.run_time);
        }
    }
}

#[test]
fn simulation_json_round_trips() {
    let profile = synthesize_walk_profile(&GaitParams {
        duration: 30.0,
        ..GaitParams::default()
    })
    .unwrap();
    let opts = SimOptions {
        record_flows: true,
        ..SimOptions::gait()
    };
    let r = simulate(&presets::hybrid(), &profile, &opts).unwrap();
    let text = emit_simulation(&r, Format::Json);
    let back: SimulationResult = serde_json::from_str(&text).unwrap();
    assert_eq!(emit_simulation(&back, Format::Json), text);
    assert_eq!(back.flows.len(), r.flows.len());
}

#[test]
fn comparison_json_round_trips() {
    let rows = compare(&presets::table1_entries()).unwrap();
    let text = emit_comparison(&rows, Format::Json);
    let back: Vec<ComparisonRow> = serde_json::from_str(&text).unwrap();
    assert_eq!(emit_comparison(&back, Format::Json), text);
    assert_eq!(back[0].stack_mass, None);
    let single = compare(&[ComparisonEntry::new("h", presets::hybrid(), 45.0, 250.0)]).unwrap();
    assert_eq!(single[0], rows[3].clone().with_label("h"));
}

trait WithLabel {
    fn with_label(self, label: &str) -> Self;
}

impl WithLabel for ComparisonRow {
    fn with_label(mut self, label: &str) -> Self {
        self.label = label.into();
        self
    }
}
