use fchybrid_web::{simulate_walk_json, size_json, walk_profile_json};
use serde_json::Value;

#[test]
fn walk_profile_reports_stats_and_samples() {
    let v: Value =
        serde_json::from_str(&walk_profile_json(40.0, 1.0, 0.25, 10.0, 10.0).unwrap()).unwrap();
    assert_eq!(v["stats"]["average_power_w"], 45.0);
    assert_eq!(v["stats"]["peak_power_w"], 60.0);
    let samples = v["samples"].as_array().unwrap();
    assert_eq!(samples.first().unwrap()[0], 0.0);
    assert_eq!(samples.last().unwrap()[0], 10.0);
}

#[test]
fn simulation_series_is_bounded() {
    let text = simulate_walk_json(40.0, 1.0, 0.25, 10.0, 600.0, 45.0, 1.0, 0.01).unwrap();
    let v: Value = serde_json::from_str(&text).unwrap();
    let series = v["series"].as_array().unwrap();
    assert!(!series.is_empty() && series.len() <= 2000);
    assert!(series[0]["soc"].is_number());
    assert!(v["summary"].get("flows").is_none());
    assert_eq!(v["summary"]["termination"], "profile_ended");
}

#[test]
fn sizing_replaces_the_hybrid_row() {
    let v: Value = serde_json::from_str(&size_json(1.2, 45.0, 250.0).unwrap()).unwrap();
    assert_eq!(v["result"]["fuel_mass_kg"], 0.8);
    let table = v["table"].as_array().unwrap();
    assert_eq!(table.len(), 4);
    assert_eq!(table[3]["stack_mass_kg"], 0.15);

    let v: Value = serde_json::from_str(&size_json(1.5, 45.0, 250.0).unwrap()).unwrap();
    assert_eq!(v["table"][3]["fuel_mass_kg"], 1.1);
}

#[test]
fn invalid_inputs_are_errors() {
    assert!(walk_profile_json(40.0, -1.0, 0.25, 10.0, 10.0).is_err());
    assert!(simulate_walk_json(40.0, 1.0, 0.25, 10.0, 10.0, 45.0, 1.0, 0.0).is_err());
    assert!(size_json(-1.0, 45.0, 250.0).is_err());
}
