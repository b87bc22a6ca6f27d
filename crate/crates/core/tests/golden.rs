mod common;

use common::{golden_path, load_scenario, scenario_path, GOLDEN};
use manet_routes::oracle::enumerate::exhaustive_seeds;
use manet_routes::oracle::{explore, ExplorationReport, ExploreConfig};
use manet_routes::sim::{self, Scenario, Trace};
use manet_routes::{RouteStatus, RoutingState};

fn read(path: std::path::PathBuf) -> String {
    std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

#[test]
fn traces_match_frozen_copies() {
    for name in GOLDEN {
        let (state, trace) = sim::run_to_end(&load_scenario(name)).unwrap();
        assert_eq!(trace.to_jsonl(), read(golden_path(&format!("{name}.trace.jsonl"))), "{name}");
        let json = serde_json::to_string_pretty(&state).unwrap() + "\n";
        assert_eq!(json, read(golden_path(&format!("{name}.state.json"))), "{name}");
    }
}

#[test]
fn repeated_runs_are_byte_identical() {
    for name in GOLDEN {
        let s = load_scenario(name);
        assert_eq!(sim::run(&s).unwrap().to_jsonl(), sim::run(&s).unwrap().to_jsonl(), "{name}");
    }
}

#[test]
fn every_entry_satisfies_the_invariant() {
    for name in GOLDEN {
        let trace = sim::run(&load_scenario(name)).unwrap();
        assert!(trace.all_passed(), "{name}");
        for e in &trace.entries {
            assert_eq!(e.invariants.checked, 15);
        }
    }
}

#[test]
fn connected_endpoints_keep_an_active_route() {
    // in baseline and expiry the endpoints stay connected, so after the request
    // every checkpoint must hold an active A-D route
    for name in ["baseline", "expiry"] {
        let trace = sim::run(&load_scenario(name)).unwrap();
        for e in trace.entries.iter().filter(|e| e.action == "checkpoint") {
            assert!(
                e.allroutes.iter().any(|r| r.status == RouteStatus::Activate),
                "{name} tick {}",
                e.tick
            );
        }
    }
}

#[test]
fn scenario_round_trip() {
    for name in GOLDEN {
        let text = read(scenario_path(name));
        let once = Scenario::from_json(&text).unwrap().to_json();
        assert_eq!(once, text);
        assert_eq!(Scenario::from_json(&once).unwrap().to_json(), once);
    }
}

#[test]
fn state_round_trip() {
    for name in GOLDEN {
        let text = read(golden_path(&format!("{name}.state.json")));
        let state: RoutingState = serde_json::from_str(&text).unwrap();
        let once = serde_json::to_string_pretty(&state).unwrap() + "\n";
        assert_eq!(once, text);
        let again: RoutingState = serde_json::from_str(&once).unwrap();
        assert_eq!(again, state);
    }
}

#[test]
fn trace_round_trip() {
    for name in GOLDEN {
        let text = read(golden_path(&format!("{name}.trace.jsonl")));
        let once = Trace::from_jsonl(&text).unwrap().to_jsonl();
        assert_eq!(once, text);
    }
}

#[test]
fn report_round_trip() {
    let config = ExploreConfig { max_depth: 3, ..ExploreConfig::default() };
    let report = explore(&exhaustive_seeds(2, 3), &config).unwrap();
    let once = serde_json::to_string_pretty(&report).unwrap();
    let parsed: ExplorationReport = serde_json::from_str(&once).unwrap();
    assert_eq!(serde_json::to_string_pretty(&parsed).unwrap(), once);
}

/// Top-level keys of a serialized value must be declared by its schema,
/// and every key the schema requires must be present.
fn assert_schema_keys(schema: &str, value: &serde_json::Value) {
    let doc: serde_json::Value =
        serde_json::from_str(&read(common::repo_root().join("schemas").join(schema))).unwrap();
    let declared = doc["properties"].as_object().unwrap();
    let object = value.as_object().unwrap();
    for key in object.keys() {
        assert!(declared.contains_key(key), "{schema} lacks {key}");
    }
    for key in doc["required"].as_array().unwrap() {
        assert!(object.contains_key(key.as_str().unwrap()), "{schema} requires {key}");
    }
}

#[test]
fn schemas_describe_serialized_values() {
    for name in GOLDEN {
        assert_schema_keys("scenario.schema.json", &serde_json::to_value(load_scenario(name)).unwrap());
        let (state, trace) = sim::run_to_end(&load_scenario(name)).unwrap();
        assert_schema_keys("routing_state.schema.json", &serde_json::to_value(&state).unwrap());
        for entry in &trace.entries {
            assert_schema_keys("trace_entry.schema.json", &serde_json::to_value(entry).unwrap());
        }
    }
    let config = ExploreConfig { max_depth: 2, ..ExploreConfig::default() };
    let report = explore(&exhaustive_seeds(2, 2), &config).unwrap();
    assert_schema_keys("exploration_report.schema.json", &serde_json::to_value(&report).unwrap());
}
