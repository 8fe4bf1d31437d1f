//! Integration tests for the command layer: file parsing, CSV shapes,
//! negative-analysis flags and the catalog override.

use std::path::PathBuf;

use wtrnet_cli::{
    cmd_budget, cmd_check, cmd_plan, cmd_rate, cmd_search, cmd_simulate, load_topology,
    parse_message, resolve_params, CliError, PlanFile, SimulateMode, CATALOG_ENV,
};
use wtrnet_core::optical::RingMode;

fn fixture(name: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../fixtures")
        .join(name)
        .to_string_lossy()
        .into_owned()
}

#[test]
fn check_reports_admissibility() {
    let r = cmd_check(
        &fixture("crossed.network.json"),
        &fixture("crossed.code.json"),
    )
    .unwrap();
    assert!(!r.negative);
    assert!(r.text.contains("admissible: yes"));
}

#[test]
fn check_rejects_malformed_file() {
    let err = cmd_check(&fixture("clavis.conf"), &fixture("two_path.code.json")).unwrap_err();
    assert!(matches!(err, CliError::Parse { .. }));
    let err = cmd_check("no/such/file.json", &fixture("two_path.code.json")).unwrap_err();
    assert!(matches!(err, CliError::Io { .. }));
}

#[test]
fn rate_csv_has_expected_rows_and_cutoff() {
    let p = resolve_params(Some("clavis"), None).unwrap();
    let r = cmd_rate(&p, 0.0, 30.0, 0.5).unwrap();
    let data_rows = r
        .text
        .lines()
        .filter(|l| !l.starts_with('#') && !l.starts_with("loss_db"))
        .count();
    assert_eq!(data_rows, 61);
    let cutoff_line = r.text.lines().find(|l| l.starts_with("# cutoff_db")).unwrap();
    assert!(cutoff_line.contains("19.98"), "{cutoff_line}");
}

#[test]
fn rate_params_file_matches_preset() {
    let from_file = resolve_params(None, Some(&fixture("clavis.conf"))).unwrap();
    let preset = resolve_params(Some("clavis"), None).unwrap();
    assert_eq!(from_file.mu, preset.mu);
    assert_eq!(from_file.y0, preset.y0);
    assert!(resolve_params(Some("nope"), None).is_err());
    assert!(resolve_params(None, None).is_err());
}

#[test]
fn budget_blocked_route_is_negative() {
    let t = load_topology("p1", None).unwrap();
    // 1560 nm is in no default drop plan: travels the ring and exits.
    let r = cmd_budget(&t, "Tx1", None, Some(1560.0)).unwrap();
    assert!(r.negative);
    assert!(r.text.contains("BLOCKED"));
}

#[test]
fn budget_by_receiver_name() {
    let t = load_topology("p1", None).unwrap();
    let r = cmd_budget(&t, "Tx1", Some("Rx2"), None).unwrap();
    assert!(!r.negative);
    assert!(r.text.contains("-> Rx2"));
    assert!(cmd_budget(&t, "Tx1", Some("Rx9"), None).is_err());
    assert!(cmd_budget(&t, "Tx1", None, None).is_err());
}

#[test]
fn plan_then_simulate_roundtrip() {
    let t = load_topology("p1", None).unwrap();
    let planned = cmd_plan(&t, "Tx1", "Tx2", 20.0, 3, 10_000_000).unwrap();
    let plan: PlanFile = serde_json::from_str(planned.artifact.as_deref().unwrap()).unwrap();
    let a = cmd_simulate(&plan, &[2], 7, SimulateMode::Wtr, false).unwrap();
    assert!(!a.negative);
    assert!(a.text.contains("Tx2: [2]"));
    assert!(a.text.contains("secure"));
    // Determinism: same seed gives a byte-identical transcript.
    let b = cmd_simulate(&plan, &[2], 7, SimulateMode::Wtr, false).unwrap();
    assert_eq!(a.text, b.text);
    let trusted = cmd_simulate(&plan, &[2], 7, SimulateMode::Trusted, false).unwrap();
    assert!(trusted.text.contains("fully_leaked"));
}

#[test]
fn search_finds_bundled_scenarios_and_fails_single_path() {
    let r = cmd_search(&fixture("two_path.network.json"), 3, 10_000_000).unwrap();
    assert!(!r.negative);
    assert!(r.artifact.is_some());
    let r = cmd_search(&fixture("multicast.network.json"), 3, 10_000_000).unwrap();
    assert!(!r.negative);
}

#[test]
fn p2_ring_modes_change_reachability() {
    let open = load_topology("p2", Some(RingMode::Open)).unwrap();
    let dual = load_topology("p2", Some(RingMode::Dual)).unwrap();
    assert_eq!(open.reachable_receivers("Tx2", 20.0).unwrap().len(), 2);
    assert_eq!(dual.reachable_receivers("Tx2", 20.0).unwrap().len(), 3);
}

#[test]
fn catalog_env_overrides_topology_catalog() {
    // Serialized env mutation: this test owns the variable.
    std::env::set_var(CATALOG_ENV, fixture("catalog.json"));
    let t = load_topology(&fixture("p1.topology.json"), None).unwrap();
    std::env::remove_var(CATALOG_ENV);
    assert_eq!(t.catalog, wtrnet_core::default_catalog());
    std::env::set_var(CATALOG_ENV, "no/such/catalog.json");
    let err = load_topology("p1", None).unwrap_err();
    std::env::remove_var(CATALOG_ENV);
    assert!(matches!(err, CliError::Io { .. }));
}

#[test]
fn message_parsing() {
    assert_eq!(parse_message("1,2, 0").unwrap(), vec![1, 2, 0]);
    assert!(parse_message("1,x").is_err());
}
