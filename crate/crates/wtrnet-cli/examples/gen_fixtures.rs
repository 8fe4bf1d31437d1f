//! Regenerates the bundled fixture files from the built-in scenarios and
//! reference topologies: `cargo run -p wtrnet-cli --example gen_fixtures`.

use std::fs;
use std::path::Path;

use wtrnet_core::netcode::{
    builtin_scenario, CodeFile, EdgeCoefficients, LinearNetworkCode, NetworkFile, ScenarioName,
};
use wtrnet_core::optical::{default_catalog, OpticalTopology, PrototypeKind};

fn write_json<T: serde::Serialize>(dir: &Path, name: &str, value: &T) {
    let mut text = serde_json::to_string_pretty(value).unwrap();
    text.push('\n');
    fs::write(dir.join(name), text).unwrap();
    println!("wrote {name}");
}

fn main() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures");
    fs::create_dir_all(&dir).unwrap();
    for (name, scenario) in [
        ("two_path", ScenarioName::TwoPath),
        ("multicast", ScenarioName::Multicast),
        ("crossed", ScenarioName::Crossed),
    ] {
        let sc = builtin_scenario(scenario);
        let network = NetworkFile {
            schema_version: 1,
            graph: sc.graph.to_spec(),
            sources: sc.sources.clone(),
            users: sc.users.clone(),
            patterns: sc.patterns.clone(),
        };
        write_json(&dir, &format!("{name}.network.json"), &network);
        write_json(
            &dir,
            &format!("{name}.code.json"),
            &CodeFile::from_code(&sc.code),
        );
    }
    // Naive forwarding on the two-path graph: decodable but insecure.
    let sc = builtin_scenario(ScenarioName::TwoPath);
    let naive = vec![
        EdgeCoefficients {
            from_edges: vec![],
            from_source: vec![1, 0],
        },
        EdgeCoefficients {
            from_edges: vec![],
            from_source: vec![1, 0],
        },
        EdgeCoefficients {
            from_edges: vec![1],
            from_source: vec![],
        },
        EdgeCoefficients {
            from_edges: vec![1],
            from_source: vec![],
        },
    ];
    let code = LinearNetworkCode::propagate(&sc.graph, 3, &sc.sources, &naive).unwrap();
    write_json(&dir, "two_path.naive.code.json", &CodeFile::from_code(&code));
    for kind in [PrototypeKind::P1, PrototypeKind::P2, PrototypeKind::P3] {
        let t = OpticalTopology::reference(kind);
        let name = match kind {
            PrototypeKind::P1 => "p1.topology.json",
            PrototypeKind::P2 => "p2.topology.json",
            PrototypeKind::P3 => "p3.topology.json",
        };
        write_json(&dir, name, &t);
    }
    write_json(&dir, "catalog.json", &default_catalog());
}
