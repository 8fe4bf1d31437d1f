//! Cross-module invariants checked on randomized inputs: the rank-based
//! entropy always agrees with exhaustive enumeration, conditioning never
//! increases entropy, and serialized artifacts round-trip.

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use wtrnet_core::graph::{EdgeIdx, NetworkGraph, NodeRole};
use wtrnet_core::netcode::{
    builtin_scenario, CodeFile, EdgeCoefficients, LinearNetworkCode, NetworkFile, ScenarioName,
    SourceSpec, DEFAULT_ENUM_CAP,
};

/// A random DAG with forward edges only, node 0 as the single source and
/// the last node as user, plus propagated random coefficients.
fn random_code(seed: u64, q: u64) -> LinearNetworkCode {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.gen_range(3..=5usize);
    let mut nodes: Vec<(String, NodeRole)> = Vec::new();
    for i in 0..n {
        let role = if i == 0 {
            NodeRole::Source
        } else if i == n - 1 {
            NodeRole::User
        } else {
            NodeRole::Intermediate
        };
        nodes.push((format!("n{i}"), role));
    }
    let mut edges = Vec::new();
    let edge_count = rng.gen_range(1..=6usize);
    for _ in 0..edge_count {
        let a = rng.gen_range(0..n - 1);
        let b = rng.gen_range(a + 1..n);
        edges.push((format!("n{a}"), format!("n{b}")));
    }
    let graph = NetworkGraph::build(nodes, edges).unwrap();
    let message_dim = rng.gen_range(1..=2usize);
    let key_dim = rng.gen_range(0..=2usize);
    let sources = vec![SourceSpec {
        node: "n0".into(),
        message_dim,
        key_dim,
    }];
    let src = graph.find_node("n0").unwrap();
    let coefficients: Vec<EdgeCoefficients> = graph
        .edges()
        .map(|(_, e)| {
            let n_in = graph.in_edges(e.tail).len();
            let n_src = if e.tail == src { message_dim + key_dim } else { 0 };
            EdgeCoefficients {
                from_edges: (0..n_in).map(|_| rng.gen_range(0..q)).collect(),
                from_source: (0..n_src).map(|_| rng.gen_range(0..q)).collect(),
            }
        })
        .collect();
    LinearNetworkCode::propagate(&graph, q, &sources, &coefficients).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn rank_entropy_matches_brute_force(seed in any::<u64>(), q in prop::sample::select(vec![2u64, 3])) {
        let code = random_code(seed, q);
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
        let edges: Vec<EdgeIdx> = code
            .graph()
            .edges()
            .map(|(i, _)| i)
            .filter(|_| rng.gen_bool(0.6))
            .collect();
        let message_dim = code.layout().message_dim;
        let target: Vec<usize> = (0..message_dim).collect();
        let rank = code.conditional_entropy_rank(&target, &edges).unwrap();
        let brute = code.brute_force_entropy(&target, &edges, DEFAULT_ENUM_CAP).unwrap();
        prop_assert!((rank as f64 - brute).abs() < 1e-9, "rank {rank} vs brute {brute}");
    }

    #[test]
    fn entropy_bounded_by_prior(seed in any::<u64>(), q in prop::sample::select(vec![2u64, 3])) {
        let code = random_code(seed, q);
        let all: Vec<EdgeIdx> = code.graph().edges().map(|(i, _)| i).collect();
        let target: Vec<usize> = (0..code.layout().message_dim).collect();
        let h = code.conditional_entropy_rank(&target, &all).unwrap();
        prop_assert!(h <= target.len());
    }

    #[test]
    fn conditioning_never_increases_entropy(seed in any::<u64>(), q in prop::sample::select(vec![2u64, 3])) {
        let code = random_code(seed, q);
        let all: Vec<EdgeIdx> = code.graph().edges().map(|(i, _)| i).collect();
        let target: Vec<usize> = (0..code.layout().message_dim).collect();
        let mut last = code.conditional_entropy_rank(&target, &[]).unwrap();
        for k in 1..=all.len() {
            let h = code.conditional_entropy_rank(&target, &all[..k]).unwrap();
            prop_assert!(h <= last, "entropy rose when observing edge {k}");
            last = h;
        }
    }

    #[test]
    fn code_file_roundtrips_for_random_codes(seed in any::<u64>()) {
        let code = random_code(seed, 3);
        let file = CodeFile::from_code(&code);
        let json = serde_json::to_string(&file).unwrap();
        let parsed: CodeFile = serde_json::from_str(&json).unwrap();
        prop_assert_eq!(parsed.into_code(code.graph()).unwrap(), code);
    }
}

#[test]
fn network_file_roundtrips_for_builtin_scenarios() {
    for name in [
        ScenarioName::TwoPath,
        ScenarioName::Multicast,
        ScenarioName::Crossed,
    ] {
        let sc = builtin_scenario(name);
        let file = NetworkFile {
            schema_version: 1,
            graph: sc.graph.to_spec(),
            sources: sc.sources.clone(),
            users: sc.users.clone(),
            patterns: sc.patterns.clone(),
        };
        let json = serde_json::to_string(&file).unwrap();
        let parsed: NetworkFile = serde_json::from_str(&json).unwrap();
        assert_eq!(parsed, file);
        assert_eq!(parsed.resolved_sources(), sc.sources);
    }
}
