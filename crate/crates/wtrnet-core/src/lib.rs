//! Modeling toolkit for quantum key distribution networks built on
//! weakly trusted repeaters.
//!
//! The crate covers the full pipeline: exact arithmetic over small prime
//! fields ([`field`]), the DAG substrate ([`graph`]), linear network
//! codes with information-theoretic secure/decodable certification
//! ([`netcode`]), decoy-state key-rate curves versus channel loss
//! ([`qkd`]), physical PON prototypes with itemized loss budgets and
//! wavelength routing ([`optical`]), disjoint-path resilience bounds
//! ([`resilience`]) and end-to-end relay simulation with leakage audits
//! ([`relay`]).

pub mod field;
pub mod graph;
pub mod netcode;
pub mod optical;
pub mod qkd;
pub mod relay;
pub mod resilience;

pub use field::{rank_mod, FieldElement, FieldError};
pub use graph::{GraphError, GraphSpec, NetworkGraph, NodeRole};
pub use netcode::{
    builtin_scenario, check_admissible, search_code, AdmissibilityReport, CodeFile,
    EavesdropPattern, EdgeCoefficients, LinearNetworkCode, NetcodeError, NetworkFile, Scenario,
    ScenarioName, SourceSpec, UserSpec, DEFAULT_ENUM_CAP, DEFAULT_SEARCH_CAP,
};
pub use optical::{
    default_catalog, to_netcode_graph, Catalog, ComponentKind, OpticalError, OpticalTopology,
    PathLossBudget, PrototypeConfig, PrototypeKind, RingMode, RouteOutcome,
};
pub use qkd::{
    channel_stats, max_tolerable_loss, rate_curve, rate_per_second, secret_key_rate, ChannelStats,
    LossCutoff, QkdError, QkdSystemParams,
};
pub use relay::{
    effective_rate, simulate_trusted_chain, simulate_wtr_exchange, LeakageAudit, RelayError,
    RelayMode, RelaySession, ThroughputReport, Verdict,
};
pub use resilience::{
    analyze, byzantine_bound, node_disjoint_paths, secure_rate_bound, DisjointPaths,
    ResilienceError, ResilienceReport,
};
