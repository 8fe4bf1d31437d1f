//! Command implementations behind the `wtrnet` binary. Each command
//! returns its rendered report plus an optional machine-readable
//! artifact; the binary maps results onto the exit-code contract
//! (0 success, 1 analysis-negative, 2 input error).

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use wtrnet_core::netcode::{self, CodeFile, EavesdropPattern, NetworkFile, SourceSpec, UserSpec};
use wtrnet_core::optical::{self, OpticalTopology, PrototypeKind, RingMode, RouteOutcome};
use wtrnet_core::qkd::{self, QkdSystemParams};
use wtrnet_core::relay::{self, RelayError};
use wtrnet_core::resilience::{self, ResilienceReport};
use wtrnet_core::{AdmissibilityReport, NetworkGraph};

/// Environment variable holding a catalog file that overrides the
/// component catalog of any loaded or built-in topology.
pub const CATALOG_ENV: &str = "WTRNET_CATALOG";

/// Any condition that makes the invocation itself invalid (exit 2).
#[derive(Debug, Error)]
pub enum CliError {
    #[error("cannot read `{path}`: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("cannot parse `{path}`: {message}")]
    Parse { path: String, message: String },
    #[error("{0}")]
    Usage(String),
}

/// Outcome of a command: rendered text, an optional serialized artifact
/// for `--output`, and whether the analysis came out negative (exit 1).
#[derive(Debug)]
pub struct CmdResult {
    pub text: String,
    pub artifact: Option<String>,
    pub negative: bool,
}

impl CmdResult {
    fn ok(text: String) -> Self {
        Self {
            text,
            artifact: None,
            negative: false,
        }
    }

    fn negative(text: String) -> Self {
        Self {
            text,
            artifact: None,
            negative: true,
        }
    }
}

fn read_file(path: &str) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_string(),
        source,
    })
}

fn parse_json<T: for<'de> Deserialize<'de>>(path: &str, text: &str) -> Result<T, CliError> {
    serde_json::from_str(text).map_err(|e| CliError::Parse {
        path: path.to_string(),
        message: e.to_string(),
    })
}

fn usage<E: std::fmt::Display>(e: E) -> CliError {
    CliError::Usage(e.to_string())
}

/// A self-contained exchange plan: the abstract relay graph, the chosen
/// code and the resilience assessment, as produced by `plan` and consumed
/// by `simulate`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PlanFile {
    pub schema_version: u32,
    pub source: String,
    pub user: String,
    pub budget_db: f64,
    pub network: NetworkFile,
    pub code: CodeFile,
    pub resilience: ResilienceReport,
}

fn format_admissibility(report: &AdmissibilityReport) -> String {
    let mut out = String::new();
    out.push_str(&format!("field: GF({})\n", report.q));
    for u in &report.users {
        out.push_str(&format!(
            "user {}: wants [{}], residual entropy {} -> {}\n",
            u.node,
            u.wants.join(", "),
            u.residual_entropy,
            if u.decodable { "decodable" } else { "NOT decodable" }
        ));
    }
    for p in &report.patterns {
        let verdict = if p.secure {
            "secure"
        } else if p.conditional_entropy == 0 {
            "fully_leaked"
        } else {
            "partially_leaked"
        };
        out.push_str(&format!(
            "pattern {}: target [{}], prior {} posterior {} -> {}\n",
            p.id,
            p.target.join(", "),
            p.prior_entropy,
            p.conditional_entropy,
            verdict
        ));
    }
    out.push_str(&format!(
        "admissible: {}\n",
        if report.admissible { "yes" } else { "no" }
    ));
    out
}

fn format_resilience(r: &ResilienceReport) -> String {
    let mut out = String::new();
    out.push_str(&format!(
        "disjoint paths {} -> {}: {}\n",
        r.source, r.user, r.disjoint_path_count
    ));
    for p in &r.paths {
        out.push_str(&format!("  path: {}\n", p.join(" -> ")));
    }
    match r.max_byzantine_t {
        Some(t) => out.push_str(&format!(
            "byzantine tolerance t = {t}, secure rate bound C - t = {}\n",
            r.secure_rate_bound
        )),
        None => out.push_str("user unreachable; no byzantine tolerance\n"),
    }
    for a in &r.authenticity {
        out.push_str(&format!(
            "authenticity vs {}: {}\n",
            a.pattern,
            if a.feasible { "feasible" } else { "infeasible" }
        ));
    }
    out
}

/// `check`: verify a code file against a network file.
pub fn cmd_check(network_path: &str, code_path: &str) -> Result<CmdResult, CliError> {
    let network: NetworkFile = parse_json(network_path, &read_file(network_path)?)?;
    let code_file: CodeFile = parse_json(code_path, &read_file(code_path)?)?;
    let graph = NetworkGraph::from_spec(&network.graph).map_err(usage)?;
    let code = code_file.into_code(&graph).map_err(usage)?;
    let report =
        netcode::check_admissible(&code, &network.users, &network.patterns).map_err(usage)?;
    let text = format_admissibility(&report);
    Ok(CmdResult {
        negative: !report.admissible,
        artifact: Some(serde_json::to_string_pretty(&report).unwrap()),
        text,
    })
}

/// Resolve `--preset NAME` or `--params FILE` into system parameters.
pub fn resolve_params(
    preset: Option<&str>,
    params_path: Option<&str>,
) -> Result<QkdSystemParams, CliError> {
    match (preset, params_path) {
        (Some(name), None) => QkdSystemParams::preset(name).map_err(usage),
        (None, Some(path)) => {
            let text = read_file(path)?;
            let name = Path::new(path)
                .file_stem()
                .and_then(|s| s.to_str())
                .unwrap_or("custom");
            QkdSystemParams::from_config_str(name, &text).map_err(|e| CliError::Parse {
                path: path.to_string(),
                message: e.to_string(),
            })
        }
        _ => Err(CliError::Usage(
            "exactly one of --preset or --params is required".into(),
        )),
    }
}

/// `rate`: CSV rate curve with a trailing cutoff annotation row.
pub fn cmd_rate(
    params: &QkdSystemParams,
    min_db: f64,
    max_db: f64,
    step_db: f64,
) -> Result<CmdResult, CliError> {
    let curve = qkd::rate_curve(params, min_db, max_db, step_db).map_err(usage)?;
    let mut csv = String::from("loss_db,rate_bits_per_qubit,qber\n");
    for pt in &curve {
        csv.push_str(&format!(
            "{:.3},{:.6e},{:.6}\n",
            pt.loss_db, pt.rate_bits_per_qubit, pt.qber
        ));
    }
    match qkd::max_tolerable_loss(params) {
        Ok(cutoff) => {
            csv.push_str(&format!(
                "# cutoff_db,{:.2}{}\n",
                cutoff.loss_db,
                if cutoff.ceiling_capped { ",ceiling" } else { "" }
            ));
            Ok(CmdResult::ok(csv))
        }
        Err(qkd::QkdError::SystemNonviable) => {
            csv.push_str("# cutoff_db,none (system nonviable)\n");
            Ok(CmdResult::negative(csv))
        }
        Err(e) => Err(usage(e)),
    }
}

/// Load a topology from a file path or the built-in shorthand p1/p2/p3,
/// honoring the WTRNET_CATALOG override and an optional ring-mode override.
pub fn load_topology(
    spec: &str,
    ring_mode: Option<RingMode>,
) -> Result<OpticalTopology, CliError> {
    let mut topology = match spec.parse::<PrototypeKind>() {
        Ok(kind) => OpticalTopology::reference(kind),
        Err(_) => parse_json(spec, &read_file(spec)?)?,
    };
    if let Ok(path) = std::env::var(CATALOG_ENV) {
        topology.catalog = parse_json(&path, &read_file(&path)?)?;
    }
    if let Some(mode) = ring_mode {
        topology.config.ring_mode = mode;
    }
    OpticalTopology::build(topology.kind, topology.config, topology.catalog).map_err(usage)
}

/// `budget`: itemized loss budget for one emitter and one wavelength (or
/// the wavelength addressing a named receiver).
pub fn cmd_budget(
    topology: &OpticalTopology,
    tx: &str,
    rx: Option<&str>,
    wavelength_nm: Option<f64>,
) -> Result<CmdResult, CliError> {
    let nm = match (rx, wavelength_nm) {
        (Some(rx), None) => {
            let branch = topology
                .receivers()
                .iter()
                .position(|r| r == rx)
                .map(|i| i + 1)
                .ok_or_else(|| CliError::Usage(format!("unknown receiver `{rx}`")))?;
            topology.channel_nm(branch)
        }
        (None, Some(nm)) => nm,
        _ => {
            return Err(CliError::Usage(
                "exactly one of --rx or --wavelength is required".into(),
            ))
        }
    };
    let outcome = topology.route_wavelength(tx, nm).map_err(usage)?;
    let (header, budget, negative) = match &outcome {
        RouteOutcome::Delivered { receiver, budget } => (
            format!("route: {tx} @ {nm} nm -> {receiver}\n"),
            budget,
            false,
        ),
        RouteOutcome::Blocked { at, budget } => {
            (format!("route: {tx} @ {nm} nm -> BLOCKED at {at}\n"), budget, true)
        }
    };
    let mut text = header;
    text.push_str("item,kind,dB,cumulative\n");
    let mut cumulative = 0.0;
    for item in &budget.items {
        cumulative += item.loss_db;
        text.push_str(&format!(
            "{},{:?},{:.2},{:.2}\n",
            item.label, item.kind, item.loss_db, cumulative
        ));
    }
    text.push_str(&format!("total,,{:.2},{:.2}\n", budget.total_db, budget.total_db));
    Ok(CmdResult {
        text,
        artifact: Some(serde_json::to_string_pretty(budget).unwrap()),
        negative,
    })
}

/// `plan`: abstract a pairing into a relay graph, search an admissible
/// code and assess resilience; bundles everything into a plan artifact.
pub fn cmd_plan(
    topology: &OpticalTopology,
    tx_source: &str,
    tx_user: &str,
    budget_db: f64,
    q: u64,
    cap_search: u64,
) -> Result<CmdResult, CliError> {
    let plan_graph =
        optical::to_netcode_graph(topology, tx_source, tx_user, budget_db).map_err(usage)?;
    if plan_graph.insufficient_paths {
        return Ok(CmdResult::negative(format!(
            "insufficient node-disjoint paths between {tx_source} and {tx_user} at {budget_db} dB\n"
        )));
    }
    let graph = &plan_graph.graph;
    let sources = vec![SourceSpec {
        node: tx_source.to_string(),
        message_dim: 1,
        key_dim: 1,
    }];
    let users = vec![UserSpec {
        node: tx_user.to_string(),
        wants: vec![0],
    }];
    let patterns: Vec<EavesdropPattern> = graph
        .nodes()
        .filter(|(_, n)| n.name != tx_source && n.name != tx_user)
        .map(|(_, n)| EavesdropPattern {
            id: n.name.clone(),
            nodes: vec![n.name.clone()],
            target: vec![0],
        })
        .collect();
    let code = match netcode::search_code(graph, q, &sources, &users, &patterns, cap_search)
        .map_err(usage)?
    {
        Some(code) => code,
        None => {
            return Ok(CmdResult::negative(format!(
                "no admissible code over GF({q}) for the planned graph\n"
            )))
        }
    };
    let report = netcode::check_admissible(&code, &users, &patterns).map_err(usage)?;
    let res = resilience::analyze(graph, tx_source, tx_user, &patterns).map_err(usage)?;
    let mut text = format!(
        "plan: {tx_source} -> {tx_user} at {budget_db} dB over GF({q})\nrepeaters: {}\n",
        plan_graph.repeaters.join(", ")
    );
    text.push_str(&format_admissibility(&report));
    text.push_str(&format_resilience(&res));
    let plan = PlanFile {
        schema_version: 1,
        source: tx_source.to_string(),
        user: tx_user.to_string(),
        budget_db,
        network: NetworkFile {
            schema_version: 1,
            graph: graph.to_spec(),
            sources,
            users,
            patterns,
        },
        code: CodeFile::from_code(&code),
        resilience: res,
    };
    Ok(CmdResult {
        text,
        artifact: Some(serde_json::to_string_pretty(&plan).unwrap()),
        negative: false,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SimulateMode {
    Wtr,
    Trusted,
}

impl std::str::FromStr for SimulateMode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "wtr" => Ok(Self::Wtr),
            "trusted" => Ok(Self::Trusted),
            other => Err(format!("unknown mode `{other}`")),
        }
    }
}

/// `simulate`: replay one exchange over a plan, weakly trusted by default
/// or as a trusted chain along the plan's first disjoint path.
pub fn cmd_simulate(
    plan: &PlanFile,
    message: &[u64],
    seed: u64,
    mode: SimulateMode,
    override_admissibility: bool,
) -> Result<CmdResult, CliError> {
    let graph = NetworkGraph::from_spec(&plan.network.graph).map_err(usage)?;
    match mode {
        SimulateMode::Wtr => {
            let code = plan.code.into_code(&graph).map_err(usage)?;
            match relay::simulate_wtr_exchange(
                &code,
                &plan.network.users,
                &plan.network.patterns,
                message,
                seed,
                override_admissibility,
            ) {
                Ok((session, audit)) => Ok(CmdResult::ok(session.transcript(&audit))),
                Err(RelayError::NotAdmissible(detail)) => Ok(CmdResult::negative(format!(
                    "not admissible: {detail}\n"
                ))),
                Err(e) => Err(usage(e)),
            }
        }
        SimulateMode::Trusted => {
            let path = plan
                .resilience
                .paths
                .first()
                .ok_or_else(|| CliError::Usage("plan has no relay path".into()))?;
            let links: Vec<String> = path
                .windows(2)
                .map(|w| format!("{}->{}", w[0], w[1]))
                .collect();
            let m = *message
                .first()
                .ok_or_else(|| CliError::Usage("empty message".into()))?;
            let (session, audit) =
                relay::simulate_trusted_chain(&links, plan.code.q, m, seed).map_err(usage)?;
            Ok(CmdResult::ok(session.transcript(&audit)))
        }
    }
}

/// `search`: exhaustive code search over a network file.
pub fn cmd_search(network_path: &str, q: u64, cap_search: u64) -> Result<CmdResult, CliError> {
    let network: NetworkFile = parse_json(network_path, &read_file(network_path)?)?;
    let graph = NetworkGraph::from_spec(&network.graph).map_err(usage)?;
    let sources = network.resolved_sources();
    let found = netcode::search_code(
        &graph,
        q,
        &sources,
        &network.users,
        &network.patterns,
        cap_search,
    )
    .map_err(usage)?;
    match found {
        Some(code) => {
            let file = CodeFile::from_code(&code);
            Ok(CmdResult {
                text: format!(
                    "found admissible code over GF({q}) with {} edges\n",
                    graph.edge_count()
                ),
                artifact: Some(serde_json::to_string_pretty(&file).unwrap()),
                negative: false,
            })
        }
        None => Ok(CmdResult::negative(format!(
            "no admissible code over GF({q}) exists for this network\n"
        ))),
    }
}

/// Parse a comma-separated message vector.
pub fn parse_message(text: &str) -> Result<Vec<u64>, CliError> {
    text.split(',')
        .map(|s| {
            s.trim()
                .parse::<u64>()
                .map_err(|_| CliError::Usage(format!("bad message symbol `{s}`")))
        })
        .collect()
}
