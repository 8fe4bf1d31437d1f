//! Linear network codes over an extended message space (true message
//! symbols plus uniform key symbols) and the secure/decodable admissibility
//! check, computed two ways: exactly via matrix rank and independently via
//! exhaustive enumeration.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::field::{self, is_prime, rank_mod};
use crate::graph::{EdgeIdx, GraphError, NetworkGraph, NodeIdx, NodeRole};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum NetcodeError {
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error("modulus {0} is not prime")]
    NotPrime(u64),
    #[error("extended message space is empty")]
    EmptyExtendedSpace,
    #[error("node `{0}` is listed as a source more than once")]
    DuplicateSource(String),
    #[error("incomplete code: {0}")]
    IncompleteCode(String),
    #[error("message component index {0} out of range (message dimension {1})")]
    InvalidComponent(usize, usize),
    #[error("edge index {0} out of range")]
    InvalidEdge(usize),
    #[error("enumeration needs {needed} states, above the cap {cap}")]
    EnumerationCapExceeded { needed: u64, cap: u64 },
    #[error("search needs {needed} assignments, above the cap {cap}")]
    SearchCapExceeded { needed: u64, cap: u64 },
    #[error("code is not admissible: {0}")]
    NotAdmissible(String),
}

/// Per-source dimensions of the extended message space. Global layout puts
/// every source's message components first (in source order), then every
/// source's key components.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SourceSpec {
    pub node: String,
    pub message_dim: usize,
    pub key_dim: usize,
}

/// A user node and the message components it wants to decode.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UserSpec {
    pub node: String,
    /// Indices into the global message part of the extended space.
    pub wants: Vec<usize>,
}

/// A named eavesdropping pattern: the tapped node set and the message
/// components the adversary targets. Targets never index key components.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EavesdropPattern {
    pub id: String,
    pub nodes: Vec<String>,
    pub target: Vec<usize>,
}

/// Local coefficients for one edge: one weight per incoming edge of the
/// tail (in edge insertion order), plus one weight per extended component
/// owned by the tail when the tail is a source (messages first, then keys).
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EdgeCoefficients {
    #[serde(default)]
    pub from_edges: Vec<u64>,
    #[serde(default)]
    pub from_source: Vec<u64>,
}

/// Resolved layout of the extended space for a source list.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Layout {
    pub q: u64,
    pub message_dim: usize,
    pub key_dim: usize,
    /// For each source (in list order): global indices of its message
    /// components followed by its key components.
    pub per_source: Vec<Vec<usize>>,
}

impl Layout {
    pub fn new(q: u64, sources: &[SourceSpec]) -> Result<Self, NetcodeError> {
        if !is_prime(q) {
            return Err(NetcodeError::NotPrime(q));
        }
        let message_dim: usize = sources.iter().map(|s| s.message_dim).sum();
        let key_dim: usize = sources.iter().map(|s| s.key_dim).sum();
        if message_dim + key_dim == 0 {
            return Err(NetcodeError::EmptyExtendedSpace);
        }
        let mut per_source = Vec::with_capacity(sources.len());
        let mut next_msg = 0;
        let mut next_key = message_dim;
        for s in sources {
            let mut owned = Vec::with_capacity(s.message_dim + s.key_dim);
            for _ in 0..s.message_dim {
                owned.push(next_msg);
                next_msg += 1;
            }
            for _ in 0..s.key_dim {
                owned.push(next_key);
                next_key += 1;
            }
            per_source.push(owned);
        }
        Ok(Self {
            q,
            message_dim,
            key_dim,
            per_source,
        })
    }

    pub fn dim(&self) -> usize {
        self.message_dim + self.key_dim
    }

    /// Human-readable component name: m1..mM then k1..kK.
    pub fn component_name(&self, idx: usize) -> String {
        if idx < self.message_dim {
            format!("m{}", idx + 1)
        } else {
            format!("k{}", idx - self.message_dim + 1)
        }
    }
}

/// A propagated linear network code: every edge carries a global map, a
/// length-d row over GF(q) applied to the extended source vector.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LinearNetworkCode {
    graph: NetworkGraph,
    sources: Vec<SourceSpec>,
    layout: Layout,
    coefficients: Vec<EdgeCoefficients>,
    global: Vec<Vec<u64>>,
}

impl LinearNetworkCode {
    /// Forward-propagates local coefficients into global edge maps in
    /// topological order. Fails if any edge lacks a coefficient of the
    /// right arity.
    pub fn propagate(
        graph: &NetworkGraph,
        q: u64,
        sources: &[SourceSpec],
        coefficients: &[EdgeCoefficients],
    ) -> Result<Self, NetcodeError> {
        let layout = Layout::new(q, sources)?;
        if coefficients.len() != graph.edge_count() {
            return Err(NetcodeError::IncompleteCode(format!(
                "{} coefficient sets for {} edges",
                coefficients.len(),
                graph.edge_count()
            )));
        }
        let mut source_of: HashMap<NodeIdx, usize> = HashMap::new();
        for (i, s) in sources.iter().enumerate() {
            let idx = graph.find_node(&s.node)?;
            if source_of.insert(idx, i).is_some() {
                return Err(NetcodeError::DuplicateSource(s.node.clone()));
            }
        }
        let d = layout.dim();
        let mut global: Vec<Option<Vec<u64>>> = vec![None; graph.edge_count()];
        for &node in graph.topo_order() {
            let in_edges = graph.in_edges(node);
            for e in graph.out_edges(node) {
                let coeff = &coefficients[e.0];
                let label = &graph.edge(e).label;
                if coeff.from_edges.len() != in_edges.len() {
                    return Err(NetcodeError::IncompleteCode(format!(
                        "edge `{label}` has {} incoming-edge weights for {} incoming edges",
                        coeff.from_edges.len(),
                        in_edges.len()
                    )));
                }
                let mut row = vec![0u64; d];
                for (w, &in_e) in coeff.from_edges.iter().zip(&in_edges) {
                    let upstream = global[in_e.0]
                        .as_ref()
                        .expect("topological order guarantees upstream maps");
                    for c in 0..d {
                        let t = field::mul_mod(*w, upstream[c], q);
                        row[c] = field::add_mod(row[c], t, q);
                    }
                }
                match source_of.get(&node) {
                    Some(&si) => {
                        let owned = &layout.per_source[si];
                        if coeff.from_source.len() != owned.len() {
                            return Err(NetcodeError::IncompleteCode(format!(
                                "edge `{label}` has {} source weights for {} source components",
                                coeff.from_source.len(),
                                owned.len()
                            )));
                        }
                        for (w, &comp) in coeff.from_source.iter().zip(owned) {
                            row[comp] = field::add_mod(row[comp], *w % q, q);
                        }
                    }
                    None => {
                        if !coeff.from_source.is_empty() {
                            return Err(NetcodeError::IncompleteCode(format!(
                                "edge `{label}` has source weights but its tail is not a source"
                            )));
                        }
                    }
                }
                global[e.0] = Some(row);
            }
        }
        let global = global
            .into_iter()
            .enumerate()
            .map(|(i, g)| {
                g.ok_or_else(|| {
                    NetcodeError::IncompleteCode(format!("edge index {i} never propagated"))
                })
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self {
            graph: graph.clone(),
            sources: sources.to_vec(),
            layout,
            coefficients: coefficients.to_vec(),
            global,
        })
    }

    pub fn graph(&self) -> &NetworkGraph {
        &self.graph
    }

    pub fn q(&self) -> u64 {
        self.layout.q
    }

    pub fn layout(&self) -> &Layout {
        &self.layout
    }

    pub fn sources(&self) -> &[SourceSpec] {
        &self.sources
    }

    pub fn coefficients(&self) -> &[EdgeCoefficients] {
        &self.coefficients
    }

    pub fn global_map(&self, e: EdgeIdx) -> &[u64] {
        &self.global[e.0]
    }

    /// Evaluate the symbol carried by edge `e` for a concrete extended
    /// source vector.
    pub fn evaluate(&self, e: EdgeIdx, extended: &[u64]) -> u64 {
        let q = self.layout.q;
        self.global[e.0]
            .iter()
            .zip(extended)
            .fold(0u64, |acc, (&w, &x)| {
                field::add_mod(acc, field::mul_mod(w, x, q), q)
            })
    }

    fn selector_row(&self, component: usize) -> Vec<u64> {
        let mut row = vec![0u64; self.layout.dim()];
        row[component] = 1;
        row
    }

    fn validate_target(&self, target: &[usize]) -> Result<(), NetcodeError> {
        for &t in target {
            if t >= self.layout.message_dim {
                return Err(NetcodeError::InvalidComponent(t, self.layout.message_dim));
            }
        }
        Ok(())
    }

    fn validate_edges(&self, edges: &[EdgeIdx]) -> Result<(), NetcodeError> {
        for &e in edges {
            if e.0 >= self.graph.edge_count() {
                return Err(NetcodeError::InvalidEdge(e.0));
            }
        }
        Ok(())
    }

    /// H(target | observed) in log_q symbol units, via the rank identity
    /// for linear images of a uniform vector:
    /// rank(observed + selectors) - rank(observed).
    pub fn conditional_entropy_rank(
        &self,
        target: &[usize],
        observed: &[EdgeIdx],
    ) -> Result<usize, NetcodeError> {
        self.validate_target(target)?;
        self.validate_edges(observed)?;
        let mut obs_rows: Vec<Vec<u64>> =
            observed.iter().map(|&e| self.global[e.0].clone()).collect();
        let base = rank_mod(&obs_rows, self.layout.q);
        for &t in target {
            obs_rows.push(self.selector_row(t));
        }
        Ok(rank_mod(&obs_rows, self.layout.q) - base)
    }

    /// Independent oracle for `conditional_entropy_rank`: enumerates all
    /// q^d extended vectors and tabulates the exact joint distribution of
    /// (target, observed) symbols. Result in log_q units.
    pub fn brute_force_entropy(
        &self,
        target: &[usize],
        observed: &[EdgeIdx],
        cap: u64,
    ) -> Result<f64, NetcodeError> {
        self.validate_target(target)?;
        self.validate_edges(observed)?;
        let q = self.layout.q;
        let d = self.layout.dim();
        let mut states = 1u64;
        for _ in 0..d {
            states = states
                .checked_mul(q)
                .filter(|&s| s <= cap)
                .ok_or(NetcodeError::EnumerationCapExceeded {
                    needed: u64::MAX,
                    cap,
                })?;
        }
        let mut joint: HashMap<Vec<u64>, HashMap<Vec<u64>, u64>> = HashMap::new();
        let mut x = vec![0u64; d];
        loop {
            let obs: Vec<u64> = observed.iter().map(|&e| self.evaluate(e, &x)).collect();
            let tgt: Vec<u64> = target.iter().map(|&t| x[t]).collect();
            *joint.entry(obs).or_default().entry(tgt).or_insert(0) += 1;
            // odometer increment
            let mut i = 0;
            loop {
                if i == d {
                    let total = states as f64;
                    let ln_q = (q as f64).ln();
                    let mut h = 0.0;
                    for by_target in joint.values() {
                        let n_o: u64 = by_target.values().sum();
                        let p_o = n_o as f64 / total;
                        let mut h_cond = 0.0;
                        for &n_to in by_target.values() {
                            let p = n_to as f64 / n_o as f64;
                            h_cond -= p * p.ln() / ln_q;
                        }
                        h += p_o * h_cond;
                    }
                    return Ok(h);
                }
                x[i] += 1;
                if x[i] < q {
                    break;
                }
                x[i] = 0;
                i += 1;
            }
        }
    }

    /// Edges whose symbols reach user `u`: the maps of all edges into u.
    pub fn user_view(&self, node: NodeIdx) -> Vec<EdgeIdx> {
        self.graph.in_edges(node)
    }

    /// The eavesdropper's view for a pattern: all edges adjacent (incoming
    /// or outgoing) to any tapped node.
    pub fn pattern_view(&self, pattern: &EavesdropPattern) -> Result<Vec<EdgeIdx>, NetcodeError> {
        let mut seen = vec![false; self.graph.edge_count()];
        for name in &pattern.nodes {
            let n = self.graph.find_node(name)?;
            for e in self.graph.adjacency(n) {
                seen[e.0] = true;
            }
        }
        Ok(seen
            .iter()
            .enumerate()
            .filter(|(_, &s)| s)
            .map(|(i, _)| EdgeIdx(i))
            .collect())
    }
}

/// Per-user decodability entry of an admissibility report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UserReport {
    pub node: String,
    pub wants: Vec<String>,
    pub residual_entropy: usize,
    pub decodable: bool,
}

/// Per-pattern security entry of an admissibility report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PatternReport {
    pub id: String,
    pub target: Vec<String>,
    pub prior_entropy: usize,
    pub conditional_entropy: usize,
    pub secure: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdmissibilityReport {
    pub q: u64,
    pub users: Vec<UserReport>,
    pub patterns: Vec<PatternReport>,
    pub admissible: bool,
}

impl AdmissibilityReport {
    /// Entropy unit conversion for display: log_q symbols to bits.
    pub fn bits(&self, units: usize) -> f64 {
        units as f64 * (self.q as f64).log2()
    }
}

/// Certifies the secure and decodable conditions: every user recovers its
/// wanted components with zero residual entropy and every pattern's
/// conditional entropy of its target equals the prior.
pub fn check_admissible(
    code: &LinearNetworkCode,
    users: &[UserSpec],
    patterns: &[EavesdropPattern],
) -> Result<AdmissibilityReport, NetcodeError> {
    let mut user_reports = Vec::with_capacity(users.len());
    for u in users {
        let node = code.graph().find_node(&u.node)?;
        let view = code.user_view(node);
        let residual = code.conditional_entropy_rank(&u.wants, &view)?;
        user_reports.push(UserReport {
            node: u.node.clone(),
            wants: u
                .wants
                .iter()
                .map(|&c| code.layout().component_name(c))
                .collect(),
            residual_entropy: residual,
            decodable: residual == 0,
        });
    }
    let mut pattern_reports = Vec::with_capacity(patterns.len());
    for p in patterns {
        let view = code.pattern_view(p)?;
        let prior = p.target.len();
        let cond = code.conditional_entropy_rank(&p.target, &view)?;
        pattern_reports.push(PatternReport {
            id: p.id.clone(),
            target: p
                .target
                .iter()
                .map(|&c| code.layout().component_name(c))
                .collect(),
            prior_entropy: prior,
            conditional_entropy: cond,
            secure: cond == prior,
        });
    }
    let admissible = user_reports.iter().all(|u| u.decodable)
        && pattern_reports.iter().all(|p| p.secure);
    Ok(AdmissibilityReport {
        q: code.q(),
        users: user_reports,
        patterns: pattern_reports,
        admissible,
    })
}

/// Exhaustive search for an admissible code: local coefficient assignments
/// are enumerated in lexicographic order over [0,q)^free and the first
/// admissible one is returned.
pub fn search_code(
    graph: &NetworkGraph,
    q: u64,
    sources: &[SourceSpec],
    users: &[UserSpec],
    patterns: &[EavesdropPattern],
    cap: u64,
) -> Result<Option<LinearNetworkCode>, NetcodeError> {
    let layout = Layout::new(q, sources)?;
    let mut source_dims: HashMap<NodeIdx, usize> = HashMap::new();
    for (i, s) in sources.iter().enumerate() {
        source_dims.insert(graph.find_node(&s.node)?, layout.per_source[i].len());
    }
    // Slot map: per edge, (incoming-edge weights, source weights).
    let mut arity: Vec<(usize, usize)> = Vec::with_capacity(graph.edge_count());
    let mut free = 0usize;
    for (_, e) in graph.edges() {
        let n_in = graph.in_edges(e.tail).len();
        let n_src = source_dims.get(&e.tail).copied().unwrap_or(0);
        arity.push((n_in, n_src));
        free += n_in + n_src;
    }
    let mut needed = 1u64;
    for _ in 0..free {
        needed = needed
            .checked_mul(q)
            .ok_or(NetcodeError::SearchCapExceeded {
                needed: u64::MAX,
                cap,
            })?;
        if needed > cap {
            return Err(NetcodeError::SearchCapExceeded { needed, cap });
        }
    }
    let mut slots = vec![0u64; free];
    loop {
        let mut coefficients = Vec::with_capacity(arity.len());
        let mut cursor = 0usize;
        for &(n_in, n_src) in &arity {
            coefficients.push(EdgeCoefficients {
                from_edges: slots[cursor..cursor + n_in].to_vec(),
                from_source: slots[cursor + n_in..cursor + n_in + n_src].to_vec(),
            });
            cursor += n_in + n_src;
        }
        let code = LinearNetworkCode::propagate(graph, q, sources, &coefficients)?;
        if check_admissible(&code, users, patterns)?.admissible {
            return Ok(Some(code));
        }
        // Lexicographic increment: the last slot varies fastest.
        let mut i = free;
        loop {
            if i == 0 {
                return Ok(None);
            }
            i -= 1;
            slots[i] += 1;
            if slots[i] < q {
                break;
            }
            slots[i] = 0;
        }
    }
}

/// A canonical scenario bundle: graph, propagated code, users, patterns.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub graph: NetworkGraph,
    pub q: u64,
    pub sources: Vec<SourceSpec>,
    pub code: LinearNetworkCode,
    pub users: Vec<UserSpec>,
    pub patterns: Vec<EavesdropPattern>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScenarioName {
    TwoPath,
    Multicast,
    Crossed,
}

impl std::str::FromStr for ScenarioName {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "two_path" => Ok(Self::TwoPath),
            "multicast" => Ok(Self::Multicast),
            "crossed" => Ok(Self::Crossed),
            other => Err(format!("unknown scenario `{other}`")),
        }
    }
}

/// Canonical instantiations of the three reference scenarios, all over
/// GF(3): the two-path relay, its multicast extension, and the crossed
/// pairwise exchange with a randomizing node.
pub fn builtin_scenario(name: ScenarioName) -> Scenario {
    match name {
        ScenarioName::TwoPath => two_path_scenario(),
        ScenarioName::Multicast => multicast_scenario(),
        ScenarioName::Crossed => crossed_scenario(),
    }
}

fn two_path_scenario() -> Scenario {
    let graph = NetworkGraph::build(
        vec![
            ("s".into(), NodeRole::Source),
            ("t1".into(), NodeRole::Intermediate),
            ("t2".into(), NodeRole::Intermediate),
            ("u".into(), NodeRole::User),
        ],
        vec![
            ("s".into(), "t1".into()),
            ("s".into(), "t2".into()),
            ("t1".into(), "u".into()),
            ("t2".into(), "u".into()),
        ],
    )
    .unwrap();
    let sources = vec![SourceSpec {
        node: "s".into(),
        message_dim: 1,
        key_dim: 1,
    }];
    // s -> t1 carries m+k, s -> t2 carries k; both forwarded unchanged.
    let coefficients = vec![
        EdgeCoefficients {
            from_edges: vec![],
            from_source: vec![1, 1],
        },
        EdgeCoefficients {
            from_edges: vec![],
            from_source: vec![0, 1],
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
    let code = LinearNetworkCode::propagate(&graph, 3, &sources, &coefficients).unwrap();
    Scenario {
        graph,
        q: 3,
        sources,
        code,
        users: vec![UserSpec {
            node: "u".into(),
            wants: vec![0],
        }],
        patterns: vec![
            EavesdropPattern {
                id: "t1".into(),
                nodes: vec!["t1".into()],
                target: vec![0],
            },
            EavesdropPattern {
                id: "t2".into(),
                nodes: vec!["t2".into()],
                target: vec![0],
            },
        ],
    }
}

fn multicast_scenario() -> Scenario {
    let graph = NetworkGraph::build(
        vec![
            ("s".into(), NodeRole::Source),
            ("t1".into(), NodeRole::Intermediate),
            ("t2".into(), NodeRole::Intermediate),
            ("u1".into(), NodeRole::User),
            ("u2".into(), NodeRole::User),
        ],
        vec![
            ("s".into(), "t1".into()),
            ("s".into(), "t2".into()),
            ("t1".into(), "u1".into()),
            ("t2".into(), "u1".into()),
            ("t1".into(), "u2".into()),
            ("t2".into(), "u2".into()),
        ],
    )
    .unwrap();
    let sources = vec![SourceSpec {
        node: "s".into(),
        message_dim: 1,
        key_dim: 1,
    }];
    let fwd = |w: u64| EdgeCoefficients {
        from_edges: vec![w],
        from_source: vec![],
    };
    let coefficients = vec![
        EdgeCoefficients {
            from_edges: vec![],
            from_source: vec![1, 1],
        },
        EdgeCoefficients {
            from_edges: vec![],
            from_source: vec![0, 1],
        },
        fwd(1),
        fwd(1),
        fwd(1),
        fwd(1),
    ];
    let code = LinearNetworkCode::propagate(&graph, 3, &sources, &coefficients).unwrap();
    Scenario {
        graph,
        q: 3,
        sources,
        code,
        users: vec![
            UserSpec {
                node: "u1".into(),
                wants: vec![0],
            },
            UserSpec {
                node: "u2".into(),
                wants: vec![0],
            },
        ],
        patterns: vec![
            EavesdropPattern {
                id: "t1".into(),
                nodes: vec!["t1".into()],
                target: vec![0],
            },
            EavesdropPattern {
                id: "t2".into(),
                nodes: vec!["t2".into()],
                target: vec![0],
            },
        ],
    }
}

fn crossed_scenario() -> Scenario {
    // t1 is a randomizing node: it owns the key component and distributes
    // it to the sources and the users; t2 centralizes the padded messages.
    let graph = NetworkGraph::build(
        vec![
            ("t1".into(), NodeRole::Intermediate),
            ("s1".into(), NodeRole::Source),
            ("s2".into(), NodeRole::Source),
            ("t2".into(), NodeRole::Intermediate),
            ("u1".into(), NodeRole::User),
            ("u2".into(), NodeRole::User),
        ],
        vec![
            ("t1".into(), "s1".into()),
            ("t1".into(), "s2".into()),
            ("t1".into(), "u1".into()),
            ("t1".into(), "u2".into()),
            ("s1".into(), "t2".into()),
            ("s2".into(), "t2".into()),
            ("t2".into(), "u1".into()),
            ("t2".into(), "u2".into()),
        ],
    )
    .unwrap();
    let sources = vec![
        SourceSpec {
            node: "s1".into(),
            message_dim: 1,
            key_dim: 0,
        },
        SourceSpec {
            node: "s2".into(),
            message_dim: 1,
            key_dim: 0,
        },
        SourceSpec {
            node: "t1".into(),
            message_dim: 0,
            key_dim: 1,
        },
    ];
    let key_out = EdgeCoefficients {
        from_edges: vec![],
        from_source: vec![1],
    };
    let coefficients = vec![
        key_out.clone(), // t1 -> s1: k
        key_out.clone(), // t1 -> s2: k
        key_out.clone(), // t1 -> u1: k
        key_out,         // t1 -> u2: k
        EdgeCoefficients {
            from_edges: vec![1],
            from_source: vec![1],
        }, // s1 -> t2: m1 + k
        EdgeCoefficients {
            from_edges: vec![1],
            from_source: vec![1],
        }, // s2 -> t2: m2 + k
        EdgeCoefficients {
            from_edges: vec![0, 1],
            from_source: vec![],
        }, // t2 -> u1: m2 + k
        EdgeCoefficients {
            from_edges: vec![1, 0],
            from_source: vec![],
        }, // t2 -> u2: m1 + k
    ];
    let code = LinearNetworkCode::propagate(&graph, 3, &sources, &coefficients).unwrap();
    Scenario {
        graph,
        q: 3,
        sources,
        code,
        users: vec![
            UserSpec {
                node: "u1".into(),
                wants: vec![1],
            },
            UserSpec {
                node: "u2".into(),
                wants: vec![0],
            },
        ],
        patterns: vec![
            EavesdropPattern {
                id: "t1".into(),
                nodes: vec!["t1".into()],
                target: vec![0, 1],
            },
            EavesdropPattern {
                id: "t2-m1".into(),
                nodes: vec!["t2".into()],
                target: vec![0],
            },
            EavesdropPattern {
                id: "t2-m2".into(),
                nodes: vec!["t2".into()],
                target: vec![1],
            },
        ],
    }
}

/// Serde schema for a network scenario file: graph plus the trust
/// requirements (users and eavesdropping patterns).
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct NetworkFile {
    pub schema_version: u32,
    pub graph: crate::graph::GraphSpec,
    /// Extended-space dimensions per source; when empty, every source-role
    /// node defaults to one message and one key component.
    #[serde(default)]
    pub sources: Vec<SourceSpec>,
    pub users: Vec<UserSpec>,
    pub patterns: Vec<EavesdropPattern>,
}

impl NetworkFile {
    /// Sources as declared, or the one-message-one-key default for every
    /// source-role node of the graph.
    pub fn resolved_sources(&self) -> Vec<SourceSpec> {
        if !self.sources.is_empty() {
            return self.sources.clone();
        }
        self.graph
            .nodes
            .iter()
            .filter(|n| n.role == NodeRole::Source)
            .map(|n| SourceSpec {
                node: n.name.clone(),
                message_dim: 1,
                key_dim: 1,
            })
            .collect()
    }
}

/// Serde schema for a code file: field, source dimensions and per-edge
/// local coefficients, keyed by edge label.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct CodeFile {
    pub schema_version: u32,
    pub q: u64,
    pub sources: Vec<SourceSpec>,
    pub coefficients: Vec<NamedCoefficients>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct NamedCoefficients {
    pub edge: String,
    #[serde(default)]
    pub from_edges: Vec<u64>,
    #[serde(default)]
    pub from_source: Vec<u64>,
}

impl CodeFile {
    pub fn from_code(code: &LinearNetworkCode) -> Self {
        Self {
            schema_version: 1,
            q: code.q(),
            sources: code.sources().to_vec(),
            coefficients: code
                .graph()
                .edges()
                .zip(code.coefficients())
                .map(|((_, e), c)| NamedCoefficients {
                    edge: e.label.clone(),
                    from_edges: c.from_edges.clone(),
                    from_source: c.from_source.clone(),
                })
                .collect(),
        }
    }

    /// Resolve against a graph (matching coefficients to edges by label)
    /// and propagate.
    pub fn into_code(&self, graph: &NetworkGraph) -> Result<LinearNetworkCode, NetcodeError> {
        let by_label: HashMap<&str, &NamedCoefficients> = self
            .coefficients
            .iter()
            .map(|c| (c.edge.as_str(), c))
            .collect();
        let mut coefficients = Vec::with_capacity(graph.edge_count());
        for (_, e) in graph.edges() {
            let named = by_label.get(e.label.as_str()).ok_or_else(|| {
                NetcodeError::IncompleteCode(format!("no coefficients for edge `{}`", e.label))
            })?;
            coefficients.push(EdgeCoefficients {
                from_edges: named.from_edges.clone(),
                from_source: named.from_source.clone(),
            });
        }
        LinearNetworkCode::propagate(graph, self.q, &self.sources, &coefficients)
    }
}

pub const DEFAULT_ENUM_CAP: u64 = 531_441; // 3^12
pub const DEFAULT_SEARCH_CAP: u64 = 10_000_000;
