//! End-to-end key relay simulation: the fully trusted hop-by-hop chain
//! versus the weakly trusted exchange driven by a linear network code,
//! with exact leakage audits and effective throughput accounting.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::field::{self, express_in_span, rank_mod};
use crate::graph::EdgeIdx;
use crate::netcode::{
    check_admissible, EavesdropPattern, LinearNetworkCode, NetcodeError, UserSpec,
};

#[derive(Debug, Error, PartialEq)]
pub enum RelayError {
    #[error("a relay chain needs at least one link")]
    EmptyChain,
    #[error("code is not admissible: {0} (pass override to simulate anyway)")]
    NotAdmissible(String),
    #[error("no rate given for edge `{0}`")]
    MissingRate(String),
    #[error("message has {0} symbols but the code carries {1}")]
    MessageDimension(usize, usize),
    #[error(transparent)]
    Netcode(#[from] NetcodeError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RelayMode {
    TrustedChain,
    Wtr,
}

/// One public transmission: the symbol carried by a classical or coded
/// edge during the session.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Transmission {
    pub edge: String,
    pub symbol: u64,
}

/// Everything a node observed during the session.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NodeView {
    pub node: String,
    /// (label, symbol) pairs: adjacent edge symbols plus any local keys.
    pub observed: Vec<(String, u64)>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Delivered {
    pub user: String,
    /// Decoded wanted components; None when the view does not determine one.
    pub symbols: Vec<Option<u64>>,
}

/// Full transcript of one relay run; replayable from the recorded seed.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RelaySession {
    pub mode: RelayMode,
    pub q: u64,
    pub seed: u64,
    pub message: Vec<u64>,
    /// Per-link (trusted chain) or per-key-component (wtr) drawn symbols.
    pub keys: Vec<(String, u64)>,
    pub transmissions: Vec<Transmission>,
    pub views: Vec<NodeView>,
    pub delivered: Vec<Delivered>,
}

impl RelaySession {
    /// Structured-text export: per-edge symbols, per-node views, audit.
    pub fn transcript(&self, audit: &LeakageAudit) -> String {
        let mut out = String::new();
        out.push_str(&format!(
            "mode: {}  q: {}  seed: {}\nmessage: {:?}\n",
            match self.mode {
                RelayMode::TrustedChain => "trusted_chain",
                RelayMode::Wtr => "wtr",
            },
            self.q,
            self.seed,
            self.message,
        ));
        out.push_str("transmissions:\n");
        for t in &self.transmissions {
            out.push_str(&format!("  {} = {}\n", t.edge, t.symbol));
        }
        out.push_str("views:\n");
        for v in &self.views {
            let parts: Vec<String> = v
                .observed
                .iter()
                .map(|(l, s)| format!("{l}={s}"))
                .collect();
            out.push_str(&format!("  {}: {}\n", v.node, parts.join(", ")));
        }
        out.push_str("delivered:\n");
        for d in &self.delivered {
            let rendered: Vec<String> = d
                .symbols
                .iter()
                .map(|s| s.map_or_else(|| "?".into(), |v| v.to_string()))
                .collect();
            out.push_str(&format!("  {}: [{}]\n", d.user, rendered.join(", ")));
        }
        out.push_str("audit:\n");
        for e in &audit.entries {
            out.push_str(&format!(
                "  {}: prior {} posterior {} -> {}\n",
                e.pattern,
                e.prior_entropy,
                e.posterior_entropy,
                e.verdict.label()
            ));
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    FullyLeaked,
    PartiallyLeaked,
    Secure,
}

impl Verdict {
    pub fn label(&self) -> &'static str {
        match self {
            Verdict::FullyLeaked => "fully_leaked",
            Verdict::PartiallyLeaked => "partially_leaked",
            Verdict::Secure => "secure",
        }
    }

    fn from_entropies(prior: usize, posterior: usize) -> Self {
        if posterior == prior {
            Verdict::Secure
        } else if posterior == 0 {
            Verdict::FullyLeaked
        } else {
            Verdict::PartiallyLeaked
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AuditEntry {
    pub pattern: String,
    pub prior_entropy: usize,
    pub posterior_entropy: usize,
    pub verdict: Verdict,
}

/// Exact per-pattern leakage, in log_q symbol units, computed with the
/// same rank machinery as the admissibility check.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LeakageAudit {
    pub entries: Vec<AuditEntry>,
}

/// Relays one message symbol over an ordered chain of QKD links with a
/// fully trusted repeater between consecutive links. Each link i draws
/// its own pad r_i; the public transmission on link i is m + r_i, and the
/// repeater between links i and i+1 knows r_i, r_i+1 and the ciphertext.
pub fn simulate_trusted_chain(
    links: &[String],
    q: u64,
    message: u64,
    seed: u64,
) -> Result<(RelaySession, LeakageAudit), RelayError> {
    if links.is_empty() {
        return Err(RelayError::EmptyChain);
    }
    if !crate::field::is_prime(q) {
        return Err(RelayError::Netcode(NetcodeError::NotPrime(q)));
    }
    let m = message % q;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pads: Vec<u64> = links.iter().map(|_| rng.gen_range(0..q)).collect();
    let keys: Vec<(String, u64)> = links
        .iter()
        .zip(&pads)
        .map(|(l, &r)| (format!("r[{l}]"), r))
        .collect();
    let transmissions: Vec<Transmission> = links
        .iter()
        .zip(&pads)
        .map(|(l, &r)| Transmission {
            edge: l.clone(),
            symbol: field::add_mod(m, r, q),
        })
        .collect();
    // Repeater i sits between links i and i+1 and sees both pads plus the
    // incoming ciphertext.
    let mut views = Vec::new();
    for i in 0..links.len() - 1 {
        views.push(NodeView {
            node: format!("repeater{}", i + 1),
            observed: vec![
                (format!("r[{}]", links[i]), pads[i]),
                (format!("r[{}]", links[i + 1]), pads[i + 1]),
                (links[i].clone(), transmissions[i].symbol),
            ],
        });
    }
    let delivered = vec![Delivered {
        user: "user".into(),
        symbols: vec![Some(field::sub_mod(
            transmissions[links.len() - 1].symbol,
            pads[links.len() - 1],
            q,
        ))],
    }];
    // Audit over the linear space (m, r_1..r_L): repeater i's view rows
    // are the two pad selectors and m + r_i.
    let dim = 1 + links.len();
    let mut entries = Vec::new();
    let selector = |c: usize| {
        let mut row = vec![0u64; dim];
        row[c] = 1;
        row
    };
    for i in 0..links.len() - 1 {
        let mut cipher = vec![0u64; dim];
        cipher[0] = 1;
        cipher[1 + i] = 1;
        let view_rows = vec![selector(1 + i), selector(2 + i), cipher];
        let base = rank_mod(&view_rows, q);
        let mut with_target = view_rows.clone();
        with_target.push(selector(0));
        let posterior = rank_mod(&with_target, q) - base;
        entries.push(AuditEntry {
            pattern: format!("repeater{}", i + 1),
            prior_entropy: 1,
            posterior_entropy: posterior,
            verdict: Verdict::from_entropies(1, posterior),
        });
    }
    let session = RelaySession {
        mode: RelayMode::TrustedChain,
        q,
        seed,
        message: vec![m],
        keys,
        transmissions,
        views,
        delivered,
    };
    Ok((session, LeakageAudit { entries }))
}

/// Runs one weakly-trusted exchange: draws the key components uniformly
/// from the seeded generator, evaluates every edge symbol under the code,
/// assembles each node's view and decodes each user's wanted components.
/// Refuses non-admissible codes unless `override_admissibility` is set.
pub fn simulate_wtr_exchange(
    code: &LinearNetworkCode,
    users: &[UserSpec],
    patterns: &[EavesdropPattern],
    message: &[u64],
    seed: u64,
    override_admissibility: bool,
) -> Result<(RelaySession, LeakageAudit), RelayError> {
    let layout = code.layout();
    if message.len() != layout.message_dim {
        return Err(RelayError::MessageDimension(
            message.len(),
            layout.message_dim,
        ));
    }
    let report = check_admissible(code, users, patterns)?;
    if !report.admissible && !override_admissibility {
        let failing: Vec<String> = report
            .users
            .iter()
            .filter(|u| !u.decodable)
            .map(|u| format!("user {}", u.node))
            .chain(
                report
                    .patterns
                    .iter()
                    .filter(|p| !p.secure)
                    .map(|p| format!("pattern {}", p.id)),
            )
            .collect();
        return Err(RelayError::NotAdmissible(failing.join(", ")));
    }
    let q = code.q();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut extended: Vec<u64> = message.iter().map(|&m| m % q).collect();
    let mut keys = Vec::new();
    for k in 0..layout.key_dim {
        let v = rng.gen_range(0..q);
        keys.push((layout.component_name(layout.message_dim + k), v));
        extended.push(v);
    }
    let graph = code.graph();
    let transmissions: Vec<Transmission> = graph
        .edges()
        .map(|(e, edge)| Transmission {
            edge: edge.label.clone(),
            symbol: code.evaluate(e, &extended),
        })
        .collect();
    let views: Vec<NodeView> = graph
        .nodes()
        .map(|(idx, node)| NodeView {
            node: node.name.clone(),
            observed: graph
                .adjacency(idx)
                .into_iter()
                .map(|e| (graph.edge(e).label.clone(), transmissions[e.0].symbol))
                .collect(),
        })
        .collect();
    // Users decode by expressing each wanted selector in the span of
    // their incoming edge maps.
    let mut delivered = Vec::new();
    for u in users {
        let node = graph.find_node(&u.node).map_err(NetcodeError::from)?;
        let in_edges: Vec<EdgeIdx> = code.user_view(node);
        let rows: Vec<Vec<u64>> = in_edges
            .iter()
            .map(|&e| code.global_map(e).to_vec())
            .collect();
        let mut symbols = Vec::new();
        for &want in &u.wants {
            let mut target = vec![0u64; layout.dim()];
            target[want] = 1;
            let decoded = express_in_span(&rows, &target, q).map(|combo| {
                combo
                    .iter()
                    .zip(&in_edges)
                    .fold(0u64, |acc, (&w, &e)| {
                        field::add_mod(acc, field::mul_mod(w, transmissions[e.0].symbol, q), q)
                    })
            });
            symbols.push(decoded);
        }
        delivered.push(Delivered {
            user: u.node.clone(),
            symbols,
        });
    }
    let entries = patterns
        .iter()
        .map(|p| {
            let view = code.pattern_view(p)?;
            let prior = p.target.len();
            let posterior = code.conditional_entropy_rank(&p.target, &view)?;
            Ok(AuditEntry {
                pattern: p.id.clone(),
                prior_entropy: prior,
                posterior_entropy: posterior,
                verdict: Verdict::from_entropies(prior, posterior),
            })
        })
        .collect::<Result<Vec<_>, NetcodeError>>()?;
    let session = RelaySession {
        mode: RelayMode::Wtr,
        q,
        seed,
        message: message.iter().map(|&m| m % q).collect(),
        keys,
        transmissions,
        views,
        delivered,
    };
    Ok((session, LeakageAudit { entries }))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThroughputReport {
    /// (edge label, bits/s) in edge order.
    pub per_link: Vec<(String, f64)>,
    pub effective_bits_per_s: f64,
    /// The binding edge.
    pub bottleneck: String,
}

/// End-to-end secret message rate: every edge carries one symbol per
/// message symbol, so the slowest used link binds.
pub fn effective_rate(
    code: &LinearNetworkCode,
    per_link_rates: &[(String, f64)],
) -> Result<ThroughputReport, RelayError> {
    let mut per_link = Vec::new();
    let mut best: Option<(String, f64)> = None;
    for (_, edge) in code.graph().edges() {
        let rate = per_link_rates
            .iter()
            .find(|(l, _)| l == &edge.label)
            .map(|&(_, r)| r)
            .ok_or_else(|| RelayError::MissingRate(edge.label.clone()))?;
        per_link.push((edge.label.clone(), rate));
        if best.as_ref().is_none_or(|(_, b)| rate < *b) {
            best = Some((edge.label.clone(), rate));
        }
    }
    let (bottleneck, effective) = best.ok_or(RelayError::EmptyChain)?;
    Ok(ThroughputReport {
        per_link,
        effective_bits_per_s: effective,
        bottleneck,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netcode::{builtin_scenario, EdgeCoefficients, ScenarioName};

    fn links(n: usize) -> Vec<String> {
        (1..=n).map(|i| format!("link{i}")).collect()
    }

    #[test]
    fn trusted_chain_repeater_fully_leaked() {
        let (session, audit) = simulate_trusted_chain(&links(2), 3, 2, 7).unwrap();
        assert_eq!(audit.entries.len(), 1);
        let e = &audit.entries[0];
        assert_eq!(e.posterior_entropy, 0);
        assert_eq!(e.verdict, Verdict::FullyLeaked);
        assert_eq!(session.delivered[0].symbols, vec![Some(2)]);
        // The repeater view holds both pads and the incoming ciphertext.
        assert_eq!(session.views[0].observed.len(), 3);
    }

    #[test]
    fn trusted_single_link_has_no_repeater() {
        let (session, audit) = simulate_trusted_chain(&links(1), 3, 1, 0).unwrap();
        assert!(audit.entries.is_empty());
        assert_eq!(session.delivered[0].symbols, vec![Some(1)]);
    }

    #[test]
    fn trusted_five_links_leak_everywhere() {
        let (session, audit) = simulate_trusted_chain(&links(5), 3, 2, 42).unwrap();
        assert_eq!(audit.entries.len(), 4);
        assert!(audit
            .entries
            .iter()
            .all(|e| e.verdict == Verdict::FullyLeaked));
        assert_eq!(session.delivered[0].symbols, vec![Some(2)]);
    }

    #[test]
    fn trusted_chain_rejects_empty() {
        assert_eq!(
            simulate_trusted_chain(&[], 3, 0, 0).unwrap_err(),
            RelayError::EmptyChain
        );
    }

    #[test]
    fn trusted_chain_correct_for_all_messages_and_seeds() {
        for q in [2u64, 3, 5] {
            for m in 0..q {
                for seed in 0..20 {
                    let (s, _) = simulate_trusted_chain(&links(3), q, m, seed).unwrap();
                    assert_eq!(s.delivered[0].symbols, vec![Some(m)]);
                }
            }
        }
    }

    #[test]
    fn wtr_two_path_decodes_and_stays_secure() {
        let sc = builtin_scenario(ScenarioName::TwoPath);
        let (session, audit) =
            simulate_wtr_exchange(&sc.code, &sc.users, &sc.patterns, &[2], 11, false).unwrap();
        assert_eq!(session.delivered[0].symbols, vec![Some(2)]);
        assert!(audit.entries.iter().all(|e| e.verdict == Verdict::Secure));
    }

    #[test]
    fn wtr_decoding_correct_for_every_seed() {
        let sc = builtin_scenario(ScenarioName::TwoPath);
        for m in 0..3 {
            for seed in 0..50 {
                let (s, _) =
                    simulate_wtr_exchange(&sc.code, &sc.users, &sc.patterns, &[m], seed, false)
                        .unwrap();
                assert_eq!(s.delivered[0].symbols, vec![Some(m)]);
            }
        }
    }

    #[test]
    fn wtr_rejects_naive_code_without_override() {
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
        let err = simulate_wtr_exchange(&code, &sc.users, &sc.patterns, &[1], 0, false)
            .unwrap_err();
        assert!(matches!(err, RelayError::NotAdmissible(_)));
        // With the override the audit shows full leakage at both repeaters.
        let (_, audit) =
            simulate_wtr_exchange(&code, &sc.users, &sc.patterns, &[1], 0, true).unwrap();
        assert!(audit
            .entries
            .iter()
            .all(|e| e.verdict == Verdict::FullyLeaked));
    }

    #[test]
    fn wtr_crossed_scenario_audit() {
        let sc = builtin_scenario(ScenarioName::Crossed);
        let (session, audit) =
            simulate_wtr_exchange(&sc.code, &sc.users, &sc.patterns, &[1, 2], 5, false).unwrap();
        // u1 wants m2, u2 wants m1.
        assert_eq!(session.delivered[0].symbols, vec![Some(2)]);
        assert_eq!(session.delivered[1].symbols, vec![Some(1)]);
        assert!(audit.entries.iter().all(|e| e.verdict == Verdict::Secure));
        // Joint target at t2 is only partially protected.
        let joint = EavesdropPattern {
            id: "t2-joint".into(),
            nodes: vec!["t2".into()],
            target: vec![0, 1],
        };
        let (_, audit) =
            simulate_wtr_exchange(&sc.code, &sc.users, &[joint], &[1, 2], 5, true).unwrap();
        assert_eq!(audit.entries[0].posterior_entropy, 1);
        assert_eq!(audit.entries[0].verdict, Verdict::PartiallyLeaked);
    }

    #[test]
    fn wtr_repeater_symbols_empirically_uniform() {
        let sc = builtin_scenario(ScenarioName::TwoPath);
        let mut counts = [[0u64; 3]; 2];
        let runs = 1000;
        for seed in 0..runs {
            let (s, _) =
                simulate_wtr_exchange(&sc.code, &sc.users, &sc.patterns, &[1], seed, false)
                    .unwrap();
            // s->t1 and s->t2 are the first two transmissions.
            counts[0][s.transmissions[0].symbol as usize] += 1;
            counts[1][s.transmissions[1].symbol as usize] += 1;
        }
        // Chi-square against uniform, df = 2, 1% critical value 9.21.
        for c in counts {
            let expect = runs as f64 / 3.0;
            let chi2: f64 = c
                .iter()
                .map(|&n| (n as f64 - expect).powi(2) / expect)
                .sum();
            assert!(chi2 < 9.21, "chi2 = {chi2}");
        }
    }

    #[test]
    fn sessions_replay_from_seed() {
        let sc = builtin_scenario(ScenarioName::TwoPath);
        let (a, _) =
            simulate_wtr_exchange(&sc.code, &sc.users, &sc.patterns, &[2], 99, false).unwrap();
        let (b, _) =
            simulate_wtr_exchange(&sc.code, &sc.users, &sc.patterns, &[2], 99, false).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn message_dimension_checked() {
        let sc = builtin_scenario(ScenarioName::TwoPath);
        let err = simulate_wtr_exchange(&sc.code, &sc.users, &sc.patterns, &[1, 2], 0, false)
            .unwrap_err();
        assert_eq!(err, RelayError::MessageDimension(2, 1));
    }

    #[test]
    fn effective_rate_min_rule() {
        let sc = builtin_scenario(ScenarioName::TwoPath);
        let labels: Vec<String> = sc
            .graph
            .edges()
            .map(|(_, e)| e.label.clone())
            .collect();
        let equal: Vec<(String, f64)> =
            labels.iter().map(|l| (l.clone(), 1000.0)).collect();
        let r = effective_rate(&sc.code, &equal).unwrap();
        assert_eq!(r.effective_bits_per_s, 1000.0);
        let mut uneven = equal.clone();
        uneven[1].1 = 400.0;
        let r = effective_rate(&sc.code, &uneven).unwrap();
        assert_eq!(r.effective_bits_per_s, 400.0);
        assert_eq!(r.bottleneck, labels[1]);
        assert!(r.effective_bits_per_s <= uneven.iter().map(|&(_, v)| v).fold(f64::MAX, f64::min));
    }

    #[test]
    fn effective_rate_requires_all_edges() {
        let sc = builtin_scenario(ScenarioName::TwoPath);
        let err = effective_rate(&sc.code, &[]).unwrap_err();
        assert!(matches!(err, RelayError::MissingRate(_)));
    }

    #[test]
    fn transcript_lists_everything() {
        let sc = builtin_scenario(ScenarioName::TwoPath);
        let (s, audit) =
            simulate_wtr_exchange(&sc.code, &sc.users, &sc.patterns, &[2], 1, false).unwrap();
        let text = s.transcript(&audit);
        assert!(text.contains("mode: wtr"));
        assert!(text.contains("transmissions:"));
        assert!(text.contains("secure"));
    }
}
