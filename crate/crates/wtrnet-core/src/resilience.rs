//! Robustness quantities: internally node-disjoint path counting via
//! unit-capacity max flow on the node-split transform, Byzantine tolerance
//! bounds, secure rate bounds and the authenticity feasibility condition.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{GraphError, NetworkGraph, NodeIdx};
use crate::netcode::EavesdropPattern;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ResilienceError {
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error("source and user must differ")]
    SameEndpoints,
}

/// A witness set of internally node-disjoint directed paths, as node-name
/// sequences from source to user.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DisjointPaths {
    pub count: usize,
    pub paths: Vec<Vec<String>>,
}

/// Maximum number of internally node-disjoint directed s-u paths, with a
/// deterministic witness (ties broken by edge insertion order).
pub fn node_disjoint_paths(
    graph: &NetworkGraph,
    source: &str,
    user: &str,
) -> Result<DisjointPaths, ResilienceError> {
    let s = graph.find_node(source)?;
    let u = graph.find_node(user)?;
    if s == u {
        return Err(ResilienceError::SameEndpoints);
    }
    // Node-split transform: node i becomes in-vertex 2i and out-vertex
    // 2i+1 joined by a capacity-1 arc (unbounded for the endpoints).
    let n = graph.node_count();
    let unbounded = graph.edge_count() + 1;
    let mut arcs: Vec<(usize, usize, usize)> = Vec::new(); // (from, to, cap)
    for i in 0..n {
        let cap = if NodeIdx(i) == s || NodeIdx(i) == u {
            unbounded
        } else {
            1
        };
        arcs.push((2 * i, 2 * i + 1, cap));
    }
    for (_, e) in graph.edges() {
        arcs.push((2 * e.tail.0 + 1, 2 * e.head.0, 1));
    }
    let mut flow = vec![0isize; arcs.len()];
    let src = 2 * s.0 + 1;
    let dst = 2 * u.0;
    loop {
        // BFS over the residual graph; arcs scanned in insertion order.
        let mut prev: Vec<Option<(usize, bool)>> = vec![None; 2 * n]; // (arc, forward)
        let mut visited = vec![false; 2 * n];
        visited[src] = true;
        let mut queue = std::collections::VecDeque::from([src]);
        while let Some(v) = queue.pop_front() {
            for (ai, &(from, to, cap)) in arcs.iter().enumerate() {
                if from == v && (flow[ai] as usize) < cap && !visited[to] {
                    visited[to] = true;
                    prev[to] = Some((ai, true));
                    queue.push_back(to);
                } else if to == v && flow[ai] > 0 && !visited[from] {
                    visited[from] = true;
                    prev[from] = Some((ai, false));
                    queue.push_back(from);
                }
            }
        }
        if !visited[dst] {
            break;
        }
        let mut v = dst;
        while v != src {
            let (ai, forward) = prev[v].unwrap();
            if forward {
                flow[ai] += 1;
                v = arcs[ai].0;
            } else {
                flow[ai] -= 1;
                v = arcs[ai].1;
            }
        }
    }
    // Decompose the integral flow into paths over original nodes.
    let mut residual: Vec<isize> = flow.clone();
    let mut paths = Vec::new();
    loop {
        let mut path = vec![s];
        let mut v = src;
        let mut progressed = false;
        while v != dst {
            let Some(ai) = arcs
                .iter()
                .enumerate()
                .position(|(ai, &(from, _, _))| from == v && residual[ai] > 0)
            else {
                break;
            };
            residual[ai] -= 1;
            v = arcs[ai].1;
            progressed = true;
            if v % 2 == 0 {
                path.push(NodeIdx(v / 2));
            } else {
                // crossing a split arc inside a node; nothing to record
            }
        }
        if v == dst && progressed {
            paths.push(
                path.iter()
                    .map(|&i| graph.node(i).name.clone())
                    .collect::<Vec<_>>(),
            );
        } else {
            break;
        }
    }
    Ok(DisjointPaths {
        count: paths.len(),
        paths,
    })
}

/// Largest t with 3t+1 <= path_count; `None` when no path exists at all.
pub fn byzantine_bound(path_count: usize) -> Option<usize> {
    if path_count == 0 {
        None
    } else {
        Some((path_count - 1) / 3)
    }
}

/// Secure transmission rate bound C - t, clamped at zero.
pub fn secure_rate_bound(capacity: usize, t: usize) -> usize {
    capacity.saturating_sub(t)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AuthenticityEntry {
    pub pattern: String,
    pub feasible: bool,
}

/// A pattern leaves authenticity feasible iff at least one path has no
/// internal node in the tapped set.
pub fn authenticity_feasible(
    paths: &DisjointPaths,
    patterns: &[EavesdropPattern],
) -> Vec<AuthenticityEntry> {
    patterns
        .iter()
        .map(|p| {
            let feasible = paths.paths.iter().any(|path| {
                let internal = &path[1..path.len().saturating_sub(1)];
                internal.iter().all(|n| !p.nodes.contains(n))
            });
            AuthenticityEntry {
                pattern: p.id.clone(),
                feasible,
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResilienceReport {
    pub source: String,
    pub user: String,
    pub disjoint_path_count: usize,
    pub paths: Vec<Vec<String>>,
    /// None when the user is unreachable.
    pub max_byzantine_t: Option<usize>,
    /// C - t at the maximum tolerated t, with C the disjoint-path count.
    pub secure_rate_bound: usize,
    pub authenticity: Vec<AuthenticityEntry>,
    pub authenticity_feasible: bool,
}

pub fn analyze(
    graph: &NetworkGraph,
    source: &str,
    user: &str,
    patterns: &[EavesdropPattern],
) -> Result<ResilienceReport, ResilienceError> {
    let paths = node_disjoint_paths(graph, source, user)?;
    let max_t = byzantine_bound(paths.count);
    let authenticity = authenticity_feasible(&paths, patterns);
    let feasible = !authenticity.is_empty() && authenticity.iter().all(|a| a.feasible)
        || authenticity.is_empty() && paths.count > 0;
    Ok(ResilienceReport {
        source: source.to_string(),
        user: user.to_string(),
        disjoint_path_count: paths.count,
        paths: paths.paths,
        max_byzantine_t: max_t,
        secure_rate_bound: secure_rate_bound(paths.count, max_t.unwrap_or(0)),
        authenticity,
        authenticity_feasible: feasible,
    })
}
