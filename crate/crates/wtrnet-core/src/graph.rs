//! Directed acyclic multigraph substrate shared by the code analyses.
//!
//! Nodes carry a role tag (source, user or intermediate) and edges are
//! unit-capacity; parallel edges model higher-capacity links.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum GraphError {
    #[error("graph contains a directed cycle")]
    NotAcyclic,
    #[error("unknown node `{0}`")]
    UnknownNode(String),
    #[error("duplicate node id `{0}`")]
    DuplicateNode(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NodeRole {
    Source,
    User,
    Intermediate,
}

/// Index of a node within its graph.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct NodeIdx(pub usize);

/// Index of an edge within its graph; edge order is insertion order and is
/// the tie-break used by every deterministic downstream analysis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct EdgeIdx(pub usize);

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Node {
    pub name: String,
    pub role: NodeRole,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Edge {
    pub label: String,
    pub tail: NodeIdx,
    pub head: NodeIdx,
}

/// Serde-facing description of a graph; validated into [`NetworkGraph`].
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Eq)]
pub struct GraphSpec {
    pub nodes: Vec<NodeSpec>,
    pub edges: Vec<EdgeSpec>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Eq)]
pub struct NodeSpec {
    pub name: String,
    pub role: NodeRole,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Eq)]
pub struct EdgeSpec {
    #[serde(default)]
    pub label: Option<String>,
    pub tail: String,
    pub head: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NetworkGraph {
    nodes: Vec<Node>,
    edges: Vec<Edge>,
    by_name: HashMap<String, NodeIdx>,
    topo: Vec<NodeIdx>,
}

impl NetworkGraph {
    /// Validates and builds a graph: unique node names, resolvable edge
    /// endpoints, acyclicity. The topological order is cached; ties are
    /// broken by node insertion order.
    pub fn build(
        nodes: impl IntoIterator<Item = (String, NodeRole)>,
        edges: impl IntoIterator<Item = (String, String)>,
    ) -> Result<Self, GraphError> {
        let specs: Vec<EdgeSpec> = edges
            .into_iter()
            .map(|(tail, head)| EdgeSpec {
                label: None,
                tail,
                head,
            })
            .collect();
        Self::from_spec(&GraphSpec {
            nodes: nodes
                .into_iter()
                .map(|(name, role)| NodeSpec { name, role })
                .collect(),
            edges: specs,
        })
    }

    pub fn from_spec(spec: &GraphSpec) -> Result<Self, GraphError> {
        let mut by_name = HashMap::new();
        let mut nodes = Vec::new();
        for n in &spec.nodes {
            if by_name
                .insert(n.name.clone(), NodeIdx(nodes.len()))
                .is_some()
            {
                return Err(GraphError::DuplicateNode(n.name.clone()));
            }
            nodes.push(Node {
                name: n.name.clone(),
                role: n.role,
            });
        }
        let mut edges = Vec::new();
        for e in &spec.edges {
            let tail = *by_name
                .get(&e.tail)
                .ok_or_else(|| GraphError::UnknownNode(e.tail.clone()))?;
            let head = *by_name
                .get(&e.head)
                .ok_or_else(|| GraphError::UnknownNode(e.head.clone()))?;
            let label = e
                .label
                .clone()
                .unwrap_or_else(|| format!("{}->{}#{}", e.tail, e.head, edges.len()));
            edges.push(Edge { label, tail, head });
        }
        let topo = toposort(nodes.len(), &edges)?;
        Ok(Self {
            nodes,
            edges,
            by_name,
            topo,
        })
    }

    pub fn to_spec(&self) -> GraphSpec {
        GraphSpec {
            nodes: self
                .nodes
                .iter()
                .map(|n| NodeSpec {
                    name: n.name.clone(),
                    role: n.role,
                })
                .collect(),
            edges: self
                .edges
                .iter()
                .map(|e| EdgeSpec {
                    label: Some(e.label.clone()),
                    tail: self.nodes[e.tail.0].name.clone(),
                    head: self.nodes[e.head.0].name.clone(),
                })
                .collect(),
        }
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn node(&self, idx: NodeIdx) -> &Node {
        &self.nodes[idx.0]
    }

    pub fn edge(&self, idx: EdgeIdx) -> &Edge {
        &self.edges[idx.0]
    }

    pub fn nodes(&self) -> impl Iterator<Item = (NodeIdx, &Node)> {
        self.nodes.iter().enumerate().map(|(i, n)| (NodeIdx(i), n))
    }

    pub fn edges(&self) -> impl Iterator<Item = (EdgeIdx, &Edge)> {
        self.edges.iter().enumerate().map(|(i, e)| (EdgeIdx(i), e))
    }

    pub fn find_node(&self, name: &str) -> Result<NodeIdx, GraphError> {
        self.by_name
            .get(name)
            .copied()
            .ok_or_else(|| GraphError::UnknownNode(name.to_string()))
    }

    /// Cached topological order: for every edge, tail precedes head.
    pub fn topo_order(&self) -> &[NodeIdx] {
        &self.topo
    }

    /// All edges adjacent to `node` (incoming and outgoing), in edge
    /// insertion order. This is the eavesdropper's view boundary.
    pub fn adjacency(&self, node: NodeIdx) -> Vec<EdgeIdx> {
        self.edges
            .iter()
            .enumerate()
            .filter(|(_, e)| e.tail == node || e.head == node)
            .map(|(i, _)| EdgeIdx(i))
            .collect()
    }

    pub fn in_edges(&self, node: NodeIdx) -> Vec<EdgeIdx> {
        self.edges
            .iter()
            .enumerate()
            .filter(|(_, e)| e.head == node)
            .map(|(i, _)| EdgeIdx(i))
            .collect()
    }

    pub fn out_edges(&self, node: NodeIdx) -> Vec<EdgeIdx> {
        self.edges
            .iter()
            .enumerate()
            .filter(|(_, e)| e.tail == node)
            .map(|(i, _)| EdgeIdx(i))
            .collect()
    }
}

fn toposort(n: usize, edges: &[Edge]) -> Result<Vec<NodeIdx>, GraphError> {
    let mut indeg = vec![0usize; n];
    for e in edges {
        indeg[e.head.0] += 1;
    }
    let mut order = Vec::with_capacity(n);
    let mut ready: Vec<usize> = (0..n).filter(|&i| indeg[i] == 0).collect();
    while let Some(&next) = ready.iter().min() {
        ready.retain(|&i| i != next);
        order.push(NodeIdx(next));
        for e in edges {
            if e.tail.0 == next {
                indeg[e.head.0] -= 1;
                if indeg[e.head.0] == 0 {
                    ready.push(e.head.0);
                }
            }
        }
    }
    if order.len() != n {
        return Err(GraphError::NotAcyclic);
    }
    Ok(order)
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn two_path_nodes() -> Vec<(String, NodeRole)> {
        vec![
            ("s".into(), NodeRole::Source),
            ("t1".into(), NodeRole::Intermediate),
            ("t2".into(), NodeRole::Intermediate),
            ("u".into(), NodeRole::User),
        ]
    }

    fn two_path() -> NetworkGraph {
        NetworkGraph::build(
            two_path_nodes(),
            vec![
                ("s".into(), "t1".into()),
                ("s".into(), "t2".into()),
                ("t1".into(), "u".into()),
                ("t2".into(), "u".into()),
            ],
        )
        .unwrap()
    }

    #[test]
    fn builds_two_path_graph() {
        let g = two_path();
        assert_eq!(g.node_count(), 4);
        assert_eq!(g.edge_count(), 4);
    }

    #[test]
    fn rejects_cycle() {
        let err = NetworkGraph::build(
            vec![
                ("s".into(), NodeRole::Source),
                ("t".into(), NodeRole::User),
            ],
            vec![("s".into(), "t".into()), ("t".into(), "s".into())],
        )
        .unwrap_err();
        assert_eq!(err, GraphError::NotAcyclic);
    }

    #[test]
    fn rejects_dangling_endpoint() {
        let err = NetworkGraph::build(
            vec![("s".into(), NodeRole::Source)],
            vec![("s".into(), "ghost".into())],
        )
        .unwrap_err();
        assert_eq!(err, GraphError::UnknownNode("ghost".into()));
    }

    #[test]
    fn parallel_edges_allowed() {
        let g = NetworkGraph::build(
            vec![
                ("s".into(), NodeRole::Source),
                ("u".into(), NodeRole::User),
            ],
            vec![("s".into(), "u".into()), ("s".into(), "u".into())],
        )
        .unwrap();
        assert_eq!(g.edge_count(), 2);
    }

    #[test]
    fn adjacency_matches_definition() {
        let g = two_path();
        let t1 = g.find_node("t1").unwrap();
        let adj = g.adjacency(t1);
        assert_eq!(adj, vec![EdgeIdx(0), EdgeIdx(2)]);
        let u = g.find_node("u").unwrap();
        assert_eq!(g.adjacency(u), vec![EdgeIdx(2), EdgeIdx(3)]);
    }

    #[test]
    fn isolated_node_has_empty_adjacency() {
        let g = NetworkGraph::build(
            vec![("lonely".into(), NodeRole::Intermediate)],
            Vec::<(String, String)>::new(),
        )
        .unwrap();
        assert!(g.adjacency(NodeIdx(0)).is_empty());
    }

    #[test]
    fn topo_order_respects_edges() {
        let g = two_path();
        let pos: Vec<usize> = (0..g.node_count())
            .map(|i| {
                g.topo_order()
                    .iter()
                    .position(|&n| n == NodeIdx(i))
                    .unwrap()
            })
            .collect();
        for (_, e) in g.edges() {
            assert!(pos[e.tail.0] < pos[e.head.0]);
        }
    }

    #[test]
    fn spec_roundtrip() {
        let g = two_path();
        let spec = g.to_spec();
        let g2 = NetworkGraph::from_spec(&spec).unwrap();
        assert_eq!(g, g2);
    }
}
