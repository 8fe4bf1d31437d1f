//! Physical PON metropolitan-network model: component catalog with
//! insertion losses, the three reference prototypes, deterministic
//! wavelength routing and itemized per-path loss budgets, plus the
//! abstraction of a built topology into a relay graph for code analysis.
//!
//! Prototype family:
//! - p1: bidirectional ring; per backbone node a CWDM OADM, two DWDM
//!   OADMs and a band-pass filter F_a route by wavelength; 1:4 access
//!   splitter.
//! - p2: circulator replaces F_a, one DWDM OADM, forward-only ring
//!   (open, closed or dual-ring mode).
//! - p3: 1:2 splitter replaces the circulator, CWDM OADM removed, AWG
//!   access; reach is topologically limited to the nearest backbone
//!   nodes.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{GraphError, NetworkGraph, NodeRole};

#[derive(Debug, Error, PartialEq)]
pub enum OpticalError {
    #[error("invalid prototype config: {0}")]
    InvalidConfig(String),
    #[error("unknown emitter `{0}`")]
    UnknownEmitter(String),
    #[error("catalog is missing `{0:?}`")]
    MissingComponent(ComponentKind),
    #[error(transparent)]
    Graph(#[from] GraphError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ComponentKind {
    Fiber,
    Splitter1x2,
    Splitter1x4,
    CwdmOadm,
    DwdmOadm,
    BandpassFilter,
    Circulator,
    ConnectorPair,
    Awg,
}

/// One catalog row: per-unit insertion loss (per km for fiber, per pair
/// for connectors), optional passband and channel count.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CatalogEntry {
    pub kind: ComponentKind,
    pub insertion_loss_db: f64,
    #[serde(default)]
    pub passband_nm: Option<(f64, f64)>,
    #[serde(default)]
    pub channels: Option<u32>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Catalog {
    pub entries: Vec<CatalogEntry>,
    /// Express (pass-through) loss of a ring CWDM OADM. The add/drop port
    /// figure in the catalog covers a single filter stage; the express
    /// path crosses two, so it is carried as a separate knob.
    pub cwdm_pass_db: f64,
    /// Express loss of a DWDM OADM when the wavelength is not dropped.
    pub dwdm_pass_db: f64,
}

impl Catalog {
    pub fn loss(&self, kind: ComponentKind) -> Result<f64, OpticalError> {
        self.entries
            .iter()
            .find(|e| e.kind == kind)
            .map(|e| e.insertion_loss_db)
            .ok_or(OpticalError::MissingComponent(kind))
    }

    pub fn passband(&self, kind: ComponentKind) -> Option<(f64, f64)> {
        self.entries
            .iter()
            .find(|e| e.kind == kind)
            .and_then(|e| e.passband_nm)
    }
}

/// The reference insertion-loss catalog for low-loss market components.
pub fn default_catalog() -> Catalog {
    let entry = |kind, insertion_loss_db, passband_nm, channels| CatalogEntry {
        kind,
        insertion_loss_db,
        passband_nm,
        channels,
    };
    Catalog {
        entries: vec![
            entry(ComponentKind::Fiber, 0.25, Some((1260.0, 1625.0)), None),
            entry(ComponentKind::Splitter1x2, 3.5, Some((1260.0, 1610.0)), None),
            entry(ComponentKind::Splitter1x4, 7.0, Some((1260.0, 1610.0)), None),
            entry(ComponentKind::CwdmOadm, 0.6, Some((1270.0, 1610.0)), None),
            entry(ComponentKind::DwdmOadm, 0.6, Some((1525.0, 1610.0)), None),
            entry(ComponentKind::BandpassFilter, 0.7, None, None),
            entry(ComponentKind::Circulator, 0.5, Some((1530.0, 1565.0)), None),
            entry(ComponentKind::ConnectorPair, 0.2, None, None),
            entry(ComponentKind::Awg, 3.0, Some((1525.0, 1610.0)), Some(40)),
        ],
        cwdm_pass_db: 1.8,
        dwdm_pass_db: 0.6,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PrototypeKind {
    P1,
    P2,
    P3,
}

impl std::str::FromStr for PrototypeKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "p1" => Ok(Self::P1),
            "p2" => Ok(Self::P2),
            "p3" => Ok(Self::P3),
            other => Err(format!("unknown prototype `{other}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RingMode {
    Open,
    Closed,
    Dual,
}

impl std::str::FromStr for RingMode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "open" => Ok(Self::Open),
            "closed" => Ok(Self::Closed),
            "dual" => Ok(Self::Dual),
            other => Err(format!("unknown ring mode `{other}`")),
        }
    }
}

/// Build parameters for a prototype. The defaults are the reference
/// reconstruction whose fiber-and-connector allocation reproduces the
/// published budget totals exactly:
/// own-node route 2.3 dB (6 km fiber + 4 connector pairs) + 8.3 dB of
/// components = 10.6 dB; one backbone hop adds 3.1 dB (10 km + 3 pairs).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrototypeConfig {
    pub branches: usize,
    pub tx_per_branch: usize,
    pub access_fiber_km: f64,
    pub access_connector_pairs: u32,
    pub backbone_fiber_km: f64,
    pub backbone_connector_pairs: u32,
    pub ring_mode: RingMode,
    /// AWG spectral bands multiplexed per port (p3).
    pub awg_bands: usize,
    pub channel_base_nm: f64,
    pub channel_spacing_nm: f64,
    /// Wavelength reuse period around the ring.
    pub channel_reuse_period: usize,
}

impl PrototypeConfig {
    pub fn reference(branches: usize) -> Self {
        Self {
            branches,
            tx_per_branch: 1,
            access_fiber_km: 6.0,
            access_connector_pairs: 4,
            backbone_fiber_km: 10.0,
            backbone_connector_pairs: 3,
            ring_mode: RingMode::Open,
            awg_bands: 2,
            channel_base_nm: 1540.0,
            channel_spacing_nm: 5.0,
            channel_reuse_period: branches.min(4),
        }
    }
}

/// A built physical topology; routing and loss queries derive everything
/// from the prototype kind, the config and the catalog.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OpticalTopology {
    pub schema_version: u32,
    pub kind: PrototypeKind,
    pub config: PrototypeConfig,
    pub catalog: Catalog,
}

/// One itemized entry of a loss budget.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BudgetItem {
    pub label: String,
    pub kind: ComponentKind,
    /// km for fiber, pair count for connectors, 1 otherwise.
    pub quantity: f64,
    pub loss_db: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathLossBudget {
    pub wavelength_nm: f64,
    pub items: Vec<BudgetItem>,
    pub total_db: f64,
}

impl PathLossBudget {
    fn push(&mut self, label: impl Into<String>, kind: ComponentKind, quantity: f64, loss: f64) {
        self.items.push(BudgetItem {
            label: label.into(),
            kind,
            quantity,
            loss_db: loss,
        });
        self.total_db += loss;
    }
}

/// Outcome of a deterministic wavelength routing query.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum RouteOutcome {
    Delivered {
        receiver: String,
        budget: PathLossBudget,
    },
    Blocked {
        at: String,
        budget: PathLossBudget,
    },
}

impl OpticalTopology {
    pub fn build(
        kind: PrototypeKind,
        config: PrototypeConfig,
        catalog: Catalog,
    ) -> Result<Self, OpticalError> {
        if config.branches < 2 {
            return Err(OpticalError::InvalidConfig(format!(
                "need at least 2 branches, got {}",
                config.branches
            )));
        }
        if config.tx_per_branch == 0 {
            return Err(OpticalError::InvalidConfig("tx_per_branch is 0".into()));
        }
        if config.access_fiber_km < 0.0 || config.backbone_fiber_km < 0.0 {
            return Err(OpticalError::InvalidConfig("negative fiber length".into()));
        }
        if config.channel_reuse_period < 2 || config.channel_reuse_period > config.branches {
            return Err(OpticalError::InvalidConfig(format!(
                "reuse period {} outside [2, branches]",
                config.channel_reuse_period
            )));
        }
        if kind == PrototypeKind::P3 && config.awg_bands < 1 {
            return Err(OpticalError::InvalidConfig("awg_bands is 0".into()));
        }
        Ok(Self {
            schema_version: 1,
            kind,
            config,
            catalog,
        })
    }

    /// Reference instantiation used throughout the bundled fixtures.
    pub fn reference(kind: PrototypeKind) -> Self {
        Self::build(kind, PrototypeConfig::reference(4), default_catalog()).unwrap()
    }

    /// DWDM channel assigned to the receiver at `branch` (1-based).
    pub fn channel_nm(&self, branch: usize) -> f64 {
        let slot = (branch - 1) % self.config.channel_reuse_period;
        self.config.channel_base_nm + slot as f64 * self.config.channel_spacing_nm
    }

    /// All distinct channels of the wavelength plan.
    pub fn plan_channels(&self) -> Vec<f64> {
        (0..self.config.channel_reuse_period.min(self.config.branches))
            .map(|slot| self.config.channel_base_nm + slot as f64 * self.config.channel_spacing_nm)
            .collect()
    }

    pub fn emitters(&self) -> Vec<String> {
        let mut out = Vec::new();
        for b in 1..=self.config.branches {
            for t in 1..=self.config.tx_per_branch {
                out.push(self.emitter_name(b, t));
            }
        }
        out
    }

    fn emitter_name(&self, branch: usize, tx: usize) -> String {
        if self.config.tx_per_branch == 1 {
            format!("Tx{branch}")
        } else {
            format!("Tx{branch}_{tx}")
        }
    }

    pub fn receivers(&self) -> Vec<String> {
        (1..=self.config.branches).map(|b| format!("Rx{b}")).collect()
    }

    /// Resolve an emitter name to its branch (1-based).
    pub fn emitter_branch(&self, tx: &str) -> Result<usize, OpticalError> {
        for b in 1..=self.config.branches {
            for t in 1..=self.config.tx_per_branch {
                if self.emitter_name(b, t) == tx {
                    return Ok(b);
                }
            }
        }
        Err(OpticalError::UnknownEmitter(tx.to_string()))
    }

    fn next_branch(&self, b: usize) -> usize {
        b % self.config.branches + 1
    }

    fn prev_branch(&self, b: usize) -> usize {
        (b + self.config.branches - 2) % self.config.branches + 1
    }

    fn access_segment(&self, budget: &mut PathLossBudget) -> Result<(), OpticalError> {
        let fiber = self.catalog.loss(ComponentKind::Fiber)?;
        let conn = self.catalog.loss(ComponentKind::ConnectorPair)?;
        budget.push(
            "access fiber",
            ComponentKind::Fiber,
            self.config.access_fiber_km,
            fiber * self.config.access_fiber_km,
        );
        budget.push(
            "access connectors",
            ComponentKind::ConnectorPair,
            self.config.access_connector_pairs as f64,
            conn * self.config.access_connector_pairs as f64,
        );
        Ok(())
    }

    fn backbone_hop(&self, budget: &mut PathLossBudget, label: &str) -> Result<(), OpticalError> {
        let fiber = self.catalog.loss(ComponentKind::Fiber)?;
        let conn = self.catalog.loss(ComponentKind::ConnectorPair)?;
        budget.push(
            format!("{label} fiber"),
            ComponentKind::Fiber,
            self.config.backbone_fiber_km,
            fiber * self.config.backbone_fiber_km,
        );
        budget.push(
            format!("{label} connectors"),
            ComponentKind::ConnectorPair,
            self.config.backbone_connector_pairs as f64,
            conn * self.config.backbone_connector_pairs as f64,
        );
        Ok(())
    }

    fn in_passband(&self, kind: ComponentKind, nm: f64) -> bool {
        match self.catalog.passband(kind) {
            Some((lo, hi)) => nm >= lo && nm <= hi,
            None => true,
        }
    }

    /// Deterministic traversal from an emitter at a given wavelength,
    /// applying each component's port semantics, until a receiver drops
    /// the signal or a component blocks it.
    pub fn route_wavelength(&self, tx: &str, nm: f64) -> Result<RouteOutcome, OpticalError> {
        let branch = self.emitter_branch(tx)?;
        match self.kind {
            PrototypeKind::P1 => self.route_p1(branch, nm),
            PrototypeKind::P2 => self.route_p2(branch, nm),
            PrototypeKind::P3 => self.route_p3(branch, nm),
        }
    }

    fn route_p1(&self, branch: usize, nm: f64) -> Result<RouteOutcome, OpticalError> {
        let mut budget = PathLossBudget {
            wavelength_nm: nm,
            items: Vec::new(),
            total_db: 0.0,
        };
        self.access_segment(&mut budget)?;
        budget.push(
            "1:4 access splitter",
            ComponentKind::Splitter1x4,
            1.0,
            self.catalog.loss(ComponentKind::Splitter1x4)?,
        );
        // F_a routes by passband: own and forward-neighbor channels exit
        // the filtered port (clockwise), everything else is reflected
        // (counter-clockwise). Loss is identical on both ports.
        let forward = nm == self.channel_nm(branch) || nm == self.channel_nm(self.next_branch(branch));
        budget.push(
            format!(
                "band-pass filter F_a ({})",
                if forward { "filtered" } else { "reflected" }
            ),
            ComponentKind::BandpassFilter,
            1.0,
            self.catalog.loss(ComponentKind::BandpassFilter)?,
        );
        if !self.in_passband(ComponentKind::DwdmOadm, nm) {
            return Ok(RouteOutcome::Blocked {
                at: format!("DWDM OADM at node {branch} (outside passband)"),
                budget,
            });
        }
        // Home-node DWDM on the chosen side drops the node's own channel.
        if nm == self.channel_nm(branch) {
            budget.push(
                format!("DWDM OADM drop at node {branch}"),
                ComponentKind::DwdmOadm,
                1.0,
                self.catalog.loss(ComponentKind::DwdmOadm)?,
            );
            return Ok(RouteOutcome::Delivered {
                receiver: format!("Rx{branch}"),
                budget,
            });
        }
        budget.push(
            format!("DWDM OADM pass at node {branch}"),
            ComponentKind::DwdmOadm,
            1.0,
            self.catalog.dwdm_pass_db,
        );
        budget.push(
            format!("CWDM OADM add at node {branch}"),
            ComponentKind::CwdmOadm,
            1.0,
            self.catalog.loss(ComponentKind::CwdmOadm)?,
        );
        // Travel the closed ring in the chosen direction.
        let mut node = branch;
        loop {
            let next = if forward {
                self.next_branch(node)
            } else {
                self.prev_branch(node)
            };
            self.backbone_hop(&mut budget, &format!("backbone span {node}-{next}"))?;
            if next == branch {
                return Ok(RouteOutcome::Blocked {
                    at: format!("ring exit at node {branch} (no drop matched)"),
                    budget,
                });
            }
            if nm == self.channel_nm(next) {
                budget.push(
                    format!("CWDM OADM drop at node {next}"),
                    ComponentKind::CwdmOadm,
                    1.0,
                    self.catalog.loss(ComponentKind::CwdmOadm)?,
                );
                budget.push(
                    format!("DWDM OADM drop at node {next}"),
                    ComponentKind::DwdmOadm,
                    1.0,
                    self.catalog.loss(ComponentKind::DwdmOadm)?,
                );
                return Ok(RouteOutcome::Delivered {
                    receiver: format!("Rx{next}"),
                    budget,
                });
            }
            budget.push(
                format!("CWDM OADM pass at node {next}"),
                ComponentKind::CwdmOadm,
                1.0,
                self.catalog.cwdm_pass_db,
            );
            node = next;
        }
    }

    fn route_p2(&self, branch: usize, nm: f64) -> Result<RouteOutcome, OpticalError> {
        let mut budget = PathLossBudget {
            wavelength_nm: nm,
            items: Vec::new(),
            total_db: 0.0,
        };
        self.access_segment(&mut budget)?;
        budget.push(
            "1:4 access splitter",
            ComponentKind::Splitter1x4,
            1.0,
            self.catalog.loss(ComponentKind::Splitter1x4)?,
        );
        if !self.in_passband(ComponentKind::Circulator, nm) {
            return Ok(RouteOutcome::Blocked {
                at: format!("circulator at node {branch} (outside passband)"),
                budget,
            });
        }
        budget.push(
            format!("circulator at node {branch}"),
            ComponentKind::Circulator,
            1.0,
            self.catalog.loss(ComponentKind::Circulator)?,
        );
        if nm == self.channel_nm(branch) {
            budget.push(
                format!("DWDM OADM drop at node {branch}"),
                ComponentKind::DwdmOadm,
                1.0,
                self.catalog.loss(ComponentKind::DwdmOadm)?,
            );
            return Ok(RouteOutcome::Delivered {
                receiver: format!("Rx{branch}"),
                budget,
            });
        }
        budget.push(
            format!("DWDM OADM pass at node {branch}"),
            ComponentKind::DwdmOadm,
            1.0,
            self.catalog.dwdm_pass_db,
        );
        budget.push(
            format!("CWDM OADM add at node {branch}"),
            ComponentKind::CwdmOadm,
            1.0,
            self.catalog.loss(ComponentKind::CwdmOadm)?,
        );
        // Directions available: forward always; backward only on the
        // second ring in dual mode.
        let directions: &[bool] = match self.config.ring_mode {
            RingMode::Dual => &[true, false],
            _ => &[true],
        };
        for &fwd in directions {
            let mut trial = budget.clone();
            let mut node = branch;
            let mut hops = 0usize;
            loop {
                let next = if fwd {
                    self.next_branch(node)
                } else {
                    self.prev_branch(node)
                };
                self.backbone_hop(&mut trial, &format!("backbone span {node}-{next}"))?;
                hops += 1;
                if next == branch {
                    break;
                }
                if nm == self.channel_nm(next) {
                    trial.push(
                        format!("CWDM OADM drop at node {next}"),
                        ComponentKind::CwdmOadm,
                        1.0,
                        self.catalog.loss(ComponentKind::CwdmOadm)?,
                    );
                    trial.push(
                        format!("DWDM OADM drop at node {next}"),
                        ComponentKind::DwdmOadm,
                        1.0,
                        self.catalog.loss(ComponentKind::DwdmOadm)?,
                    );
                    return Ok(RouteOutcome::Delivered {
                        receiver: format!("Rx{next}"),
                        budget: trial,
                    });
                }
                // Open and dual modes forbid going past the first
                // downstream node; only the closed ring may continue.
                if self.config.ring_mode != RingMode::Closed && hops >= 1 {
                    break;
                }
                trial.push(
                    format!("CWDM OADM pass at node {next}"),
                    ComponentKind::CwdmOadm,
                    1.0,
                    self.catalog.cwdm_pass_db,
                );
                node = next;
            }
        }
        Ok(RouteOutcome::Blocked {
            at: format!("ring exit from node {branch} (no drop matched)"),
            budget,
        })
    }

    fn route_p3(&self, branch: usize, nm: f64) -> Result<RouteOutcome, OpticalError> {
        let mut budget = PathLossBudget {
            wavelength_nm: nm,
            items: Vec::new(),
            total_db: 0.0,
        };
        self.access_segment(&mut budget)?;
        // AWG periodicity: each port multiplexes one channel per spectral
        // band; band 0 addresses the home node, band 1 the next one. The
        // p3 access hangs off a linear pair of backbone nodes, so the
        // last branch has no next-node arm.
        let own = nm == self.channel_nm(branch);
        let next_ok = self.config.awg_bands >= 2
            && branch < self.config.branches
            && nm == self.channel_nm(branch + 1);
        budget.push(
            "access AWG",
            ComponentKind::Awg,
            1.0,
            self.catalog.loss(ComponentKind::Awg)?,
        );
        if !(own || next_ok) || !self.in_passband(ComponentKind::Awg, nm) {
            return Ok(RouteOutcome::Blocked {
                at: format!("AWG port at branch {branch} (wavelength outside port bands)"),
                budget,
            });
        }
        budget.push(
            "1:2 splitter",
            ComponentKind::Splitter1x2,
            1.0,
            self.catalog.loss(ComponentKind::Splitter1x2)?,
        );
        let target = if own { branch } else { branch + 1 };
        if !own {
            self.backbone_hop(&mut budget, &format!("span to node {target}"))?;
        }
        budget.push(
            format!("DWDM OADM drop at node {target}"),
            ComponentKind::DwdmOadm,
            1.0,
            self.catalog.loss(ComponentKind::DwdmOadm)?,
        );
        Ok(RouteOutcome::Delivered {
            receiver: format!("Rx{target}"),
            budget,
        })
    }

    /// Every receiver whose best route fits the loss budget, with the
    /// wavelength and total loss achieving it.
    pub fn reachable_receivers(
        &self,
        tx: &str,
        loss_budget_db: f64,
    ) -> Result<BTreeMap<String, (f64, f64)>, OpticalError> {
        let mut best: BTreeMap<String, (f64, f64)> = BTreeMap::new();
        for nm in self.plan_channels() {
            if let RouteOutcome::Delivered { receiver, budget } = self.route_wavelength(tx, nm)? {
                if budget.total_db <= loss_budget_db + 1e-9 {
                    let entry = best.entry(receiver).or_insert((nm, budget.total_db));
                    if budget.total_db < entry.1 {
                        *entry = (nm, budget.total_db);
                    }
                }
            }
        }
        Ok(best)
    }

    /// Main per-branch component tally, for the rough cost comparison.
    pub fn component_tally(&self) -> Vec<(ComponentKind, usize)> {
        match self.kind {
            PrototypeKind::P1 => vec![
                (ComponentKind::Splitter1x4, 1),
                (ComponentKind::BandpassFilter, 1),
                (ComponentKind::DwdmOadm, 2),
                (ComponentKind::CwdmOadm, 1),
            ],
            PrototypeKind::P2 => vec![
                (ComponentKind::Splitter1x4, 1),
                (ComponentKind::Circulator, 1),
                (ComponentKind::DwdmOadm, 1),
                (ComponentKind::CwdmOadm, 1),
            ],
            PrototypeKind::P3 => vec![
                (ComponentKind::Awg, 1),
                (ComponentKind::Splitter1x2, 1),
                (ComponentKind::DwdmOadm, 1),
            ],
        }
    }
}

/// Itemized loss budget for an already-routed path; the total always
/// equals the item sum (0.001 dB accumulation tolerance is asserted by
/// the caller's tests, the sum here is exact).
pub fn path_loss(budget: &PathLossBudget) -> f64 {
    budget.items.iter().map(|i| i.loss_db).sum()
}

/// Result of abstracting a physical pairing into a relay graph.
#[derive(Debug, Clone)]
pub struct NetcodePlanGraph {
    pub graph: NetworkGraph,
    /// Repeater nodes directly bridging source and user (first relay layer).
    pub repeaters: Vec<String>,
    /// True when fewer than two internally node-disjoint relay paths exist.
    pub insufficient_paths: bool,
}

/// Builds the abstract relay graph for a key exchange between two
/// emitters: QKD-reachable emitter/receiver pairs become private-link
/// edges, oriented along breadth-first layers from the source emitter so
/// the result is acyclic. Receivers (and any intermediate emitters) are
/// weakly trusted relay nodes.
pub fn to_netcode_graph(
    topology: &OpticalTopology,
    tx_source: &str,
    tx_user: &str,
    loss_budget_db: f64,
) -> Result<NetcodePlanGraph, OpticalError> {
    topology.emitter_branch(tx_source)?;
    topology.emitter_branch(tx_user)?;
    // Undirected bipartite reachability between emitters and receivers.
    let emitters = topology.emitters();
    let mut links: Vec<(String, String)> = Vec::new(); // (tx, rx)
    for tx in &emitters {
        for (rx, _) in topology.reachable_receivers(tx, loss_budget_db)? {
            links.push((tx.clone(), rx));
        }
    }
    // BFS layering from the source; edges oriented along increasing depth.
    let mut depth: BTreeMap<String, usize> = BTreeMap::new();
    depth.insert(tx_source.to_string(), 0);
    let mut frontier = vec![tx_source.to_string()];
    while !frontier.is_empty() {
        let mut next = Vec::new();
        for name in &frontier {
            let d = depth[name];
            for (tx, rx) in &links {
                let neighbor = if tx == name {
                    rx
                } else if rx == name {
                    tx
                } else {
                    continue;
                };
                if !depth.contains_key(neighbor) {
                    depth.insert(neighbor.clone(), d + 1);
                    next.push(neighbor.clone());
                }
            }
        }
        frontier = next;
    }
    let Some(&user_depth) = depth.get(tx_user) else {
        // User unreachable: degenerate two-node graph, flagged.
        let graph = NetworkGraph::build(
            vec![
                (tx_source.to_string(), NodeRole::Source),
                (tx_user.to_string(), NodeRole::User),
            ],
            Vec::<(String, String)>::new(),
        )?;
        return Ok(NetcodePlanGraph {
            graph,
            repeaters: Vec::new(),
            insufficient_paths: true,
        });
    };
    // Keep nodes that lie on a shortest source-user walk: reachable from
    // the user backwards along strictly decreasing depth.
    let mut keep: BTreeMap<String, bool> = BTreeMap::new();
    keep.insert(tx_user.to_string(), true);
    let mut stack = vec![tx_user.to_string()];
    while let Some(name) = stack.pop() {
        let d = depth[&name];
        for (tx, rx) in &links {
            let neighbor = if tx == &name {
                rx
            } else if rx == &name {
                tx
            } else {
                continue;
            };
            if d > 0 && depth.get(neighbor) == Some(&(d - 1)) && !keep.contains_key(neighbor) {
                keep.insert(neighbor.clone(), true);
                stack.push(neighbor.clone());
            }
        }
    }
    let mut nodes: Vec<(String, NodeRole)> = Vec::new();
    nodes.push((tx_source.to_string(), NodeRole::Source));
    let mut intermediates: Vec<String> = keep
        .keys()
        .filter(|n| *n != tx_source && *n != tx_user)
        .cloned()
        .collect();
    intermediates.sort();
    for n in &intermediates {
        nodes.push((n.clone(), NodeRole::Intermediate));
    }
    nodes.push((tx_user.to_string(), NodeRole::User));
    let mut edges: Vec<(String, String)> = Vec::new();
    for (tx, rx) in &links {
        let (Some(&dt), Some(&dr)) = (depth.get(tx), depth.get(rx)) else {
            continue;
        };
        if !keep.contains_key(tx) || !keep.contains_key(rx) {
            continue;
        }
        if dt + 1 == dr && dr <= user_depth {
            edges.push((tx.clone(), rx.clone()));
        } else if dr + 1 == dt && dt <= user_depth {
            edges.push((rx.clone(), tx.clone()));
        }
    }
    let graph = NetworkGraph::build(nodes, edges)?;
    let disjoint = crate::resilience::node_disjoint_paths(&graph, tx_source, tx_user)
        .map(|d| d.count)
        .unwrap_or(0);
    let repeaters = intermediates
        .iter()
        .filter(|n| depth[*n] == 1)
        .cloned()
        .collect();
    Ok(NetcodePlanGraph {
        graph,
        repeaters,
        insufficient_paths: disjoint < 2,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p1() -> OpticalTopology {
        OpticalTopology::reference(PrototypeKind::P1)
    }

    fn delivered(outcome: RouteOutcome) -> (String, PathLossBudget) {
        match outcome {
            RouteOutcome::Delivered { receiver, budget } => (receiver, budget),
            RouteOutcome::Blocked { at, .. } => panic!("blocked at {at}"),
        }
    }

    #[test]
    fn catalog_matches_reference_values() {
        let c = default_catalog();
        assert_eq!(c.loss(ComponentKind::Splitter1x4).unwrap(), 7.0);
        assert_eq!(c.loss(ComponentKind::ConnectorPair).unwrap(), 0.2);
        assert_eq!(c.loss(ComponentKind::Awg).unwrap(), 3.0);
        let awg = c.entries.iter().find(|e| e.kind == ComponentKind::Awg).unwrap();
        assert_eq!(awg.channels, Some(40));
        assert_eq!(c.loss(ComponentKind::Fiber).unwrap(), 0.25);
        assert_eq!(c.loss(ComponentKind::CwdmOadm).unwrap(), 0.6);
        assert_eq!(c.loss(ComponentKind::DwdmOadm).unwrap(), 0.6);
        assert_eq!(c.loss(ComponentKind::BandpassFilter).unwrap(), 0.7);
        assert_eq!(c.loss(ComponentKind::Circulator).unwrap(), 0.5);
        assert_eq!(c.loss(ComponentKind::Splitter1x2).unwrap(), 3.5);
    }

    #[test]
    fn p1_own_node_budget_is_10_6() {
        let t = p1();
        let (rx, budget) = delivered(t.route_wavelength("Tx1", 1540.0).unwrap());
        assert_eq!(rx, "Rx1");
        assert!((budget.total_db - 10.6).abs() < 0.05, "{}", budget.total_db);
        assert!((budget.total_db - path_loss(&budget)).abs() < 1e-3);
    }

    #[test]
    fn p1_neighbor_budget_is_15_5() {
        let t = p1();
        let (rx, budget) = delivered(t.route_wavelength("Tx1", 1545.0).unwrap());
        assert_eq!(rx, "Rx2");
        assert!((budget.total_db - 15.5).abs() < 0.05, "{}", budget.total_db);
        // Symmetric crossing: Tx2 backwards to Rx1.
        let (rx, budget) = delivered(t.route_wavelength("Tx2", 1540.0).unwrap());
        assert_eq!(rx, "Rx1");
        assert!((budget.total_db - 15.5).abs() < 0.05);
        let (rx, budget) = delivered(t.route_wavelength("Tx2", 1545.0).unwrap());
        assert_eq!(rx, "Rx2");
        assert!((budget.total_db - 10.6).abs() < 0.05);
    }

    #[test]
    fn p1_unmatched_wavelength_blocks_at_ring_exit() {
        let mut cfg = PrototypeConfig::reference(4);
        cfg.channel_reuse_period = 3;
        let t = OpticalTopology::build(PrototypeKind::P1, cfg, default_catalog()).unwrap();
        // 1555 nm is in no node's drop plan under reuse period 3.
        match t.route_wavelength("Tx1", 1555.0).unwrap() {
            RouteOutcome::Blocked { at, .. } => assert!(at.contains("ring exit"), "{at}"),
            RouteOutcome::Delivered { receiver, .. } => panic!("delivered to {receiver}"),
        }
    }

    #[test]
    fn p1_reachability_at_20db() {
        let t = p1();
        let reach = t.reachable_receivers("Tx2", 20.0).unwrap();
        let names: Vec<&str> = reach.keys().map(String::as_str).collect();
        assert_eq!(names, vec!["Rx1", "Rx2", "Rx3"]);
        assert!(t.reachable_receivers("Tx1", 0.0).unwrap().is_empty());
    }

    #[test]
    fn p2_open_mode_reaches_exactly_two() {
        let t = OpticalTopology::reference(PrototypeKind::P2);
        for tx in t.emitters() {
            let reach = t.reachable_receivers(&tx, 20.0).unwrap();
            let branch = t.emitter_branch(&tx).unwrap();
            let expected: Vec<String> = {
                let mut v = vec![format!("Rx{branch}"), format!("Rx{}", t.next_branch(branch))];
                v.sort();
                v
            };
            let got: Vec<String> = reach.keys().cloned().collect();
            assert_eq!(got, expected, "emitter {tx}");
        }
    }

    #[test]
    fn p2_dual_mode_adds_backward_neighbor() {
        let mut cfg = PrototypeConfig::reference(4);
        cfg.ring_mode = RingMode::Dual;
        let t = OpticalTopology::build(PrototypeKind::P2, cfg, default_catalog()).unwrap();
        let reach = t.reachable_receivers("Tx2", 20.0).unwrap();
        let names: Vec<&str> = reach.keys().map(String::as_str).collect();
        assert_eq!(names, vec!["Rx1", "Rx2", "Rx3"]);
    }

    #[test]
    fn p3_limited_to_nearest_nodes_at_any_budget() {
        let t = OpticalTopology::reference(PrototypeKind::P3);
        for tx in t.emitters() {
            let branch = t.emitter_branch(&tx).unwrap();
            let reach = t.reachable_receivers(&tx, 30.0).unwrap();
            for rx in reach.keys() {
                assert!(
                    rx == &format!("Rx{branch}") || rx == &format!("Rx{}", branch + 1),
                    "{tx} unexpectedly reaches {rx}"
                );
            }
            let expected = if branch < t.config.branches { 2 } else { 1 };
            assert_eq!(reach.len(), expected);
        }
    }

    #[test]
    fn unknown_emitter_is_rejected() {
        let t = p1();
        assert_eq!(
            t.route_wavelength("Tx99", 1540.0).unwrap_err(),
            OpticalError::UnknownEmitter("Tx99".into())
        );
    }

    #[test]
    fn budgets_itemize_exactly() {
        let t = p1();
        for tx in t.emitters() {
            for nm in t.plan_channels() {
                if let RouteOutcome::Delivered { budget, .. } =
                    t.route_wavelength(&tx, nm).unwrap()
                {
                    assert!((budget.total_db - path_loss(&budget)).abs() < 1e-3);
                }
            }
        }
    }

    #[test]
    fn netcode_graph_for_adjacent_emitters_is_two_path() {
        let t = p1();
        let plan = to_netcode_graph(&t, "Tx1", "Tx2", 20.0).unwrap();
        assert!(!plan.insufficient_paths);
        assert_eq!(plan.repeaters, vec!["Rx1".to_string(), "Rx2".to_string()]);
        assert_eq!(plan.graph.node_count(), 4);
        assert_eq!(plan.graph.edge_count(), 4);
    }

    #[test]
    fn netcode_graph_distant_pairing() {
        let t = p1();
        let plan = to_netcode_graph(&t, "Tx1", "Tx3", 20.0).unwrap();
        assert!(!plan.insufficient_paths);
        // Opposite side of the 4-node ring: bridged by Rx2 and Rx4.
        assert_eq!(plan.repeaters, vec!["Rx2".to_string(), "Rx4".to_string()]);
    }

    #[test]
    fn netcode_graph_flags_tight_budget() {
        let t = p1();
        let plan = to_netcode_graph(&t, "Tx1", "Tx2", 5.0).unwrap();
        assert!(plan.insufficient_paths);
    }

    #[test]
    fn p3_pairing_beyond_nearest_node_is_insufficient() {
        let t = OpticalTopology::reference(PrototypeKind::P3);
        let plan = to_netcode_graph(&t, "Tx1", "Tx3", 30.0).unwrap();
        assert!(plan.insufficient_paths);
    }

    #[test]
    fn topology_json_roundtrip() {
        let t = p1();
        let json = serde_json::to_string(&t).unwrap();
        let parsed: OpticalTopology = serde_json::from_str(&json).unwrap();
        assert_eq!(t, parsed);
    }

    #[test]
    fn rejects_invalid_config() {
        let err = OpticalTopology::build(
            PrototypeKind::P1,
            PrototypeConfig::reference(1),
            default_catalog(),
        )
        .unwrap_err();
        assert!(matches!(err, OpticalError::InvalidConfig(_)));
    }
}
