//! Mobile nodes, directed link sets and the network-structure invariants.
//!
//! A [`Topology`] is an immutable value: every operation returns a new
//! topology and leaves the receiver untouched. Links are stored as ordered
//! pairs; bidirectionality is an invariant over the set, not a property of a
//! single link, so a broken topology can still be represented (and reported
//! on by [`Topology::check_invariants`]).

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::report::InvariantReport;

/// Invariant names reported by [`Topology::check_invariants`], in report order.
pub const TOPOLOGY_CHECKS: [&str; 4] = [
    "membership",
    "bidirectionality",
    "no-self-loop",
    "no-dead-links",
];

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TopologyError {
    #[error("node id {0} already exists in the network")]
    DuplicateNodeId(NodeId),
    #[error("node {0} is not in the network")]
    NodeNotInNetwork(NodeId),
    #[error("self loop on node {0} rejected")]
    SelfLoopRejected(NodeId),
    #[error("nodes {a} and {b} are out of mutual range (distance {distance}, reach {reach})")]
    OutOfRange {
        a: NodeId,
        b: NodeId,
        distance: f64,
        reach: f64,
    },
    #[error("node {0} is dead and cannot carry links")]
    DeadNodeLink(NodeId),
    #[error("no link between {a} and {b}")]
    LinkNotFound { a: NodeId, b: NodeId },
    #[error("invalid node {id}: {reason}")]
    InvalidNode { id: NodeId, reason: String },
    #[error("invalid node id {0:?}: ids must be nonempty")]
    InvalidNodeId(String),
}

/// Node identifier. Ordered lexicographically; the order drives every
/// deterministic tie-break in the crate.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct NodeId(String);

impl NodeId {
    pub fn new(id: impl Into<String>) -> Result<Self, TopologyError> {
        let id = id.into();
        if id.is_empty() {
            return Err(TopologyError::InvalidNodeId(id));
        }
        Ok(NodeId(id))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl TryFrom<String> for NodeId {
    type Error = TopologyError;

    fn try_from(value: String) -> Result<Self, Self::Error> {
        NodeId::new(value)
    }
}

impl TryFrom<&str> for NodeId {
    type Error = TopologyError;

    fn try_from(value: &str) -> Result<Self, Self::Error> {
        NodeId::new(value)
    }
}

impl From<NodeId> for String {
    fn from(id: NodeId) -> Self {
        id.0
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum NodeRole {
    Transmitter,
    Intermediate,
    Receiver,
}

impl NodeRole {
    /// Single-letter tag used in digests.
    pub fn tag(self) -> char {
        match self {
            NodeRole::Transmitter => 'T',
            NodeRole::Intermediate => 'I',
            NodeRole::Receiver => 'R',
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum NodeLiveness {
    Alive,
    Dead,
}

/// A point in the plane, in abstract distance units. Serialized as `[x, y]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 2]", into = "[f64; 2]")]
pub struct Position {
    pub x: f64,
    pub y: f64,
}

impl Position {
    pub const fn new(x: f64, y: f64) -> Self {
        Position { x, y }
    }

    pub fn distance(&self, other: &Position) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

impl From<[f64; 2]> for Position {
    fn from([x, y]: [f64; 2]) -> Self {
        Position { x, y }
    }
}

impl From<Position> for [f64; 2] {
    fn from(p: Position) -> Self {
        [p.x, p.y]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MobNode {
    pub id: NodeId,
    pub role: NodeRole,
    pub position: Position,
    pub range: f64,
    pub liveness: NodeLiveness,
    #[serde(default)]
    pub ttl_age: u32,
}

impl MobNode {
    /// An alive node with age zero.
    pub fn new(id: NodeId, role: NodeRole, position: Position, range: f64) -> Self {
        MobNode {
            id,
            role,
            position,
            range,
            liveness: NodeLiveness::Alive,
            ttl_age: 0,
        }
    }

    pub fn is_alive(&self) -> bool {
        self.liveness == NodeLiveness::Alive
    }

    fn validate(&self) -> Result<(), TopologyError> {
        let reason = if !self.range.is_finite() || self.range < 0.0 {
            Some(format!("range must be a finite nonnegative number, got {}", self.range))
        } else if !self.position.x.is_finite() || !self.position.y.is_finite() {
            Some("position must be finite".to_string())
        } else {
            None
        };
        match reason {
            Some(reason) => Err(TopologyError::InvalidNode {
                id: self.id.clone(),
                reason,
            }),
            None => Ok(()),
        }
    }
}

/// Mutual reachability: the distance between the two nodes is within the
/// smaller of their radio ranges. Symmetric by construction.
pub fn in_range(n1: &MobNode, n2: &MobNode) -> bool {
    n1.position.distance(&n2.position) <= n1.range.min(n2.range)
}

/// Directed link `src -> dst`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(from = "(NodeId, NodeId)", into = "(NodeId, NodeId)")]
pub struct Link {
    pub src: NodeId,
    pub dst: NodeId,
}

impl Link {
    pub fn new(src: NodeId, dst: NodeId) -> Self {
        Link { src, dst }
    }

    pub fn reversed(&self) -> Link {
        Link::new(self.dst.clone(), self.src.clone())
    }
}

impl From<(NodeId, NodeId)> for Link {
    fn from((src, dst): (NodeId, NodeId)) -> Self {
        Link { src, dst }
    }
}

impl From<Link> for (NodeId, NodeId) {
    fn from(l: Link) -> Self {
        (l.src, l.dst)
    }
}

impl fmt::Display for Link {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.src, self.dst)
    }
}

/// Node set plus directed connection set.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "TopologyDoc", into = "TopologyDoc")]
pub struct Topology {
    mobiles: BTreeMap<NodeId, MobNode>,
    connections: BTreeSet<Link>,
}

impl Topology {
    pub fn new() -> Self {
        Topology::default()
    }

    /// Builds a topology without validating links. Duplicate node ids are
    /// still rejected since the node map cannot hold them.
    pub fn from_raw(
        nodes: impl IntoIterator<Item = MobNode>,
        links: impl IntoIterator<Item = Link>,
    ) -> Result<Self, TopologyError> {
        let mut mobiles = BTreeMap::new();
        for node in nodes {
            node.validate()?;
            if mobiles.contains_key(&node.id) {
                return Err(TopologyError::DuplicateNodeId(node.id));
            }
            mobiles.insert(node.id.clone(), node);
        }
        Ok(Topology {
            mobiles,
            connections: links.into_iter().collect(),
        })
    }

    pub fn mobiles(&self) -> &BTreeMap<NodeId, MobNode> {
        &self.mobiles
    }

    pub fn connections(&self) -> &BTreeSet<Link> {
        &self.connections
    }

    pub fn node(&self, id: &NodeId) -> Option<&MobNode> {
        self.mobiles.get(id)
    }

    pub fn contains(&self, id: &NodeId) -> bool {
        self.mobiles.contains_key(id)
    }

    pub fn has_link(&self, a: &NodeId, b: &NodeId) -> bool {
        self.connections.contains(&Link::new(a.clone(), b.clone()))
    }

    pub fn len(&self) -> usize {
        self.mobiles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mobiles.is_empty()
    }

    fn require(&self, id: &NodeId) -> Result<&MobNode, TopologyError> {
        self.mobiles
            .get(id)
            .ok_or_else(|| TopologyError::NodeNotInNetwork(id.clone()))
    }

    pub fn add_node(&self, node: MobNode) -> Result<Topology, TopologyError> {
        node.validate()?;
        if self.contains(&node.id) {
            return Err(TopologyError::DuplicateNodeId(node.id));
        }
        let mut next = self.clone();
        next.mobiles.insert(node.id.clone(), node);
        Ok(next)
    }

    /// Removes the node and every link touching it, in both directions.
    pub fn remove_node(&self, id: &NodeId) -> Result<Topology, TopologyError> {
        self.require(id)?;
        let mut next = self.clone();
        next.mobiles.remove(id);
        next.connections.retain(|l| &l.src != id && &l.dst != id);
        Ok(next)
    }

    pub fn connect(&self, a: &NodeId, b: &NodeId) -> Result<Topology, TopologyError> {
        let na = self.require(a)?;
        let nb = self.require(b)?;
        if a == b {
            return Err(TopologyError::SelfLoopRejected(a.clone()));
        }
        for n in [na, nb] {
            if !n.is_alive() {
                return Err(TopologyError::DeadNodeLink(n.id.clone()));
            }
        }
        if !in_range(na, nb) {
            return Err(TopologyError::OutOfRange {
                a: a.clone(),
                b: b.clone(),
                distance: na.position.distance(&nb.position),
                reach: na.range.min(nb.range),
            });
        }
        let mut next = self.clone();
        next.connections.insert(Link::new(a.clone(), b.clone()));
        next.connections.insert(Link::new(b.clone(), a.clone()));
        Ok(next)
    }

    pub fn disconnect(&self, a: &NodeId, b: &NodeId) -> Result<Topology, TopologyError> {
        let link = Link::new(a.clone(), b.clone());
        if !self.connections.contains(&link) {
            return Err(TopologyError::LinkNotFound {
                a: a.clone(),
                b: b.clone(),
            });
        }
        let mut next = self.clone();
        next.connections.remove(&link.reversed());
        next.connections.remove(&link);
        Ok(next)
    }

    pub fn neighbors(&self, id: &NodeId) -> Result<BTreeSet<NodeId>, TopologyError> {
        self.require(id)?;
        Ok(self
            .connections
            .iter()
            .filter(|l| &l.src == id)
            .map(|l| l.dst.clone())
            .collect())
    }

    /// Marks the node dead and drops all of its links.
    pub fn kill_node(&self, id: &NodeId) -> Result<Topology, TopologyError> {
        self.require(id)?;
        let mut next = self.clone();
        if let Some(n) = next.mobiles.get_mut(id) {
            n.liveness = NodeLiveness::Dead;
        }
        next.connections.retain(|l| &l.src != id && &l.dst != id);
        Ok(next)
    }

    /// Marks the node alive again with a fresh age. Links are not restored.
    pub fn revive_node(&self, id: &NodeId) -> Result<Topology, TopologyError> {
        self.require(id)?;
        let mut next = self.clone();
        if let Some(n) = next.mobiles.get_mut(id) {
            n.liveness = NodeLiveness::Alive;
            n.ttl_age = 0;
        }
        Ok(next)
    }

    pub fn move_node(&self, id: &NodeId, position: Position) -> Result<Topology, TopologyError> {
        self.require(id)?;
        let mut next = self.clone();
        if let Some(n) = next.mobiles.get_mut(id) {
            n.position = position;
            n.validate()?;
        }
        Ok(next)
    }

    /// Sets the age counter of each listed node. Unknown ids are an error.
    pub fn with_ages<'a>(
        &self,
        ages: impl IntoIterator<Item = (&'a NodeId, u32)>,
    ) -> Result<Topology, TopologyError> {
        let mut next = self.clone();
        for (id, age) in ages {
            match next.mobiles.get_mut(id) {
                Some(n) => n.ttl_age = age,
                None => return Err(TopologyError::NodeNotInNetwork(id.clone())),
            }
        }
        Ok(next)
    }

    /// Recomputes the whole connection set from positions and ranges: every
    /// alive pair in mutual range is linked both ways, nothing else is.
    pub fn relink_by_range(&self) -> Topology {
        let alive: Vec<&MobNode> = self.mobiles.values().filter(|n| n.is_alive()).collect();
        let mut connections = BTreeSet::new();
        for (i, a) in alive.iter().enumerate() {
            for b in &alive[i + 1..] {
                if in_range(a, b) {
                    connections.insert(Link::new(a.id.clone(), b.id.clone()));
                    connections.insert(Link::new(b.id.clone(), a.id.clone()));
                }
            }
        }
        Topology {
            mobiles: self.mobiles.clone(),
            connections,
        }
    }

    /// One named check per structural invariant, each with the first
    /// violating link or node as witness.
    pub fn check_invariants(&self) -> InvariantReport {
        let mut report = InvariantReport::new();

        let dangling = self
            .connections
            .iter()
            .find(|l| !self.contains(&l.src) || !self.contains(&l.dst));
        report.record("membership", dangling.map(|l| format!("link {l} has an endpoint outside the network")));

        let one_way = self
            .connections
            .iter()
            .find(|l| !self.connections.contains(&l.reversed()));
        report.record("bidirectionality", one_way.map(|l| format!("link {l} has no reverse")));

        let self_loop = self.connections.iter().find(|l| l.src == l.dst);
        report.record("no-self-loop", self_loop.map(|l| format!("link {l} is a self loop")));

        let dead = self.connections.iter().find_map(|l| {
            [&l.src, &l.dst]
                .into_iter()
                .find(|id| self.node(id).is_some_and(|n| !n.is_alive()))
                .map(|id| format!("link {l} touches dead node {id}"))
        });
        report.record("no-dead-links", dead);

        report
    }
}

/// Wire form of a topology. Bidirectional pairs are listed once under
/// `links` (smaller id first) and expanded on load; any link without a
/// reverse goes to `one_way` so hand-built broken topologies survive a
/// round trip.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TopologyDoc {
    pub nodes: Vec<MobNode>,
    #[serde(default)]
    pub links: Vec<(NodeId, NodeId)>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub one_way: Vec<(NodeId, NodeId)>,
}

impl TryFrom<TopologyDoc> for Topology {
    type Error = TopologyError;

    fn try_from(doc: TopologyDoc) -> Result<Self, Self::Error> {
        let mut links = Vec::new();
        for (a, b) in doc.links {
            links.push(Link::new(b.clone(), a.clone()));
            links.push(Link::new(a, b));
        }
        links.extend(doc.one_way.into_iter().map(Link::from));
        Topology::from_raw(doc.nodes, links)
    }
}

impl From<Topology> for TopologyDoc {
    fn from(t: Topology) -> Self {
        let mut links = Vec::new();
        let mut one_way = Vec::new();
        for l in &t.connections {
            if l.src == l.dst {
                links.push((l.src.clone(), l.dst.clone()));
            } else if t.connections.contains(&l.reversed()) {
                if l.src < l.dst {
                    links.push((l.src.clone(), l.dst.clone()));
                }
            } else {
                one_way.push((l.src.clone(), l.dst.clone()));
            }
        }
        TopologyDoc {
            nodes: t.mobiles.into_values().collect(),
            links,
            one_way,
        }
    }
}
