//! Scenario documents: initial nodes, link mode, and a timed event list.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::routing::DEFAULT_TTL_THRESHOLD;
use crate::topology::{MobNode, NodeId, Position, Topology};

use super::SimError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LinkMode {
    /// Links come from the scenario's `links` list and change only when
    /// nodes die or leave.
    Explicit,
    /// Links are recomputed from positions and ranges every tick.
    ByRange,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum EventKind {
    Move { id: NodeId, position: Position },
    Kill { id: NodeId },
    Revive { id: NodeId },
    RequestRoute { src: NodeId, dst: NodeId },
    AddNode { node: MobNode },
    RemoveNode { id: NodeId },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Event {
    pub time: u64,
    #[serde(flatten)]
    pub kind: EventKind,
}

fn default_threshold() -> u32 {
    DEFAULT_TTL_THRESHOLD
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub nodes: Vec<MobNode>,
    pub link_mode: LinkMode,
    /// Undirected pairs, listed once; explicit mode only.
    #[serde(default)]
    pub links: Vec<(NodeId, NodeId)>,
    #[serde(default = "default_threshold")]
    pub ttl_threshold: u32,
    #[serde(default)]
    pub events: Vec<Event>,
    pub duration: u64,
}

impl Scenario {
    pub fn from_json(text: &str) -> Result<Scenario, serde_json::Error> {
        serde_json::from_str(text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario always serializes")
    }

    /// Static checks: unique ids, a positive threshold, ordered event times
    /// inside `[0, duration]`, and a link list that is only present in
    /// explicit mode.
    pub fn validate(&self) -> Result<(), SimError> {
        let bad = |msg: String| Err(SimError::Scenario(msg));
        let mut ids = BTreeSet::new();
        for n in &self.nodes {
            if !ids.insert(&n.id) {
                return bad(format!("node id {} appears twice", n.id));
            }
        }
        if self.ttl_threshold == 0 {
            return bad("ttl_threshold must be at least 1".into());
        }
        let mut last = 0;
        for (i, e) in self.events.iter().enumerate() {
            if e.time > self.duration {
                return bad(format!("event {i} at time {} is past duration {}", e.time, self.duration));
            }
            if e.time < last {
                return bad(format!("event {i} at time {} is out of order", e.time));
            }
            last = e.time;
        }
        if self.link_mode == LinkMode::ByRange && !self.links.is_empty() {
            return bad("links may only be listed in explicit link mode".into());
        }
        Ok(())
    }

    /// The network at tick 0. Explicit links go through `connect`, so a link
    /// whose endpoints are not mutually in range (a one-way link) or that
    /// touches an unknown or dead node is rejected here.
    pub fn initial_topology(&self) -> Result<Topology, SimError> {
        self.validate()?;
        let mut topo = Topology::new();
        for n in &self.nodes {
            topo = topo
                .add_node(n.clone())
                .map_err(|e| SimError::Scenario(format!("node {}: {e}", n.id)))?;
        }
        match self.link_mode {
            LinkMode::ByRange => Ok(topo.relink_by_range()),
            LinkMode::Explicit => {
                for (i, (a, b)) in self.links.iter().enumerate() {
                    topo = topo
                        .connect(a, b)
                        .map_err(|e| SimError::Scenario(format!("links[{i}] ({a},{b}): {e}")))?;
                }
                Ok(topo)
            }
        }
    }

    pub fn events_at(&self, tick: u64) -> impl Iterator<Item = &Event> {
        self.events.iter().filter(move |e| e.time == tick)
    }
}
