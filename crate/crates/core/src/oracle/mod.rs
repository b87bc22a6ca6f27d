//! Reference algorithms that share no code with the routing operations.
//!
//! The shortest-route oracle measures hop distance backwards from the
//! destination and then walks forward greedily, taking the smallest id that
//! stays on a shortest path. The simple-route enumerator is a plain
//! depth-first search. Both read the raw connection set directly.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use thiserror::Error;

use crate::topology::{NodeId, Topology};

pub mod enumerate;
pub mod explore;

pub use explore::{explore, ExplorationReport, ExploreConfig, ExploreError};

/// Largest topology `all_simple_routes` will enumerate.
pub const MAX_ENUMERATION_NODES: usize = 10;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OracleError {
    #[error("node {0} is not in the network")]
    NodeNotInNetwork(NodeId),
    #[error("topology has {0} nodes; enumeration is limited to {MAX_ENUMERATION_NODES}")]
    TopologyTooLarge(usize),
}

fn adjacency(topo: &Topology) -> BTreeMap<&NodeId, BTreeSet<&NodeId>> {
    let mut adj: BTreeMap<&NodeId, BTreeSet<&NodeId>> = BTreeMap::new();
    for link in topo.connections() {
        adj.entry(&link.src).or_default().insert(&link.dst);
    }
    adj
}

fn require(topo: &Topology, ids: [&NodeId; 2]) -> Result<(), OracleError> {
    match ids.into_iter().find(|id| !topo.contains(id)) {
        Some(id) => Err(OracleError::NodeNotInNetwork(id.clone())),
        None => Ok(()),
    }
}

/// Lexicographically smallest minimum-hop path from `src` to `dst`, or
/// `None` when disconnected. For `src == dst` the degenerate one-hop path
/// `[src]` comes back; it is never a valid route and callers reject it.
pub fn bfs_shortest_route(
    topo: &Topology,
    src: &NodeId,
    dst: &NodeId,
) -> Result<Option<Vec<NodeId>>, OracleError> {
    require(topo, [src, dst])?;
    let adj = adjacency(topo);
    let mut incoming: BTreeMap<&NodeId, Vec<&NodeId>> = BTreeMap::new();
    for (from, tos) in &adj {
        for to in tos {
            incoming.entry(*to).or_default().push(*from);
        }
    }

    // hop distance to dst along directed links
    let mut dist: BTreeMap<&NodeId, usize> = BTreeMap::from([(dst, 0)]);
    let mut queue = VecDeque::from([dst]);
    while let Some(v) = queue.pop_front() {
        let d = dist[v];
        for u in incoming.get(v).into_iter().flatten() {
            if !dist.contains_key(u) {
                dist.insert(u, d + 1);
                queue.push_back(u);
            }
        }
    }
    let Some(&total) = dist.get(src) else {
        return Ok(None);
    };

    let mut path = vec![src.clone()];
    let mut at = src;
    for remaining in (0..total).rev() {
        let step = adj
            .get(at)
            .into_iter()
            .flatten()
            .find(|w| dist.get(*w) == Some(&remaining))
            .expect("a shortest-path successor exists at every step");
        path.push((*step).clone());
        at = step;
    }
    Ok(Some(path))
}

/// Every simple path from `src` to `dst`.
pub fn all_simple_routes(
    topo: &Topology,
    src: &NodeId,
    dst: &NodeId,
) -> Result<BTreeSet<Vec<NodeId>>, OracleError> {
    require(topo, [src, dst])?;
    if topo.len() > MAX_ENUMERATION_NODES {
        return Err(OracleError::TopologyTooLarge(topo.len()));
    }
    let adj = adjacency(topo);
    let mut found = BTreeSet::new();
    let mut path = vec![src];
    dfs(&adj, dst, &mut path, &mut found);
    Ok(found)
}

fn dfs<'a>(
    adj: &BTreeMap<&'a NodeId, BTreeSet<&'a NodeId>>,
    dst: &NodeId,
    path: &mut Vec<&'a NodeId>,
    found: &mut BTreeSet<Vec<NodeId>>,
) {
    let at = *path.last().expect("path starts at src");
    if at == dst {
        found.insert(path.iter().map(|id| (*id).clone()).collect());
        return;
    }
    for next in adj.get(at).into_iter().flatten() {
        if !path.contains(next) {
            path.push(next);
            dfs(adj, dst, path, found);
            path.pop();
        }
    }
}
