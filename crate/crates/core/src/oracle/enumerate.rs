//! Exhaustive generators for small labeled topologies.

use std::collections::BTreeSet;
use std::f64::consts::TAU;

use crate::topology::{MobNode, NodeId, NodeRole, Position, Topology};

/// Node ids used by the generators: `A`, `B`, ...
pub fn labels(n: usize) -> Vec<NodeId> {
    (0..n)
        .map(|i| {
            let c = char::from(b'A' + u8::try_from(i).expect("small label index"));
            NodeId::new(c.to_string()).expect("nonempty label")
        })
        .collect()
}

/// Every connected simple graph on `n` labeled nodes (`n <= 6`), each node
/// an alive Intermediate placed on a unit circle with range 2, so any link
/// also satisfies the range rule. Ordered by edge bitmask.
pub fn connected_labeled_topologies(n: usize) -> Vec<Topology> {
    assert!(n <= 6, "edge bitmask enumeration is limited to 6 nodes");
    let ids = labels(n);
    let pairs: Vec<(usize, usize)> = (0..n)
        .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
        .collect();
    let base = ids.iter().enumerate().fold(Topology::new(), |t, (i, id)| {
        let angle = TAU * i as f64 / n.max(1) as f64;
        let node = MobNode::new(
            id.clone(),
            NodeRole::Intermediate,
            Position::new(angle.cos(), angle.sin()),
            2.0,
        );
        t.add_node(node).expect("labels are unique")
    });

    let mut out = Vec::new();
    for mask in 0u32..(1 << pairs.len()) {
        let edges: Vec<(usize, usize)> = pairs
            .iter()
            .enumerate()
            .filter(|(bit, _)| mask & (1 << bit) != 0)
            .map(|(_, p)| *p)
            .collect();
        if !is_connected(n, &edges) {
            continue;
        }
        let topo = edges.iter().fold(base.clone(), |t, (i, j)| {
            t.connect(&ids[*i], &ids[*j]).expect("unit-circle nodes are in range")
        });
        out.push(topo);
    }
    out
}

fn is_connected(n: usize, edges: &[(usize, usize)]) -> bool {
    if n == 0 {
        return true;
    }
    let mut reached = BTreeSet::from([0]);
    let mut grew = true;
    while grew {
        grew = false;
        for (a, b) in edges {
            if reached.contains(a) != reached.contains(b) {
                reached.insert(*a);
                reached.insert(*b);
                grew = true;
            }
        }
    }
    reached.len() == n
}

/// Copies of `topo` with exactly one Transmitter and one Receiver, for every
/// ordered choice of the two; all other nodes are Intermediate.
pub fn role_assignments(topo: &Topology) -> Vec<Topology> {
    let ids: Vec<&NodeId> = topo.mobiles().keys().collect();
    let mut out = Vec::new();
    for t in &ids {
        for r in &ids {
            if t == r {
                continue;
            }
            out.push(with_roles(topo, t, r));
        }
    }
    out
}

/// `topo` with `transmitter` and `receiver` set and everyone else Intermediate.
pub fn with_roles(topo: &Topology, transmitter: &NodeId, receiver: &NodeId) -> Topology {
    let nodes = topo.mobiles().values().map(|n| {
        let role = if &n.id == transmitter {
            NodeRole::Transmitter
        } else if &n.id == receiver {
            NodeRole::Receiver
        } else {
            NodeRole::Intermediate
        };
        MobNode { role, ..n.clone() }
    });
    Topology::from_raw(nodes, topo.connections().iter().cloned()).expect("same node set")
}

/// All connected labeled topologies on `min_nodes..=max_nodes` nodes under
/// every single-transmitter single-receiver role assignment.
pub fn exhaustive_seeds(min_nodes: usize, max_nodes: usize) -> Vec<Topology> {
    (min_nodes.max(2)..=max_nodes)
        .flat_map(connected_labeled_topologies)
        .flat_map(|t| role_assignments(&t))
        .collect()
}
