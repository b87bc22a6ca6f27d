//! Reference networks used by tests, golden scenarios and the explorer.
//!
//! F1 lays the sample route out on a line with one pendant node:
//!
//! ```text
//!        E
//!        |
//!   A -- F -- B -- G -- C -- D
//! ```
//!
//! Every node has range 10 and consecutive nodes sit 8 units apart, so the
//! explicit link list is exactly the in-range relation. F2 moves A to
//! (8, -6), which brings it within range of B (distance 10) while keeping
//! A–F, and adds nothing else.

use crate::topology::{MobNode, NodeId, NodeRole, Position, Topology};

pub const RANGE: f64 = 10.0;

/// Shorthand for a known-valid id.
pub fn id(name: &str) -> NodeId {
    NodeId::new(name).expect("fixture ids are nonempty")
}

fn layout(a_position: Position) -> Vec<MobNode> {
    let spots = [
        ("A", a_position),
        ("B", Position::new(16.0, 0.0)),
        ("C", Position::new(32.0, 0.0)),
        ("D", Position::new(40.0, 0.0)),
        ("E", Position::new(8.0, 8.0)),
        ("F", Position::new(8.0, 0.0)),
        ("G", Position::new(24.0, 0.0)),
    ];
    spots
        .into_iter()
        .map(|(name, pos)| {
            let role = match name {
                "A" => NodeRole::Transmitter,
                "D" => NodeRole::Receiver,
                _ => NodeRole::Intermediate,
            };
            MobNode::new(id(name), role, pos, RANGE)
        })
        .collect()
}

const F1_LINKS: [(&str, &str); 6] = [
    ("A", "F"),
    ("F", "B"),
    ("B", "G"),
    ("G", "C"),
    ("C", "D"),
    ("E", "F"),
];

fn build(nodes: Vec<MobNode>, links: &[(&str, &str)]) -> Topology {
    let mut topo = Topology::new();
    for n in nodes {
        topo = topo.add_node(n).expect("fixture ids are unique");
    }
    for (a, b) in links {
        topo = topo.connect(&id(a), &id(b)).expect("fixture links are in range");
    }
    topo
}

/// Seven nodes, A transmits, D receives; the only A–D path is A,F,B,G,C,D.
pub fn f1() -> Topology {
    build(layout(Position::new(0.0, 0.0)), &F1_LINKS)
}

/// F1 plus an A–B link, giving the alternate path A,B,G,C,D.
pub fn f2() -> Topology {
    let mut links = F1_LINKS.to_vec();
    links.push(("A", "B"));
    build(layout(Position::new(8.0, -6.0)), &links)
}

/// Position of A in F2.
pub const F2_A_POSITION: Position = Position::new(8.0, -6.0);

/// The sample route on F1.
pub fn sample_route_ids() -> Vec<NodeId> {
    ["A", "F", "B", "G", "C", "D"].into_iter().map(id).collect()
}
