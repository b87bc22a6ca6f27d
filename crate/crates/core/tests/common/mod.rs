//! Helpers shared by the integration test targets.
#![allow(dead_code)]

use std::path::PathBuf;

use manet_routes::oracle::enumerate::labels;
use manet_routes::sim::Scenario;
use manet_routes::{MobNode, NodeId, NodeRole, Position, Topology};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const GOLDEN: [&str; 4] = ["baseline", "recovery", "purge", "expiry"];

pub fn repo_root() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../..")
}

pub fn scenario_path(name: &str) -> PathBuf {
    repo_root().join("scenarios").join(format!("{name}.json"))
}

pub fn golden_path(file: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/golden").join(file)
}

pub fn load_scenario(name: &str) -> Scenario {
    let text = std::fs::read_to_string(scenario_path(name)).expect("scenario file present");
    Scenario::from_json(&text).expect("scenario parses")
}

/// Random geometric network: nodes uniform in a square, linked when in
/// mutual range, one transmitter and one receiver, a few nodes possibly dead.
pub fn random_geometric(seed: u64, nodes: usize) -> (Topology, NodeId, NodeId) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let ids = labels(nodes);
    let mut picks = ids.clone();
    picks.shuffle(&mut rng);
    let (t, r) = (picks[0].clone(), picks[1].clone());
    let mut topo = Topology::new();
    for id in &ids {
        let role = if *id == t {
            NodeRole::Transmitter
        } else if *id == r {
            NodeRole::Receiver
        } else {
            NodeRole::Intermediate
        };
        let pos = Position::new(rng.random_range(0.0..30.0), rng.random_range(0.0..30.0));
        let range = rng.random_range(8.0..16.0);
        topo = topo.add_node(MobNode::new(id.clone(), role, pos, range)).unwrap();
    }
    topo = topo.relink_by_range();
    for id in &picks[2..] {
        if rng.random_bool(0.1) {
            topo = topo.kill_node(id).unwrap();
        }
    }
    (topo, t, r)
}

/// Transmitter and receiver of a seed produced by the enumerator.
pub fn endpoints(topo: &Topology) -> (NodeId, NodeId) {
    let find = |role| {
        topo.mobiles()
            .values()
            .find(|n| n.role == role)
            .map(|n| n.id.clone())
            .expect("seed has both endpoints")
    };
    (find(NodeRole::Transmitter), find(NodeRole::Receiver))
}

/// Compares the flood against the oracle on one network; returns a mismatch description.
pub fn oracle_mismatch(topo: &Topology, t: &NodeId, r: &NodeId) -> Option<String> {
    use manet_routes::oracle::{all_simple_routes, bfs_shortest_route};
    use manet_routes::{RoutingError, RoutingState};

    let expected = bfs_shortest_route(topo, t, r).unwrap();
    let got = match RoutingState::init().with_topology(topo.clone()).route_initiation(t, r) {
        Ok(state) => Some(state.routes),
        Err(RoutingError::NoRouteExists { .. }) => None,
        // a dead endpoint is refused up front; the oracle sees it isolated
        Err(RoutingError::PreconditionViolated { .. }) if expected.is_none() => None,
        Err(e) => return Some(format!("unexpected error {e}")),
    };
    if got != expected {
        return Some(format!("flood {got:?} oracle {expected:?}"));
    }
    let all = all_simple_routes(topo, t, r).unwrap();
    match (&expected, all.iter().map(Vec::len).min()) {
        (None, None) => None,
        (Some(p), Some(min)) if p.len() == min && all.contains(p) => None,
        (p, min) => Some(format!("enumeration disagrees: bfs {p:?} min length {min:?}")),
    }
}

pub mod props {
    //! Property bodies, shared by the proptest target and the acceptance runner.

    use manet_routes::oracle::all_simple_routes;
    use manet_routes::{in_range, MobNode, NodeId, NodeRole, Position, Route, RouteStatus, RoutingState};
    use proptest::prelude::*;
    use proptest::test_runner::TestCaseError;

    pub const CASES: u32 = 512;

    pub fn config() -> ProptestConfig {
        ProptestConfig { cases: CASES, failure_persistence: None, ..ProptestConfig::default() }
    }

    /// A state holding a network with at least one transmitter-receiver
    /// route, and every such route.
    pub fn routed(seed: u64, nodes: usize) -> Option<(RoutingState, Vec<Route>)> {
        let (topo, t, r) = super::random_geometric(seed, nodes);
        let routes: Vec<Route> = all_simple_routes(&topo, &t, &r)
            .unwrap()
            .into_iter()
            .map(|hops| Route::new(hops).unwrap())
            .collect();
        (!routes.is_empty()).then(|| (RoutingState::init().with_topology(topo), routes))
    }

    pub fn add_then_delete(seed: u64, nodes: usize, pick: usize, pre: bool) -> Result<(), TestCaseError> {
        let routed = routed(seed, nodes);
        prop_assume!(routed.is_some());
        let (mut state, routes) = routed.unwrap();
        let target = &routes[pick % routes.len()];
        if pre && routes.len() > 1 {
            state = state.route_addition(&routes[(pick + 1) % routes.len()]).unwrap();
        }
        let after = state.route_addition(target).unwrap().route_deletion(target).unwrap();
        prop_assert_eq!(&after.allroutes, &state.allroutes);
        prop_assert_eq!(&after.expire, &state.expire);
        prop_assert_eq!(after.deletedroute.as_slice(), target.hops());
        Ok(())
    }

    pub fn addition_idempotent(seed: u64, nodes: usize, pick: usize) -> Result<(), TestCaseError> {
        let routed = routed(seed, nodes);
        prop_assume!(routed.is_some());
        let (state, routes) = routed.unwrap();
        let target = &routes[pick % routes.len()];
        let once = state.route_addition(target).unwrap();
        let twice = once.route_addition(target).unwrap();
        prop_assert_eq!(&twice, &once);
        prop_assert_eq!(once.status_of(target), Some(RouteStatus::Activate));
        Ok(())
    }

    pub fn reverse_involution(seed: u64, nodes: usize) -> Result<(), TestCaseError> {
        let (topo, t, r) = super::random_geometric(seed, nodes);
        let state = RoutingState::init().with_topology(topo).route_initiation(&t, &r);
        prop_assume!(state.is_ok());
        let state = state.unwrap();
        let back = state.reverse_route().unwrap().reverse_route().unwrap();
        prop_assert_eq!(&back.routes, &state.routes);
        let mut rev = state.routes.clone();
        rev.reverse();
        prop_assert_eq!(&state.reverse_route().unwrap().routes, &rev);
        Ok(())
    }

    pub fn in_range_symmetric(a: (f64, f64, f64), b: (f64, f64, f64)) -> Result<(), TestCaseError> {
        let node = |name: &str, (x, y, range): (f64, f64, f64)| {
            MobNode::new(NodeId::new(name).unwrap(), NodeRole::Intermediate, Position::new(x, y), range)
        };
        let (n1, n2) = (node("P", a), node("Q", b));
        prop_assert_eq!(in_range(&n1, &n2), in_range(&n2, &n1));
        prop_assert!(in_range(&n1, &n1));
        Ok(())
    }

    pub fn node_params() -> impl Strategy<Value = (f64, f64, f64)> {
        (-50.0..50.0f64, -50.0..50.0f64, 0.0..40.0f64)
    }
}
