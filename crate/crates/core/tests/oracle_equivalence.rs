mod common;

use common::{endpoints, oracle_mismatch as compare, random_geometric};
use manet_routes::oracle::enumerate::exhaustive_seeds;
use manet_routes::oracle::bfs_shortest_route;

#[test]
fn random_geometric_topologies_agree() {
    let mut connected = 0;
    for seed in 0..1200u64 {
        let nodes = 5 + (seed % 3) as usize;
        let (topo, t, r) = random_geometric(seed, nodes);
        if let Some(m) = compare(&topo, &t, &r) {
            panic!("seed {seed}: {m}\n{}", serde_json::to_string(&topo).unwrap());
        }
        connected += usize::from(bfs_shortest_route(&topo, &t, &r).unwrap().is_some());
    }
    // both outcomes must be exercised
    assert!(connected > 100 && connected < 1100, "connected {connected}");
}

#[test]
fn exhaustive_small_topologies_agree() {
    let seeds = exhaustive_seeds(2, 4);
    assert_eq!(seeds.len(), 2 + 4 * 6 + 38 * 12);
    for topo in &seeds {
        let (t, r) = endpoints(topo);
        if let Some(m) = compare(topo, &t, &r) {
            panic!("{m}\n{}", serde_json::to_string(topo).unwrap());
        }
    }
}
