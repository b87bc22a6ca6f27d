//! The routing state and its route-lifecycle operations.
//!
//! Every operation is a value transformer: it takes `&self`, checks its
//! preconditions, builds the successor state, and then enforces its own
//! post-condition plus the full state invariant before handing the result
//! back. A contract failure surfaces as [`RoutingError::PostconditionViolated`]
//! instead of a state, so callers never observe a state that breaks the
//! invariant.
//!
//! Stored routes whose status is `Deactivate` are pending recovery. They
//! are exempt from the route-shape clauses of the invariant, because losing
//! a node or a link is exactly what deactivates them.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::report::InvariantReport;
use crate::topology::{MobNode, NodeId, NodeRole, Position, Topology, TopologyError, TOPOLOGY_CHECKS};

/// Default age at which a node expires every route it belongs to.
pub const DEFAULT_TTL_THRESHOLD: u32 = 30;

/// Route-shape clauses, in report order.
pub const ROUTE_CLAUSES: [&str; 5] = [
    "membership",
    "head-role",
    "tail-role",
    "interior-role",
    "consecutive-connectivity",
];

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RoutingError {
    #[error("{op}: precondition violated: {reason}")]
    PreconditionViolated { op: &'static str, reason: String },
    #[error("node {id} has role {actual:?}, expected {expected:?}")]
    RoleMismatch {
        id: NodeId,
        expected: NodeRole,
        actual: NodeRole,
    },
    #[error("node {0} is not in the network")]
    NodeNotInNetwork(NodeId),
    #[error("no route from {src} to {dst}")]
    NoRouteExists { src: NodeId, dst: NodeId },
    #[error("the working route is empty")]
    EmptyRoute,
    #[error("malformed route: {0}")]
    MalformedRoute(String),
    #[error("route {0} is not stored")]
    RouteNotFound(Route),
    #[error("no deactivated or dead-hop route to recover")]
    NothingToRecover,
    #[error("{op}: contract violated: {check} ({witness})")]
    PostconditionViolated {
        op: &'static str,
        check: String,
        witness: String,
    },
    #[error(transparent)]
    Topology(#[from] TopologyError),
}

/// A simple path of node ids. Nonempty, no id repeats.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<NodeId>", into = "Vec<NodeId>")]
pub struct Route(Vec<NodeId>);

impl Route {
    pub fn new(hops: Vec<NodeId>) -> Result<Self, RoutingError> {
        if hops.is_empty() {
            return Err(RoutingError::MalformedRoute("a route needs at least one hop".into()));
        }
        let mut seen = BTreeSet::new();
        for h in &hops {
            if !seen.insert(h) {
                return Err(RoutingError::MalformedRoute(format!("hop {h} repeats")));
            }
        }
        Ok(Route(hops))
    }

    pub fn hops(&self) -> &[NodeId] {
        &self.0
    }

    pub fn head(&self) -> &NodeId {
        &self.0[0]
    }

    pub fn tail(&self) -> &NodeId {
        &self.0[self.0.len() - 1]
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn contains(&self, id: &NodeId) -> bool {
        self.0.contains(id)
    }
}

impl TryFrom<Vec<NodeId>> for Route {
    type Error = RoutingError;

    fn try_from(hops: Vec<NodeId>) -> Result<Self, Self::Error> {
        Route::new(hops)
    }
}

impl From<Route> for Vec<NodeId> {
    fn from(r: Route) -> Self {
        r.0
    }
}

impl fmt::Display for Route {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt_hops(f, &self.0)
    }
}

fn fmt_hops(f: &mut fmt::Formatter<'_>, hops: &[NodeId]) -> fmt::Result {
    f.write_str("[")?;
    for (i, h) in hops.iter().enumerate() {
        if i > 0 {
            f.write_str(",")?;
        }
        write!(f, "{h}")?;
    }
    f.write_str("]")
}

struct Hops<'a>(&'a [NodeId]);

impl fmt::Display for Hops<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt_hops(f, self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum RouteStatus {
    Activate,
    Deactivate,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RouteStatusEntry {
    pub route: Route,
    pub status: RouteStatus,
}

/// What a recovery pass did to each candidate route.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RecoveryOutcome {
    /// Intact routes switched back to `Activate` with hop ages reset.
    pub reactivated: Vec<Route>,
    /// Broken routes replaced by a re-discovered path, `(old, new)`.
    pub repaired: Vec<(Route, Route)>,
    /// Broken routes with no path left between their endpoints.
    pub purged: Vec<Route>,
}

impl fmt::Display for RecoveryOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut parts = Vec::new();
        for r in &self.reactivated {
            parts.push(format!("reactivated {r}"));
        }
        for (old, new) in &self.repaired {
            parts.push(format!("repaired {old} -> {new}"));
        }
        for r in &self.purged {
            parts.push(format!("purged {r}"));
        }
        f.write_str(&parts.join("; "))
    }
}

/// The six-field routing state.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RoutingState {
    pub adhoc: Option<Topology>,
    /// Working route under construction.
    pub routes: Vec<NodeId>,
    pub addedroute: Vec<NodeId>,
    pub deletedroute: Vec<NodeId>,
    pub allroutes: BTreeSet<Route>,
    #[serde(with = "expire_entries")]
    pub expire: BTreeMap<Route, RouteStatus>,
}

mod expire_entries {
    use std::collections::BTreeMap;

    use serde::de::Error as _;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    use super::{Route, RouteStatus, RouteStatusEntry};

    pub fn serialize<S: Serializer>(
        map: &BTreeMap<Route, RouteStatus>,
        s: S,
    ) -> Result<S::Ok, S::Error> {
        let entries: Vec<RouteStatusEntry> = map
            .iter()
            .map(|(route, status)| RouteStatusEntry {
                route: route.clone(),
                status: *status,
            })
            .collect();
        entries.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(
        d: D,
    ) -> Result<BTreeMap<Route, RouteStatus>, D::Error> {
        let entries = Vec::<RouteStatusEntry>::deserialize(d)?;
        let mut map = BTreeMap::new();
        for e in entries {
            if map.insert(e.route.clone(), e.status).is_some() {
                return Err(D::Error::custom(format!("route {} listed twice in expire", e.route)));
            }
        }
        Ok(map)
    }
}

/// Evaluates the five route-shape clauses over `hops`. `allow_reply`
/// accepts a receiver-to-transmitter orientation (the reply path).
fn route_clauses(topo: Option<&Topology>, hops: &[NodeId], allow_reply: bool) -> [Option<String>; 5] {
    if hops.is_empty() {
        return Default::default();
    }
    let Some(topo) = topo else {
        let w = || Some("no network is present".to_string());
        return [w(), w(), w(), w(), w()];
    };
    let role = |i: usize| topo.node(&hops[i]).map(|n| n.role);
    let last = hops.len() - 1;
    let reply = allow_reply && role(0) == Some(NodeRole::Receiver);
    let (head_want, tail_want) = if reply {
        (NodeRole::Receiver, NodeRole::Transmitter)
    } else {
        (NodeRole::Transmitter, NodeRole::Receiver)
    };

    let membership = hops
        .iter()
        .enumerate()
        .find(|(_, h)| !topo.contains(h))
        .map(|(i, h)| format!("hop {i} ({h}) is not in the network"));

    let head = (role(0) != Some(head_want)).then(|| format!("head {} is not a {head_want:?}", hops[0]));
    let tail = (role(last) != Some(tail_want)).then(|| format!("last hop {} is not a {tail_want:?}", hops[last]));

    let interior = (1..last)
        .find(|&i| role(i) != Some(NodeRole::Intermediate))
        .map(|i| format!("hop {i} ({}) is not an Intermediate", hops[i]));

    let connectivity = hops
        .windows(2)
        .position(|w| !topo.has_link(&w[0], &w[1]))
        .map(|i| format!("no link ({},{}) at index {i}", hops[i], hops[i + 1]));

    [membership, head, tail, interior, connectivity]
}

/// A stored route that could carry traffic right now: every clause holds and
/// every hop is alive.
fn route_is_sound(topo: &Topology, route: &Route) -> bool {
    route_clauses(Some(topo), route.hops(), false).iter().all(Option::is_none)
        && route
            .hops()
            .iter()
            .all(|h| topo.node(h).is_some_and(MobNode::is_alive))
}

/// Breadth-first flood from `src`, relaying only through alive nodes and
/// visiting neighbours in id order. The first arrival at each node fixes its
/// predecessor, which yields the lexicographically smallest minimum-hop path.
fn flood(topo: &Topology, src: &NodeId, dst: &NodeId) -> Option<Vec<NodeId>> {
    let mut pred: BTreeMap<NodeId, Option<NodeId>> = BTreeMap::new();
    let mut queue = VecDeque::new();
    pred.insert(src.clone(), None);
    queue.push_back(src.clone());
    while let Some(current) = queue.pop_front() {
        if &current == dst {
            let mut path = vec![current];
            while let Some(Some(p)) = pred.get(path.last()?) {
                path.push(p.clone());
            }
            path.reverse();
            return Some(path);
        }
        let Ok(neighbors) = topo.neighbors(&current) else {
            continue;
        };
        for next in neighbors {
            if pred.contains_key(&next) || !topo.node(&next).is_some_and(MobNode::is_alive) {
                continue;
            }
            pred.insert(next.clone(), Some(current.clone()));
            queue.push_back(next);
        }
    }
    None
}

fn max_hop_age(topo: &Topology, route: &Route) -> Option<u32> {
    route
        .hops()
        .iter()
        .filter_map(|h| topo.node(h).map(|n| n.ttl_age))
        .max()
}

impl RoutingState {
    /// Empty state: no network, empty sequences, no stored routes.
    pub fn init() -> Self {
        RoutingState::default()
    }

    /// Same state bound to `topo`. Used to load a network into a fresh
    /// state; no contract is enforced here.
    pub fn with_topology(&self, topo: Topology) -> Self {
        RoutingState {
            adhoc: Some(topo),
            ..self.clone()
        }
    }

    pub fn status_of(&self, route: &Route) -> Option<RouteStatus> {
        self.expire.get(route).copied()
    }

    pub fn active_routes(&self) -> impl Iterator<Item = &Route> {
        self.allroutes
            .iter()
            .filter(|r| self.status_of(r) == Some(RouteStatus::Activate))
    }

    /// Canonical, collision-free text form: the JSON encoding with every
    /// collection in sorted order.
    pub fn digest(&self) -> String {
        serde_json::to_string(self).expect("routing state always serializes")
    }

    pub fn check_state_invariant(&self) -> InvariantReport {
        let topo = self.adhoc.as_ref();
        let mut report = InvariantReport::new();

        let working = route_clauses(topo, &self.routes, true);
        for (name, violation) in ROUTE_CLAUSES.iter().zip(working) {
            report.record(format!("routes.{name}"), violation);
        }

        let mut stored: [Option<String>; 5] = Default::default();
        for route in self.active_routes() {
            for (slot, violation) in stored.iter_mut().zip(route_clauses(topo, route.hops(), false)) {
                if slot.is_none() {
                    *slot = violation.map(|w| format!("route {route}: {w}"));
                }
            }
        }
        for (name, violation) in ROUTE_CLAUSES.iter().zip(stored) {
            report.record(format!("allroutes.{name}"), violation);
        }

        let missing = self.allroutes.iter().find(|r| !self.expire.contains_key(r));
        let extra = self.expire.keys().find(|r| !self.allroutes.contains(r));
        let domain = match (missing, extra) {
            (Some(r), _) => Some(format!("stored route {r} has no status")),
            (None, Some(r)) => Some(format!("status recorded for unknown route {r}")),
            (None, None) => None,
        };
        report.record("allroutes.expire-domain", domain);

        match topo {
            Some(t) => report.extend_prefixed("topology", t.check_invariants()),
            None => {
                for name in TOPOLOGY_CHECKS {
                    report.record(format!("topology.{name}"), None);
                }
            }
        }
        report
    }

    fn network(&self, op: &'static str) -> Result<&Topology, RoutingError> {
        self.adhoc.as_ref().ok_or_else(|| RoutingError::PreconditionViolated {
            op,
            reason: "no network is present".into(),
        })
    }

    /// Enforces an operation's post-condition and then the state invariant.
    fn finish(
        op: &'static str,
        next: RoutingState,
        post: impl FnOnce(&RoutingState) -> Option<(&'static str, String)>,
    ) -> Result<RoutingState, RoutingError> {
        if let Some((check, witness)) = post(&next) {
            return Err(RoutingError::PostconditionViolated {
                op,
                check: check.to_string(),
                witness,
            });
        }
        let report = next.check_state_invariant();
        if let Some(failed) = report.first_failure() {
            return Err(RoutingError::PostconditionViolated {
                op,
                check: failed.name.clone(),
                witness: failed.witness.clone().unwrap_or_default(),
            });
        }
        Ok(next)
    }

    /// Floods a request from `src` and stores the discovered path in `routes`.
    pub fn route_initiation(&self, src: &NodeId, dst: &NodeId) -> Result<RoutingState, RoutingError> {
        const OP: &str = "route_initiation";
        let topo = self.network(OP)?;
        let endpoints = [(src, NodeRole::Transmitter), (dst, NodeRole::Receiver)];
        for (id, expected) in endpoints {
            let node = topo
                .node(id)
                .ok_or_else(|| RoutingError::NodeNotInNetwork(id.clone()))?;
            if node.role != expected {
                return Err(RoutingError::RoleMismatch {
                    id: id.clone(),
                    expected,
                    actual: node.role,
                });
            }
            if !node.is_alive() {
                return Err(RoutingError::PreconditionViolated {
                    op: OP,
                    reason: format!("endpoint {id} is dead"),
                });
            }
        }
        let path = flood(topo, src, dst).ok_or_else(|| RoutingError::NoRouteExists {
            src: src.clone(),
            dst: dst.clone(),
        })?;
        let next = RoutingState {
            routes: path,
            ..self.clone()
        };
        Self::finish(OP, next, |n| {
            (n.routes.first() != Some(src) || n.routes.last() != Some(dst)).then(|| {
                ("initiation-endpoints", format!("routes {} does not join {src} to {dst}", Hops(&n.routes)))
            })
        })
    }

    /// Turns the working route around into the unicast reply path.
    pub fn reverse_route(&self) -> Result<RoutingState, RoutingError> {
        const OP: &str = "reverse_route";
        if self.routes.is_empty() {
            return Err(RoutingError::EmptyRoute);
        }
        let topo = self.network(OP)?;
        if let Some(w) = route_clauses(Some(topo), &self.routes, true).into_iter().flatten().next() {
            return Err(RoutingError::PreconditionViolated { op: OP, reason: w });
        }
        let mut reversed = self.routes.clone();
        reversed.reverse();
        let next = RoutingState {
            routes: reversed,
            ..self.clone()
        };
        Self::finish(OP, next, |n| {
            let back: Vec<_> = n.routes.iter().rev().cloned().collect();
            (back != self.routes).then(|| ("reverse-exact", format!("{} is not the reversal", Hops(&n.routes))))
        })
    }

    /// Membership and endpoint-role checks shared by addition and deletion.
    fn check_route_shape(topo: &Topology, route: &Route, connected: bool) -> Result<(), RoutingError> {
        if let Some(h) = route.hops().iter().find(|h| !topo.contains(h)) {
            return Err(RoutingError::NodeNotInNetwork(h.clone()));
        }
        if route.len() < 2 {
            return Err(RoutingError::MalformedRoute(format!(
                "{route} needs distinct transmitter and receiver"
            )));
        }
        let [_, head, tail, interior, link] = route_clauses(Some(topo), route.hops(), false);
        let mut problems = vec![head, tail];
        if connected {
            problems.extend([interior, link]);
        }
        match problems.into_iter().flatten().next() {
            Some(w) => Err(RoutingError::MalformedRoute(format!("{route}: {w}"))),
            None => Ok(()),
        }
    }

    /// Inserts `route` into the stored set with status `Activate`. A route
    /// that is new to the set restarts the age of each of its hops.
    pub fn route_addition(&self, route: &Route) -> Result<RoutingState, RoutingError> {
        const OP: &str = "route_addition";
        let topo = self.network(OP)?;
        Self::check_route_shape(topo, route, true)?;

        let mut next = self.clone();
        next.addedroute = route.hops().to_vec();
        if next.allroutes.insert(route.clone()) {
            next.expire.insert(route.clone(), RouteStatus::Activate);
            next.adhoc = Some(topo.with_ages(route.hops().iter().map(|h| (h, 0)))?);
        }
        Self::finish(OP, next, |n| {
            let mut want = self.allroutes.clone();
            want.insert(route.clone());
            if n.allroutes != want {
                Some(("addition-union", format!("stored set is not the union with {route}")))
            } else if n.addedroute != route.hops() {
                Some(("addition-buffer", "addedroute does not hold the route".into()))
            } else {
                None
            }
        })
    }

    /// Removes `route` from the stored set and its status record.
    pub fn route_deletion(&self, route: &Route) -> Result<RoutingState, RoutingError> {
        const OP: &str = "route_deletion";
        let topo = self.network(OP)?;
        Self::check_route_shape(topo, route, false)?;
        if !self.allroutes.contains(route) {
            return Err(RoutingError::RouteNotFound(route.clone()));
        }
        let mut next = self.clone();
        next.deletedroute = route.hops().to_vec();
        next.allroutes.remove(route);
        next.expire.remove(route);
        Self::finish(OP, next, |n| {
            let mut want = self.allroutes.clone();
            want.remove(route);
            if n.allroutes != want || n.expire.contains_key(route) {
                Some(("deletion-difference", format!("{route} was not removed exactly")))
            } else {
                None
            }
        })
    }

    /// Deactivates every stored route with a hop whose age has reached
    /// `ttl_threshold`. Other statuses are left as they were.
    pub fn route_expiry(&self, ttl_threshold: u32) -> Result<RoutingState, RoutingError> {
        const OP: &str = "route_expiry";
        let topo = self.network(OP)?;
        let mut next = self.clone();
        for route in &self.allroutes {
            if max_hop_age(topo, route).is_some_and(|age| age >= ttl_threshold) {
                next.expire.insert(route.clone(), RouteStatus::Deactivate);
            }
        }
        Self::finish(OP, next, |n| {
            self.allroutes.iter().find_map(|r| {
                let expired = max_hop_age(topo, r).is_some_and(|age| age >= ttl_threshold);
                let before = self.status_of(r);
                let after = n.status_of(r);
                let ok = if expired {
                    after == Some(RouteStatus::Deactivate)
                } else {
                    after == before
                };
                (!ok).then(|| ("expiry-boundary", format!("route {r}: {before:?} -> {after:?}")))
            })
        })
    }

    /// Routes that are deactivated, lack a status, or cross a dead node.
    fn recovery_candidates(&self, topo: &Topology) -> Vec<Route> {
        self.allroutes
            .iter()
            .filter(|r| {
                self.status_of(r) != Some(RouteStatus::Activate)
                    || r.hops()
                        .iter()
                        .any(|h| topo.node(h).is_some_and(|n| !n.is_alive()))
            })
            .cloned()
            .collect()
    }

    /// Re-activates, repairs or purges every deactivated or dead-hop route.
    /// Afterwards every stored route is `Activate`.
    pub fn route_recovery(&self) -> Result<(RoutingState, RecoveryOutcome), RoutingError> {
        const OP: &str = "route_recovery";
        let topo = self.network(OP)?;
        let candidates = self.recovery_candidates(topo);
        if candidates.is_empty() {
            return Err(RoutingError::NothingToRecover);
        }

        let mut next = self.clone();
        let mut outcome = RecoveryOutcome::default();
        for route in candidates {
            let current = next.adhoc.clone().unwrap_or_default();
            if route_is_sound(&current, &route) {
                next.adhoc = Some(current.with_ages(route.hops().iter().map(|h| (h, 0)))?);
                next.expire.insert(route.clone(), RouteStatus::Activate);
                outcome.reactivated.push(route);
                continue;
            }
            next.allroutes.remove(&route);
            next.expire.remove(&route);
            let endpoints_usable = [(route.head(), NodeRole::Transmitter), (route.tail(), NodeRole::Receiver)]
                .into_iter()
                .all(|(id, role)| current.node(id).is_some_and(|n| n.is_alive() && n.role == role));
            let repaired = endpoints_usable
                .then(|| flood(&current, route.head(), route.tail()))
                .flatten()
                .and_then(|path| Route::new(path).ok());
            match repaired {
                Some(fresh) => {
                    next.adhoc = Some(current.with_ages(fresh.hops().iter().map(|h| (h, 0)))?);
                    next.allroutes.insert(fresh.clone());
                    next.expire.insert(fresh.clone(), RouteStatus::Activate);
                    outcome.repaired.push((route, fresh));
                }
                None => outcome.purged.push(route),
            }
        }
        let next = Self::finish(OP, next, |n| {
            n.expire
                .iter()
                .find(|(_, s)| **s != RouteStatus::Activate)
                .map(|(r, _)| ("recovery-post", format!("route {r} is still deactivated")))
        })?;
        Ok((next, outcome))
    }

    /// Deactivates stored routes that lost a node, a link or a role, and
    /// drops a working route that no longer holds.
    fn invalidate_broken(mut self) -> RoutingState {
        let Some(topo) = self.adhoc.clone() else {
            return self;
        };
        let broken: Vec<Route> = self
            .active_routes()
            .filter(|r| !route_is_sound(&topo, r))
            .cloned()
            .collect();
        for r in broken {
            self.expire.insert(r, RouteStatus::Deactivate);
        }
        let working_ok = route_clauses(Some(&topo), &self.routes, true)
            .iter()
            .all(Option::is_none);
        if !working_ok {
            self.routes.clear();
        }
        self
    }

    fn map_topology(
        &self,
        op: &'static str,
        f: impl FnOnce(&Topology) -> Result<Topology, TopologyError>,
    ) -> Result<RoutingState, RoutingError> {
        let topo = self.network(op)?;
        let next = RoutingState {
            adhoc: Some(f(topo)?),
            ..self.clone()
        }
        .invalidate_broken();
        Self::finish(op, next, |_| None)
    }

    pub fn kill_node(&self, id: &NodeId) -> Result<RoutingState, RoutingError> {
        self.map_topology("kill_node", |t| t.kill_node(id))
    }

    pub fn revive_node(&self, id: &NodeId) -> Result<RoutingState, RoutingError> {
        self.map_topology("revive_node", |t| t.revive_node(id))
    }

    pub fn move_node(&self, id: &NodeId, position: Position) -> Result<RoutingState, RoutingError> {
        self.map_topology("move_node", |t| t.move_node(id, position))
    }

    pub fn add_node(&self, node: MobNode) -> Result<RoutingState, RoutingError> {
        self.map_topology("add_node", |t| t.add_node(node))
    }

    pub fn remove_node(&self, id: &NodeId) -> Result<RoutingState, RoutingError> {
        self.map_topology("remove_node", |t| t.remove_node(id))
    }

    pub fn relink_by_range(&self) -> Result<RoutingState, RoutingError> {
        self.map_topology("relink_by_range", |t| Ok(t.relink_by_range()))
    }

    /// Advances by one the age of every node on an active route, skipping
    /// the ids in `skip`. Each node ages once however many routes share it.
    pub fn age_active_hops(&self, skip: &BTreeSet<NodeId>) -> Result<RoutingState, RoutingError> {
        let hops: BTreeSet<NodeId> = self
            .active_routes()
            .flat_map(|r| r.hops().iter().cloned())
            .filter(|h| !skip.contains(h))
            .collect();
        self.map_topology("age_active_hops", |t| {
            let ages: Vec<(&NodeId, u32)> = hops
                .iter()
                .filter_map(|h| t.node(h).map(|n| (h, n.ttl_age.saturating_add(1))))
                .collect();
            t.with_ages(ages)
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{f1, f2, id, sample_route_ids};
    use crate::topology::Link;

    fn ids(v: &[&str]) -> Vec<NodeId> {
        v.iter().map(|s| id(s)).collect()
    }

    fn route(v: &[&str]) -> Route {
        Route::new(ids(v)).unwrap()
    }

    fn on(topo: Topology) -> RoutingState {
        RoutingState::init().with_topology(topo)
    }

    fn sample() -> Route {
        Route::new(sample_route_ids()).unwrap()
    }

    fn stored_on(topo: Topology) -> RoutingState {
        on(topo).route_addition(&sample()).unwrap()
    }

    fn with_age(state: &RoutingState, node: &str, age: u32) -> RoutingState {
        let topo = state.adhoc.as_ref().unwrap().with_ages([(&id(node), age)]).unwrap();
        state.with_topology(topo)
    }

    #[test]
    fn init_is_empty_and_valid() {
        let s = RoutingState::init();
        assert!(s.adhoc.is_none());
        assert!(s.routes.is_empty() && s.addedroute.is_empty() && s.deletedroute.is_empty());
        assert!(s.allroutes.is_empty() && s.expire.is_empty());
        assert!(s.check_state_invariant().all_passed());
        assert_eq!(s, RoutingState::init());
    }

    #[test]
    fn route_new_rejects_empty_and_repeats() {
        assert!(Route::new(vec![]).is_err());
        assert!(Route::new(ids(&["A", "B", "A"])).is_err());
    }

    #[test]
    fn initiation_finds_sample_route() {
        let s = on(f1()).route_initiation(&id("A"), &id("D")).unwrap();
        assert_eq!(s.routes, sample_route_ids());
        assert!(s.check_state_invariant().all_passed());
    }

    #[test]
    fn initiation_over_direct_link() {
        let topo = Topology::new()
            .add_node(MobNode::new(id("S"), NodeRole::Transmitter, Position::new(0.0, 0.0), 5.0))
            .unwrap()
            .add_node(MobNode::new(id("R"), NodeRole::Receiver, Position::new(1.0, 0.0), 5.0))
            .unwrap()
            .connect(&id("S"), &id("R"))
            .unwrap();
        let s = on(topo).route_initiation(&id("S"), &id("R")).unwrap();
        assert_eq!(s.routes, ids(&["S", "R"]));
    }

    #[test]
    fn initiation_without_g_has_no_route() {
        let topo = f1().remove_node(&id("G")).unwrap();
        let err = on(topo).route_initiation(&id("A"), &id("D")).unwrap_err();
        assert_eq!(err, RoutingError::NoRouteExists { src: id("A"), dst: id("D") });
    }

    #[test]
    fn initiation_preconditions() {
        assert!(matches!(
            RoutingState::init().route_initiation(&id("A"), &id("D")),
            Err(RoutingError::PreconditionViolated { .. })
        ));
        assert_eq!(
            on(f1()).route_initiation(&id("F"), &id("D")).unwrap_err(),
            RoutingError::RoleMismatch {
                id: id("F"),
                expected: NodeRole::Transmitter,
                actual: NodeRole::Intermediate
            }
        );
        assert_eq!(
            on(f1()).route_initiation(&id("A"), &id("Q")).unwrap_err(),
            RoutingError::NodeNotInNetwork(id("Q"))
        );
        let dead = on(f1()).kill_node(&id("D")).unwrap();
        assert!(matches!(
            dead.route_initiation(&id("A"), &id("D")),
            Err(RoutingError::PreconditionViolated { .. })
        ));
    }

    #[test]
    fn initiation_prefers_shortcut() {
        let s = on(f2()).route_initiation(&id("A"), &id("D")).unwrap();
        assert_eq!(s.routes, ids(&["A", "B", "G", "C", "D"]));
    }

    #[test]
    fn reverse_sample_route() {
        let s = on(f1()).route_initiation(&id("A"), &id("D")).unwrap();
        let r = s.reverse_route().unwrap();
        assert_eq!(r.routes, ids(&["D", "C", "G", "B", "F", "A"]));
        assert!(r.check_state_invariant().all_passed());
        assert_eq!(r.reverse_route().unwrap().routes, s.routes);
    }

    #[test]
    fn reverse_two_hop() {
        let topo = Topology::new()
            .add_node(MobNode::new(id("S"), NodeRole::Transmitter, Position::new(0.0, 0.0), 5.0))
            .unwrap()
            .add_node(MobNode::new(id("R"), NodeRole::Receiver, Position::new(1.0, 0.0), 5.0))
            .unwrap()
            .connect(&id("S"), &id("R"))
            .unwrap();
        let s = on(topo).route_initiation(&id("S"), &id("R")).unwrap();
        assert_eq!(s.reverse_route().unwrap().routes, ids(&["R", "S"]));
    }

    #[test]
    fn reverse_needs_working_route() {
        assert_eq!(on(f1()).reverse_route().unwrap_err(), RoutingError::EmptyRoute);
        let bad = RoutingState { routes: ids(&["A", "D"]), ..on(f1()) };
        assert!(matches!(bad.reverse_route(), Err(RoutingError::PreconditionViolated { .. })));
    }

    #[test]
    fn addition_stores_active_route() {
        let s = stored_on(f1());
        assert_eq!(s.allroutes, BTreeSet::from([sample()]));
        assert_eq!(s.status_of(&sample()), Some(RouteStatus::Activate));
        assert_eq!(s.addedroute, sample_route_ids());
        assert_eq!(s.route_addition(&sample()).unwrap().allroutes, s.allroutes);
    }

    #[test]
    fn addition_resets_ages_of_new_route_only() {
        let aged = with_age(&on(f1()), "G", 12);
        let s = aged.route_addition(&sample()).unwrap();
        assert_eq!(s.adhoc.as_ref().unwrap().node(&id("G")).unwrap().ttl_age, 0);
        let again = with_age(&s, "G", 5).route_addition(&sample()).unwrap();
        assert_eq!(again.adhoc.as_ref().unwrap().node(&id("G")).unwrap().ttl_age, 5);
    }

    #[test]
    fn addition_rejects_unlinked_route() {
        let err = on(f1()).route_addition(&route(&["A", "F", "D"])).unwrap_err();
        assert!(matches!(err, RoutingError::MalformedRoute(_)), "{err:?}");
        let err = on(f1()).route_addition(&route(&["A", "Z", "D"])).unwrap_err();
        assert_eq!(err, RoutingError::NodeNotInNetwork(id("Z")));
        let err = on(f1()).route_addition(&route(&["F", "B"])).unwrap_err();
        assert!(matches!(err, RoutingError::MalformedRoute(_)));
    }

    #[test]
    fn deletion_reverses_addition() {
        let s = stored_on(f1());
        let d = s.route_deletion(&sample()).unwrap();
        assert!(d.allroutes.is_empty());
        assert!(d.expire.is_empty());
        assert_eq!(d.deletedroute, sample_route_ids());
        assert_eq!(
            on(f1()).route_deletion(&sample()).unwrap_err(),
            RoutingError::RouteNotFound(sample())
        );
    }

    #[test]
    fn expiry_threshold_boundary() {
        let s = stored_on(f1());
        let at = with_age(&s, "G", 30).route_expiry(DEFAULT_TTL_THRESHOLD).unwrap();
        assert_eq!(at.status_of(&sample()), Some(RouteStatus::Deactivate));
        assert!(at.check_state_invariant().all_passed());

        let mut below = s.clone();
        for n in ["A", "F", "B", "G", "C", "D"] {
            below = with_age(&below, n, 29);
        }
        let kept = below.route_expiry(DEFAULT_TTL_THRESHOLD).unwrap();
        assert_eq!(kept.status_of(&sample()), Some(RouteStatus::Activate));
        assert_eq!(on(f1()).route_expiry(30).unwrap(), on(f1()));
    }

    #[test]
    fn expiry_ignores_nodes_off_route() {
        let s = with_age(&stored_on(f1()), "E", 99).route_expiry(30).unwrap();
        assert_eq!(s.status_of(&sample()), Some(RouteStatus::Activate));
    }

    #[test]
    fn recovery_reactivates_intact_route() {
        let s = with_age(&stored_on(f1()), "G", 30).route_expiry(30).unwrap();
        let (r, outcome) = s.route_recovery().unwrap();
        assert_eq!(outcome.reactivated, vec![sample()]);
        assert_eq!(r.status_of(&sample()), Some(RouteStatus::Activate));
        assert!(r.adhoc.as_ref().unwrap().mobiles().values().all(|n| n.ttl_age == 0));
    }

    #[test]
    fn recovery_repairs_through_alternate() {
        // Route stored on F1's links, then the A–B shortcut appears and F dies.
        let s = stored_on(f1())
            .move_node(&id("A"), crate::fixtures::F2_A_POSITION)
            .unwrap()
            .relink_by_range()
            .unwrap();
        assert_eq!(s.adhoc.as_ref().unwrap().connections(), f2().connections());
        let killed = s.kill_node(&id("F")).unwrap();
        assert_eq!(killed.status_of(&sample()), Some(RouteStatus::Deactivate));
        let (r, outcome) = killed.route_recovery().unwrap();
        let alt = route(&["A", "B", "G", "C", "D"]);
        assert_eq!(outcome.repaired, vec![(sample(), alt.clone())]);
        assert_eq!(r.allroutes, BTreeSet::from([alt.clone()]));
        assert_eq!(r.status_of(&alt), Some(RouteStatus::Activate));
    }

    #[test]
    fn recovery_purges_unrepairable_route() {
        let killed = stored_on(f1()).kill_node(&id("F")).unwrap();
        let (r, outcome) = killed.route_recovery().unwrap();
        assert_eq!(outcome.purged, vec![sample()]);
        assert!(r.allroutes.is_empty() && r.expire.is_empty());
    }

    #[test]
    fn recovery_needs_a_candidate() {
        assert_eq!(stored_on(f1()).route_recovery().unwrap_err(), RoutingError::NothingToRecover);
    }

    #[test]
    fn kill_clears_broken_working_route() {
        let s = on(f1()).route_initiation(&id("A"), &id("D")).unwrap();
        let k = s.kill_node(&id("C")).unwrap();
        assert!(k.routes.is_empty());
        let k = s.kill_node(&id("E")).unwrap();
        assert_eq!(k.routes, s.routes);
    }

    #[test]
    fn aging_touches_active_hops_once() {
        let s = stored_on(f1());
        let aged = s.age_active_hops(&BTreeSet::from([id("A")])).unwrap();
        let topo = aged.adhoc.as_ref().unwrap();
        assert_eq!(topo.node(&id("A")).unwrap().ttl_age, 0);
        assert_eq!(topo.node(&id("B")).unwrap().ttl_age, 1);
        assert_eq!(topo.node(&id("E")).unwrap().ttl_age, 0);
    }

    #[test]
    fn invariant_reports_head_role() {
        let s = RoutingState { routes: ids(&["F", "B"]), ..on(f1()) };
        let report = s.check_state_invariant();
        let head = report.get("routes.head-role").unwrap();
        assert!(!head.passed);
        assert!(head.witness.as_deref().unwrap().contains('F'));
    }

    #[test]
    fn invariant_reports_missing_link() {
        let s = RoutingState { routes: ids(&["A", "D"]), ..on(f1()) };
        let report = s.check_state_invariant();
        let link = report.get("routes.consecutive-connectivity").unwrap();
        assert!(!link.passed);
        assert!(link.witness.as_deref().unwrap().contains("index 0"));
    }

    #[test]
    fn invariant_names_are_unique() {
        let report = stored_on(f1()).check_state_invariant();
        let names: BTreeSet<_> = report.checks.iter().map(|c| c.name.clone()).collect();
        assert_eq!(names.len(), report.checks.len());
        assert_eq!(report.checks.len(), 5 + 5 + 1 + 4);
    }

    #[test]
    fn invariant_covers_stored_active_routes() {
        let mut s = stored_on(f1());
        let topo = s.adhoc.as_ref().unwrap();
        let conns: Vec<Link> = topo
            .connections()
            .iter()
            .filter(|l| !(l.src == id("G") && l.dst == id("C")) && !(l.src == id("C") && l.dst == id("G")))
            .cloned()
            .collect();
        s.adhoc = Some(Topology::from_raw(topo.mobiles().values().cloned(), conns).unwrap());
        assert!(!s.check_state_invariant().get("allroutes.consecutive-connectivity").unwrap().passed);
        s.expire.insert(sample(), RouteStatus::Deactivate);
        assert!(s.check_state_invariant().all_passed());
    }

    #[test]
    fn operations_fail_on_broken_input() {
        let t = f1();
        let mut conns = t.connections().clone();
        conns.remove(&Link::new(id("E"), id("F")));
        let broken = on(Topology::from_raw(t.mobiles().values().cloned(), conns).unwrap());
        let err = broken.route_initiation(&id("A"), &id("D")).unwrap_err();
        assert!(matches!(err, RoutingError::PostconditionViolated { .. }));
    }

    #[test]
    fn state_json_round_trip() {
        let s = stored_on(f1()).route_initiation(&id("A"), &id("D")).unwrap();
        let json = serde_json::to_string(&s).unwrap();
        assert!(json.contains(r#"["A","F","B","G","C","D"]"#));
        let back: RoutingState = serde_json::from_str(&json).unwrap();
        assert_eq!(back, s);
        assert_eq!(serde_json::to_string(&back).unwrap(), json);
    }
}
