//! Tick-driven mobility simulator.
//!
//! Each tick runs, in this order:
//!
//! 1. the scenario events scheduled for the tick;
//! 2. in `by_range` mode, a full recomputation of the link set;
//! 3. aging of every node on an active route (nodes that joined a route
//!    during this tick are skipped);
//! 4. route expiry at the scenario threshold;
//! 5. route recovery, when some route is deactivated or crosses a dead node;
//! 6. a checkpoint entry.
//!
//! Every sub-step that changes the state appends a trace entry, and every
//! entry carries the invariant summary of the state it records. The first
//! failing check aborts the run; the trace up to that point is kept in the
//! error.

use std::collections::BTreeSet;

use thiserror::Error;

use crate::routing::{Route, RouteStatus, RoutingError, RoutingState};
use crate::topology::NodeId;

mod scenario;
mod trace;

pub use scenario::{Event, EventKind, LinkMode, Scenario};
pub use trace::{InvariantSummary, Trace, TraceEntry};

#[derive(Debug, Error)]
pub enum SimError {
    #[error("scenario error: {0}")]
    Scenario(String),
    #[error("invariant {check} violated at tick {tick}: {witness}")]
    InvariantViolated {
        tick: u64,
        check: String,
        witness: String,
        trace: Trace,
    },
}

struct Stepper<'a> {
    tick: u64,
    scenario: &'a Scenario,
    state: RoutingState,
    entries: Vec<TraceEntry>,
    /// Nodes that joined a route this tick and so do not age yet.
    fresh: BTreeSet<NodeId>,
}

impl Stepper<'_> {
    fn log(&mut self, action: impl Into<String>, note: Option<String>) -> Result<(), SimError> {
        let (entry, report) = TraceEntry::capture(self.tick, action, note, &self.state);
        self.entries.push(entry);
        match report.first_failure() {
            Some(c) => Err(self.violation(c.name.clone(), c.witness.clone().unwrap_or_default())),
            None => Ok(()),
        }
    }

    fn violation(&mut self, check: String, witness: String) -> SimError {
        SimError::InvariantViolated {
            tick: self.tick,
            check,
            witness,
            trace: Trace {
                entries: std::mem::take(&mut self.entries),
            },
        }
    }

    /// Contract failures abort the run; any other refusal means the
    /// scenario asked for something impossible.
    fn fail(&mut self, err: RoutingError) -> SimError {
        match err {
            RoutingError::PostconditionViolated { op, check, witness } => {
                self.violation(check, format!("{op}: {witness}"))
            }
            other => SimError::Scenario(format!("tick {}: {other}", self.tick)),
        }
    }

    fn apply(
        &mut self,
        action: String,
        result: Result<RoutingState, RoutingError>,
    ) -> Result<(), SimError> {
        match result {
            Ok(next) => {
                self.state = next;
                self.log(action, None)
            }
            Err(e) => Err(self.fail(e)),
        }
    }

    fn request_route(&mut self, src: &NodeId, dst: &NodeId) -> Result<(), SimError> {
        let action = format!("route_initiation({src},{dst})");
        let found = match self.state.route_initiation(src, dst) {
            Ok(found) => found,
            Err(e @ (RoutingError::NoRouteExists { .. } | RoutingError::PreconditionViolated { .. })) => {
                return self.log(action, Some(format!("no route: {e}")));
            }
            Err(e) => return Err(self.fail(e)),
        };
        self.state = found;
        self.log(action, None)?;

        let route = Route::new(self.state.routes.clone()).map_err(|e| self.fail(e))?;
        let is_new = !self.state.allroutes.contains(&route);
        let added = self.state.route_addition(&route);
        self.apply(format!("route_addition({route})"), added)?;
        if is_new {
            self.fresh.extend(route.hops().iter().cloned());
        }

        let reversed = self.state.reverse_route();
        self.apply("reverse_route".into(), reversed)
    }

    fn event(&mut self, kind: &EventKind) -> Result<(), SimError> {
        match kind {
            EventKind::Move { id, position } => {
                let r = self.state.move_node(id, *position);
                self.apply(format!("move({id},{},{})", position.x, position.y), r)
            }
            EventKind::Kill { id } => {
                let r = self.state.kill_node(id);
                self.apply(format!("kill({id})"), r)
            }
            EventKind::Revive { id } => {
                let r = self.state.revive_node(id);
                self.apply(format!("revive({id})"), r)
            }
            EventKind::AddNode { node } => {
                let r = self.state.add_node(node.clone());
                self.apply(format!("add_node({})", node.id), r)
            }
            EventKind::RemoveNode { id } => {
                let r = self.state.remove_node(id);
                self.apply(format!("remove_node({id})"), r)
            }
            EventKind::RequestRoute { src, dst } => self.request_route(src, dst),
        }
    }

    fn needs_recovery(&self) -> bool {
        let Some(topo) = self.state.adhoc.as_ref() else {
            return false;
        };
        self.state.allroutes.iter().any(|r| {
            self.state.status_of(r) != Some(RouteStatus::Activate)
                || r.hops().iter().any(|h| topo.node(h).is_some_and(|n| !n.is_alive()))
        })
    }

    fn run(mut self) -> Result<(RoutingState, Vec<TraceEntry>), SimError> {
        for event in self.scenario.events_at(self.tick) {
            self.event(&event.kind)?;
        }

        if self.scenario.link_mode == LinkMode::ByRange {
            let relinked = self.state.relink_by_range().map_err(|e| self.fail(e))?;
            if relinked != self.state {
                self.state = relinked;
                self.log("relink", None)?;
            }
        }

        let aged = self.state.age_active_hops(&self.fresh).map_err(|e| self.fail(e))?;
        if aged != self.state {
            self.state = aged;
            self.log("age", None)?;
        }

        let threshold = self.scenario.ttl_threshold;
        let expired = self.state.route_expiry(threshold).map_err(|e| self.fail(e))?;
        if expired != self.state {
            self.state = expired;
            self.log(format!("route_expiry({threshold})"), None)?;
        }

        if self.needs_recovery() {
            let (recovered, outcome) = self.state.route_recovery().map_err(|e| self.fail(e))?;
            self.state = recovered;
            self.log("route_recovery", Some(outcome.to_string()))?;
        }

        self.log("checkpoint", None)?;
        Ok((self.state, self.entries))
    }
}

/// Advances `state` through one tick of `scenario`.
pub fn step(
    state: &RoutingState,
    scenario: &Scenario,
    tick: u64,
) -> Result<(RoutingState, Vec<TraceEntry>), SimError> {
    if tick > scenario.duration {
        return Err(SimError::Scenario(format!(
            "tick {tick} is past duration {}",
            scenario.duration
        )));
    }
    if state.adhoc.is_none() {
        return Err(SimError::Scenario("state has no network".into()));
    }
    Stepper {
        tick,
        scenario,
        state: state.clone(),
        entries: Vec::new(),
        fresh: BTreeSet::new(),
    }
    .run()
}

/// Runs every tick `0..=duration` and returns the final state with the trace.
pub fn run_to_end(scenario: &Scenario) -> Result<(RoutingState, Trace), SimError> {
    let topo = scenario.initial_topology()?;
    let mut state = RoutingState::init().with_topology(topo);
    let mut trace = Trace::default();
    for tick in 0..=scenario.duration {
        match step(&state, scenario, tick) {
            Ok((next, entries)) => {
                state = next;
                trace.entries.extend(entries);
            }
            Err(SimError::InvariantViolated {
                tick,
                check,
                witness,
                trace: partial,
            }) => {
                trace.entries.extend(partial.entries);
                return Err(SimError::InvariantViolated {
                    tick,
                    check,
                    witness,
                    trace,
                });
            }
            Err(e) => return Err(e),
        }
    }
    Ok((state, trace))
}

pub fn run(scenario: &Scenario) -> Result<Trace, SimError> {
    run_to_end(scenario).map(|(_, trace)| trace)
}
