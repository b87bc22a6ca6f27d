//! Route management for mobile ad hoc networks as an executable,
//! contract-checked model.
//!
//! - [`topology`]: mobile nodes, bidirectional links, range-based connectivity.
//! - [`routing`]: the routing state and its route-lifecycle operations.
//! - [`oracle`]: independent reference algorithms and the bounded explorer.
//! - [`sim`]: tick-driven mobility simulator producing JSON-lines traces.
//! - [`cli`]: the `manet` command-line front end.

pub mod cli;
pub mod fixtures;
pub mod oracle;
pub mod report;
pub mod routing;
pub mod sim;
pub mod topology;

pub use report::{InvariantCheck, InvariantReport};
pub use routing::{RecoveryOutcome, Route, RouteStatus, RouteStatusEntry, RoutingError, RoutingState};
pub use topology::{in_range, Link, MobNode, NodeId, NodeLiveness, NodeRole, Position, Topology, TopologyError};
