//! Simulation traces, one JSON object per line.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::report::InvariantReport;
use crate::routing::{RouteStatusEntry, RoutingState};
use crate::topology::NodeId;

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InvariantSummary {
    pub checked: usize,
    pub failed: Vec<String>,
}

impl From<&InvariantReport> for InvariantSummary {
    fn from(r: &InvariantReport) -> Self {
        InvariantSummary {
            checked: r.checks.len(),
            failed: r.failures().map(|c| c.name.clone()).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TraceEntry {
    pub tick: u64,
    pub action: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
    pub routes: Vec<NodeId>,
    pub allroutes: Vec<RouteStatusEntry>,
    /// Leading 16 hex digits of the SHA-256 of the canonical state digest.
    pub digest: String,
    pub invariants: InvariantSummary,
}

impl TraceEntry {
    pub fn capture(tick: u64, action: impl Into<String>, note: Option<String>, state: &RoutingState) -> (TraceEntry, InvariantReport) {
        let report = state.check_state_invariant();
        let hash = Sha256::digest(state.digest().as_bytes());
        let entry = TraceEntry {
            tick,
            action: action.into(),
            note,
            routes: state.routes.clone(),
            allroutes: state
                .expire
                .iter()
                .map(|(route, status)| RouteStatusEntry {
                    route: route.clone(),
                    status: *status,
                })
                .collect(),
            digest: hex::encode(&hash[..8]),
            invariants: InvariantSummary::from(&report),
        };
        (entry, report)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Trace {
    pub entries: Vec<TraceEntry>,
}

impl Trace {
    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for e in &self.entries {
            out.push_str(&serde_json::to_string(e).expect("trace entries always serialize"));
            out.push('\n');
        }
        out
    }

    pub fn from_jsonl(text: &str) -> Result<Trace, serde_json::Error> {
        let entries = text
            .lines()
            .filter(|l| !l.trim().is_empty())
            .map(serde_json::from_str)
            .collect::<Result<_, _>>()?;
        Ok(Trace { entries })
    }

    pub fn all_passed(&self) -> bool {
        self.entries.iter().all(|e| e.invariants.failed.is_empty())
    }
}
