//! Bounded exhaustive exploration of the routing state space.
//!
//! From each seed topology the explorer enumerates, breadth first, every
//! sequence of operations up to a depth bound, deduplicating states by their
//! canonical digest. Every reached state is checked against the state and
//! topology invariants; expiry and recovery transitions are additionally
//! checked against their post-conditions by code in this module, separate
//! from the contracts the operations enforce themselves. Violating states
//! are recorded with their full operation trace and are not expanded.

use std::collections::{BTreeMap, HashSet};
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::report::InvariantReport;
use crate::routing::{Route, RouteStatus, RoutingError, RoutingState};
use crate::topology::{NodeRole, Topology};

pub const MAX_SEED_NODES: usize = 5;
pub const MAX_DEPTH: usize = 6;
pub const DEFAULT_DEPTH: usize = 4;
pub const DEFAULT_BUDGET: u64 = 1_000_000;
/// Age threshold used while exploring. Small enough that expiry fires
/// within the depth bound.
pub const EXPLORE_TTL_THRESHOLD: u32 = 1;

pub const REPORT_HEADER: &str = "Bounded exhaustive exploration: every state reachable from the seeds \
within the depth bound was checked against each named invariant and operation contract; \
these checks replace static proof obligations with executable ones.";

#[derive(Debug, Error)]
pub enum ExploreError {
    #[error("seed {index} has {nodes} nodes; at most {MAX_SEED_NODES} are explored")]
    SeedTooLarge { index: usize, nodes: usize },
    #[error("depth {0} exceeds the bound of {MAX_DEPTH}")]
    DepthTooLarge(usize),
    #[error("state budget of {budget} exhausted after {} states", .report.states_visited)]
    BudgetExceeded {
        budget: u64,
        report: Box<ExplorationReport>,
    },
    #[error("could not build worker pool: {0}")]
    ThreadPool(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExploreConfig {
    pub max_depth: usize,
    pub budget: u64,
    pub ttl_threshold: u32,
    /// Worker threads; `None` uses the global rayon pool.
    pub threads: Option<usize>,
}

impl Default for ExploreConfig {
    fn default() -> Self {
        ExploreConfig {
            max_depth: DEFAULT_DEPTH,
            budget: DEFAULT_BUDGET,
            ttl_threshold: EXPLORE_TTL_THRESHOLD,
            threads: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Violation {
    pub seed: usize,
    pub trace: Vec<String>,
    pub check: String,
    pub witness: String,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CheckTally {
    pub evaluated: u64,
    pub failed: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExplorationReport {
    pub header: String,
    pub seeds: usize,
    pub depth_bound: usize,
    pub ttl_threshold: u32,
    pub states_visited: u64,
    pub max_depth: usize,
    pub budget_exceeded: bool,
    pub violations: Vec<Violation>,
    pub coverage: BTreeMap<String, u64>,
    pub checks: BTreeMap<String, CheckTally>,
}

impl ExplorationReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty() && !self.budget_exceeded
    }
}

#[derive(Debug, Default)]
struct SeedRun {
    states: u64,
    max_depth: usize,
    budget_hit: bool,
    violations: Vec<Violation>,
    coverage: BTreeMap<String, u64>,
    checks: BTreeMap<String, CheckTally>,
}

impl SeedRun {
    fn tally(&mut self, name: &str, passed: bool) {
        let t = self.checks.entry(name.to_string()).or_default();
        t.evaluated += 1;
        if !passed {
            t.failed += 1;
        }
    }

    /// Records all checks for `state`; returns the first failure.
    fn check(&mut self, report: &InvariantReport, extra: &[(&str, Option<String>)]) -> Option<(String, String)> {
        let mut first = None;
        for c in &report.checks {
            self.tally(&c.name, c.passed);
            if !c.passed && first.is_none() {
                first = Some((c.name.clone(), c.witness.clone().unwrap_or_default()));
            }
        }
        for (name, violation) in extra {
            self.tally(name, violation.is_none());
            if let (Some(w), None) = (violation, &first) {
                first = Some((name.to_string(), w.clone()));
            }
        }
        first
    }
}

/// One labelled operation applied to `state`.
struct Move {
    kind: &'static str,
    label: String,
    result: Result<RoutingState, RoutingError>,
}

fn successors(state: &RoutingState, threshold: u32) -> Vec<Move> {
    let mut out = Vec::new();
    let Some(topo) = state.adhoc.as_ref() else {
        return out;
    };
    let with_role = |role| topo.mobiles().values().filter(move |n| n.role == role).map(|n| &n.id);
    for src in with_role(NodeRole::Transmitter) {
        for dst in with_role(NodeRole::Receiver) {
            out.push(Move {
                kind: "route_initiation",
                label: format!("route_initiation({src},{dst})"),
                result: state.route_initiation(src, dst),
            });
        }
    }
    out.push(Move {
        kind: "reverse_route",
        label: "reverse_route".into(),
        result: state.reverse_route(),
    });
    if let Ok(working) = Route::new(state.routes.clone()) {
        out.push(Move {
            kind: "route_addition",
            label: format!("route_addition({working})"),
            result: state.route_addition(&working),
        });
    }
    for r in &state.allroutes {
        out.push(Move {
            kind: "route_deletion",
            label: format!("route_deletion({r})"),
            result: state.route_deletion(r),
        });
    }
    out.push(Move {
        kind: "route_expiry",
        label: format!("route_expiry({threshold})"),
        result: state.route_expiry(threshold),
    });
    out.push(Move {
        kind: "route_recovery",
        label: "route_recovery".into(),
        result: state.route_recovery().map(|(s, _)| s),
    });
    for n in topo.mobiles().values().filter(|n| n.is_alive()) {
        out.push(Move {
            kind: "kill_node",
            label: format!("kill_node({})", n.id),
            result: state.kill_node(&n.id),
        });
    }
    out.push(Move {
        kind: "age_tick",
        label: "age_tick".into(),
        result: state.age_active_hops(&Default::default()),
    });
    out
}

fn max_age(state: &RoutingState, route: &Route) -> Option<u32> {
    let topo = state.adhoc.as_ref()?;
    route.hops().iter().filter_map(|h| topo.node(h)).map(|n| n.ttl_age).max()
}

/// Expiry must deactivate exactly the over-age routes and leave every
/// other status as it was.
fn expiry_boundary(before: &RoutingState, after: &RoutingState, threshold: u32) -> Option<String> {
    for r in &before.allroutes {
        let old = before.expire.get(r);
        let new = after.expire.get(r);
        let over = max_age(before, r).is_some_and(|a| a >= threshold);
        if over && new != Some(&RouteStatus::Deactivate) {
            return Some(format!("route {r} reached age {threshold} but is {new:?}"));
        }
        if !over && new != old {
            return Some(format!("route {r} below age {threshold} changed {old:?} -> {new:?}"));
        }
    }
    None
}

fn recovery_post(after: &RoutingState) -> Option<String> {
    after
        .allroutes
        .iter()
        .find(|r| after.expire.get(*r) != Some(&RouteStatus::Activate))
        .map(|r| format!("route {r} is not active after recovery"))
}

fn contract_name(check: &str) -> String {
    if check.contains('.') {
        check.to_string()
    } else {
        format!("contract.{check}")
    }
}

fn explore_seed(index: usize, seed: &Topology, config: &ExploreConfig) -> SeedRun {
    let mut run = SeedRun::default();
    let start = RoutingState::init().with_topology(seed.clone());
    let mut seen: HashSet<String> = HashSet::new();
    seen.insert(start.digest());
    run.states = 1;

    if let Some((check, witness)) = run.check(&start.check_state_invariant(), &[]) {
        run.violations.push(Violation {
            seed: index,
            trace: Vec::new(),
            check,
            witness,
        });
        return run;
    }

    let mut frontier: Vec<(RoutingState, Vec<String>)> = vec![(start, Vec::new())];
    for depth in 1..=config.max_depth {
        let mut next_frontier = Vec::new();
        for (state, trace) in &frontier {
            for mv in successors(state, config.ttl_threshold) {
                let next = match mv.result {
                    Ok(next) => next,
                    Err(RoutingError::PostconditionViolated { check, witness, .. }) => {
                        let name = contract_name(&check);
                        run.tally(&name, false);
                        let mut t = trace.clone();
                        t.push(mv.label);
                        run.violations.push(Violation {
                            seed: index,
                            trace: t,
                            check: name,
                            witness,
                        });
                        continue;
                    }
                    Err(_) => continue,
                };
                *run.coverage.entry(mv.kind.to_string()).or_default() += 1;
                if !seen.insert(next.digest()) {
                    continue;
                }
                run.states += 1;
                run.max_depth = depth;
                if run.states > config.budget {
                    run.budget_hit = true;
                    return run;
                }

                let mut extra = Vec::new();
                match mv.kind {
                    "route_expiry" => extra.push((
                        "contract.expiry-boundary",
                        expiry_boundary(state, &next, config.ttl_threshold),
                    )),
                    "route_recovery" => extra.push(("contract.recovery-post", recovery_post(&next))),
                    _ => {}
                }
                let mut t = trace.clone();
                t.push(mv.label);
                match run.check(&next.check_state_invariant(), &extra) {
                    Some((check, witness)) => run.violations.push(Violation {
                        seed: index,
                        trace: t,
                        check,
                        witness,
                    }),
                    None => next_frontier.push((next, t)),
                }
            }
        }
        if next_frontier.is_empty() {
            break;
        }
        frontier = next_frontier;
    }
    run
}

/// Explores every seed to `config.max_depth`. Seeds run in parallel; the
/// merged report depends only on the seed order, never on scheduling.
/// The budget is cumulative in seed order; a partial report includes the
/// seed run that crossed it, so its state count may exceed the budget.
pub fn explore(seeds: &[Topology], config: &ExploreConfig) -> Result<ExplorationReport, ExploreError> {
    if config.max_depth > MAX_DEPTH {
        return Err(ExploreError::DepthTooLarge(config.max_depth));
    }
    if let Some((index, seed)) = seeds.iter().enumerate().find(|(_, s)| s.len() > MAX_SEED_NODES) {
        return Err(ExploreError::SeedTooLarge {
            index,
            nodes: seed.len(),
        });
    }

    let work = || -> Vec<SeedRun> {
        seeds
            .par_iter()
            .enumerate()
            .map(|(i, s)| explore_seed(i, s, config))
            .collect()
    };
    let runs = match config.threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| ExploreError::ThreadPool(e.to_string()))?
            .install(work),
        None => work(),
    };

    let mut report = ExplorationReport {
        header: REPORT_HEADER.to_string(),
        seeds: seeds.len(),
        depth_bound: config.max_depth,
        ttl_threshold: config.ttl_threshold,
        states_visited: 0,
        max_depth: 0,
        budget_exceeded: false,
        violations: Vec::new(),
        coverage: BTreeMap::new(),
        checks: BTreeMap::new(),
    };
    for run in runs {
        report.states_visited += run.states;
        report.max_depth = report.max_depth.max(run.max_depth);
        report.violations.extend(run.violations);
        for (k, v) in run.coverage {
            *report.coverage.entry(k).or_default() += v;
        }
        for (k, v) in run.checks {
            let t = report.checks.entry(k).or_default();
            t.evaluated += v.evaluated;
            t.failed += v.failed;
        }
        if run.budget_hit || report.states_visited > config.budget {
            report.budget_exceeded = true;
            return Err(ExploreError::BudgetExceeded {
                budget: config.budget,
                report: Box::new(report),
            });
        }
    }
    Ok(report)
}

/// Table rows, in display order. The first eight are the headline
/// invariants; the rest are additional structural checks.
pub const TABLE_ROWS: [&str; 11] = [
    "membership",
    "bidirectionality",
    "head-role",
    "tail-role",
    "interior-role",
    "consecutive-connectivity",
    "expiry-boundary",
    "recovery-post",
    "no-self-loop",
    "no-dead-links",
    "expire-domain",
];

/// `(check prefix, column title)`.
pub const TABLE_COLUMNS: [(&str, &str); 4] = [
    ("topology", "Topology"),
    ("routes", "Working route"),
    ("allroutes", "Stored routes"),
    ("contract", "Op contracts"),
];

/// Renders the property table: one row per invariant, one column per
/// checker. `ok` means every evaluation passed, `FAIL n` counts failures,
/// `-` marks a check that does not apply, `0` one never reached.
pub fn render_table(report: &ExplorationReport) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{}", report.header);
    let _ = writeln!(
        out,
        "seeds: {}  depth bound: {}  ttl threshold: {}  states: {}  max depth: {}{}",
        report.seeds,
        report.depth_bound,
        report.ttl_threshold,
        report.states_visited,
        report.max_depth,
        if report.budget_exceeded { "  (budget exceeded, partial)" } else { "" }
    );
    let _ = writeln!(out);

    let width = TABLE_ROWS.iter().map(|r| r.len()).max().unwrap_or(0).max("Property Name".len());
    let _ = write!(out, "{:<width$}", "Property Name");
    for (_, title) in TABLE_COLUMNS {
        let _ = write!(out, " | {title:<14}");
    }
    let _ = writeln!(out);
    let _ = writeln!(out, "{}", "-".repeat(width + TABLE_COLUMNS.len() * 17));

    for row in TABLE_ROWS {
        let _ = write!(out, "{row:<width$}");
        for (prefix, _) in TABLE_COLUMNS {
            let cell = match report.checks.get(&format!("{prefix}.{row}")) {
                None if applies(prefix, row) => "0".to_string(),
                None => "-".to_string(),
                Some(t) if t.failed > 0 => format!("FAIL {}", t.failed),
                Some(t) if t.evaluated == 0 => "0".to_string(),
                Some(_) => "ok".to_string(),
            };
            let _ = write!(out, " | {cell:<14}");
        }
        let _ = writeln!(out);
    }
    if !report.violations.is_empty() {
        let _ = writeln!(out);
        let _ = writeln!(out, "violations: {}", report.violations.len());
        for v in report.violations.iter().take(10) {
            let _ = writeln!(
                out,
                "  seed {} after [{}]: {} ({})",
                v.seed,
                v.trace.join(", "),
                v.check,
                v.witness
            );
        }
    }
    out
}

fn applies(prefix: &str, row: &str) -> bool {
    match prefix {
        "topology" => crate::topology::TOPOLOGY_CHECKS.contains(&row),
        "routes" => crate::routing::ROUTE_CLAUSES.contains(&row),
        "allroutes" => crate::routing::ROUTE_CLAUSES.contains(&row) || row == "expire-domain",
        "contract" => matches!(row, "expiry-boundary" | "recovery-post"),
        _ => false,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::id;
    use crate::oracle::enumerate::exhaustive_seeds;
    use crate::topology::{Link, MobNode, Position};

    fn two_node() -> Topology {
        exhaustive_seeds(2, 2).remove(0)
    }

    #[test]
    fn two_node_depth_four_is_clean() {
        let config = ExploreConfig::default();
        let report = explore(&[two_node()], &config).unwrap();
        assert!(report.violations.is_empty(), "{:?}", report.violations);
        assert!(report.states_visited > 1);
        assert_eq!(report.max_depth, 4);
        for kind in ["route_initiation", "route_addition", "reverse_route", "kill_node", "age_tick"] {
            assert!(report.coverage.get(kind).copied().unwrap_or(0) > 0, "{kind} never applied");
        }
    }

    #[test]
    fn depth_zero_counts_seeds() {
        let seeds = exhaustive_seeds(2, 3);
        let config = ExploreConfig {
            max_depth: 0,
            ..Default::default()
        };
        let report = explore(&seeds, &config).unwrap();
        assert_eq!(report.states_visited, seeds.len() as u64);
        assert!(report.violations.is_empty());
        assert!(report.coverage.is_empty());
    }

    #[test]
    fn broken_seed_reported_at_depth_zero() {
        let good = two_node();
        let one_way = Topology::from_raw(
            good.mobiles().values().cloned(),
            [Link::new(id("A"), id("B"))],
        )
        .unwrap();
        let report = explore(&[good, one_way], &ExploreConfig::default()).unwrap();
        assert_eq!(report.violations.len(), 1);
        let v = &report.violations[0];
        assert_eq!(v.seed, 1);
        assert!(v.trace.is_empty());
        assert_eq!(v.check, "topology.bidirectionality");
    }

    #[test]
    fn budget_is_enforced() {
        let config = ExploreConfig {
            budget: 5,
            ..Default::default()
        };
        match explore(&exhaustive_seeds(3, 3), &config) {
            Err(ExploreError::BudgetExceeded { report, .. }) => assert!(report.budget_exceeded),
            other => panic!("expected budget error, got {other:?}"),
        }
    }

    #[test]
    fn bounds_are_enforced() {
        let config = ExploreConfig {
            max_depth: 7,
            ..Default::default()
        };
        assert!(matches!(explore(&[], &config), Err(ExploreError::DepthTooLarge(7))));
        let mut big = Topology::new();
        for (i, name) in ["A", "B", "C", "D", "E", "F"].iter().enumerate() {
            big = big
                .add_node(MobNode::new(id(name), NodeRole::Intermediate, Position::new(i as f64, 0.0), 1.0))
                .unwrap();
        }
        assert!(matches!(
            explore(&[big], &ExploreConfig::default()),
            Err(ExploreError::SeedTooLarge { index: 0, nodes: 6 })
        ));
    }

    #[test]
    fn table_lists_every_row() {
        let report = explore(&[two_node()], &ExploreConfig::default()).unwrap();
        let table = render_table(&report);
        for row in TABLE_ROWS {
            assert!(table.contains(row), "missing {row}");
        }
        assert!(!table.contains("FAIL"));
    }
}
