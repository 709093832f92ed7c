//! Plan validation (physics, capacity, causality, completeness) and the
//! benchmark metrics: total distance, packages per km, makespan, and
//! active makespan.

use crate::coordination::{ActionKind, Plan, Timeline};
use crate::geometry::Point;
use crate::scenarios::Scenario;
use crate::transport_graph::NodeKind;
use serde::Serialize;
use std::collections::BTreeMap;
use thiserror::Error;

const TIME_TOL: f64 = 1e-9;
const POS_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum Violation {
    /// Action k of a robot does not start when action k−1 ends.
    GapInTimeline { robot: usize, action: usize },
    /// Travel duration disagrees with distance / v_speed.
    BadTravelDuration { robot: usize, action: usize },
    /// Travel does not depart from the robot's current position.
    Teleport { robot: usize, action: usize },
    /// Service action duration differs from T_s.
    BadServiceDuration { robot: usize, action: usize },
    /// Carried load exceeds capacity or goes negative.
    CapacityViolation { robot: usize, action: usize },
    /// Recorded load trace disagrees with the replayed loads.
    LoadMismatch { robot: usize, action: usize },
    /// A stationary action happens away from its site.
    WrongLocation { robot: usize, action: usize },
    /// A relay's running balance (drops minus picks) goes negative.
    CausalityViolation { relay: usize },
    /// Packages left at a relay that nobody picks up.
    StrandedPackages { relay: usize, count: u32 },
    /// A goal delivered zero or multiple times.
    DeliveryCount { goal: usize, count: usize },
    /// Ledger events disagree with the actions in the timelines.
    LedgerMismatch { relay: usize },
    /// Relay throughput differs from the trunk's routed flow.
    FlowMismatch { relay: usize, expected: u32, actual: u32 },
    /// Negative-duration action.
    NegativeDuration { robot: usize, action: usize },
}

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("plan failed validation with {0} violation(s)")]
    UnvalidatedInput(usize),
}

#[derive(Debug, Clone, Serialize)]
pub struct PlanMetrics {
    /// Total fleet travel distance, km.
    pub total_distance: f64,
    /// Delivered packages per km of fleet travel.
    pub packages_per_km: f64,
    /// Time until the last action completes, minutes.
    pub makespan: f64,
    /// Makespan excluding each robot's idle waiting, minutes.
    pub active_makespan: f64,
    /// Per-robot travel distance, km, indexed by robot id order in the plan.
    pub per_robot_distance: Vec<f64>,
    /// Number of Wait actions across the fleet.
    pub n_waits: usize,
    /// Total waiting time across the fleet, seconds.
    pub wait_time: f64,
    /// Relays with at least one drop.
    pub n_relays_used: usize,
}

fn replay_robot(
    tl: &Timeline,
    scenario: &Scenario,
    relay_pos: &BTreeMap<usize, Point>,
    out: &mut Vec<Violation>,
) {
    let robot = tl.robot;
    let spec = &scenario.robots[robot];
    let mut t = 0.0;
    let mut pos = spec.pos;
    let mut load: i64 = 0;
    for (k, action) in tl.actions.iter().enumerate() {
        if action.end < action.start - TIME_TOL {
            out.push(Violation::NegativeDuration { robot, action: k });
        }
        if (action.start - t).abs() > TIME_TOL {
            out.push(Violation::GapInTimeline { robot, action: k });
        }
        t = action.end;
        let dur = action.end - action.start;
        match action.kind {
            ActionKind::Travel { from, to } => {
                if from.dist(pos) > POS_TOL {
                    out.push(Violation::Teleport { robot, action: k });
                }
                if (dur - from.dist(to) / spec.speed).abs() > TIME_TOL {
                    out.push(Violation::BadTravelDuration { robot, action: k });
                }
                pos = to;
            }
            ActionKind::Wait => {}
            ref service => {
                if (dur - scenario.t_service).abs() > TIME_TOL {
                    out.push(Violation::BadServiceDuration { robot, action: k });
                }
                let site = match *service {
                    ActionKind::Pickup { .. } => Some(scenario.source),
                    ActionKind::Deliver { goal } => scenario.goals.get(goal).copied(),
                    ActionKind::RelayDrop { relay, .. } | ActionKind::RelayPick { relay, .. } => {
                        relay_pos.get(&relay).copied()
                    }
                    _ => unreachable!(),
                };
                match site {
                    Some(p) if p.dist(pos) <= POS_TOL => {}
                    _ => out.push(Violation::WrongLocation { robot, action: k }),
                }
                load += match *service {
                    ActionKind::Pickup { count } | ActionKind::RelayPick { count, .. } => {
                        count as i64
                    }
                    ActionKind::RelayDrop { count, .. } => -(count as i64),
                    ActionKind::Deliver { .. } => -1,
                    _ => 0,
                };
            }
        }
        if load < 0 || load > spec.capacity as i64 {
            out.push(Violation::CapacityViolation { robot, action: k });
        }
        match tl.loads.get(k) {
            Some(&l) if l as i64 == load => {}
            _ => out.push(Violation::LoadMismatch { robot, action: k }),
        }
    }
    if load != 0 {
        out.push(Violation::CapacityViolation { robot, action: tl.actions.len() });
    }
}

/// Replays every timeline against the scenario and (when present) the
/// trunk. An empty result means the plan is feasible: contiguous timelines,
/// travel at v_speed, T_s services at the right places, capacity respected,
/// relay causality, exactly one delivery per goal, and relay throughput
/// equal to the trunk's routed flows.
pub fn validate(plan: &Plan, scenario: &Scenario) -> Vec<Violation> {
    let mut out = Vec::new();
    let relay_pos: BTreeMap<usize, Point> = plan
        .trunk
        .as_ref()
        .map(|t| {
            t.nodes
                .iter()
                .filter(|n| matches!(n.kind, NodeKind::Relay(_)))
                .map(|n| (n.id, n.pos))
                .collect()
        })
        .unwrap_or_default();

    for tl in &plan.timelines {
        replay_robot(tl, scenario, &relay_pos, &mut out);
    }

    // Delivery completeness.
    let mut delivered = vec![0usize; scenario.goals.len()];
    for tl in &plan.timelines {
        for a in &tl.actions {
            if let ActionKind::Deliver { goal } = a.kind {
                match delivered.get_mut(goal) {
                    Some(c) => *c += 1,
                    None => out.push(Violation::DeliveryCount { goal, count: usize::MAX }),
                }
            }
        }
    }
    for (goal, &count) in delivered.iter().enumerate() {
        if count != 1 {
            out.push(Violation::DeliveryCount { goal, count });
        }
    }

    // Relay causality: drops credited at completion, picks debited at start.
    #[derive(Default)]
    struct Events {
        drops: Vec<(f64, u32, usize)>,
        picks: Vec<(f64, u32, usize)>,
    }
    let mut per_relay: BTreeMap<usize, Events> = BTreeMap::new();
    for tl in &plan.timelines {
        for a in &tl.actions {
            match a.kind {
                ActionKind::RelayDrop { relay, count } => {
                    per_relay.entry(relay).or_default().drops.push((a.end, count, tl.robot));
                }
                ActionKind::RelayPick { relay, count } => {
                    per_relay.entry(relay).or_default().picks.push((a.start, count, tl.robot));
                }
                _ => {}
            }
        }
    }
    for (&relay, ev) in &per_relay {
        let mut merged: Vec<(f64, i64)> = ev
            .drops
            .iter()
            .map(|&(t, c, _)| (t, c as i64))
            .chain(ev.picks.iter().map(|&(t, c, _)| (t, -(c as i64))))
            .collect();
        // Drops before picks at equal times: a pick may start the instant
        // the enabling drop completes.
        merged.sort_by(|a, b| {
            a.0.partial_cmp(&b.0).unwrap().then(b.1.cmp(&a.1))
        });
        let mut balance = 0i64;
        let mut bad = false;
        for (_, delta) in &merged {
            balance += delta;
            if balance < 0 {
                bad = true;
            }
        }
        if bad {
            out.push(Violation::CausalityViolation { relay });
        }
        if balance > 0 {
            out.push(Violation::StrandedPackages { relay, count: balance as u32 });
        }

        // Ledger must mirror the actions (order-insensitive: the planner
        // records events in scheduling order, not timeline order).
        let log = plan.ledger.relays.get(&relay);
        let matches = log.is_some_and(|log| {
            let key = |t: f64, c: u32, r: usize| (t.to_bits(), r, c);
            let same = |evs: &[(f64, u32, usize)], led: &[crate::coordination::LedgerEvent]| {
                let mut a: Vec<_> = evs.iter().map(|&(t, c, r)| key(t, c, r)).collect();
                let mut b: Vec<_> = led.iter().map(|l| key(l.time, l.count, l.robot)).collect();
                a.sort_unstable();
                b.sort_unstable();
                a == b
            };
            same(&ev.drops, &log.drops) && same(&ev.picks, &log.picks)
        });
        if !matches {
            out.push(Violation::LedgerMismatch { relay });
        }
    }
    for &relay in plan.ledger.relays.keys() {
        if !per_relay.contains_key(&relay) {
            out.push(Violation::LedgerMismatch { relay });
        }
    }

    // Flow realization against the trunk.
    if let Some(trunk) = &plan.trunk {
        for (rid, _) in relay_pos.iter() {
            let expected = trunk.inflow(*rid);
            let actual: u32 = per_relay
                .get(rid)
                .map(|ev| ev.drops.iter().map(|&(_, c, _)| c).sum())
                .unwrap_or(0);
            if expected != actual {
                out.push(Violation::FlowMismatch { relay: *rid, expected, actual });
            }
        }
    }
    out
}

/// Computes the benchmark metrics. Refuses plans that fail validation.
pub fn compute_metrics(plan: &Plan, scenario: &Scenario) -> Result<PlanMetrics, MetricsError> {
    let violations = validate(plan, scenario);
    if !violations.is_empty() {
        return Err(MetricsError::UnvalidatedInput(violations.len()));
    }
    let per_robot_distance: Vec<f64> = plan
        .timelines
        .iter()
        .map(|tl| tl.travel_distance() / 1000.0)
        .collect();
    let total_distance: f64 = per_robot_distance.iter().sum::<f64>() + 0.0;
    let makespan = plan.timelines.iter().map(Timeline::end_time).fold(0.0, f64::max) / 60.0;
    let active_makespan = plan
        .timelines
        .iter()
        .map(|tl| tl.end_time() - tl.wait_time())
        .fold(0.0, f64::max)
        / 60.0;
    let n_waits = plan
        .timelines
        .iter()
        .flat_map(|tl| &tl.actions)
        .filter(|a| a.kind == ActionKind::Wait)
        .count();
    let wait_time: f64 = plan.timelines.iter().map(Timeline::wait_time).sum::<f64>() + 0.0;
    let n_relays_used = plan
        .timelines
        .iter()
        .flat_map(|tl| &tl.actions)
        .filter_map(|a| match a.kind {
            ActionKind::RelayDrop { relay, .. } => Some(relay),
            _ => None,
        })
        .collect::<std::collections::BTreeSet<_>>()
        .len();
    let packages_per_km = if total_distance > 0.0 {
        scenario.goals.len() as f64 / total_distance
    } else {
        f64::INFINITY
    };
    Ok(PlanMetrics {
        total_distance,
        packages_per_km,
        makespan,
        active_makespan,
        per_robot_distance,
        n_waits,
        wait_time,
        n_relays_used,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coordination::{Action, RelayLedger};
    use crate::geometry::Workspace;
    use crate::scenarios::{Family, Robot};

    fn simple_scenario() -> Scenario {
        Scenario {
            family: Family::Custom,
            workspace: Workspace::rect(200.0, 200.0),
            source: Point::new(0.0, 0.0),
            goals: vec![Point::new(100.0, 0.0)],
            robots: vec![Robot { id: 0, pos: Point::new(0.0, 0.0), capacity: 3, speed: 5.0 }],
            t_service: 5.0,
            seed: 0,
        }
    }

    fn simple_plan() -> Plan {
        let s = Point::new(0.0, 0.0);
        let g = Point::new(100.0, 0.0);
        Plan {
            timelines: vec![Timeline {
                robot: 0,
                actions: vec![
                    Action { kind: ActionKind::Pickup { count: 1 }, start: 0.0, end: 5.0 },
                    Action { kind: ActionKind::Travel { from: s, to: g }, start: 5.0, end: 25.0 },
                    Action { kind: ActionKind::Deliver { goal: 0 }, start: 25.0, end: 30.0 },
                ],
                loads: vec![1, 1, 0],
            }],
            ledger: RelayLedger::default(),
            trunk: None,
        }
    }

    #[test]
    fn valid_single_robot_plan_passes() {
        assert!(validate(&simple_plan(), &simple_scenario()).is_empty());
    }

    #[test]
    fn metrics_match_hand_computation() {
        let m = compute_metrics(&simple_plan(), &simple_scenario()).unwrap();
        assert!((m.total_distance - 0.1).abs() < 1e-12);
        assert!((m.makespan - 0.5).abs() < 1e-12);
        assert!((m.active_makespan - 0.5).abs() < 1e-12);
        assert!((m.packages_per_km - 10.0).abs() < 1e-9);
        assert_eq!(m.n_waits, 0);
        assert_eq!(m.n_relays_used, 0);
    }

    #[test]
    fn pick_before_drop_is_causality_violation() {
        let sc = simple_scenario();
        let p = Point::new(50.0, 0.0);
        let mut plan = simple_plan();
        // Fabricate a second robot? keep one robot, splice relay actions in
        // a fresh timeline with bogus ordering.
        plan.timelines = vec![Timeline {
            robot: 0,
            actions: vec![
                Action {
                    kind: ActionKind::Travel { from: Point::new(0.0, 0.0), to: p },
                    start: 0.0,
                    end: 10.0,
                },
                Action { kind: ActionKind::RelayPick { relay: 5, count: 1 }, start: 10.0, end: 15.0 },
                Action { kind: ActionKind::RelayDrop { relay: 5, count: 1 }, start: 15.0, end: 20.0 },
            ],
            loads: vec![0, 1, 0],
        }];
        let violations = validate(&plan, &sc);
        assert!(violations.contains(&Violation::CausalityViolation { relay: 5 }));
    }

    #[test]
    fn stranded_packages_detected() {
        let sc = simple_scenario();
        let mut plan = simple_plan();
        plan.timelines[0].actions.push(Action {
            kind: ActionKind::Travel { from: Point::new(100.0, 0.0), to: Point::new(0.0, 0.0) },
            start: 30.0,
            end: 50.0,
        });
        plan.timelines[0].loads.push(0);
        plan.timelines[0].actions.push(Action {
            kind: ActionKind::Pickup { count: 1 },
            start: 50.0,
            end: 55.0,
        });
        plan.timelines[0].loads.push(1);
        plan.timelines[0].actions.push(Action {
            kind: ActionKind::RelayDrop { relay: 3, count: 1 },
            start: 55.0,
            end: 60.0,
        });
        plan.timelines[0].loads.push(0);
        let violations = validate(&plan, &sc);
        assert!(violations.contains(&Violation::StrandedPackages { relay: 3, count: 1 }));
    }

    #[test]
    fn bad_travel_duration_detected() {
        let sc = simple_scenario();
        let mut plan = simple_plan();
        plan.timelines[0].actions[1].end = 20.0; // 100 m at 5 m/s needs 20 s
        plan.timelines[0].actions[2] =
            Action { kind: ActionKind::Deliver { goal: 0 }, start: 20.0, end: 25.0 };
        let violations = validate(&plan, &sc);
        assert!(violations
            .iter()
            .any(|v| matches!(v, Violation::BadTravelDuration { .. })));
    }

    #[test]
    fn missing_delivery_detected() {
        let sc = simple_scenario();
        let plan = Plan {
            timelines: vec![Timeline { robot: 0, actions: vec![], loads: vec![] }],
            ledger: RelayLedger::default(),
            trunk: None,
        };
        let violations = validate(&plan, &sc);
        assert!(violations.contains(&Violation::DeliveryCount { goal: 0, count: 0 }));
    }

    #[test]
    fn gap_and_teleport_detected() {
        let sc = simple_scenario();
        let mut plan = simple_plan();
        plan.timelines[0].actions[1].start = 6.0; // gap after pickup
        plan.timelines[0].actions[1].end = 26.0;
        plan.timelines[0].actions[2].start = 26.0;
        plan.timelines[0].actions[2].end = 31.0;
        let violations = validate(&plan, &sc);
        assert!(violations.contains(&Violation::GapInTimeline { robot: 0, action: 1 }));

        let mut plan2 = simple_plan();
        if let ActionKind::Travel { from, .. } = &mut plan2.timelines[0].actions[1].kind {
            *from = Point::new(1.0, 1.0);
        }
        let violations2 = validate(&plan2, &sc);
        assert!(violations2.iter().any(|v| matches!(v, Violation::Teleport { .. })));
    }

    #[test]
    fn bad_service_duration_detected() {
        let sc = simple_scenario();
        let mut plan = simple_plan();
        plan.timelines[0].actions[0].end = 4.0;
        plan.timelines[0].actions[1].start = 4.0;
        plan.timelines[0].actions[1].end = 24.0;
        plan.timelines[0].actions[2].start = 24.0;
        plan.timelines[0].actions[2].end = 29.0;
        let violations = validate(&plan, &sc);
        assert!(violations
            .iter()
            .any(|v| matches!(v, Violation::BadServiceDuration { .. })));
    }

    #[test]
    fn unvalidated_plan_refused_by_metrics() {
        let sc = simple_scenario();
        let mut plan = simple_plan();
        plan.timelines[0].loads[0] = 2; // load trace lies
        assert!(matches!(
            compute_metrics(&plan, &sc),
            Err(MetricsError::UnvalidatedInput(_))
        ));
    }

    #[test]
    fn wait_separates_active_makespan() {
        let sc = simple_scenario();
        let mut plan = simple_plan();
        plan.timelines[0].actions.insert(
            0,
            Action { kind: ActionKind::Wait, start: 0.0, end: 10.0 },
        );
        plan.timelines[0].loads.insert(0, 0);
        for a in &mut plan.timelines[0].actions[1..] {
            a.start += 10.0;
            a.end += 10.0;
        }
        let m = compute_metrics(&plan, &sc).unwrap();
        assert!((m.makespan - 40.0 / 60.0).abs() < 1e-12);
        assert!((m.active_makespan - 30.0 / 60.0).abs() < 1e-12);
        assert_eq!(m.n_waits, 1);
        assert!((m.wait_time - 10.0).abs() < 1e-12);
    }
}
