//! Non-relay comparison planners: Hungarian linear-assignment dispatch and
//! a Clarke–Wright + 2-opt capacitated-routing heuristic. Both emit the
//! same `Plan` contract as the relay planner so one validator covers all.

use crate::coordination::{Action, ActionKind, Plan, RelayLedger, Timeline};
use crate::geometry::Point;
use crate::scenarios::Scenario;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum BaselineError {
    #[error("cost matrix has no rows or no columns")]
    EmptyMatrix,
    #[error("cost matrix contains a non-finite or negative entry")]
    InvalidCost,
}

/// Minimum-cost assignment of rows to distinct columns (potentials method,
/// O(rows²·cols)). Requires rows ≤ cols. Returns (column per row, total).
pub fn hungarian_assign(cost: &[Vec<f64>]) -> Result<(Vec<usize>, f64), BaselineError> {
    let n = cost.len();
    if n == 0 || cost[0].is_empty() {
        return Err(BaselineError::EmptyMatrix);
    }
    let m = cost[0].len();
    assert!(n <= m, "hungarian_assign requires rows <= cols");
    if cost
        .iter()
        .any(|row| row.len() != m || row.iter().any(|c| !c.is_finite() || *c < 0.0))
    {
        return Err(BaselineError::InvalidCost);
    }

    // 1-indexed potentials formulation; way[j] is the augmenting predecessor.
    let inf = f64::INFINITY;
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; m + 1];
    let mut p = vec![0usize; m + 1]; // row matched to column j (0 = free)
    let mut way = vec![0usize; m + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0usize;
        let mut minv = vec![inf; m + 1];
        let mut used = vec![false; m + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = inf;
            let mut j1 = 0usize;
            for j in 1..=m {
                if used[j] {
                    continue;
                }
                let cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=m {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut assignment = vec![usize::MAX; n];
    for j in 1..=m {
        if p[j] != 0 {
            assignment[p[j] - 1] = j - 1;
        }
    }
    let total = assignment
        .iter()
        .enumerate()
        .map(|(i, &j)| cost[i][j])
        .sum();
    Ok((assignment, total))
}

/// Nearest-neighbor visiting order over `goals` starting from `from`; ties
/// broken by lower goal index.
fn nearest_neighbor_order(from: Point, goals: &[usize], pos: &[Point]) -> Vec<usize> {
    let mut remaining: Vec<usize> = goals.to_vec();
    let mut order = Vec::with_capacity(goals.len());
    let mut cur = from;
    while !remaining.is_empty() {
        let (k, _) = remaining
            .iter()
            .enumerate()
            .min_by(|(_, &a), (_, &b)| {
                cur.dist(pos[a])
                    .partial_cmp(&cur.dist(pos[b]))
                    .unwrap()
                    .then(a.cmp(&b))
            })
            .unwrap();
        let g = remaining.remove(k);
        cur = pos[g];
        order.push(g);
    }
    order
}

/// Emit one robot's capacity-chunked delivery timeline: for each chunk,
/// travel to the source, pick up, deliver each goal. Service time T_s per
/// pickup and per delivery, matching the relay planner's accounting.
fn tours_timeline(
    robot: usize,
    start_pos: Point,
    speed: f64,
    t_service: f64,
    scenario: &Scenario,
    chunks: &[Vec<usize>],
) -> Timeline {
    let mut t = 0.0;
    let mut pos = start_pos;
    let mut load = 0u32;
    let mut actions = Vec::new();
    let mut loads = Vec::new();
    let mut push = |kind: ActionKind, start: f64, end: f64, load: u32| {
        actions.push(Action { kind, start, end });
        loads.push(load);
    };
    for chunk in chunks {
        if pos.dist(scenario.source) > 1e-9 {
            let d = pos.dist(scenario.source);
            push(
                ActionKind::Travel { from: pos, to: scenario.source },
                t,
                t + d / speed,
                load,
            );
            t += d / speed;
            pos = scenario.source;
        }
        load += chunk.len() as u32;
        push(ActionKind::Pickup { count: chunk.len() as u32 }, t, t + t_service, load);
        t += t_service;
        for &g in chunk {
            let gp = scenario.goals[g];
            if pos.dist(gp) > 1e-9 {
                let d = pos.dist(gp);
                push(ActionKind::Travel { from: pos, to: gp }, t, t + d / speed, load);
                t += d / speed;
                pos = gp;
            }
            load -= 1;
            push(ActionKind::Deliver { goal: g }, t, t + t_service, load);
            t += t_service;
        }
    }
    Timeline { robot, actions, loads }
}

/// Hungarian dispatch baseline: repeated rounds of minimum-cost matching of
/// robots to unserved goals. Each robot's accumulated goal list is then
/// delivered in source tours of at most C packages, nearest-neighbor order
/// within each tour.
pub fn hungarian_plan(scenario: &Scenario) -> Result<Plan, BaselineError> {
    let m = scenario.robots.len();
    let n = scenario.goals.len();
    if m == 0 || n == 0 {
        return Err(BaselineError::EmptyMatrix);
    }
    // Round cost matrix: robot initial positions in round 1; the source
    // afterwards, since robots return to S between rounds.
    let mut remaining: Vec<usize> = (0..n).collect();
    let mut per_robot: Vec<Vec<usize>> = vec![Vec::new(); m];
    let mut round = 0usize;
    while !remaining.is_empty() {
        let origin = |r: usize| if round == 0 { scenario.robots[r].pos } else { scenario.source };
        if remaining.len() >= m {
            // Rows = robots, cols = remaining goals.
            let cost: Vec<Vec<f64>> = (0..m)
                .map(|r| {
                    remaining
                        .iter()
                        .map(|&g| origin(r).dist(scenario.goals[g]) / scenario.robots[r].speed)
                        .collect()
                })
                .collect();
            let (assign, _) = hungarian_assign(&cost)?;
            let chosen: Vec<(usize, usize)> =
                assign.iter().enumerate().map(|(r, &j)| (r, remaining[j])).collect();
            for (r, g) in chosen {
                per_robot[r].push(g);
            }
            let taken: Vec<usize> = per_robot.iter().flatten().copied().collect();
            remaining.retain(|g| !taken.contains(g));
        } else {
            // Fewer goals than robots: transpose so rows ≤ cols.
            let cost: Vec<Vec<f64>> = remaining
                .iter()
                .map(|&g| {
                    (0..m)
                        .map(|r| origin(r).dist(scenario.goals[g]) / scenario.robots[r].speed)
                        .collect()
                })
                .collect();
            let (assign, _) = hungarian_assign(&cost)?;
            for (j, &r) in assign.iter().enumerate() {
                per_robot[r].push(remaining[j]);
            }
            remaining.clear();
        }
        round += 1;
    }

    let timelines = scenario
        .robots
        .iter()
        .map(|r| {
            let goals = &per_robot[r.id];
            let chunks: Vec<Vec<usize>> = goals
                .chunks(r.capacity as usize)
                .map(|c| nearest_neighbor_order(scenario.source, c, &scenario.goals))
                .collect();
            tours_timeline(r.id, r.pos, r.speed, scenario.t_service, scenario, &chunks)
        })
        .collect();
    Ok(Plan { timelines, ledger: RelayLedger::default(), trunk: None })
}

/// Capacitated source-anchored routes: Clarke–Wright savings merges
/// followed by per-route 2-opt. Returns goal-index routes; every route's
/// load is at most C.
pub fn cvrp_routes(scenario: &Scenario) -> Vec<Vec<usize>> {
    let n = scenario.goals.len();
    let c = scenario.capacity() as usize;
    let s = scenario.source;
    let d = |a: usize, b: usize| scenario.goals[a].dist(scenario.goals[b]);
    let ds = |a: usize| s.dist(scenario.goals[a]);

    // route_of[g] = current route id; routes kept as ordered goal lists.
    let mut routes: Vec<Vec<usize>> = (0..n).map(|g| vec![g]).collect();
    let mut route_of: Vec<usize> = (0..n).collect();

    let mut savings: Vec<(f64, usize, usize)> = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            savings.push((ds(i) + ds(j) - d(i, j), i, j));
        }
    }
    savings.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap().then((a.1, a.2).cmp(&(b.1, b.2))));

    for (saving, i, j) in savings {
        if saving <= 0.0 {
            break;
        }
        let (ri, rj) = (route_of[i], route_of[j]);
        if ri == rj || routes[ri].len() + routes[rj].len() > c {
            continue;
        }
        // Merge only endpoint-to-endpoint (classic parallel savings).
        let i_first = routes[ri][0] == i;
        let i_last = *routes[ri].last().unwrap() == i;
        let j_first = routes[rj][0] == j;
        let j_last = *routes[rj].last().unwrap() == j;
        let merged = if i_last && j_first {
            let mut a = routes[ri].clone();
            a.extend(&routes[rj]);
            a
        } else if j_last && i_first {
            let mut a = routes[rj].clone();
            a.extend(&routes[ri]);
            a
        } else if i_last && j_last {
            let mut a = routes[ri].clone();
            a.extend(routes[rj].iter().rev());
            a
        } else if i_first && j_first {
            let mut a: Vec<usize> = routes[rj].iter().rev().copied().collect();
            a.extend(&routes[ri]);
            a
        } else {
            continue;
        };
        for &g in &merged {
            route_of[g] = ri;
        }
        routes[ri] = merged;
        routes[rj].clear();
    }
    let mut routes: Vec<Vec<usize>> = routes.into_iter().filter(|r| !r.is_empty()).collect();

    // 2-opt within each route over the closed S -> goals -> S tour.
    for route in &mut routes {
        let mut improved = true;
        while improved {
            improved = false;
            let k = route.len();
            for a in 0..k.saturating_sub(1) {
                for b in (a + 1)..k {
                    let prev = if a == 0 { ds(route[a]) } else { d(route[a - 1], route[a]) };
                    let next = if b == k - 1 { ds(route[b]) } else { d(route[b], route[b + 1]) };
                    let new_prev =
                        if a == 0 { ds(route[b]) } else { d(route[a - 1], route[b]) };
                    let new_next =
                        if b == k - 1 { ds(route[a]) } else { d(route[a], route[b + 1]) };
                    if new_prev + new_next < prev + next - 1e-12 {
                        route[a..=b].reverse();
                        improved = true;
                    }
                }
            }
        }
    }
    routes.sort();
    routes
}

fn route_length(scenario: &Scenario, route: &[usize]) -> f64 {
    let s = scenario.source;
    let mut len = s.dist(scenario.goals[route[0]]);
    for w in route.windows(2) {
        len += scenario.goals[w[0]].dist(scenario.goals[w[1]]);
    }
    len + scenario.goals[*route.last().unwrap()].dist(s)
}

/// CVRP-style baseline: savings routes executed by at most M robots; routes
/// go to the robot with the least accumulated tour length (robots run
/// multiple sequential routes when there are more routes than robots).
pub fn cvrp_plan(scenario: &Scenario) -> Result<Plan, BaselineError> {
    if scenario.robots.is_empty() || scenario.goals.is_empty() {
        return Err(BaselineError::EmptyMatrix);
    }
    let routes = cvrp_routes(scenario);
    let m = scenario.robots.len();
    let mut per_robot: Vec<Vec<Vec<usize>>> = vec![Vec::new(); m];
    let mut acc = vec![0.0f64; m];
    let mut ordered: Vec<&Vec<usize>> = routes.iter().collect();
    ordered.sort_by(|a, b| {
        route_length(scenario, b)
            .partial_cmp(&route_length(scenario, a))
            .unwrap()
            .then(a.cmp(b))
    });
    for route in ordered {
        let r = (0..m)
            .min_by(|&a, &b| acc[a].partial_cmp(&acc[b]).unwrap().then(a.cmp(&b)))
            .unwrap();
        acc[r] += route_length(scenario, route);
        per_robot[r].push(route.clone());
    }
    let timelines = scenario
        .robots
        .iter()
        .map(|r| {
            tours_timeline(r.id, r.pos, r.speed, scenario.t_service, scenario, &per_robot[r.id])
        })
        .collect();
    Ok(Plan { timelines, ledger: RelayLedger::default(), trunk: None })
}
