//! Experiment harness: paired-seed sweeps over (family × planner × trial),
//! validation gating, CSV/summary emission with sign-test statistics, and
//! artifact dumps (scenario/trunk/plan JSON plus an SVG overlay).

use crate::baselines::{cvrp_plan, hungarian_plan, BaselineError};
use crate::coordination::{plan_vcst, CoordError, Plan};
use crate::geometry::{compute_voronoi, Point};
use crate::scenarios::{generate, Family, Scenario, ScenarioError, ScenarioSpec};
use crate::simulation_metrics::{compute_metrics, validate, PlanMetrics, Violation};
use crate::transport_graph::NodeKind;
use serde::Serialize;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use thiserror::Error;

/// Default service-cost weight λ_svc in seconds, equal to the default T_s:
/// one relay handoff is priced at one service stop.
pub const DEFAULT_LAMBDA_SVC: f64 = 5.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Planner {
    Vcst,
    Hungarian,
    Cvrp,
}

impl Planner {
    pub const ALL: [Planner; 3] = [Planner::Vcst, Planner::Hungarian, Planner::Cvrp];

    pub fn parse(s: &str) -> Option<Planner> {
        match s {
            "vcst" => Some(Planner::Vcst),
            "hungarian" => Some(Planner::Hungarian),
            "cvrp" => Some(Planner::Cvrp),
            _ => None,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Planner::Vcst => "vcst",
            Planner::Hungarian => "hungarian",
            Planner::Cvrp => "cvrp",
        }
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub families: Vec<Family>,
    pub planners: Vec<Planner>,
    pub trials: usize,
    pub seed_base: u64,
    pub lambda_svc: f64,
    /// Override the family's preset capacity when set.
    pub capacity: Option<u32>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            families: Family::ALL.to_vec(),
            planners: Planner::ALL.to_vec(),
            trials: 100,
            seed_base: 0,
            lambda_svc: DEFAULT_LAMBDA_SVC,
            capacity: None,
        }
    }
}

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("invalid config: {0}")]
    InvalidConfig(String),
    #[error("{planner} plan failed validation on {family} seed {seed}: {violations:?}")]
    ValidationFailure {
        family: &'static str,
        planner: &'static str,
        seed: u64,
        violations: Vec<Violation>,
    },
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error(transparent)]
    Planning(#[from] CoordError),
    #[error(transparent)]
    Baseline(#[from] BaselineError),
    #[error("io error on {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

#[derive(Debug, Clone)]
pub struct TrialRow {
    pub family: Family,
    pub planner: Planner,
    pub seed: u64,
    pub metrics: PlanMetrics,
}

#[derive(Debug, Clone)]
pub struct PlannerStats {
    pub planner: Planner,
    pub mean_distance: f64,
    pub std_distance: f64,
    pub mean_pkgs_per_km: f64,
    pub mean_makespan: f64,
    pub mean_active_makespan: f64,
}

#[derive(Debug, Clone)]
pub struct SignTest {
    pub baseline: Planner,
    pub wins: usize,
    pub losses: usize,
    pub ties: usize,
    pub p_value: f64,
    /// Mean relative distance saving of VCST vs. this baseline.
    pub mean_saving: f64,
}

#[derive(Debug, Clone)]
pub struct FamilySummary {
    pub family: Family,
    pub stats: Vec<PlannerStats>,
    /// VCST vs. each other planner, on total distance.
    pub sign_tests: Vec<SignTest>,
}

#[derive(Debug, Clone)]
pub struct ExperimentResults {
    pub rows: Vec<TrialRow>,
    pub summaries: Vec<FamilySummary>,
}

pub fn plan_with(
    planner: Planner,
    scenario: &Scenario,
    lambda_svc: f64,
) -> Result<Plan, ExperimentError> {
    Ok(match planner {
        Planner::Vcst => plan_vcst(scenario, lambda_svc)?,
        Planner::Hungarian => hungarian_plan(scenario)?,
        Planner::Cvrp => cvrp_plan(scenario)?,
    })
}

/// Two-sided sign test: probability under H₀ (p = ½, ties dropped) of a
/// split at least as extreme as (wins, losses).
pub fn sign_test_p(wins: usize, losses: usize) -> f64 {
    let n = wins + losses;
    if n == 0 {
        return 1.0;
    }
    let k = wins.min(losses);
    // Tail sum of Binomial(n, 1/2) in log space for numerical range.
    let ln_choose = |n: usize, k: usize| -> f64 {
        let lgamma = |x: f64| -> f64 {
            // Stirling series; exact enough for n ≤ a few thousand.
            if x < 0.5 {
                return f64::ln(std::f64::consts::PI / f64::sin(std::f64::consts::PI * x))
                    - lgamma_pos(1.0 - x);
            }
            lgamma_pos(x)
        };
        fn lgamma_pos(x: f64) -> f64 {
            let g = 7.0;
            const C: [f64; 9] = [
                0.99999999999980993,
                676.5203681218851,
                -1259.1392167224028,
                771.32342877765313,
                -176.61502916214059,
                12.507343278686905,
                -0.13857109526572012,
                9.9843695780195716e-6,
                1.5056327351493116e-7,
            ];
            let x = x - 1.0;
            let mut a = C[0];
            let t = x + g + 0.5;
            for (i, &c) in C.iter().enumerate().skip(1) {
                a += c / (x + i as f64);
            }
            0.5 * f64::ln(2.0 * std::f64::consts::PI) + (x + 0.5) * t.ln() - t + a.ln()
        }
        lgamma(n as f64 + 1.0) - lgamma(k as f64 + 1.0) - lgamma((n - k) as f64 + 1.0)
    };
    let ln_half_n = -(n as f64) * std::f64::consts::LN_2;
    let mut tail = 0.0;
    for i in 0..=k {
        tail += f64::exp(ln_choose(n, i) + ln_half_n);
    }
    (2.0 * tail).min(1.0)
}

fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = if xs.len() > 1 {
        xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    (mean, var.sqrt())
}

pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentResults, ExperimentError> {
    if config.trials == 0 {
        return Err(ExperimentError::InvalidConfig("trials must be >= 1".into()));
    }
    if config.planners.is_empty() {
        return Err(ExperimentError::InvalidConfig("planners must be non-empty".into()));
    }
    if config.families.is_empty() {
        return Err(ExperimentError::InvalidConfig("families must be non-empty".into()));
    }

    let mut rows = Vec::new();
    for &family in &config.families {
        for trial in 0..config.trials {
            let seed = config.seed_base + trial as u64;
            let mut spec = ScenarioSpec::preset(family, seed);
            if let Some(c) = config.capacity {
                spec.capacity = c;
            }
            let scenario = generate(&spec)?;
            // Paired design: every planner sees this identical scenario.
            for &planner in &config.planners {
                let plan = plan_with(planner, &scenario, config.lambda_svc)?;
                let violations = validate(&plan, &scenario);
                if !violations.is_empty() {
                    return Err(ExperimentError::ValidationFailure {
                        family: family.name(),
                        planner: planner.name(),
                        seed,
                        violations,
                    });
                }
                let metrics = compute_metrics(&plan, &scenario)
                    .expect("validated plan must yield metrics");
                rows.push(TrialRow { family, planner, seed, metrics });
            }
        }
    }
    rows.sort_by_key(|r| (r.family.name(), r.planner, r.seed));

    let mut summaries = Vec::new();
    for &family in &config.families {
        let fam_rows: Vec<&TrialRow> = rows.iter().filter(|r| r.family == family).collect();
        let mut stats = Vec::new();
        for &planner in &config.planners {
            let d: Vec<f64> = fam_rows
                .iter()
                .filter(|r| r.planner == planner)
                .map(|r| r.metrics.total_distance)
                .collect();
            let (mean_distance, std_distance) = mean_std(&d);
            let mean_of = |f: fn(&PlanMetrics) -> f64| {
                let xs: Vec<f64> = fam_rows
                    .iter()
                    .filter(|r| r.planner == planner)
                    .map(|r| f(&r.metrics))
                    .collect();
                mean_std(&xs).0
            };
            stats.push(PlannerStats {
                planner,
                mean_distance,
                std_distance,
                mean_pkgs_per_km: mean_of(|m| m.packages_per_km),
                mean_makespan: mean_of(|m| m.makespan),
                mean_active_makespan: mean_of(|m| m.active_makespan),
            });
        }
        let mut sign_tests = Vec::new();
        if config.planners.contains(&Planner::Vcst) {
            for &baseline in &config.planners {
                if baseline == Planner::Vcst {
                    continue;
                }
                let paired: Vec<(f64, f64)> = (0..config.trials)
                    .filter_map(|trial| {
                        let seed = config.seed_base + trial as u64;
                        let find = |p: Planner| {
                            fam_rows
                                .iter()
                                .find(|r| r.planner == p && r.seed == seed)
                                .map(|r| r.metrics.total_distance)
                        };
                        Some((find(Planner::Vcst)?, find(baseline)?))
                    })
                    .collect();
                let wins = paired.iter().filter(|(v, b)| v < b).count();
                let losses = paired.iter().filter(|(v, b)| v > b).count();
                let ties = paired.len() - wins - losses;
                let mean_saving = if paired.is_empty() {
                    0.0
                } else {
                    paired.iter().map(|(v, b)| (b - v) / b).sum::<f64>() / paired.len() as f64
                };
                sign_tests.push(SignTest {
                    baseline,
                    wins,
                    losses,
                    ties,
                    p_value: sign_test_p(wins, losses),
                    mean_saving,
                });
            }
        }
        summaries.push(FamilySummary { family, stats, sign_tests });
    }
    Ok(ExperimentResults { rows, summaries })
}

/// CSV serialization. The first line is a `# generated <unix-seconds>`
/// comment and is the only non-deterministic content; everything after it
/// is byte-identical across reruns of the same config.
pub fn to_csv(results: &ExperimentResults, timestamp: Option<u64>) -> String {
    let mut s = String::new();
    if let Some(ts) = timestamp {
        let _ = writeln!(s, "# generated {ts}");
    }
    s.push_str(
        "family,planner,seed,distance_km,pkgs_per_km,makespan_min,active_makespan_min,n_relays_used,n_waits,wait_time_s\n",
    );
    for r in &results.rows {
        let m = &r.metrics;
        let _ = writeln!(
            s,
            "{},{},{},{:.6},{:.6},{:.6},{:.6},{},{},{:.6}",
            r.family.name(),
            r.planner.name(),
            r.seed,
            m.total_distance,
            m.packages_per_km,
            m.makespan,
            m.active_makespan,
            m.n_relays_used,
            m.n_waits,
            m.wait_time
        );
    }
    s
}

pub fn summary_text(results: &ExperimentResults) -> String {
    let mut s = String::new();
    for fam in &results.summaries {
        let _ = writeln!(s, "== {} ==", fam.family.name());
        let _ = writeln!(
            s,
            "{:<10} {:>12} {:>10} {:>10} {:>12} {:>12}",
            "planner", "dist_km", "std", "pkgs/km", "makespan_min", "active_min"
        );
        for st in &fam.stats {
            let _ = writeln!(
                s,
                "{:<10} {:>12.3} {:>10.3} {:>10.3} {:>12.3} {:>12.3}",
                st.planner.name(),
                st.mean_distance,
                st.std_distance,
                st.mean_pkgs_per_km,
                st.mean_makespan,
                st.mean_active_makespan
            );
        }
        for t in &fam.sign_tests {
            let _ = writeln!(
                s,
                "sign test vs {}: wins {} losses {} ties {} p={:.3e} mean saving {:.1}%",
                t.baseline.name(),
                t.wins,
                t.losses,
                t.ties,
                t.p_value,
                100.0 * t.mean_saving
            );
        }
    }
    s
}

#[derive(Debug, Serialize)]
pub struct ArtifactPaths {
    pub scenario: PathBuf,
    pub trunk: Option<PathBuf>,
    pub plan: PathBuf,
    pub svg: PathBuf,
}

fn write_file(path: &Path, content: &str) -> Result<(), ExperimentError> {
    std::fs::write(path, content)
        .map_err(|source| ExperimentError::Io { path: path.to_path_buf(), source })
}

/// Writes scenario JSON, trunk JSON (relay planner only), plan JSON, and an
/// SVG overlay of cells, trunk, and tours into `out_dir`.
pub fn dump_artifacts(
    scenario: &Scenario,
    planner: Planner,
    lambda_svc: f64,
    out_dir: &Path,
) -> Result<ArtifactPaths, ExperimentError> {
    std::fs::create_dir_all(out_dir)
        .map_err(|source| ExperimentError::Io { path: out_dir.to_path_buf(), source })?;
    let plan = plan_with(planner, scenario, lambda_svc)?;

    let scenario_path = out_dir.join("scenario.json");
    write_file(&scenario_path, &serde_json::to_string_pretty(scenario).unwrap())?;

    let trunk_path = match &plan.trunk {
        Some(trunk) => {
            let p = out_dir.join("trunk.json");
            write_file(&p, &serde_json::to_string_pretty(trunk).unwrap())?;
            Some(p)
        }
        None => None,
    };

    let plan_path = out_dir.join("plan.json");
    write_file(&plan_path, &serde_json::to_string_pretty(&plan).unwrap())?;

    let svg_path = out_dir.join("overlay.svg");
    write_file(&svg_path, &render_svg(scenario, &plan))?;

    Ok(ArtifactPaths { scenario: scenario_path, trunk: trunk_path, plan: plan_path, svg: svg_path })
}

/// SVG overlay: workspace frame, Voronoi cells, trunk edges, travel
/// segments, goals, source, and robot start positions. The viewBox equals
/// the workspace dimensions.
pub fn render_svg(scenario: &Scenario, plan: &Plan) -> String {
    let w = scenario.workspace.max_corner.x - scenario.workspace.min_corner.x;
    let h = scenario.workspace.max_corner.y - scenario.workspace.min_corner.y;
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 {w} {h}" width="{w}" height="{h}">"#
    );
    let _ = writeln!(
        s,
        r#"<rect x="0" y="0" width="{w}" height="{h}" fill="white" stroke="black" stroke-width="0.5"/>"#
    );
    // y flips so the SVG reads with the origin at the bottom-left.
    let fy = |y: f64| h - (y - scenario.workspace.min_corner.y);
    let fx = |x: f64| x - scenario.workspace.min_corner.x;

    let sites: Vec<Point> = scenario.robots.iter().map(|r| r.pos).collect();
    if let Ok(cells) = compute_voronoi(&sites, &scenario.workspace) {
        for cell in &cells {
            let pts: Vec<String> = cell
                .polygon
                .iter()
                .map(|p| format!("{:.3},{:.3}", fx(p.x), fy(p.y)))
                .collect();
            let _ = writeln!(
                s,
                r##"<polygon points="{}" fill="none" stroke="#bbbbbb" stroke-width="0.4"/>"##,
                pts.join(" ")
            );
        }
    }
    for tl in &plan.timelines {
        for a in &tl.actions {
            if let crate::coordination::ActionKind::Travel { from, to } = a.kind {
                let _ = writeln!(
                    s,
                    r##"<line x1="{:.3}" y1="{:.3}" x2="{:.3}" y2="{:.3}" stroke="#7799dd" stroke-width="0.3"/>"##,
                    fx(from.x),
                    fy(from.y),
                    fx(to.x),
                    fy(to.y)
                );
            }
        }
    }
    if let Some(trunk) = &plan.trunk {
        for e in &trunk.edges {
            let (a, b) = (trunk.node(e.from).unwrap().pos, trunk.node(e.to).unwrap().pos);
            let _ = writeln!(
                s,
                r##"<line x1="{:.3}" y1="{:.3}" x2="{:.3}" y2="{:.3}" stroke="#cc3333" stroke-width="0.8"/>"##,
                fx(a.x),
                fy(a.y),
                fx(b.x),
                fy(b.y)
            );
        }
        for n in &trunk.nodes {
            if matches!(n.kind, NodeKind::Relay(_)) {
                let _ = writeln!(
                    s,
                    r##"<circle cx="{:.3}" cy="{:.3}" r="1.2" fill="#cc3333"/>"##,
                    fx(n.pos.x),
                    fy(n.pos.y)
                );
            }
        }
    }
    for g in &scenario.goals {
        let _ = writeln!(
            s,
            r##"<circle cx="{:.3}" cy="{:.3}" r="1.0" fill="#228833"/>"##,
            fx(g.x),
            fy(g.y)
        );
    }
    for r in &scenario.robots {
        let _ = writeln!(
            s,
            r##"<rect x="{:.3}" y="{:.3}" width="2" height="2" fill="#333388"/>"##,
            fx(r.pos.x) - 1.0,
            fy(r.pos.y) - 1.0
        );
    }
    let _ = writeln!(
        s,
        r#"<circle cx="{:.3}" cy="{:.3}" r="1.6" fill="black"/>"#,
        fx(scenario.source.x),
        fy(scenario.source.y)
    );
    s.push_str("</svg>\n");
    s
}
