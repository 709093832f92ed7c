//! Seeded deterministic scenario generation for the benchmark families.
//!
//! All randomness comes from ChaCha8 seeded with the scenario seed, so a
//! given (family, seed) pair reproduces bit-identical scenarios on every
//! platform.

use crate::geometry::{Point, Workspace};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Minimum pairwise separation between generated points, in meters.
const MIN_SEPARATION: f64 = 1.0;
const MAX_REJECTIONS: usize = 100_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    SmallDense,
    SmallSparse,
    MediumBalanced,
    LargeDistribution,
    LargeWarehouse,
    HighCapacity,
    LowCapacity,
    Custom,
}

impl Family {
    pub const ALL: [Family; 7] = [
        Family::SmallDense,
        Family::SmallSparse,
        Family::MediumBalanced,
        Family::LargeDistribution,
        Family::LargeWarehouse,
        Family::HighCapacity,
        Family::LowCapacity,
    ];

    pub fn parse(s: &str) -> Option<Family> {
        match s {
            "small_dense" => Some(Family::SmallDense),
            "small_sparse" => Some(Family::SmallSparse),
            "medium_balanced" => Some(Family::MediumBalanced),
            "large_distribution" => Some(Family::LargeDistribution),
            "large_warehouse" => Some(Family::LargeWarehouse),
            "high_capacity" => Some(Family::HighCapacity),
            "low_capacity" => Some(Family::LowCapacity),
            "custom" => Some(Family::Custom),
            _ => None,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Family::SmallDense => "small_dense",
            Family::SmallSparse => "small_sparse",
            Family::MediumBalanced => "medium_balanced",
            Family::LargeDistribution => "large_distribution",
            Family::LargeWarehouse => "large_warehouse",
            Family::HighCapacity => "high_capacity",
            Family::LowCapacity => "low_capacity",
            Family::Custom => "custom",
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScenarioSpec {
    pub family: Family,
    pub workspace_w: f64,
    pub workspace_h: f64,
    pub n_goals: (usize, usize),
    pub n_robots: (usize, usize),
    pub capacity: u32,
    pub v_speed: f64,
    pub t_service: f64,
    pub seed: u64,
    /// Pin the source to the workspace center (warehouse-style runs).
    pub source_center: bool,
}

impl ScenarioSpec {
    pub fn preset(family: Family, seed: u64) -> ScenarioSpec {
        let (w, h, goals, robots, capacity, center) = match family {
            Family::SmallDense => (100.0, 100.0, (8, 8), (3, 3), 3, false),
            Family::SmallSparse => (150.0, 150.0, (8, 8), (3, 3), 3, false),
            Family::MediumBalanced => (200.0, 200.0, (15, 15), (4, 5), 3, false),
            Family::LargeDistribution => (400.0, 400.0, (25, 30), (8, 10), 3, false),
            Family::LargeWarehouse => (300.0, 300.0, (25, 30), (8, 10), 3, true),
            Family::HighCapacity => (250.0, 250.0, (18, 18), (5, 6), 6, false),
            Family::LowCapacity => (250.0, 250.0, (18, 18), (5, 6), 2, false),
            Family::Custom => (100.0, 100.0, (8, 8), (3, 3), 3, false),
        };
        ScenarioSpec {
            family,
            workspace_w: w,
            workspace_h: h,
            n_goals: goals,
            n_robots: robots,
            capacity,
            v_speed: 5.0,
            t_service: 5.0,
            seed,
            source_center: center,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Robot {
    pub id: usize,
    pub pos: Point,
    pub capacity: u32,
    pub speed: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Scenario {
    pub family: Family,
    pub workspace: Workspace,
    pub source: Point,
    pub goals: Vec<Point>,
    pub robots: Vec<Robot>,
    pub t_service: f64,
    pub seed: u64,
}

impl Scenario {
    pub fn n_goals(&self) -> usize {
        self.goals.len()
    }

    pub fn v_speed(&self) -> f64 {
        self.robots[0].speed
    }

    pub fn capacity(&self) -> u32 {
        self.robots[0].capacity
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum ScenarioError {
    #[error("workspace too small to place points with the minimum separation")]
    SeparationInfeasible,
    #[error("invalid family parameters: {0}")]
    InvalidSpec(String),
}

pub fn generate(spec: &ScenarioSpec) -> Result<Scenario, ScenarioError> {
    if spec.n_goals.0 == 0 || spec.n_robots.0 == 0 || spec.capacity == 0 || spec.v_speed <= 0.0
    {
        return Err(ScenarioError::InvalidSpec(
            "goals, robots, capacity, and speed must be positive".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let n_goals = draw_range(&mut rng, spec.n_goals);
    let n_robots = draw_range(&mut rng, spec.n_robots);
    let workspace = Workspace::rect(spec.workspace_w, spec.workspace_h);

    let mut placed: Vec<Point> = Vec::new();
    let place = |rng: &mut ChaCha8Rng, placed: &mut Vec<Point>| -> Result<Point, ScenarioError> {
        for _ in 0..MAX_REJECTIONS {
            let p = Point::new(
                rng.gen_range(0.0..spec.workspace_w),
                rng.gen_range(0.0..spec.workspace_h),
            );
            if placed.iter().all(|q| q.dist(p) >= MIN_SEPARATION) {
                placed.push(p);
                return Ok(p);
            }
        }
        Err(ScenarioError::SeparationInfeasible)
    };

    let source = if spec.source_center {
        let c = Point::new(spec.workspace_w / 2.0, spec.workspace_h / 2.0);
        placed.push(c);
        c
    } else {
        place(&mut rng, &mut placed)?
    };
    let goals: Vec<Point> = (0..n_goals)
        .map(|_| place(&mut rng, &mut placed))
        .collect::<Result<_, _>>()?;
    let robots: Vec<Robot> = (0..n_robots)
        .map(|id| {
            Ok(Robot {
                id,
                pos: place(&mut rng, &mut placed)?,
                capacity: spec.capacity,
                speed: spec.v_speed,
            })
        })
        .collect::<Result<_, ScenarioError>>()?;

    Ok(Scenario {
        family: spec.family,
        workspace,
        source,
        goals,
        robots,
        t_service: spec.t_service,
        seed: spec.seed,
    })
}

fn draw_range(rng: &mut ChaCha8Rng, (lo, hi): (usize, usize)) -> usize {
    if lo >= hi {
        lo
    } else {
        rng.gen_range(lo..=hi)
    }
}
