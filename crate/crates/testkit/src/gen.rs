//! Seeded random static problems and random plans.

use dwsrp::{Crew, CrewId, CrewState, Point, ReoptProblem, SkillVector, Task, TaskId, TravelModel};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::brute::minimal_subsets;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProblemShape {
    pub tasks: usize,
    pub crews: usize,
    pub skills: usize,
    /// Earliest starts are drawn from `[0, earliest_max)`.
    pub earliest_max: f64,
    /// Window widths are drawn from `[width_min, width_max)`.
    pub width_min: f64,
    pub width_max: f64,
    pub horizon: f64,
    /// Side of the square area, km.
    pub area: f64,
    /// Probability that a skill is set.
    pub skill_density: f64,
}

impl ProblemShape {
    pub fn tiny(tasks: usize, crews: usize, skills: usize) -> Self {
        Self {
            tasks,
            crews,
            skills,
            earliest_max: 120.0,
            width_min: 30.0,
            width_max: 180.0,
            horizon: 540.0,
            area: 25.0,
            skill_density: 0.5,
        }
    }
}

fn skills<R: Rng>(rng: &mut R, q: usize, density: f64) -> SkillVector {
    let mut bits: Vec<bool> = (0..q).map(|_| rng.random::<f64>() < density).collect();
    if !bits.iter().any(|&b| b) {
        bits[rng.random_range(0..q)] = true;
    }
    SkillVector::new(bits)
}

/// Static problem at time zero: crews at a central depot, tasks known.
pub fn random_problem(shape: &ProblemShape, seed: u64) -> ReoptProblem {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let depot = Point::new(shape.area / 2.0, shape.area / 2.0);
    let crews: Vec<Crew> = (0..shape.crews)
        .map(|k| Crew {
            id: CrewId(k as u32 + 1),
            skills: skills(&mut rng, shape.skills, shape.skill_density),
        })
        .collect();
    let tasks: Vec<Task> = (0..shape.tasks)
        .map(|i| {
            let earliest = rng.random_range(0.0..shape.earliest_max);
            let width = rng.random_range(shape.width_min..shape.width_max);
            Task {
                id: TaskId(i as u32 + 1),
                arrival: 0.0,
                process: rng.random_range(5.0..25.0),
                priority: rng.random_range(1.0..5.0),
                earliest,
                latest: (earliest + width).min(shape.horizon),
                location: Point::new(rng.random_range(0.0..shape.area), rng.random_range(0.0..shape.area)),
                skills: skills(&mut rng, shape.skills, shape.skill_density),
            }
        })
        .collect();
    let states = crews
        .iter()
        .map(|c| CrewState {
            crew: c.id,
            location: depot,
            anchor: None,
            ready_time: 0.0,
        })
        .collect();
    ReoptProblem::new(0.0, shape.horizon, tasks, crews, states, depot, TravelModel::default()).expect("generated problems are valid")
}

/// A random plan: each coverable task goes to a random minimal crew subset
/// (or is outsourced with probability `outsource`), and routes are shuffled.
pub fn random_routes<R: Rng>(problem: &ReoptProblem, rng: &mut R, outsource: f64) -> (Vec<Vec<usize>>, Vec<usize>) {
    let mut routes = vec![Vec::new(); problem.crews.len()];
    let mut outsourced = Vec::new();
    for i in 0..problem.tasks.len() {
        let subsets = minimal_subsets(problem, i);
        if subsets.is_empty() || rng.random::<f64>() < outsource {
            outsourced.push(i);
            continue;
        }
        for &k in &subsets[rng.random_range(0..subsets.len())] {
            routes[k].push(i);
        }
    }
    for r in &mut routes {
        r.shuffle(rng);
    }
    (routes, outsourced)
}
