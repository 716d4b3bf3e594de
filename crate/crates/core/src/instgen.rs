//! Seeded generation of full-day instances and their dynamism measures.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::combos::needs_synchronization;
use crate::model::{Crew, CrewId, CrewState, Minutes, ModelError, Point, ReoptProblem, SkillVector, Task, TaskId, TravelModel};

pub const GENERATOR_VERSION: &str = "dwsrp-instgen/1";
pub const DEFAULT_HORIZON: Minutes = 540.0;
pub const DEFAULT_SKILLS: usize = 5;
pub const AREA_KM: f64 = 25.0;

// independent ChaCha streams, one per sampled field
const STREAM_ARRIVAL: u64 = 1;
const STREAM_WINDOW: u64 = 2;
const STREAM_PROCESS: u64 = 3;
const STREAM_PRIORITY: u64 = 4;
const STREAM_LOCATION: u64 = 5;
const STREAM_TASK_SKILLS: u64 = 6;
const STREAM_CREW_SKILLS: u64 = 7;

/// A whole working day: every task with its arrival time, the crews and the
/// depot they leave from at time zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuperInstance {
    pub seed: Option<u64>,
    /// Number of arrival intervals the day was split into, when known.
    pub intervals: Option<usize>,
    pub horizon: Minutes,
    pub travel: TravelModel,
    pub depot: Point,
    pub crews: Vec<Crew>,
    pub tasks: Vec<Task>,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GenerateError {
    #[error("need n >= d >= 1, got n={n} d={d}")]
    Intervals { n: usize, d: usize },
    #[error("need at least one crew")]
    NoCrews,
    #[error("skill count must be in 1..=64, got {0}")]
    Skills(usize),
    #[error("degree of dynamism must lie in [0, 1), got {0}")]
    Dynamism(f64),
}

impl SuperInstance {
    /// Checks every task against the horizon, unique ids and consistent
    /// skill lengths.
    pub fn validate(&self) -> Result<(), ModelError> {
        if self.crews.is_empty() {
            return Err(ModelError::NoCrews);
        }
        if !(self.travel.speed_kmh.is_finite() && self.travel.speed_kmh > 0.0) {
            return Err(ModelError::Speed(self.travel.speed_kmh));
        }
        let q = self.skill_count();
        let mut crew_ids: Vec<CrewId> = self.crews.iter().map(|c| c.id).collect();
        crew_ids.sort_unstable();
        if let Some(w) = crew_ids.windows(2).find(|w| w[0] == w[1]) {
            return Err(ModelError::DuplicateCrew(w[0]));
        }
        let mut task_ids: Vec<TaskId> = self.tasks.iter().map(|t| t.id).collect();
        task_ids.sort_unstable();
        if let Some(w) = task_ids.windows(2).find(|w| w[0] == w[1]) {
            return Err(ModelError::DuplicateTask(w[0]));
        }
        for len in self.crews.iter().map(|c| c.skills.len()).chain(self.tasks.iter().map(|t| t.skills.len())) {
            if len != q {
                return Err(ModelError::SkillLength { expected: q, found: len });
            }
        }
        for t in &self.tasks {
            t.validate(self.horizon)?;
        }
        Ok(())
    }

    pub fn skill_count(&self) -> usize {
        self.crews.first().map_or(0, |c| c.skills.len())
    }

    pub fn task(&self, id: TaskId) -> Option<&Task> {
        self.tasks.iter().find(|t| t.id == id)
    }

    /// Tasks known at the start of the day.
    pub fn static_tasks(&self) -> Vec<Task> {
        self.tasks.iter().filter(|t| t.arrival <= 0.0).cloned().collect()
    }

    /// Crews at the depot, ready at time zero.
    pub fn initial_states(&self) -> Vec<CrewState> {
        self.crews
            .iter()
            .map(|c| CrewState {
                crew: c.id,
                location: self.depot,
                anchor: None,
                ready_time: 0.0,
            })
            .collect()
    }

    /// The static problem over the tasks known at time zero.
    pub fn static_problem(&self) -> Result<ReoptProblem, ModelError> {
        ReoptProblem::new(
            0.0,
            self.horizon,
            self.static_tasks(),
            self.crews.clone(),
            self.initial_states(),
            self.depot,
            self.travel,
        )
    }

    /// Tasks no single crew can serve alone.
    pub fn sync_count(&self) -> usize {
        self.tasks.iter().filter(|t| needs_synchronization(t, &self.crews)).count()
    }

    /// Largest travel time between any two of the task and depot locations.
    pub fn max_travel_time(&self) -> Minutes {
        let points: Vec<Point> = self.tasks.iter().map(|t| t.location).chain([self.depot]).collect();
        let mut best: f64 = 0.0;
        for (i, a) in points.iter().enumerate() {
            for b in &points[i + 1..] {
                best = best.max(self.travel.minutes(a, b));
            }
        }
        best
    }

    pub fn max_process_time(&self) -> Minutes {
        self.tasks.iter().map(|t| t.process).fold(0.0, f64::max)
    }

    /// Copy with every deadline moved to the end of the day.
    pub fn loosen(&self) -> SuperInstance {
        let mut loose = self.clone();
        for t in &mut loose.tasks {
            t.latest = self.horizon;
        }
        loose
    }
}

/// Degree of dynamism, its arrival-weighted form, and the variant that also
/// weighs window tightness.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Dynamism {
    pub delta: f64,
    pub effective: f64,
    pub effective_tw: f64,
}

pub fn dynamism_metrics(inst: &SuperInstance) -> Dynamism {
    let n = inst.tasks.len();
    if n == 0 {
        return Dynamism { delta: 0.0, effective: 0.0, effective_tw: 0.0 };
    }
    let nf = n as f64;
    let h = inst.horizon;
    let dynamic = inst.tasks.iter().filter(|t| t.arrival > 0.0).count();
    let effective = inst.tasks.iter().map(|t| t.arrival / h).sum::<f64>() / nf;
    let effective_tw = inst.tasks.iter().map(|t| 1.0 - (t.latest - t.arrival) / h).sum::<f64>() / nf;
    Dynamism {
        delta: dynamic as f64 / nf,
        effective: effective.clamp(0.0, 1.0),
        effective_tw: effective_tw.clamp(0.0, 1.0),
    }
}

/// `(n - floor(n / d)) / n`.
pub fn delta_for(n: usize, d: usize) -> f64 {
    if n == 0 {
        return 0.0;
    }
    (n - n / d) as f64 / n as f64
}

/// Interval count whose degree of dynamism is closest to `delta`; ties go
/// to the smaller `d`.
pub fn d_for_delta(n: usize, delta: f64) -> Result<usize, GenerateError> {
    if !(0.0..1.0).contains(&delta) {
        return Err(GenerateError::Dynamism(delta));
    }
    if n == 0 {
        return Err(GenerateError::Intervals { n, d: 1 });
    }
    let mut best = 1;
    for d in 2..=n {
        if (delta_for(n, d) - delta).abs() < (delta_for(n, best) - delta).abs() - 1e-12 {
            best = d;
        }
    }
    Ok(best)
}

/// Number of tasks revealed in each slot: index 0 holds the static tasks,
/// index `t` the tasks arriving in interval `t`.
pub fn interval_counts(n: usize, d: usize) -> Vec<usize> {
    let per = n / d;
    let mut counts = vec![per; d + 1];
    counts[d] = n - d * per;
    counts
}

fn random_skills<R: Rng>(rng: &mut R, q: usize) -> SkillVector {
    let mut bits: Vec<bool> = (0..q).map(|_| rng.random::<f64>() <= 0.5).collect();
    if !bits.iter().any(|&b| b) {
        bits[rng.random_range(0..q)] = true;
    }
    SkillVector::new(bits)
}

fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

/// Generates a day with `n` tasks, `k` crews and `d` arrival intervals.
pub fn generate_super(n: usize, k: usize, d: usize, seed: u64, skill_count: usize) -> Result<SuperInstance, GenerateError> {
    if d == 0 || d > n {
        return Err(GenerateError::Intervals { n, d });
    }
    if k == 0 {
        return Err(GenerateError::NoCrews);
    }
    if skill_count == 0 || skill_count > 64 {
        return Err(GenerateError::Skills(skill_count));
    }
    let horizon = DEFAULT_HORIZON;
    let width = horizon / d as f64;
    let mut arrivals_rng = stream(seed, STREAM_ARRIVAL);
    let mut window_rng = stream(seed, STREAM_WINDOW);
    let mut process_rng = stream(seed, STREAM_PROCESS);
    let mut priority_rng = stream(seed, STREAM_PRIORITY);
    let mut location_rng = stream(seed, STREAM_LOCATION);
    let mut skill_rng = stream(seed, STREAM_TASK_SKILLS);
    let mut crew_rng = stream(seed, STREAM_CREW_SKILLS);

    let mut tasks = Vec::with_capacity(n);
    for (slot, &count) in interval_counts(n, d).iter().enumerate() {
        for _ in 0..count {
            let arrival = if slot == 0 {
                0.0
            } else {
                // uniform on the half-open interval ((slot-1)w, slot*w]
                slot as f64 * width - arrivals_rng.random::<f64>() * width
            };
            let latest = (arrival + window_rng.random_range(10.0..50.0)).min(horizon);
            let id = TaskId(tasks.len() as u32 + 1);
            tasks.push(Task {
                id,
                arrival,
                process: process_rng.random_range(5.0..25.0),
                priority: priority_rng.random_range(1.0..5.0),
                earliest: arrival,
                latest,
                location: Point::new(
                    location_rng.random_range(0.0..AREA_KM),
                    location_rng.random_range(0.0..AREA_KM),
                ),
                skills: random_skills(&mut skill_rng, skill_count),
            });
        }
    }
    let crews = (0..k)
        .map(|i| Crew {
            id: CrewId(i as u32 + 1),
            skills: random_skills(&mut crew_rng, skill_count),
        })
        .collect();

    Ok(SuperInstance {
        seed: Some(seed),
        intervals: Some(d),
        horizon,
        travel: TravelModel::default(),
        depot: Point::new(AREA_KM / 2.0, AREA_KM / 2.0),
        crews,
        tasks,
    })
}
