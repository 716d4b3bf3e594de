//! Domain types: tasks, crews, skill vectors and the static subproblem solved
//! at every reoptimization epoch.

use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Times are fractional minutes measured from the start of the day.
pub type Minutes = f64;

/// Absolute tolerance for every time comparison.
pub const TIME_EPS: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("skill vector length mismatch: expected {expected}, found {found}")]
    SkillLength { expected: usize, found: usize },
    #[error("more than 64 skills are not supported (got {0})")]
    TooManySkills(usize),
    #[error("duplicate task id {0}")]
    DuplicateTask(TaskId),
    #[error("duplicate crew id {0}")]
    DuplicateCrew(CrewId),
    #[error("task {0}: {1}")]
    InvalidTask(TaskId, String),
    #[error("task {id} arrives at {arrival} after the epoch start {epoch_start}")]
    UnrevealedTask {
        id: TaskId,
        arrival: Minutes,
        epoch_start: Minutes,
    },
    #[error("crew {0} has no start state")]
    MissingCrewState(CrewId),
    #[error("start state for unknown or repeated crew {0}")]
    UnexpectedCrewState(CrewId),
    #[error("crew {crew} ready at {ready} before the epoch start {epoch_start}")]
    EarlyCrew {
        crew: CrewId,
        ready: Minutes,
        epoch_start: Minutes,
    },
    #[error("instance has no crews")]
    NoCrews,
    #[error("invalid travel speed {0}")]
    Speed(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TaskId(pub u32);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CrewId(pub u32);

impl fmt::Display for TaskId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl fmt::Display for CrewId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// A location in the plane, in kilometres.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn rectilinear(&self, other: &Point) -> f64 {
        (self.x - other.x).abs() + (self.y - other.y).abs()
    }
}

/// One boolean per skill. For a task it lists the skills required, for a
/// crew the skills it has.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SkillVector(Vec<bool>);

impl SkillVector {
    pub fn new(bits: Vec<bool>) -> Self {
        Self(bits)
    }

    /// Builds a vector from 0/1 flags; any non-zero entry counts as set.
    pub fn from_flags(flags: &[u8]) -> Self {
        Self(flags.iter().map(|&b| b != 0).collect())
    }

    pub fn to_flags(&self) -> Vec<u8> {
        self.0.iter().map(|&b| u8::from(b)).collect()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn bits(&self) -> &[bool] {
        &self.0
    }

    pub fn has(&self, q: usize) -> bool {
        self.0.get(q).copied().unwrap_or(false)
    }

    pub fn any(&self) -> bool {
        self.0.iter().any(|&b| b)
    }

    pub fn count(&self) -> usize {
        self.0.iter().filter(|&&b| b).count()
    }

    /// Bit q of the mask is skill q.
    pub fn mask(&self) -> u64 {
        self.0
            .iter()
            .enumerate()
            .filter(|(_, &b)| b)
            .fold(0u64, |m, (q, _)| m | (1u64 << q))
    }

    /// True iff every skill required by `required` is present in `self`.
    pub fn covers(&self, required: &SkillVector) -> Result<bool, ModelError> {
        if self.len() != required.len() {
            return Err(ModelError::SkillLength {
                expected: required.len(),
                found: self.len(),
            });
        }
        Ok(required
            .0
            .iter()
            .zip(&self.0)
            .all(|(&need, &have)| !need || have))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Task {
    pub id: TaskId,
    pub arrival: Minutes,
    pub process: Minutes,
    pub priority: f64,
    /// Earliest start.
    pub earliest: Minutes,
    /// Latest start.
    pub latest: Minutes,
    pub location: Point,
    pub skills: SkillVector,
}

impl Task {
    /// Checks `0 <= a <= e <= l <= horizon`, `p > 0` and `w > 0`.
    pub fn validate(&self, horizon: Minutes) -> Result<(), ModelError> {
        let bad = |msg: String| Err(ModelError::InvalidTask(self.id, msg));
        let values = [
            self.arrival,
            self.process,
            self.priority,
            self.earliest,
            self.latest,
            self.location.x,
            self.location.y,
        ];
        if values.iter().any(|v| !v.is_finite()) {
            return bad("non-finite field".into());
        }
        if self.process <= 0.0 {
            return bad(format!("processing time {} must be positive", self.process));
        }
        if self.priority <= 0.0 {
            return bad(format!("priority {} must be positive", self.priority));
        }
        if !(0.0 <= self.arrival
            && self.arrival <= self.earliest + TIME_EPS
            && self.earliest <= self.latest + TIME_EPS
            && self.latest <= horizon + TIME_EPS)
        {
            return bad(format!(
                "expected 0 <= a <= e <= l <= {horizon}, got a={} e={} l={}",
                self.arrival, self.earliest, self.latest
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Crew {
    pub id: CrewId,
    pub skills: SkillVector,
}

/// Where and when a crew becomes available at the start of an epoch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrewState {
    pub crew: CrewId,
    pub location: Point,
    /// The frozen or completed task the crew starts from, if any.
    pub anchor: Option<TaskId>,
    pub ready_time: Minutes,
}

/// Rectilinear travel at constant speed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TravelModel {
    pub speed_kmh: f64,
}

impl Default for TravelModel {
    fn default() -> Self {
        Self { speed_kmh: 30.0 }
    }
}

impl TravelModel {
    pub fn minutes(&self, from: &Point, to: &Point) -> Minutes {
        from.rectilinear(to) / self.speed_kmh * 60.0
    }
}

/// One static subproblem: the free tasks at an epoch, the crews and where
/// they start from.
///
/// Crews are kept sorted by id and `crew_states[k]` belongs to `crews[k]`.
/// Routes and schedules refer to tasks and crews by their index here.
#[derive(Debug, Clone)]
pub struct ReoptProblem {
    pub epoch_start: Minutes,
    pub horizon_end: Minutes,
    pub tasks: Vec<Task>,
    pub crews: Vec<Crew>,
    pub crew_states: Vec<CrewState>,
    pub depot: Point,
    pub travel: TravelModel,
    skill_count: usize,
    task_masks: Vec<u64>,
    crew_masks: Vec<u64>,
    index: HashMap<TaskId, usize>,
    // node order: tasks, crew starts, depot
    dist: Vec<f64>,
}

impl ReoptProblem {
    /// Validates the inputs and precomputes the travel-time matrix.
    ///
    /// Task windows are not required to be open: a task whose `latest` lies
    /// before its `earliest` can only be outsourced.
    pub fn new(
        epoch_start: Minutes,
        horizon_end: Minutes,
        tasks: Vec<Task>,
        mut crews: Vec<Crew>,
        crew_states: Vec<CrewState>,
        depot: Point,
        travel: TravelModel,
    ) -> Result<Self, ModelError> {
        if crews.is_empty() {
            return Err(ModelError::NoCrews);
        }
        if !(travel.speed_kmh.is_finite() && travel.speed_kmh > 0.0) {
            return Err(ModelError::Speed(travel.speed_kmh));
        }
        crews.sort_by_key(|c| c.id);
        let skill_count = crews[0].skills.len();
        if skill_count > 64 {
            return Err(ModelError::TooManySkills(skill_count));
        }
        for w in crews.windows(2) {
            if w[0].id == w[1].id {
                return Err(ModelError::DuplicateCrew(w[0].id));
            }
        }
        for c in &crews {
            if c.skills.len() != skill_count {
                return Err(ModelError::SkillLength {
                    expected: skill_count,
                    found: c.skills.len(),
                });
            }
        }

        let mut index = HashMap::with_capacity(tasks.len());
        for (i, t) in tasks.iter().enumerate() {
            if index.insert(t.id, i).is_some() {
                return Err(ModelError::DuplicateTask(t.id));
            }
            if t.skills.len() != skill_count {
                return Err(ModelError::SkillLength {
                    expected: skill_count,
                    found: t.skills.len(),
                });
            }
            if t.arrival > epoch_start + TIME_EPS {
                return Err(ModelError::UnrevealedTask {
                    id: t.id,
                    arrival: t.arrival,
                    epoch_start,
                });
            }
            if !(t.process > 0.0 && t.priority > 0.0) {
                return Err(ModelError::InvalidTask(
                    t.id,
                    "processing time and priority must be positive".into(),
                ));
            }
        }

        let mut ordered = Vec::with_capacity(crews.len());
        for c in &crews {
            let mut matching = crew_states.iter().filter(|s| s.crew == c.id);
            let state = matching.next().ok_or(ModelError::MissingCrewState(c.id))?;
            if matching.next().is_some() {
                return Err(ModelError::UnexpectedCrewState(c.id));
            }
            if state.ready_time + TIME_EPS < epoch_start {
                return Err(ModelError::EarlyCrew {
                    crew: c.id,
                    ready: state.ready_time,
                    epoch_start,
                });
            }
            ordered.push(state.clone());
        }
        if let Some(s) = crew_states
            .iter()
            .find(|s| crews.binary_search_by_key(&s.crew, |c| c.id).is_err())
        {
            return Err(ModelError::UnexpectedCrewState(s.crew));
        }

        let points: Vec<Point> = tasks
            .iter()
            .map(|t| t.location)
            .chain(ordered.iter().map(|s| s.location))
            .chain(std::iter::once(depot))
            .collect();
        let m = points.len();
        let mut dist = vec![0.0; m * m];
        for (a, pa) in points.iter().enumerate() {
            for (b, pb) in points.iter().enumerate() {
                dist[a * m + b] = travel.minutes(pa, pb);
            }
        }

        Ok(Self {
            epoch_start,
            horizon_end,
            task_masks: tasks.iter().map(|t| t.skills.mask()).collect(),
            crew_masks: crews.iter().map(|c| c.skills.mask()).collect(),
            tasks,
            crews,
            crew_states: ordered,
            depot,
            travel,
            skill_count,
            index,
            dist,
        })
    }

    pub fn task_count(&self) -> usize {
        self.tasks.len()
    }

    pub fn crew_count(&self) -> usize {
        self.crews.len()
    }

    pub fn skill_count(&self) -> usize {
        self.skill_count
    }

    pub fn task_index(&self, id: TaskId) -> Option<usize> {
        self.index.get(&id).copied()
    }

    pub fn crew_index(&self, id: CrewId) -> Option<usize> {
        self.crews.binary_search_by_key(&id, |c| c.id).ok()
    }

    pub fn task_mask(&self, task: usize) -> u64 {
        self.task_masks[task]
    }

    pub fn crew_mask(&self, crew: usize) -> u64 {
        self.crew_masks[crew]
    }

    /// Node index of crew `k`'s start location in the travel matrix.
    pub fn start_node(&self, crew: usize) -> usize {
        self.tasks.len() + crew
    }

    pub fn depot_node(&self) -> usize {
        self.tasks.len() + self.crews.len()
    }

    /// Travel time between two nodes (task indices, start nodes or the depot).
    #[inline]
    pub fn travel_time(&self, from: usize, to: usize) -> Minutes {
        let m = self.depot_node() + 1;
        self.dist[from * m + to]
    }

    /// Cost of outsourcing a task: `w (tau_max - a)`.
    pub fn outsourcing_cost(&self, task: usize) -> f64 {
        let t = &self.tasks[task];
        t.priority * (self.horizon_end - t.arrival)
    }
}

/// True iff `crew` has every skill `task` needs.
pub fn crew_covers(crew: &Crew, task: &Task) -> Result<bool, ModelError> {
    crew.skills.covers(&task.skills)
}


#[cfg(test)]
mod tests {
    use super::fixtures::*;
    use super::*;

    #[test]
    fn covers_worked_example() {
        let t = task(1, 0.0, 0.0, 0.0, 10.0, 1.0, 1.0, &[1, 1, 0, 0, 1]);
        assert!(crew_covers(&crew(1, &[1, 1, 1, 0, 1]), &t).unwrap());
        assert!(!crew_covers(&crew(2, &[1, 0, 0, 0, 0]), &t).unwrap());
    }

    #[test]
    fn empty_requirement_is_vacuously_covered() {
        let t = task(1, 0.0, 0.0, 0.0, 10.0, 1.0, 1.0, &[0, 0, 0]);
        assert!(crew_covers(&crew(1, &[0, 0, 0]), &t).unwrap());
    }

    #[test]
    fn mismatched_lengths_are_errors() {
        let t = task(1, 0.0, 0.0, 0.0, 10.0, 1.0, 1.0, &[1, 0, 0]);
        assert!(matches!(
            crew_covers(&crew(1, &[1, 0]), &t),
            Err(ModelError::SkillLength { .. })
        ));
    }

    #[test]
    fn travel_is_rectilinear_minutes() {
        let m = TravelModel { speed_kmh: 30.0 };
        let d = m.minutes(&Point::new(0.0, 0.0), &Point::new(3.0, 4.0));
        assert!((d - 14.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_unrevealed_tasks_and_bad_states() {
        let mut t = task(1, 0.0, 0.0, 0.0, 10.0, 1.0, 1.0, &[1]);
        t.arrival = 5.0;
        t.earliest = 5.0;
        let crews = vec![crew(1, &[1])];
        let states = at_depot(&crews, Point::new(0.0, 0.0));
        let err = ReoptProblem::new(
            0.0,
            540.0,
            vec![t],
            crews.clone(),
            states,
            Point::new(0.0, 0.0),
            TravelModel::default(),
        )
        .unwrap_err();
        assert!(matches!(err, ModelError::UnrevealedTask { .. }));

        let err = ReoptProblem::new(
            0.0,
            540.0,
            vec![],
            crews,
            vec![],
            Point::new(0.0, 0.0),
            TravelModel::default(),
        )
        .unwrap_err();
        assert_eq!(err, ModelError::MissingCrewState(CrewId(1)));
    }

    #[test]
    fn crews_are_sorted_and_states_aligned() {
        let crews = vec![crew(7, &[1]), crew(3, &[1])];
        let states = vec![
            CrewState {
                crew: CrewId(7),
                location: Point::new(1.0, 0.0),
                anchor: None,
                ready_time: 0.0,
            },
            CrewState {
                crew: CrewId(3),
                location: Point::new(2.0, 0.0),
                anchor: None,
                ready_time: 0.0,
            },
        ];
        let p = ReoptProblem::new(
            0.0,
            540.0,
            vec![],
            crews,
            states,
            Point::new(0.0, 0.0),
            TravelModel { speed_kmh: 60.0 },
        )
        .unwrap();
        assert_eq!(p.crews[0].id, CrewId(3));
        assert_eq!(p.crew_states[0].crew, CrewId(3));
        assert_eq!(p.travel_time(p.start_node(0), p.depot_node()), 2.0);
    }
}
