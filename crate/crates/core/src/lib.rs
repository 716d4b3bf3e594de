//! Scheduling and routing of multi-skilled field crews with synchronized
//! tasks, time windows and outsourcing, under dynamic task arrivals.

pub mod alns;
pub mod combos;
pub mod construct;
pub mod dynamics;
pub mod instgen;
pub mod mip;
pub mod model;
pub mod schedule;
pub mod solution;

pub use combos::{irreducible_combinations, Combination};
pub use construct::construct_initial;
pub use model::{Crew, CrewId, CrewState, Minutes, ModelError, Point, ReoptProblem, SkillVector, Task, TaskId, TravelModel};
pub use schedule::{evaluate_schedule, Infeasibility, Schedule};
pub use solution::{check_feasibility, PartialSolution, Solution, Violation};
