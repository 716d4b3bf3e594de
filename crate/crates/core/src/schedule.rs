//! Timing of coupled crew routes.
//!
//! A task served by several crews starts once every one of them has arrived
//! (and not before its earliest start); crews that arrive early idle. Crews
//! leave a task the moment it completes. Start times are propagated over the
//! precedence graph formed by all routes together, so two routes waiting on
//! each other show up as a cycle and are reported instead of looping.

use std::cell::{Cell, RefCell};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{CrewId, Minutes, ReoptProblem, TaskId, TIME_EPS};

#[derive(Debug, Clone, PartialEq, Error, Serialize, Deserialize)]
pub enum Infeasibility {
    #[error("expected {expected} routes, got {found}")]
    RouteCount { expected: usize, found: usize },
    #[error("route of crew {crew} references unknown task index {index}")]
    UnknownTask { crew: CrewId, index: usize },
    #[error("task {task} appears twice in the route of crew {crew}")]
    RepeatedTask { crew: CrewId, task: TaskId },
    #[error("crews assigned to task {task} do not cover its skills")]
    Uncovered { task: TaskId },
    #[error("task {task} starts at {start:.4}, after its latest start {latest:.4}")]
    LateStart {
        task: TaskId,
        start: Minutes,
        latest: Minutes,
    },
    #[error("crew {crew} returns to the depot at {time:.4}, after the horizon {horizon:.4}")]
    LateReturn {
        crew: CrewId,
        time: Minutes,
        horizon: Minutes,
    },
    #[error("synchronization deadlock through tasks {cycle:?}")]
    Deadlock { cycle: Vec<TaskId> },
}

/// Evaluated timing of a set of routes. Per-task vectors are indexed like
/// `ReoptProblem::tasks` and hold `None` for tasks no route visits; per-crew
/// vectors are aligned with the route positions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Schedule {
    pub start: Vec<Option<Minutes>>,
    pub completion: Vec<Option<Minutes>>,
    pub crew_arrival: Vec<Vec<Minutes>>,
    pub idle: Vec<Vec<Minutes>>,
    pub return_time: Vec<Minutes>,
}

impl Schedule {
    /// Sum of `w (C - a)` over the tasks the routes serve.
    pub fn routed_cost(&self, problem: &ReoptProblem) -> f64 {
        self.completion
            .iter()
            .zip(&problem.tasks)
            .filter_map(|(c, t)| c.map(|c| t.priority * (c - t.arrival)))
            .sum()
    }
}

/// Total weighted throughput time: routed tasks complete when scheduled,
/// outsourced ones at the end of the horizon.
pub fn twtt(problem: &ReoptProblem, schedule: &Schedule, outsourced: &[usize]) -> f64 {
    schedule.routed_cost(problem) + outsourced.iter().map(|&i| problem.outsourcing_cost(i)).sum::<f64>()
}

thread_local! {
    static SCRATCH: RefCell<Scratch> = RefCell::new(Scratch::default());
    static EVALUATIONS: Cell<u64> = const { Cell::new(0) };
}

/// Number of route evaluations performed on this thread so far. Used as a
/// machine-independent measure of solver effort.
pub fn evaluation_count() -> u64 {
    EVALUATIONS.with(|c| c.get())
}

#[derive(Default)]
struct Scratch {
    offsets: Vec<usize>,
    occ: Vec<(u32, u32)>,
    fill: Vec<usize>,
    mark: Vec<u32>,
    pending: Vec<u32>,
    queue: Vec<usize>,
    start: Vec<f64>,
    completion: Vec<f64>,
    done: Vec<bool>,
}

/// Computes the earliest schedule of `routes` (one per crew, entries are task
/// indices) or the first reason it is infeasible.
pub fn evaluate_schedule(problem: &ReoptProblem, routes: &[Vec<usize>]) -> Result<Schedule, Infeasibility> {
    SCRATCH.with(|s| {
        let mut s = s.borrow_mut();
        propagate(problem, routes, &mut s)?;
        let n = problem.task_count();
        let mut schedule = Schedule {
            start: vec![None; n],
            completion: vec![None; n],
            crew_arrival: Vec::with_capacity(routes.len()),
            idle: Vec::with_capacity(routes.len()),
            return_time: Vec::with_capacity(routes.len()),
        };
        for i in 0..n {
            if s.done[i] {
                schedule.start[i] = Some(s.start[i]);
                schedule.completion[i] = Some(s.completion[i]);
            }
        }
        for (k, route) in routes.iter().enumerate() {
            let mut arrivals = Vec::with_capacity(route.len());
            let mut idles = Vec::with_capacity(route.len());
            let (mut node, mut time) = (problem.start_node(k), problem.crew_states[k].ready_time);
            for &i in route {
                let arrive = time + problem.travel_time(node, i);
                arrivals.push(arrive);
                idles.push(s.start[i] - arrive);
                node = i;
                time = s.completion[i];
            }
            schedule.crew_arrival.push(arrivals);
            schedule.idle.push(idles);
            schedule.return_time.push(time + problem.travel_time(node, problem.depot_node()));
        }
        Ok(schedule)
    })
}

/// `Schedule::routed_cost` without materializing the schedule.
pub fn routed_cost(problem: &ReoptProblem, routes: &[Vec<usize>]) -> Result<f64, Infeasibility> {
    SCRATCH.with(|s| {
        let mut s = s.borrow_mut();
        propagate(problem, routes, &mut s)?;
        Ok(problem
            .tasks
            .iter()
            .enumerate()
            .filter(|(i, _)| s.done[*i])
            .map(|(i, t)| t.priority * (s.completion[i] - t.arrival))
            .sum())
    })
}

fn propagate(problem: &ReoptProblem, routes: &[Vec<usize>], s: &mut Scratch) -> Result<(), Infeasibility> {
    EVALUATIONS.with(|c| c.set(c.get() + 1));
    let n = problem.task_count();
    if routes.len() != problem.crew_count() {
        return Err(Infeasibility::RouteCount {
            expected: problem.crew_count(),
            found: routes.len(),
        });
    }

    s.offsets.clear();
    s.offsets.resize(n + 1, 0);
    s.mark.clear();
    s.mark.resize(n, 0);
    s.pending.clear();
    s.pending.resize(n, 0);
    s.start.clear();
    s.start.resize(n, 0.0);
    s.completion.clear();
    s.completion.resize(n, 0.0);
    s.done.clear();
    s.done.resize(n, false);

    for (k, route) in routes.iter().enumerate() {
        for (pos, &i) in route.iter().enumerate() {
            if i >= n {
                return Err(Infeasibility::UnknownTask {
                    crew: problem.crews[k].id,
                    index: i,
                });
            }
            if s.mark[i] == k as u32 + 1 {
                return Err(Infeasibility::RepeatedTask {
                    crew: problem.crews[k].id,
                    task: problem.tasks[i].id,
                });
            }
            s.mark[i] = k as u32 + 1;
            s.offsets[i + 1] += 1;
            if pos > 0 {
                s.pending[i] += 1;
            }
        }
    }
    for i in 0..n {
        s.offsets[i + 1] += s.offsets[i];
    }
    let total = s.offsets[n];
    s.occ.clear();
    s.occ.resize(total, (0, 0));
    s.fill.clear();
    s.fill.extend_from_slice(&s.offsets[..n]);
    for (k, route) in routes.iter().enumerate() {
        for (pos, &i) in route.iter().enumerate() {
            s.occ[s.fill[i]] = (k as u32, pos as u32);
            s.fill[i] += 1;
        }
    }

    s.queue.clear();
    for i in 0..n {
        if s.offsets[i + 1] > s.offsets[i] && s.pending[i] == 0 {
            s.queue.push(i);
        }
    }

    let mut head = 0;
    while head < s.queue.len() {
        let i = s.queue[head];
        head += 1;
        let task = &problem.tasks[i];
        let mut begin = task.earliest;
        let mut pooled = 0u64;
        for o in s.offsets[i]..s.offsets[i + 1] {
            let (k, pos) = (s.occ[o].0 as usize, s.occ[o].1 as usize);
            pooled |= problem.crew_mask(k);
            let arrive = if pos == 0 {
                problem.crew_states[k].ready_time + problem.travel_time(problem.start_node(k), i)
            } else {
                let prev = routes[k][pos - 1];
                s.completion[prev] + problem.travel_time(prev, i)
            };
            begin = begin.max(arrive);
        }
        let need = problem.task_mask(i);
        if pooled & need != need {
            return Err(Infeasibility::Uncovered { task: task.id });
        }
        if begin > task.latest + TIME_EPS {
            return Err(Infeasibility::LateStart {
                task: task.id,
                start: begin,
                latest: task.latest,
            });
        }
        s.start[i] = begin;
        s.completion[i] = begin + task.process;
        s.done[i] = true;
        for o in s.offsets[i]..s.offsets[i + 1] {
            let (k, pos) = (s.occ[o].0 as usize, s.occ[o].1 as usize);
            if let Some(&next) = routes[k].get(pos + 1) {
                s.pending[next] -= 1;
                if s.pending[next] == 0 {
                    s.queue.push(next);
                }
            }
        }
    }

    let assigned = (0..n).filter(|&i| s.offsets[i + 1] > s.offsets[i]).count();
    if s.queue.len() < assigned {
        return Err(Infeasibility::Deadlock {
            cycle: find_cycle(problem, routes, s),
        });
    }

    for (k, route) in routes.iter().enumerate() {
        let back = match route.last() {
            Some(&last) => s.completion[last] + problem.travel_time(last, problem.depot_node()),
            None => {
                problem.crew_states[k].ready_time
                    + problem.travel_time(problem.start_node(k), problem.depot_node())
            }
        };
        if back > problem.horizon_end + TIME_EPS {
            return Err(Infeasibility::LateReturn {
                crew: problem.crews[k].id,
                time: back,
                horizon: problem.horizon_end,
            });
        }
    }
    Ok(())
}

/// Walks unprocessed predecessors until a task repeats.
fn find_cycle(problem: &ReoptProblem, routes: &[Vec<usize>], s: &Scratch) -> Vec<TaskId> {
    let n = problem.task_count();
    let Some(mut cur) = (0..n).find(|&i| !s.done[i] && s.pending[i] > 0) else {
        return Vec::new();
    };
    let mut order: Vec<usize> = Vec::new();
    let mut seen_at = vec![usize::MAX; n];
    loop {
        if seen_at[cur] != usize::MAX {
            return order[seen_at[cur]..]
                .iter()
                .rev()
                .map(|&i| problem.tasks[i].id)
                .collect();
        }
        seen_at[cur] = order.len();
        order.push(cur);
        let pred = (s.offsets[cur]..s.offsets[cur + 1])
            .map(|o| s.occ[o])
            .filter(|&(_, pos)| pos > 0)
            .map(|(k, pos)| routes[k as usize][pos as usize - 1])
            .find(|&p| !s.done[p]);
        match pred {
            Some(p) => cur = p,
            None => return order.iter().map(|&i| problem.tasks[i].id).collect(),
        }
    }
}
