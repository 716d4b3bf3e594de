//! Event-driven replay of fixed routes. Crews travel, wait at a task until
//! every crew assigned to it is present and the window has opened, then leave
//! together when it completes.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use dwsrp::ReoptProblem;

const EPS: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct Replay {
    pub start: Vec<Option<f64>>,
    pub completion: Vec<Option<f64>>,
    pub arrival: Vec<Vec<f64>>,
    pub idle: Vec<Vec<f64>>,
    pub return_time: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReplayFailure {
    /// Crews wait on each other forever.
    Deadlock,
    LateStart,
    LateReturn,
    Uncovered,
    Malformed,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Event {
    Arrive { crew: usize, task: usize },
    Complete { task: usize },
    Return { crew: usize },
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Timed(f64, u64, Event);

impl Eq for Timed {}

impl Ord for Timed {
    fn cmp(&self, other: &Self) -> Ordering {
        // min-heap on (time, insertion order)
        other.0.total_cmp(&self.0).then(other.1.cmp(&self.1))
    }
}

impl PartialOrd for Timed {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Replays `routes` (task indices per crew) and reports the resulting times.
pub fn replay(problem: &ReoptProblem, routes: &[Vec<usize>]) -> Result<Replay, ReplayFailure> {
    let n = problem.tasks.len();
    let kk = problem.crews.len();
    if routes.len() != kk {
        return Err(ReplayFailure::Malformed);
    }
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (k, r) in routes.iter().enumerate() {
        for &i in r {
            if i >= n || members[i].contains(&k) {
                return Err(ReplayFailure::Malformed);
            }
            members[i].push(k);
        }
    }
    for (i, crews) in members.iter().enumerate() {
        if crews.is_empty() {
            continue;
        }
        let task = &problem.tasks[i];
        for q in 0..task.skills.len() {
            if task.skills.has(q) && !crews.iter().any(|&k| problem.crews[k].skills.has(q)) {
                return Err(ReplayFailure::Uncovered);
            }
        }
    }

    let mut out = Replay {
        start: vec![None; n],
        completion: vec![None; n],
        arrival: routes.iter().map(|r| vec![0.0; r.len()]).collect(),
        idle: routes.iter().map(|r| vec![0.0; r.len()]).collect(),
        return_time: vec![0.0; kk],
    };
    let position = |k: usize, i: usize| routes[k].iter().position(|&t| t == i).unwrap();
    let mut present: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut next_pos = vec![0usize; kk];
    let mut finished = vec![false; kk];
    let mut heap = BinaryHeap::new();
    let mut seq = 0u64;
    let mut push = |heap: &mut BinaryHeap<Timed>, t: f64, e: Event| {
        heap.push(Timed(t, seq, e));
        seq += 1;
    };

    let depot = problem.depot_node();
    for k in 0..kk {
        let ready = problem.crew_states[k].ready_time;
        let from = problem.start_node(k);
        match routes[k].first() {
            Some(&i) => push(&mut heap, ready + problem.travel_time(from, i), Event::Arrive { crew: k, task: i }),
            None => push(&mut heap, ready + problem.travel_time(from, depot), Event::Return { crew: k }),
        }
    }

    while let Some(Timed(now, _, event)) = heap.pop() {
        match event {
            Event::Arrive { crew, task } => {
                out.arrival[crew][position(crew, task)] = now;
                present[task].push(crew);
                if present[task].len() == members[task].len() {
                    let t = &problem.tasks[task];
                    let start = now.max(t.earliest);
                    if start > t.latest + EPS {
                        return Err(ReplayFailure::LateStart);
                    }
                    out.start[task] = Some(start);
                    for &k in &members[task] {
                        let pos = position(k, task);
                        out.idle[k][pos] = start - out.arrival[k][pos];
                    }
                    push(&mut heap, start + t.process, Event::Complete { task });
                }
            }
            Event::Complete { task } => {
                out.completion[task] = Some(now);
                for &k in &members[task] {
                    next_pos[k] = position(k, task) + 1;
                    match routes[k].get(next_pos[k]) {
                        Some(&j) => push(&mut heap, now + problem.travel_time(task, j), Event::Arrive { crew: k, task: j }),
                        None => push(&mut heap, now + problem.travel_time(task, depot), Event::Return { crew: k }),
                    }
                }
            }
            Event::Return { crew } => {
                if now > problem.horizon_end + EPS {
                    return Err(ReplayFailure::LateReturn);
                }
                out.return_time[crew] = now;
                finished[crew] = true;
            }
        }
    }
    if finished.iter().all(|&f| f) {
        Ok(out)
    } else {
        Err(ReplayFailure::Deadlock)
    }
}

/// Weighted throughput of a replay plus the outsourced tasks.
pub fn replay_twtt(problem: &ReoptProblem, replay: &Replay, outsourced: &[usize]) -> f64 {
    let mut total = 0.0;
    for (i, t) in problem.tasks.iter().enumerate() {
        if let Some(c) = replay.completion[i] {
            total += t.priority * (c - t.arrival);
        }
    }
    for &i in outsourced {
        let t = &problem.tasks[i];
        total += t.priority * (problem.horizon_end - t.arrival);
    }
    total
}
