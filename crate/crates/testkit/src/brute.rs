//! Exhaustive optimum over outsourcing choices, crew combinations and route
//! orders, evaluated by event replay.

use dwsrp::ReoptProblem;

use crate::des::{replay, replay_twtt};

/// Every minimal crew subset covering task `i`, checked against all proper
/// subsets. Sorted by size, then lexicographically.
pub fn minimal_subsets(problem: &ReoptProblem, i: usize) -> Vec<Vec<usize>> {
    let kk = problem.crews.len();
    let task = &problem.tasks[i];
    let covers = |mask: usize| {
        (0..task.skills.len()).all(|q| !task.skills.has(q) || (0..kk).any(|k| mask >> k & 1 == 1 && problem.crews[k].skills.has(q)))
    };
    let mut out: Vec<Vec<usize>> = Vec::new();
    for mask in 1usize..(1 << kk) {
        if !covers(mask) {
            continue;
        }
        // any non-empty proper submask covering means not minimal
        let mut sub = (mask - 1) & mask;
        let mut minimal = true;
        while sub > 0 {
            if covers(sub) {
                minimal = false;
                break;
            }
            sub = (sub - 1) & mask;
        }
        if minimal {
            out.push((0..kk).filter(|&k| mask >> k & 1 == 1).collect());
        }
    }
    out.sort_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.cmp(b)));
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct Optimum {
    pub twtt: f64,
    pub routes: Vec<Vec<usize>>,
    pub outsourced: Vec<usize>,
}

fn permutations(items: &[usize]) -> Vec<Vec<usize>> {
    if items.len() <= 1 {
        return vec![items.to_vec()];
    }
    let mut out = Vec::new();
    for (i, &first) in items.iter().enumerate() {
        let mut rest = items.to_vec();
        rest.remove(i);
        for mut p in permutations(&rest) {
            p.insert(0, first);
            out.push(p);
        }
    }
    out
}

/// Minimum weighted throughput over every plan. Feasible for any problem
/// since outsourcing everything always is.
pub fn brute_force_optimum(problem: &ReoptProblem) -> Optimum {
    let n = problem.tasks.len();
    let kk = problem.crews.len();
    let options: Vec<Vec<Option<Vec<usize>>>> = (0..n)
        .map(|i| std::iter::once(None).chain(minimal_subsets(problem, i).into_iter().map(Some)).collect())
        .collect();

    let mut best = Optimum {
        twtt: f64::INFINITY,
        routes: vec![Vec::new(); kk],
        outsourced: (0..n).collect(),
    };
    let mut choice = vec![0usize; n];
    loop {
        let mut sets: Vec<Vec<usize>> = vec![Vec::new(); kk];
        let mut outsourced = Vec::new();
        for i in 0..n {
            match &options[i][choice[i]] {
                None => outsourced.push(i),
                Some(crews) => crews.iter().for_each(|&k| sets[k].push(i)),
            }
        }
        let orders: Vec<Vec<Vec<usize>>> = sets.iter().map(|s| permutations(s)).collect();
        let mut pick = vec![0usize; kk];
        loop {
            let routes: Vec<Vec<usize>> = (0..kk).map(|k| orders[k][pick[k]].clone()).collect();
            if let Ok(r) = replay(problem, &routes) {
                let cost = replay_twtt(problem, &r, &outsourced);
                if cost < best.twtt - 1e-9 {
                    best = Optimum {
                        twtt: cost,
                        routes,
                        outsourced: outsourced.clone(),
                    };
                }
            }
            let mut k = 0;
            while k < kk {
                pick[k] += 1;
                if pick[k] < orders[k].len() {
                    break;
                }
                pick[k] = 0;
                k += 1;
            }
            if k == kk {
                break;
            }
        }

        let mut i = 0;
        while i < n {
            choice[i] += 1;
            if choice[i] < options[i].len() {
                break;
            }
            choice[i] = 0;
            i += 1;
        }
        if i == n {
            return best;
        }
    }
}
