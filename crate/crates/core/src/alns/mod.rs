//! Adaptive large neighbourhood search with simulated-annealing acceptance.

pub mod bank;
pub mod destroy;
pub mod repair;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use bank::{roulette_select, OperatorBank, Outcome, WEIGHT_FLOOR};
pub use destroy::{draw_gamma, removal_count, shaw_relatedness, Destruction};

use crate::model::ReoptProblem;
use crate::schedule::evaluation_count;
use crate::solution::Solution;

/// Objective differences below this are treated as ties.
const IMPROVE_EPS: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AlnsParams {
    pub t0: f64,
    pub alpha: f64,
    /// Iteration cap.
    pub nu1: usize,
    /// Stop after this many consecutive iterations without a new best.
    pub nu2: usize,
    pub gamma_min: f64,
    pub gamma_max: f64,
    pub sigma1: f64,
    pub sigma2: f64,
    pub sigma3: f64,
    pub sigma4: f64,
    pub regret_n: usize,
    pub seed: u64,
    /// Cool after every iteration instead of only after accepting a worse
    /// or equal candidate.
    pub cool_every_iteration: bool,
}

impl Default for AlnsParams {
    fn default() -> Self {
        Self {
            t0: 1000.0,
            alpha: 0.95,
            nu1: 250,
            nu2: 50,
            gamma_min: 0.5,
            gamma_max: 1.0,
            sigma1: 0.08,
            sigma2: 0.05,
            sigma3: 0.01,
            sigma4: -0.03,
            regret_n: 2,
            seed: 0,
            cool_every_iteration: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParamError {
    #[error("initial temperature must be positive, got {0}")]
    Temperature(f64),
    #[error("cooling factor must lie in (0, 1), got {0}")]
    Alpha(f64),
    #[error("destruction degree needs 0 <= gamma_min <= gamma_max <= 1, got [{0}, {1}]")]
    Gamma(f64, f64),
    #[error("rewards need sigma1 > sigma2 > sigma3 > 0 > sigma4")]
    Sigma,
    #[error("regret depth must be at least 2, got {0}")]
    Regret(usize),
}

impl AlnsParams {
    pub fn validate(&self) -> Result<(), ParamError> {
        if !(self.t0 > 0.0 && self.t0.is_finite()) {
            return Err(ParamError::Temperature(self.t0));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(ParamError::Alpha(self.alpha));
        }
        if !(0.0 <= self.gamma_min && self.gamma_min <= self.gamma_max && self.gamma_max <= 1.0) {
            return Err(ParamError::Gamma(self.gamma_min, self.gamma_max));
        }
        if !(self.sigma1 > self.sigma2 && self.sigma2 > self.sigma3 && self.sigma3 > 0.0 && self.sigma4 < 0.0) {
            return Err(ParamError::Sigma);
        }
        if self.regret_n < 2 {
            return Err(ParamError::Regret(self.regret_n));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum DestroyOp {
    RandomTask,
    WorstTask,
    RandomTeam,
    WorstTeam,
    Shaw,
}

impl DestroyOp {
    pub const ALL: [DestroyOp; 5] = [
        DestroyOp::RandomTask,
        DestroyOp::WorstTask,
        DestroyOp::RandomTeam,
        DestroyOp::WorstTeam,
        DestroyOp::Shaw,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn label(self) -> &'static str {
        match self {
            DestroyOp::RandomTask => "RTaR",
            DestroyOp::WorstTask => "WTaR",
            DestroyOp::RandomTeam => "RTeR",
            DestroyOp::WorstTeam => "WTeR",
            DestroyOp::Shaw => "SR",
        }
    }

    pub fn apply<R: Rng + ?Sized>(self, problem: &ReoptProblem, current: &Solution, count: usize, rng: &mut R) -> Destruction {
        match self {
            DestroyOp::RandomTask => destroy::destroy_random_task(problem, current, count, rng),
            DestroyOp::WorstTask => destroy::destroy_worst_task(problem, current, count),
            DestroyOp::RandomTeam => destroy::destroy_random_team(problem, current, count, rng),
            DestroyOp::WorstTeam => destroy::destroy_worst_team(problem, current, count),
            DestroyOp::Shaw => destroy::destroy_shaw(problem, current, count, rng),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum RepairOp {
    Random,
    Greedy,
    Regret,
}

impl RepairOp {
    pub const ALL: [RepairOp; 3] = [RepairOp::Random, RepairOp::Greedy, RepairOp::Regret];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn label(self) -> &'static str {
        match self {
            RepairOp::Random => "RaI",
            RepairOp::Greedy => "GI",
            RepairOp::Regret => "ReI",
        }
    }

    /// Reinserts the removed tasks together with everything outsourced.
    pub fn apply<R: Rng + ?Sized>(
        self,
        problem: &ReoptProblem,
        destruction: Destruction,
        params: &AlnsParams,
        rng: &mut R,
    ) -> Solution {
        let (open, pending) = repair::open_pool(problem, destruction.partial, &destruction.removed);
        let repaired = match self {
            RepairOp::Random => repair::repair_random(problem, open, &pending, rng),
            RepairOp::Greedy => repair::repair_greedy(problem, open, &pending),
            RepairOp::Regret => repair::repair_regret(problem, open, &pending, params.regret_n),
        };
        repaired.into_solution(problem).expect("repair only applies feasible insertions")
    }
}

/// Simulated-annealing acceptance. Improving candidates always pass; others
/// with probability `exp(-(candidate - current) / temperature)`.
pub fn accept<R: Rng + ?Sized>(candidate: f64, current: f64, temperature: f64, rng: &mut R) -> bool {
    let delta = candidate - current;
    if delta < 0.0 {
        return true;
    }
    rng.random::<f64>() < (-delta / temperature).exp()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iteration: usize,
    pub destroy: DestroyOp,
    pub repair: RepairOp,
    pub removed: usize,
    pub candidate: f64,
    pub current: f64,
    pub best: f64,
    pub temperature: f64,
    pub outcome: Outcome,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AlnsRun {
    pub best: Solution,
    pub trace: Vec<IterationRecord>,
    pub bank: OperatorBank,
    /// Schedule evaluations spent by the search.
    pub evaluations: u64,
}

pub fn run_alns(problem: &ReoptProblem, initial: Solution, params: &AlnsParams) -> AlnsRun {
    run_alns_with_observer(problem, initial, params, |_, _| {})
}

/// Runs the search, calling `observe` after every iteration with its record
/// and the operator weights after the update.
pub fn run_alns_with_observer<F>(problem: &ReoptProblem, initial: Solution, params: &AlnsParams, mut observe: F) -> AlnsRun
where
    F: FnMut(&IterationRecord, &OperatorBank),
{
    let evaluations_before = evaluation_count();
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut bank = OperatorBank::default();
    let mut temperature = params.t0;
    let mut best = initial.clone();
    let mut current = initial;
    let mut trace = Vec::new();
    let mut stale = 0usize;

    for iteration in 1..=params.nu1 {
        if stale >= params.nu2 {
            break;
        }
        let (d, r) = bank.select(&mut rng);
        let gamma = draw_gamma(params, &mut rng);
        let count = removal_count(gamma, current.in_house().len());
        let destruction = d.apply(problem, &current, count, &mut rng);
        let removed = destruction.removed.len();
        let candidate = r.apply(problem, destruction, params, &mut rng);

        let candidate_cost = candidate.twtt;
        let improving = candidate_cost < current.twtt - IMPROVE_EPS;
        let outcome = if accept(candidate_cost, current.twtt, temperature, &mut rng) {
            current = candidate;
            if current.twtt < best.twtt - IMPROVE_EPS {
                best = current.clone();
                Outcome::NewBest
            } else if improving {
                Outcome::ImprovedCurrent
            } else {
                Outcome::Accepted
            }
        } else {
            Outcome::Rejected
        };

        if params.cool_every_iteration || outcome == Outcome::Accepted {
            temperature *= params.alpha;
        }
        if outcome == Outcome::NewBest {
            stale = 0;
        } else {
            stale += 1;
        }
        bank.update(d, r, outcome, params);

        let record = IterationRecord {
            iteration,
            destroy: d,
            repair: r,
            removed,
            candidate: candidate_cost,
            current: current.twtt,
            best: best.twtt,
            temperature,
            outcome,
        };
        observe(&record, &bank);
        trace.push(record);
    }

    AlnsRun {
        best,
        trace,
        bank,
        evaluations: evaluation_count() - evaluations_before,
    }
}
