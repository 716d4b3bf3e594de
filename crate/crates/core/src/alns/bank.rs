//! Adaptive operator weights and roulette-wheel selection.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{AlnsParams, DestroyOp, RepairOp};

/// Weights never drop below this before normalization.
pub const WEIGHT_FLOOR: f64 = 0.01;

/// How a candidate fared; decides which reward its operators receive.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Outcome {
    NewBest,
    ImprovedCurrent,
    Accepted,
    Rejected,
}

impl Outcome {
    pub fn reward(self, params: &AlnsParams) -> f64 {
        match self {
            Outcome::NewBest => params.sigma1,
            Outcome::ImprovedCurrent => params.sigma2,
            Outcome::Accepted => params.sigma3,
            Outcome::Rejected => params.sigma4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OperatorBank {
    pub destroy_weights: Vec<f64>,
    pub repair_weights: Vec<f64>,
}

impl Default for OperatorBank {
    fn default() -> Self {
        let d = DestroyOp::ALL.len();
        let r = RepairOp::ALL.len();
        Self {
            destroy_weights: vec![1.0 / d as f64; d],
            repair_weights: vec![1.0 / r as f64; r],
        }
    }
}

impl OperatorBank {
    pub fn select<R: Rng + ?Sized>(&self, rng: &mut R) -> (DestroyOp, RepairOp) {
        let d = roulette_select(&self.destroy_weights, rng);
        let r = roulette_select(&self.repair_weights, rng);
        (DestroyOp::ALL[d], RepairOp::ALL[r])
    }

    /// Rewards both chosen operators, floors and renormalizes both vectors.
    pub fn update(&mut self, destroy: DestroyOp, repair: RepairOp, outcome: Outcome, params: &AlnsParams) {
        let reward = outcome.reward(params);
        self.destroy_weights[destroy.index()] += reward;
        self.repair_weights[repair.index()] += reward;
        floor_and_normalize(&mut self.destroy_weights);
        floor_and_normalize(&mut self.repair_weights);
    }
}

pub fn floor_and_normalize(weights: &mut [f64]) {
    for w in weights.iter_mut() {
        *w = w.max(WEIGHT_FLOOR);
    }
    let total: f64 = weights.iter().sum();
    for w in weights.iter_mut() {
        *w /= total;
    }
}

/// Index `i` with probability proportional to `weights[i]`.
pub fn roulette_select<R: Rng + ?Sized>(weights: &[f64], rng: &mut R) -> usize {
    assert!(!weights.is_empty(), "roulette over an empty wheel");
    let total: f64 = weights.iter().sum();
    let mut spin = rng.random::<f64>() * total;
    for (i, &w) in weights.iter().enumerate() {
        if spin < w {
            return i;
        }
        spin -= w;
    }
    weights.len() - 1
}
