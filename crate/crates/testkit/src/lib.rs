//! Independent oracles and random fixtures used by the test suites.

pub mod brute;
pub mod des;
pub mod gen;

pub use brute::{brute_force_optimum, minimal_subsets, Optimum};
pub use des::{replay, replay_twtt, Replay, ReplayFailure};
pub use gen::{random_problem, random_routes, ProblemShape};
