use dwsrp::combos::{combinations_for, irreducible_combinations};
use dwsrp::schedule::{evaluate_schedule, twtt};
use dwsrp::{Crew, CrewId, CrewState, Infeasibility, Point, ReoptProblem, SkillVector, Task, TaskId, TravelModel};
use dwsrp_testkit::{minimal_subsets, random_problem, random_routes, replay, replay_twtt, ProblemShape, ReplayFailure};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn task(id: u32, x: f64, e: f64, l: f64, p: f64, w: f64, skills: &[u8]) -> Task {
    Task {
        id: TaskId(id),
        arrival: 0.0,
        process: p,
        priority: w,
        earliest: e,
        latest: l,
        location: Point::new(x, 0.0),
        skills: SkillVector::from_flags(skills),
    }
}

fn crew(id: u32, skills: &[u8]) -> Crew {
    Crew {
        id: CrewId(id),
        skills: SkillVector::from_flags(skills),
    }
}

fn state(id: u32, x: f64) -> CrewState {
    CrewState {
        crew: CrewId(id),
        location: Point::new(x, 0.0),
        anchor: None,
        ready_time: 0.0,
    }
}

// one kilometre per minute
const FAST: TravelModel = TravelModel { speed_kmh: 60.0 };

#[test]
fn sync_task_waits_for_the_later_crew() {
    let tasks = vec![task(4, 0.0, 0.0, 100.0, 10.0, 1.0, &[1, 1])];
    let crews = vec![crew(1, &[1, 0]), crew(2, &[0, 1])];
    let p = ReoptProblem::new(0.0, 540.0, tasks, crews, vec![state(1, 40.0), state(2, -25.0)], Point::new(0.0, 0.0), FAST).unwrap();
    let s = evaluate_schedule(&p, &[vec![0], vec![0]]).unwrap();
    assert_eq!(s.crew_arrival[0][0], 40.0);
    assert_eq!(s.crew_arrival[1][0], 25.0);
    assert_eq!(s.start[0], Some(40.0));
    assert_eq!(s.idle[0][0], 0.0);
    assert_eq!(s.idle[1][0], 15.0);
    let r = replay(&p, &[vec![0], vec![0]]).unwrap();
    assert_eq!(r.start, s.start);
    assert_eq!(r.idle, s.idle);
}

#[test]
fn worked_combination_example() {
    let t = Task {
        skills: SkillVector::from_flags(&[1, 1, 0, 0, 1]),
        ..task(1, 0.0, 0.0, 10.0, 1.0, 1.0, &[1, 1, 0, 0, 1])
    };
    let crews = vec![crew(1, &[1, 1, 1, 0, 1]), crew(2, &[1, 0, 0, 0, 0]), crew(3, &[0, 1, 0, 0, 1])];
    assert_eq!(irreducible_combinations(&t, &crews).unwrap(), vec![vec![0], vec![1, 2]]);
}

#[test]
fn evaluator_matches_event_replay_on_sync_instances() {
    let shape = ProblemShape {
        width_min: 200.0,
        width_max: 400.0,
        ..ProblemShape::tiny(4, 2, 3)
    };
    let mut compared = 0;
    let mut seed = 0;
    while compared < 50 {
        seed += 1;
        assert!(seed < 5000, "could not find enough sync instances");
        let p = random_problem(&shape, seed);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (routes, outsourced) = random_routes(&p, &mut rng, 0.1);
        let has_sync = (0..p.task_count()).any(|i| routes.iter().filter(|r| r.contains(&i)).count() > 1);
        if !has_sync {
            continue;
        }
        let ours = evaluate_schedule(&p, &routes);
        let oracle = replay(&p, &routes);
        match (&ours, &oracle) {
            (Ok(s), Ok(r)) => {
                for i in 0..p.task_count() {
                    match (s.start[i], r.start[i]) {
                        (Some(a), Some(b)) => assert!((a - b).abs() <= 1e-9, "seed {seed} task {i}: {a} vs {b}"),
                        (a, b) => assert_eq!(a, b, "seed {seed} task {i}"),
                    }
                    match (s.completion[i], r.completion[i]) {
                        (Some(a), Some(b)) => assert!((a - b).abs() <= 1e-9),
                        (a, b) => assert_eq!(a, b),
                    }
                }
                for k in 0..routes.len() {
                    for pos in 0..routes[k].len() {
                        assert!((s.crew_arrival[k][pos] - r.arrival[k][pos]).abs() <= 1e-9);
                        assert!((s.idle[k][pos] - r.idle[k][pos]).abs() <= 1e-9);
                    }
                    assert!((s.return_time[k] - r.return_time[k]).abs() <= 1e-9);
                }
                let a = twtt(&p, s, &outsourced);
                let b = replay_twtt(&p, r, &outsourced);
                assert!((a - b).abs() <= 1e-9);
                compared += 1;
            }
            (Err(Infeasibility::Deadlock { .. }), Err(ReplayFailure::Deadlock)) => {}
            (Err(_), Err(_)) => {}
            _ => panic!("seed {seed}: evaluator {ours:?} but replay {oracle:?}"),
        }
    }
}

#[test]
fn crossed_sync_routes_deadlock() {
    let tasks = vec![
        task(1, 5.0, 0.0, 500.0, 5.0, 1.0, &[1, 1]),
        task(2, 9.0, 0.0, 500.0, 5.0, 1.0, &[1, 1]),
    ];
    let crews = vec![crew(1, &[1, 0]), crew(2, &[0, 1])];
    let p = ReoptProblem::new(0.0, 540.0, tasks, crews, vec![state(1, 0.0), state(2, 0.0)], Point::new(0.0, 0.0), FAST).unwrap();
    let routes = [vec![0, 1], vec![1, 0]];
    assert!(matches!(evaluate_schedule(&p, &routes), Err(Infeasibility::Deadlock { .. })));
    assert_eq!(replay(&p, &routes), Err(ReplayFailure::Deadlock));
}

fn shape() -> impl Strategy<Value = (usize, usize, u64)> {
    (1usize..=5, 1usize..=3, any::<u64>())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn combinations_match_subset_filter((n, k, seed) in shape(), q in 1usize..=5) {
        let p = random_problem(&ProblemShape::tiny(n, k, q), seed);
        for i in 0..p.task_count() {
            prop_assert_eq!(combinations_for(&p, i), minimal_subsets(&p, i));
        }
    }

    #[test]
    fn evaluation_is_pure((n, k, seed) in shape()) {
        let p = random_problem(&ProblemShape::tiny(n, k, 3), seed);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (routes, _) = random_routes(&p, &mut rng, 0.2);
        prop_assert_eq!(evaluate_schedule(&p, &routes), evaluate_schedule(&p, &routes));
    }

    #[test]
    fn sync_idle_consistency((n, seed) in (1usize..=5, any::<u64>())) {
        let shape = ProblemShape { width_min: 300.0, width_max: 500.0, ..ProblemShape::tiny(n, 3, 3) };
        let p = random_problem(&shape, seed);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (routes, _) = random_routes(&p, &mut rng, 0.0);
        if let Ok(s) = evaluate_schedule(&p, &routes) {
            for i in 0..p.task_count() {
                let visits: Vec<(f64, f64)> = routes.iter().enumerate().filter_map(|(k, r)| {
                    r.iter().position(|&t| t == i).map(|pos| (s.crew_arrival[k][pos], s.idle[k][pos]))
                }).collect();
                if visits.len() < 2 {
                    continue;
                }
                let start = s.start[i].unwrap();
                let min_arrival = visits.iter().map(|v| v.0).fold(f64::INFINITY, f64::min);
                let max_arrival = visits.iter().map(|v| v.0).fold(f64::NEG_INFINITY, f64::max);
                let max_idle = visits.iter().map(|v| v.1).fold(f64::NEG_INFINITY, f64::max);
                let min_idle = visits.iter().map(|v| v.1).fold(f64::INFINITY, f64::min);
                prop_assert!((max_idle - (start - min_arrival)).abs() < 1e-9);
                let expect_min = (start - max_arrival.max(p.tasks[i].earliest)).max(0.0);
                prop_assert!((min_idle - (start - max_arrival)).abs() < 1e-9);
                if p.tasks[i].earliest <= max_arrival {
                    prop_assert!(min_idle.abs() < 1e-9 && expect_min == 0.0);
                }
            }
        }
    }

    #[test]
    fn later_ready_never_starts_earlier((n, k, seed) in shape(), delay in 0.0f64..60.0, which in 0usize..3) {
        let shape = ProblemShape { width_min: 1000.0, width_max: 2000.0, horizon: 5000.0, ..ProblemShape::tiny(n, k, 3) };
        let p = random_problem(&shape, seed);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (routes, _) = random_routes(&p, &mut rng, 0.0);
        let mut late = p.clone();
        late.crew_states[which % k].ready_time += delay;
        if let (Ok(a), Ok(b)) = (evaluate_schedule(&p, &routes), evaluate_schedule(&late, &routes)) {
            for i in 0..p.task_count() {
                if let (Some(x), Some(y)) = (a.start[i], b.start[i]) {
                    prop_assert!(y + 1e-9 >= x);
                }
            }
        }
    }

    #[test]
    fn objective_decomposes((n, k, seed) in shape()) {
        let p = random_problem(&ProblemShape::tiny(n, k, 3), seed);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (routes, outsourced) = random_routes(&p, &mut rng, 0.3);
        if let Ok(s) = evaluate_schedule(&p, &routes) {
            let mut total = 0.0;
            for i in 0..p.task_count() {
                let t = &p.tasks[i];
                let c = if outsourced.contains(&i) { p.horizon_end } else { s.completion[i].unwrap() };
                let term = t.priority * (c - t.arrival);
                prop_assert!(term >= 0.0);
                total += term;
            }
            prop_assert!((twtt(&p, &s, &outsourced) - total).abs() < 1e-9);
        }
    }
}
