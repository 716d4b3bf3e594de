//! Minimal crew sets able to serve a task together.

use crate::model::{Crew, ModelError, ReoptProblem, Task};

/// A set of crews, as ascending crew indices.
pub type Combination = Vec<usize>;

/// Every subset of `crews` whose pooled skills cover `task` and from which no
/// crew can be dropped without losing coverage.
///
/// Combinations come out ordered by size, then lexicographically by crew
/// index. An empty result means the task can only be outsourced.
pub fn irreducible_combinations(task: &Task, crews: &[Crew]) -> Result<Vec<Combination>, ModelError> {
    for c in crews {
        if c.skills.len() != task.skills.len() {
            return Err(ModelError::SkillLength {
                expected: task.skills.len(),
                found: c.skills.len(),
            });
        }
    }
    if task.skills.len() > 64 {
        return Err(ModelError::TooManySkills(task.skills.len()));
    }
    let masks: Vec<u64> = crews.iter().map(|c| c.skills.mask()).collect();
    Ok(minimal_covers(task.skills.mask(), &masks))
}

/// Combinations for task index `task` of a validated problem.
pub fn combinations_for(problem: &ReoptProblem, task: usize) -> Vec<Combination> {
    let masks: Vec<u64> = (0..problem.crew_count()).map(|k| problem.crew_mask(k)).collect();
    minimal_covers(problem.task_mask(task), &masks)
}

fn minimal_covers(required: u64, crew_masks: &[u64]) -> Vec<Combination> {
    let k = crew_masks.len();
    assert!(k < 32, "subset enumeration supports at most 31 crews");
    let pooled = |set: u32| -> u64 {
        (0..k)
            .filter(|&c| set & (1 << c) != 0)
            .fold(0, |acc, c| acc | crew_masks[c])
    };
    let covers = |set: u32| pooled(set) & required == required;

    let mut found: Vec<u32> = Vec::new();
    for set in 1u32..(1u32 << k) {
        if !covers(set) {
            continue;
        }
        // coverage is monotone, so checking single-crew removals suffices
        let minimal = (0..k)
            .filter(|&c| set & (1 << c) != 0)
            .all(|c| !covers(set & !(1 << c)));
        if minimal {
            found.push(set);
        }
    }
    let mut combos: Vec<Combination> = found
        .into_iter()
        .map(|set| (0..k).filter(|&c| set & (1 << c) != 0).collect())
        .collect();
    combos.sort_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.cmp(b)));
    combos
}

/// Tasks that no single crew can serve alone.
pub fn needs_synchronization(task: &Task, crews: &[Crew]) -> bool {
    let need = task.skills.mask();
    !crews.iter().any(|c| c.skills.mask() & need == need)
        && crews.iter().fold(0, |acc, c| acc | c.skills.mask()) & need == need
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::fixtures::{crew, task};

    #[test]
    fn worked_example() {
        let t = task(1, 0.0, 0.0, 0.0, 1.0, 1.0, 1.0, &[1, 1, 0, 0, 1]);
        let crews = vec![
            crew(1, &[1, 1, 1, 0, 1]),
            crew(2, &[1, 0, 0, 0, 0]),
            crew(3, &[0, 1, 0, 0, 1]),
        ];
        assert_eq!(irreducible_combinations(&t, &crews).unwrap(), vec![vec![0], vec![1, 2]]);
        assert!(!needs_synchronization(&t, &crews));
    }

    #[test]
    fn uncoverable_task_has_no_combination() {
        let t = task(1, 0.0, 0.0, 0.0, 1.0, 1.0, 1.0, &[0, 0, 1]);
        let crews = vec![crew(1, &[1, 1, 0]), crew(2, &[1, 0, 0])];
        assert!(irreducible_combinations(&t, &crews).unwrap().is_empty());
        assert!(!needs_synchronization(&t, &crews));
    }

    #[test]
    fn sync_only_task() {
        let t = task(1, 0.0, 0.0, 0.0, 1.0, 1.0, 1.0, &[1, 1, 1]);
        let crews = vec![crew(1, &[1, 1, 0]), crew(2, &[0, 1, 1]), crew(3, &[0, 0, 1])];
        let combos = irreducible_combinations(&t, &crews).unwrap();
        assert_eq!(combos, vec![vec![0, 1], vec![0, 2]]);
        assert!(needs_synchronization(&t, &crews));
    }
}
