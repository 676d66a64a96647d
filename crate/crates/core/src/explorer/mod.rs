//! Exhaustive state-space expansion, the breadth-first distance oracle and
//! labeled training data.

mod dataset;

use std::collections::VecDeque;

use rustc_hash::FxHashMap;
use thiserror::Error;

use crate::planning::{State, Task};

pub use dataset::{
    label_dataset, read_dataset, write_dataset, DataState, DataTask, Dataset, DatasetError, Sample,
    DATASET_VERSION, MAX_TASKS,
};

pub const DEFAULT_BUDGET: usize = 10_000;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ExploreError {
    #[error("state space of `{task}` exceeds {budget} states")]
    Budget { task: String, budget: usize },
}

/// Reachable states of a task with all transitions. State 0 is the
/// initial state; ids follow breadth-first discovery order.
#[derive(Debug, Clone)]
pub struct StateSpace {
    pub states: Vec<State>,
    index: FxHashMap<State, u32>,
    /// Per state: `(ground action, successor)` in canonical action order.
    pub edges: Vec<Vec<(usize, u32)>>,
    pub goal: Vec<bool>,
}

impl StateSpace {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn id(&self, s: &State) -> Option<u32> {
        self.index.get(s).copied()
    }

    pub fn successor(&self, s: u32, action: usize) -> Option<u32> {
        self.edges[s as usize]
            .iter()
            .find(|&&(a, _)| a == action)
            .map(|&(_, t)| t)
    }

    pub fn num_transitions(&self) -> usize {
        self.edges.iter().map(Vec::len).sum()
    }
}

/// Breadth-first closure of the initial state under applicable actions.
pub fn expand(task: &Task, budget: usize) -> Result<StateSpace, ExploreError> {
    expand_from(task, std::slice::from_ref(task.initial_state()), budget)
}

/// Closure of several roots; roots get the first ids.
pub fn expand_from(
    task: &Task,
    roots: &[State],
    budget: usize,
) -> Result<StateSpace, ExploreError> {
    let mut space = StateSpace {
        states: Vec::new(),
        index: FxHashMap::default(),
        edges: Vec::new(),
        goal: Vec::new(),
    };
    let over = || ExploreError::Budget {
        task: task.name().to_string(),
        budget,
    };
    for r in roots {
        if space.index.contains_key(r) {
            continue;
        }
        if space.states.len() >= budget {
            return Err(over());
        }
        space.index.insert(r.clone(), space.states.len() as u32);
        space.states.push(r.clone());
    }
    let mut next = 0;
    while next < space.states.len() {
        let s = space.states[next].clone();
        let mut out = Vec::new();
        for (a, action) in task.actions().iter().enumerate() {
            if !action.applicable(&s) {
                continue;
            }
            let t = action.apply_unchecked(&s);
            let id = match space.index.get(&t) {
                Some(&id) => id,
                None => {
                    if space.states.len() >= budget {
                        return Err(over());
                    }
                    let id = space.states.len() as u32;
                    space.index.insert(t.clone(), id);
                    space.states.push(t);
                    id
                }
            };
            out.push((a, id));
        }
        space.goal.push(task.is_goal(&s));
        space.edges.push(out);
        next += 1;
    }
    Ok(space)
}

/// Exact goal distances by backward breadth-first search from all goal
/// states. `None` marks dead-ends.
pub fn oracle_distances(space: &StateSpace) -> Vec<Option<u32>> {
    let n = space.len();
    let mut rev: Vec<Vec<u32>> = vec![Vec::new(); n];
    for (s, out) in space.edges.iter().enumerate() {
        for &(_, t) in out {
            rev[t as usize].push(s as u32);
        }
    }
    let mut dist = vec![None; n];
    let mut queue = VecDeque::new();
    for (s, &g) in space.goal.iter().enumerate() {
        if g {
            dist[s] = Some(0);
            queue.push_back(s as u32);
        }
    }
    while let Some(t) = queue.pop_front() {
        let d = dist[t as usize].expect("queued states have a distance");
        for &s in &rev[t as usize] {
            if dist[s as usize].is_none() {
                dist[s as usize] = Some(d + 1);
                queue.push_back(s);
            }
        }
    }
    dist
}

/// Length of a shortest path from `from` to any goal state, by forward
/// breadth-first search.
pub fn forward_distance(space: &StateSpace, from: u32) -> Option<u32> {
    let mut seen = vec![false; space.len()];
    let mut queue = VecDeque::from([(from, 0u32)]);
    seen[from as usize] = true;
    while let Some((s, d)) = queue.pop_front() {
        if space.goal[s as usize] {
            return Some(d);
        }
        for &(_, t) in &space.edges[s as usize] {
            if !seen[t as usize] {
                seen[t as usize] = true;
                queue.push_back((t, d + 1));
            }
        }
    }
    None
}

/// Whether `action` from `s` is optimal: `d*(a(s)) = d*(s) - 1`.
pub fn is_optimal_step(dist: &[Option<u32>], s: u32, succ: u32) -> bool {
    match (dist[s as usize], dist[succ as usize]) {
        (Some(d), Some(e)) => d > 0 && e + 1 == d,
        _ => false,
    }
}
