//! Mechanical checks of dead-end avoidance (P1), cycle freedom (P2) and
//! optimal-plan preservation (P3) over an enumerated state space.

use std::collections::VecDeque;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{BoundPolicy, PolicyError};
use crate::explorer::StateSpace;

const MAX_WITNESSES: usize = 20;

/// Which states the σ-graph is rooted at for P1 and P2.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Roots {
    /// Only the initial state (state 0 of the space).
    Initial,
    /// Every state of the space.
    All,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Witness {
    pub state: String,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PropertyReport {
    pub property: u8,
    pub holds: bool,
    /// Number of violating states.
    pub violations: usize,
    /// Number of states the property was evaluated on.
    pub coverage: usize,
    /// Up to twenty examples.
    pub witnesses: Vec<Witness>,
}

impl PropertyReport {
    fn new(property: u8) -> Self {
        PropertyReport {
            property,
            holds: true,
            violations: 0,
            coverage: 0,
            witnesses: Vec::new(),
        }
    }

    fn violate(&mut self, state: String, detail: String) {
        self.holds = false;
        self.violations += 1;
        if self.witnesses.len() < MAX_WITNESSES {
            self.witnesses.push(Witness { state, detail });
        }
    }

    pub fn fraction(&self) -> f64 {
        if self.coverage == 0 {
            0.0
        } else {
            self.violations as f64 / self.coverage as f64
        }
    }
}

/// Checks P1, P2 and P3 for `policy` on `space` (which must be the space of
/// `policy.task`), given oracle distances `dist`.
pub fn check_properties(
    policy: &BoundPolicy<'_>,
    space: &StateSpace,
    dist: &[Option<u32>],
    roots: Roots,
) -> Result<[PropertyReport; 3], PolicyError> {
    let task = policy.task;
    let n = space.len();
    // σ is never consulted at goal states
    let sigma: Vec<Vec<usize>> = (0..n)
        .into_par_iter()
        .map(|s| {
            if space.goal[s] {
                Ok(Vec::new())
            } else {
                policy.sigma(&space.states[s])
            }
        })
        .collect::<Result<_, _>>()?;
    let name = |s: usize| task.state_string(&space.states[s]);

    let mut p1 = PropertyReport::new(1);
    let mut succ: Vec<Vec<(usize, u32)>> = vec![Vec::new(); n];
    let mut inapplicable: Vec<Option<usize>> = vec![None; n];
    for s in 0..n {
        for &a in &sigma[s] {
            match space.successor(s as u32, a) {
                Some(t) => succ[s].push((a, t)),
                None => inapplicable[s] = Some(a),
            }
        }
    }

    // σ-reachable states
    let mut reach = vec![false; n];
    let mut queue: VecDeque<u32> = match roots {
        Roots::Initial => VecDeque::from([0]),
        Roots::All => (0..n as u32).collect(),
    };
    for &r in &queue {
        reach[r as usize] = true;
    }
    while let Some(s) = queue.pop_front() {
        for &(_, t) in &succ[s as usize] {
            if !reach[t as usize] {
                reach[t as usize] = true;
                queue.push_back(t);
            }
        }
    }

    // states from which a goal is σ-reachable
    let mut pred: Vec<Vec<u32>> = vec![Vec::new(); n];
    for s in 0..n {
        for &(_, t) in &succ[s] {
            pred[t as usize].push(s as u32);
        }
    }
    let mut coreach = vec![false; n];
    let mut queue: VecDeque<u32> = (0..n as u32).filter(|&s| space.goal[s as usize]).collect();
    for &g in &queue {
        coreach[g as usize] = true;
    }
    while let Some(t) = queue.pop_front() {
        for &s in &pred[t as usize] {
            if !coreach[s as usize] {
                coreach[s as usize] = true;
                queue.push_back(s);
            }
        }
    }

    for s in (0..n).filter(|&s| reach[s] && !space.goal[s]) {
        p1.coverage += 1;
        if sigma[s].is_empty() {
            p1.violate(name(s), "policy returns no action".into());
        } else if let Some(a) = inapplicable[s] {
            p1.violate(
                name(s),
                format!("policy returns inapplicable {}", task.action_string(a)),
            );
        } else if !coreach[s] {
            p1.violate(
                name(s),
                "no goal state is reachable by following the policy".into(),
            );
        }
    }

    let mut p2 = PropertyReport::new(2);
    p2.coverage = reach.iter().filter(|&&r| r).count();
    let comp = scc(&succ, &reach);
    let mut size = vec![0usize; n];
    for s in 0..n {
        if reach[s] {
            size[comp[s]] += 1;
        }
    }
    for s in (0..n).filter(|&s| reach[s]) {
        let self_loop = succ[s].iter().any(|&(_, t)| t as usize == s);
        if size[comp[s]] > 1 || self_loop {
            let detail = cycle_through(s, &succ, &comp)
                .into_iter()
                .map(|(a, t)| format!("{} -> {}", task.action_string(a), name(t as usize)))
                .collect::<Vec<_>>()
                .join("; ");
            p2.violate(name(s), format!("cycle: {detail}"));
        }
    }

    // P3 quantifies over every solvable state, not only σ-reachable ones
    let mut p3 = PropertyReport::new(3);
    for s in (0..n).filter(|&s| !space.goal[s]) {
        let Some(d) = dist[s] else { continue };
        p3.coverage += 1;
        let optimal = succ[s]
            .iter()
            .any(|&(_, t)| dist[t as usize].is_some_and(|e| e + 1 == d));
        if !optimal {
            let offered: Vec<String> = sigma[s].iter().map(|&a| task.action_string(a)).collect();
            p3.violate(
                name(s),
                format!(
                    "distance {d}; no optimal action among [{}]",
                    offered.join(", ")
                ),
            );
        }
    }
    Ok([p1, p2, p3])
}

/// Strongly connected components (iterative Tarjan) over reachable states.
fn scc(succ: &[Vec<(usize, u32)>], reach: &[bool]) -> Vec<usize> {
    let n = succ.len();
    let mut index = vec![usize::MAX; n];
    let mut low = vec![0usize; n];
    let mut on_stack = vec![false; n];
    let mut comp = vec![usize::MAX; n];
    let mut stack = Vec::new();
    let mut counter = 0;
    let mut ncomp = 0;
    for root in (0..n).filter(|&s| reach[s]) {
        if index[root] != usize::MAX {
            continue;
        }
        let mut call: Vec<(usize, usize)> = vec![(root, 0)];
        index[root] = counter;
        low[root] = counter;
        counter += 1;
        stack.push(root);
        on_stack[root] = true;
        while let Some(&mut (v, ref mut i)) = call.last_mut() {
            if *i < succ[v].len() {
                let w = succ[v][*i].1 as usize;
                *i += 1;
                if index[w] == usize::MAX {
                    index[w] = counter;
                    low[w] = counter;
                    counter += 1;
                    stack.push(w);
                    on_stack[w] = true;
                    call.push((w, 0));
                } else if on_stack[w] {
                    low[v] = low[v].min(index[w]);
                }
            } else {
                call.pop();
                if let Some(&(u, _)) = call.last() {
                    low[u] = low[u].min(low[v]);
                }
                if low[v] == index[v] {
                    loop {
                        let w = stack.pop().expect("component members are stacked");
                        on_stack[w] = false;
                        comp[w] = ncomp;
                        if w == v {
                            break;
                        }
                    }
                    ncomp += 1;
                }
            }
        }
    }
    comp
}

/// A shortest cycle from `s` back to itself within its component.
fn cycle_through(s: usize, succ: &[Vec<(usize, u32)>], comp: &[usize]) -> Vec<(usize, u32)> {
    let mut parent: Vec<Option<(usize, usize)>> = vec![None; succ.len()];
    let mut queue = VecDeque::new();
    for &(a, t) in &succ[s] {
        let t = t as usize;
        if t == s {
            return vec![(a, s as u32)];
        }
        if comp[t] == comp[s] && parent[t].is_none() {
            parent[t] = Some((s, a));
            queue.push_back(t);
        }
    }
    while let Some(u) = queue.pop_front() {
        for &(a, t) in &succ[u] {
            let t = t as usize;
            if t == s {
                let mut path = vec![(a, s as u32)];
                let mut cur = u;
                while cur != s {
                    let (p, pa) = parent[cur].expect("visited states have a parent");
                    path.push((pa, cur as u32));
                    cur = p;
                }
                path.reverse();
                return path;
            }
            if comp[t] == comp[s] && parent[t].is_none() && t != s {
                parent[t] = Some((u, a));
                queue.push_back(t);
            }
        }
    }
    Vec::new()
}
