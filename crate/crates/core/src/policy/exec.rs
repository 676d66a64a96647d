use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{BoundPolicy, PolicyError, PolicyOutput};
use crate::planning::{State, Task};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Trajectory {
    pub states: Vec<State>,
    pub actions: Vec<usize>,
    pub seed: u64,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.actions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.actions.is_empty()
    }

    /// Plan-file text, one `(action args)` per line.
    pub fn plan_text(&self, task: &Task) -> String {
        task.plan_string(&self.actions)
    }
}

/// Ten times the optimal plan length if known, else ten times `|O|^2`.
pub fn default_step_cap(task: &Task, optimal: Option<usize>) -> usize {
    let n = task.objects().len();
    10 * optimal.unwrap_or(n * n).max(1)
}

/// Scores the actions of `σ(s)`; one score per entry of `out.actions`.
pub trait ActionScorer {
    fn score(
        &self,
        policy: &BoundPolicy<'_>,
        state: &State,
        out: &PolicyOutput,
    ) -> Result<Vec<f64>, PolicyError>;
}

impl<F> ActionScorer for F
where
    F: Fn(&BoundPolicy<'_>, &State, &PolicyOutput) -> Result<Vec<f64>, PolicyError>,
{
    fn score(
        &self,
        policy: &BoundPolicy<'_>,
        state: &State,
        out: &PolicyOutput,
    ) -> Result<Vec<f64>, PolicyError> {
        self(policy, state, out)
    }
}

fn run(
    policy: &BoundPolicy<'_>,
    seed: u64,
    step_cap: usize,
    mut choose: impl FnMut(&State, &PolicyOutput) -> Result<usize, PolicyError>,
) -> Result<Trajectory, PolicyError> {
    let task = policy.task;
    let mut s = task.initial_state().clone();
    let mut traj = Trajectory {
        states: vec![s.clone()],
        actions: Vec::new(),
        seed,
    };
    while !task.is_goal(&s) {
        if traj.actions.len() >= step_cap {
            return Err(PolicyError::StepCap { cap: step_cap });
        }
        if policy.deadline.is_some_and(|d| Instant::now() >= d) {
            return Err(PolicyError::TimeLimit {
                steps: traj.actions.len(),
            });
        }
        let out = policy.induced(&s)?;
        if out.actions.is_empty() {
            return Err(PolicyError::EmptyPolicy {
                state: task.state_string(&s),
            });
        }
        let a = out.actions[choose(&s, &out)?];
        s = task.apply(a, &s).map_err(|_| PolicyError::Inapplicable {
            action: task.action_string(a),
        })?;
        traj.actions.push(a);
        traj.states.push(s.clone());
    }
    Ok(traj)
}

/// Follows `σ`, picking uniformly at random at every step.
pub fn execute_sampling(
    policy: &BoundPolicy<'_>,
    seed: u64,
    step_cap: usize,
) -> Result<Trajectory, PolicyError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    run(policy, seed, step_cap, |_, out| {
        Ok(rng.gen_range(0..out.actions.len()))
    })
}

/// Follows the highest-scoring action of `σ`; ties go to the action that
/// comes first in canonical order.
pub fn execute_greedy(
    policy: &BoundPolicy<'_>,
    scorer: &dyn ActionScorer,
    seed: u64,
    step_cap: usize,
) -> Result<Trajectory, PolicyError> {
    run(policy, seed, step_cap, |s, out| {
        let scores = scorer.score(policy, s, out)?;
        if scores.len() != out.actions.len() {
            return Err(PolicyError::Scorer(format!(
                "{} scores for {} actions",
                scores.len(),
                out.actions.len()
            )));
        }
        let mut best = 0;
        for (i, &v) in scores.iter().enumerate() {
            if v > scores[best] {
                best = i;
            }
        }
        Ok(best)
    })
}
