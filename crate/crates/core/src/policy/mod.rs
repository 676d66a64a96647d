//! Datalog-induced policies over planning tasks.

mod exec;
mod properties;

use std::time::Instant;

use rustc_hash::FxHashMap;
use thiserror::Error;

use crate::bk::{BkError, CompiledBk};
use crate::datalog::{DatalogError, EvalOptions, FactSet, PredId, Value};
use crate::planning::{AtomId, ObjId, State, Task};

pub use exec::{default_step_cap, execute_greedy, execute_sampling, ActionScorer, Trajectory};
pub use properties::{check_properties, PropertyReport, Roots, Witness};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PolicyError {
    #[error(transparent)]
    Datalog(#[from] DatalogError),
    #[error(transparent)]
    Bk(#[from] BkError),
    #[error("policy returned no action in non-goal state {state}")]
    EmptyPolicy { state: String },
    #[error("no goal reached within {cap} steps")]
    StepCap { cap: usize },
    #[error("policy chose inapplicable action {action}")]
    Inapplicable { action: String },
    #[error("scorer failed: {0}")]
    Scorer(String),
    #[error("time limit exceeded after {steps} steps")]
    TimeLimit { steps: usize },
}

/// `σ(s)` together with the canonical model it was read from.
#[derive(Debug, Clone)]
pub struct PolicyOutput {
    /// Ground-action indices of the task, in canonical order.
    pub actions: Vec<usize>,
    pub model: FactSet,
}

/// A compiled policy bound to one task: object-to-value mapping and
/// precomputed input encodings.
pub struct BoundPolicy<'a> {
    pub bk: &'a CompiledBk,
    pub task: &'a Task,
    obj_to_val: Vec<Value>,
    val_to_obj: FxHashMap<Value, ObjId>,
    type_facts: Vec<(PredId, Value)>,
    atom_args: Vec<Vec<Value>>,
    goal_mask: Vec<bool>,
    pub eval: EvalOptions,
    /// Executors give up once this instant has passed.
    pub deadline: Option<Instant>,
}

impl<'a> BoundPolicy<'a> {
    pub fn new(bk: &'a CompiledBk, task: &'a Task) -> Result<Self, PolicyError> {
        bk.check_task(task)?;
        let consts = bk.program.consts();
        let mut next = consts.len() as Value;
        let mut obj_to_val = Vec::with_capacity(task.objects().len());
        for (name, _) in task.objects() {
            obj_to_val.push(consts.get(name).unwrap_or_else(|| {
                next += 1;
                next - 1
            }));
        }
        let val_to_obj = obj_to_val
            .iter()
            .enumerate()
            .map(|(o, &v)| (v, o as ObjId))
            .collect();
        let types = &task.domain().types;
        let mut type_facts = Vec::new();
        for (o, (_, t)) in task.objects().iter().enumerate() {
            for a in types.ancestors(*t) {
                type_facts.push((bk.encoding.types[a as usize], obj_to_val[o]));
            }
        }
        let atom_args = (0..task.num_atoms() as AtomId)
            .map(|a| {
                task.atom(a)
                    .args
                    .iter()
                    .map(|&o| obj_to_val[o as usize])
                    .collect()
            })
            .collect();
        let mut goal_mask = vec![false; task.num_atoms()];
        for &g in task.goal() {
            goal_mask[g as usize] = true;
        }
        Ok(BoundPolicy {
            bk,
            task,
            obj_to_val,
            val_to_obj,
            type_facts,
            atom_args,
            goal_mask,
            eval: EvalOptions::default(),
            deadline: None,
        })
    }

    pub fn value_of(&self, o: ObjId) -> Value {
        self.obj_to_val[o as usize]
    }

    pub fn object_of(&self, v: Value) -> Option<ObjId> {
        self.val_to_obj.get(&v).copied()
    }

    /// Goal-annotated state plus typing facts.
    pub fn encode(&self, s: &State) -> FactSet {
        let enc = &self.bk.encoding;
        let mut facts = FactSet::new();
        let mut emit = |a: AtomId, in_state: bool| {
            let pred = self.task.atom(a).pred as usize;
            let p = match (in_state, self.goal_mask[a as usize]) {
                (true, true) => enc.ag[pred],
                (false, true) => enc.ug[pred],
                (true, false) => enc.aa[pred],
                (false, false) => return,
            };
            facts.insert(p, &self.atom_args[a as usize]);
        };
        for a in s.atoms() {
            emit(a, true);
        }
        for &g in self.task.goal() {
            if !s.contains(g) {
                emit(g, false);
            }
        }
        for &(p, v) in &self.type_facts {
            facts.insert(p, &[v]);
        }
        facts
    }

    /// Ground actions whose atoms occur in `model`, in canonical order.
    pub fn actions_in(&self, model: &FactSet) -> Vec<usize> {
        let mut out = Vec::new();
        for (schema, &pred) in self.bk.encoding.actions.iter().enumerate() {
            let Some(rel) = model.relation(pred) else {
                continue;
            };
            for t in rel.iter() {
                let args: Option<Vec<ObjId>> = t.iter().map(|&v| self.object_of(v)).collect();
                let Some(args) = args else { continue };
                if let Some(a) = self.task.action_id(schema as u32, &args) {
                    out.push(a);
                }
            }
        }
        out.sort_unstable();
        out.dedup();
        out
    }

    pub fn induced(&self, s: &State) -> Result<PolicyOutput, PolicyError> {
        let model = self
            .bk
            .program
            .canonical_model_with(self.encode(s), self.eval)?;
        let actions = self.actions_in(&model);
        Ok(PolicyOutput { actions, model })
    }

    pub fn sigma(&self, s: &State) -> Result<Vec<usize>, PolicyError> {
        Ok(self.induced(s)?.actions)
    }
}

/// Encodes `s` against the task goal; see [`BoundPolicy::encode`].
pub fn encode_goal(bk: &CompiledBk, task: &Task, s: &State) -> Result<FactSet, PolicyError> {
    Ok(BoundPolicy::new(bk, task)?.encode(s))
}

/// `σ(s)` with its canonical model.
pub fn induced_policy(
    bk: &CompiledBk,
    task: &Task,
    s: &State,
) -> Result<PolicyOutput, PolicyError> {
    BoundPolicy::new(bk, task)?.induced(s)
}
