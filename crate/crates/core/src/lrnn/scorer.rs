use super::net::{ground_net, Forward, GroundedNet};
use super::params::ParamStore;
use super::ExtendedProgram;
use crate::datalog::{PredId, Value};
use crate::planning::State;
use crate::policy::{ActionScorer, BoundPolicy, PolicyError, PolicyOutput};

/// Trained network used to rank the policy's actions.
#[derive(Debug, Clone)]
pub struct LrnnScorer {
    pub ext: ExtendedProgram,
    pub params: ParamStore,
}

impl LrnnScorer {
    pub fn new(ext: ExtendedProgram, params: ParamStore) -> Self {
        LrnnScorer { ext, params }
    }

    /// Scores of every action atom in `net`, as `(predicate, tuple, score)`
    /// in model order.
    pub fn score_all(&self, net: &GroundedNet, fwd: &Forward) -> Vec<(PredId, Vec<Value>, f64)> {
        let mut out = Vec::new();
        for &p in self.ext.action_preds() {
            let Some(rel) = net.model.relation(p) else {
                continue;
            };
            for t in rel.iter() {
                let node = net.node(p, t).expect("tuple of the model");
                out.push((p, t.to_vec(), self.params.readout(fwd.vector(node))));
            }
        }
        out
    }
}

impl ActionScorer for LrnnScorer {
    fn score(
        &self,
        policy: &BoundPolicy<'_>,
        state: &State,
        out: &PolicyOutput,
    ) -> Result<Vec<f64>, PolicyError> {
        let net = ground_net(&self.ext, &policy.encode(state), policy.eval)?;
        let fwd = net.forward(&self.params);
        let task = policy.task;
        out.actions
            .iter()
            .map(|&a| {
                let ga = &task.actions()[a];
                let pred = self.ext.action_preds()[ga.schema as usize];
                let args: Vec<Value> = ga.args.iter().map(|&o| policy.value_of(o)).collect();
                net.node(pred, &args)
                    .map(|node| self.params.readout(fwd.vector(node)))
                    .ok_or_else(|| {
                        PolicyError::Scorer(format!(
                            "no network node for {}",
                            task.action_string(a)
                        ))
                    })
            })
            .collect()
    }
}
