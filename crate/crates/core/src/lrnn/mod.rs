//! Lifted relational network over a compiled policy: the rules of the
//! policy, extended with object message passing, become a differentiable
//! scorer of the actions the policy derives.

mod net;
mod params;
mod scorer;
mod train;

use thiserror::Error;

use crate::bk::CompiledBk;
use crate::datalog::{Atom, DatalogError, Literal, PredId, Program, Rule, Term};

pub use net::{ground_net, Forward, GroundedNet, NodeKind};
pub use params::{load_params, save_params, ParamStore, PARAMS_VERSION};
pub use scorer::LrnnScorer;
pub use train::{
    evaluate, loss_and_grad, prepare, train, Aggregation, EpochLog, Prepared, TrainConfig,
    TrainItem, TrainOutcome,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LrnnError {
    #[error(transparent)]
    Datalog(#[from] DatalogError),
    #[error("predicate name `{0}` is reserved for message passing")]
    Reserved(String),
    #[error("parameter file: {0}")]
    Format(String),
    #[error("unsupported parameter file version {found}")]
    Version { found: u32 },
    #[error("shape mismatch at rule `{rule}`: {msg}")]
    Shape { rule: String, msg: String },
    #[error("non-finite loss at sample {sample}")]
    NonFinite { sample: usize },
    #[error("empty training set")]
    EmptyDataset,
    #[error("{0}")]
    Io(String),
}

/// A compiled policy whose program carries the message-passing rules.
///
/// Rule ids `0..num_base` are the policy rules (bodies extended with
/// `h_L(X)` for every variable), followed by the n-ary, edge and `h_k`
/// rules. Predicate ids of the policy are kept.
#[derive(Debug, Clone)]
pub struct ExtendedProgram {
    pub base: CompiledBk,
    pub program: Program,
    pub layers: usize,
    pub num_base: usize,
    /// Input predicates, ascending; embeddings are indexed by position here.
    pub inputs: Vec<PredId>,
    /// `h_0 ..= h_L`.
    pub h: Vec<PredId>,
}

impl ExtendedProgram {
    pub fn input_index(&self, pred: PredId) -> Option<usize> {
        self.inputs.binary_search(&pred).ok()
    }

    pub fn rule_key(&self, rule: usize) -> String {
        self.program.rule_string(rule)
    }

    pub fn action_preds(&self) -> &[PredId] {
        &self.base.encoding.actions
    }
}

fn vars(n: usize) -> (Vec<Term>, Vec<String>) {
    (
        (0..n as u32).map(Term::Var).collect(),
        (1..=n).map(|i| format!("X{i}")).collect(),
    )
}

fn pos(pred: PredId, args: Vec<Term>) -> Literal {
    Literal {
        atom: Atom { pred, args },
        negated: false,
    }
}

/// Adds the message-passing rules with `layers` update rounds.
pub fn build_extension(bk: &CompiledBk, layers: usize) -> Result<ExtendedProgram, LrnnError> {
    let base = &bk.program;
    let mut preds = base.preds().clone();
    let inputs = bk.encoding.inputs();
    let mut declare = |name: String, arity: usize| -> Result<PredId, LrnnError> {
        if preds.get(&name).is_some() {
            return Err(LrnnError::Reserved(name));
        }
        Ok(preds.declare(&name, arity)?)
    };

    let mut arities: Vec<usize> = inputs
        .iter()
        .map(|&p| base.preds().arity(p))
        .filter(|&n| n > 0)
        .collect();
    arities.sort_unstable();
    arities.dedup();
    let max_arity = arities.last().copied().unwrap_or(0);
    let mut nary = vec![None; max_arity + 1];
    for &n in &arities {
        nary[n] = Some(declare(format!("mp_nary_{n}"), n)?);
    }
    let edge = if max_arity >= 2 {
        Some(declare("mp_edge".into(), 2)?)
    } else {
        None
    };
    let h: Vec<PredId> = (0..=layers)
        .map(|k| declare(format!("mp_h_{k}"), 1))
        .collect::<Result<_, _>>()?;

    let mut rules: Vec<Rule> = base
        .rules()
        .iter()
        .map(|r| {
            let mut r = r.clone();
            for v in r.vars_in_order() {
                r.body.push(pos(h[layers], vec![Term::Var(v)]));
            }
            r
        })
        .collect();
    let num_base = rules.len();

    for &p in &inputs {
        let n = base.preds().arity(p);
        if n == 0 {
            continue;
        }
        let (args, names) = vars(n);
        rules.push(Rule {
            head: Atom {
                pred: nary[n].expect("declared for every input arity"),
                args: args.clone(),
            },
            body: vec![pos(p, args)],
            var_names: names,
        });
    }
    for &n in &arities {
        let np = nary[n].expect("declared");
        let (args, names) = vars(n);
        if let Some(edge) = edge {
            for i in 0..n {
                for j in 0..n {
                    if i != j {
                        rules.push(Rule {
                            head: Atom {
                                pred: edge,
                                args: vec![args[i], args[j]],
                            },
                            body: vec![pos(np, args.clone())],
                            var_names: names.clone(),
                        });
                    }
                }
            }
        }
        for i in 0..n {
            rules.push(Rule {
                head: Atom {
                    pred: h[0],
                    args: vec![args[i]],
                },
                body: vec![pos(np, args.clone())],
                var_names: names.clone(),
            });
        }
    }
    for k in 0..layers {
        if let Some(edge) = edge {
            rules.push(Rule {
                head: Atom {
                    pred: h[k + 1],
                    args: vec![Term::Var(1)],
                },
                body: vec![
                    pos(h[k], vec![Term::Var(0)]),
                    pos(edge, vec![Term::Var(0), Term::Var(1)]),
                ],
                var_names: vec!["X".into(), "Y".into()],
            });
        }
        rules.push(Rule {
            head: Atom {
                pred: h[k + 1],
                args: vec![Term::Var(0)],
            },
            body: vec![pos(h[k], vec![Term::Var(0)])],
            var_names: vec!["Y".into()],
        });
    }

    let program = base.with_rules(preds, rules)?;
    Ok(ExtendedProgram {
        base: bk.clone(),
        program,
        layers,
        num_base,
        inputs,
        h,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bk::{compile_shorthand, BkSource, ShippedDomain};

    fn rules_with_head(ext: &ExtendedProgram, name: &str) -> Vec<String> {
        let p = ext.program.preds().get(name).unwrap();
        (0..ext.program.rules().len())
            .filter(|&r| ext.program.rules()[r].head.pred == p)
            .map(|r| ext.program.rule_string(r))
            .collect()
    }

    #[test]
    fn zero_layers_has_no_updates() {
        let bk = ShippedDomain::Blocksworld.compiled();
        let ext = build_extension(&bk, 0).unwrap();
        assert_eq!(ext.h.len(), 1);
        assert!(ext.program.preds().get("mp_h_1").is_none());
        let r = ext.program.rule_string(0);
        assert!(r.ends_with("mp_h_0(A), mp_h_0(B)."), "{r}");
    }

    #[test]
    fn binary_domain_has_two_edge_rules() {
        let bk = ShippedDomain::Blocksworld.compiled();
        let ext = build_extension(&bk, 1).unwrap();
        assert_eq!(
            rules_with_head(&ext, "mp_edge"),
            [
                "mp_edge(X1, X2) :- mp_nary_2(X1, X2).",
                "mp_edge(X2, X1) :- mp_nary_2(X1, X2)."
            ]
        );
        assert_eq!(
            rules_with_head(&ext, "mp_h_1"),
            [
                "mp_h_1(Y) :- mp_h_0(X), mp_edge(X, Y).",
                "mp_h_1(Y) :- mp_h_0(Y)."
            ]
        );
    }

    #[test]
    fn body_gains_one_atom_per_variable() {
        let d = ShippedDomain::Satellite.domain();
        let src = BkSource::parse(
            "satellite",
            "take_image(S, I, M, D) :- supports(I, M), on_board(I, S), have_image_ug(D, M).",
        )
        .unwrap();
        let bk = compile_shorthand(&src, d).unwrap();
        let ext = build_extension(&bk, 2).unwrap();
        let r = &ext.program.rules()[0];
        let h2 = ext.program.preds().get("mp_h_2").unwrap();
        assert_eq!(r.body.iter().filter(|l| l.atom.pred == h2).count(), 4);
        assert_eq!(ext.program.rule_string(0).matches("mp_h_2(").count(), 4);
    }

    #[test]
    fn extension_keeps_predicate_ids() {
        let bk = ShippedDomain::Ferry.compiled();
        let ext = build_extension(&bk, 1).unwrap();
        for p in bk.program.preds().ids() {
            assert_eq!(ext.program.preds().name(p), bk.program.preds().name(p));
        }
    }
}
