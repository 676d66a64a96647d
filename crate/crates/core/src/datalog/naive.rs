//! Naive reference evaluator.
//!
//! Shares nothing with the semi-naive engine beyond the rule representation:
//! facts live in a `BTreeSet`, bindings in a `BTreeMap`, and every rule of a
//! stratum is re-fired against the whole model until nothing changes.

use std::collections::{BTreeMap, BTreeSet};

use super::{DatalogError, EvalOptions, FactSet, PredId, Program, Rule, Term, Value};

type Model = BTreeSet<(PredId, Vec<Value>)>;
type Binding = BTreeMap<u32, Value>;

fn instantiate(args: &[Term], b: &Binding) -> Option<Vec<Value>> {
    args.iter()
        .map(|t| match t {
            Term::Const(c) => Some(*c),
            Term::Var(v) => b.get(v).copied(),
        })
        .collect()
}

fn unify(args: &[Term], tuple: &[Value], b: &Binding) -> Option<Binding> {
    let mut out = b.clone();
    for (t, &v) in args.iter().zip(tuple) {
        match t {
            Term::Const(c) if *c != v => return None,
            Term::Const(_) => {}
            Term::Var(x) => match out.get(x) {
                Some(&bound) if bound != v => return None,
                Some(_) => {}
                None => {
                    out.insert(*x, v);
                }
            },
        }
    }
    Some(out)
}

fn substitutions(rule: &Rule, model: &Model) -> Vec<Binding> {
    let mut partial = vec![Binding::new()];
    for lit in rule.body.iter().filter(|l| !l.negated) {
        let mut next = Vec::new();
        for b in &partial {
            let lo = (lit.atom.pred, Vec::new());
            for (p, t) in model.range(lo..) {
                if *p != lit.atom.pred {
                    break;
                }
                if let Some(nb) = unify(&lit.atom.args, t, b) {
                    next.push(nb);
                }
            }
        }
        partial = next;
    }
    partial.retain(|b| {
        rule.body.iter().filter(|l| l.negated).all(|l| {
            let t = instantiate(&l.atom.args, b).expect("safe rule binds negated variables");
            !model.contains(&(l.atom.pred, t))
        })
    });
    partial
}

/// Canonical model by naive iteration. Same contract as
/// [`Program::canonical_model`].
pub fn evaluate_naive(program: &Program, facts: &FactSet) -> Result<FactSet, DatalogError> {
    evaluate_naive_with(program, facts, EvalOptions::default())
}

pub fn evaluate_naive_with(
    program: &Program,
    facts: &FactSet,
    opts: EvalOptions,
) -> Result<FactSet, DatalogError> {
    let mut model: Model = facts.iter().map(|(p, t)| (p, t.to_vec())).collect();
    let start = model.len();
    for s in 0..program.num_strata() {
        let rules: Vec<&Rule> = program
            .rules()
            .iter()
            .filter(|r| program.stratum_of(r.head.pred) == s)
            .collect();
        loop {
            let mut new = Vec::new();
            for r in &rules {
                for b in substitutions(r, &model) {
                    let head = instantiate(&r.head.args, &b).expect("safe rule binds head");
                    if !model.contains(&(r.head.pred, head.clone())) {
                        new.push((r.head.pred, head));
                    }
                }
            }
            if new.is_empty() {
                break;
            }
            model.extend(new);
            if model.len() - start > opts.derived_cap {
                return Err(DatalogError::ResourceLimit {
                    cap: opts.derived_cap,
                });
            }
        }
    }
    Ok(model.into_iter().collect())
}
