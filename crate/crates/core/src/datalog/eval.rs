//! Bottom-up semi-naive evaluation.
//!
//! Each stratum is saturated in rounds. The first round fires every rule of
//! the stratum against the full fact set; later rounds fire each recursive
//! body literal against only the tuples added in the previous round (a range
//! of tuple ids, since relations are append-only) while the remaining
//! literals see everything. Negated literals refer to strictly lower strata,
//! which are complete by the time they are consulted.

use smallvec::SmallVec;

use super::facts::FactSet;
use super::{DatalogError, Program, Rule, RulePlan, Term, Value};

pub const DEFAULT_DERIVED_CAP: usize = 10_000_000;

const UNBOUND: Value = Value::MAX;

#[derive(Debug, Clone, Copy)]
pub struct EvalOptions {
    /// Maximum number of atoms the evaluation may add to the input.
    pub derived_cap: usize,
}

impl Default for EvalOptions {
    fn default() -> Self {
        EvalOptions {
            derived_cap: DEFAULT_DERIVED_CAP,
        }
    }
}

struct Join<'a> {
    facts: &'a FactSet,
    rule: &'a Rule,
    plan: &'a RulePlan,
    /// Tuple-id window per positive literal; `None` = whole relation.
    ranges: &'a [Option<(u32, u32)>],
    binding: Vec<Value>,
    matched: Vec<u32>,
}

impl<'a> Join<'a> {
    fn new(
        facts: &'a FactSet,
        rule: &'a Rule,
        plan: &'a RulePlan,
        ranges: &'a [Option<(u32, u32)>],
    ) -> Self {
        Join {
            facts,
            rule,
            plan,
            ranges,
            binding: vec![UNBOUND; rule.num_vars()],
            matched: Vec::with_capacity(plan.positives.len()),
        }
    }

    fn ground(&self, args: &[Term], out: &mut SmallVec<[Value; 4]>) {
        out.clear();
        out.extend(args.iter().map(|t| match *t {
            Term::Var(v) => self.binding[v as usize],
            Term::Const(c) => c,
        }));
    }

    fn negatives_hold(&self, k: usize) -> bool {
        let mut buf = SmallVec::new();
        self.plan.neg_after[k].iter().all(|&bi| {
            let atom = &self.rule.body[bi].atom;
            self.ground(&atom.args, &mut buf);
            !self.facts.contains(atom.pred, &buf)
        })
    }

    fn run(&mut self, f: &mut dyn FnMut(&[Value], &[u32])) {
        if self.negatives_hold(0) {
            self.step(0, f);
        }
    }

    fn step(&mut self, k: usize, f: &mut dyn FnMut(&[Value], &[u32])) {
        if k == self.plan.positives.len() {
            f(&self.binding, &self.matched);
            return;
        }
        let atom = &self.rule.body[self.plan.positives[k]].atom;
        let Some(rel) = self.facts.relation(atom.pred) else {
            return;
        };
        let (lo, hi) = self.ranges[k].unwrap_or((0, rel.len() as u32));
        let key = atom.args.iter().enumerate().find_map(|(pos, t)| match *t {
            Term::Const(c) => Some((pos, c)),
            Term::Var(v) if self.binding[v as usize] != UNBOUND => {
                Some((pos, self.binding[v as usize]))
            }
            Term::Var(_) => None,
        });
        match key {
            Some((pos, v)) => {
                let ids = rel.with_value(pos, v);
                let start = ids.partition_point(|&i| i < lo);
                for &id in &ids[start..] {
                    if id >= hi {
                        break;
                    }
                    self.try_tuple(k, id, f);
                }
            }
            None => {
                for id in lo..hi {
                    self.try_tuple(k, id, f);
                }
            }
        }
    }

    fn try_tuple(&mut self, k: usize, id: u32, f: &mut dyn FnMut(&[Value], &[u32])) {
        let atom = &self.rule.body[self.plan.positives[k]].atom;
        let tuple = self
            .facts
            .relation(atom.pred)
            .expect("relation checked by caller")
            .tuple(id);
        let mut newly: SmallVec<[u32; 4]> = SmallVec::new();
        let mut ok = true;
        for (pos, t) in atom.args.iter().enumerate() {
            match *t {
                Term::Const(c) => {
                    if tuple[pos] != c {
                        ok = false;
                        break;
                    }
                }
                Term::Var(v) => {
                    let slot = &mut self.binding[v as usize];
                    if *slot == UNBOUND {
                        *slot = tuple[pos];
                        newly.push(v);
                    } else if *slot != tuple[pos] {
                        ok = false;
                        break;
                    }
                }
            }
        }
        if ok && self.negatives_hold(k + 1) {
            self.matched.push(id);
            self.step(k + 1, f);
            self.matched.pop();
        }
        for v in newly {
            self.binding[v as usize] = UNBOUND;
        }
    }
}

fn head_tuple(rule: &Rule, binding: &[Value], out: &mut Vec<Value>) {
    out.extend(rule.head.args.iter().map(|t| match *t {
        Term::Var(v) => binding[v as usize],
        Term::Const(c) => c,
    }));
}

impl Program {
    /// The canonical model of the program over `facts`.
    pub fn canonical_model(&self, facts: &FactSet) -> Result<FactSet, DatalogError> {
        self.canonical_model_with(facts.clone(), EvalOptions::default())
    }

    /// Extends `facts` in place to the canonical model.
    pub fn canonical_model_with(
        &self,
        mut facts: FactSet,
        opts: EvalOptions,
    ) -> Result<FactSet, DatalogError> {
        let mut derived = 0usize;
        // make sure every head relation exists with the declared arity
        for r in &self.rules {
            facts.relation_mut(r.head.pred, r.head.args.len());
        }
        let mut in_stratum = vec![false; self.preds.len()];
        for s in 0..self.num_strata() {
            let rules: Vec<usize> = self.rules_in_stratum(s).collect();
            if rules.is_empty() {
                continue;
            }
            in_stratum.iter_mut().for_each(|b| *b = false);
            for &ri in &rules {
                in_stratum[self.rules[ri].head.pred as usize] = true;
            }
            let before: Vec<u32> = (0..self.preds.len() as u32)
                .map(|p| facts.count(p) as u32)
                .collect();
            for &ri in &rules {
                let ranges = vec![None; self.plans[ri].positives.len()];
                self.fire(ri, &mut facts, &ranges, &mut derived, opts)?;
            }
            let mut delta: Vec<(u32, u32)> = (0..self.preds.len() as u32)
                .map(|p| (before[p as usize], facts.count(p) as u32))
                .collect();
            loop {
                let mut any = false;
                for &ri in &rules {
                    let plan = &self.plans[ri];
                    for (k, &bi) in plan.positives.iter().enumerate() {
                        let pred = self.rules[ri].body[bi].atom.pred as usize;
                        if !in_stratum[pred] || delta[pred].0 == delta[pred].1 {
                            continue;
                        }
                        let mut ranges = vec![None; plan.positives.len()];
                        ranges[k] = Some(delta[pred]);
                        any |= self.fire(ri, &mut facts, &ranges, &mut derived, opts)?;
                    }
                }
                if !any {
                    break;
                }
                for (p, d) in delta.iter_mut().enumerate() {
                    let now = facts.count(p as u32) as u32;
                    *d = (d.1, now);
                }
            }
        }
        Ok(facts)
    }

    /// Fires rule `ri` over `facts`; returns whether anything new was added.
    fn fire(
        &self,
        ri: usize,
        facts: &mut FactSet,
        ranges: &[Option<(u32, u32)>],
        derived: &mut usize,
        opts: EvalOptions,
    ) -> Result<bool, DatalogError> {
        let rule = &self.rules[ri];
        let arity = rule.head.args.len();
        let mut heads: Vec<Value> = Vec::new();
        let mut produced = 0usize;
        Join::new(facts, rule, &self.plans[ri], ranges).run(&mut |b, _| {
            head_tuple(rule, b, &mut heads);
            produced += 1;
        });
        let mut any = false;
        for i in 0..produced {
            let t = &heads[i * arity..(i + 1) * arity];
            if facts.insert(rule.head.pred, t) {
                any = true;
                *derived += 1;
                if *derived > opts.derived_cap {
                    return Err(DatalogError::ResourceLimit {
                        cap: opts.derived_cap,
                    });
                }
            }
        }
        Ok(any)
    }

    /// Enumerates every substitution satisfying rule `ri`'s body in `model`.
    /// The callback receives the variable binding and, for each positive
    /// body literal in body order, the id of the matched tuple.
    pub fn for_each_match(&self, ri: usize, model: &FactSet, mut f: impl FnMut(&[Value], &[u32])) {
        let ranges = vec![None; self.plans[ri].positives.len()];
        Join::new(model, &self.rules[ri], &self.plans[ri], &ranges).run(&mut f);
    }

    /// Ground head of rule `ri` under `binding`.
    pub fn head_of(&self, ri: usize, binding: &[Value]) -> Vec<Value> {
        let mut out = Vec::new();
        head_tuple(&self.rules[ri], binding, &mut out);
        out
    }
}
