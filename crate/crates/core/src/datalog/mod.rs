//! Stratified Datalog with negation.
//!
//! Programs are built from [`syntax::RuleAst`] (or directly from [`Rule`]s),
//! checked for safety and arity, and stratified on construction. Evaluation
//! ([`Program::canonical_model`]) is semi-naive per stratum; a naive
//! evaluator ([`naive::evaluate_naive`]) serves as a differential oracle.

mod eval;
mod facts;
pub mod naive;
pub mod syntax;

use std::fmt;

use indexmap::IndexSet;
use rustc_hash::FxHashMap;
use thiserror::Error;

pub use eval::{EvalOptions, DEFAULT_DERIVED_CAP};
pub use facts::{FactSet, Relation};
use syntax::{AtomAst, RuleAst, TermAst};

pub type PredId = u32;
/// A ground value (object). Ids are assigned by an [`Interner`].
pub type Value = u32;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DatalogError {
    #[error("syntax error at {line}:{col}: {msg}")]
    Syntax {
        line: usize,
        col: usize,
        msg: String,
    },
    #[error("predicate `{pred}` used with arity {found}, declared with arity {expected}")]
    ArityMismatch {
        pred: String,
        expected: usize,
        found: usize,
    },
    #[error("unsafe rule `{rule}`: variable {var} does not occur in a positive body literal")]
    Unsafe { rule: String, var: String },
    #[error("program is not stratifiable: negative cycle {}", cycle.join(" -> "))]
    NotStratifiable { cycle: Vec<String> },
    #[error("derived-atom limit of {cap} exceeded")]
    ResourceLimit { cap: usize },
}

/// String interner with dense ids in insertion order.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Interner {
    names: IndexSet<String>,
}

impl Interner {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn intern(&mut self, name: &str) -> u32 {
        if let Some(i) = self.names.get_index_of(name) {
            return i as u32;
        }
        self.names.insert_full(name.to_string()).0 as u32
    }

    pub fn get(&self, name: &str) -> Option<u32> {
        self.names.get_index_of(name).map(|i| i as u32)
    }

    pub fn name(&self, id: u32) -> &str {
        &self.names[id as usize]
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &str> {
        self.names.iter().map(String::as_str)
    }
}

/// Predicate symbols with fixed arities.
#[derive(Debug, Clone, Default)]
pub struct PredTable {
    names: Vec<String>,
    arities: Vec<usize>,
    index: FxHashMap<String, PredId>,
}

impl PredTable {
    pub fn new() -> Self {
        Self::default()
    }

    /// Declares `name/arity`, returning the existing id if already declared.
    pub fn declare(&mut self, name: &str, arity: usize) -> Result<PredId, DatalogError> {
        if let Some(&id) = self.index.get(name) {
            let expected = self.arities[id as usize];
            if expected != arity {
                return Err(DatalogError::ArityMismatch {
                    pred: name.to_string(),
                    expected,
                    found: arity,
                });
            }
            return Ok(id);
        }
        let id = self.names.len() as PredId;
        self.names.push(name.to_string());
        self.arities.push(arity);
        self.index.insert(name.to_string(), id);
        Ok(id)
    }

    pub fn get(&self, name: &str) -> Option<PredId> {
        self.index.get(name).copied()
    }

    pub fn name(&self, id: PredId) -> &str {
        &self.names[id as usize]
    }

    pub fn arity(&self, id: PredId) -> usize {
        self.arities[id as usize]
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn ids(&self) -> impl Iterator<Item = PredId> {
        0..self.names.len() as PredId
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Term {
    /// Rule-local variable index.
    Var(u32),
    Const(Value),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Atom {
    pub pred: PredId,
    pub args: Vec<Term>,
}

impl Atom {
    pub fn vars(&self) -> impl Iterator<Item = u32> + '_ {
        self.args.iter().filter_map(|t| match t {
            Term::Var(v) => Some(*v),
            Term::Const(_) => None,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Literal {
    pub atom: Atom,
    pub negated: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Rule {
    pub head: Atom,
    pub body: Vec<Literal>,
    /// Variable names, indexed by [`Term::Var`].
    pub var_names: Vec<String>,
}

impl Rule {
    pub fn num_vars(&self) -> usize {
        self.var_names.len()
    }

    /// Variables in order of first occurrence (head first, then body).
    pub fn vars_in_order(&self) -> Vec<u32> {
        let mut seen = vec![false; self.num_vars()];
        let mut out = Vec::new();
        let atoms = std::iter::once(&self.head).chain(self.body.iter().map(|l| &l.atom));
        for a in atoms {
            for v in a.vars() {
                if !seen[v as usize] {
                    seen[v as usize] = true;
                    out.push(v);
                }
            }
        }
        out
    }
}

/// Precomputed join schedule for one rule.
#[derive(Debug, Clone)]
pub(crate) struct RulePlan {
    /// Body indices of positive literals, in body order.
    pub positives: Vec<usize>,
    /// `neg_after[k]`: negative literals checkable once `k` positives are matched.
    pub neg_after: Vec<Vec<usize>>,
}

impl RulePlan {
    fn new(rule: &Rule) -> Self {
        let positives: Vec<usize> = (0..rule.body.len())
            .filter(|&i| !rule.body[i].negated)
            .collect();
        let mut bound_at = vec![usize::MAX; rule.num_vars()];
        for (k, &bi) in positives.iter().enumerate() {
            for v in rule.body[bi].atom.vars() {
                if bound_at[v as usize] == usize::MAX {
                    bound_at[v as usize] = k + 1;
                }
            }
        }
        let mut neg_after = vec![Vec::new(); positives.len() + 1];
        for (bi, lit) in rule.body.iter().enumerate() {
            if lit.negated {
                let k = lit
                    .atom
                    .vars()
                    .map(|v| bound_at[v as usize])
                    .max()
                    .unwrap_or(0);
                neg_after[k].push(bi);
            }
        }
        RulePlan {
            positives,
            neg_after,
        }
    }
}

/// A safe, stratified Datalog program.
#[derive(Debug, Clone)]
pub struct Program {
    preds: PredTable,
    consts: Interner,
    rules: Vec<Rule>,
    plans: Vec<RulePlan>,
    strata: Vec<u32>,
}

impl Program {
    /// Validates safety and arities, then stratifies.
    pub fn new(preds: PredTable, consts: Interner, rules: Vec<Rule>) -> Result<Self, DatalogError> {
        for rule in &rules {
            check_rule(&preds, &consts, rule)?;
        }
        let strata = stratify(&preds, &rules)?;
        let plans = rules.iter().map(RulePlan::new).collect();
        Ok(Program {
            preds,
            consts,
            rules,
            plans,
            strata,
        })
    }

    /// Builds a program from parsed rules, declaring predicates on first use.
    /// Constants are interned into `consts`.
    pub fn from_ast(rules: &[RuleAst], consts: Interner) -> Result<Self, DatalogError> {
        Self::from_ast_with(PredTable::new(), consts, rules)
    }

    pub fn from_ast_with(
        mut preds: PredTable,
        mut consts: Interner,
        rules: &[RuleAst],
    ) -> Result<Self, DatalogError> {
        let rules = rules
            .iter()
            .map(|r| lower_rule(&mut preds, &mut consts, r))
            .collect::<Result<Vec<_>, _>>()?;
        Self::new(preds, consts, rules)
    }

    /// Parses rule text (no `:-pre` shorthand) into a program.
    pub fn parse(src: &str) -> Result<Self, DatalogError> {
        let rules = syntax::parse_rules(src)?;
        if let Some(r) = rules.iter().find(|r| r.shorthand) {
            return Err(DatalogError::Syntax {
                line: r.line,
                col: 1,
                msg: "`:-pre` rules must be compiled against a planning domain".into(),
            });
        }
        Self::from_ast(&rules, Interner::new())
    }

    pub fn preds(&self) -> &PredTable {
        &self.preds
    }

    pub fn consts(&self) -> &Interner {
        &self.consts
    }

    pub fn rules(&self) -> &[Rule] {
        &self.rules
    }

    /// Stratum of every predicate, indexed by [`PredId`].
    pub fn strata(&self) -> &[u32] {
        &self.strata
    }

    pub fn stratum_of(&self, pred: PredId) -> u32 {
        self.strata[pred as usize]
    }

    pub fn num_strata(&self) -> u32 {
        self.strata.iter().copied().max().map_or(0, |m| m + 1)
    }

    /// Rule indices whose head lies in `stratum`, in program order.
    pub fn rules_in_stratum(&self, stratum: u32) -> impl Iterator<Item = usize> + '_ {
        (0..self.rules.len())
            .filter(move |&i| self.strata[self.rules[i].head.pred as usize] == stratum)
    }

    pub fn is_derived(&self, pred: PredId) -> bool {
        self.rules.iter().any(|r| r.head.pred == pred)
    }

    /// Renders a ground atom with predicate and constant names.
    pub fn atom_string(&self, pred: PredId, tuple: &[Value], objects: Option<&Interner>) -> String {
        let objs = objects.unwrap_or(&self.consts);
        let mut s = self.preds.name(pred).to_string();
        if !tuple.is_empty() {
            s.push('(');
            for (i, v) in tuple.iter().enumerate() {
                if i > 0 {
                    s.push_str(", ");
                }
                if (*v as usize) < objs.len() {
                    s.push_str(objs.name(*v));
                } else {
                    s.push_str(&format!("#{v}"));
                }
            }
            s.push(')');
        }
        s
    }

    pub fn rule_string(&self, rule: usize) -> String {
        RuleDisplay {
            program: self,
            rule: &self.rules[rule],
        }
        .to_string()
    }

    /// Returns a copy with `extra` rules appended (and re-stratified). Existing
    /// predicate and rule ids are preserved.
    pub fn extended(&self, preds: PredTable, extra: Vec<Rule>) -> Result<Self, DatalogError> {
        let mut rules = self.rules.clone();
        rules.extend(extra);
        Program::new(preds, self.consts.clone(), rules)
    }

    /// Replaces the rule list wholesale, keeping constants.
    pub fn with_rules(&self, preds: PredTable, rules: Vec<Rule>) -> Result<Self, DatalogError> {
        Program::new(preds, self.consts.clone(), rules)
    }
}

struct RuleDisplay<'a> {
    program: &'a Program,
    rule: &'a Rule,
}

impl fmt::Display for RuleDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let atom = |f: &mut fmt::Formatter<'_>, a: &Atom| -> fmt::Result {
            f.write_str(self.program.preds.name(a.pred))?;
            if !a.args.is_empty() {
                f.write_str("(")?;
                for (i, t) in a.args.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    match t {
                        Term::Var(v) => f.write_str(&self.rule.var_names[*v as usize])?,
                        Term::Const(c) => f.write_str(self.program.consts.name(*c))?,
                    }
                }
                f.write_str(")")?;
            }
            Ok(())
        };
        atom(f, &self.rule.head)?;
        if !self.rule.body.is_empty() {
            f.write_str(" :-")?;
            for (i, l) in self.rule.body.iter().enumerate() {
                f.write_str(if i == 0 { " " } else { ", " })?;
                if l.negated {
                    f.write_str("not ")?;
                }
                atom(f, &l.atom)?;
            }
        }
        f.write_str(".")
    }
}

fn check_rule(preds: &PredTable, consts: &Interner, rule: &Rule) -> Result<(), DatalogError> {
    let atoms = std::iter::once(&rule.head).chain(rule.body.iter().map(|l| &l.atom));
    for a in atoms {
        let expected = preds.arity(a.pred);
        if expected != a.args.len() {
            return Err(DatalogError::ArityMismatch {
                pred: preds.name(a.pred).to_string(),
                expected,
                found: a.args.len(),
            });
        }
        for v in a.vars() {
            assert!((v as usize) < rule.num_vars(), "variable out of range");
        }
    }
    let mut positive = vec![false; rule.num_vars()];
    for l in rule.body.iter().filter(|l| !l.negated) {
        for v in l.atom.vars() {
            positive[v as usize] = true;
        }
    }
    let unsafe_var = rule
        .head
        .vars()
        .chain(
            rule.body
                .iter()
                .filter(|l| l.negated)
                .flat_map(|l| l.atom.vars()),
        )
        .find(|&v| !positive[v as usize]);
    if let Some(v) = unsafe_var {
        let rendered = render_unchecked(preds, consts, rule);
        return Err(DatalogError::Unsafe {
            rule: rendered,
            var: rule.var_names[v as usize].clone(),
        });
    }
    Ok(())
}

fn render_unchecked(preds: &PredTable, consts: &Interner, rule: &Rule) -> String {
    let term = |t: &Term| match t {
        Term::Var(v) => rule.var_names[*v as usize].clone(),
        Term::Const(c) if (*c as usize) < consts.len() => consts.name(*c).to_string(),
        Term::Const(c) => format!("#{c}"),
    };
    let atom = |a: &Atom| {
        if a.args.is_empty() {
            preds.name(a.pred).to_string()
        } else {
            let args: Vec<String> = a.args.iter().map(term).collect();
            format!("{}({})", preds.name(a.pred), args.join(", "))
        }
    };
    let body: Vec<String> = rule
        .body
        .iter()
        .map(|l| format!("{}{}", if l.negated { "not " } else { "" }, atom(&l.atom)))
        .collect();
    if body.is_empty() {
        format!("{}.", atom(&rule.head))
    } else {
        format!("{} :- {}.", atom(&rule.head), body.join(", "))
    }
}

/// Lowers one parsed rule, declaring predicates and interning constants.
pub fn lower_rule(
    preds: &mut PredTable,
    consts: &mut Interner,
    rule: &RuleAst,
) -> Result<Rule, DatalogError> {
    let mut var_names: Vec<String> = Vec::new();
    let mut lower_atom = |a: &AtomAst, preds: &mut PredTable| -> Result<Atom, DatalogError> {
        let pred = preds.declare(&a.pred, a.args.len())?;
        let args = a
            .args
            .iter()
            .map(|t| match t {
                TermAst::Var(v) => {
                    let idx = match var_names.iter().position(|n| n == v) {
                        Some(i) => i,
                        None => {
                            var_names.push(v.clone());
                            var_names.len() - 1
                        }
                    };
                    Term::Var(idx as u32)
                }
                TermAst::Const(c) => Term::Const(consts.intern(c)),
            })
            .collect();
        Ok(Atom { pred, args })
    };
    let head = lower_atom(&rule.head, preds)?;
    let body = rule
        .body
        .iter()
        .map(|l| {
            Ok(Literal {
                atom: lower_atom(&l.atom, preds)?,
                negated: l.negated,
            })
        })
        .collect::<Result<Vec<_>, DatalogError>>()?;
    Ok(Rule {
        head,
        body,
        var_names,
    })
}

/// Minimal stratification: `str(head) >= str(q)` for positive dependencies and
/// `str(head) > str(q)` across negation. Predicates without rules sit at 0.
pub fn stratify(preds: &PredTable, rules: &[Rule]) -> Result<Vec<u32>, DatalogError> {
    let n = preds.len();
    let mut level = vec![0u32; n];
    // longest-path relaxation; a level beyond n means a negative cycle
    loop {
        let mut changed = false;
        for r in rules {
            let h = r.head.pred as usize;
            for l in &r.body {
                let need = level[l.atom.pred as usize] + u32::from(l.negated);
                if level[h] < need {
                    level[h] = need;
                    changed = true;
                    if need as usize > n {
                        return Err(DatalogError::NotStratifiable {
                            cycle: negative_cycle(preds, rules)
                                .unwrap_or_else(|| vec![preds.name(h as PredId).to_string()]),
                        });
                    }
                }
            }
        }
        if !changed {
            return Ok(level);
        }
    }
}

/// Finds `h -> q ->* h` where `h <- not q`, following body dependencies.
fn negative_cycle(preds: &PredTable, rules: &[Rule]) -> Option<Vec<String>> {
    let n = preds.len();
    let mut deps: Vec<Vec<usize>> = vec![Vec::new(); n];
    for r in rules {
        for l in &r.body {
            deps[r.head.pred as usize].push(l.atom.pred as usize);
        }
    }
    for r in rules {
        let h = r.head.pred as usize;
        for l in r.body.iter().filter(|l| l.negated) {
            let q = l.atom.pred as usize;
            let mut parent = vec![usize::MAX; n];
            let mut queue = std::collections::VecDeque::from([q]);
            parent[q] = q;
            while let Some(u) = queue.pop_front() {
                if u == h {
                    // walk back h -> ... -> q, then emit h, q, ..., h
                    let mut back = vec![h];
                    let mut cur = h;
                    while cur != q {
                        cur = parent[cur];
                        back.push(cur);
                    }
                    let mut cycle = vec![preds.name(h as PredId).to_string()];
                    cycle.extend(
                        back.iter()
                            .rev()
                            .map(|&p| preds.name(p as PredId).to_string()),
                    );
                    return Some(cycle);
                }
                for &w in &deps[u] {
                    if parent[w] == usize::MAX {
                        parent[w] = u;
                        queue.push_back(w);
                    }
                }
            }
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;

    fn strata_of(src: &str) -> Result<Vec<(String, u32)>, DatalogError> {
        let p = Program::parse(src)?;
        let mut v: Vec<(String, u32)> = p
            .preds()
            .ids()
            .map(|id| (p.preds().name(id).to_string(), p.stratum_of(id)))
            .collect();
        v.sort();
        Ok(v)
    }

    #[test]
    fn positive_program_is_single_stratum() {
        let s = strata_of("q(X) :- p(X).").unwrap();
        assert_eq!(s, vec![("p".into(), 0), ("q".into(), 0)]);
    }

    #[test]
    fn existence_guard_lifts_one_stratum() {
        let s = strata_of("r :- not p_exists.\np_exists :- p(X).").unwrap();
        assert_eq!(
            s,
            vec![("p".into(), 0), ("p_exists".into(), 0), ("r".into(), 1)]
        );
    }

    #[test]
    fn negative_self_loop_is_rejected_with_witness() {
        match Program::parse("p :- not p.") {
            Err(DatalogError::NotStratifiable { cycle }) => {
                assert_eq!(cycle, vec!["p".to_string(), "p".to_string()])
            }
            other => panic!("expected stratification error, got {other:?}"),
        }
    }

    #[test]
    fn negative_cycle_through_positive_edge() {
        match Program::parse("a(X) :- d(X), not b(X).\nb(X) :- c(X).\nc(X) :- a(X).") {
            Err(DatalogError::NotStratifiable { cycle }) => {
                assert_eq!(cycle.first(), cycle.last());
                assert!(cycle.contains(&"b".to_string()));
                assert!(cycle.contains(&"c".to_string()));
            }
            other => panic!("expected stratification error, got {other:?}"),
        }
    }

    #[test]
    fn unsafe_rules_are_rejected() {
        assert!(matches!(
            Program::parse("p(X) :- q(Y)."),
            Err(DatalogError::Unsafe { .. })
        ));
        assert!(matches!(
            Program::parse("p(X) :- q(X), not r(Y)."),
            Err(DatalogError::Unsafe { .. })
        ));
        assert!(Program::parse("p(a).").is_ok());
    }

    #[test]
    fn arity_mismatch_is_rejected() {
        assert!(matches!(
            Program::parse("p(X) :- q(X).\nr(X) :- q(X, X)."),
            Err(DatalogError::ArityMismatch { .. })
        ));
    }

    #[test]
    fn rule_string_round_trips() {
        let src = "t(X, Z) :- e(X, Y), t(Y, Z), not blocked(Y).";
        let p = Program::parse(src).unwrap();
        assert_eq!(p.rule_string(0), src);
    }
}
