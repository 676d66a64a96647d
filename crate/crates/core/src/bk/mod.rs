//! Background-knowledge policies: the `:-pre` shorthand compiler and the
//! shipped rule files.
//!
//! A compiled program reads goal-annotated state atoms (`p_ag`, `p_ug`,
//! `p_aa`) plus unary typing facts `type_<t>(o)`, and derives action atoms
//! whose predicates are the domain's schema names.

use std::collections::BTreeSet;
use std::sync::Arc;

use thiserror::Error;

use crate::datalog::syntax::{parse_rules, AtomAst, LiteralAst, RuleAst, TermAst};
use crate::datalog::{lower_rule, DatalogError, Interner, PredId, PredTable, Program};
use crate::planning::{Domain, Task, Term, OBJECT};

pub const BLOCKSWORLD_DOMAIN: &str = include_str!("../../domains/blocksworld.pddl");
pub const FERRY_DOMAIN: &str = include_str!("../../domains/ferry.pddl");
pub const SATELLITE_DOMAIN: &str = include_str!("../../domains/satellite.pddl");
pub const BLOCKSWORLD_BK: &str = include_str!("../../bk/blocksworld.dl");
pub const FERRY_BK: &str = include_str!("../../bk/ferry.dl");
pub const SATELLITE_BK: &str = include_str!("../../bk/satellite.dl");

const EXISTS_SUFFIX: &str = "_exists";

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BkError {
    #[error(transparent)]
    Datalog(#[from] DatalogError),
    #[error("line {line}: `{name}` is not an action schema of the domain")]
    UnknownSchema { name: String, line: usize },
    #[error("line {line}: schema `{name}` has {expected} parameters, rule head has {found}")]
    SchemaArity {
        name: String,
        expected: usize,
        found: usize,
        line: usize,
    },
    #[error("line {line}: unknown predicate `{name}`")]
    UnknownPredicate { name: String, line: usize },
    #[error("line {line}: constant `{name}` is not a domain constant")]
    UnknownConstant { name: String, line: usize },
    #[error("task `{task}` does not fix the position of block `{block}`")]
    PartialGoal { task: String, block: String },
}

/// Rule text bound to a domain, before expansion.
#[derive(Debug, Clone, PartialEq)]
pub struct BkSource {
    pub domain: String,
    pub rules: Vec<RuleAst>,
    /// Every object must have a goal placement (`on` or `on_table`).
    pub requires_full_goals: bool,
}

impl BkSource {
    pub fn parse(domain: &str, text: &str) -> Result<BkSource, BkError> {
        Ok(BkSource {
            domain: domain.to_string(),
            rules: parse_rules(text)?,
            requires_full_goals: false,
        })
    }
}

/// Where a compiled rule came from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Origin {
    Source {
        index: usize,
        label: Option<String>,
        shorthand: bool,
    },
    Bridging {
        pred: String,
    },
    Existence {
        pred: String,
    },
}

/// Predicate ids of the program's inputs and outputs.
#[derive(Debug, Clone)]
pub struct Encoding {
    /// Indexed by domain predicate.
    pub base: Vec<PredId>,
    pub ag: Vec<PredId>,
    pub ug: Vec<PredId>,
    pub aa: Vec<PredId>,
    /// Indexed by domain type.
    pub types: Vec<PredId>,
    /// Indexed by action schema.
    pub actions: Vec<PredId>,
}

impl Encoding {
    /// All input predicates: ag/ug/aa variants and typing predicates.
    pub fn inputs(&self) -> Vec<PredId> {
        let mut v: Vec<PredId> = self
            .ag
            .iter()
            .chain(&self.ug)
            .chain(&self.aa)
            .chain(&self.types)
            .copied()
            .collect();
        v.sort_unstable();
        v
    }

    pub fn schema_of(&self, pred: PredId) -> Option<usize> {
        self.actions.iter().position(|&p| p == pred)
    }
}

#[derive(Debug, Clone)]
pub struct CompiledBk {
    pub program: Program,
    pub encoding: Encoding,
    pub provenance: Vec<Origin>,
    pub domain: Arc<Domain>,
    pub requires_full_goals: bool,
}

impl CompiledBk {
    /// Rejects tasks the policy was not written for.
    pub fn check_task(&self, task: &Task) -> Result<(), BkError> {
        if !self.requires_full_goals {
            return Ok(());
        }
        let d = task.domain();
        let placed: BTreeSet<u32> = task
            .goal()
            .iter()
            .map(|&g| task.atom(g))
            .filter(|a| {
                let name = &d.predicates[a.pred as usize].name;
                name == "on" || name == "on_table"
            })
            .map(|a| a.args[0])
            .collect();
        for o in 0..task.objects().len() as u32 {
            if !placed.contains(&o) {
                return Err(BkError::PartialGoal {
                    task: task.name().to_string(),
                    block: task.object_name(o).to_string(),
                });
            }
        }
        Ok(())
    }

    pub fn rule_origin(&self, rule: usize) -> &Origin {
        &self.provenance[rule]
    }
}

pub fn ag_name(p: &str) -> String {
    format!("{p}_ag")
}

pub fn ug_name(p: &str) -> String {
    format!("{p}_ug")
}

pub fn aa_name(p: &str) -> String {
    format!("{p}_aa")
}

pub fn type_name(t: &str) -> String {
    format!("type_{t}")
}

fn var(name: impl Into<String>) -> TermAst {
    TermAst::Var(name.into())
}

fn fresh_vars(n: usize) -> Vec<TermAst> {
    (1..=n).map(|i| var(format!("X{i}"))).collect()
}

/// Expands `:-pre` rules, adds bridging and existence rules, stratifies.
pub fn compile_shorthand(src: &BkSource, domain: Arc<Domain>) -> Result<CompiledBk, BkError> {
    let d = &*domain;
    let mut preds = PredTable::new();
    let mut enc = Encoding {
        base: Vec::new(),
        ag: Vec::new(),
        ug: Vec::new(),
        aa: Vec::new(),
        types: Vec::new(),
        actions: Vec::new(),
    };
    for p in &d.predicates {
        let n = p.arity();
        enc.base.push(preds.declare(&p.name, n)?);
        enc.ag.push(preds.declare(&ag_name(&p.name), n)?);
        enc.ug.push(preds.declare(&ug_name(&p.name), n)?);
        enc.aa.push(preds.declare(&aa_name(&p.name), n)?);
    }
    for t in 0..d.types.len() as u32 {
        enc.types
            .push(preds.declare(&type_name(d.types.name(t)), 1)?);
    }
    for a in &d.actions {
        enc.actions.push(preds.declare(&a.name, a.params.len())?);
    }

    let mut consts = Interner::new();
    for (c, _) in &d.constants {
        consts.intern(c);
    }

    let mut rules: Vec<RuleAst> = Vec::new();
    let mut provenance = Vec::new();
    for (index, r) in src.rules.iter().enumerate() {
        let mut rule = r.clone();
        if r.shorthand {
            let schema = d
                .action(&r.head.pred)
                .ok_or_else(|| BkError::UnknownSchema {
                    name: r.head.pred.clone(),
                    line: r.line,
                })?;
            if schema.params.len() != r.head.args.len() {
                return Err(BkError::SchemaArity {
                    name: schema.name.clone(),
                    expected: schema.params.len(),
                    found: r.head.args.len(),
                    line: r.line,
                });
            }
            let term = |t: &Term| match *t {
                Term::Param(i) => r.head.args[i as usize].clone(),
                Term::Const(c) => TermAst::Const(d.constants[c as usize].0.clone()),
            };
            let atom = |a: &crate::planning::SchemaAtom| {
                AtomAst::new(
                    d.predicates[a.pred as usize].name.clone(),
                    a.args.iter().map(term).collect(),
                )
            };
            rule.body
                .extend(schema.pre.iter().map(|a| LiteralAst::pos(atom(a))));
            rule.body
                .extend(schema.neg_pre.iter().map(|a| LiteralAst::neg(atom(a))));
            for (i, (_, t)) in schema.params.iter().enumerate() {
                if *t != OBJECT {
                    rule.body.push(LiteralAst::pos(AtomAst::new(
                        type_name(d.types.name(*t)),
                        vec![r.head.args[i].clone()],
                    )));
                }
            }
            rule.shorthand = false;
        }
        rules.push(rule);
        provenance.push(Origin::Source {
            index,
            label: r.label.clone(),
            shorthand: r.shorthand,
        });
    }

    for p in &d.predicates {
        let args = fresh_vars(p.arity());
        for tagged in [ag_name(&p.name), aa_name(&p.name)] {
            rules.push(RuleAst::new(
                AtomAst::new(p.name.clone(), args.clone()),
                vec![LiteralAst::pos(AtomAst::new(tagged, args.clone()))],
            ));
            provenance.push(Origin::Bridging {
                pred: p.name.clone(),
            });
        }
    }

    // names a rule body may mention
    let mut known: BTreeSet<String> = BTreeSet::new();
    for id in preds.ids() {
        known.insert(preds.name(id).to_string());
    }
    for r in &rules {
        known.insert(r.head.pred.clone());
    }
    let mut wanted_exists: BTreeSet<String> = BTreeSet::new();
    for r in &src.rules {
        for l in &r.body {
            let name = &l.atom.pred;
            if known.contains(name) {
                continue;
            }
            match name.strip_suffix(EXISTS_SUFFIX) {
                Some(stem) if known.contains(stem) && l.atom.args.is_empty() => {
                    wanted_exists.insert(name.clone());
                }
                _ => {
                    return Err(BkError::UnknownPredicate {
                        name: name.clone(),
                        line: r.line,
                    })
                }
            }
        }
        for l in r.body.iter().map(|l| &l.atom).chain([&r.head]) {
            for t in &l.args {
                if let TermAst::Const(c) = t {
                    if consts.get(c).is_none() {
                        return Err(BkError::UnknownConstant {
                            name: c.clone(),
                            line: r.line,
                        });
                    }
                }
            }
        }
    }

    // arities of user-derived predicates are only known after lowering
    let mut lowered = Vec::with_capacity(rules.len());
    for r in &rules {
        lowered.push(lower_rule(&mut preds, &mut consts, r)?);
    }
    for name in wanted_exists {
        let stem = &name[..name.len() - EXISTS_SUFFIX.len()];
        let arity = preds.arity(preds.get(stem).expect("stem is known"));
        let r = RuleAst::new(
            AtomAst::new(name.clone(), vec![]),
            vec![LiteralAst::pos(AtomAst::new(stem, fresh_vars(arity)))],
        );
        lowered.push(lower_rule(&mut preds, &mut consts, &r)?);
        provenance.push(Origin::Existence {
            pred: stem.to_string(),
        });
    }

    let program = Program::new(preds, consts, lowered)?;
    Ok(CompiledBk {
        program,
        encoding: enc,
        provenance,
        domain,
        requires_full_goals: src.requires_full_goals,
    })
}

/// The policy returning every applicable action: one `a(X1..Xn) :-pre.`
/// per schema.
pub fn bk_applicable(domain: &Domain) -> BkSource {
    let rules = domain
        .actions
        .iter()
        .map(|a| {
            let mut r = RuleAst::new(
                AtomAst::new(a.name.clone(), fresh_vars(a.params.len())),
                vec![],
            );
            r.shorthand = true;
            r
        })
        .collect();
    BkSource {
        domain: domain.name.clone(),
        rules,
        requires_full_goals: false,
    }
}

pub fn bk_blocksworld() -> BkSource {
    let mut s = BkSource::parse("blocksworld", BLOCKSWORLD_BK).expect("shipped rules parse");
    s.requires_full_goals = true;
    s
}

pub fn bk_satellite() -> BkSource {
    BkSource::parse("satellite", SATELLITE_BK).expect("shipped rules parse")
}

pub fn bk_ferry() -> BkSource {
    BkSource::parse("ferry", FERRY_BK).expect("shipped rules parse")
}

/// The three shipped domains.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ShippedDomain {
    Blocksworld,
    Ferry,
    Satellite,
}

impl ShippedDomain {
    pub const ALL: [ShippedDomain; 3] = [
        ShippedDomain::Blocksworld,
        ShippedDomain::Ferry,
        ShippedDomain::Satellite,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ShippedDomain::Blocksworld => "blocksworld",
            ShippedDomain::Ferry => "ferry",
            ShippedDomain::Satellite => "satellite",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|d| d.name() == name)
    }

    pub fn domain_text(self) -> &'static str {
        match self {
            ShippedDomain::Blocksworld => BLOCKSWORLD_DOMAIN,
            ShippedDomain::Ferry => FERRY_DOMAIN,
            ShippedDomain::Satellite => SATELLITE_DOMAIN,
        }
    }

    pub fn domain(self) -> Arc<Domain> {
        Arc::new(Domain::parse(self.domain_text()).expect("shipped domain parses"))
    }

    pub fn source(self) -> BkSource {
        match self {
            ShippedDomain::Blocksworld => bk_blocksworld(),
            ShippedDomain::Ferry => bk_ferry(),
            ShippedDomain::Satellite => bk_satellite(),
        }
    }

    /// The domain's policy, compiled against its domain.
    pub fn compiled(self) -> CompiledBk {
        compile_shorthand(&self.source(), self.domain()).expect("shipped policy compiles")
    }

    /// The applicable-actions baseline for the domain.
    pub fn baseline(self) -> CompiledBk {
        let d = self.domain();
        compile_shorthand(&bk_applicable(&d), d).expect("baseline compiles")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shipped_policies_compile() {
        for d in ShippedDomain::ALL {
            let c = d.compiled();
            assert!(c.program.num_strata() >= 1, "{}", d.name());
            d.baseline();
        }
    }

    #[test]
    fn unstack_rule_gains_preconditions() {
        let c = ShippedDomain::Blocksworld.compiled();
        let i = c
            .provenance
            .iter()
            .position(|o| matches!(o, Origin::Source { label: Some(l), .. } if l == "B1"))
            .unwrap();
        assert_eq!(
            c.program.rule_string(i),
            "unstack(A, B) :- not well_placed(A), on(A, B), clear(A), arm_empty."
        );
    }

    #[test]
    fn existence_rules_are_added_once() {
        let c = ShippedDomain::Satellite.compiled();
        let mut ex: Vec<String> = c
            .provenance
            .iter()
            .enumerate()
            .filter(|(_, o)| matches!(o, Origin::Existence { .. }))
            .map(|(i, _)| c.program.rule_string(i))
            .collect();
        ex.sort();
        assert_eq!(
            ex,
            [
                "calibrate_exists :- calibrate(X1, X2, X3).",
                "have_image_ug_exists :- have_image_ug(X1, X2).",
                "take_image_exists :- take_image(X1, X2, X3, X4).",
            ]
        );
    }

    #[test]
    fn empty_source_yields_bridging_only() {
        let d = ShippedDomain::Blocksworld.domain();
        let src = BkSource::parse("blocksworld", "").unwrap();
        let c = compile_shorthand(&src, d.clone()).unwrap();
        assert_eq!(c.program.rules().len(), 2 * d.predicates.len());
        assert!(c
            .provenance
            .iter()
            .all(|o| matches!(o, Origin::Bridging { .. })));
    }

    #[test]
    fn unknown_names_are_rejected() {
        let d = ShippedDomain::Blocksworld.domain();
        let src = BkSource::parse("blocksworld", "fly(A) :-pre clear(A).").unwrap();
        assert!(matches!(
            compile_shorthand(&src, d.clone()),
            Err(BkError::UnknownSchema { .. })
        ));
        let src = BkSource::parse("blocksworld", "pickup(A) :-pre clar(A).").unwrap();
        assert!(matches!(
            compile_shorthand(&src, d.clone()),
            Err(BkError::UnknownPredicate { .. })
        ));
        let src = BkSource::parse("blocksworld", "pickup(A, B) :-pre clear(A).").unwrap();
        assert!(matches!(
            compile_shorthand(&src, d),
            Err(BkError::SchemaArity { .. })
        ));
    }

    #[test]
    fn typed_parameters_get_typing_atoms() {
        let c = ShippedDomain::Ferry.compiled();
        let s = c.program.rule_string(1);
        assert_eq!(
            s,
            "debark(C, L) :- at_ug(C, L), on(C), at_ferry(L), type_car(C), type_location(L)."
        );
    }
}
