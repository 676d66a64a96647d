//! Shared helpers: random stratified programs and the gradient check.
#![allow(dead_code)]

use std::collections::BTreeSet;

use bkplan::bk::ShippedDomain;
use bkplan::datalog::syntax::parse_rules;
use bkplan::datalog::{FactSet, Interner, Program};
use bkplan::explorer::{label_dataset, Dataset};
use bkplan::generators::{generate, train_sizes};
use bkplan::lrnn::{build_extension, loss_and_grad, prepare, ParamStore, TrainItem};
use bkplan::planning::{Problem, Task};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const CONSTANTS: u32 = 8;

const EDB: [(&str, usize); 3] = [("e0", 1), ("e1", 2), ("e2", 2)];
const IDB: [(&str, usize); 6] = [
    ("d0", 1),
    ("d1", 2),
    ("d2", 0),
    ("d3", 1),
    ("d4", 2),
    ("d5", 1),
];
const VARS: [&str; 3] = ["X", "Y", "Z"];

/// Program text and input facts (as names) for one random case.
#[derive(Debug, Clone)]
pub struct Case {
    pub rules: Vec<String>,
    pub facts: Vec<(String, Vec<u32>)>,
}

fn term(rng: &mut ChaCha8Rng, pool: &[&str]) -> String {
    if pool.is_empty() || rng.gen_bool(0.15) {
        format!("c{}", rng.gen_range(0..CONSTANTS))
    } else {
        pool.choose(rng).unwrap().to_string()
    }
}

fn atom(name: &str, args: &[String]) -> String {
    if args.is_empty() {
        name.to_string()
    } else {
        format!("{name}({})", args.join(", "))
    }
}

/// IDB predicate `i` may use any EDB predicate and `d_j` for `j <= i`
/// positively, `j < i` negatively, so every program is stratified.
fn rule(rng: &mut ChaCha8Rng, negation: bool) -> String {
    let hi = rng.gen_range(0..IDB.len());
    let (head, head_arity) = IDB[hi];
    let mut bound: Vec<&str> = Vec::new();
    let mut body = Vec::new();
    for _ in 0..rng.gen_range(1..=3) {
        let (name, arity) = if rng.gen_bool(0.5) {
            *EDB.choose(rng).unwrap()
        } else {
            IDB[rng.gen_range(0..=hi)]
        };
        let args: Vec<String> = (0..arity).map(|_| term(rng, &VARS)).collect();
        for a in &args {
            if let Some(v) = VARS.iter().find(|v| **v == a) {
                if !bound.contains(v) {
                    bound.push(v);
                }
            }
        }
        body.push(atom(name, &args));
    }
    if negation && rng.gen_bool(0.5) {
        let (name, arity) = if hi > 0 && rng.gen_bool(0.6) {
            IDB[rng.gen_range(0..hi)]
        } else {
            *EDB.choose(rng).unwrap()
        };
        let args: Vec<String> = (0..arity).map(|_| term(rng, &bound)).collect();
        body.push(format!("not {}", atom(name, &args)));
    }
    let head_args: Vec<String> = (0..head_arity).map(|_| term(rng, &bound)).collect();
    format!("{} :- {}.", atom(head, &head_args), body.join(", "))
}

pub fn random_case(seed: u64, negation: bool) -> Case {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rules = (0..rng.gen_range(1..=10))
        .map(|_| rule(&mut rng, negation))
        .collect();
    let mut facts = Vec::new();
    for _ in 0..rng.gen_range(0..=16) {
        let (name, arity) = *EDB.choose(&mut rng).unwrap();
        facts.push((
            name.to_string(),
            (0..arity).map(|_| rng.gen_range(0..CONSTANTS)).collect(),
        ));
    }
    Case { rules, facts }
}

impl Case {
    /// Constants `c0..c7` are values `0..7` whatever the rule order.
    pub fn program(&self) -> Program {
        let mut consts = Interner::new();
        for i in 0..CONSTANTS {
            consts.intern(&format!("c{i}"));
        }
        let ast = parse_rules(&self.rules.join("\n")).expect("generated rules parse");
        Program::from_ast(&ast, consts).expect("generated rules are safe and stratified")
    }

    /// Input facts over predicates the program knows.
    pub fn facts_for(&self, p: &Program) -> FactSet {
        self.facts_where(p, |_| true)
    }

    pub fn facts_where(&self, p: &Program, keep: impl Fn(usize) -> bool) -> FactSet {
        let mut fs = FactSet::new();
        for (i, (name, t)) in self.facts.iter().enumerate() {
            if let Some(pred) = p.preds().get(name) {
                if keep(i) {
                    fs.insert(pred, t);
                }
            }
        }
        fs
    }
}

/// A model as `(predicate name, tuple)` pairs, for comparing programs whose
/// predicate ids differ.
pub fn named(p: &Program, m: &FactSet) -> BTreeSet<(String, Vec<u32>)> {
    m.iter()
        .map(|(pred, t)| (p.preds().name(pred).to_string(), t.to_vec()))
        .collect()
}

pub fn dataset(d: ShippedDomain, tasks: usize) -> Dataset {
    let ts: Vec<(Problem, Task)> = generate(d, &train_sizes(d), tasks, 17)
        .into_iter()
        .map(|p| {
            let t = Task::new(d.domain(), &p).unwrap();
            (p, t)
        })
        .collect();
    label_dataset(&d.domain(), &ts, 10_000)
}

/// Items holding exactly `n` samples in total.
pub fn take_samples(items: &[TrainItem], n: usize) -> Vec<TrainItem> {
    let mut out = Vec::new();
    let mut left = n;
    for it in items {
        if left == 0 {
            break;
        }
        let mut it = it.clone();
        it.targets.truncate(left);
        left -= it.targets.len();
        out.push(it);
    }
    assert_eq!(left, 0);
    out
}

pub fn max_rel_error(analytic: &[f64], numeric: &[f64]) -> f64 {
    analytic
        .iter()
        .zip(numeric)
        .map(|(&a, &n)| {
            let scale = a.abs().max(n.abs());
            if scale < 1e-7 {
                0.0
            } else {
                (a - n).abs() / scale
            }
        })
        .fold(0.0, f64::max)
}

/// Largest relative error between the analytic gradient and central
/// differences (step 1e-4) at H=4, L=1 on ten samples.
pub fn gradient_check(d: ShippedDomain) -> f64 {
    let bk = d.compiled();
    let ext = build_extension(&bk, 1).unwrap();
    let data = dataset(d, 1);
    let prepared = prepare(&ext, &data, Some(40), 3).unwrap();
    let items = take_samples(&prepared.items, 10);
    let refs: Vec<&TrainItem> = items.iter().collect();
    let params = ParamStore::init(&ext, 4, 5);
    let (_, grad) = loss_and_grad(&params, &refs).unwrap();
    let eps = 1e-4;
    let mut numeric = vec![0.0; params.len()];
    let mut p = params.clone();
    for i in 0..params.len() {
        let x = params.data[i];
        p.data[i] = x + eps;
        let (lp, _) = loss_and_grad(&p, &refs).unwrap();
        p.data[i] = x - eps;
        let (lm, _) = loss_and_grad(&p, &refs).unwrap();
        p.data[i] = x;
        numeric[i] = (lp - lm) / (2.0 * eps);
    }
    assert!(grad.data.iter().any(|&g| g != 0.0));
    max_rel_error(&grad.data, &numeric)
}
