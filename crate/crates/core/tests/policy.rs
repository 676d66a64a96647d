use std::sync::Arc;

use bkplan::bk::{bk_applicable, compile_shorthand, ShippedDomain};
use bkplan::explorer::{expand, forward_distance, oracle_distances};
use bkplan::generators::{all_configurations, blocksworld_problem};
use bkplan::planning::{Fact, Task};
use bkplan::policy::{
    check_properties, encode_goal, execute_greedy, execute_sampling, induced_policy, BoundPolicy,
    PolicyError, PolicyOutput, Roots,
};

const SWAP: &str = "(define (problem swap) (:domain blocksworld)
  (:objects a b)
  (:init (on a b) (on_table b) (clear a) (arm_empty))
  (:goal (and (on b a) (on_table a))))";

fn bw() -> Arc<bkplan::planning::Domain> {
    ShippedDomain::Blocksworld.domain()
}

#[test]
fn goal_encoding_cases() {
    let d = bw();
    let bk = ShippedDomain::Blocksworld.compiled();
    let task = Task::parse(
        d.clone(),
        "(define (problem p) (:domain blocksworld) (:objects a b)
           (:init (on a b) (clear a)) (:goal (and (on a b) (on_table b))))",
    )
    .unwrap();
    let facts = encode_goal(&bk, &task, task.initial_state()).unwrap();
    let names: Vec<String> = facts
        .sorted()
        .into_iter()
        .map(|(p, t)| bk.program.atom_string(p, &t, None))
        .filter(|s| !s.starts_with("type_"))
        .collect();
    let mut names = names;
    names.sort();
    // constants have no names in the program; check by predicate only
    let preds: Vec<&str> = names.iter().map(|s| s.split('(').next().unwrap()).collect();
    assert_eq!(preds, ["clear_aa", "on_ag", "on_table_ug"]);
}

#[test]
fn gn1_on_two_block_swap() {
    let d = bw();
    let bk = ShippedDomain::Blocksworld.compiled();
    let task = Task::parse(d, SWAP).unwrap();
    let out = induced_policy(&bk, &task, task.initial_state()).unwrap();
    let names: Vec<String> = out.actions.iter().map(|&a| task.action_string(a)).collect();
    assert_eq!(names, ["(unstack a b)"]);

    let policy = BoundPolicy::new(&bk, &task).unwrap();
    for seed in 0..10 {
        let t = execute_sampling(&policy, seed, 100).unwrap();
        assert_eq!(t.len(), 4);
        assert_eq!(t.states.len(), 5);
    }

    let space = expand(&task, 10_000).unwrap();
    let dist = oracle_distances(&space);
    assert_eq!(dist[0], Some(4));
    assert_eq!(forward_distance(&space, 0), Some(4));
}

#[test]
fn two_block_space_matches_enumeration() {
    // arm empty: every configuration; holding one block: configurations of the rest
    let expected = all_configurations(2).len() + 2 * all_configurations(1).len();
    let task = Task::parse(bw(), SWAP).unwrap();
    let space = expand(&task, 10_000).unwrap();
    assert_eq!(space.len(), expected);
    assert_eq!(task.actions().len(), 12);
}

#[test]
fn goal_initial_task() {
    let task = Task::parse(
        bw(),
        "(define (problem g) (:domain blocksworld) (:objects a)
           (:init (on_table a) (clear a) (arm_empty)) (:goal (and (on_table a))))",
    )
    .unwrap();
    let space = expand(&task, 10).unwrap();
    assert_eq!(space.len(), 3.min(space.len()));
    assert_eq!(oracle_distances(&space)[0], Some(0));
    let bk = ShippedDomain::Blocksworld.compiled();
    let policy = BoundPolicy::new(&bk, &task).unwrap();
    assert!(execute_sampling(&policy, 1, 5).unwrap().is_empty());
}

#[test]
fn budget_is_enforced() {
    let p = blocksworld_problem(
        "big",
        &vec![None; 6],
        &(0..6)
            .map(|i| if i == 0 { None } else { Some(i - 1) })
            .collect::<Vec<_>>(),
    );
    let task = Task::new(bw(), &p).unwrap();
    assert!(expand(&task, 100).is_err());
}

#[test]
fn baseline_returns_applicable_actions() {
    for d in ShippedDomain::ALL {
        let bk = d.baseline();
        let problems = bkplan::generators::generate(d, &bkplan::generators::train_sizes(d), 1, 3);
        for p in problems {
            let task = Task::new(d.domain(), &p).unwrap();
            let space = expand(&task, 10_000).unwrap();
            let policy = BoundPolicy::new(&bk, &task).unwrap();
            for s in space.states.iter().take(200) {
                assert_eq!(policy.sigma(s).unwrap(), task.applicable(s));
            }
        }
    }
}

#[test]
fn shipped_policies_stay_within_applicable_actions() {
    for d in ShippedDomain::ALL {
        let bk = d.compiled();
        let problems = bkplan::generators::generate(d, &bkplan::generators::train_sizes(d), 2, 5);
        for p in problems {
            let task = Task::new(d.domain(), &p).unwrap();
            let space = expand(&task, 10_000).unwrap();
            let policy = BoundPolicy::new(&bk, &task).unwrap();
            for (i, s) in space.states.iter().enumerate() {
                if space.goal[i] {
                    continue;
                }
                let app = task.applicable(s);
                for a in policy.sigma(s).unwrap() {
                    assert!(app.contains(&a), "{} not applicable", task.action_string(a));
                }
            }
        }
    }
}

#[test]
fn baseline_blocksworld_has_a_cycle() {
    let d = bw();
    let bk = compile_shorthand(&bk_applicable(&d), d.clone()).unwrap();
    let task = Task::parse(d, SWAP).unwrap();
    let space = expand(&task, 10_000).unwrap();
    let dist = oracle_distances(&space);
    let policy = BoundPolicy::new(&bk, &task).unwrap();
    let [p1, p2, _] = check_properties(&policy, &space, &dist, Roots::Initial).unwrap();
    assert!(p1.holds);
    assert!(!p2.holds);
    let w = &p2.witnesses[0];
    assert!(w.detail.starts_with("cycle: "), "{}", w.detail);
    // the initial state can put a back right after unstacking it
    let cycle: Vec<&str> = w.detail["cycle: ".len()..].split("; ").collect();
    assert_eq!(cycle.len(), 2, "{} @ {}", w.detail, w.state);
}

#[test]
fn gn1_holds_on_all_three_block_tasks() {
    let d = bw();
    let bk = ShippedDomain::Blocksworld.compiled();
    let configs = all_configurations(3);
    for (i, init) in configs.iter().enumerate() {
        for goal in configs.iter().skip(i).step_by(4) {
            let p = blocksworld_problem("t", init, goal);
            let task = Task::new(d.clone(), &p).unwrap();
            let space = expand(&task, 10_000).unwrap();
            let dist = oracle_distances(&space);
            let policy = BoundPolicy::new(&bk, &task).unwrap();
            let reports = check_properties(&policy, &space, &dist, Roots::All).unwrap();
            for r in &reports {
                assert!(r.holds, "P{} fails: {:?}", r.property, r.witnesses.first());
            }
        }
    }
}

#[test]
fn greedy_tie_break_follows_canonical_order() {
    let bk = ShippedDomain::Blocksworld.baseline();
    let p = blocksworld_problem("t", &vec![None, None, None], &vec![Some(1), Some(2), None]);
    let task = Task::new(bw(), &p).unwrap();
    let policy = BoundPolicy::new(&bk, &task).unwrap();
    let constant = |_: &BoundPolicy<'_>,
                    _: &bkplan::planning::State,
                    o: &PolicyOutput|
     -> Result<Vec<f64>, PolicyError> { Ok(vec![0.0; o.actions.len()]) };
    let err = execute_greedy(&policy, &constant, 0, 6).unwrap_err();
    assert_eq!(err, PolicyError::StepCap { cap: 6 });
    // picks the first applicable action: pickup b1, then putdown b1, and so on
    let first = task.applicable(task.initial_state())[0];
    assert_eq!(task.action_string(first), "(pickup b1)");

    let reverse = |_: &BoundPolicy<'_>,
                   _: &bkplan::planning::State,
                   o: &PolicyOutput|
     -> Result<Vec<f64>, PolicyError> {
        Ok(o.actions.iter().map(|&a| -(a as f64)).collect())
    };
    let t = execute_greedy(&policy, &reverse, 0, 10).unwrap_err();
    assert_eq!(t, PolicyError::StepCap { cap: 10 });
}

#[test]
fn sampling_is_reproducible() {
    let bk = ShippedDomain::Blocksworld.baseline();
    let p = blocksworld_problem(
        "t",
        &vec![None, Some(0), Some(1)],
        &vec![Some(1), Some(2), None],
    );
    let task = Task::new(bw(), &p).unwrap();
    let policy = BoundPolicy::new(&bk, &task).unwrap();
    let a = execute_sampling(&policy, 42, 10_000).unwrap();
    let b = execute_sampling(&policy, 42, 10_000).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.plan_text(&task), b.plan_text(&task));
}

#[test]
fn empty_policy_is_reported() {
    let d = bw();
    let src = bkplan::bk::BkSource::parse("blocksworld", "").unwrap();
    let bk = compile_shorthand(&src, d.clone()).unwrap();
    let task = Task::parse(d, SWAP).unwrap();
    let policy = BoundPolicy::new(&bk, &task).unwrap();
    assert!(matches!(
        execute_sampling(&policy, 0, 10),
        Err(PolicyError::EmptyPolicy { .. })
    ));
    let space = expand(&task, 100).unwrap();
    let dist = oracle_distances(&space);
    let [p1, _, _] = check_properties(&policy, &space, &dist, Roots::Initial).unwrap();
    assert!(!p1.holds);
    assert_eq!(p1.violations, 1);
}

#[test]
fn satellite_policy_loses_optimal_plans_somewhere() {
    let d = ShippedDomain::Satellite;
    let bk = d.compiled();
    let mut violations = 0;
    let mut coverage = 0;
    for p in bkplan::generators::generate(d, &bkplan::generators::train_sizes(d), 6, 11) {
        let task = Task::new(d.domain(), &p).unwrap();
        let space = expand(&task, 10_000).unwrap();
        let dist = oracle_distances(&space);
        let policy = BoundPolicy::new(&bk, &task).unwrap();
        let [p1, p2, p3] = check_properties(&policy, &space, &dist, Roots::Initial).unwrap();
        assert!(p1.holds, "{}: {:?}", p.name, p1.witnesses.first());
        assert!(p2.holds, "{}: {:?}", p.name, p2.witnesses.first());
        violations += p3.violations;
        coverage += p3.coverage;
    }
    assert!(
        violations > 0 && violations < coverage,
        "{violations}/{coverage}"
    );
}

#[test]
fn ferry_policy_properties() {
    let d = ShippedDomain::Ferry;
    let bk = d.compiled();
    for p in bkplan::generators::generate(d, &bkplan::generators::train_sizes(d), 4, 2) {
        let task = Task::new(d.domain(), &p).unwrap();
        let space = expand(&task, 10_000).unwrap();
        let dist = oracle_distances(&space);
        let policy = BoundPolicy::new(&bk, &task).unwrap();
        let [p1, p2, _] = check_properties(&policy, &space, &dist, Roots::Initial).unwrap();
        assert!(p1.holds, "{}: {:?}", p.name, p1.witnesses.first());
        assert!(p2.holds, "{}: {:?}", p.name, p2.witnesses.first());
    }
}

#[test]
fn fact_display() {
    assert_eq!(Fact::new("on", &["a", "b"]).to_string(), "(on a b)");
}
