mod common;

use bkplan::bk::ShippedDomain;
use bkplan::datalog::naive::evaluate_naive;
use bkplan::explorer::expand;
use bkplan::generators::{generate, train_sizes};
use bkplan::planning::Task;
use bkplan::policy::BoundPolicy;
use common::{named, random_case};
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn semi_naive_matches_naive(seed in any::<u64>()) {
        let case = random_case(seed, true);
        let p = case.program();
        let input = case.facts_for(&p);
        let fast = p.canonical_model(&input).unwrap();
        let slow = evaluate_naive(&p, &input).unwrap();
        prop_assert_eq!(fast, slow, "{}", case.rules.join("\n"));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn model_contains_input_and_is_a_fixpoint(seed in any::<u64>()) {
        let case = random_case(seed, true);
        let p = case.program();
        let input = case.facts_for(&p);
        let m = p.canonical_model(&input).unwrap();
        prop_assert!(input.is_subset(&m));
        prop_assert_eq!(p.canonical_model(&m).unwrap(), m);
    }

    #[test]
    fn positive_programs_are_monotone(seed in any::<u64>(), mask in any::<u32>()) {
        let case = random_case(seed, false);
        let p = case.program();
        let small = case.facts_where(&p, |i| mask >> (i % 32) & 1 == 1);
        let large = case.facts_for(&p);
        let ms = p.canonical_model(&small).unwrap();
        let ml = p.canonical_model(&large).unwrap();
        prop_assert!(ms.is_subset(&ml));
    }

    #[test]
    fn rule_order_does_not_matter(seed in any::<u64>(), perm in any::<u64>()) {
        let case = random_case(seed, true);
        let mut shuffled = case.clone();
        shuffled.rules.shuffle(&mut ChaCha8Rng::seed_from_u64(perm));
        let (p, q) = (case.program(), shuffled.program());
        let mp = p.canonical_model(&case.facts_for(&p)).unwrap();
        let mq = q.canonical_model(&shuffled.facts_for(&q)).unwrap();
        prop_assert_eq!(named(&p, &mp), named(&q, &mq));
    }
}

/// `n` encoded states drawn from the state spaces of training-size tasks.
pub fn shipped_states(d: ShippedDomain, n: usize, seed: u64) -> usize {
    let bk = d.compiled();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let tasks: Vec<Task> = generate(d, &train_sizes(d), 2, seed)
        .iter()
        .map(|p| Task::new(d.domain(), p).unwrap())
        .collect();
    let spaces: Vec<_> = tasks.iter().map(|t| expand(t, 10_000).unwrap()).collect();
    for _ in 0..n {
        let k = rand::Rng::gen_range(&mut rng, 0..tasks.len());
        let s = spaces[k].states.choose(&mut rng).unwrap();
        let policy = BoundPolicy::new(&bk, &tasks[k]).unwrap();
        let facts = policy.encode(s);
        assert_eq!(
            bk.program.canonical_model(&facts).unwrap(),
            evaluate_naive(&bk.program, &facts).unwrap(),
            "{} in {}",
            tasks[k].state_string(s),
            tasks[k].name()
        );
    }
    n
}

#[test]
fn shipped_programs_match_naive() {
    for d in ShippedDomain::ALL {
        assert_eq!(shipped_states(d, 200, 11), 200);
        let baseline = d.baseline();
        let task = Task::new(d.domain(), &generate(d, &train_sizes(d), 1, 3)[0]).unwrap();
        let policy = BoundPolicy::new(&baseline, &task).unwrap();
        let facts = policy.encode(task.initial_state());
        assert_eq!(
            baseline.program.canonical_model(&facts).unwrap(),
            evaluate_naive(&baseline.program, &facts).unwrap()
        );
    }
}

#[test]
fn random_programs_are_not_trivial() {
    let (mut derives, mut negates, mut stratified) = (0, 0, 0);
    for seed in 0..300 {
        let case = random_case(seed, true);
        let p = case.program();
        let input = case.facts_for(&p);
        if p.canonical_model(&input).unwrap().len() > input.len() {
            derives += 1;
        }
        negates += case.rules.iter().any(|r| r.contains("not ")) as usize;
        stratified += (p.num_strata() > 1) as usize;
    }
    assert!(
        derives > 100 && negates > 100 && stratified > 100,
        "{derives} {negates} {stratified}"
    );
}
