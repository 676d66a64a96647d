mod common;

use std::sync::Arc;

use bkplan::bk::{compile_shorthand, BkSource, ShippedDomain};
use bkplan::datalog::EvalOptions;
use bkplan::explorer::{DataState, DataTask, Dataset, Sample};
use bkplan::generators::{generate, train_sizes};
use bkplan::lrnn::{
    build_extension, ground_net, load_params, loss_and_grad, prepare, save_params, train,
    LrnnError, ParamStore, TrainConfig,
};
use bkplan::planning::{Domain, Problem, Task};
use bkplan::policy::BoundPolicy;
use common::{dataset, gradient_check, take_samples};

const SWAP: &str = "(define (problem swap) (:domain blocksworld)
  (:objects a b)
  (:init (on a b) (on_table b) (clear a) (arm_empty))
  (:goal (and (on b a) (on_table a))))";

#[test]
fn gradients_match_finite_differences() {
    for d in ShippedDomain::ALL {
        let err = gradient_check(d);
        assert!(err < 1e-4, "{}: max relative error {err:e}", d.name());
    }
}

#[test]
fn zero_parameters_give_zero_vectors() {
    let bk = ShippedDomain::Blocksworld.compiled();
    let ext = build_extension(&bk, 2).unwrap();
    let task = Task::parse(ShippedDomain::Blocksworld.domain(), SWAP).unwrap();
    let policy = BoundPolicy::new(&bk, &task).unwrap();
    let net = ground_net(
        &ext,
        &policy.encode(task.initial_state()),
        EvalOptions::default(),
    )
    .unwrap();
    let params = ParamStore::zeros(&ext, 8);
    let fwd = net.forward(&params);
    for &v in net.order() {
        assert!(fwd.vector(v).iter().all(|&x| x == 0.0));
    }
}

#[test]
fn action_layer_matches_the_policy() {
    for d in ShippedDomain::ALL {
        let bk = d.compiled();
        let ext = build_extension(&bk, 1).unwrap();
        for p in generate(d, &train_sizes(d), 1, 8) {
            let task = Task::new(d.domain(), &p).unwrap();
            let policy = BoundPolicy::new(&bk, &task).unwrap();
            let space = bkplan::explorer::expand(&task, 10_000).unwrap();
            for s in space.states.iter().step_by(11).take(30) {
                let out = policy.induced(s).unwrap();
                let net = ground_net(&ext, &policy.encode(s), EvalOptions::default()).unwrap();
                // the extension leaves every policy predicate unchanged
                for pred in bk.program.preds().ids() {
                    assert_eq!(net.model.count(pred), out.model.count(pred));
                }
                let mut n = 0;
                for &a in &bk.encoding.actions {
                    n += net.model.count(a);
                }
                assert_eq!(n, out.actions.len());
            }
        }
    }
}

#[test]
fn swap_net_derives_only_unstack() {
    let bk = ShippedDomain::Blocksworld.compiled();
    let ext = build_extension(&bk, 1).unwrap();
    let task = Task::parse(ShippedDomain::Blocksworld.domain(), SWAP).unwrap();
    let policy = BoundPolicy::new(&bk, &task).unwrap();
    let net = ground_net(
        &ext,
        &policy.encode(task.initial_state()),
        EvalOptions::default(),
    )
    .unwrap();
    let unstack = bk.program.preds().get("unstack").unwrap();
    let (a, b) = (task.object("a").unwrap(), task.object("b").unwrap());
    let node = net
        .node(unstack, &[policy.value_of(a), policy.value_of(b)])
        .unwrap();
    // B1 derives it with a single substitution
    assert_eq!(net.derivations(node).len(), 1);
    assert_eq!(net.derivations(node)[0].1, 1);
}

#[test]
fn loss_of_zero_score_is_ln_two() {
    let bk = ShippedDomain::Blocksworld.compiled();
    let ext = build_extension(&bk, 1).unwrap();
    let data = dataset(ShippedDomain::Blocksworld, 1);
    let prepared = prepare(&ext, &data, Some(5), 0).unwrap();
    let mut items = take_samples(&prepared.items, 1);
    items[0].targets[0].1 = 1.0;
    let params = ParamStore::zeros(&ext, 8);
    let (loss, _) = loss_and_grad(&params, &[&items[0]]).unwrap();
    assert!((loss - std::f64::consts::LN_2).abs() < 1e-12);
}

#[test]
fn duplicated_sample_doubles_the_summed_gradient() {
    let bk = ShippedDomain::Ferry.compiled();
    let ext = build_extension(&bk, 1).unwrap();
    let data = dataset(ShippedDomain::Ferry, 1);
    let prepared = prepare(&ext, &data, Some(5), 0).unwrap();
    let one = take_samples(&prepared.items, 1);
    let mut two = one.clone();
    let t = two[0].targets[0];
    two[0].targets.push(t);
    let params = ParamStore::init(&ext, 4, 1);
    let (_, g1) = loss_and_grad(&params, &[&one[0]]).unwrap();
    let (_, g2) = loss_and_grad(&params, &[&two[0]]).unwrap();
    // means over 1 and 2 copies coincide, so the sums differ by a factor 2
    for (a, b) in g1.data.iter().zip(&g2.data) {
        assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0));
    }
}

#[test]
fn params_round_trip_and_errors() {
    let bk = ShippedDomain::Satellite.compiled();
    let ext = build_extension(&bk, 1).unwrap();
    let p = ParamStore::init(&ext, 8, 4);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("w.json");
    save_params(&p, &path).unwrap();
    assert_eq!(load_params(&path, &ext).unwrap(), p);

    let text = std::fs::read_to_string(&path).unwrap();
    let bad = text.replacen("bkplan-lrnn-params", "something-else", 1);
    assert!(matches!(
        ParamStore::from_json(&bad, &ext),
        Err(LrnnError::Format(_))
    ));
    let bad = text.replacen("\"version\": 1", "\"version\": 9", 1);
    assert!(matches!(
        ParamStore::from_json(&bad, &ext),
        Err(LrnnError::Version { found: 9 })
    ));

    // same rules with one more, as from a different policy
    let mut src = bk_source(ShippedDomain::Satellite);
    src.push_str("\nswitch_off(I, S) :-pre calibrated(I).\n");
    let other = compile_shorthand(
        &BkSource::parse("satellite", &src).unwrap(),
        ShippedDomain::Satellite.domain(),
    )
    .unwrap();
    let other = build_extension(&other, 1).unwrap();
    match ParamStore::from_json(&text, &other) {
        Err(LrnnError::Shape { rule, .. }) => {
            assert!(rule.starts_with("switch_off(I, S)"), "{rule}")
        }
        r => panic!("expected a shape error, got {r:?}"),
    }
}

fn bk_source(d: ShippedDomain) -> String {
    let path = format!("{}/bk/{}.dl", env!("CARGO_MANIFEST_DIR"), d.name());
    std::fs::read_to_string(path).unwrap()
}

#[test]
fn training_is_deterministic() {
    let bk = ShippedDomain::Blocksworld.compiled();
    let ext = build_extension(&bk, 1).unwrap();
    let data = dataset(ShippedDomain::Blocksworld, 2);
    let prepared = prepare(&ext, &data, Some(60), 1).unwrap();
    let cfg = TrainConfig {
        epochs: 3,
        seed: 9,
        batch_size: Some(64),
        ..TrainConfig::default()
    };
    let a = train(&ext, &prepared, &cfg).unwrap();
    let b = train(&ext, &prepared, &cfg).unwrap();
    assert_eq!(a.params.to_json(), b.params.to_json());
    assert_eq!(a.log.len(), 4);

    let zero = TrainConfig { epochs: 0, ..cfg };
    let z = train(&ext, &prepared, &zero).unwrap();
    assert_eq!(z.params, ParamStore::init(&ext, zero.hidden, zero.seed));
    assert_eq!(z.best_epoch, 0);
}

const TOY_DOMAIN: &str = "(define (domain toy) (:requirements :strips)
  (:predicates (good ?x) (bad ?x) (done ?x))
  (:action pick :parameters (?x) :precondition (and) :effect (done ?x)))";

#[test]
fn separable_toy_reaches_full_f1() {
    let domain = Arc::new(Domain::parse(TOY_DOMAIN).unwrap());
    let src = BkSource::parse("toy", "pick(X) :-pre good(X).\npick(X) :-pre bad(X).").unwrap();
    let bk = compile_shorthand(&src, domain.clone()).unwrap();
    let ext = build_extension(&bk, 1).unwrap();

    let mut data = Dataset::empty(&domain);
    for t in 0..6u32 {
        let n = 2 + t as usize % 3;
        let objs: Vec<String> = (0..n).map(|i| format!("o{i}")).collect();
        let init: Vec<String> = (0..n)
            .map(|i| {
                format!(
                    "({} o{i})",
                    if (i + t as usize) % 2 == 0 {
                        "good"
                    } else {
                        "bad"
                    }
                )
            })
            .collect();
        let text = format!(
            "(define (problem p{t}) (:domain toy) (:objects {}) (:init {}) (:goal (and (done o0))))",
            objs.join(" "),
            init.join(" ")
        );
        let problem = Problem::parse(&text).unwrap();
        let task = Task::new(domain.clone(), &problem).unwrap();
        let atoms = task
            .initial_state()
            .atoms()
            .map(|a| (task.atom(a).pred, task.atom(a).args.to_vec()))
            .collect();
        data.tasks.push(DataTask {
            problem,
            states: vec![DataState { atoms, dist: 1 }],
        });
        for i in 0..n {
            let o = task.object(&format!("o{i}")).unwrap();
            data.samples.push(Sample {
                task: t,
                state: 0,
                schema: 0,
                args: vec![o],
                label: (i + t as usize) % 2 == 0,
            });
        }
    }
    let prepared = prepare(&ext, &data, None, 0).unwrap();
    assert_eq!(prepared.skipped, 0);
    let cfg = TrainConfig {
        epochs: 100,
        lr: 1e-2,
        seed: 2,
        ..TrainConfig::default()
    };
    let out = train(&ext, &prepared, &cfg).unwrap();
    assert_eq!(out.best_f1, 1.0, "{:?}", out.log.last());
}
