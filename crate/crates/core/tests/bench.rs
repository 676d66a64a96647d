use bkplan::bench::{
    compute_metrics, regenerate_reports, run_suite, validate_plan, write_suite, PlanError,
    SuiteConfig, BASELINE, ORACLE,
};
use bkplan::bk::ShippedDomain;
use bkplan::planning::Task;

const SWAP: &str = "(define (problem swap) (:domain blocksworld)
  (:objects a b)
  (:init (on a b) (on_table b) (clear a) (arm_empty))
  (:goal (and (on b a) (on_table a))))";

const DONE: &str = "(define (problem done) (:domain blocksworld)
  (:objects a)
  (:init (on_table a) (clear a) (arm_empty))
  (:goal (and (on_table a))))";

fn task(src: &str) -> Task {
    Task::parse(ShippedDomain::Blocksworld.domain(), src).unwrap()
}

#[test]
fn validate_plan_cases() {
    assert_eq!(validate_plan(&task(DONE), &[]), Ok(()));

    let swap = task(SWAP);
    let plan = swap
        .parse_plan("(unstack a b)\n(putdown a)\n(pickup b)\n(stack b a)\n")
        .unwrap();
    assert_eq!(validate_plan(&swap, &plan), Ok(()));

    let swapped = vec![plan[1], plan[0], plan[2], plan[3]];
    assert_eq!(
        validate_plan(&swap, &swapped),
        Err(PlanError::Inapplicable {
            step: 1,
            action: "(putdown a)".into()
        })
    );
    let swapped = vec![plan[0], plan[2], plan[1], plan[3]];
    assert!(matches!(
        validate_plan(&swap, &swapped),
        Err(PlanError::Inapplicable { step: 2, .. })
    ));
    assert_eq!(
        validate_plan(&swap, &plan[..3]),
        Err(PlanError::GoalNotReached)
    );
}

fn small_suite(weights: Vec<std::path::PathBuf>) -> SuiteConfig {
    SuiteConfig::parse(
        "seed = 3\n[[domains]]\nname = \"blocksworld\"\nsizes = [[2], [3], [4]]\ntasks_per_size = 3\n",
    )
    .map(|mut c| {
        c.domains[0].weights = weights;
        c
    })
    .unwrap()
}

#[test]
fn baseline_only_suite() {
    let cfg = small_suite(vec![]);
    assert_eq!(cfg.baseline_seeds, [0, 1, 2]);
    assert_eq!(cfg.oracle_budget, 200_000);
    assert_eq!(cfg.time_limit, 3600.0);
    let r = run_suite(&cfg).unwrap();
    // oracle plus three baseline runs per task
    assert_eq!(r.runs.len(), 9 * 4);
    assert!(r
        .runs
        .iter()
        .all(|run| run.length.is_some() && run.failure.is_none()));
    let policies: Vec<&str> = r.summary.iter().map(|s| s.policy.as_str()).collect();
    assert_eq!(policies, [ORACLE, BASELINE]);
    // per task, baseline PLIs average to zero
    for chunk in r.metrics.chunks(4) {
        let sum: f64 = chunk[1..].iter().map(|m| m.pli.unwrap()).sum();
        assert!(sum.abs() < 1e-9);
    }
    assert!(r.metrics.iter().all(|m| m.optimal.is_some()));
}

#[test]
fn time_limit_failures_are_recorded_and_skipped() {
    let mut cfg = small_suite(vec![]);
    cfg.time_limit = 0.0;
    let r = run_suite(&cfg).unwrap();
    let failed: Vec<_> = r.runs.iter().filter(|x| x.policy != ORACLE).collect();
    assert!(failed
        .iter()
        .all(|x| x.length.is_none() && x.failure.as_deref() == Some("time-limit")));
    let base = r.summary.iter().find(|s| s.policy == BASELINE).unwrap();
    assert_eq!(base.solved, 0);
    assert_eq!(base.failed, base.tasks);
    assert_eq!(base.mean_pli, None);
}

#[test]
fn reports_regenerate_identically() {
    let cfg = small_suite(vec![]);
    let r = run_suite(&cfg).unwrap();
    let dir = tempfile::tempdir().unwrap();
    write_suite(dir.path(), &r).unwrap();
    let again = dir.path().join("again");
    regenerate_reports(&dir.path().join("runs.json"), &again).unwrap();
    for f in ["metrics.csv", "summary.csv"] {
        assert_eq!(
            std::fs::read(dir.path().join(f)).unwrap(),
            std::fs::read(again.join(f)).unwrap(),
            "{f}"
        );
    }
    assert_eq!(
        compute_metrics(&r.runs),
        (r.metrics.clone(), r.summary.clone())
    );
    let header = std::fs::read_to_string(dir.path().join("runs.csv")).unwrap();
    assert!(header.starts_with("domain,task,policy,seed,length,failure\n"));
}

#[test]
fn oracle_budget_leaves_npli_empty() {
    let mut cfg = small_suite(vec![]);
    cfg.oracle_budget = 10;
    let r = run_suite(&cfg).unwrap();
    let oracle = r.runs.iter().filter(|x| x.policy == ORACLE);
    assert!(oracle
        .clone()
        .any(|x| x.failure.as_deref() == Some("oracle-budget")));
    for m in r.metrics.iter().filter(|m| m.optimal.is_none()) {
        assert!(m.npli.is_none());
        if m.policy != ORACLE {
            assert!(m.pli.is_some());
        }
    }
}

#[test]
fn config_errors() {
    assert!(SuiteConfig::parse(
        "seed = 1\n[[domains]]\nname = \"logistics\"\nsizes = [[2]]\ntasks_per_size = 1\n"
    )
    .is_err());
    assert!(SuiteConfig::parse("seed = 1\nbogus = 2\ndomains = []\n").is_err());
    assert!(SuiteConfig::parse("seed = 1\nbaseline_seeds = []\ndomains = []\n").is_err());
}

#[test]
fn weights_from_another_domain_are_rejected() {
    let bk = ShippedDomain::Ferry.compiled();
    let ext = bkplan::lrnn::build_extension(&bk, 1).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("ferry.json");
    bkplan::lrnn::save_params(&bkplan::lrnn::ParamStore::init(&ext, 4, 0), &path).unwrap();
    let cfg = small_suite(vec![path]);
    assert!(matches!(
        run_suite(&cfg),
        Err(bkplan::bench::BenchError::Weights { .. })
    ));
}
