//! Experiment runner: plan validation, plan-length improvement metrics and
//! CSV/JSON reports.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bk::{CompiledBk, ShippedDomain};
use crate::explorer::{expand, oracle_distances, StateSpace};
use crate::generators::generate;
use crate::lrnn::{build_extension, LrnnError, LrnnScorer, ParamStore};
use crate::planning::{Domain, Task};
use crate::policy::{default_step_cap, execute_greedy, execute_sampling, BoundPolicy, PolicyError};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PlanError {
    #[error("step {step}: {action} is not applicable")]
    Inapplicable { step: usize, action: String },
    #[error("plan ends in a non-goal state")]
    GoalNotReached,
}

/// Replays `plan` from the initial state and checks the goal.
pub fn validate_plan(task: &Task, plan: &[usize]) -> Result<(), PlanError> {
    let mut s = task.initial_state().clone();
    for (i, &a) in plan.iter().enumerate() {
        s = task.apply(a, &s).map_err(|_| PlanError::Inapplicable {
            step: i + 1,
            action: task.action_string(a),
        })?;
    }
    if task.is_goal(&s) {
        Ok(())
    } else {
        Err(PlanError::GoalNotReached)
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricError {
    #[error("baseline mean plan length must be positive, got {0}")]
    ZeroBaseline(f64),
    #[error("optimal plan is no shorter than the baseline")]
    NotApplicable,
}

/// Plan-length improvement of `x` over the baseline mean, in percent.
pub fn pli(baseline_mean: f64, x: f64) -> Result<f64, MetricError> {
    if baseline_mean <= 0.0 {
        return Err(MetricError::ZeroBaseline(baseline_mean));
    }
    Ok(100.0 * (baseline_mean - x) / baseline_mean)
}

/// `pli(x)` relative to `pli(x*)`, in percent, capped at 100.
pub fn npli(baseline_mean: f64, x: f64, optimal: f64) -> Result<f64, MetricError> {
    let best = pli(baseline_mean, optimal)?;
    if best <= 0.0 {
        return Err(MetricError::NotApplicable);
    }
    Ok((100.0 * pli(baseline_mean, x)? / best).min(100.0))
}

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("config: {0}")]
    Config(String),
    #[error("unknown domain `{0}`")]
    Domain(String),
    #[error("{path}: {msg}")]
    Io { path: PathBuf, msg: String },
    #[error("weights {path}: {source}")]
    Weights { path: PathBuf, source: LrnnError },
    #[error("csv: {0}")]
    Csv(String),
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> BenchError {
    BenchError::Io {
        path: path.to_path_buf(),
        msg: e.to_string(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainSuite {
    pub name: String,
    /// Generator sizes, see [`crate::generators`].
    pub sizes: Vec<Vec<usize>>,
    pub tasks_per_size: usize,
    /// Trained parameter files, each evaluated greedily.
    #[serde(default)]
    pub weights: Vec<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SuiteConfig {
    #[serde(default = "default_name")]
    pub name: String,
    /// Seed of the task generators.
    pub seed: u64,
    #[serde(default = "default_baseline_seeds")]
    pub baseline_seeds: Vec<u64>,
    #[serde(default = "default_oracle_budget")]
    pub oracle_budget: usize,
    /// Per-run limit in seconds.
    #[serde(default = "default_time_limit")]
    pub time_limit: f64,
    /// Fixed step cap; defaults to ten times the optimal length (or `|O|²`).
    #[serde(default)]
    pub step_cap: Option<usize>,
    /// Relative to the config file.
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    pub domains: Vec<DomainSuite>,
}

fn default_name() -> String {
    "suite".into()
}

fn default_baseline_seeds() -> Vec<u64> {
    vec![0, 1, 2]
}

fn default_oracle_budget() -> usize {
    200_000
}

fn default_time_limit() -> f64 {
    3600.0
}

impl SuiteConfig {
    pub fn parse(text: &str) -> Result<Self, BenchError> {
        let cfg: SuiteConfig =
            toml::from_str(text).map_err(|e| BenchError::Config(e.to_string()))?;
        for d in &cfg.domains {
            if ShippedDomain::from_name(&d.name).is_none() {
                return Err(BenchError::Domain(d.name.clone()));
            }
        }
        if cfg.baseline_seeds.is_empty() {
            return Err(BenchError::Config(
                "at least one baseline seed is needed".into(),
            ));
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, BenchError> {
        let text = std::fs::read_to_string(path).map_err(|e| io_err(path, e))?;
        let mut cfg = Self::parse(&text)?;
        // weights are relative to the config file
        let dir = path.parent().unwrap_or(Path::new("."));
        if let Some(out) = &mut cfg.output_dir {
            if out.is_relative() {
                *out = dir.join(&*out);
            }
        }
        for d in &mut cfg.domains {
            for w in &mut d.weights {
                if w.is_relative() {
                    *w = dir.join(&*w);
                }
            }
        }
        Ok(cfg)
    }
}

/// Outcome of one policy run. `length` is set iff the plan validated.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunRecord {
    pub domain: String,
    pub task: String,
    pub policy: String,
    pub seed: u64,
    pub length: Option<usize>,
    pub failure: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub task: String,
    pub policy: String,
    pub seed: u64,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricRow {
    pub domain: String,
    pub task: String,
    pub policy: String,
    pub length: Option<usize>,
    pub baseline_mean: Option<f64>,
    pub optimal: Option<usize>,
    pub pli: Option<f64>,
    pub npli: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub domain: String,
    pub policy: String,
    pub tasks: usize,
    pub solved: usize,
    /// Failed runs, dropped from the means.
    pub failed: usize,
    pub mean_pli: Option<f64>,
    pub mean_npli: Option<f64>,
    /// Tasks contributing to `mean_npli`.
    pub npli_tasks: usize,
}

pub const BASELINE: &str = "bk-sample";
pub const ORACLE: &str = "oracle";

pub fn baseline_id(seed: u64) -> String {
    format!("{BASELINE}-s{seed}")
}

fn lrnn_id(path: &Path) -> String {
    let stem = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    format!("lrnn-{stem}")
}

/// Reads a parameter file, building the extension its layer count needs.
pub fn load_scorer(bk: &CompiledBk, path: &Path) -> Result<LrnnScorer, BenchError> {
    let text = std::fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    let wrap = |source| BenchError::Weights {
        path: path.to_path_buf(),
        source,
    };
    let probe: serde_json::Value =
        serde_json::from_str(&text).map_err(|e| wrap(LrnnError::Format(e.to_string())))?;
    let layers = probe
        .get("layers")
        .and_then(|v| v.as_u64())
        .ok_or_else(|| wrap(LrnnError::Format("missing `layers`".into())))?
        as usize;
    let ext = build_extension(bk, layers).map_err(wrap)?;
    let params = ParamStore::from_json(&text, &ext).map_err(wrap)?;
    Ok(LrnnScorer::new(ext, params))
}

/// Shortest plan read off the oracle distances, first optimal action in
/// canonical order at each step.
pub fn oracle_plan(space: &StateSpace, dist: &[Option<u32>]) -> Option<Vec<usize>> {
    let mut s = 0u32;
    dist[0]?;
    let mut plan = Vec::new();
    while !space.goal[s as usize] {
        let d = dist[s as usize]?;
        let &(a, t) = space.edges[s as usize]
            .iter()
            .find(|&&(_, t)| dist[t as usize] == Some(d - 1))?;
        plan.push(a);
        s = t;
    }
    Some(plan)
}

#[derive(Debug, Clone)]
pub struct SuiteResult {
    pub runs: Vec<RunRecord>,
    pub timings: Vec<Timing>,
    pub metrics: Vec<MetricRow>,
    pub summary: Vec<SummaryRow>,
}

enum Job {
    Baseline(u64),
    Lrnn(usize),
}

fn failure(e: &PolicyError) -> String {
    match e {
        PolicyError::StepCap { .. } => "step-cap".into(),
        PolicyError::TimeLimit { .. } => "time-limit".into(),
        PolicyError::EmptyPolicy { .. } => "empty-policy".into(),
        other => other.to_string(),
    }
}

/// Runs the whole suite. Results are in a fixed order (domain, task, then
/// oracle, baseline seeds and weight files) whatever the thread count.
pub fn run_suite(cfg: &SuiteConfig) -> Result<SuiteResult, BenchError> {
    let mut runs = Vec::new();
    let mut timings = Vec::new();
    let limit = Duration::from_secs_f64(cfg.time_limit.max(0.0));
    for dcfg in &cfg.domains {
        let d = ShippedDomain::from_name(&dcfg.name)
            .ok_or_else(|| BenchError::Domain(dcfg.name.clone()))?;
        let domain: Arc<Domain> = d.domain();
        let bk = d.compiled();
        let scorers: Vec<(String, LrnnScorer)> = dcfg
            .weights
            .iter()
            .map(|w| Ok((lrnn_id(w), load_scorer(&bk, w)?)))
            .collect::<Result<_, BenchError>>()?;
        let problems = generate(d, &dcfg.sizes, dcfg.tasks_per_size, cfg.seed);
        let tasks: Vec<Task> = problems
            .iter()
            .map(|p| Task::new(domain.clone(), p).map_err(|e| BenchError::Config(e.to_string())))
            .collect::<Result<_, _>>()?;

        let oracle: Vec<(RunRecord, Timing, Option<usize>)> = tasks
            .par_iter()
            .map(|task| {
                let clock = Instant::now();
                let (length, failure) = match expand(task, cfg.oracle_budget) {
                    Ok(space) => {
                        let dist = oracle_distances(&space);
                        match oracle_plan(&space, &dist) {
                            Some(plan) => match validate_plan(task, &plan) {
                                Ok(()) => (Some(plan.len()), None),
                                Err(e) => (None, Some(e.to_string())),
                            },
                            None => (None, Some("unsolvable".into())),
                        }
                    }
                    Err(_) => (None, Some("oracle-budget".into())),
                };
                let rec = RunRecord {
                    domain: dcfg.name.clone(),
                    task: task.name().to_string(),
                    policy: ORACLE.into(),
                    seed: 0,
                    length,
                    failure,
                };
                let t = Timing {
                    task: task.name().to_string(),
                    policy: ORACLE.into(),
                    seed: 0,
                    seconds: clock.elapsed().as_secs_f64(),
                };
                (rec, t, length)
            })
            .collect();

        let mut jobs: Vec<(usize, Job)> = Vec::new();
        for ti in 0..tasks.len() {
            for &s in &cfg.baseline_seeds {
                jobs.push((ti, Job::Baseline(s)));
            }
            for k in 0..scorers.len() {
                jobs.push((ti, Job::Lrnn(k)));
            }
        }
        let results: Vec<(RunRecord, Timing)> = jobs
            .par_iter()
            .map(|(ti, job)| {
                let task = &tasks[*ti];
                let cap = cfg
                    .step_cap
                    .unwrap_or_else(|| default_step_cap(task, oracle[*ti].2));
                let clock = Instant::now();
                let (policy_id, seed, outcome) = match BoundPolicy::new(&bk, task) {
                    Err(e) => (String::new(), 0, Err(e)),
                    Ok(mut policy) => {
                        policy.deadline = Some(clock + limit);
                        match job {
                            Job::Baseline(s) => {
                                (baseline_id(*s), *s, execute_sampling(&policy, *s, cap))
                            }
                            Job::Lrnn(k) => {
                                let (id, scorer) = &scorers[*k];
                                (id.clone(), 0, execute_greedy(&policy, scorer, 0, cap))
                            }
                        }
                    }
                };
                let (length, failure) = match outcome {
                    Ok(traj) => match validate_plan(task, &traj.actions) {
                        Ok(()) => (Some(traj.len()), None),
                        Err(e) => (None, Some(e.to_string())),
                    },
                    Err(e) => (None, Some(failure(&e))),
                };
                (
                    RunRecord {
                        domain: dcfg.name.clone(),
                        task: task.name().to_string(),
                        policy: policy_id.clone(),
                        seed,
                        length,
                        failure,
                    },
                    Timing {
                        task: task.name().to_string(),
                        policy: policy_id,
                        seed,
                        seconds: clock.elapsed().as_secs_f64(),
                    },
                )
            })
            .collect();

        let per_task = cfg.baseline_seeds.len() + scorers.len();
        for (ti, (rec, t, _)) in oracle.into_iter().enumerate() {
            runs.push(rec);
            timings.push(t);
            for (rec, t) in &results[ti * per_task..(ti + 1) * per_task] {
                runs.push(rec.clone());
                timings.push(t.clone());
            }
        }
    }
    let (metrics, summary) = compute_metrics(&runs);
    Ok(SuiteResult {
        runs,
        timings,
        metrics,
        summary,
    })
}

fn mean(xs: &[f64]) -> Option<f64> {
    if xs.is_empty() {
        None
    } else {
        Some(xs.iter().sum::<f64>() / xs.len() as f64)
    }
}

/// Per-task metrics and per-policy summaries; a pure function of the runs.
pub fn compute_metrics(runs: &[RunRecord]) -> (Vec<MetricRow>, Vec<SummaryRow>) {
    // (domain, task) in first-seen order
    let mut order: Vec<(String, String)> = Vec::new();
    let mut by_task: BTreeMap<(String, String), Vec<&RunRecord>> = BTreeMap::new();
    for r in runs {
        let key = (r.domain.clone(), r.task.clone());
        if !by_task.contains_key(&key) {
            order.push(key.clone());
        }
        by_task.entry(key).or_default().push(r);
    }
    let mut metrics = Vec::new();
    for key in &order {
        let rs = &by_task[key];
        let baseline: Vec<f64> = rs
            .iter()
            .filter(|r| r.policy.starts_with(BASELINE))
            .filter_map(|r| r.length.map(|l| l as f64))
            .collect();
        let base = mean(&baseline).filter(|&m| m > 0.0);
        let optimal = rs
            .iter()
            .find(|r| r.policy == ORACLE)
            .and_then(|r| r.length);
        for r in rs {
            let (p, n) = match (base, r.length) {
                (Some(b), Some(x)) => (
                    pli(b, x as f64).ok(),
                    optimal.and_then(|o| npli(b, x as f64, o as f64).ok()),
                ),
                _ => (None, None),
            };
            metrics.push(MetricRow {
                domain: key.0.clone(),
                task: key.1.clone(),
                policy: r.policy.clone(),
                length: r.length,
                baseline_mean: base,
                optimal,
                pli: p,
                npli: n,
            });
        }
    }

    let mut groups: Vec<(String, String)> = Vec::new();
    let mut rows: BTreeMap<(String, String), Vec<&MetricRow>> = BTreeMap::new();
    for m in &metrics {
        let policy = if m.policy.starts_with(BASELINE) {
            BASELINE.to_string()
        } else {
            m.policy.clone()
        };
        let key = (m.domain.clone(), policy);
        if !rows.contains_key(&key) {
            groups.push(key.clone());
        }
        rows.entry(key).or_default().push(m);
    }
    let summary = groups
        .into_iter()
        .map(|key| {
            let ms = &rows[&key];
            let plis: Vec<f64> = ms.iter().filter_map(|m| m.pli).collect();
            let nplis: Vec<f64> = ms.iter().filter_map(|m| m.npli).collect();
            let solved = ms.iter().filter(|m| m.length.is_some()).count();
            SummaryRow {
                domain: key.0.clone(),
                policy: key.1.clone(),
                tasks: ms.len(),
                solved,
                failed: ms.len() - solved,
                mean_pli: mean(&plis),
                mean_npli: mean(&nplis),
                npli_tasks: nplis.len(),
            }
        })
        .collect();
    (metrics, summary)
}

fn fmt_f(x: Option<f64>) -> String {
    // rounding noise of a zero mean must not print as -0.000000
    x.map(|v| if v.abs() < 5e-7 { 0.0 } else { v })
        .map(|v| format!("{v:.6}"))
        .unwrap_or_default()
}

fn fmt_u(x: Option<usize>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

fn write_csv(
    path: &Path,
    header: &[&str],
    rows: impl Iterator<Item = Vec<String>>,
) -> Result<(), BenchError> {
    let mut w = csv::Writer::from_path(path).map_err(|e| io_err(path, e))?;
    w.write_record(header)
        .map_err(|e| BenchError::Csv(e.to_string()))?;
    for r in rows {
        w.write_record(&r)
            .map_err(|e| BenchError::Csv(e.to_string()))?;
    }
    w.flush().map_err(|e| io_err(path, e))
}

/// `metrics.csv` and `summary.csv`, the derived reports.
pub fn write_reports(
    dir: &Path,
    metrics: &[MetricRow],
    summary: &[SummaryRow],
) -> Result<(), BenchError> {
    std::fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    write_csv(
        &dir.join("metrics.csv"),
        &[
            "domain",
            "task",
            "policy",
            "length",
            "baseline_mean",
            "optimal",
            "pli",
            "npli",
        ],
        metrics.iter().map(|m| {
            vec![
                m.domain.clone(),
                m.task.clone(),
                m.policy.clone(),
                fmt_u(m.length),
                fmt_f(m.baseline_mean),
                fmt_u(m.optimal),
                fmt_f(m.pli),
                fmt_f(m.npli),
            ]
        }),
    )?;
    write_csv(
        &dir.join("summary.csv"),
        &[
            "domain",
            "policy",
            "tasks",
            "solved",
            "failed",
            "mean_pli",
            "mean_npli",
            "npli_tasks",
        ],
        summary.iter().map(|s| {
            vec![
                s.domain.clone(),
                s.policy.clone(),
                s.tasks.to_string(),
                s.solved.to_string(),
                s.failed.to_string(),
                fmt_f(s.mean_pli),
                fmt_f(s.mean_npli),
                s.npli_tasks.to_string(),
            ]
        }),
    )
}

/// Writes every artifact of a suite run. Wall-clock times go to
/// `timings.csv` only, so the other files are reproducible.
pub fn write_suite(dir: &Path, result: &SuiteResult) -> Result<(), BenchError> {
    std::fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    write_csv(
        &dir.join("runs.csv"),
        &["domain", "task", "policy", "seed", "length", "failure"],
        result.runs.iter().map(|r| {
            vec![
                r.domain.clone(),
                r.task.clone(),
                r.policy.clone(),
                r.seed.to_string(),
                fmt_u(r.length),
                r.failure.clone().unwrap_or_default(),
            ]
        }),
    )?;
    let runs_json = dir.join("runs.json");
    let text = serde_json::to_string_pretty(&result.runs).expect("records serialize") + "\n";
    std::fs::write(&runs_json, text).map_err(|e| io_err(&runs_json, e))?;
    write_reports(dir, &result.metrics, &result.summary)?;
    write_csv(
        &dir.join("timings.csv"),
        &["task", "policy", "seed", "seconds"],
        result.timings.iter().map(|t| {
            vec![
                t.task.clone(),
                t.policy.clone(),
                t.seed.to_string(),
                format!("{:.6}", t.seconds),
            ]
        }),
    )
}

/// Recomputes the derived reports from a stored `runs.json`.
pub fn regenerate_reports(runs_json: &Path, out: &Path) -> Result<(), BenchError> {
    let text = std::fs::read_to_string(runs_json).map_err(|e| io_err(runs_json, e))?;
    let runs: Vec<RunRecord> = serde_json::from_str(&text).map_err(|e| io_err(runs_json, e))?;
    let (metrics, summary) = compute_metrics(&runs);
    write_reports(out, &metrics, &summary)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() < 1e-9
    }

    #[test]
    fn pli_values() {
        assert!(close(pli(20.0, 15.0).unwrap(), 25.0));
        assert!(close(pli(20.0, 20.0).unwrap(), 0.0));
        assert!(pli(20.0, 25.0).unwrap() < 0.0);
        assert!(matches!(pli(0.0, 3.0), Err(MetricError::ZeroBaseline(_))));
    }

    #[test]
    fn npli_values() {
        // PLI(x) = 25, PLI(x*) = 50
        assert!(close(npli(20.0, 15.0, 10.0).unwrap(), 50.0));
        assert!(close(npli(20.0, 10.0, 10.0).unwrap(), 100.0));
        assert!(close(npli(20.0, 20.0, 10.0).unwrap(), 0.0));
        // shorter than the oracle's length is capped
        assert!(close(npli(20.0, 8.0, 10.0).unwrap(), 100.0));
        assert_eq!(npli(10.0, 9.0, 10.0), Err(MetricError::NotApplicable));
    }

    #[test]
    fn metrics_drop_failed_runs() {
        let rec = |policy: &str, length: Option<usize>| RunRecord {
            domain: "d".into(),
            task: "t".into(),
            policy: policy.into(),
            seed: 0,
            length,
            failure: if length.is_none() {
                Some("step-cap".into())
            } else {
                None
            },
        };
        let runs = vec![
            rec(ORACLE, Some(4)),
            rec("bk-sample-s0", Some(10)),
            rec("bk-sample-s1", Some(6)),
            rec("bk-sample-s2", None),
            rec("lrnn-a", Some(5)),
        ];
        let (m, s) = compute_metrics(&runs);
        assert!(close(m[1].baseline_mean.unwrap(), 8.0));
        let lrnn = m.iter().find(|r| r.policy == "lrnn-a").unwrap();
        assert!(close(lrnn.pli.unwrap(), 37.5));
        assert!(close(lrnn.npli.unwrap(), 75.0));
        let base = s.iter().find(|r| r.policy == BASELINE).unwrap();
        assert_eq!((base.tasks, base.solved, base.failed), (3, 2, 1));
        assert!(close(base.mean_pli.unwrap(), 0.0));
    }
}
