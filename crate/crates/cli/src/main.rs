use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};

use bkplan::bench::{regenerate_reports, run_suite, validate_plan, write_suite, SuiteConfig};
use bkplan::bk::{compile_shorthand, BkSource, CompiledBk, ShippedDomain};
use bkplan::explorer::{
    expand, label_dataset, oracle_distances, read_dataset, write_dataset, ExploreError,
};
use bkplan::generators::generate;
use bkplan::lrnn::{build_extension, prepare, save_params, train, LrnnScorer, TrainConfig};
use bkplan::planning::{Domain, Problem, Task};
use bkplan::policy::{
    check_properties, default_step_cap, execute_greedy, execute_sampling, BoundPolicy, PolicyError,
    Roots,
};

#[derive(Parser)]
#[command(
    name = "bkplan",
    version,
    about = "Datalog policies for classical planning"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write random problem files for a shipped domain.
    GenTasks(GenTasks),
    /// Label the expanded state spaces of problem files.
    GenData(GenData),
    /// Train a ranking network on a labeled data file.
    Train(TrainArgs),
    /// Execute a policy on one problem and print the plan.
    RunPolicy(RunPolicy),
    /// Check dead-end avoidance, cycle freedom and optimal-plan preservation.
    CheckProperties(CheckProperties),
    /// Run an experiment suite from a TOML file.
    Bench(BenchArgs),
    /// Rebuild metrics.csv and summary.csv from a runs.json.
    Report(ReportArgs),
}

#[derive(Args)]
struct DomainArgs {
    /// Shipped domain: blocksworld, ferry or satellite.
    #[arg(long)]
    domain: String,
    /// Domain file replacing the shipped one.
    #[arg(long)]
    domain_file: Option<PathBuf>,
    /// Policy rules replacing the shipped ones.
    #[arg(long)]
    bk: Option<PathBuf>,
    /// Use the applicable-actions policy instead.
    #[arg(long, conflicts_with = "bk")]
    baseline: bool,
}

impl DomainArgs {
    fn load(&self) -> Result<(Arc<Domain>, CompiledBk), Failure> {
        let shipped = ShippedDomain::from_name(&self.domain);
        let domain = match (&self.domain_file, shipped) {
            (Some(path), _) => Arc::new(Domain::parse(&read(path)?).map_err(validation)?),
            (None, Some(d)) => d.domain(),
            (None, None) => {
                return Err(Failure::Usage(format!(
                    "unknown domain `{}`; pass --domain-file",
                    self.domain
                )))
            }
        };
        let source = match (&self.bk, shipped) {
            _ if self.baseline => bkplan::bk::bk_applicable(&domain),
            (Some(path), _) => BkSource::parse(&self.domain, &read(path)?).map_err(validation)?,
            (None, Some(d)) => d.source(),
            (None, None) => {
                return Err(Failure::Usage(
                    "no shipped rules for this domain; pass --bk".into(),
                ))
            }
        };
        let bk = compile_shorthand(&source, domain.clone()).map_err(validation)?;
        Ok((domain, bk))
    }
}

#[derive(Args)]
struct GenTasks {
    #[arg(long)]
    domain: String,
    /// Generator size, comma separated (repeatable), e.g. `3,3` for ferry.
    #[arg(long = "size", value_delimiter = ';', required = true)]
    sizes: Vec<String>,
    #[arg(long, default_value_t = 5)]
    count: usize,
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct GenData {
    #[command(flatten)]
    domain: DomainArgs,
    /// Problem files or directories of `.pddl` problems.
    #[arg(required = true)]
    problems: Vec<PathBuf>,
    /// Tasks whose state space exceeds this many states are skipped.
    #[arg(long, default_value_t = bkplan::explorer::DEFAULT_BUDGET)]
    budget: usize,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct TrainArgs {
    #[command(flatten)]
    domain: DomainArgs,
    #[arg(long)]
    data: PathBuf,
    /// TOML file with training settings; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    lr: Option<f64>,
    #[arg(long)]
    layers: Option<usize>,
    #[arg(long)]
    hidden: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    batch_size: Option<usize>,
    #[arg(long)]
    max_states: Option<usize>,
    /// Parameter file to write.
    #[arg(long)]
    out: PathBuf,
    /// Per-epoch CSV log (epoch, loss, f1, seconds).
    #[arg(long)]
    log: Option<PathBuf>,
}

#[derive(Args)]
struct RunPolicy {
    #[command(flatten)]
    domain: DomainArgs,
    #[arg(long)]
    problem: PathBuf,
    /// Rank actions greedily with this parameter file instead of sampling.
    #[arg(long)]
    weights: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    step_cap: Option<usize>,
    /// Write the plan here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum RootsArg {
    Initial,
    All,
}

#[derive(Args)]
struct CheckProperties {
    #[command(flatten)]
    domain: DomainArgs,
    #[arg(long)]
    problem: PathBuf,
    #[arg(long, default_value_t = bkplan::explorer::DEFAULT_BUDGET)]
    budget: usize,
    /// States the cycle and dead-end checks start from.
    #[arg(long, value_enum, default_value = "initial")]
    roots: RootsArg,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long)]
    config: PathBuf,
    /// Output directory; defaults to the one named in the config.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ReportArgs {
    #[arg(long)]
    runs: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

enum Failure {
    Usage(String),
    Validation(String),
    Resource(String),
    Other(anyhow::Error),
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Other(e)
    }
}

fn validation(e: impl std::fmt::Display) -> Failure {
    Failure::Validation(e.to_string())
}

fn policy_failure(e: PolicyError) -> Failure {
    match e {
        PolicyError::StepCap { .. } | PolicyError::TimeLimit { .. } => {
            Failure::Resource(e.to_string())
        }
        other => Failure::Validation(other.to_string()),
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path)
        .with_context(|| format!("reading {}", path.display()))
        .map_err(Failure::Other)
}

fn write(path: &Path, text: &str) -> Result<(), Failure> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    std::fs::write(path, text)
        .with_context(|| format!("writing {}", path.display()))
        .map_err(Failure::Other)
}

fn load_task(domain: &Arc<Domain>, path: &Path) -> Result<(Problem, Task), Failure> {
    let problem = Problem::parse(&read(path)?)
        .map_err(|e| Failure::Validation(format!("{}: {e}", path.display())))?;
    let task = Task::new(domain.clone(), &problem)
        .map_err(|e| Failure::Validation(format!("{}: {e}", path.display())))?;
    Ok((problem, task))
}

fn problem_files(inputs: &[PathBuf]) -> Result<Vec<PathBuf>, Failure> {
    let mut out = Vec::new();
    for p in inputs {
        if p.is_dir() {
            let mut files: Vec<PathBuf> = std::fs::read_dir(p)
                .with_context(|| format!("listing {}", p.display()))?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|f| {
                    f.extension().is_some_and(|x| x == "pddl")
                        && f.file_name().is_some_and(|n| n != "domain.pddl")
                })
                .collect();
            files.sort();
            out.extend(files);
        } else {
            out.push(p.clone());
        }
    }
    Ok(out)
}

fn gen_tasks(a: GenTasks) -> Result<(), Failure> {
    let d = ShippedDomain::from_name(&a.domain)
        .ok_or_else(|| Failure::Usage(format!("unknown domain `{}`", a.domain)))?;
    let sizes = a
        .sizes
        .iter()
        .map(|s| {
            s.split(',')
                .map(|x| x.trim().parse::<usize>())
                .collect::<Result<Vec<_>, _>>()
                .map_err(|_| Failure::Usage(format!("bad size `{s}`")))
        })
        .collect::<Result<Vec<_>, _>>()?;
    let problems = generate(d, &sizes, a.count, a.seed);
    write(&a.out.join("domain.pddl"), d.domain_text())?;
    for p in &problems {
        write(&a.out.join(format!("{}.pddl", p.name)), &p.to_string())?;
    }
    eprintln!("wrote {} problems to {}", problems.len(), a.out.display());
    Ok(())
}

fn gen_data(a: GenData) -> Result<(), Failure> {
    let (domain, _) = a.domain.load()?;
    let tasks = problem_files(&a.problems)?
        .iter()
        .map(|p| load_task(&domain, p))
        .collect::<Result<Vec<_>, _>>()?;
    if tasks.len() > bkplan::explorer::MAX_TASKS {
        return Err(Failure::Resource(format!(
            "{} tasks given, at most {} are supported",
            tasks.len(),
            bkplan::explorer::MAX_TASKS
        )));
    }
    let data = label_dataset(&domain, &tasks, a.budget);
    write_dataset(&data, &a.out).map_err(|e| anyhow!(e))?;
    eprintln!(
        "{} tasks, {} samples ({} optimal) written to {}",
        data.tasks.len(),
        data.samples.len(),
        data.positives(),
        a.out.display()
    );
    Ok(())
}

fn train_cmd(a: TrainArgs) -> Result<(), Failure> {
    let (_, bk) = a.domain.load()?;
    let mut cfg = match &a.config {
        Some(path) => toml::from_str::<TrainConfig>(&read(path)?)
            .map_err(|e| Failure::Usage(e.to_string()))?,
        None => TrainConfig::default(),
    };
    cfg.epochs = a.epochs.unwrap_or(cfg.epochs);
    cfg.lr = a.lr.unwrap_or(cfg.lr);
    cfg.layers = a.layers.unwrap_or(cfg.layers);
    cfg.hidden = a.hidden.unwrap_or(cfg.hidden);
    cfg.seed = a.seed.unwrap_or(cfg.seed);
    cfg.batch_size = a.batch_size.or(cfg.batch_size);
    cfg.max_states = a.max_states.or(cfg.max_states);

    let data = read_dataset(&a.data).map_err(validation)?;
    let ext = build_extension(&bk, cfg.layers).map_err(validation)?;
    let prepared = prepare(&ext, &data, cfg.max_states, cfg.seed).map_err(validation)?;
    log::info!(
        "{} samples in {} states, {} skipped",
        prepared.samples,
        prepared.items.len(),
        prepared.skipped
    );
    let out = train(&ext, &prepared, &cfg).map_err(validation)?;
    save_params(&out.params, &a.out).map_err(|e| anyhow!(e))?;
    if let Some(path) = &a.log {
        let mut w =
            csv::Writer::from_path(path).with_context(|| format!("writing {}", path.display()))?;
        w.write_record(["epoch", "loss", "f1", "seconds"])
            .map_err(|e| anyhow!(e))?;
        for e in &out.log {
            w.write_record([
                e.epoch.to_string(),
                format!("{:.9}", e.loss),
                format!("{:.6}", e.f1),
                format!("{:.3}", e.seconds),
            ])
            .map_err(|e| anyhow!(e))?;
        }
        w.flush().map_err(|e| anyhow!(e))?;
    }
    eprintln!("best F1 {:.4} at epoch {}", out.best_f1, out.best_epoch);
    Ok(())
}

fn run_policy(a: RunPolicy) -> Result<(), Failure> {
    let (domain, bk) = a.domain.load()?;
    let (_, task) = load_task(&domain, &a.problem)?;
    let policy = BoundPolicy::new(&bk, &task).map_err(validation)?;
    let cap = a.step_cap.unwrap_or_else(|| default_step_cap(&task, None));
    let traj = match &a.weights {
        Some(path) => {
            let scorer: LrnnScorer = bkplan::bench::load_scorer(&bk, path).map_err(validation)?;
            execute_greedy(&policy, &scorer, a.seed, cap)
        }
        None => execute_sampling(&policy, a.seed, cap),
    }
    .map_err(policy_failure)?;
    validate_plan(&task, &traj.actions).map_err(validation)?;
    let text = traj.plan_text(&task);
    match &a.out {
        Some(path) => write(path, &text)?,
        None => print!("{text}"),
    }
    eprintln!("plan length {}", traj.len());
    Ok(())
}

fn check_cmd(a: CheckProperties) -> Result<(), Failure> {
    let (domain, bk) = a.domain.load()?;
    let (_, task) = load_task(&domain, &a.problem)?;
    let space =
        expand(&task, a.budget).map_err(|e: ExploreError| Failure::Resource(e.to_string()))?;
    let dist = oracle_distances(&space);
    let policy = BoundPolicy::new(&bk, &task).map_err(validation)?;
    let roots = match a.roots {
        RootsArg::Initial => Roots::Initial,
        RootsArg::All => Roots::All,
    };
    let reports = check_properties(&policy, &space, &dist, roots).map_err(validation)?;
    let doc = serde_json::json!({
        "task": task.name(),
        "states": space.len(),
        "properties": reports,
    });
    println!(
        "{}",
        serde_json::to_string_pretty(&doc).map_err(|e| anyhow!(e))?
    );
    if reports.iter().all(|r| r.holds) {
        Ok(())
    } else {
        Err(Failure::Validation("some property does not hold".into()))
    }
}

fn show(x: Option<f64>) -> String {
    x.map_or("-".into(), |v| {
        format!("{:.1}", if v.abs() < 0.05 { 0.0 } else { v })
    })
}

fn bench_cmd(a: BenchArgs) -> Result<(), Failure> {
    let cfg = SuiteConfig::load(&a.config).map_err(|e| Failure::Usage(e.to_string()))?;
    let dir = a.out.or_else(|| cfg.output_dir.clone()).ok_or_else(|| {
        Failure::Usage("no output directory; pass --out or set output_dir".into())
    })?;
    let result = run_suite(&cfg).map_err(validation)?;
    write_suite(&dir, &result).map_err(|e| anyhow!(e))?;
    for s in &result.summary {
        eprintln!(
            "{:<12} {:<24} solved {}/{}  PLI {}  NPLI {}",
            s.domain,
            s.policy,
            s.solved,
            s.tasks,
            show(s.mean_pli),
            show(s.mean_npli),
        );
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let result = match cli.command {
        Command::GenTasks(a) => gen_tasks(a),
        Command::GenData(a) => gen_data(a),
        Command::Train(a) => train_cmd(a),
        Command::RunPolicy(a) => run_policy(a),
        Command::CheckProperties(a) => check_cmd(a),
        Command::Bench(a) => bench_cmd(a),
        Command::Report(a) => regenerate_reports(&a.runs, &a.out).map_err(|e| anyhow!(e).into()),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
        Err(Failure::Validation(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
        Err(Failure::Resource(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(3)
        }
        Err(Failure::Other(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
