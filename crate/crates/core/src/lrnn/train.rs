use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::net::{ground_net, GroundedNet};
use super::params::ParamStore;
use super::{ExtendedProgram, LrnnError};
use crate::datalog::EvalOptions;
use crate::explorer::Dataset;
use crate::planning::Task;
use crate::policy::BoundPolicy;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Aggregation {
    Max,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub epochs: usize,
    pub lr: f64,
    pub layers: usize,
    pub hidden: usize,
    pub seed: u64,
    pub aggregation: Aggregation,
    /// Samples per gradient step; `None`: the whole set when it has at most
    /// 4096 samples, else 1024.
    pub batch_size: Option<usize>,
    /// Train on at most this many states (chosen by seed).
    pub max_states: Option<usize>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 100,
            lr: 1e-4,
            layers: 1,
            hidden: 8,
            seed: 0,
            aggregation: Aggregation::Max,
            batch_size: None,
            max_states: None,
        }
    }
}

impl TrainConfig {
    fn batch_for(&self, samples: usize) -> usize {
        match self.batch_size {
            Some(b) => b.max(1),
            None if samples <= 4096 => samples.max(1),
            None => 1024,
        }
    }
}

/// One state's network with its labeled action nodes.
#[derive(Debug, Clone)]
pub struct TrainItem {
    pub net: GroundedNet,
    /// `(action node, label, sample index in the dataset)`.
    pub targets: Vec<(u32, f64, usize)>,
}

#[derive(Debug, Clone)]
pub struct Prepared {
    pub items: Vec<TrainItem>,
    /// Samples whose action the policy does not derive.
    pub skipped: usize,
    pub samples: usize,
}

/// Grounds one network per dataset state.
pub fn prepare(
    ext: &ExtendedProgram,
    data: &Dataset,
    max_states: Option<usize>,
    seed: u64,
) -> Result<Prepared, LrnnError> {
    let domain = ext.base.domain.clone();
    let mut tasks = Vec::with_capacity(data.tasks.len());
    for t in &data.tasks {
        tasks.push(
            Task::new(domain.clone(), &t.problem).map_err(|e| LrnnError::Format(e.to_string()))?,
        );
    }
    // samples of each state, in file order
    let mut keys: Vec<(u32, u32)> = Vec::new();
    let mut by_state: rustc_hash::FxHashMap<(u32, u32), Vec<usize>> = Default::default();
    for (i, s) in data.samples.iter().enumerate() {
        by_state
            .entry((s.task, s.state))
            .or_insert_with(|| {
                keys.push((s.task, s.state));
                Vec::new()
            })
            .push(i);
    }
    if let Some(cap) = max_states {
        if keys.len() > cap {
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed_5eed);
            keys.shuffle(&mut rng);
            keys.truncate(cap);
            keys.sort_unstable();
        }
    }
    let policies: Vec<BoundPolicy<'_>> = tasks
        .iter()
        .map(|t| BoundPolicy::new(&ext.base, t))
        .collect::<Result<_, _>>()
        .map_err(|e| LrnnError::Format(e.to_string()))?;
    let built: Vec<Result<(TrainItem, usize, usize), LrnnError>> = keys
        .par_iter()
        .map(|&(ti, si)| {
            let task = &tasks[ti as usize];
            let policy = &policies[ti as usize];
            let state = data.state(task, ti, si);
            let net = ground_net(ext, &policy.encode(&state), EvalOptions::default())?;
            let mut targets = Vec::new();
            let mut skipped = 0;
            let ids = &by_state[&(ti, si)];
            for &i in ids {
                let s = &data.samples[i];
                let pred = ext.action_preds()[s.schema as usize];
                let args: Vec<_> = s.args.iter().map(|&o| policy.value_of(o)).collect();
                match net.node(pred, &args) {
                    Some(node) => targets.push((node, if s.label { 1.0 } else { 0.0 }, i)),
                    None => skipped += 1,
                }
            }
            Ok((TrainItem { net, targets }, skipped, ids.len()))
        })
        .collect();
    let mut out = Prepared {
        items: Vec::new(),
        skipped: 0,
        samples: 0,
    };
    for r in built {
        let (item, skipped, n) = r?;
        out.skipped += skipped;
        out.samples += n;
        if !item.targets.is_empty() {
            out.items.push(item);
        }
    }
    Ok(out)
}

fn bce_with_logits(z: f64, y: f64) -> f64 {
    z.max(0.0) - z * y + (-z.abs()).exp().ln_1p()
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Summed loss and gradient of a group of items (not yet averaged).
fn accumulate(
    params: &ParamStore,
    items: &[&TrainItem],
    grad: &mut ParamStore,
) -> Result<(f64, usize), LrnnError> {
    let h = params.hidden;
    let mut loss = 0.0;
    let mut count = 0;
    for item in items {
        let fwd = item.net.forward(params);
        let mut seeds = Vec::with_capacity(item.targets.len());
        for &(node, y, sample) in &item.targets {
            let x = fwd.vector(node);
            let z = params.readout(x);
            let l = bce_with_logits(z, y);
            if !l.is_finite() {
                return Err(LrnnError::NonFinite { sample });
            }
            loss += l;
            count += 1;
            let dz = sigmoid(z) - y;
            for (g, &xi) in grad.w_mut().iter_mut().zip(x) {
                *g += dz * xi;
            }
            *grad.b_mut() += dz;
            seeds.push((
                node,
                params.w().iter().map(|&w| dz * w).collect::<Vec<f64>>(),
            ));
        }
        debug_assert!(seeds.iter().all(|s| s.1.len() == h));
        item.net.backward(params, &fwd, &seeds, grad);
    }
    Ok((loss, count))
}

const CHUNK: usize = 8;

/// Mean binary cross-entropy of `sigmoid(w·x_a + b)` against the labels,
/// and its gradient. Items are processed in fixed chunks whose partial sums
/// are added in order, so results do not depend on thread count.
pub fn loss_and_grad(
    params: &ParamStore,
    batch: &[&TrainItem],
) -> Result<(f64, ParamStore), LrnnError> {
    let parts: Vec<Result<(f64, usize, ParamStore), LrnnError>> = batch
        .par_chunks(CHUNK)
        .map(|chunk| {
            let mut g = params.zeros_like();
            let (l, n) = accumulate(params, chunk, &mut g)?;
            Ok((l, n, g))
        })
        .collect();
    let mut grad = params.zeros_like();
    let mut loss = 0.0;
    let mut count = 0;
    for p in parts {
        let (l, n, g) = p?;
        loss += l;
        count += n;
        for (a, b) in grad.data.iter_mut().zip(&g.data) {
            *a += b;
        }
    }
    if count > 0 {
        let inv = 1.0 / count as f64;
        loss *= inv;
        grad.data.iter_mut().for_each(|x| *x *= inv);
    }
    Ok((loss, grad))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochLog {
    pub epoch: usize,
    /// Mean training loss after the epoch, over all samples.
    pub loss: f64,
    pub f1: f64,
    pub seconds: f64,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub params: ParamStore,
    pub best_epoch: usize,
    pub best_f1: f64,
    /// Entry 0 evaluates the initialization.
    pub log: Vec<EpochLog>,
}

/// Loss and F1 (predicting optimal when the score is positive) over all
/// items.
pub fn evaluate(params: &ParamStore, items: &[TrainItem]) -> (f64, f64) {
    let parts: Vec<(f64, usize, usize, usize, usize)> = items
        .par_chunks(CHUNK)
        .map(|chunk| {
            let (mut loss, mut n, mut tp, mut fp, mut fneg) = (0.0, 0, 0, 0, 0);
            for item in chunk {
                let fwd = item.net.forward(params);
                for &(node, y, _) in &item.targets {
                    let z = params.readout(fwd.vector(node));
                    loss += bce_with_logits(z, y);
                    n += 1;
                    match (z > 0.0, y > 0.5) {
                        (true, true) => tp += 1,
                        (true, false) => fp += 1,
                        (false, true) => fneg += 1,
                        (false, false) => {}
                    }
                }
            }
            (loss, n, tp, fp, fneg)
        })
        .collect();
    let (mut loss, mut n, mut tp, mut fp, mut fneg) = (0.0, 0, 0, 0, 0);
    for p in parts {
        loss += p.0;
        n += p.1;
        tp += p.2;
        fp += p.3;
        fneg += p.4;
    }
    let f1 = if tp + fp + fneg == 0 {
        1.0
    } else {
        2.0 * tp as f64 / (2 * tp + fp + fneg) as f64
    };
    (loss / n.max(1) as f64, f1)
}

struct Adam {
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
}

impl Adam {
    const B1: f64 = 0.9;
    const B2: f64 = 0.999;
    const EPS: f64 = 1e-8;

    fn step(&mut self, params: &mut [f64], grad: &[f64], lr: f64) {
        self.t += 1;
        let c1 = 1.0 - Self::B1.powi(self.t);
        let c2 = 1.0 - Self::B2.powi(self.t);
        for i in 0..params.len() {
            let g = grad[i];
            self.m[i] = Self::B1 * self.m[i] + (1.0 - Self::B1) * g;
            self.v[i] = Self::B2 * self.v[i] + (1.0 - Self::B2) * g * g;
            let mh = self.m[i] / c1;
            let vh = self.v[i] / c2;
            params[i] -= lr * mh / (vh.sqrt() + Self::EPS);
        }
    }
}

/// Adam over shuffled batches of whole states; keeps the parameters of the
/// epoch with the best F1 on the training items (earliest on ties).
pub fn train(
    ext: &ExtendedProgram,
    data: &Prepared,
    cfg: &TrainConfig,
) -> Result<TrainOutcome, LrnnError> {
    if data.items.is_empty() {
        return Err(LrnnError::EmptyDataset);
    }
    let mut params = ParamStore::init(ext, cfg.hidden, cfg.seed);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_add(1));
    let mut adam = Adam {
        m: vec![0.0; params.len()],
        v: vec![0.0; params.len()],
        t: 0,
    };
    let total: usize = data.items.iter().map(|i| i.targets.len()).sum();
    let batch = cfg.batch_for(total);
    let clock = Instant::now();
    let (loss0, f10) = evaluate(&params, &data.items);
    let mut log = vec![EpochLog {
        epoch: 0,
        loss: loss0,
        f1: f10,
        seconds: clock.elapsed().as_secs_f64(),
    }];
    let mut best = (f10, 0, params.clone());
    let mut order: Vec<usize> = (0..data.items.len()).collect();
    for epoch in 1..=cfg.epochs {
        order.shuffle(&mut rng);
        let mut start = 0;
        while start < order.len() {
            let mut end = start;
            let mut n = 0;
            while end < order.len() && n < batch {
                n += data.items[order[end]].targets.len();
                end += 1;
            }
            let items: Vec<&TrainItem> =
                order[start..end].iter().map(|&i| &data.items[i]).collect();
            let (_, grad) = loss_and_grad(&params, &items)?;
            adam.step(&mut params.data, &grad.data, cfg.lr);
            start = end;
        }
        let (loss, f1) = evaluate(&params, &data.items);
        log::info!("epoch {epoch}: loss {loss:.6} f1 {f1:.4}");
        log.push(EpochLog {
            epoch,
            loss,
            f1,
            seconds: clock.elapsed().as_secs_f64(),
        });
        if f1 > best.0 {
            best = (f1, epoch, params.clone());
        }
    }
    Ok(TrainOutcome {
        params: best.2,
        best_epoch: best.1,
        best_f1: best.0,
        log,
    })
}
