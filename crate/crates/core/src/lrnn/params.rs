use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{ExtendedProgram, LrnnError};

pub const PARAMS_VERSION: u32 = 1;
const FORMAT: &str = "bkplan-lrnn-params";

/// All learnable weights in one flat vector.
///
/// Layout: input embeddings (`H` each), then per rule the head matrix and one
/// matrix per positive body literal (`H×H`, row-major), then the readout `w`
/// and bias `b`.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamStore {
    pub hidden: usize,
    pub layers: usize,
    pub domain: String,
    inputs: Vec<String>,
    keys: Vec<String>,
    /// Per rule: offset and number of body matrices.
    rule_at: Vec<(usize, usize)>,
    w_at: usize,
    pub data: Vec<f64>,
}

pub struct RuleParams<'a> {
    data: &'a [f64],
    hh: usize,
}

impl<'a> RuleParams<'a> {
    pub fn head(&self) -> &'a [f64] {
        &self.data[..self.hh]
    }

    pub fn body(&self, l: usize) -> &'a [f64] {
        &self.data[(l + 1) * self.hh..(l + 2) * self.hh]
    }
}

pub struct RuleParamsMut<'a> {
    data: &'a mut [f64],
    hh: usize,
}

impl RuleParamsMut<'_> {
    pub fn head_mut(&mut self) -> &mut [f64] {
        &mut self.data[..self.hh]
    }

    pub fn body_mut(&mut self, l: usize) -> &mut [f64] {
        &mut self.data[(l + 1) * self.hh..(l + 2) * self.hh]
    }
}

impl ParamStore {
    /// Zero-filled store shaped for `ext`.
    pub fn zeros(ext: &ExtendedProgram, hidden: usize) -> Self {
        let preds = ext.program.preds();
        let hh = hidden * hidden;
        let mut at = ext.inputs.len() * hidden;
        let mut rule_at = Vec::new();
        for r in ext.program.rules() {
            let nb = r.body.iter().filter(|l| !l.negated).count();
            rule_at.push((at, nb));
            at += (nb + 1) * hh;
        }
        let w_at = at;
        ParamStore {
            hidden,
            layers: ext.layers,
            domain: ext.base.domain.name.clone(),
            inputs: ext
                .inputs
                .iter()
                .map(|&p| preds.name(p).to_string())
                .collect(),
            keys: (0..ext.program.rules().len())
                .map(|r| ext.rule_key(r))
                .collect(),
            rule_at,
            w_at,
            data: vec![0.0; w_at + hidden + 1],
        }
    }

    /// Seeded initialization: orthonormal embeddings (in blocks of `H`),
    /// everything else uniform in `[-1/√H, 1/√H]`, zero bias.
    pub fn init(ext: &ExtendedProgram, hidden: usize, seed: u64) -> Self {
        let mut p = Self::zeros(ext, hidden);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let h = hidden;
        let n = p.inputs.len();
        for block in (0..n).step_by(h.max(1)) {
            let end = (block + h).min(n);
            let mut basis: Vec<Vec<f64>> = Vec::new();
            for _ in block..end {
                loop {
                    let mut v: Vec<f64> = (0..h).map(|_| rng.gen_range(-1.0..1.0)).collect();
                    for b in &basis {
                        let d: f64 = v.iter().zip(b).map(|(x, y)| x * y).sum();
                        v.iter_mut().zip(b).for_each(|(x, y)| *x -= d * y);
                    }
                    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
                    if norm > 1e-6 {
                        v.iter_mut().for_each(|x| *x /= norm);
                        basis.push(v);
                        break;
                    }
                }
            }
            for (k, v) in basis.into_iter().enumerate() {
                p.embedding_mut(block + k).copy_from_slice(&v);
            }
        }
        let a = 1.0 / (h as f64).sqrt();
        let end = p.data.len() - 1;
        for x in &mut p.data[n * h..end] {
            *x = rng.gen_range(-a..a);
        }
        p
    }

    pub fn zeros_like(&self) -> Self {
        let mut z = self.clone();
        z.data.iter_mut().for_each(|x| *x = 0.0);
        z
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn num_rules(&self) -> usize {
        self.keys.len()
    }

    pub fn embedding(&self, i: usize) -> &[f64] {
        &self.data[i * self.hidden..(i + 1) * self.hidden]
    }

    pub fn embedding_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.hidden..(i + 1) * self.hidden]
    }

    pub fn rule(&self, r: usize) -> RuleParams<'_> {
        let (at, nb) = self.rule_at[r];
        let hh = self.hidden * self.hidden;
        RuleParams {
            data: &self.data[at..at + (nb + 1) * hh],
            hh,
        }
    }

    pub fn rule_mut(&mut self, r: usize) -> RuleParamsMut<'_> {
        let (at, nb) = self.rule_at[r];
        let hh = self.hidden * self.hidden;
        RuleParamsMut {
            data: &mut self.data[at..at + (nb + 1) * hh],
            hh,
        }
    }

    pub fn w(&self) -> &[f64] {
        &self.data[self.w_at..self.w_at + self.hidden]
    }

    pub fn w_mut(&mut self) -> &mut [f64] {
        let h = self.hidden;
        &mut self.data[self.w_at..self.w_at + h]
    }

    pub fn b(&self) -> f64 {
        self.data[self.w_at + self.hidden]
    }

    pub fn b_mut(&mut self) -> &mut f64 {
        let i = self.w_at + self.hidden;
        &mut self.data[i]
    }

    /// `w · x + b`
    pub fn readout(&self, x: &[f64]) -> f64 {
        self.w().iter().zip(x).map(|(a, b)| a * b).sum::<f64>() + self.b()
    }

    pub fn to_json(&self) -> String {
        let hh = self.hidden * self.hidden;
        let file = ParamFile {
            format: FORMAT.into(),
            version: PARAMS_VERSION,
            domain: self.domain.clone(),
            hidden: self.hidden,
            layers: self.layers,
            embeddings: self
                .inputs
                .iter()
                .enumerate()
                .map(|(i, name)| NamedVector {
                    predicate: name.clone(),
                    values: self.embedding(i).to_vec(),
                })
                .collect(),
            rules: self
                .keys
                .iter()
                .enumerate()
                .map(|(r, key)| {
                    let rp = self.rule(r);
                    let nb = self.rule_at[r].1;
                    RuleEntry {
                        rule: key.clone(),
                        head: rp.head().to_vec(),
                        body: (0..nb).map(|l| rp.body(l).to_vec()).collect(),
                    }
                })
                .collect(),
            w: self.w().to_vec(),
            b: self.b(),
        };
        debug_assert!(file.rules.iter().all(|r| r.head.len() == hh));
        let mut s = serde_json::to_string_pretty(&file).expect("parameter files serialize");
        s.push('\n');
        s
    }

    /// Parses a parameter file and lays it out for `ext`.
    pub fn from_json(text: &str, ext: &ExtendedProgram) -> Result<Self, LrnnError> {
        let probe: serde_json::Value =
            serde_json::from_str(text).map_err(|e| LrnnError::Format(e.to_string()))?;
        if probe.get("format").and_then(|f| f.as_str()) != Some(FORMAT) {
            return Err(LrnnError::Format("not a parameter file".into()));
        }
        let version = probe.get("version").and_then(|v| v.as_u64()).unwrap_or(0) as u32;
        if version != PARAMS_VERSION {
            return Err(LrnnError::Version { found: version });
        }
        let file: ParamFile =
            serde_json::from_value(probe).map_err(|e| LrnnError::Format(e.to_string()))?;
        if file.layers != ext.layers {
            return Err(LrnnError::Format(format!(
                "file has {} layers, program has {}",
                file.layers, ext.layers
            )));
        }
        let h = file.hidden;
        let mut p = Self::zeros(ext, h);
        let shape = |rule: &str, msg: String| LrnnError::Shape {
            rule: rule.to_string(),
            msg,
        };
        if file.embeddings.len() != p.inputs.len() {
            return Err(LrnnError::Format(format!(
                "{} embeddings for {} input predicates",
                file.embeddings.len(),
                p.inputs.len()
            )));
        }
        for (i, e) in file.embeddings.iter().enumerate() {
            if e.predicate != p.inputs[i] || e.values.len() != h {
                return Err(LrnnError::Format(format!(
                    "bad embedding for `{}`",
                    e.predicate
                )));
            }
            p.embedding_mut(i).copy_from_slice(&e.values);
        }
        for entry in &file.rules {
            if !p.keys.contains(&entry.rule) {
                return Err(shape(&entry.rule, "rule is not in the program".into()));
            }
        }
        for r in 0..p.keys.len() {
            let key = p.keys[r].clone();
            let entry = file
                .rules
                .iter()
                .find(|e| e.rule == key)
                .ok_or_else(|| shape(&key, "rule missing from parameter file".into()))?;
            let nb = p.rule_at[r].1;
            if entry.body.len() != nb {
                return Err(shape(
                    &key,
                    format!("{} body matrices, expected {nb}", entry.body.len()),
                ));
            }
            if entry.head.len() != h * h || entry.body.iter().any(|b| b.len() != h * h) {
                return Err(shape(&key, format!("matrices must have {} entries", h * h)));
            }
            let mut rp = p.rule_mut(r);
            rp.head_mut().copy_from_slice(&entry.head);
            for (l, b) in entry.body.iter().enumerate() {
                rp.body_mut(l).copy_from_slice(b);
            }
        }
        if file.w.len() != h {
            return Err(LrnnError::Format("readout has the wrong length".into()));
        }
        p.w_mut().copy_from_slice(&file.w);
        *p.b_mut() = file.b;
        if p.data.iter().any(|x| !x.is_finite()) {
            return Err(LrnnError::Format("non-finite parameter".into()));
        }
        Ok(p)
    }
}

#[derive(Serialize, Deserialize)]
struct NamedVector {
    predicate: String,
    values: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct RuleEntry {
    rule: String,
    /// Row-major `H×H`.
    head: Vec<f64>,
    body: Vec<Vec<f64>>,
}

#[derive(Serialize, Deserialize)]
struct ParamFile {
    format: String,
    version: u32,
    domain: String,
    hidden: usize,
    layers: usize,
    embeddings: Vec<NamedVector>,
    rules: Vec<RuleEntry>,
    w: Vec<f64>,
    b: f64,
}

pub fn save_params(store: &ParamStore, path: &Path) -> Result<(), LrnnError> {
    std::fs::write(path, store.to_json())
        .map_err(|e| LrnnError::Io(format!("{}: {e}", path.display())))
}

pub fn load_params(path: &Path, ext: &ExtendedProgram) -> Result<ParamStore, LrnnError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| LrnnError::Io(format!("{}: {e}", path.display())))?;
    ParamStore::from_json(&text, ext)
}
