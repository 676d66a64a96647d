//! Labeled `(state, action, optimal?)` samples and their line-delimited
//! JSON file format.
//!
//! A file starts with a header line, followed by one line per task (its
//! problem text), one line per stored state, and one line per sample. States
//! are written once and referenced from samples by `(task, state)` index;
//! atoms and actions are written as predicate/schema indices of the header
//! tables with object indices of the task (objects sorted by name).

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{expand, oracle_distances, ExploreError};
use crate::planning::{Domain, GroundAtom, Problem, State, Task};

pub const DATASET_VERSION: u32 = 1;
/// At most this many tasks contribute samples per domain.
pub const MAX_TASKS: usize = 25;

const LAYOUT_NOTE: &str = "one record per (state, action) pair; states are stored once per task \
and referenced by index; the goal-annotated encoding is recomputed from the state and the task goal";

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("line {line}: {msg}")]
    Malformed { line: usize, msg: String },
    #[error("unsupported dataset version {found}")]
    Version { found: u32 },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DataState {
    /// `(predicate, object args)` pairs, ascending by atom id of the task.
    pub atoms: Vec<(u32, Vec<u32>)>,
    /// Optimal goal distance.
    pub dist: u32,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DataTask {
    pub problem: Problem,
    pub states: Vec<DataState>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Sample {
    pub task: u32,
    pub state: u32,
    pub schema: u32,
    pub args: Vec<u32>,
    pub label: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dataset {
    pub domain: String,
    pub predicates: Vec<(String, usize)>,
    pub actions: Vec<(String, usize)>,
    pub tasks: Vec<DataTask>,
    pub samples: Vec<Sample>,
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum Record {
    Header {
        version: u32,
        domain: String,
        predicates: Vec<(String, usize)>,
        actions: Vec<(String, usize)>,
        note: String,
    },
    Task {
        id: u32,
        problem: String,
    },
    State {
        task: u32,
        id: u32,
        atoms: Vec<(u32, Vec<u32>)>,
        dist: u32,
    },
    Sample {
        task: u32,
        state: u32,
        schema: u32,
        args: Vec<u32>,
        label: u8,
    },
}

impl Dataset {
    pub fn empty(domain: &Domain) -> Self {
        Dataset {
            domain: domain.name.clone(),
            predicates: domain
                .predicates
                .iter()
                .map(|p| (p.name.clone(), p.arity()))
                .collect(),
            actions: domain
                .actions
                .iter()
                .map(|a| (a.name.clone(), a.params.len()))
                .collect(),
            tasks: Vec::new(),
            samples: Vec::new(),
        }
    }

    pub fn positives(&self) -> usize {
        self.samples.iter().filter(|s| s.label).count()
    }

    /// Rebuilds the stored state against its task.
    pub fn state(&self, task: &Task, sample_task: u32, state: u32) -> State {
        let ds = &self.tasks[sample_task as usize].states[state as usize];
        State::from_atoms(
            task.num_atoms(),
            ds.atoms.iter().map(|(p, args)| {
                task.atom_id(&GroundAtom {
                    pred: *p,
                    args: args.iter().copied().collect(),
                })
                .expect("stored atom belongs to the task")
            }),
        )
    }

    /// Ground-action index of a sample in its task.
    pub fn action(&self, task: &Task, sample: &Sample) -> Option<usize> {
        task.action_id(sample.schema, &sample.args)
    }

    pub fn write_to<W: Write>(&self, mut w: W) -> Result<(), DatasetError> {
        let mut line = |r: &Record| -> Result<(), DatasetError> {
            serde_json::to_writer(&mut w, r).map_err(std::io::Error::from)?;
            w.write_all(b"\n")?;
            Ok(())
        };
        line(&Record::Header {
            version: DATASET_VERSION,
            domain: self.domain.clone(),
            predicates: self.predicates.clone(),
            actions: self.actions.clone(),
            note: LAYOUT_NOTE.to_string(),
        })?;
        for (i, t) in self.tasks.iter().enumerate() {
            line(&Record::Task {
                id: i as u32,
                problem: t.problem.to_string(),
            })?;
            for (j, s) in t.states.iter().enumerate() {
                line(&Record::State {
                    task: i as u32,
                    id: j as u32,
                    atoms: s.atoms.clone(),
                    dist: s.dist,
                })?;
            }
        }
        for s in &self.samples {
            line(&Record::Sample {
                task: s.task,
                state: s.state,
                schema: s.schema,
                args: s.args.clone(),
                label: u8::from(s.label),
            })?;
        }
        Ok(())
    }

    pub fn read_from<R: BufRead>(r: R) -> Result<Dataset, DatasetError> {
        let mut ds: Option<Dataset> = None;
        for (i, text) in r.lines().enumerate() {
            let line = i + 1;
            let text = text?;
            if text.trim().is_empty() {
                continue;
            }
            let bad = |msg: String| DatasetError::Malformed { line, msg };
            let rec: Record = serde_json::from_str(&text).map_err(|e| bad(e.to_string()))?;
            match (rec, ds.as_mut()) {
                (
                    Record::Header {
                        version,
                        domain,
                        predicates,
                        actions,
                        ..
                    },
                    None,
                ) => {
                    if version != DATASET_VERSION {
                        return Err(DatasetError::Version { found: version });
                    }
                    ds = Some(Dataset {
                        domain,
                        predicates,
                        actions,
                        tasks: Vec::new(),
                        samples: Vec::new(),
                    });
                }
                (Record::Header { .. }, Some(_)) => return Err(bad("second header".into())),
                (_, None) => return Err(bad("missing header".into())),
                (Record::Task { id, problem }, Some(d)) => {
                    if id as usize != d.tasks.len() {
                        return Err(bad(format!("task id {id} out of order")));
                    }
                    let problem = Problem::parse(&problem).map_err(|e| bad(e.to_string()))?;
                    d.tasks.push(DataTask {
                        problem,
                        states: Vec::new(),
                    });
                }
                (
                    Record::State {
                        task,
                        id,
                        atoms,
                        dist,
                    },
                    Some(d),
                ) => {
                    let t = d
                        .tasks
                        .get_mut(task as usize)
                        .ok_or_else(|| bad(format!("unknown task {task}")))?;
                    if id as usize != t.states.len() {
                        return Err(bad(format!("state id {id} out of order")));
                    }
                    t.states.push(DataState { atoms, dist });
                }
                (
                    Record::Sample {
                        task,
                        state,
                        schema,
                        args,
                        label,
                    },
                    Some(d),
                ) => {
                    let known = d
                        .tasks
                        .get(task as usize)
                        .is_some_and(|t| (state as usize) < t.states.len());
                    if !known {
                        return Err(bad(format!("unknown state {task}/{state}")));
                    }
                    if label > 1 {
                        return Err(bad(format!("label {label} is not 0 or 1")));
                    }
                    d.samples.push(Sample {
                        task,
                        state,
                        schema,
                        args,
                        label: label == 1,
                    });
                }
            }
        }
        ds.ok_or(DatasetError::Malformed {
            line: 1,
            msg: "empty file".into(),
        })
    }
}

pub fn write_dataset(ds: &Dataset, path: &Path) -> Result<(), DatasetError> {
    let mut w = BufWriter::new(File::create(path)?);
    ds.write_to(&mut w)?;
    w.flush()?;
    Ok(())
}

pub fn read_dataset(path: &Path) -> Result<Dataset, DatasetError> {
    Dataset::read_from(BufReader::new(File::open(path)?))
}

/// Expands each task, labels every applicable action of every solvable
/// non-goal state, and keeps the first [`MAX_TASKS`] tasks that fit the
/// budget. Tasks over budget are skipped with a warning.
pub fn label_dataset(domain: &Domain, tasks: &[(Problem, Task)], budget: usize) -> Dataset {
    let mut ds = Dataset::empty(domain);
    for (problem, task) in tasks {
        if ds.tasks.len() == MAX_TASKS {
            break;
        }
        let space = match expand(task, budget) {
            Ok(s) => s,
            Err(e @ ExploreError::Budget { .. }) => {
                log::warn!("skipping task: {e}");
                continue;
            }
        };
        let dist = oracle_distances(&space);
        let ti = ds.tasks.len() as u32;
        let mut states = Vec::new();
        for (s, d) in dist.iter().enumerate() {
            let Some(d) = *d else { continue };
            if d == 0 {
                continue;
            }
            let si = states.len() as u32;
            let st = &space.states[s];
            states.push(DataState {
                atoms: st
                    .atoms()
                    .map(|a| {
                        let g = task.atom(a);
                        (g.pred, g.args.to_vec())
                    })
                    .collect(),
                dist: d,
            });
            for &(a, t) in &space.edges[s] {
                let action = &task.actions()[a];
                ds.samples.push(Sample {
                    task: ti,
                    state: si,
                    schema: action.schema,
                    args: action.args.clone(),
                    label: dist[t as usize].is_some_and(|e| e + 1 == d),
                });
            }
        }
        ds.tasks.push(DataTask {
            problem: problem.clone(),
            states,
        });
    }
    ds
}
