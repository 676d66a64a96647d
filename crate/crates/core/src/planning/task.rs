use std::fmt;
use std::sync::Arc;

use fixedbitset::FixedBitSet;
use rustc_hash::FxHashMap;
use smallvec::SmallVec;

use super::pddl::{Domain, Fact, Problem, SchemaAtom, Term, TypeId};
use super::PlanningError;

pub type ObjId = u32;
pub type AtomId = u32;

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct GroundAtom {
    pub pred: u32,
    pub args: SmallVec<[ObjId; 4]>,
}

/// A set of ground atoms of one task, as a bitset over its atom table.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct State(FixedBitSet);

impl State {
    pub fn empty(num_atoms: usize) -> Self {
        State(FixedBitSet::with_capacity(num_atoms))
    }

    pub fn from_atoms(num_atoms: usize, atoms: impl IntoIterator<Item = AtomId>) -> Self {
        let mut s = Self::empty(num_atoms);
        for a in atoms {
            s.0.insert(a as usize);
        }
        s
    }

    pub fn contains(&self, a: AtomId) -> bool {
        self.0.contains(a as usize)
    }

    pub fn insert(&mut self, a: AtomId) {
        self.0.insert(a as usize);
    }

    pub fn remove(&mut self, a: AtomId) {
        self.0.set(a as usize, false);
    }

    /// Atom ids in ascending order.
    pub fn atoms(&self) -> impl Iterator<Item = AtomId> + '_ {
        self.0.ones().map(|i| i as AtomId)
    }

    pub fn len(&self) -> usize {
        self.0.count_ones(..)
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_clear()
    }

    pub fn is_superset_of(&self, atoms: &[AtomId]) -> bool {
        atoms.iter().all(|&a| self.contains(a))
    }
}

impl fmt::Debug for State {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.atoms()).finish()
    }
}

/// `g ⊆ s`.
pub fn is_goal(s: &State, goal: &[AtomId]) -> bool {
    s.is_superset_of(goal)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GroundAction {
    pub schema: u32,
    pub args: Vec<ObjId>,
    pub pre: Vec<AtomId>,
    pub neg_pre: Vec<AtomId>,
    pub add: Vec<AtomId>,
    pub del: Vec<AtomId>,
}

impl GroundAction {
    pub fn applicable(&self, s: &State) -> bool {
        s.is_superset_of(&self.pre) && !self.neg_pre.iter().any(|&a| s.contains(a))
    }

    /// Successor state, deletes first. Does not check applicability.
    pub fn apply_unchecked(&self, s: &State) -> State {
        let mut next = s.clone();
        for &a in &self.del {
            next.remove(a);
        }
        for &a in &self.add {
            next.insert(a);
        }
        next
    }
}

/// A grounded planning task. Objects are sorted by name, so ids order
/// lexicographically; ground actions are sorted by schema name, then binding.
#[derive(Debug, Clone)]
pub struct Task {
    domain: Arc<Domain>,
    name: String,
    objects: Vec<(String, TypeId)>,
    object_index: FxHashMap<String, ObjId>,
    atoms: Vec<GroundAtom>,
    atom_index: FxHashMap<GroundAtom, AtomId>,
    init: State,
    goal: Vec<AtomId>,
    actions: Vec<GroundAction>,
    action_index: FxHashMap<(u32, Vec<ObjId>), usize>,
}

impl Task {
    pub fn parse(domain: Arc<Domain>, src: &str) -> Result<Task, PlanningError> {
        Task::new(domain, &Problem::parse(src)?)
    }

    pub fn new(domain: Arc<Domain>, problem: &Problem) -> Result<Task, PlanningError> {
        let mut objects: Vec<(String, TypeId)> = domain.constants.clone();
        for (name, tname) in &problem.objects {
            let t = domain
                .types
                .get(tname)
                .ok_or_else(|| PlanningError::Undeclared {
                    kind: "type",
                    name: tname.clone(),
                })?;
            if let Some((_, prev)) = objects.iter().find(|(n, _)| n == name) {
                if *prev != t {
                    return Err(PlanningError::Duplicate { name: name.clone() });
                }
                continue;
            }
            objects.push((name.clone(), t));
        }
        objects.sort();
        if let Some(w) = objects.windows(2).find(|w| w[0].0 == w[1].0) {
            return Err(PlanningError::Duplicate {
                name: w[0].0.clone(),
            });
        }
        let object_index = objects
            .iter()
            .enumerate()
            .map(|(i, (n, _))| (n.clone(), i as ObjId))
            .collect();
        let mut task = Task {
            domain,
            name: problem.name.clone(),
            objects,
            object_index,
            atoms: Vec::new(),
            atom_index: FxHashMap::default(),
            init: State::empty(0),
            goal: Vec::new(),
            actions: Vec::new(),
            action_index: FxHashMap::default(),
        };
        let init: Vec<AtomId> = problem
            .init
            .iter()
            .map(|f| task.resolve_fact(f).map(|g| task.intern(g)))
            .collect::<Result<_, _>>()?;
        let mut goal: Vec<AtomId> = problem
            .goal
            .iter()
            .map(|f| task.resolve_fact(f).map(|g| task.intern(g)))
            .collect::<Result<_, _>>()?;
        goal.sort_unstable();
        goal.dedup();
        task.ground();
        task.init = State::from_atoms(task.atoms.len(), init);
        task.goal = goal;
        Ok(task)
    }

    fn intern(&mut self, atom: GroundAtom) -> AtomId {
        if let Some(&id) = self.atom_index.get(&atom) {
            return id;
        }
        let id = self.atoms.len() as AtomId;
        self.atom_index.insert(atom.clone(), id);
        self.atoms.push(atom);
        id
    }

    /// Checks a problem fact against the domain and resolves its names.
    pub fn resolve_fact(&self, f: &Fact) -> Result<GroundAtom, PlanningError> {
        let d = &self.domain;
        let pred = d
            .predicate(&f.pred)
            .ok_or_else(|| PlanningError::Undeclared {
                kind: "predicate",
                name: f.pred.clone(),
            })?;
        let decl = &d.predicates[pred as usize];
        if decl.arity() != f.args.len() {
            return Err(PlanningError::Arity {
                pred: f.pred.clone(),
                expected: decl.arity(),
                found: f.args.len(),
            });
        }
        let mut args = SmallVec::new();
        for (a, &want) in f.args.iter().zip(&decl.params) {
            let o = self.object(a).ok_or_else(|| PlanningError::Undeclared {
                kind: "object",
                name: a.clone(),
            })?;
            let have = self.objects[o as usize].1;
            if !d.types.is_subtype(have, want) {
                return Err(PlanningError::TypeMismatch {
                    object: a.clone(),
                    expected: d.types.name(want).to_string(),
                    found: d.types.name(have).to_string(),
                });
            }
            args.push(o);
        }
        Ok(GroundAtom { pred, args })
    }

    fn ground(&mut self) {
        let domain = Arc::clone(&self.domain);
        let mut schemas: Vec<usize> = (0..domain.actions.len()).collect();
        schemas.sort_by(|&a, &b| domain.actions[a].name.cmp(&domain.actions[b].name));
        let mut consts: Vec<ObjId> = Vec::new();
        for (c, _) in &domain.constants {
            consts.push(self.object_index[c]);
        }
        for si in schemas {
            let schema = &domain.actions[si];
            let domains: Vec<Vec<ObjId>> = schema
                .params
                .iter()
                .map(|&(_, t)| self.objects_of_type(t))
                .collect();
            if domains.iter().any(Vec::is_empty) {
                continue;
            }
            let mut idx = vec![0usize; domains.len()];
            loop {
                let args: Vec<ObjId> = idx.iter().zip(&domains).map(|(&i, d)| d[i]).collect();
                let mut inst = |atoms: &[SchemaAtom]| -> Vec<AtomId> {
                    let mut v: Vec<AtomId> = atoms
                        .iter()
                        .map(|a| {
                            let g = GroundAtom {
                                pred: a.pred,
                                args: a
                                    .args
                                    .iter()
                                    .map(|t| match *t {
                                        Term::Param(p) => args[p as usize],
                                        Term::Const(c) => consts[c as usize],
                                    })
                                    .collect(),
                            };
                            self.intern(g)
                        })
                        .collect();
                    v.sort_unstable();
                    v.dedup();
                    v
                };
                let action = GroundAction {
                    schema: si as u32,
                    pre: inst(&schema.pre),
                    neg_pre: inst(&schema.neg_pre),
                    add: inst(&schema.add),
                    del: inst(&schema.del),
                    args,
                };
                self.action_index
                    .insert((si as u32, action.args.clone()), self.actions.len());
                self.actions.push(action);
                // odometer, last position fastest
                let mut k = idx.len();
                loop {
                    if k == 0 {
                        break;
                    }
                    k -= 1;
                    idx[k] += 1;
                    if idx[k] < domains[k].len() {
                        break;
                    }
                    idx[k] = 0;
                    if k == 0 {
                        k = usize::MAX;
                        break;
                    }
                }
                if k == usize::MAX || idx.is_empty() {
                    break;
                }
            }
        }
    }

    pub fn domain(&self) -> &Arc<Domain> {
        &self.domain
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn objects(&self) -> &[(String, TypeId)] {
        &self.objects
    }

    pub fn object(&self, name: &str) -> Option<ObjId> {
        self.object_index.get(name).copied()
    }

    pub fn object_name(&self, o: ObjId) -> &str {
        &self.objects[o as usize].0
    }

    pub fn object_type(&self, o: ObjId) -> TypeId {
        self.objects[o as usize].1
    }

    pub fn objects_of_type(&self, t: TypeId) -> Vec<ObjId> {
        (0..self.objects.len() as ObjId)
            .filter(|&o| self.domain.types.is_subtype(self.objects[o as usize].1, t))
            .collect()
    }

    pub fn num_atoms(&self) -> usize {
        self.atoms.len()
    }

    pub fn atom(&self, id: AtomId) -> &GroundAtom {
        &self.atoms[id as usize]
    }

    pub fn atom_id(&self, atom: &GroundAtom) -> Option<AtomId> {
        self.atom_index.get(atom).copied()
    }

    pub fn initial_state(&self) -> &State {
        &self.init
    }

    /// Goal atoms, ascending.
    pub fn goal(&self) -> &[AtomId] {
        &self.goal
    }

    pub fn is_goal(&self, s: &State) -> bool {
        is_goal(s, &self.goal)
    }

    /// Ground actions in canonical order.
    pub fn actions(&self) -> &[GroundAction] {
        &self.actions
    }

    pub fn action_id(&self, schema: u32, args: &[ObjId]) -> Option<usize> {
        self.action_index.get(&(schema, args.to_vec())).copied()
    }

    /// Indices of applicable actions, in canonical order.
    pub fn applicable(&self, s: &State) -> Vec<usize> {
        (0..self.actions.len())
            .filter(|&i| self.actions[i].applicable(s))
            .collect()
    }

    pub fn apply(&self, action: usize, s: &State) -> Result<State, PlanningError> {
        let a = &self.actions[action];
        if !a.applicable(s) {
            return Err(PlanningError::Inapplicable {
                action: self.action_string(action),
            });
        }
        Ok(a.apply_unchecked(s))
    }

    /// Builds a state from problem-style facts.
    pub fn state_from_facts(&self, facts: &[Fact]) -> Result<State, PlanningError> {
        let mut s = State::empty(self.atoms.len());
        for f in facts {
            let g = self.resolve_fact(f)?;
            let id = self.atom_id(&g).ok_or_else(|| PlanningError::Undeclared {
                kind: "atom",
                name: f.to_string(),
            })?;
            s.insert(id);
        }
        Ok(s)
    }

    /// `(pred a b)`.
    pub fn atom_string(&self, id: AtomId) -> String {
        let a = &self.atoms[id as usize];
        let mut s = format!("({}", self.domain.predicates[a.pred as usize].name);
        for &o in &a.args {
            s.push(' ');
            s.push_str(self.object_name(o));
        }
        s.push(')');
        s
    }

    /// `(schema a b)`, the plan-file form.
    pub fn action_string(&self, action: usize) -> String {
        let a = &self.actions[action];
        let mut s = format!("({}", self.domain.actions[a.schema as usize].name);
        for &o in &a.args {
            s.push(' ');
            s.push_str(self.object_name(o));
        }
        s.push(')');
        s
    }

    pub fn state_string(&self, s: &State) -> String {
        let parts: Vec<String> = s.atoms().map(|a| self.atom_string(a)).collect();
        format!("{{{}}}", parts.join(", "))
    }

    /// Looks up a ground action written as `(name obj ...)`.
    pub fn parse_action(&self, text: &str) -> Result<usize, PlanningError> {
        let inner = text
            .trim()
            .strip_prefix('(')
            .and_then(|t| t.strip_suffix(')'))
            .ok_or_else(|| PlanningError::Syntax {
                line: 1,
                col: 1,
                msg: format!("expected `(action args...)`, got `{text}`"),
            })?;
        let mut parts = inner.split_whitespace().map(str::to_lowercase);
        let name = parts.next().unwrap_or_default();
        let schema = self
            .domain
            .actions
            .iter()
            .position(|a| a.name == name)
            .ok_or_else(|| PlanningError::Undeclared {
                kind: "action",
                name: name.clone(),
            })?;
        let args: Vec<ObjId> = parts
            .map(|p| {
                self.object(&p).ok_or(PlanningError::Undeclared {
                    kind: "object",
                    name: p.clone(),
                })
            })
            .collect::<Result<_, _>>()?;
        self.action_id(schema as u32, &args)
            .ok_or_else(|| PlanningError::Undeclared {
                kind: "ground action",
                name: text.trim().to_string(),
            })
    }

    /// Parses a plan: one action per line, `;` comments ignored.
    pub fn parse_plan(&self, text: &str) -> Result<Vec<usize>, PlanningError> {
        let mut plan = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.split(';').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            plan.push(self.parse_action(line).map_err(|e| match e {
                PlanningError::Syntax { msg, .. } => PlanningError::Syntax {
                    line: i + 1,
                    col: 1,
                    msg,
                },
                other => other,
            })?);
        }
        Ok(plan)
    }

    pub fn plan_string(&self, plan: &[usize]) -> String {
        plan.iter().map(|&a| self.action_string(a) + "\n").collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const BW: &str = "(define (domain bw)
      (:predicates (on ?x ?y) (on_table ?x) (clear ?x) (holding ?x) (arm_empty))
      (:action pickup :parameters (?x)
        :precondition (and (clear ?x) (on_table ?x) (arm_empty))
        :effect (and (holding ?x) (not (clear ?x)) (not (on_table ?x)) (not (arm_empty))))
      (:action putdown :parameters (?x)
        :precondition (holding ?x)
        :effect (and (clear ?x) (on_table ?x) (arm_empty) (not (holding ?x)))))";

    fn task() -> Task {
        let d = Arc::new(Domain::parse(BW).unwrap());
        Task::parse(
            d,
            "(define (problem p) (:domain bw) (:objects b a)
              (:init (on_table a) (on_table b) (clear a) (clear b) (arm_empty))
              (:goal (and (holding a))))",
        )
        .unwrap()
    }

    #[test]
    fn objects_sorted_and_actions_canonical() {
        let t = task();
        assert_eq!(t.object_name(0), "a");
        let names: Vec<String> = (0..t.actions().len()).map(|i| t.action_string(i)).collect();
        assert_eq!(
            names,
            ["(pickup a)", "(pickup b)", "(putdown a)", "(putdown b)"]
        );
    }

    #[test]
    fn pickup_then_goal() {
        let t = task();
        let s0 = t.initial_state().clone();
        assert!(!t.is_goal(&s0));
        assert_eq!(t.applicable(&s0), vec![0, 1]);
        let s1 = t.apply(0, &s0).unwrap();
        assert!(t.is_goal(&s1));
        assert!(matches!(
            t.apply(1, &s1),
            Err(PlanningError::Inapplicable { .. })
        ));
        let plan = t.parse_plan("(pickup a)\n; done\n").unwrap();
        assert_eq!(plan, vec![0]);
    }

    #[test]
    fn undeclared_goal_object() {
        let d = Arc::new(Domain::parse(BW).unwrap());
        let r = Task::parse(
            d,
            "(define (problem p) (:domain bw) (:objects a) (:init) (:goal (and (clear c))))",
        );
        assert!(matches!(
            r,
            Err(PlanningError::Undeclared { kind: "object", .. })
        ));
    }
}
