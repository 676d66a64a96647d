use rustc_hash::FxHashMap;

use super::params::ParamStore;
use super::ExtendedProgram;
use crate::datalog::{DatalogError, EvalOptions, FactSet, PredId, Value};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NodeKind {
    /// Input atom; carries the embedding at this position of `inputs`.
    Input(u32),
    Derived,
}

/// All substitutions of one rule deriving one atom.
#[derive(Debug, Clone)]
struct Group {
    rule: u32,
    /// Range into `sub_body`, `arity` node ids per substitution.
    start: u32,
    end: u32,
    arity: u32,
}

/// Computation graph induced by one input fact set.
#[derive(Debug, Clone)]
pub struct GroundedNet {
    pub model: FactSet,
    offsets: Vec<u32>,
    kinds: Vec<NodeKind>,
    /// Per node: range into `groups`.
    node_groups: Vec<(u32, u32)>,
    groups: Vec<Group>,
    sub_body: Vec<u32>,
    /// Derived nodes, every node after the nodes it is computed from.
    order: Vec<u32>,
}

impl GroundedNet {
    pub fn num_nodes(&self) -> usize {
        self.kinds.len()
    }

    pub fn kind(&self, node: u32) -> NodeKind {
        self.kinds[node as usize]
    }

    pub fn node(&self, pred: PredId, tuple: &[Value]) -> Option<u32> {
        let id = self.model.relation(pred)?.id_of(tuple)?;
        Some(self.offsets[pred as usize] + id)
    }

    /// Rules deriving `node`, with their substitution counts.
    pub fn derivations(&self, node: u32) -> Vec<(usize, usize)> {
        let (a, b) = self.node_groups[node as usize];
        self.groups[a as usize..b as usize]
            .iter()
            .map(|g| {
                let n = if g.arity == 0 {
                    (g.end - g.start) as usize
                } else {
                    ((g.end - g.start) / g.arity) as usize
                };
                (g.rule as usize, n)
            })
            .collect()
    }

    pub fn order(&self) -> &[u32] {
        &self.order
    }

    fn subs(&self, g: &Group) -> impl Iterator<Item = &[u32]> {
        let body = &self.sub_body[g.start as usize..g.end as usize];
        let arity = g.arity as usize;
        // rules without positive literals have one empty substitution per
        // entry; `start..end` then counts substitutions directly
        let count = if arity == 0 {
            body.len()
        } else {
            body.len() / arity
        };
        (0..count).map(move |i| {
            if arity == 0 {
                &body[0..0]
            } else {
                &body[i * arity..(i + 1) * arity]
            }
        })
    }
}

/// Evaluates `ext` on `facts` and records every substitution of every rule.
pub fn ground_net(
    ext: &ExtendedProgram,
    facts: &FactSet,
    opts: EvalOptions,
) -> Result<GroundedNet, DatalogError> {
    let program = &ext.program;
    let model = program.canonical_model_with(facts.clone(), opts)?;
    let npred = program.preds().len();
    let mut offsets = vec![0u32; npred + 1];
    for p in 0..npred {
        offsets[p + 1] = offsets[p] + model.count(p as PredId) as u32;
    }
    let n = offsets[npred] as usize;
    let mut kinds = vec![NodeKind::Derived; n];
    for (i, &p) in ext.inputs.iter().enumerate() {
        let (a, b) = (offsets[p as usize], offsets[p as usize + 1]);
        for k in a..b {
            kinds[k as usize] = NodeKind::Input(i as u32);
        }
    }

    // (node, rule) -> flat body ids
    let mut per_node: Vec<Vec<(u32, Vec<u32>)>> = vec![Vec::new(); n];
    for (ri, rule) in program.rules().iter().enumerate() {
        let pos_preds: Vec<PredId> = rule
            .body
            .iter()
            .filter(|l| !l.negated)
            .map(|l| l.atom.pred)
            .collect();
        let head_rel = rule.head.pred;
        let mut slot: FxHashMap<u32, usize> = FxHashMap::default();
        program.for_each_match(ri, &model, |binding, matched| {
            let head = program.head_of(ri, binding);
            let hid = model
                .relation(head_rel)
                .and_then(|r| r.id_of(&head))
                .expect("heads of satisfied bodies are in the model");
            let node = offsets[head_rel as usize] + hid;
            let list = &mut per_node[node as usize];
            let k = *slot.entry(node).or_insert_with(|| {
                list.push((ri as u32, Vec::new()));
                list.len() - 1
            });
            let body = &mut list[k].1;
            if pos_preds.is_empty() {
                body.push(u32::MAX);
            }
            for (&p, &id) in pos_preds.iter().zip(matched) {
                body.push(offsets[p as usize] + id);
            }
        });
    }

    let mut node_groups = Vec::with_capacity(n);
    let mut groups = Vec::new();
    let mut sub_body = Vec::new();
    for list in per_node {
        let g0 = groups.len() as u32;
        for (rule, body) in list {
            let arity = program.rules()[rule as usize]
                .body
                .iter()
                .filter(|l| !l.negated)
                .count() as u32;
            let start = sub_body.len() as u32;
            sub_body.extend(body);
            groups.push(Group {
                rule,
                start,
                end: sub_body.len() as u32,
                arity,
            });
        }
        node_groups.push((g0, groups.len() as u32));
    }
    let mut net = GroundedNet {
        model,
        offsets,
        kinds,
        node_groups,
        groups,
        sub_body,
        order: Vec::new(),
    };
    net.order = topological(&mut net);
    Ok(net)
}

/// Kahn's algorithm over derived nodes. Ground cycles (possible with
/// recursive rules) are cut by dropping substitutions that use atoms of
/// equal or greater derivation depth.
fn topological(net: &mut GroundedNet) -> Vec<u32> {
    let n = net.num_nodes();
    let deps = |net: &GroundedNet, v: usize| -> Vec<u32> {
        let (a, b) = net.node_groups[v];
        let mut d: Vec<u32> = Vec::new();
        for g in &net.groups[a as usize..b as usize] {
            if g.arity > 0 {
                d.extend_from_slice(&net.sub_body[g.start as usize..g.end as usize]);
            }
        }
        d.sort_unstable();
        d.dedup();
        d
    };
    let mut indeg = vec![0u32; n];
    let mut users: Vec<Vec<u32>> = vec![Vec::new(); n];
    for v in 0..n {
        if net.kinds[v] != NodeKind::Derived {
            continue;
        }
        for u in deps(net, v) {
            if net.kinds[u as usize] == NodeKind::Derived {
                indeg[v] += 1;
                users[u as usize].push(v as u32);
            }
        }
    }
    let mut order: Vec<u32> = (0..n as u32)
        .filter(|&v| net.kinds[v as usize] == NodeKind::Derived && indeg[v as usize] == 0)
        .collect();
    let mut head = 0;
    while head < order.len() {
        let u = order[head] as usize;
        head += 1;
        for &v in &users[u] {
            indeg[v as usize] -= 1;
            if indeg[v as usize] == 0 {
                order.push(v);
            }
        }
    }
    let derived = net
        .kinds
        .iter()
        .filter(|k| **k == NodeKind::Derived)
        .count();
    if order.len() == derived {
        return order;
    }
    cut_cycles(net);
    topological(net)
}

fn cut_cycles(net: &mut GroundedNet) {
    let n = net.num_nodes();
    let mut depth: Vec<u32> = (0..n)
        .map(|v| {
            if net.kinds[v] == NodeKind::Derived {
                u32::MAX
            } else {
                0
            }
        })
        .collect();
    loop {
        let mut changed = false;
        for v in 0..n {
            if net.kinds[v] != NodeKind::Derived {
                continue;
            }
            let (a, b) = net.node_groups[v];
            for g in &net.groups[a as usize..b as usize] {
                for sub in net.subs(g) {
                    let d = sub.iter().map(|&u| depth[u as usize]).max().unwrap_or(0);
                    if d != u32::MAX && d + 1 < depth[v] {
                        depth[v] = d + 1;
                        changed = true;
                    }
                }
            }
        }
        if !changed {
            break;
        }
    }
    let mut groups = Vec::new();
    let mut sub_body = Vec::new();
    let mut node_groups = Vec::with_capacity(n);
    for v in 0..n {
        let g0 = groups.len() as u32;
        let (a, b) = net.node_groups[v];
        for g in &net.groups[a as usize..b as usize] {
            let start = sub_body.len() as u32;
            for sub in net.subs(g) {
                if sub.iter().all(|&u| depth[u as usize] < depth[v]) {
                    if g.arity == 0 {
                        sub_body.push(u32::MAX);
                    }
                    sub_body.extend_from_slice(sub);
                }
            }
            if sub_body.len() as u32 > start {
                groups.push(Group {
                    rule: g.rule,
                    start,
                    end: sub_body.len() as u32,
                    arity: g.arity,
                });
            }
        }
        node_groups.push((g0, groups.len() as u32));
    }
    net.groups = groups;
    net.sub_body = sub_body;
    net.node_groups = node_groups;
}

/// Cached activations of one forward pass.
#[derive(Debug, Clone)]
pub struct Forward {
    pub hidden: usize,
    /// `num_nodes × H`.
    pub x: Vec<f64>,
    /// Per group: aggregated message and the winning substitution per
    /// component.
    agg: Vec<f64>,
    arg: Vec<u32>,
    /// Per group: offset of its messages in `msg`.
    msg_at: Vec<u32>,
    msg: Vec<f64>,
}

impl Forward {
    pub fn vector(&self, node: u32) -> &[f64] {
        let h = self.hidden;
        &self.x[node as usize * h..(node as usize + 1) * h]
    }
}

#[inline]
fn matvec_add(m: &[f64], x: &[f64], out: &mut [f64]) {
    let h = x.len();
    for (i, o) in out.iter_mut().enumerate() {
        let row = &m[i * h..(i + 1) * h];
        let mut s = 0.0;
        for j in 0..h {
            s += row[j] * x[j];
        }
        *o += s;
    }
}

/// `out += Mᵀ y`
#[inline]
fn matvec_t_add(m: &[f64], y: &[f64], out: &mut [f64]) {
    let h = y.len();
    for (i, &yi) in y.iter().enumerate() {
        if yi == 0.0 {
            continue;
        }
        let row = &m[i * h..(i + 1) * h];
        for j in 0..h {
            out[j] += row[j] * yi;
        }
    }
}

/// `G += y xᵀ`
#[inline]
fn outer_add(g: &mut [f64], y: &[f64], x: &[f64]) {
    let h = y.len();
    for (i, &yi) in y.iter().enumerate() {
        if yi == 0.0 {
            continue;
        }
        let row = &mut g[i * h..(i + 1) * h];
        for j in 0..h {
            row[j] += yi * x[j];
        }
    }
}

impl GroundedNet {
    pub fn forward(&self, params: &ParamStore) -> Forward {
        let h = params.hidden;
        let n = self.num_nodes();
        let mut x = vec![0.0; n * h];
        for v in 0..n {
            if let NodeKind::Input(i) = self.kinds[v] {
                x[v * h..(v + 1) * h].copy_from_slice(params.embedding(i as usize));
            }
        }
        let mut msg_at = vec![0u32; self.groups.len()];
        let mut total = 0u32;
        for (gi, g) in self.groups.iter().enumerate() {
            msg_at[gi] = total;
            total += self.subs(g).count() as u32;
        }
        let mut msg = vec![0.0; total as usize * h];
        let mut agg = vec![0.0; self.groups.len() * h];
        let mut arg = vec![0u32; self.groups.len() * h];
        let mut z = vec![0.0; h];
        let mut u = vec![0.0; h];
        for &v in &self.order {
            let v = v as usize;
            z.iter_mut().for_each(|e| *e = 0.0);
            let (a, b) = self.node_groups[v];
            for gi in a as usize..b as usize {
                let g = &self.groups[gi];
                let rp = params.rule(g.rule as usize);
                let ga = &mut agg[gi * h..(gi + 1) * h];
                let gg = &mut arg[gi * h..(gi + 1) * h];
                for (si, sub) in self.subs(g).enumerate() {
                    u.iter_mut().for_each(|e| *e = 0.0);
                    for (l, &body) in sub.iter().enumerate() {
                        let xb = &x[body as usize * h..(body as usize + 1) * h];
                        matvec_add(rp.body(l), xb, &mut u);
                    }
                    let m0 = (msg_at[gi] as usize + si) * h;
                    let m = &mut msg[m0..m0 + h];
                    for k in 0..h {
                        m[k] = u[k].tanh();
                        if si == 0 || m[k] > ga[k] {
                            ga[k] = m[k];
                            gg[k] = si as u32;
                        }
                    }
                }
                matvec_add(rp.head(), ga, &mut z);
            }
            for k in 0..h {
                x[v * h + k] = z[k].tanh();
            }
        }
        Forward {
            hidden: h,
            x,
            agg,
            arg,
            msg_at,
            msg,
        }
    }

    /// Accumulates into `grad` the gradient of `Σ_v ⟨dx_v, x_v⟩`, where
    /// `seeds` gives `dx` for some nodes.
    pub fn backward(
        &self,
        params: &ParamStore,
        fwd: &Forward,
        seeds: &[(u32, Vec<f64>)],
        grad: &mut ParamStore,
    ) {
        let h = params.hidden;
        let n = self.num_nodes();
        let mut dx = vec![0.0; n * h];
        let mut touched = vec![false; n];
        for (v, d) in seeds {
            let v = *v as usize;
            touched[v] = true;
            for k in 0..h {
                dx[v * h + k] += d[k];
            }
        }
        let mut dz = vec![0.0; h];
        let mut dagg = vec![0.0; h];
        let mut du = vec![0.0; h];
        for &v in self.order.iter().rev() {
            let v = v as usize;
            if !touched[v] {
                continue;
            }
            for k in 0..h {
                let xv = fwd.x[v * h + k];
                dz[k] = dx[v * h + k] * (1.0 - xv * xv);
            }
            let (a, b) = self.node_groups[v];
            for gi in a as usize..b as usize {
                let g = &self.groups[gi];
                let ri = g.rule as usize;
                let ga = &fwd.agg[gi * h..(gi + 1) * h];
                outer_add(grad.rule_mut(ri).head_mut(), &dz, ga);
                dagg.iter_mut().for_each(|e| *e = 0.0);
                matvec_t_add(params.rule(ri).head(), &dz, &mut dagg);
                let winners = &fwd.arg[gi * h..(gi + 1) * h];
                // visit each winning substitution once
                let mut subs: Vec<u32> = winners.to_vec();
                subs.sort_unstable();
                subs.dedup();
                for si in subs {
                    let m0 = (fwd.msg_at[gi] + si) as usize * h;
                    let m = &fwd.msg[m0..m0 + h];
                    let mut any = false;
                    for k in 0..h {
                        du[k] = if winners[k] == si {
                            dagg[k] * (1.0 - m[k] * m[k])
                        } else {
                            0.0
                        };
                        any |= du[k] != 0.0;
                    }
                    if !any {
                        continue;
                    }
                    let at = g.start as usize + si as usize * g.arity as usize;
                    let sub = &self.sub_body[at..at + g.arity as usize];
                    for (l, &body) in sub.iter().enumerate() {
                        let bi = body as usize;
                        let xb = &fwd.x[bi * h..(bi + 1) * h];
                        outer_add(grad.rule_mut(ri).body_mut(l), &du, xb);
                        matvec_t_add(params.rule(ri).body(l), &du, &mut dx[bi * h..(bi + 1) * h]);
                        touched[bi] = true;
                    }
                }
            }
        }
        for v in 0..n {
            if let NodeKind::Input(i) = self.kinds[v] {
                if touched[v] {
                    let e = grad.embedding_mut(i as usize);
                    for k in 0..h {
                        e[k] += dx[v * h + k];
                    }
                }
            }
        }
    }
}
