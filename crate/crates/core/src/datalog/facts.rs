use std::fmt;

use rustc_hash::FxHashMap;
use smallvec::SmallVec;

use super::{PredId, Value};

type Key = SmallVec<[Value; 4]>;

/// Tuples of one predicate, append-only, with per-position hash indexes.
///
/// Tuple ids are dense and reflect insertion order; evaluation relies on
/// that to express deltas as id ranges.
#[derive(Clone, Default)]
pub struct Relation {
    arity: usize,
    len: usize,
    data: Vec<Value>,
    lookup: FxHashMap<Key, u32>,
    index: Vec<FxHashMap<Value, Vec<u32>>>,
}

impl Relation {
    pub fn new(arity: usize) -> Self {
        Relation {
            arity,
            len: 0,
            data: Vec::new(),
            lookup: FxHashMap::default(),
            index: vec![FxHashMap::default(); arity],
        }
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn tuple(&self, id: u32) -> &[Value] {
        let i = id as usize * self.arity;
        &self.data[i..i + self.arity]
    }

    pub fn iter(&self) -> impl Iterator<Item = &[Value]> {
        (0..self.len as u32).map(move |i| self.tuple(i))
    }

    pub fn id_of(&self, tuple: &[Value]) -> Option<u32> {
        self.lookup.get(tuple).copied()
    }

    pub fn contains(&self, tuple: &[Value]) -> bool {
        self.lookup.contains_key(tuple)
    }

    /// Ids of tuples with `value` at `pos`, ascending.
    pub fn with_value(&self, pos: usize, value: Value) -> &[u32] {
        self.index[pos].get(&value).map_or(&[], Vec::as_slice)
    }

    /// Inserts `tuple`; returns its id and whether it was new.
    pub fn insert(&mut self, tuple: &[Value]) -> (u32, bool) {
        debug_assert_eq!(tuple.len(), self.arity);
        if let Some(&id) = self.lookup.get(tuple) {
            return (id, false);
        }
        let id = self.len as u32;
        self.data.extend_from_slice(tuple);
        self.lookup.insert(Key::from_slice(tuple), id);
        for (pos, &v) in tuple.iter().enumerate() {
            self.index[pos].entry(v).or_default().push(id);
        }
        self.len += 1;
        (id, true)
    }
}

/// A set of ground atoms, grouped per predicate.
#[derive(Clone, Default)]
pub struct FactSet {
    relations: Vec<Option<Relation>>,
    total: usize,
}

impl FactSet {
    pub fn new() -> Self {
        Self::default()
    }

    /// Inserts `pred(tuple)`. Panics if `pred` was previously used with a
    /// different arity.
    pub fn insert(&mut self, pred: PredId, tuple: &[Value]) -> bool {
        self.insert_with_id(pred, tuple).1
    }

    pub fn insert_with_id(&mut self, pred: PredId, tuple: &[Value]) -> (u32, bool) {
        let rel = self.relation_mut(pred, tuple.len());
        assert_eq!(rel.arity(), tuple.len(), "arity clash for predicate {pred}");
        let (id, new) = rel.insert(tuple);
        if new {
            self.total += 1;
        }
        (id, new)
    }

    pub(crate) fn relation_mut(&mut self, pred: PredId, arity: usize) -> &mut Relation {
        let p = pred as usize;
        if self.relations.len() <= p {
            self.relations.resize_with(p + 1, || None);
        }
        self.relations[p].get_or_insert_with(|| Relation::new(arity))
    }

    pub fn relation(&self, pred: PredId) -> Option<&Relation> {
        self.relations.get(pred as usize).and_then(Option::as_ref)
    }

    pub fn contains(&self, pred: PredId, tuple: &[Value]) -> bool {
        self.relation(pred).is_some_and(|r| r.contains(tuple))
    }

    pub fn count(&self, pred: PredId) -> usize {
        self.relation(pred).map_or(0, Relation::len)
    }

    pub fn len(&self) -> usize {
        self.total
    }

    pub fn is_empty(&self) -> bool {
        self.total == 0
    }

    /// Number of predicate slots (max pred id + 1).
    pub fn pred_slots(&self) -> usize {
        self.relations.len()
    }

    /// All atoms, predicate by predicate, in insertion order.
    pub fn iter(&self) -> impl Iterator<Item = (PredId, &[Value])> {
        self.relations
            .iter()
            .enumerate()
            .filter_map(|(p, r)| r.as_ref().map(|r| (p as PredId, r)))
            .flat_map(|(p, r)| r.iter().map(move |t| (p, t)))
    }

    /// Canonical sorted listing, for order-insensitive comparison.
    pub fn sorted(&self) -> Vec<(PredId, Vec<Value>)> {
        let mut v: Vec<(PredId, Vec<Value>)> = self.iter().map(|(p, t)| (p, t.to_vec())).collect();
        v.sort_unstable();
        v
    }

    pub fn is_subset(&self, other: &FactSet) -> bool {
        self.iter().all(|(p, t)| other.contains(p, t))
    }
}

impl PartialEq for FactSet {
    fn eq(&self, other: &Self) -> bool {
        self.total == other.total && self.is_subset(other)
    }
}

impl Eq for FactSet {}

impl fmt::Debug for FactSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set()
            .entries(self.sorted().into_iter().map(|(p, t)| format!("{p}{t:?}")))
            .finish()
    }
}

impl FromIterator<(PredId, Vec<Value>)> for FactSet {
    fn from_iter<I: IntoIterator<Item = (PredId, Vec<Value>)>>(iter: I) -> Self {
        let mut fs = FactSet::new();
        for (p, t) in iter {
            fs.insert(p, &t);
        }
        fs
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn index_stays_consistent_with_tuples() {
        let mut r = Relation::new(2);
        assert_eq!(r.insert(&[1, 2]), (0, true));
        assert_eq!(r.insert(&[1, 3]), (1, true));
        assert_eq!(r.insert(&[1, 2]), (0, false));
        assert_eq!(r.with_value(0, 1), &[0, 1]);
        assert_eq!(r.with_value(1, 3), &[1]);
        assert!(r.with_value(1, 9).is_empty());
        assert_eq!(r.tuple(1), &[1, 3]);
    }

    #[test]
    fn nullary_relation_holds_one_tuple() {
        let mut fs = FactSet::new();
        assert!(fs.insert(0, &[]));
        assert!(!fs.insert(0, &[]));
        assert!(fs.contains(0, &[]));
        assert_eq!(fs.len(), 1);
    }

    #[test]
    fn equality_ignores_insertion_order() {
        let a: FactSet = vec![(0, vec![1]), (1, vec![2, 3])].into_iter().collect();
        let b: FactSet = vec![(1, vec![2, 3]), (0, vec![1])].into_iter().collect();
        assert_eq!(a, b);
        let c: FactSet = vec![(0, vec![1])].into_iter().collect();
        assert_ne!(a, c);
        assert!(c.is_subset(&a));
    }
}
