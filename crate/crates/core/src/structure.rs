use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use crate::error::{Error, Result};

/// Relation symbols with fixed arities. Symbol order is the declaration order
/// and is part of the signature's identity: tuples, reports and JSON all
/// follow it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Signature {
    symbols: Vec<(String, usize)>,
    index: BTreeMap<String, usize>,
}

impl Signature {
    pub fn new(symbols: Vec<(String, usize)>) -> Result<Arc<Signature>> {
        let mut index = BTreeMap::new();
        for (i, (name, arity)) in symbols.iter().enumerate() {
            if *arity == 0 {
                return Err(Error::ArityMismatch(format!(
                    "symbol {name:?} declared with arity 0; relations must have arity >= 1"
                )));
            }
            if index.insert(name.clone(), i).is_some() {
                return Err(Error::SignatureMismatch(format!(
                    "duplicate relation symbol {name:?}"
                )));
            }
        }
        Ok(Arc::new(Signature { symbols, index }))
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    pub fn name(&self, idx: usize) -> &str {
        &self.symbols[idx].0
    }

    pub fn arity(&self, idx: usize) -> usize {
        self.symbols[idx].1
    }

    pub fn lookup(&self, name: &str) -> Result<usize> {
        self.index
            .get(name)
            .copied()
            .ok_or_else(|| Error::UnknownSymbol(name.to_string()))
    }

    pub fn arity_of(&self, name: &str) -> Result<usize> {
        Ok(self.arity(self.lookup(name)?))
    }

    pub fn max_arity(&self) -> usize {
        self.symbols.iter().map(|(_, a)| *a).max().unwrap_or(0)
    }

    pub fn symbols(&self) -> impl Iterator<Item = (&str, usize)> {
        self.symbols.iter().map(|(n, a)| (n.as_str(), *a))
    }
}

/// Finite relational structure: a universe `0..universe` and one tuple set
/// per signature symbol. Tuple sets are kept sorted, so all iteration is in
/// lexicographic order. Labels are display-only; every operation works on the
/// dense integer ids.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Structure {
    signature: Arc<Signature>,
    universe: usize,
    labels: Option<Vec<String>>,
    relations: Vec<BTreeSet<Vec<usize>>>,
}

impl Structure {
    pub fn new(signature: Arc<Signature>, universe: usize) -> Structure {
        let relations = vec![BTreeSet::new(); signature.len()];
        Structure {
            signature,
            universe,
            labels: None,
            relations,
        }
    }

    pub fn with_labels(mut self, labels: Vec<String>) -> Result<Structure> {
        if labels.len() != self.universe {
            return Err(Error::InvalidParameter(format!(
                "{} labels for a universe of {}",
                labels.len(),
                self.universe
            )));
        }
        self.labels = Some(labels);
        Ok(self)
    }

    pub fn signature(&self) -> &Arc<Signature> {
        &self.signature
    }

    pub fn universe(&self) -> usize {
        self.universe
    }

    pub fn labels(&self) -> Option<&[String]> {
        self.labels.as_deref()
    }

    pub fn label(&self, element: usize) -> String {
        match &self.labels {
            Some(ls) => ls[element].clone(),
            None => element.to_string(),
        }
    }

    /// Adds one tuple to the named relation. Rejects arity and range errors
    /// with the offending position spelled out.
    pub fn add(&mut self, symbol: &str, tuple: Vec<usize>) -> Result<()> {
        let idx = self.signature.lookup(symbol)?;
        self.add_by_index(idx, tuple)
    }

    pub fn add_by_index(&mut self, idx: usize, tuple: Vec<usize>) -> Result<()> {
        let arity = self.signature.arity(idx);
        if tuple.len() != arity {
            return Err(Error::ArityMismatch(format!(
                "relation {:?} expects arity {arity}, got a tuple of length {}",
                self.signature.name(idx),
                tuple.len()
            )));
        }
        for (pos, &v) in tuple.iter().enumerate() {
            if v >= self.universe {
                return Err(Error::out_of_range(
                    format!("relations.{}: position {pos}", self.signature.name(idx)),
                    v,
                    self.universe,
                ));
            }
        }
        self.relations[idx].insert(tuple);
        Ok(())
    }

    pub fn tuples(&self, idx: usize) -> impl Iterator<Item = &Vec<usize>> {
        self.relations[idx].iter()
    }

    pub fn tuple_count(&self, idx: usize) -> usize {
        self.relations[idx].len()
    }

    pub fn total_tuples(&self) -> usize {
        self.relations.iter().map(|r| r.len()).sum()
    }

    pub fn contains(&self, idx: usize, tuple: &[usize]) -> bool {
        self.relations[idx].contains(tuple)
    }

    /// All hyperedges as (relation index, tuple) pairs, relation-major, each
    /// relation in lexicographic tuple order.
    pub fn hyperedges(&self) -> impl Iterator<Item = (usize, &Vec<usize>)> {
        self.relations
            .iter()
            .enumerate()
            .flat_map(|(i, set)| set.iter().map(move |t| (i, t)))
    }

    pub fn same_signature(&self, other: &Structure) -> bool {
        Arc::ptr_eq(&self.signature, &other.signature) || *self.signature == *other.signature
    }

    /// Quotient by an explicit partition of the universe. Classes are
    /// renumbered in order of their least member; returns the quotient
    /// structure and the map old id -> class id. Tuples are rewritten
    /// classwise and deduplicated.
    pub fn quotient(&self, partition: &[Vec<usize>]) -> Result<(Structure, Vec<usize>)> {
        let mut seen = vec![false; self.universe];
        for class in partition {
            if class.is_empty() {
                return Err(Error::MalformedPartition("empty class".into()));
            }
            for &e in class {
                if e >= self.universe {
                    return Err(Error::out_of_range("partition element", e, self.universe));
                }
                if seen[e] {
                    return Err(Error::MalformedPartition(format!(
                        "element {e} appears in two classes"
                    )));
                }
                seen[e] = true;
            }
        }
        if let Some(missing) = seen.iter().position(|s| !s) {
            return Err(Error::MalformedPartition(format!(
                "element {missing} not covered"
            )));
        }

        // Order classes by least member so representatives are canonical.
        let mut classes: Vec<Vec<usize>> = partition.to_vec();
        for c in &mut classes {
            c.sort_unstable();
        }
        classes.sort();

        let mut class_map = vec![0usize; self.universe];
        for (ci, class) in classes.iter().enumerate() {
            for &e in class {
                class_map[e] = ci;
            }
        }

        let labels = self.labels.as_ref().map(|ls| {
            classes
                .iter()
                .map(|c| ls[c[0]].clone())
                .collect::<Vec<_>>()
        });
        let mut out = Structure::new(self.signature.clone(), classes.len());
        if let Some(ls) = labels {
            out = out.with_labels(ls)?;
        }
        for (idx, set) in self.relations.iter().enumerate() {
            for t in set {
                let img: Vec<usize> = t.iter().map(|&e| class_map[e]).collect();
                out.relations[idx].insert(img);
            }
        }
        Ok((out, class_map))
    }
}

/// Partial map from instance elements to template elements, kept sorted by
/// element id so iteration and comparison are deterministic.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord)]
pub struct PartialAssignment {
    entries: BTreeMap<usize, usize>,
}

impl PartialAssignment {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_pairs(pairs: impl IntoIterator<Item = (usize, usize)>) -> Self {
        PartialAssignment {
            entries: pairs.into_iter().collect(),
        }
    }

    pub fn set(&mut self, element: usize, value: usize) {
        self.entries.insert(element, value);
    }

    pub fn get(&self, element: usize) -> Option<usize> {
        self.entries.get(&element).copied()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn domain(&self) -> impl Iterator<Item = usize> + '_ {
        self.entries.keys().copied()
    }

    pub fn domain_vec(&self) -> Vec<usize> {
        self.entries.keys().copied().collect()
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.entries.iter().map(|(&k, &v)| (k, v))
    }

    pub fn check_ranges(&self, instance: &Structure, template: &Structure) -> Result<()> {
        for (e, v) in self.iter() {
            if e >= instance.universe() {
                return Err(Error::out_of_range("assignment domain", e, instance.universe()));
            }
            if v >= template.universe() {
                return Err(Error::out_of_range("assignment value", v, template.universe()));
            }
        }
        Ok(())
    }
}

impl FromIterator<(usize, usize)> for PartialAssignment {
    fn from_iter<T: IntoIterator<Item = (usize, usize)>>(iter: T) -> Self {
        PartialAssignment::from_pairs(iter)
    }
}

/// Total homomorphism from an instance to a template, with the list of
/// hyperedges that were checked to validate it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Homomorphism {
    pub map: Vec<usize>,
    pub checked: Vec<(usize, Vec<usize>)>,
}

impl Homomorphism {
    pub fn apply(&self, tuple: &[usize]) -> Vec<usize> {
        tuple.iter().map(|&e| self.map[e]).collect()
    }

    pub fn extends(&self, seed: &PartialAssignment) -> bool {
        seed.iter().all(|(e, v)| self.map.get(e) == Some(&v))
    }

    /// Re-checks validity directly against the pair of structures.
    pub fn is_valid(&self, instance: &Structure, template: &Structure) -> bool {
        if self.map.len() != instance.universe() {
            return false;
        }
        if self.map.iter().any(|&v| v >= template.universe()) {
            return false;
        }
        instance
            .hyperedges()
            .all(|(idx, t)| template.contains(idx, &self.apply(t)))
    }
}

/// Union-find over `0..n`, used wherever element classes get merged.
/// Representative of a class is always its least member.
#[derive(Debug, Clone)]
pub struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    pub fn new(n: usize) -> Self {
        UnionFind {
            parent: (0..n).collect(),
        }
    }

    pub fn find(&mut self, x: usize) -> usize {
        let mut root = x;
        while self.parent[root] != root {
            root = self.parent[root];
        }
        let mut cur = x;
        while self.parent[cur] != root {
            let next = self.parent[cur];
            self.parent[cur] = root;
            cur = next;
        }
        root
    }

    /// Merges the classes of `a` and `b`; the smaller representative wins.
    pub fn union(&mut self, a: usize, b: usize) {
        let ra = self.find(a);
        let rb = self.find(b);
        if ra == rb {
            return;
        }
        let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
        self.parent[hi] = lo;
    }

    pub fn same(&mut self, a: usize, b: usize) -> bool {
        self.find(a) == self.find(b)
    }

    /// Classes as sorted vectors, ordered by least member.
    pub fn classes(&mut self) -> Vec<Vec<usize>> {
        let n = self.parent.len();
        let mut by_root: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for x in 0..n {
            let r = self.find(x);
            by_root.entry(r).or_default().push(x);
        }
        by_root.into_values().collect()
    }
}
