//! The standard pp-reduction: replace every hyperedge of an instance by the
//! conjuncts of its relation's defining formula, introducing fresh
//! existential elements per hyperedge. Output elements and hyperedges carry
//! provenance back to the source.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::formula::{Atom, PpFormula, Var};
use crate::structure::{Signature, Structure, UnionFind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Provenance {
    /// Image of a source element.
    Open(usize),
    /// Fresh element for an existential variable of a definition, keyed by
    /// source hyperedge index and variable position.
    Existential { hyperedge: usize, position: usize },
    /// Copy of a template element adjoined by the core reduction.
    Adjoined(usize),
}

/// A reduced structure plus bookkeeping: where every element came from, and
/// which source hyperedge and conjunct produced each output hyperedge. A
/// single output hyperedge may have several sources after identification.
#[derive(Debug, Clone)]
pub struct ReductionOutput {
    pub structure: Structure,
    pub element_provenance: Vec<Provenance>,
    pub hyperedge_provenance: BTreeMap<(usize, Vec<usize>), Vec<(usize, usize)>>,
}

impl ReductionOutput {
    /// The output element representing a source element.
    pub fn open_element(&self, source: usize) -> Option<usize> {
        self.element_provenance
            .iter()
            .position(|p| *p == Provenance::Open(source))
    }
}

/// Collects the target signature from definition bodies: every symbol used in
/// any defining formula, with arity checked for consistency.
pub fn target_signature(defs: &BTreeMap<String, PpFormula>) -> Result<std::sync::Arc<Signature>> {
    let mut symbols: BTreeMap<String, usize> = BTreeMap::new();
    for f in defs.values() {
        for atom in f.atoms() {
            if let Atom::Rel { symbol, args } = atom {
                match symbols.get(symbol) {
                    Some(&a) if a != args.len() => {
                        return Err(Error::ArityMismatch(format!(
                            "symbol {symbol:?} used with arities {a} and {}",
                            args.len()
                        )));
                    }
                    _ => {
                        symbols.insert(symbol.clone(), args.len());
                    }
                }
            }
        }
    }
    Signature::new(symbols.into_iter().collect())
}

/// The standard pp-reduction of an instance along a definition set. Each
/// source hyperedge r(t) becomes the conjuncts of defs\[r\] instantiated at t
/// with hyperedge-local fresh elements; equality conjuncts identify elements,
/// applied as a final quotient.
pub fn pp_reduce(
    instance: &Structure,
    defs: &BTreeMap<String, PpFormula>,
) -> Result<ReductionOutput> {
    let sig = instance.signature();
    // Definitions must cover the instance signature with matching arities.
    let mut def_by_rel: Vec<&PpFormula> = Vec::with_capacity(sig.len());
    for (name, arity) in sig.symbols() {
        let def = defs
            .get(name)
            .ok_or_else(|| Error::MissingDefinition(name.to_string()))?;
        if def.free() != arity {
            return Err(Error::ArityMismatch(format!(
                "definition of {name:?} has {} free variables, symbol has arity {arity}",
                def.free()
            )));
        }
        def_by_rel.push(def);
    }
    let target_sig = target_signature(defs)?;

    // Pre-quotient universe: opens first, then per-hyperedge existentials in
    // hyperedge order.
    let opens = instance.universe();
    let hyperedges: Vec<(usize, Vec<usize>)> = instance
        .hyperedges()
        .map(|(r, t)| (r, t.clone()))
        .collect();
    let mut provenance: Vec<Provenance> = (0..opens).map(Provenance::Open).collect();
    let mut exist_base = Vec::with_capacity(hyperedges.len());
    for (h, (rel, _)) in hyperedges.iter().enumerate() {
        exist_base.push(provenance.len());
        for position in 0..def_by_rel[*rel].exists() {
            provenance.push(Provenance::Existential {
                hyperedge: h,
                position,
            });
        }
    }
    let total = provenance.len();

    let mut pre = Structure::new(target_sig, total);
    let mut pre_edges: Vec<((usize, Vec<usize>), (usize, usize))> = Vec::new();
    let mut uf = UnionFind::new(total.max(1));
    for (h, (rel, tuple)) in hyperedges.iter().enumerate() {
        let def = def_by_rel[*rel];
        let elem = |v: Var| -> usize {
            match v {
                Var::Free(i) => tuple[i],
                Var::Exist(j) => exist_base[h] + j,
            }
        };
        for (ci, atom) in def.atoms().iter().enumerate() {
            match atom {
                Atom::Eq(a, b) => uf.union(elem(*a), elem(*b)),
                Atom::Rel { symbol, args } => {
                    let t: Vec<usize> = args.iter().map(|&v| elem(v)).collect();
                    let rel_idx = pre.signature().lookup(symbol)?;
                    pre.add_by_index(rel_idx, t.clone())?;
                    pre_edges.push(((rel_idx, t), (h, ci)));
                }
            }
        }
    }

    if total == 0 {
        return Ok(ReductionOutput {
            structure: pre,
            element_provenance: provenance,
            hyperedge_provenance: BTreeMap::new(),
        });
    }

    let classes = uf.classes();
    let (structure, class_map) = pre.quotient(&classes)?;
    let element_provenance: Vec<Provenance> = classes
        .iter()
        .map(|class| provenance[class[0]])
        .collect();
    let mut hyperedge_provenance: BTreeMap<(usize, Vec<usize>), Vec<(usize, usize)>> =
        BTreeMap::new();
    for ((rel_idx, t), src) in pre_edges {
        let mapped: Vec<usize> = t.iter().map(|&e| class_map[e]).collect();
        hyperedge_provenance
            .entry((rel_idx, mapped))
            .or_default()
            .push(src);
    }
    Ok(ReductionOutput {
        structure,
        element_provenance,
        hyperedge_provenance,
    })
}
