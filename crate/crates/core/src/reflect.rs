//! Frozen tuples, reflections, implied constraints, and quasivariety
//! membership. A nonhyperedge is frozen when every compatible partial map on
//! its elements is forced into the template relation; reflection enlarges
//! relations by frozen tuples and collapses frozen equalities, repeating to a
//! fixpoint.

use std::collections::BTreeSet;

use crate::budget::Budget;
use crate::error::{Error, Result};
use crate::formula::FormulaSet;
use crate::solve;
use crate::structure::{PartialAssignment, Structure, UnionFind};
use crate::util::{k_tuples, tuple_rank};

/// Frozen nonhyperedges per relation, frozen equalities, and the equality
/// closure classes. Relations of arity above k are outside the test's
/// precondition and are left untouched.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FrozenReport {
    pub tuples: Vec<BTreeSet<Vec<usize>>>,
    /// Symmetric and reflexive: contains (b,b) for every element.
    pub equalities: BTreeSet<(usize, usize)>,
    /// Partition of the universe by the transitive closure of `equalities`,
    /// classes ordered by least member.
    pub classes: Vec<Vec<usize>>,
}

impl FrozenReport {
    /// True when nothing was frozen: no tuples and only reflexive equalities.
    pub fn is_trivial(&self) -> bool {
        self.tuples.iter().all(|t| t.is_empty()) && self.classes.iter().all(|c| c.len() == 1)
    }

    pub fn frozen_tuple_count(&self) -> usize {
        self.tuples.iter().map(|t| t.len()).sum()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReflectionResult {
    pub structure: Structure,
    /// Total map from the source universe onto the result universe.
    pub quotient_map: Vec<usize>,
    /// Number of frozen-tuple passes, counting the final pass that found
    /// nothing new.
    pub iterations: usize,
}

// Truth masks of the k-ary instantiated compatibility set over all k-tuples
// of one structure; member i of the set corresponds to bit i.
struct TruthTable {
    members: usize,
    by_rank: Vec<u128>,
}

fn truth_table(
    structure: &Structure,
    members: &[crate::formula::PpFormula],
    k: usize,
    budget: Budget,
) -> Result<TruthTable> {
    if members.len() > 128 {
        return Err(Error::BudgetExceeded);
    }
    let domain = k_tuples(structure.universe(), k);
    let mut meter = budget.meter();
    meter.charge((domain.len() * members.len().max(1)) as u64)?;
    let mut by_rank = vec![0u128; domain.len()];
    for (rank, tuple) in domain.iter().enumerate() {
        for (mi, m) in members.iter().enumerate() {
            if m.holds(structure, tuple, budget)? {
                by_rank[rank] |= 1 << mi;
            }
        }
    }
    Ok(TruthTable {
        members: members.len(),
        by_rank,
    })
}

/// Decides whether a map on the distinct elements of an n-tuple respects the
/// n-th projection of F, by the witness-extension criterion: every way of
/// padding a tuple over the domain out to length k with instance elements
/// must admit a template-side padding satisfying at least the same members.
struct ProjectionCompat<'a> {
    instance: &'a Structure,
    template: &'a Structure,
    k: usize,
    b_truth: TruthTable,
    a_truth: TruthTable,
}

impl<'a> ProjectionCompat<'a> {
    fn new(
        instance: &'a Structure,
        template: &'a Structure,
        k: usize,
        formulas: &FormulaSet,
        budget: Budget,
    ) -> Result<ProjectionCompat<'a>> {
        let fk = formulas.instantiate(k)?;
        let members = fk.members().to_vec();
        Ok(ProjectionCompat {
            instance,
            template,
            k,
            b_truth: truth_table(instance, &members, k, budget)?,
            a_truth: truth_table(template, &members, k, budget)?,
        })
    }

    /// domain: distinct elements (sorted); image: their values; n: the
    /// projection arity (arity of the relation under test), n <= k.
    fn compatible(&self, domain: &[usize], image: &[usize], n: usize) -> Result<bool> {
        debug_assert!(domain.len() <= n && n <= self.k);
        let b = self.instance.universe();
        let a = self.template.universe();
        if self.b_truth.members == 0 {
            return Ok(true);
        }
        for head in k_tuples(domain.len(), n) {
            for pad in k_tuples(b, self.k - n) {
                let mut src = Vec::with_capacity(self.k);
                src.extend(head.iter().map(|&i| domain[i]));
                src.extend(pad.iter().copied());
                let premise = self.b_truth.by_rank[tuple_rank(b, &src)];
                if premise == 0 {
                    continue;
                }
                let mut found = false;
                for apad in k_tuples(a, self.k - n) {
                    let mut dst = Vec::with_capacity(self.k);
                    dst.extend(head.iter().map(|&i| image[i]));
                    dst.extend(apad.iter().copied());
                    if self.a_truth.by_rank[tuple_rank(a, &dst)] & premise == premise {
                        found = true;
                        break;
                    }
                }
                if !found {
                    return Ok(false);
                }
            }
        }
        Ok(true)
    }
}

fn distinct_sorted(tuple: &[usize]) -> Vec<usize> {
    let mut d: Vec<usize> = tuple.to_vec();
    d.sort_unstable();
    d.dedup();
    d
}

/// Computes every frozen nonhyperedge and frozen equality of the instance
/// relative to the template. Relations of arity above k are skipped.
pub fn frozen_tuples(
    instance: &Structure,
    template: &Structure,
    k: usize,
    formulas: &FormulaSet,
    budget: Budget,
) -> Result<FrozenReport> {
    if !instance.same_signature(template) {
        return Err(Error::SignatureMismatch(
            "instance and template signatures differ".into(),
        ));
    }
    let b = instance.universe();
    let a = template.universe();
    let compat = ProjectionCompat::new(instance, template, k, formulas, budget)?;
    let mut meter = budget.meter();

    let sig = instance.signature().clone();
    let mut tuples: Vec<BTreeSet<Vec<usize>>> = vec![BTreeSet::new(); sig.len()];
    for rel in 0..sig.len() {
        let n = sig.arity(rel);
        if n > k {
            continue;
        }
        for tuple in k_tuples(b, n) {
            if instance.contains(rel, &tuple) {
                continue;
            }
            meter.tick()?;
            let domain = distinct_sorted(&tuple);
            let pos: Vec<usize> = tuple
                .iter()
                .map(|e| domain.binary_search(e).unwrap())
                .collect();
            let mut frozen = true;
            for image in k_tuples(a, domain.len()) {
                if !compat.compatible(&domain, &image, n)? {
                    continue;
                }
                let mapped: Vec<usize> = pos.iter().map(|&p| image[p]).collect();
                if !template.contains(rel, &mapped) {
                    frozen = false;
                    break;
                }
            }
            if frozen {
                tuples[rel].insert(tuple);
            }
        }
    }

    // Equality behaves as a logical binary relation; it needs k >= 2.
    let mut equalities: BTreeSet<(usize, usize)> = (0..b).map(|e| (e, e)).collect();
    if k >= 2 {
        for x in 0..b {
            for y in x + 1..b {
                meter.tick()?;
                let domain = [x, y];
                let mut frozen = true;
                for image in k_tuples(a, 2) {
                    if image[0] != image[1] && compat.compatible(&domain, &image, 2)? {
                        frozen = false;
                        break;
                    }
                }
                if frozen {
                    equalities.insert((x, y));
                    equalities.insert((y, x));
                }
            }
        }
    }

    let mut uf = UnionFind::new(b);
    for &(x, y) in &equalities {
        uf.union(x, y);
    }
    Ok(FrozenReport {
        tuples,
        equalities,
        classes: uf.classes(),
    })
}

fn apply_report(instance: &Structure, report: &FrozenReport) -> Result<(Structure, Vec<usize>)> {
    let mut enlarged = instance.clone();
    for (rel, frozen) in report.tuples.iter().enumerate() {
        for t in frozen {
            enlarged.add_by_index(rel, t.clone())?;
        }
    }
    enlarged.quotient(&report.classes)
}

/// One enlargement-and-quotient pass.
pub fn one_step_reflection(
    instance: &Structure,
    template: &Structure,
    k: usize,
    formulas: &FormulaSet,
    budget: Budget,
) -> Result<ReflectionResult> {
    let report = frozen_tuples(instance, template, k, formulas, budget)?;
    let (structure, quotient_map) = apply_report(instance, &report)?;
    Ok(ReflectionResult {
        structure,
        quotient_map,
        iterations: 1,
    })
}

/// Iterates one-step reflections until a pass freezes nothing. The recorded
/// iteration count includes that final empty pass, so an already-unfrozen
/// input reports 1.
pub fn full_reflection(
    instance: &Structure,
    template: &Structure,
    k: usize,
    formulas: &FormulaSet,
    budget: Budget,
) -> Result<ReflectionResult> {
    let mut current = instance.clone();
    let mut composite: Vec<usize> = (0..instance.universe()).collect();
    let mut iterations = 0usize;
    loop {
        iterations += 1;
        let report = frozen_tuples(&current, template, k, formulas, budget)?;
        if report.is_trivial() {
            return Ok(ReflectionResult {
                structure: current,
                quotient_map: composite,
                iterations,
            });
        }
        let (next, map) = apply_report(&current, &report)?;
        for slot in composite.iter_mut() {
            *slot = map[*slot];
        }
        current = next;
    }
}

/// Nonhyperedges and distinct pairs that no homomorphism separates. With no
/// homomorphism at all, everything is implied vacuously.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ImpliedConstraints {
    pub tuples: Vec<BTreeSet<Vec<usize>>>,
    /// Pairs (b, b') with b < b' that every homomorphism maps to one point.
    pub pairs: BTreeSet<(usize, usize)>,
}

impl ImpliedConstraints {
    pub fn is_empty(&self) -> bool {
        self.tuples.iter().all(|t| t.is_empty()) && self.pairs.is_empty()
    }

    pub fn implied_tuple_count(&self) -> usize {
        self.tuples.iter().map(|t| t.len()).sum()
    }
}

pub fn implied_constraints(
    instance: &Structure,
    template: &Structure,
    budget: Budget,
) -> Result<ImpliedConstraints> {
    if !instance.same_signature(template) {
        return Err(Error::SignatureMismatch(
            "instance and template signatures differ".into(),
        ));
    }
    let b = instance.universe();
    let sig = instance.signature().clone();
    let mut meter = budget.meter();

    // Start from every candidate and strike out whatever some homomorphism
    // separates.
    let mut tuples: Vec<BTreeSet<Vec<usize>>> = Vec::with_capacity(sig.len());
    for rel in 0..sig.len() {
        let n = sig.arity(rel);
        meter.charge(b.pow(n as u32) as u64)?;
        let mut set = BTreeSet::new();
        for t in k_tuples(b, n) {
            if !instance.contains(rel, &t) {
                set.insert(t);
            }
        }
        tuples.push(set);
    }
    let mut pairs: BTreeSet<(usize, usize)> = (0..b)
        .flat_map(|x| (x + 1..b).map(move |y| (x, y)))
        .collect();

    let iter = solve::homomorphisms(instance, template, &PartialAssignment::new(), budget)?;
    for h in iter {
        let h = h?;
        for rel in 0..sig.len() {
            tuples[rel].retain(|t| {
                let image: Vec<usize> = t.iter().map(|&e| h.map[e]).collect();
                template.contains(rel, &image)
            });
        }
        pairs.retain(|&(x, y)| h.map[x] == h.map[y]);
        if tuples.iter().all(|t| t.is_empty()) && pairs.is_empty() {
            break;
        }
    }
    Ok(ImpliedConstraints { tuples, pairs })
}

/// Quasivariety membership: no implied constraints at all.
pub fn in_quasivariety(instance: &Structure, template: &Structure, budget: Budget) -> Result<bool> {
    Ok(implied_constraints(instance, template, budget)?.is_empty())
}

/// Universal Horn class membership: quasivariety membership plus an actual
/// solution.
pub fn in_universal_horn(
    instance: &Structure,
    template: &Structure,
    budget: Budget,
) -> Result<bool> {
    if !in_quasivariety(instance, template, budget)? {
        return Ok(false);
    }
    Ok(solve::find_homomorphism(instance, template, &PartialAssignment::new(), budget)?.is_some())
}
