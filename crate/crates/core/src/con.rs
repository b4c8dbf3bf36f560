//! Removal of constant (one-element unary) relations. An instance over the
//! constant expansion of a core template is rewritten to the base signature
//! by adjoining a diagram copy of the template and identifying each
//! constant-constrained element with its copy. A one-step reflection runs
//! first so that elements forced equal are merged before identification;
//! when two distinct constants end up on one element the output is a fixed
//! unsatisfiable structure instead.

use std::collections::BTreeMap;
use std::sync::Arc;

use crate::budget::Budget;
use crate::error::{Error, Result};
use crate::formula::{Atom, FormulaSet, PpFormula, Var, all_types, project_types};
use crate::poly;
use crate::reduce::Provenance;
use crate::reflect;
use crate::structure::{Signature, Structure, UnionFind};
use crate::util::k_subsets;

/// Name of the unary relation pinning template element `a`.
pub fn constant_name(template: &Structure, a: usize) -> String {
    format!("c{}", template.label(a))
}

/// Base symbols followed by one unary constant symbol per template element.
pub fn con_signature(template: &Structure) -> Result<Arc<Signature>> {
    let mut symbols: Vec<(String, usize)> = template
        .signature()
        .symbols()
        .map(|(name, arity)| (name.to_string(), arity))
        .collect();
    for a in 0..template.universe() {
        symbols.push((constant_name(template, a), 1));
    }
    Signature::new(symbols)
}

/// The template with each element additionally pinned by its constant.
pub fn con_template(template: &Structure) -> Result<Structure> {
    let sig = con_signature(template)?;
    let base = template.signature().len();
    let mut out = Structure::new(sig, template.universe());
    if let Some(labels) = template.labels() {
        out = out.with_labels(labels.to_vec())?;
    }
    for (rel, tuple) in template.hyperedges() {
        out.add_by_index(rel, tuple.clone())?;
    }
    for a in 0..template.universe() {
        out.add_by_index(base + a, vec![a])?;
    }
    Ok(out)
}

/// Result of rewriting a constant-expansion instance to the base signature.
#[derive(Debug, Clone)]
pub struct ConReduction {
    /// Output instance over the base signature.
    pub structure: Structure,
    /// Where each output element came from; identification classes that
    /// contain a copy element report as Adjoined.
    pub element_provenance: Vec<Provenance>,
    /// Final location of each source instance element; None in the conflict
    /// case, where the source is discarded.
    pub source_map: Vec<Option<usize>>,
    /// Final location of each template copy element.
    pub adjoined_map: Vec<usize>,
    /// True when two distinct constants were forced onto one element and the
    /// output is the canonical unsatisfiable structure.
    pub conflict: bool,
}

/// The fixed NO output: a copy of the template with its least non-hyperedge
/// added as an edge. Any homomorphism to the template would restrict to an
/// automorphism on the copy, and automorphisms preserve non-hyperedges, so
/// none exists (for any core with a missing tuple).
pub fn canonical_no(template: &Structure) -> Result<Structure> {
    let mut out = Structure::new(template.signature().clone(), template.universe());
    if let Some(labels) = template.labels() {
        out = out.with_labels(labels.to_vec())?;
    }
    for (rel, tuple) in template.hyperedges() {
        out.add_by_index(rel, tuple.clone())?;
    }
    for rel in 0..template.signature().len() {
        let arity = template.signature().arity(rel);
        for tuple in crate::util::k_tuples(template.universe(), arity) {
            if !template.contains(rel, &tuple) {
                out.add_by_index(rel, tuple)?;
                return Ok(out);
            }
        }
    }
    Err(Error::InvalidParameter(
        "every relation of the template is full; no unsatisfiable pattern exists".into(),
    ))
}

fn constant_conflict(structure: &Structure, base: usize, constants: usize) -> bool {
    let mut seen: BTreeMap<usize, usize> = BTreeMap::new();
    for a in 0..constants {
        for tuple in structure.tuples(base + a) {
            if let Some(&prior) = seen.get(&tuple[0]) {
                if prior != a {
                    return true;
                }
            }
            seen.insert(tuple[0], a);
        }
    }
    false
}

fn no_output(template: &Structure, source_elements: usize) -> Result<ConReduction> {
    let structure = canonical_no(template)?;
    let adjoined_map: Vec<usize> = (0..template.universe()).collect();
    Ok(ConReduction {
        structure,
        element_provenance: (0..template.universe()).map(Provenance::Adjoined).collect(),
        source_map: vec![None; source_elements],
        adjoined_map,
        conflict: true,
    })
}

/// Rewrites an instance over the constant expansion of `template` to an
/// instance over the base signature with the same satisfiability.
pub fn con_reduce(
    instance: &Structure,
    template: &Structure,
    budget: Budget,
) -> Result<ConReduction> {
    if template.universe() == 0 {
        return Err(Error::InvalidParameter(
            "constant removal needs a nonempty template".into(),
        ));
    }
    if !poly::is_core(template, budget)? {
        return Err(Error::InvalidParameter(
            "template is not a core; retract it first".into(),
        ));
    }
    let expanded = con_template(template)?;
    if !instance.same_signature(&expanded) {
        return Err(Error::SignatureMismatch(
            "instance is not over the constant expansion of the template".into(),
        ));
    }
    let base = template.signature().len();
    let constants = template.universe();

    if constant_conflict(instance, base, constants) {
        return no_output(template, instance.universe());
    }

    // Merge elements forced equal before identifying with the copy, so a
    // chain b ~ b' with b in one constant and b' in another is detected.
    let k = expanded.signature().max_arity().max(2);
    let fundamentals = FormulaSet::fundamental(expanded.signature());
    let reflected = reflect::one_step_reflection(instance, &expanded, k, &fundamentals, budget)?;
    let r = &reflected.structure;
    if constant_conflict(r, base, constants) {
        return no_output(template, instance.universe());
    }

    // Adjoin the copy and identify each constant-constrained element with
    // its named copy element.
    let n_r = r.universe();
    let total = n_r + template.universe();
    let mut uf = UnionFind::new(total);
    for a in 0..constants {
        for tuple in r.tuples(base + a) {
            uf.union(tuple[0], n_r + a);
        }
    }
    let classes = uf.classes();
    let mut class_map = vec![0usize; total];
    for (idx, class) in classes.iter().enumerate() {
        for &e in class {
            class_map[e] = idx;
        }
    }

    let mut labels = Vec::with_capacity(classes.len());
    let mut element_provenance = Vec::with_capacity(classes.len());
    for class in &classes {
        match class.iter().find(|&&e| e >= n_r) {
            Some(&copy) => {
                let a = copy - n_r;
                labels.push(template.label(a));
                element_provenance.push(Provenance::Adjoined(a));
            }
            None => {
                let least = class[0];
                labels.push(r.label(least));
                let b = (0..instance.universe())
                    .find(|&b| reflected.quotient_map[b] == least)
                    .expect("reflected element has a source");
                element_provenance.push(Provenance::Open(b));
            }
        }
    }

    let mut out =
        Structure::new(template.signature().clone(), classes.len()).with_labels(labels)?;
    for rel in 0..base {
        for tuple in r.tuples(rel) {
            out.add_by_index(rel, tuple.iter().map(|&e| class_map[e]).collect())?;
        }
        for tuple in template.tuples(rel) {
            out.add_by_index(rel, tuple.iter().map(|&e| class_map[n_r + e]).collect())?;
        }
    }

    let source_map = (0..instance.universe())
        .map(|b| Some(class_map[reflected.quotient_map[b]]))
        .collect();
    let adjoined_map = (0..template.universe())
        .map(|a| class_map[n_r + a])
        .collect();
    Ok(ConReduction {
        structure: out,
        element_provenance,
        source_map,
        adjoined_map,
        conflict: false,
    })
}

/// Rewrites one formula over the constant expansion into a base-signature
/// formula of arity k: conjoin the template diagram on fresh variables, turn
/// each constant atom c_a(v) into v = x_a, keep the type's p variables free
/// together with the selected diagram variables, and quantify the rest.
fn delta(
    sigma: &PpFormula,
    selected: &[usize],
    template: &Structure,
    constant_of: &BTreeMap<String, usize>,
) -> Result<PpFormula> {
    let p = sigma.free();
    let n = template.universe();
    let diagram_var = |a: usize| -> Var {
        match selected.binary_search(&a) {
            Ok(pos) => Var::Free(p + pos),
            Err(_) => {
                let below = selected.iter().filter(|&&s| s < a).count();
                Var::Exist(sigma.exists() + a - below)
            }
        }
    };
    let mut atoms = Vec::new();
    for atom in sigma.atoms() {
        match atom {
            Atom::Rel { symbol, args } => match constant_of.get(symbol) {
                Some(&a) => atoms.push(Atom::Eq(args[0], diagram_var(a))),
                None => atoms.push(atom.clone()),
            },
            Atom::Eq(u, v) => atoms.push(Atom::Eq(*u, *v)),
        }
    }
    for (rel, tuple) in template.hyperedges() {
        let symbol = template.signature().name(rel).to_string();
        atoms.push(Atom::Rel {
            symbol,
            args: tuple.iter().map(|&a| diagram_var(a)).collect(),
        });
    }
    PpFormula::new(p + selected.len(), sigma.exists() + n - selected.len(), atoms)
}

/// Builds the base-signature formula set matching a formula set over the
/// constant expansion: one delta per arity split p + (k-p), per (k-p)-subset
/// of the template, per type of the projected set at p variables. The type
/// enumeration is doubly exponential in the instantiated set size, so this
/// is a desk-scale constructor guarded by the budget.
pub fn build_g(
    formulas: &FormulaSet,
    template: &Structure,
    k: usize,
    budget: Budget,
) -> Result<FormulaSet> {
    let con_sig = con_signature(template)?;
    for member in formulas.members() {
        member.validate_against(&con_sig)?;
    }
    if k < template.signature().max_arity() {
        return Err(Error::InvalidParameter(format!(
            "arity {k} is below the base signature's maximum arity {}",
            template.signature().max_arity()
        )));
    }
    let constant_of: BTreeMap<String, usize> = (0..template.universe())
        .map(|a| (constant_name(template, a), a))
        .collect();
    let mut meter = budget.meter();
    let mut members = Vec::new();
    let lower = k.saturating_sub(template.universe());
    for p in lower..=k {
        let projected = project_types(formulas, k, p, budget)?;
        let types = all_types(&projected, p, budget)?;
        for subset in k_subsets(template.universe(), k - p) {
            for ty in &types {
                meter.tick()?;
                members.push(delta(&ty.as_formula()?, &subset, template, &constant_of)?);
            }
        }
    }
    FormulaSet::new(k, members)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solve;
    use crate::structure::PartialAssignment;
    use crate::templates::{clique, cycle};
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn unary_core() -> Structure {
        let sig = Signature::new(vec![("P".into(), 1), ("Q".into(), 1)]).unwrap();
        let mut s = Structure::new(sig, 2);
        s.add("P", vec![0]).unwrap();
        s.add("Q", vec![1]).unwrap();
        s
    }

    #[test]
    fn expansion_pins_every_element() {
        let t = con_template(&clique(3)).unwrap();
        assert_eq!(t.signature().len(), 4);
        assert_eq!(t.signature().name(1), "c0");
        // The expansion admits exactly one endomorphism.
        assert_eq!(solve::count_homomorphisms(&t, &t, Budget::default()).unwrap(), 1);
    }

    #[test]
    fn constant_instance_collapses_into_the_copy() {
        let k3 = clique(3);
        let sig = con_signature(&k3).unwrap();
        let mut inst = Structure::new(sig, 1);
        inst.add("c0", vec![0]).unwrap();
        let red = con_reduce(&inst, &k3, Budget::default()).unwrap();
        assert!(!red.conflict);
        assert_eq!(red.structure.universe(), 3);
        assert_eq!(red.source_map[0], Some(red.adjoined_map[0]));
        let e = red.structure.signature().lookup("E").unwrap();
        assert_eq!(red.structure.tuple_count(e), 6);
        assert!(solve::is_satisfiable(&red.structure, &k3, Budget::default()).unwrap());
        // The element must land on 0 under some solution, matching the pin.
        let mut seed = PartialAssignment::new();
        seed.set(red.source_map[0].unwrap(), 0);
        assert!(
            solve::find_homomorphism(&red.structure, &k3, &seed, Budget::default())
                .unwrap()
                .is_some()
        );
    }

    #[test]
    fn no_unary_hyperedges_gives_a_disjoint_union() {
        let k3 = clique(3);
        let sig = con_signature(&k3).unwrap();
        let mut inst = Structure::new(sig, 2);
        inst.add("E", vec![0, 1]).unwrap();
        inst.add("E", vec![1, 0]).unwrap();
        let red = con_reduce(&inst, &k3, Budget::default()).unwrap();
        assert!(!red.conflict);
        assert_eq!(red.structure.universe(), 5);
        let e = red.structure.signature().lookup("E").unwrap();
        assert_eq!(red.structure.tuple_count(e), 8);
        assert!(matches!(red.element_provenance[red.source_map[0].unwrap()], Provenance::Open(0)));
        assert!(matches!(
            red.element_provenance[red.adjoined_map[2]],
            Provenance::Adjoined(2)
        ));
    }

    #[test]
    fn empty_instance_leaves_only_the_copy() {
        let k3 = clique(3);
        let inst = Structure::new(con_signature(&k3).unwrap(), 0);
        let red = con_reduce(&inst, &k3, Budget::default()).unwrap();
        assert_eq!(red.structure.universe(), 3);
        assert!(solve::is_satisfiable(&red.structure, &k3, Budget::default()).unwrap());
    }

    #[test]
    fn direct_conflict_produces_the_canonical_no() {
        let k3 = clique(3);
        let sig = con_signature(&k3).unwrap();
        let mut inst = Structure::new(sig, 1);
        inst.add("c0", vec![0]).unwrap();
        inst.add("c1", vec![0]).unwrap();
        let red = con_reduce(&inst, &k3, Budget::default()).unwrap();
        assert!(red.conflict);
        assert_eq!(red.structure.universe(), 3);
        let e = red.structure.signature().lookup("E").unwrap();
        // Full K3 plus the least missing tuple, the loop at 0.
        assert_eq!(red.structure.tuple_count(e), 7);
        assert!(red.structure.contains(e, &[0, 0]));
        assert!(!solve::is_satisfiable(&red.structure, &k3, Budget::default()).unwrap());
    }

    #[test]
    fn reflection_exposes_a_hidden_conflict() {
        // A loop makes every pairwise assignment impossible over a loopless
        // template, so the reflection merges the loop element with the
        // others and the merged class carries two constants.
        let k3 = clique(3);
        let sig = con_signature(&k3).unwrap();
        let mut inst = Structure::new(sig, 2);
        inst.add("E", vec![0, 0]).unwrap();
        inst.add("c0", vec![0]).unwrap();
        inst.add("c1", vec![1]).unwrap();
        let red = con_reduce(&inst, &k3, Budget::default()).unwrap();
        assert!(red.conflict);
        assert!(!solve::is_satisfiable(&red.structure, &k3, Budget::default()).unwrap());
    }

    #[test]
    fn non_core_templates_are_rejected() {
        let c4 = cycle(4);
        let inst = Structure::new(con_signature(&c4).unwrap(), 0);
        assert!(matches!(
            con_reduce(&inst, &c4, Budget::default()),
            Err(Error::InvalidParameter(_))
        ));
    }

    #[test]
    fn satisfiability_matches_on_random_constant_instances() {
        let k3 = clique(3);
        let expanded = con_template(&k3).unwrap();
        let sig = con_signature(&k3).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..14 {
            let n = rng.gen_range(1..=4);
            let mut inst = Structure::new(sig.clone(), n);
            for u in 0..n {
                for v in 0..n {
                    if rng.gen_bool(0.25) {
                        inst.add("E", vec![u, v]).unwrap();
                    }
                }
            }
            for b in 0..n {
                if rng.gen_bool(0.4) {
                    let a = rng.gen_range(0..3);
                    inst.add_by_index(1 + a, vec![b]).unwrap();
                }
            }
            let source_sat = solve::is_satisfiable(&inst, &expanded, Budget::default()).unwrap();
            let red = con_reduce(&inst, &k3, Budget::default()).unwrap();
            let target_sat =
                solve::is_satisfiable(&red.structure, &k3, Budget::default()).unwrap();
            assert_eq!(source_sat, target_sat);
        }
    }

    #[test]
    fn rewritten_formulas_express_the_constants() {
        // Over a rigid two-element template the deltas built from a single
        // constant formula pin values in the base language.
        let t = unary_core();
        let sig = con_signature(&t).unwrap();
        let f = FormulaSet::mixed(vec![PpFormula::fundamental("c0", 1)]);
        for m in f.members() {
            m.validate_against(&sig).unwrap();
        }
        let g = build_g(&f, &t, 1, Budget::default()).unwrap();
        assert!(!g.is_empty());
        for member in g.members() {
            assert_eq!(member.free(), 1);
            member.validate_against(t.signature()).unwrap();
        }
        let truth_sets: Vec<Vec<usize>> = g
            .members()
            .iter()
            .map(|m| {
                (0..2)
                    .filter(|&v| m.holds(&t, &[v], Budget::default()).unwrap())
                    .collect()
            })
            .collect();
        // Some delta holds exactly at the pinned element; turning c0 into an
        // equality with the P-witness expresses membership in P.
        assert!(truth_sets.contains(&vec![0]));
        // Deltas from the empty type with a selected diagram variable hold
        // exactly at the other element as well.
        assert!(truth_sets.contains(&vec![1]));
    }

    #[test]
    fn rewriting_respects_the_arity_floor() {
        let k3 = clique(3);
        let f = FormulaSet::mixed(vec![PpFormula::fundamental("c0", 1)]);
        assert!(matches!(
            build_g(&f, &k3, 1, Budget::default()),
            Err(Error::InvalidParameter(_))
        ));
    }

    #[test]
    fn foreign_symbols_are_rejected() {
        let t = unary_core();
        let f = FormulaSet::mixed(vec![PpFormula::fundamental("Z", 1)]);
        assert!(build_g(&f, &t, 1, Budget::default()).is_err());
    }
}
