//! (j,j+1)-strategies: families of partial maps witnessing local
//! consistency. A strategy must be closed under restriction, consist of
//! partial homomorphisms, and allow every member on a small domain to grow
//! to any larger domain within the size bound. The candidate family built
//! from compatible assignments gives the separator semantics for templates
//! of bounded width: its strategy check accepts robust instances and fails
//! on unsatisfiable ones.

use std::collections::{BTreeMap, BTreeSet};

use crate::budget::Budget;
use crate::error::{Error, Result};
use crate::formula::FormulaSet;
use crate::robust::is_compatible;
use crate::structure::{PartialAssignment, Structure};
use crate::util::{k_subsets, k_tuples};

/// A family of partial maps with domains of size at most `j + 1`, keyed by
/// domain. The three strategy clauses are not enforced on construction;
/// [`check_strategy`] re-checks all of them.
///
/// The empty family satisfies every clause vacuously, so consumers that
/// need a witness of satisfiability ([`establish_consistency`],
/// [`ant_separator`]) treat emptiness as absence.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Strategy {
    j: usize,
    // Sorted domain -> set of value rows aligned with the domain order.
    family: BTreeMap<Vec<usize>, BTreeSet<Vec<usize>>>,
}

impl Strategy {
    pub fn new(j: usize, members: impl IntoIterator<Item = PartialAssignment>) -> Result<Strategy> {
        let mut family: BTreeMap<Vec<usize>, BTreeSet<Vec<usize>>> = BTreeMap::new();
        for m in members {
            let domain = m.domain_vec();
            if domain.len() > j + 1 {
                return Err(Error::out_of_range(
                    "strategy member domain",
                    domain.len(),
                    j + 2,
                ));
            }
            let values = domain.iter().map(|&d| m.get(d).unwrap()).collect();
            family.entry(domain).or_default().insert(values);
        }
        Ok(Strategy { j, family })
    }

    /// The strategy parameter: domains have at most `j + 1` elements.
    pub fn j(&self) -> usize {
        self.j
    }

    pub fn len(&self) -> usize {
        self.family.values().map(BTreeSet::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.family.values().all(BTreeSet::is_empty)
    }

    pub fn contains(&self, member: &PartialAssignment) -> bool {
        let domain = member.domain_vec();
        let values: Vec<usize> = domain.iter().map(|&d| member.get(d).unwrap()).collect();
        self.contains_row(&domain, &values)
    }

    fn contains_row(&self, domain: &[usize], values: &[usize]) -> bool {
        self.family
            .get(domain)
            .is_some_and(|rows| rows.contains(values))
    }

    /// Members in deterministic order: domains sorted, then value rows.
    pub fn members(&self) -> impl Iterator<Item = PartialAssignment> + '_ {
        self.family.iter().flat_map(|(domain, rows)| {
            rows.iter().map(move |row| {
                domain.iter().copied().zip(row.iter().copied()).collect()
            })
        })
    }
}

/// The clause a family fails, with the offending member as witness.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum StrategyViolation {
    /// The member does not preserve some hyperedge inside its domain.
    Homomorphism { member: PartialAssignment },
    /// The member's restriction to `missing` is not in the family.
    Restriction {
        member: PartialAssignment,
        missing: Vec<usize>,
    },
    /// No member on the domain enlarged by `added` restricts to this one.
    Extension {
        member: PartialAssignment,
        added: Vec<usize>,
    },
}

impl std::fmt::Display for StrategyViolation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            StrategyViolation::Homomorphism { member } => {
                write!(f, "homomorphism clause fails at {member:?}")
            }
            StrategyViolation::Restriction { member, missing } => {
                write!(
                    f,
                    "restriction clause fails at {member:?}: restriction to {missing:?} is missing"
                )
            }
            StrategyViolation::Extension { member, added } => {
                write!(
                    f,
                    "extension clause fails at {member:?}: no extension by {added:?}"
                )
            }
        }
    }
}

// Sorted union of a sorted domain with extra elements.
fn merged_domain(domain: &[usize], added: &[usize]) -> Vec<usize> {
    let mut out: Vec<usize> = domain.iter().chain(added.iter()).copied().collect();
    out.sort_unstable();
    out
}

/// Verifies the three strategy clauses exhaustively against the carried
/// parameter, in the order homomorphism, restriction, extension (members in
/// domain order within each pass), and reports the first violation. `None`
/// means the family is a (j,j+1)-strategy, though possibly the empty one.
pub fn check_strategy(
    strategy: &Strategy,
    instance: &Structure,
    template: &Structure,
) -> Result<Option<StrategyViolation>> {
    if !instance.same_signature(template) {
        return Err(Error::SignatureMismatch(
            "instance and template signatures differ".into(),
        ));
    }
    for member in strategy.members() {
        member.check_ranges(instance, template)?;
    }

    // Homomorphism: every hyperedge inside the domain must be preserved.
    for member in strategy.members() {
        for (rel, tuple) in instance.hyperedges() {
            let image: Option<Vec<usize>> = tuple.iter().map(|&e| member.get(e)).collect();
            if let Some(image) = image {
                if !template.contains(rel, &image) {
                    return Ok(Some(StrategyViolation::Homomorphism { member }));
                }
            }
        }
    }

    // Restriction: every subdomain of a member carries its restriction.
    for (domain, rows) in &strategy.family {
        for row in rows {
            for size in 0..domain.len() {
                for positions in k_subsets(domain.len(), size) {
                    let sub: Vec<usize> = positions.iter().map(|&p| domain[p]).collect();
                    let sub_row: Vec<usize> = positions.iter().map(|&p| row[p]).collect();
                    if !strategy.contains_row(&sub, &sub_row) {
                        let member = domain.iter().copied().zip(row.iter().copied()).collect();
                        return Ok(Some(StrategyViolation::Restriction {
                            member,
                            missing: sub,
                        }));
                    }
                }
            }
        }
    }

    // Extension: a member below the size bound must extend to any larger
    // domain still within it.
    let b = instance.universe();
    for (domain, rows) in &strategy.family {
        if domain.len() >= strategy.j + 1 {
            continue;
        }
        let outside: Vec<usize> = (0..b).filter(|e| !domain.contains(e)).collect();
        for row in rows {
            for extra in 1..=(strategy.j + 1 - domain.len()).min(outside.len()) {
                for positions in k_subsets(outside.len(), extra) {
                    let added: Vec<usize> = positions.iter().map(|&p| outside[p]).collect();
                    let big = merged_domain(domain, &added);
                    let extended = strategy.family.get(&big).is_some_and(|candidates| {
                        candidates.iter().any(|cand| {
                            domain.iter().zip(row.iter()).all(|(&d, &v)| {
                                cand[big.binary_search(&d).unwrap()] == v
                            })
                        })
                    });
                    if !extended {
                        let member = domain.iter().copied().zip(row.iter().copied()).collect();
                        return Ok(Some(StrategyViolation::Extension { member, added }));
                    }
                }
            }
        }
    }
    Ok(None)
}

/// All partial maps on at most `bound` elements that extend to an assignment
/// on min(k, |B|) elements compatible with the formula set, packaged as a
/// candidate (bound-1, bound)-strategy. With `bound = k` this is the family
/// whose strategy check characterizes level-k robustness on bounded-width
/// templates; the homomorphism clause is deliberately not enforced here, so
/// the check does real work even for the empty formula set.
///
/// The witness size min(k, |B|) keeps the family meaningful on instances
/// smaller than k (the empty instance keeps {empty map}); on such instances
/// robustness is vacuous and the strategy guarantee does not apply.
pub fn candidate_family(
    instance: &Structure,
    template: &Structure,
    k: usize,
    formulas: &FormulaSet,
    bound: usize,
    budget: Budget,
) -> Result<Strategy> {
    if !instance.same_signature(template) {
        return Err(Error::SignatureMismatch(
            "instance and template signatures differ".into(),
        ));
    }
    if bound == 0 || bound > k {
        return Err(Error::InvalidParameter(format!(
            "family size bound must lie in 1..=k, got {bound} with k = {k}"
        )));
    }
    let b = instance.universe();
    let a = template.universe();
    // On instances smaller than k the compatibility witness lives on all of
    // B; this also keeps the empty instance's family at {empty map}.
    let m = k.min(b);
    let mut meter = budget.meter();
    let mut members: Vec<PartialAssignment> = Vec::new();
    for size in 0..=bound.min(b) {
        for domain in k_subsets(b, size) {
            let outside: Vec<usize> = (0..b).filter(|e| !domain.contains(e)).collect();
            'rows: for row in k_tuples(a, size) {
                for positions in k_subsets(outside.len(), m - size) {
                    for extension in k_tuples(a, m - size) {
                        meter.tick()?;
                        let nu: PartialAssignment = domain
                            .iter()
                            .copied()
                            .zip(row.iter().copied())
                            .chain(
                                positions
                                    .iter()
                                    .map(|&p| outside[p])
                                    .zip(extension.iter().copied()),
                            )
                            .collect();
                        if is_compatible(instance, template, &nu, formulas, budget)? {
                            members.push(
                                domain.iter().copied().zip(row.iter().copied()).collect(),
                            );
                            continue 'rows;
                        }
                    }
                }
            }
        }
    }
    Strategy::new(bound - 1, members)
}

/// Greatest family of partial homomorphisms on at most `j + 1` elements
/// closed under restriction and extension, or `None` when the pruning
/// empties it. Emptiness certifies unsatisfiability; a surviving strategy
/// certifies satisfiability exactly when the template has width `j + 1`.
pub fn establish_consistency(
    instance: &Structure,
    template: &Structure,
    j: usize,
    budget: Budget,
) -> Result<Option<Strategy>> {
    if !instance.same_signature(template) {
        return Err(Error::SignatureMismatch(
            "instance and template signatures differ".into(),
        ));
    }
    if j == 0 {
        return Err(Error::InvalidParameter(
            "consistency parameter must be at least 1".into(),
        ));
    }
    let b = instance.universe();
    let a = template.universe();
    let mut meter = budget.meter();

    let mut family: BTreeMap<Vec<usize>, BTreeSet<Vec<usize>>> = BTreeMap::new();
    for size in 0..=(j + 1).min(b) {
        for domain in k_subsets(b, size) {
            let mut rows = BTreeSet::new();
            'rows: for row in k_tuples(a, size) {
                meter.tick()?;
                for (rel, tuple) in instance.hyperedges() {
                    let image: Option<Vec<usize>> = tuple
                        .iter()
                        .map(|&e| domain.binary_search(&e).ok().map(|p| row[p]))
                        .collect();
                    if let Some(image) = image {
                        if !template.contains(rel, &image) {
                            continue 'rows;
                        }
                    }
                }
                rows.insert(row);
            }
            family.insert(domain, rows);
        }
    }

    // Alternate restriction and extension pruning passes; each pass collects
    // its removals first so the outcome is independent of iteration order.
    loop {
        let mut removals: Vec<(Vec<usize>, Vec<usize>)> = Vec::new();
        for (domain, rows) in &family {
            for row in rows {
                'probe: for drop in 0..domain.len() {
                    meter.tick()?;
                    let mut sub = domain.clone();
                    sub.remove(drop);
                    let mut sub_row = row.clone();
                    sub_row.remove(drop);
                    if !family
                        .get(&sub)
                        .is_some_and(|rows| rows.contains(&sub_row))
                    {
                        removals.push((domain.clone(), row.clone()));
                        break 'probe;
                    }
                }
            }
        }
        let mut changed = !removals.is_empty();
        for (domain, row) in removals {
            family.get_mut(&domain).unwrap().remove(&row);
        }

        let mut removals: Vec<(Vec<usize>, Vec<usize>)> = Vec::new();
        for (domain, rows) in &family {
            if domain.len() >= j + 1 {
                continue;
            }
            for row in rows {
                'probe: for d in (0..b).filter(|e| !domain.contains(e)) {
                    meter.tick()?;
                    let big = merged_domain(domain, &[d]);
                    let pos = big.binary_search(&d).unwrap();
                    let extendable = family.get(&big).is_some_and(|rows| {
                        (0..a).any(|v| {
                            let mut grown = row.clone();
                            grown.insert(pos, v);
                            rows.contains(&grown)
                        })
                    });
                    if !extendable {
                        removals.push((domain.clone(), row.clone()));
                        break 'probe;
                    }
                }
            }
        }
        changed |= !removals.is_empty();
        for (domain, row) in removals {
            family.get_mut(&domain).unwrap().remove(&row);
        }
        if !changed {
            break;
        }
    }

    family.retain(|_, rows| !rows.is_empty());
    if family.is_empty() {
        return Ok(None);
    }
    let members = family.into_iter().flat_map(|(domain, rows)| {
        rows.into_iter().map(move |row| {
            domain
                .iter()
                .copied()
                .zip(row)
                .collect::<PartialAssignment>()
        })
    });
    Strategy::new(j, members).map(Some)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SeparatorVerdict {
    Accept,
    Reject,
}

impl SeparatorVerdict {
    pub fn is_accept(self) -> bool {
        self == SeparatorVerdict::Accept
    }
}

/// Decision procedure for the promise problem separating level-k robust
/// instances from unsatisfiable ones over a width-(j+1) template: build the
/// family of all maps on at most j+1 points that extend to a compatible
/// assignment on k points and accept exactly when it is a nonempty
/// (j,j+1)-strategy. Robust instances always pass (their solutions populate
/// the family); unsatisfiable instances of a width-(j+1) template cannot.
pub fn ant_separator(
    instance: &Structure,
    template: &Structure,
    k: usize,
    formulas: &FormulaSet,
    j: usize,
    budget: Budget,
) -> Result<SeparatorVerdict> {
    if j >= k {
        return Err(Error::InvalidParameter(format!(
            "separator needs j < k, got j = {j}, k = {k}"
        )));
    }
    let candidate = candidate_family(instance, template, k, formulas, j + 1, budget)?;
    if candidate.is_empty() {
        // A strategy certifying satisfiability must be nonempty.
        return Ok(SeparatorVerdict::Reject);
    }
    Ok(match check_strategy(&candidate, instance, template)? {
        None => SeparatorVerdict::Accept,
        Some(_) => SeparatorVerdict::Reject,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::robust::{is_robust, RobustVerdict};
    use crate::solve::find_homomorphism;
    use crate::templates;
    use rand::{Rng, SeedableRng};

    fn edge_formulas() -> FormulaSet {
        FormulaSet::fundamental(&templates::graph_signature())
    }

    #[test]
    fn fixpoint_accepts_the_even_cycle_and_rejects_odd_ones() {
        let k2 = templates::clique(2);
        let c4 = templates::cycle(4);
        let strategy = establish_consistency(&c4, &k2, 2, Budget::default())
            .unwrap()
            .expect("the even cycle is two-colourable");
        assert_eq!(check_strategy(&strategy, &c4, &k2).unwrap(), None);
        // Every domain within the bound is inhabited in a nonempty strategy.
        assert!(strategy.members().any(|m| m.is_empty()));
        assert!(strategy.members().any(|m| m.len() == 3));

        for odd in [3, 5] {
            let c = templates::cycle(odd);
            assert_eq!(
                establish_consistency(&c, &k2, 2, Budget::default()).unwrap(),
                None,
                "odd cycle C{odd} admits no strategy"
            );
        }
    }

    #[test]
    fn empty_instance_keeps_the_singleton_empty_map() {
        let k2 = templates::clique(2);
        let empty = Structure::new(templates::graph_signature(), 0);
        let strategy = establish_consistency(&empty, &k2, 2, Budget::default())
            .unwrap()
            .expect("nothing to refute");
        assert_eq!(strategy.len(), 1);
        assert!(strategy.members().next().unwrap().is_empty());

        let candidate =
            candidate_family(&empty, &k2, 2, &FormulaSet::empty(), 2, Budget::default()).unwrap();
        assert_eq!(candidate.len(), 1);
        assert_eq!(check_strategy(&candidate, &empty, &k2).unwrap(), None);
        assert!(
            ant_separator(&empty, &k2, 2, &FormulaSet::empty(), 1, Budget::default())
                .unwrap()
                .is_accept()
        );
    }

    #[test]
    fn candidate_family_collects_edge_respecting_pair_maps_on_the_triangle() {
        let k3 = templates::clique(3);
        let triangle = templates::triangle();
        let family =
            candidate_family(&triangle, &k3, 2, &edge_formulas(), 2, Budget::default()).unwrap();
        // Empty map, nine singleton maps, and six proper maps per edge.
        assert_eq!(family.len(), 1 + 9 + 18);
        for member in family.members() {
            if member.len() == 2 {
                let values: Vec<usize> = member.iter().map(|(_, v)| v).collect();
                assert_ne!(values[0], values[1], "pair maps must colour properly");
            }
        }
        assert_eq!(check_strategy(&family, &triangle, &k3).unwrap(), None);
    }

    #[test]
    fn unsatisfiable_clique_still_has_locally_consistent_pair_maps() {
        let k3 = templates::clique(3);
        let k4 = templates::clique(4);
        assert!(find_homomorphism(&k4, &k3, &PartialAssignment::new(), Budget::default())
            .unwrap()
            .is_none());
        let family =
            candidate_family(&k4, &k3, 2, &edge_formulas(), 2, Budget::default()).unwrap();
        // The promise gap: local consistency survives global failure.
        assert!(!family.is_empty());
        assert_eq!(check_strategy(&family, &k4, &k3).unwrap(), None);

        // The same members fall short of the next size bound: no triple
        // domains exist to extend into.
        let widened = Strategy::new(2, family.members()).unwrap();
        match check_strategy(&widened, &k4, &k3).unwrap() {
            Some(StrategyViolation::Extension { member, added }) => {
                assert_eq!(member.len() + added.len(), 3);
            }
            other => panic!("expected an extension violation, got {other:?}"),
        }
    }

    #[test]
    fn constructed_defects_are_named_by_clause() {
        let k2 = templates::clique(2);
        let path = templates::path(2);
        // A pair map without its restrictions: the empty subdomain reports
        // first.
        let lone: PartialAssignment = [(0, 0), (1, 1)].into_iter().collect();
        let strategy = Strategy::new(1, [lone.clone()]).unwrap();
        match check_strategy(&strategy, &path, &k2).unwrap() {
            Some(StrategyViolation::Restriction { member, missing }) => {
                assert_eq!(member, lone);
                assert_eq!(missing, Vec::<usize>::new());
            }
            other => panic!("expected a restriction violation, got {other:?}"),
        }

        // A non-homomorphism member reports the homomorphism clause.
        let bad: PartialAssignment = [(0, 0), (1, 0)].into_iter().collect();
        let strategy = Strategy::new(1, [bad.clone()]).unwrap();
        match check_strategy(&strategy, &path, &k2).unwrap() {
            Some(StrategyViolation::Homomorphism { member }) => assert_eq!(member, bad),
            other => panic!("expected a homomorphism violation, got {other:?}"),
        }

        let oversized: PartialAssignment = [(0, 0), (1, 1), (2, 0)].into_iter().collect();
        assert!(matches!(
            Strategy::new(1, [oversized]),
            Err(Error::OutOfRange { .. })
        ));
    }

    #[test]
    fn candidate_families_of_robust_instances_are_strategies() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0x57a7);
        let k2 = templates::clique(2);
        let k3 = templates::clique(3);
        let sets = [FormulaSet::empty(), edge_formulas()];
        let mut robust_seen = 0usize;
        for trial in 0..120 {
            let template = if trial % 2 == 0 { &k2 } else { &k3 };
            let n = rng.gen_range(1..=5);
            let mut b = Structure::new(templates::graph_signature(), n);
            for u in 0..n {
                for v in (u + 1)..n {
                    if rng.gen_bool(0.3) {
                        b.add("E", vec![u, v]).unwrap();
                        b.add("E", vec![v, u]).unwrap();
                    }
                }
            }
            for formulas in &sets {
                // Robustness is vacuous below the instance size, and the
                // family-of-compatible-maps lemma needs k-element subsets to
                // exist, so levels above |B| stay out of scope.
                for k in 1..=3usize.min(n) {
                    if is_robust(&b, template, k, formulas, Budget::default()).unwrap()
                        != RobustVerdict::Yes
                    {
                        continue;
                    }
                    robust_seen += 1;
                    for bound in 1..=k {
                        let family = candidate_family(
                            &b,
                            template,
                            k,
                            formulas,
                            bound,
                            Budget::default(),
                        )
                        .unwrap();
                        assert_eq!(
                            check_strategy(&family, &b, template).unwrap(),
                            None,
                            "compatible maps of a robust instance form a strategy"
                        );
                    }
                }
            }
        }
        assert!(robust_seen > 40, "sampled only {robust_seen} robust cases");
    }

    #[test]
    fn absent_fixpoint_implies_unsatisfiable() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0xf1f0);
        let k2 = templates::clique(2);
        for _ in 0..60 {
            let n = rng.gen_range(1..=6);
            let mut b = Structure::new(templates::graph_signature(), n);
            for u in 0..n {
                for v in (u + 1)..n {
                    if rng.gen_bool(0.4) {
                        b.add("E", vec![u, v]).unwrap();
                        b.add("E", vec![v, u]).unwrap();
                    }
                }
            }
            let outcome = establish_consistency(&b, &k2, 2, Budget::default()).unwrap();
            let solvable =
                find_homomorphism(&b, &k2, &PartialAssignment::new(), Budget::default())
                    .unwrap()
                    .is_some();
            if outcome.is_none() {
                assert!(!solvable, "an emptied fixpoint certifies unsatisfiability");
            } else {
                // K2 has width 3, so the converse holds on this template.
                assert!(solvable);
            }
        }
    }

    #[test]
    fn two_colour_fixpoint_members_extend_to_full_solutions() {
        // Strict width: on templates with a near-unanimity polymorphism the
        // surviving members are restrictions of solutions. Exhaustive up to
        // five vertices, seeded sample at six.
        let k2 = templates::clique(2);
        for n in 0..=5usize {
            let pairs: Vec<(usize, usize)> =
                (0..n).flat_map(|u| ((u + 1)..n).map(move |v| (u, v))).collect();
            for mask in 0..1u32 << pairs.len() {
                let mut b = Structure::new(templates::graph_signature(), n);
                for (i, &(u, v)) in pairs.iter().enumerate() {
                    if mask >> i & 1 == 1 {
                        b.add("E", vec![u, v]).unwrap();
                        b.add("E", vec![v, u]).unwrap();
                    }
                }
                check_strict_width(&b, &k2);
            }
        }
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0x6666);
        for _ in 0..40 {
            let mut b = Structure::new(templates::graph_signature(), 6);
            for u in 0..6 {
                for v in (u + 1)..6 {
                    if rng.gen_bool(0.35) {
                        b.add("E", vec![u, v]).unwrap();
                        b.add("E", vec![v, u]).unwrap();
                    }
                }
            }
            check_strict_width(&b, &k2);
        }
    }

    fn check_strict_width(b: &Structure, template: &Structure) {
        let Some(strategy) = establish_consistency(b, template, 2, Budget::default()).unwrap()
        else {
            return;
        };
        for member in strategy.members() {
            assert!(
                find_homomorphism(b, template, &member, Budget::default())
                    .unwrap()
                    .is_some(),
                "fixpoint member {member:?} must extend to a solution"
            );
        }
    }

    #[test]
    fn separator_accepts_robust_and_rejects_unsatisfiable_inputs() {
        let k2 = templates::clique(2);
        // Unsatisfiable inputs of a width-3 template are rejected.
        for odd in [3, 5] {
            let c = templates::cycle(odd);
            for formulas in [FormulaSet::empty(), edge_formulas()] {
                assert_eq!(
                    ant_separator(&c, &k2, 3, &formulas, 2, Budget::default()).unwrap(),
                    SeparatorVerdict::Reject
                );
            }
        }
        // A robust instance is accepted: the edgeless graph for the empty
        // set, the even cycle for the fundamental relations at level 1.
        let edgeless = Structure::new(templates::graph_signature(), 4);
        assert!(is_robust(&edgeless, &k2, 3, &FormulaSet::empty(), Budget::default())
            .unwrap()
            .is_yes());
        assert!(
            ant_separator(&edgeless, &k2, 3, &FormulaSet::empty(), 2, Budget::default())
                .unwrap()
                .is_accept()
        );
        let c4 = templates::cycle(4);
        assert!(is_robust(&c4, &k2, 1, &edge_formulas(), Budget::default())
            .unwrap()
            .is_yes());
        assert!(
            ant_separator(&c4, &k2, 1, &edge_formulas(), 0, Budget::default())
                .unwrap()
                .is_accept()
        );
    }

    #[test]
    fn parameter_preconditions_are_enforced() {
        let k2 = templates::clique(2);
        let c4 = templates::cycle(4);
        assert!(matches!(
            candidate_family(&c4, &k2, 2, &FormulaSet::empty(), 3, Budget::default()),
            Err(Error::InvalidParameter(_))
        ));
        assert!(matches!(
            candidate_family(&c4, &k2, 2, &FormulaSet::empty(), 0, Budget::default()),
            Err(Error::InvalidParameter(_))
        ));
        assert!(matches!(
            establish_consistency(&c4, &k2, 0, Budget::default()),
            Err(Error::InvalidParameter(_))
        ));
        assert!(matches!(
            ant_separator(&c4, &k2, 2, &FormulaSet::empty(), 2, Budget::default()),
            Err(Error::InvalidParameter(_))
        ));
        let one_in_three = templates::one_in_three();
        assert!(matches!(
            establish_consistency(&c4, &one_in_three, 2, Budget::default()),
            Err(Error::SignatureMismatch(_))
        ));
    }

    #[test]
    fn mixed_signature_candidate_respects_compatibility() {
        // A non-graph signature exercises the compatibility path: the
        // one-in-three template with a single hyperedge.
        let t = templates::one_in_three();
        let sig = templates::one_in_three_signature();
        let mut b = Structure::new(sig.clone(), 3);
        b.add("r", vec![0, 1, 2]).unwrap();
        let fundamental = FormulaSet::fundamental(&sig);
        let family =
            candidate_family(&b, &t, 3, &fundamental, 3, Budget::default()).unwrap();
        // Full-domain members are exactly the three satisfying assignments.
        let full: Vec<PartialAssignment> =
            family.members().filter(|m| m.len() == 3).collect();
        assert_eq!(full.len(), 3);
        for m in &full {
            let row: Vec<usize> = m.iter().map(|(_, v)| v).collect();
            assert_eq!(row.iter().sum::<usize>(), 1);
        }
        assert_eq!(check_strategy(&family, &b, &t).unwrap(), None);
    }

    #[test]
    fn budget_exhaustion_is_reported() {
        let k2 = templates::clique(2);
        let c4 = templates::cycle(4);
        assert!(matches!(
            establish_consistency(&c4, &k2, 2, Budget::new(10)),
            Err(Error::BudgetExceeded)
        ));
        assert!(matches!(
            candidate_family(&c4, &k2, 2, &FormulaSet::empty(), 2, Budget::new(3)),
            Err(Error::BudgetExceeded)
        ));
    }
}
