//! F-compatibility and robust satisfiability. An instance is (k,F)-robustly
//! satisfiable when it is satisfiable and every F-compatible partial map on
//! every exactly-k-element subset extends to a full solution.
//!
//! Two independent engines implement the decision: a seeded-search engine
//! that adjoins the partial map as unit constraints, and a brute-force engine
//! that enumerates every total map up front and tests extendability by
//! membership. A cross-checking engine runs both and fails loudly on any
//! disagreement.

use crate::budget::Budget;
use crate::error::{Error, Result};
use crate::formula::{Atom, FormulaSet, PpFormula, Var};
use crate::solve;
use crate::structure::{PartialAssignment, Structure};
use crate::util::{k_subsets, k_tuples, tuple_rank};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NoReason {
    Unsatisfiable,
    NonExtendable,
}

/// Outcome of a robustness decision. A negative verdict names the level that
/// failed and, for extension failures, the least witnessing subset and map.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RobustVerdict {
    Yes,
    No {
        reason: NoReason,
        level: usize,
        counterexample: Option<(Vec<usize>, PartialAssignment)>,
    },
}

impl RobustVerdict {
    pub fn is_yes(&self) -> bool {
        matches!(self, RobustVerdict::Yes)
    }
}

/// Decides whether a partial map respects F: every instantiated member of F
/// on the domain tuple that holds in the instance must hold at the image.
pub fn is_compatible(
    instance: &Structure,
    template: &Structure,
    nu: &PartialAssignment,
    formulas: &FormulaSet,
    budget: Budget,
) -> Result<bool> {
    nu.check_ranges(instance, template)?;
    let domain = nu.domain_vec();
    let image: Vec<usize> = domain.iter().map(|&b| nu.get(b).unwrap()).collect();
    let fk = formulas.instantiate(domain.len())?;
    for member in fk.members() {
        if member.holds(instance, &domain, budget)?
            && !member.holds(template, &image, budget)?
        {
            return Ok(false);
        }
    }
    Ok(true)
}

// Precomputed template-side truth of the instantiated set, one bitmask of
// member indices per image tuple. Members are capped at 128 per level.
struct CompatTable {
    members: Vec<PpFormula>,
    by_image: Vec<u128>,
}

impl CompatTable {
    fn build(template: &Structure, formulas: &FormulaSet, k: usize, budget: Budget) -> Result<CompatTable> {
        let fk = formulas.instantiate(k)?;
        let members = fk.members().to_vec();
        if members.len() > 128 {
            return Err(Error::BudgetExceeded);
        }
        let images = k_tuples(template.universe(), k);
        let mut meter = budget.meter();
        meter.charge((images.len() * members.len().max(1)) as u64)?;
        let mut by_image = vec![0u128; images.len()];
        for (rank, image) in images.iter().enumerate() {
            for (mi, m) in members.iter().enumerate() {
                if m.holds(template, image, budget)? {
                    by_image[rank] |= 1 << mi;
                }
            }
        }
        Ok(CompatTable { members, by_image })
    }

    fn required_mask(&self, instance: &Structure, subset: &[usize], budget: Budget) -> Result<u128> {
        let mut mask = 0u128;
        for (mi, m) in self.members.iter().enumerate() {
            if m.holds(instance, subset, budget)? {
                mask |= 1 << mi;
            }
        }
        Ok(mask)
    }
}

/// Decision procedure behind a named engine.
pub trait RobustnessEngine {
    fn name(&self) -> &'static str;

    /// Decides (k,F)-robust satisfiability at exactly level k.
    fn decide(
        &self,
        instance: &Structure,
        template: &Structure,
        k: usize,
        formulas: &FormulaSet,
        budget: Budget,
    ) -> Result<RobustVerdict>;
}

/// Seeded-search engine: tests each compatible partial map by adjoining it
/// as unit constraints and searching for an extension.
pub struct SolverEngine;

impl RobustnessEngine for SolverEngine {
    fn name(&self) -> &'static str {
        "solver"
    }

    fn decide(
        &self,
        instance: &Structure,
        template: &Structure,
        k: usize,
        formulas: &FormulaSet,
        budget: Budget,
    ) -> Result<RobustVerdict> {
        if !instance.same_signature(template) {
            return Err(Error::SignatureMismatch(
                "instance and template signatures differ".into(),
            ));
        }
        if solve::find_homomorphism(instance, template, &PartialAssignment::new(), budget)?
            .is_none()
        {
            return Ok(RobustVerdict::No {
                reason: NoReason::Unsatisfiable,
                level: k,
                counterexample: None,
            });
        }
        let b = instance.universe();
        if b < k {
            // The subset quantifier is vacuous; satisfiability already holds.
            return Ok(RobustVerdict::Yes);
        }
        let table = CompatTable::build(template, formulas, k, budget)?;
        let a = template.universe();
        let images = k_tuples(a, k);
        let mut meter = budget.meter();
        for subset in k_subsets(b, k) {
            let required = table.required_mask(instance, &subset, budget)?;
            for image in &images {
                meter.tick()?;
                if table.by_image[tuple_rank(a, image)] & required != required {
                    continue;
                }
                let nu: PartialAssignment = subset
                    .iter()
                    .copied()
                    .zip(image.iter().copied())
                    .collect();
                if solve::find_homomorphism(instance, template, &nu, budget)?.is_none() {
                    return Ok(RobustVerdict::No {
                        reason: NoReason::NonExtendable,
                        level: k,
                        counterexample: Some((subset, nu)),
                    });
                }
            }
        }
        Ok(RobustVerdict::Yes)
    }
}

/// Independent oracle: enumerates every total map directly (no propagation),
/// keeps the valid ones, and tests extendability by membership. Compatibility
/// is evaluated by exhaustive assignment enumeration rather than search.
pub struct BruteForceEngine;

fn brute_holds(
    formula: &PpFormula,
    structure: &Structure,
    binding: &[usize],
    budget: Budget,
) -> Result<bool> {
    let mut meter = budget.meter();
    let n = structure.universe();
    let assignments = if formula.exists() == 0 {
        vec![Vec::new()]
    } else {
        k_tuples(n, formula.exists())
    };
    'outer: for ext in assignments {
        meter.tick()?;
        let value = |v: Var| match v {
            Var::Free(i) => binding[i],
            Var::Exist(j) => ext[j],
        };
        for atom in formula.atoms() {
            let ok = match atom {
                Atom::Eq(a, b) => value(*a) == value(*b),
                Atom::Rel { symbol, args } => {
                    let idx = structure.signature().lookup(symbol)?;
                    let tuple: Vec<usize> = args.iter().map(|&v| value(v)).collect();
                    structure.contains(idx, &tuple)
                }
            };
            if !ok {
                continue 'outer;
            }
        }
        return Ok(true);
    }
    Ok(false)
}

fn all_total_homomorphisms(
    instance: &Structure,
    template: &Structure,
    budget: Budget,
) -> Result<Vec<Vec<usize>>> {
    let mut meter = budget.meter();
    let mut out = Vec::new();
    'outer: for map in k_tuples(template.universe(), instance.universe()) {
        meter.tick()?;
        for (rel, tuple) in instance.hyperedges() {
            let image: Vec<usize> = tuple.iter().map(|&e| map[e]).collect();
            if !template.contains(rel, &image) {
                continue 'outer;
            }
        }
        out.push(map);
    }
    Ok(out)
}

impl RobustnessEngine for BruteForceEngine {
    fn name(&self) -> &'static str {
        "brute"
    }

    fn decide(
        &self,
        instance: &Structure,
        template: &Structure,
        k: usize,
        formulas: &FormulaSet,
        budget: Budget,
    ) -> Result<RobustVerdict> {
        if !instance.same_signature(template) {
            return Err(Error::SignatureMismatch(
                "instance and template signatures differ".into(),
            ));
        }
        let b = instance.universe();
        let a = template.universe();
        if b > 0 && a > 0 {
            let maps = (a as f64).powi(b as i32);
            if maps > 5e8 {
                return Err(Error::BudgetExceeded);
            }
        }
        let homs = all_total_homomorphisms(instance, template, budget)?;
        // b = 0 always leaves the empty map in homs, so emptiness here means
        // genuine unsatisfiability.
        if homs.is_empty() {
            return Ok(RobustVerdict::No {
                reason: NoReason::Unsatisfiable,
                level: k,
                counterexample: None,
            });
        }
        if b < k {
            return Ok(RobustVerdict::Yes);
        }
        let fk = formulas.instantiate(k)?;
        let mut meter = budget.meter();
        for subset in k_subsets(b, k) {
            'nu: for image in k_tuples(a, k) {
                meter.tick()?;
                for m in fk.members() {
                    if brute_holds(m, instance, &subset, budget)?
                        && !brute_holds(m, template, &image, budget)?
                    {
                        continue 'nu;
                    }
                }
                let extendable = homs
                    .iter()
                    .any(|h| subset.iter().zip(&image).all(|(&s, &v)| h[s] == v));
                if !extendable {
                    let nu: PartialAssignment = subset
                        .iter()
                        .copied()
                        .zip(image.iter().copied())
                        .collect();
                    return Ok(RobustVerdict::No {
                        reason: NoReason::NonExtendable,
                        level: k,
                        counterexample: Some((subset, nu)),
                    });
                }
            }
        }
        Ok(RobustVerdict::Yes)
    }
}

/// Runs the seeded and brute-force engines and errors on any disagreement.
pub struct CrossCheckEngine;

impl RobustnessEngine for CrossCheckEngine {
    fn name(&self) -> &'static str {
        "cross"
    }

    fn decide(
        &self,
        instance: &Structure,
        template: &Structure,
        k: usize,
        formulas: &FormulaSet,
        budget: Budget,
    ) -> Result<RobustVerdict> {
        let s = SolverEngine.decide(instance, template, k, formulas, budget)?;
        let bf = BruteForceEngine.decide(instance, template, k, formulas, budget)?;
        if s != bf {
            return Err(Error::CrossCheck(format!(
                "solver said {s:?}, brute force said {bf:?} at level {k}"
            )));
        }
        Ok(s)
    }
}

/// Looks up an engine by name: "solver", "brute", or "cross".
pub fn engine(name: &str) -> Result<Box<dyn RobustnessEngine>> {
    match name {
        "solver" => Ok(Box::new(SolverEngine)),
        "brute" => Ok(Box::new(BruteForceEngine)),
        "cross" => Ok(Box::new(CrossCheckEngine)),
        other => Err(Error::InvalidParameter(format!(
            "unknown robustness engine {other:?} (expected solver, brute, or cross)"
        ))),
    }
}

/// (k,F)-robust satisfiability at exactly level k, by seeded search.
pub fn is_robust(
    instance: &Structure,
    template: &Structure,
    k: usize,
    formulas: &FormulaSet,
    budget: Budget,
) -> Result<RobustVerdict> {
    SolverEngine.decide(instance, template, k, formulas, budget)
}

/// Independent brute-force oracle with the same contract as `is_robust`.
pub fn brute_force_robust(
    instance: &Structure,
    template: &Structure,
    k: usize,
    formulas: &FormulaSet,
    budget: Budget,
) -> Result<RobustVerdict> {
    BruteForceEngine.decide(instance, template, k, formulas, budget)
}

/// (<=k,F)-robust satisfiability: robust at every level up to k. The first
/// failing level is reported.
pub fn is_robust_upto(
    instance: &Structure,
    template: &Structure,
    k: usize,
    formulas: &FormulaSet,
    budget: Budget,
    engine: &dyn RobustnessEngine,
) -> Result<RobustVerdict> {
    for level in 0..=k {
        match engine.decide(instance, template, level, formulas, budget)? {
            RobustVerdict::Yes => {}
            RobustVerdict::No {
                reason,
                counterexample,
                ..
            } => {
                let level = if reason == NoReason::Unsatisfiable {
                    0
                } else {
                    level
                };
                return Ok(RobustVerdict::No {
                    reason,
                    level,
                    counterexample,
                });
            }
        }
    }
    Ok(RobustVerdict::Yes)
}
