//! Quasi-equational theory of a template at a fixed arity: implications
//! "type sigma holds at a tuple => atomic formula alpha holds there",
//! verified exhaustively over every k-tuple of the template.

use crate::budget::Budget;
use crate::error::{Error, Result};
use crate::formula::{Atom, FormulaSet, TypeFormula, Var};
use crate::structure::Structure;
use crate::util::k_tuples;

/// A verified implication: every k-tuple realizing the premise satisfies the
/// conclusion. Conclusions use free variables only.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QuasiEquation {
    pub premise: TypeFormula,
    pub conclusion: Atom,
}

impl std::fmt::Display for QuasiEquation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self.premise.as_formula() {
            Ok(p) => write!(f, "{p} -> {}", self.conclusion),
            Err(_) => write!(f, "<premise> -> {}", self.conclusion),
        }
    }
}

/// All atomic conclusions over the template's signature and equality, with
/// arguments among x1..xk. Symbols of arity above k are not candidates.
fn conclusion_candidates(template: &Structure, k: usize) -> Vec<Atom> {
    let mut out = Vec::new();
    for (name, arity) in template.signature().symbols() {
        if arity > k || k == 0 {
            continue;
        }
        for args in k_tuples(k, arity) {
            out.push(Atom::Rel {
                symbol: name.to_string(),
                args: args.into_iter().map(Var::Free).collect(),
            });
        }
    }
    for i in 0..k {
        for j in i..k {
            out.push(Atom::Eq(Var::Free(i), Var::Free(j)));
        }
    }
    out.sort();
    out
}

fn atom_truth(template: &Structure, atom: &Atom, tuple: &[usize]) -> bool {
    match atom {
        Atom::Eq(Var::Free(i), Var::Free(j)) => tuple[*i] == tuple[*j],
        Atom::Rel { symbol, args } => {
            let idx = template
                .signature()
                .lookup(symbol)
                .expect("candidate symbols come from the signature");
            let applied: Vec<usize> = args
                .iter()
                .map(|v| match v {
                    Var::Free(i) => tuple[*i],
                    Var::Exist(_) => unreachable!("conclusions are quantifier-free"),
                })
                .collect();
            template.contains(idx, &applied)
        }
        Atom::Eq(_, _) => unreachable!("conclusions use free variables only"),
    }
}

/// Enumerates every implication (sigma in type_k(F)) -> alpha that holds at
/// all k-tuples of the template. Premises with no realizing tuple appear with
/// every conclusion. Deterministic order: premise subsets ascending by
/// bitmask over the sorted instantiation set, then conclusions in atom order.
pub fn kfq_theory(
    template: &Structure,
    k: usize,
    formulas: &FormulaSet,
    budget: Budget,
) -> Result<Vec<QuasiEquation>> {
    let fk = formulas.instantiate(k)?;
    let n = fk.len();
    if n >= 24 {
        return Err(Error::BudgetExceeded);
    }
    let conclusions = conclusion_candidates(template, k);
    let domain = k_tuples(template.universe(), k);

    let mut meter = budget.meter();
    meter.charge((1u64 << n) * conclusions.len().max(1) as u64)?;
    meter.charge((domain.len() * n.max(1)) as u64)?;

    // Truth of each instantiated premise member at each tuple.
    let mut member_truth = vec![vec![false; domain.len()]; n];
    for (mi, member) in fk.members().iter().enumerate() {
        for (ti, t) in domain.iter().enumerate() {
            member_truth[mi][ti] = member.holds(template, t, budget)?;
        }
    }
    let mut conclusion_truth = vec![vec![false; domain.len()]; conclusions.len()];
    for (ci, c) in conclusions.iter().enumerate() {
        for (ti, t) in domain.iter().enumerate() {
            conclusion_truth[ci][ti] = atom_truth(template, c, t);
        }
    }

    let mut out = Vec::new();
    for mask in 0..(1u64 << n) {
        let members: Vec<usize> = (0..n).filter(|i| mask & (1 << i) != 0).collect();
        let premise_holds: Vec<bool> = (0..domain.len())
            .map(|ti| members.iter().all(|&mi| member_truth[mi][ti]))
            .collect();
        for (ci, c) in conclusions.iter().enumerate() {
            let valid = (0..domain.len()).all(|ti| !premise_holds[ti] || conclusion_truth[ci][ti]);
            if valid {
                out.push(QuasiEquation {
                    premise: TypeFormula {
                        k,
                        members: members.iter().map(|&i| fk.members()[i].clone()).collect(),
                    },
                    conclusion: c.clone(),
                });
            }
        }
    }
    Ok(out)
}
