//! Uniform-width signed SAT instances and their relational encodings, plus
//! the clause-level reductions: copy amplification, the chained width
//! reduction with its fresh-variable bookkeeping, and the arrow diagrams
//! used to repair assignments along a chain.

use std::collections::{BTreeMap, BTreeSet};

use crate::budget::Budget;
use crate::error::{Error, Result};
use crate::formula::{Atom, PpFormula, Var};
use crate::reduce;
use crate::structure::{Signature, Structure};
use crate::util::k_subsets;

/// A CNF instance in which every clause has the same width. Literals are
/// `(variable, negated)` pairs; clause order and literal order are
/// significant and preserved by every operation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SignedClauseInstance {
    num_vars: usize,
    width: usize,
    clauses: Vec<Vec<(usize, bool)>>,
}

impl SignedClauseInstance {
    pub fn new(
        num_vars: usize,
        width: usize,
        clauses: Vec<Vec<(usize, bool)>>,
    ) -> Result<SignedClauseInstance> {
        for (i, clause) in clauses.iter().enumerate() {
            if clause.len() != width {
                return Err(Error::WidthViolation(format!(
                    "clause {i} has width {}, expected uniform width {width}",
                    clause.len()
                )));
            }
            for (j, &(v, _)) in clause.iter().enumerate() {
                if v >= num_vars {
                    return Err(Error::out_of_range(
                        format!("clause {i} literal {j}"),
                        v,
                        num_vars,
                    ));
                }
            }
        }
        Ok(SignedClauseInstance {
            num_vars,
            width,
            clauses,
        })
    }

    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn clauses(&self) -> &[Vec<(usize, bool)>] {
        &self.clauses
    }

    pub fn evaluate(&self, assignment: &[bool]) -> bool {
        self.clauses.iter().all(|clause| {
            clause
                .iter()
                .any(|&(v, negated)| assignment[v] != negated)
        })
    }

    /// All satisfying assignments in ascending binary order (bit v of the
    /// counter is variable v). Charges 2^num_vars against the budget.
    pub fn satisfying_assignments(&self, budget: Budget) -> Result<Vec<Vec<bool>>> {
        if self.num_vars >= 63 {
            return Err(Error::BudgetExceeded);
        }
        let mut meter = budget.meter();
        meter.charge(1u64 << self.num_vars)?;
        let mut out = Vec::new();
        for mask in 0..1u64 << self.num_vars {
            let assignment: Vec<bool> = (0..self.num_vars).map(|v| mask >> v & 1 == 1).collect();
            if self.evaluate(&assignment) {
                out.push(assignment);
            }
        }
        Ok(out)
    }

    /// The sign patterns occurring among the clauses, sorted.
    pub fn patterns(&self) -> BTreeSet<Vec<bool>> {
        self.clauses
            .iter()
            .map(|c| c.iter().map(|&(_, negated)| negated).collect())
            .collect()
    }

    /// Relational form: one element per variable, one hyperedge per clause in
    /// the sign-pattern relation matching its negation layout. The signature
    /// contains exactly the patterns that occur.
    pub fn to_structure(&self) -> Result<Structure> {
        let patterns: Vec<Vec<bool>> = self.patterns().into_iter().collect();
        let sig = clause_signature(self.width, &patterns)?;
        let mut s = Structure::new(sig, self.num_vars);
        for clause in &self.clauses {
            let pattern: Vec<bool> = clause.iter().map(|&(_, negated)| negated).collect();
            let tuple: Vec<usize> = clause.iter().map(|&(v, _)| v).collect();
            s.add(&pattern_symbol(self.width, &pattern), tuple)?;
        }
        Ok(s)
    }

    /// The Boolean template matching `to_structure`'s signature: each pattern
    /// relation holds the tuples satisfying its clause shape.
    pub fn template(&self) -> Result<Structure> {
        let patterns: Vec<Vec<bool>> = self.patterns().into_iter().collect();
        clause_template(self.width, &patterns)
    }
}

/// Relation symbol for a clause sign pattern, e.g. `R3_010` for width 3 with
/// the middle literal negated.
pub fn pattern_symbol(width: usize, pattern: &[bool]) -> String {
    let bits: String = pattern
        .iter()
        .map(|&negated| if negated { '1' } else { '0' })
        .collect();
    format!("R{width}_{bits}")
}

/// Signature with one relation of the given width per pattern.
pub fn clause_signature(width: usize, patterns: &[Vec<bool>]) -> Result<std::sync::Arc<Signature>> {
    let mut symbols: Vec<(String, usize)> = patterns
        .iter()
        .map(|p| (pattern_symbol(width, p), width))
        .collect();
    symbols.sort();
    symbols.dedup();
    Signature::new(symbols)
}

/// Boolean template over `clause_signature`: pattern relation R_s holds every
/// tuple except s itself, the unique falsifying one.
pub fn clause_template(width: usize, patterns: &[Vec<bool>]) -> Result<Structure> {
    let sig = clause_signature(width, patterns)?;
    let mut t = Structure::new(sig, 2).with_labels(vec!["0".into(), "1".into()])?;
    for pattern in patterns {
        let symbol = pattern_symbol(width, pattern);
        for tuple in crate::util::k_tuples(2, width) {
            let falsified = tuple
                .iter()
                .zip(pattern)
                .all(|(&bit, &negated)| (bit == 1) == negated);
            if !falsified {
                t.add(&symbol, tuple.clone())?;
            }
        }
    }
    Ok(t)
}

// ---------------------------------------------------------------------------
// DIMACS
// ---------------------------------------------------------------------------

/// Parses DIMACS CNF. Comment lines start with `c`; the `p cnf V C` header is
/// required; clauses are 0-terminated. Clause widths must be uniform.
pub fn dimacs_import(text: &str) -> Result<SignedClauseInstance> {
    let mut header: Option<(usize, usize)> = None;
    let mut clauses: Vec<Vec<(usize, bool)>> = Vec::new();
    let mut current: Vec<(usize, bool)> = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let loc = |msg: &str| Error::parse(format!("line {}", lineno + 1), msg);
        let line = line.trim();
        if line.is_empty() || line.starts_with('c') {
            continue;
        }
        if line.starts_with('p') {
            if header.is_some() {
                return Err(loc("duplicate header"));
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.len() != 4 || fields[1] != "cnf" {
                return Err(loc("expected header `p cnf <vars> <clauses>`"));
            }
            let vars = fields[2]
                .parse::<usize>()
                .map_err(|_| loc("variable count is not a number"))?;
            let count = fields[3]
                .parse::<usize>()
                .map_err(|_| loc("clause count is not a number"))?;
            header = Some((vars, count));
            continue;
        }
        let (vars, _) = header.ok_or_else(|| loc("clause before `p cnf` header"))?;
        for token in line.split_whitespace() {
            let lit = token
                .parse::<i64>()
                .map_err(|_| loc(&format!("bad literal {token:?}")))?;
            if lit == 0 {
                clauses.push(std::mem::take(&mut current));
            } else {
                let v = lit.unsigned_abs() as usize - 1;
                if v >= vars {
                    return Err(loc(&format!(
                        "literal {lit} exceeds declared variable count {vars}"
                    )));
                }
                current.push((v, lit < 0));
            }
        }
    }
    let (vars, count) = header.ok_or_else(|| Error::parse("input", "missing `p cnf` header"))?;
    if !current.is_empty() {
        return Err(Error::parse("input", "unterminated clause (missing 0)"));
    }
    if clauses.len() != count {
        return Err(Error::parse(
            "input",
            format!("header declares {count} clauses, found {}", clauses.len()),
        ));
    }
    let width = clauses.first().map(|c| c.len()).unwrap_or(0);
    for (i, clause) in clauses.iter().enumerate() {
        if clause.len() != width {
            return Err(Error::WidthViolation(format!(
                "clause {} has width {} but clause 0 has width {width}; \
                 this toolkit works with uniform-width instances, so pad or \
                 split clauses before import",
                i + 1,
                clause.len()
            )));
        }
    }
    SignedClauseInstance::new(vars, width, clauses)
}

/// Serializes to DIMACS. `dimacs_import(dimacs_export(x)) == x`, and the text
/// itself round-trips byte for byte through import then export.
pub fn dimacs_export(instance: &SignedClauseInstance) -> String {
    let mut out = format!(
        "p cnf {} {}\n",
        instance.num_vars,
        instance.clauses.len()
    );
    for clause in &instance.clauses {
        for &(v, negated) in clause {
            let lit = (v + 1) as i64 * if negated { -1 } else { 1 };
            out.push_str(&lit.to_string());
            out.push(' ');
        }
        out.push_str("0\n");
    }
    out
}

// ---------------------------------------------------------------------------
// 1-in-3 definitions for width-3 clauses
// ---------------------------------------------------------------------------

/// Symbol for a signed exactly-one relation, e.g. `T3_100`.
fn one_in_three_symbol(pattern: [bool; 3]) -> String {
    let bits: String = pattern
        .iter()
        .map(|&negated| if negated { '1' } else { '0' })
        .collect();
    format!("T3_{bits}")
}

/// pp-definitions of every width-3 clause relation over signed exactly-one
/// relations: R_s(x1,x2,x3) = exists y1..y4 with
/// t(~x1, y1, y2) & t(y2, x2, y3) & t(y3, y4, ~x3), where the three atom
/// relations absorb the slot negations into their own sign patterns.
pub fn one_in_three_definitions() -> BTreeMap<String, PpFormula> {
    let mut defs = BTreeMap::new();
    for mask in 0..8u32 {
        let s = [mask & 1 == 1, mask >> 1 & 1 == 1, mask >> 2 & 1 == 1];
        let atoms = vec![
            Atom::Rel {
                symbol: one_in_three_symbol([!s[0], false, false]),
                args: vec![Var::Free(0), Var::Exist(0), Var::Exist(1)],
            },
            Atom::Rel {
                symbol: one_in_three_symbol([false, s[1], false]),
                args: vec![Var::Exist(1), Var::Free(1), Var::Exist(2)],
            },
            Atom::Rel {
                symbol: one_in_three_symbol([false, false, !s[2]]),
                args: vec![Var::Exist(2), Var::Exist(3), Var::Free(2)],
            },
        ];
        defs.insert(
            pattern_symbol(3, &s),
            PpFormula::new(3, 4, atoms).expect("definition shape is fixed"),
        );
    }
    defs
}

/// Boolean template for the signed exactly-one relations used by
/// `one_in_three_definitions`: T_s holds (a1,a2,a3) iff exactly one slot
/// satisfies its sign.
pub fn one_in_three_signed_template() -> Structure {
    let patterns = [
        [false, false, false],
        [false, false, true],
        [false, true, false],
        [true, false, false],
    ];
    let symbols: Vec<(String, usize)> = patterns
        .iter()
        .map(|&p| (one_in_three_symbol(p), 3))
        .collect();
    let sig = Signature::new(symbols).expect("distinct symbols");
    let mut t = Structure::new(sig, 2)
        .with_labels(vec!["0".into(), "1".into()])
        .expect("two labels");
    for &pattern in &patterns {
        let symbol = one_in_three_symbol(pattern);
        for tuple in crate::util::k_tuples(2, 3) {
            let live = tuple
                .iter()
                .zip(pattern.iter())
                .filter(|&(&bit, &negated)| (bit == 1) != negated)
                .count();
            if live == 1 {
                t.add(&symbol, tuple.clone()).expect("in range");
            }
        }
    }
    t
}

// ---------------------------------------------------------------------------
// Copy amplification
// ---------------------------------------------------------------------------

/// Replaces each variable by 2k+1 copies and each width-3 clause by one
/// clause per triple of (k+1)-subsets of the copies, width 3(k+1). Copy c of
/// variable v is v*(2k+1)+c; subsets run in lexicographic order, first slot
/// outermost. k = 0 returns the instance unchanged.
pub fn gottlob_amplify(
    instance: &SignedClauseInstance,
    k: usize,
) -> Result<SignedClauseInstance> {
    if instance.width != 3 {
        return Err(Error::WidthViolation(format!(
            "copy amplification needs width 3, got {}",
            instance.width
        )));
    }
    if k == 0 {
        return Ok(instance.clone());
    }
    let copies = 2 * k + 1;
    let subsets = k_subsets(copies, k + 1);
    let mut clauses = Vec::with_capacity(instance.clauses.len() * subsets.len().pow(3));
    for clause in &instance.clauses {
        for s1 in &subsets {
            for s2 in &subsets {
                for s3 in &subsets {
                    let mut amplified = Vec::with_capacity(3 * (k + 1));
                    for (&(v, negated), subset) in clause.iter().zip([s1, s2, s3]) {
                        for &c in subset.iter() {
                            amplified.push((v * copies + c, negated));
                        }
                    }
                    clauses.push(amplified);
                }
            }
        }
    }
    SignedClauseInstance::new(instance.num_vars * copies, 3 * (k + 1), clauses)
}

// ---------------------------------------------------------------------------
// Chained width reduction
// ---------------------------------------------------------------------------

/// The chain of output clauses produced from one source clause, with the
/// fresh linking variables introduced for it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClauseFamily {
    pub source_clause: usize,
    /// Indices into the output instance's clause list, in chain order.
    pub clauses: Vec<usize>,
    /// Fresh variable ids in chain order.
    pub fresh_vars: Vec<usize>,
}

/// Result of a clause-level reduction: the output instance, the per-source
/// clause families, and how many variables are open (shared with the source).
#[derive(Debug, Clone)]
pub struct SatReduction {
    pub instance: SignedClauseInstance,
    pub families: Vec<ClauseFamily>,
    pub open_vars: usize,
}

impl SatReduction {
    /// Structure view with reduction bookkeeping: elements are open variables
    /// then fresh variables, hyperedges map back to (source clause, chain
    /// position).
    pub fn reduction_output(&self) -> Result<reduce::ReductionOutput> {
        let structure = self.instance.to_structure()?;
        let mut element_provenance: Vec<reduce::Provenance> =
            (0..self.open_vars).map(reduce::Provenance::Open).collect();
        element_provenance.resize(self.instance.num_vars(), reduce::Provenance::Open(0));
        for family in &self.families {
            for (position, &v) in family.fresh_vars.iter().enumerate() {
                element_provenance[v] = reduce::Provenance::Existential {
                    hyperedge: family.source_clause,
                    position,
                };
            }
        }
        let mut hyperedge_provenance: BTreeMap<(usize, Vec<usize>), Vec<(usize, usize)>> =
            BTreeMap::new();
        let sig = structure.signature().clone();
        for family in &self.families {
            for (position, &ci) in family.clauses.iter().enumerate() {
                let clause = &self.instance.clauses()[ci];
                let pattern: Vec<bool> = clause.iter().map(|&(_, n)| n).collect();
                let rel = sig.lookup(&pattern_symbol(self.instance.width(), &pattern))?;
                let tuple: Vec<usize> = clause.iter().map(|&(v, _)| v).collect();
                hyperedge_provenance
                    .entry((rel, tuple))
                    .or_default()
                    .push((family.source_clause, position));
            }
        }
        Ok(reduce::ReductionOutput {
            structure,
            element_provenance,
            hyperedge_provenance,
        })
    }
}

/// Number of middle clauses in the chain from width n down to width w.
fn chain_middles(n: usize, w: usize) -> Result<usize> {
    if w < 3 {
        return Err(Error::WidthViolation(format!(
            "target width must be at least 3, got {w}"
        )));
    }
    if n < 2 * w - 2 || (n - (2 * w - 2)) % (w - 2) != 0 {
        return Err(Error::WidthViolation(format!(
            "width {n} does not chain down to width {w}: need n = 2w-2 + m(w-2) \
             for some m >= 0"
        )));
    }
    Ok((n - (2 * w - 2)) / (w - 2))
}

/// Chains every width-n clause into width-w clauses linked by fresh
/// variables: the first clause keeps the leading w-1 literals and ends with a
/// positive fresh literal, each middle clause starts with the negated
/// previous fresh variable and ends with the next, and the last clause starts
/// negated-fresh and keeps the trailing w-1 literals. A satisfying assignment
/// of the source extends to the output and conversely the output projects
/// onto source solutions.
pub fn reduce_to_nsat(instance: &SignedClauseInstance, w: usize) -> Result<SatReduction> {
    let n = instance.width;
    let m = chain_middles(n, w)?;
    let fresh_per_clause = m + 1;
    let mut out_clauses: Vec<Vec<(usize, bool)>> = Vec::new();
    let mut families = Vec::with_capacity(instance.clauses.len());
    for (ci, clause) in instance.clauses.iter().enumerate() {
        let base = instance.num_vars + ci * fresh_per_clause;
        let fresh_vars: Vec<usize> = (0..fresh_per_clause).map(|j| base + j).collect();
        let mut chain: Vec<Vec<(usize, bool)>> = Vec::with_capacity(m + 2);
        let mut first: Vec<(usize, bool)> = clause[..w - 1].to_vec();
        first.push((fresh_vars[0], false));
        chain.push(first);
        for j in 0..m {
            let start = (w - 1) + j * (w - 2);
            let mut middle = vec![(fresh_vars[j], true)];
            middle.extend_from_slice(&clause[start..start + (w - 2)]);
            middle.push((fresh_vars[j + 1], false));
            chain.push(middle);
        }
        let mut last = vec![(fresh_vars[m], true)];
        last.extend_from_slice(&clause[n - (w - 1)..]);
        chain.push(last);
        let clause_indices: Vec<usize> =
            (out_clauses.len()..out_clauses.len() + chain.len()).collect();
        out_clauses.extend(chain);
        families.push(ClauseFamily {
            source_clause: ci,
            clauses: clause_indices,
            fresh_vars,
        });
    }
    let total_vars = instance.num_vars + instance.clauses.len() * fresh_per_clause;
    Ok(SatReduction {
        instance: SignedClauseInstance::new(total_vars, w, out_clauses)?,
        families,
        open_vars: instance.num_vars,
    })
}

pub fn reduce_to_3sat(instance: &SignedClauseInstance) -> Result<SatReduction> {
    reduce_to_nsat(instance, 3)
}

/// pp-definitions witnessing the chain reduction: each width-n pattern
/// relation equals the chain of width-w pattern atoms with the fresh
/// variables existentially quantified.
pub fn nsat_definitions(
    n: usize,
    w: usize,
    patterns: &BTreeSet<Vec<bool>>,
) -> Result<BTreeMap<String, PpFormula>> {
    let m = chain_middles(n, w)?;
    let mut defs = BTreeMap::new();
    for pattern in patterns {
        if pattern.len() != n {
            return Err(Error::WidthViolation(format!(
                "pattern has width {}, expected {n}",
                pattern.len()
            )));
        }
        let mut atoms = Vec::with_capacity(m + 2);
        let mut first_signs: Vec<bool> = pattern[..w - 1].to_vec();
        first_signs.push(false);
        let mut first_args: Vec<Var> = (0..w - 1).map(Var::Free).collect();
        first_args.push(Var::Exist(0));
        atoms.push(Atom::Rel {
            symbol: pattern_symbol(w, &first_signs),
            args: first_args,
        });
        for j in 0..m {
            let start = (w - 1) + j * (w - 2);
            let mut signs = vec![true];
            signs.extend_from_slice(&pattern[start..start + (w - 2)]);
            signs.push(false);
            let mut args = vec![Var::Exist(j)];
            args.extend((start..start + (w - 2)).map(Var::Free));
            args.push(Var::Exist(j + 1));
            atoms.push(Atom::Rel {
                symbol: pattern_symbol(w, &signs),
                args,
            });
        }
        let mut last_signs = vec![true];
        last_signs.extend_from_slice(&pattern[n - (w - 1)..]);
        let mut last_args = vec![Var::Exist(m)];
        last_args.extend((n - (w - 1)..n).map(Var::Free));
        atoms.push(Atom::Rel {
            symbol: pattern_symbol(w, &last_signs),
            args: last_args,
        });
        defs.insert(
            pattern_symbol(n, pattern),
            PpFormula::new(n, m + 1, atoms)?,
        );
    }
    Ok(defs)
}

// ---------------------------------------------------------------------------
// Arrow diagrams
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ArrowDir {
    Left,
    Right,
}

/// How a convergent interval gets satisfied, if it can be.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stabilizer {
    /// Set this open variable to the value making its literal true.
    Assign { variable: usize, value: bool },
    /// An open literal in the interval is already true under the assignment.
    AlreadyTrue { variable: usize },
    /// Every open literal in the interval is assigned and false.
    Unavailable,
}

/// Arrow diagram for one clause family under a partial assignment. Positions
/// run 0 (left end) through family length (right end); interior position j
/// sits between chain clauses j-1 and j and carries an arrow exactly when the
/// linking fresh variable of clause j-1 is assigned.
#[derive(Debug, Clone)]
pub struct ArrowDiagram {
    pub arrows: Vec<(usize, ArrowDir)>,
    /// Convergent pairs: consecutive arrows pointing right then left, given
    /// by their boundary positions.
    pub convergent: Vec<(usize, usize)>,
    /// One stabilizer per convergent pair, in order.
    pub stabilizers: Vec<Stabilizer>,
    /// True when some convergent interval cannot be satisfied.
    pub failed: bool,
}

/// Builds the arrow diagram of `reduction.families[family]` under the partial
/// assignment `nu`. `nu` may mention only variables occurring in the family's
/// clauses (open or fresh); anything else is rejected.
pub fn arrow_diagram(
    reduction: &SatReduction,
    family: usize,
    nu: &BTreeMap<usize, bool>,
) -> Result<ArrowDiagram> {
    let fam = reduction
        .families
        .get(family)
        .ok_or_else(|| Error::InvalidParameter(format!("no clause family {family}")))?;
    let chain: Vec<&Vec<(usize, bool)>> = fam
        .clauses
        .iter()
        .map(|&ci| &reduction.instance.clauses()[ci])
        .collect();
    let mut in_family: BTreeSet<usize> = BTreeSet::new();
    for clause in &chain {
        in_family.extend(clause.iter().map(|&(v, _)| v));
    }
    for &v in nu.keys() {
        if !in_family.contains(&v) {
            return Err(Error::InvalidParameter(format!(
                "assignment mentions variable {v}, which does not occur in family {family}"
            )));
        }
    }

    let t = chain.len();
    let mut arrows = vec![(0, ArrowDir::Right)];
    for j in 1..t {
        match nu.get(&fam.fresh_vars[j - 1]) {
            Some(false) => arrows.push((j, ArrowDir::Left)),
            Some(true) => arrows.push((j, ArrowDir::Right)),
            None => {}
        }
    }
    arrows.push((t, ArrowDir::Left));

    let mut convergent = Vec::new();
    let mut stabilizers = Vec::new();
    let mut failed = false;
    let fresh: BTreeSet<usize> = fam.fresh_vars.iter().copied().collect();
    for pair in arrows.windows(2) {
        let ((p, dp), (q, dq)) = (pair[0], pair[1]);
        if dp != ArrowDir::Right || dq != ArrowDir::Left {
            continue;
        }
        convergent.push((p, q));
        // The interval's chain clauses must be satisfied by an open literal.
        let mut already_true = None;
        let mut first_unassigned = None;
        'scan: for clause in &chain[p..q] {
            for &(v, negated) in clause.iter() {
                if fresh.contains(&v) {
                    continue;
                }
                match nu.get(&v) {
                    Some(&value) => {
                        if value != negated {
                            already_true = Some(v);
                            break 'scan;
                        }
                    }
                    None => {
                        if first_unassigned.is_none() {
                            first_unassigned = Some((v, !negated));
                        }
                    }
                }
            }
        }
        stabilizers.push(match (already_true, first_unassigned) {
            (Some(variable), _) => Stabilizer::AlreadyTrue { variable },
            (None, Some((variable, value))) => Stabilizer::Assign { variable, value },
            (None, None) => {
                failed = true;
                Stabilizer::Unavailable
            }
        });
    }
    Ok(ArrowDiagram {
        arrows,
        convergent,
        stabilizers,
        failed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solve;
    use crate::structure::PartialAssignment;

    fn positive_clause(vars: &[usize]) -> Vec<(usize, bool)> {
        vars.iter().map(|&v| (v, false)).collect()
    }

    #[test]
    fn dimacs_round_trip_is_byte_exact() {
        let text = "p cnf 3 1\n1 -2 3 0\n";
        let inst = dimacs_import(text).unwrap();
        assert_eq!(
            inst.clauses(),
            &[vec![(0, false), (1, true), (2, false)]]
        );
        assert_eq!(dimacs_export(&inst), text);
        assert_eq!(dimacs_import(&dimacs_export(&inst)).unwrap(), inst);
    }

    #[test]
    fn dimacs_rejects_mixed_widths_with_guidance() {
        let err = dimacs_import("p cnf 3 2\n1 2 3 0\n1 2 0\n").unwrap_err();
        match err {
            Error::WidthViolation(msg) => assert!(msg.contains("uniform-width")),
            other => panic!("expected width violation, got {other}"),
        }
    }

    #[test]
    fn dimacs_accepts_comments_and_validates_counts() {
        let inst = dimacs_import("c a comment\np cnf 2 1\n-1 -2 0\n").unwrap();
        assert_eq!(inst.num_vars(), 2);
        assert!(dimacs_import("p cnf 2 2\n1 2 0\n").is_err());
        assert!(dimacs_import("p cnf 1 1\n2 0\n").is_err());
    }

    #[test]
    fn structure_satisfiability_matches_direct_evaluation() {
        // x1 & ~x1 as two unit-ish width-3 clauses is unsatisfiable; a mixed
        // instance is satisfiable.
        let unsat = SignedClauseInstance::new(
            1,
            3,
            vec![
                vec![(0, false), (0, false), (0, false)],
                vec![(0, true), (0, true), (0, true)],
            ],
        )
        .unwrap();
        let sat = SignedClauseInstance::new(
            2,
            3,
            vec![
                vec![(0, false), (1, true), (1, true)],
                vec![(0, true), (1, false), (0, true)],
            ],
        )
        .unwrap();
        for inst in [&unsat, &sat] {
            let direct = !inst.satisfying_assignments(Budget::default()).unwrap().is_empty();
            let b = inst.to_structure().unwrap();
            let t = inst.template().unwrap();
            let hom = solve::find_homomorphism(
                &b,
                &t,
                &PartialAssignment::new(),
                Budget::default(),
            )
            .unwrap();
            assert_eq!(direct, hom.is_some());
        }
    }

    #[test]
    fn one_in_three_definitions_match_clause_truth() {
        let template = one_in_three_signed_template();
        let defs = one_in_three_definitions();
        for mask in 0..8u32 {
            let s = [mask & 1 == 1, mask >> 1 & 1 == 1, mask >> 2 & 1 == 1];
            let def = &defs[&pattern_symbol(3, &s)];
            for a in crate::util::k_tuples(2, 3) {
                let clause_true = (0..3).any(|i| (a[i] == 1) != s[i]);
                let defined = def.holds(&template, &a, Budget::default()).unwrap();
                assert_eq!(clause_true, defined, "pattern {s:?} assignment {a:?}");
            }
        }
    }

    #[test]
    fn amplification_at_zero_is_identity() {
        let inst = SignedClauseInstance::new(
            3,
            3,
            vec![vec![(0, false), (1, true), (2, false)]],
        )
        .unwrap();
        assert_eq!(gottlob_amplify(&inst, 0).unwrap(), inst);
    }

    #[test]
    fn amplification_counts_and_numbering() {
        let inst = SignedClauseInstance::new(
            3,
            3,
            vec![vec![(0, false), (1, true), (2, false)]],
        )
        .unwrap();
        let amp = gottlob_amplify(&inst, 1).unwrap();
        assert_eq!(amp.num_vars(), 9);
        assert_eq!(amp.width(), 6);
        assert_eq!(amp.clauses().len(), 27);
        // First clause takes the lexicographically least subsets {0,1} in
        // every slot: copies 0,1 of each source variable, signs inherited.
        assert_eq!(
            amp.clauses()[0],
            vec![
                (0, false),
                (1, false),
                (3 + 0, true),
                (3 + 1, true),
                (6 + 0, false),
                (6 + 1, false),
            ]
        );
    }

    #[test]
    fn amplification_preserves_satisfiability_both_ways() {
        let sat = SignedClauseInstance::new(
            2,
            3,
            vec![
                vec![(0, false), (1, false), (1, false)],
                vec![(0, true), (1, true), (1, true)],
            ],
        )
        .unwrap();
        let unsat = SignedClauseInstance::new(
            1,
            3,
            vec![
                vec![(0, false), (0, false), (0, false)],
                vec![(0, true), (0, true), (0, true)],
            ],
        )
        .unwrap();
        for (inst, expect) in [(&sat, true), (&unsat, false)] {
            let amp = gottlob_amplify(inst, 1).unwrap();
            let got = !amp.satisfying_assignments(Budget::default()).unwrap().is_empty();
            assert_eq!(got, expect);
        }
    }

    #[test]
    fn chain_shapes_match_width_arithmetic() {
        let six = SignedClauseInstance::new(6, 6, vec![positive_clause(&[0, 1, 2, 3, 4, 5])])
            .unwrap();
        let red = reduce_to_3sat(&six).unwrap();
        assert_eq!(red.instance.clauses().len(), 4);
        assert_eq!(red.families[0].fresh_vars, vec![6, 7, 8]);
        assert_eq!(
            red.instance.clauses()[0],
            vec![(0, false), (1, false), (6, false)]
        );
        assert_eq!(
            red.instance.clauses()[1],
            vec![(6, true), (2, false), (7, false)]
        );
        assert_eq!(
            red.instance.clauses()[3],
            vec![(8, true), (4, false), (5, false)]
        );

        let four = SignedClauseInstance::new(4, 4, vec![positive_clause(&[0, 1, 2, 3])]).unwrap();
        let red4 = reduce_to_3sat(&four).unwrap();
        assert_eq!(red4.instance.clauses().len(), 2);
        assert_eq!(red4.families[0].fresh_vars.len(), 1);

        let twelve =
            SignedClauseInstance::new(12, 12, vec![positive_clause(&(0..12).collect::<Vec<_>>())])
                .unwrap();
        let red12 = reduce_to_nsat(&twelve, 4).unwrap();
        assert_eq!(red12.instance.clauses().len(), 5);
        assert_eq!(red12.families[0].fresh_vars.len(), 4);
        assert_eq!(red12.instance.width(), 4);

        let seven =
            SignedClauseInstance::new(7, 7, vec![positive_clause(&(0..7).collect::<Vec<_>>())])
                .unwrap();
        assert!(matches!(
            reduce_to_nsat(&seven, 4),
            Err(Error::WidthViolation(_))
        ));
    }

    #[test]
    fn chain_solutions_project_onto_source_solutions() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0xc1a5e);
        for _ in 0..6 {
            let clauses: Vec<Vec<(usize, bool)>> = (0..2)
                .map(|_| {
                    (0..6)
                        .map(|_| (rng.gen_range(0..5usize), rng.gen_bool(0.5)))
                        .collect()
                })
                .collect();
            let src = SignedClauseInstance::new(5, 6, clauses).unwrap();
            let red = reduce_to_3sat(&src).unwrap();
            let source_solutions: BTreeSet<Vec<bool>> = src
                .satisfying_assignments(Budget::default())
                .unwrap()
                .into_iter()
                .collect();
            let projected: BTreeSet<Vec<bool>> = red
                .instance
                .satisfying_assignments(Budget::default())
                .unwrap()
                .into_iter()
                .map(|a| a[..red.open_vars].to_vec())
                .collect();
            assert_eq!(source_solutions, projected);
        }
    }

    #[test]
    fn chain_definitions_agree_with_clause_reduction() {
        let src = SignedClauseInstance::new(
            6,
            6,
            vec![
                vec![
                    (0, false),
                    (1, true),
                    (2, false),
                    (3, false),
                    (4, true),
                    (5, false),
                ],
                positive_clause(&[5, 4, 3, 2, 1, 0]),
            ],
        )
        .unwrap();
        let red = reduce_to_3sat(&src).unwrap();
        let defs = nsat_definitions(6, 3, &src.patterns()).unwrap();
        let out = reduce::pp_reduce(&src.to_structure().unwrap(), &defs).unwrap();
        let chain_structure = red.instance.to_structure().unwrap();
        assert_eq!(out.structure.universe(), chain_structure.universe());
        assert_eq!(out.structure.total_tuples(), chain_structure.total_tuples());
        let count_pp = solve::count_homomorphisms(
            &out.structure,
            &clause_template(3, &out_patterns(&out.structure)).unwrap(),
            Budget::default(),
        )
        .unwrap();
        let count_chain = solve::count_homomorphisms(
            &chain_structure,
            &red.instance.template().unwrap(),
            Budget::default(),
        )
        .unwrap();
        assert_eq!(count_pp, count_chain);
    }

    fn out_patterns(s: &Structure) -> Vec<Vec<bool>> {
        s.signature()
            .symbols()
            .map(|(name, _)| {
                name.rsplit('_')
                    .next()
                    .unwrap()
                    .chars()
                    .map(|c| c == '1')
                    .collect()
            })
            .collect()
    }

    #[test]
    fn reduction_output_view_tracks_provenance() {
        let src = SignedClauseInstance::new(6, 6, vec![positive_clause(&[0, 1, 2, 3, 4, 5])])
            .unwrap();
        let red = reduce_to_3sat(&src).unwrap();
        let out = red.reduction_output().unwrap();
        assert_eq!(out.structure.universe(), 9);
        assert_eq!(out.open_element(3), Some(3));
        assert_eq!(
            out.element_provenance[6],
            reduce::Provenance::Existential {
                hyperedge: 0,
                position: 0
            }
        );
        assert_eq!(out.hyperedge_provenance.len(), 4);
    }

    fn worked_example() -> SatReduction {
        let src = SignedClauseInstance::new(6, 6, vec![positive_clause(&[0, 1, 2, 3, 4, 5])])
            .unwrap();
        reduce_to_3sat(&src).unwrap()
    }

    #[test]
    fn arrow_diagram_worked_example() {
        // Chain (a1 a2 b1)(~b1 a3 b2)(~b2 a4 b3)(~b3 a5 a6) with
        // b1=0, b2=1, b3=0, a1=0 stabilizes via a2:=1 and a4:=1.
        let red = worked_example();
        let nu = BTreeMap::from([(6, false), (7, true), (8, false), (0, false)]);
        let d = arrow_diagram(&red, 0, &nu).unwrap();
        assert_eq!(
            d.arrows,
            vec![
                (0, ArrowDir::Right),
                (1, ArrowDir::Left),
                (2, ArrowDir::Right),
                (3, ArrowDir::Left),
                (4, ArrowDir::Left),
            ]
        );
        assert_eq!(d.convergent, vec![(0, 1), (2, 3)]);
        assert_eq!(
            d.stabilizers,
            vec![
                Stabilizer::Assign {
                    variable: 1,
                    value: true
                },
                Stabilizer::Assign {
                    variable: 3,
                    value: true
                },
            ]
        );
        assert!(!d.failed);
    }

    #[test]
    fn arrow_diagram_empty_assignment_has_end_arrows_only() {
        let red = worked_example();
        let d = arrow_diagram(&red, 0, &BTreeMap::new()).unwrap();
        assert_eq!(d.arrows, vec![(0, ArrowDir::Right), (4, ArrowDir::Left)]);
        assert_eq!(d.convergent, vec![(0, 4)]);
        assert_eq!(
            d.stabilizers,
            vec![Stabilizer::Assign {
                variable: 0,
                value: true
            }]
        );
    }

    #[test]
    fn arrow_diagram_reports_unsatisfiable_interval() {
        let red = worked_example();
        let nu = BTreeMap::from([(0, false), (1, false), (6, false)]);
        let d = arrow_diagram(&red, 0, &nu).unwrap();
        assert_eq!(
            d.arrows,
            vec![(0, ArrowDir::Right), (1, ArrowDir::Left), (4, ArrowDir::Left)]
        );
        assert_eq!(d.convergent, vec![(0, 1)]);
        assert_eq!(d.stabilizers, vec![Stabilizer::Unavailable]);
        assert!(d.failed);
    }

    #[test]
    fn arrow_diagram_sees_already_satisfied_interval() {
        let red = worked_example();
        let nu = BTreeMap::from([(0, true), (6, false)]);
        let d = arrow_diagram(&red, 0, &nu).unwrap();
        assert_eq!(d.convergent, vec![(0, 1)]);
        assert_eq!(d.stabilizers, vec![Stabilizer::AlreadyTrue { variable: 0 }]);
        assert!(!d.failed);
    }

    #[test]
    fn arrow_diagram_rejects_foreign_variables() {
        let red = worked_example();
        let nu = BTreeMap::from([(20, true)]);
        assert!(matches!(
            arrow_diagram(&red, 0, &nu),
            Err(Error::InvalidParameter(_))
        ));
    }
}
