//! Claw formulae: the side conditions a pp-reduction transports from source
//! to target. A claw of arity k and bound l over a definition family and a
//! formula family F is assembled in three steps: a talon (at most k copies
//! of the open forms of the definitions, with open variables possibly glued
//! together), a wrist (an (l',F)-type, l' <= l, whose variable slots may be
//! glued onto talon opens), and an ordered choice of k of the resulting
//! unquantified variables to keep free; everything else is existentially
//! quantified. Definition-existential variables are never glued, but they
//! stay unquantified until the third step, so they are eligible to be kept
//! free.
//!
//! Variables that would end up vacuously quantified (mentioned by no atom)
//! are omitted from assembled formulae; over a nonempty template this does
//! not change the defined relation, and it keeps the enumeration free of
//! duplicates differing only by dead quantifiers. The membership test still
//! accepts formulae that carry such dead variables.

use std::collections::BTreeMap;

use itertools::Itertools;

use crate::budget::{Budget, Meter};
use crate::error::{Error, Result};
use crate::formula::{
    all_types, translate_to_target, Atom, FormulaSet, PpFormula, TypeFormula, Var,
};
use crate::util;

/// Where a wrist variable slot lands during assembly.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WristTarget {
    /// Glued onto an identification class of talon open variables.
    Class(usize),
    /// Kept as a variable of its own.
    Fresh,
}

/// One unquantified variable of a claw under construction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum FreeChoice {
    /// An identification class of talon open variables.
    Class(usize),
    /// An existential-form variable of one talon copy.
    TalonExist { copy: usize, var: usize },
    /// A wrist slot; if its target is a class this aliases that class.
    WristSlot(usize),
}

/// Explicit three-step construction of a single claw: which definitions form
/// the talon, how their open variables are glued, which type forms the
/// wrist, where each wrist slot lands, and the ordered designated tuple of
/// variables kept free.
#[derive(Debug, Clone)]
pub struct ClawSpec {
    pub talon: Vec<String>,
    /// Partition of the flattened open slots of the talon (copy order, then
    /// argument order) into identification classes.
    pub open_classes: Vec<Vec<usize>>,
    pub wrist: TypeFormula,
    pub wrist_targets: Vec<WristTarget>,
    pub frees: Vec<FreeChoice>,
}

/// Internal identity of an unquantified variable during assembly.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum PoolVar {
    Class(usize),
    TalonExist(usize, usize),
    Wrist(usize),
}

impl ClawSpec {
    fn normalize_choice(&self, choice: FreeChoice, copies: &[&PpFormula]) -> Result<PoolVar> {
        match choice {
            FreeChoice::Class(c) => {
                if c >= self.open_classes.len() {
                    return Err(Error::out_of_range("free class", c, self.open_classes.len()));
                }
                Ok(PoolVar::Class(c))
            }
            FreeChoice::TalonExist { copy, var } => {
                if copy >= copies.len() {
                    return Err(Error::out_of_range("talon copy", copy, copies.len()));
                }
                if var >= copies[copy].exists() {
                    return Err(Error::out_of_range(
                        "talon existential",
                        var,
                        copies[copy].exists(),
                    ));
                }
                Ok(PoolVar::TalonExist(copy, var))
            }
            FreeChoice::WristSlot(s) => {
                if s >= self.wrist_targets.len() {
                    return Err(Error::out_of_range("wrist slot", s, self.wrist_targets.len()));
                }
                match self.wrist_targets[s] {
                    WristTarget::Class(c) => {
                        if c >= self.open_classes.len() {
                            return Err(Error::out_of_range(
                                "wrist target class",
                                c,
                                self.open_classes.len(),
                            ));
                        }
                        Ok(PoolVar::Class(c))
                    }
                    WristTarget::Fresh => Ok(PoolVar::Wrist(s)),
                }
            }
        }
    }

    /// Builds the claw this spec describes, canonicalized. The arity is the
    /// length of `frees`.
    pub fn assemble(&self, defs: &BTreeMap<String, PpFormula>) -> Result<PpFormula> {
        let mut copies: Vec<&PpFormula> = Vec::with_capacity(self.talon.len());
        for symbol in &self.talon {
            copies.push(
                defs.get(symbol)
                    .ok_or_else(|| Error::MissingDefinition(symbol.clone()))?,
            );
        }
        let mut slot_base = Vec::with_capacity(copies.len());
        let mut total_slots = 0usize;
        for def in &copies {
            slot_base.push(total_slots);
            total_slots += def.free();
        }

        // The open identification must be an exact partition of the slots.
        let mut class_of_slot = vec![usize::MAX; total_slots];
        for (c, class) in self.open_classes.iter().enumerate() {
            if class.is_empty() {
                return Err(Error::MalformedPartition(
                    "empty identification class".into(),
                ));
            }
            for &slot in class {
                if slot >= total_slots {
                    return Err(Error::out_of_range("open slot", slot, total_slots));
                }
                if class_of_slot[slot] != usize::MAX {
                    return Err(Error::MalformedPartition(format!(
                        "open slot {slot} appears in two classes"
                    )));
                }
                class_of_slot[slot] = c;
            }
        }
        if let Some(slot) = class_of_slot.iter().position(|&c| c == usize::MAX) {
            return Err(Error::MalformedPartition(format!(
                "open slot {slot} is in no class"
            )));
        }

        if self.wrist_targets.len() != self.wrist.k {
            return Err(Error::InvalidParameter(format!(
                "wrist has {} slots but {} targets were given",
                self.wrist.k,
                self.wrist_targets.len()
            )));
        }
        let sigma = translate_to_target(&self.wrist.as_formula()?, defs)?;

        // Which variables any atom actually mentions.
        let mut class_bearing = vec![false; self.open_classes.len()];
        let mut exist_bearing: Vec<Vec<bool>> =
            copies.iter().map(|d| vec![false; d.exists()]).collect();
        for (ci, def) in copies.iter().enumerate() {
            for atom in def.atoms() {
                for v in atom.vars() {
                    match v {
                        Var::Free(o) => class_bearing[class_of_slot[slot_base[ci] + o]] = true,
                        Var::Exist(e) => exist_bearing[ci][e] = true,
                    }
                }
            }
        }
        let mut wrist_bearing = vec![false; self.wrist.k];
        for atom in sigma.atoms() {
            for v in atom.vars() {
                if let Var::Free(s) = v {
                    wrist_bearing[s] = true;
                    if let WristTarget::Class(c) = self.wrist_targets[s] {
                        class_bearing[c] = true;
                    }
                }
            }
        }

        // Free variables first, then every other atom-bearing pool variable
        // becomes existential; bare pool variables are dropped.
        let mut var_of: BTreeMap<PoolVar, Var> = BTreeMap::new();
        for (p, &choice) in self.frees.iter().enumerate() {
            let pv = self.normalize_choice(choice, &copies)?;
            if var_of.insert(pv, Var::Free(p)).is_some() {
                return Err(Error::InvalidParameter(
                    "designated free variables must be distinct".into(),
                ));
            }
        }
        let mut n_exists = 0usize;
        let mut quantify = |pv: PoolVar, bearing: bool, var_of: &mut BTreeMap<PoolVar, Var>| {
            if bearing && !var_of.contains_key(&pv) {
                var_of.insert(pv, Var::Exist(n_exists));
                n_exists += 1;
            }
        };
        for c in 0..self.open_classes.len() {
            quantify(PoolVar::Class(c), class_bearing[c], &mut var_of);
        }
        for (ci, def) in copies.iter().enumerate() {
            for e in 0..def.exists() {
                quantify(PoolVar::TalonExist(ci, e), exist_bearing[ci][e], &mut var_of);
            }
        }
        for s in 0..self.wrist.k {
            if matches!(self.wrist_targets[s], WristTarget::Fresh) {
                quantify(PoolVar::Wrist(s), wrist_bearing[s], &mut var_of);
            }
        }
        let sigma_base = n_exists;
        n_exists += sigma.exists();

        let lookup = |pv: PoolVar, var_of: &BTreeMap<PoolVar, Var>| -> Var {
            *var_of.get(&pv).expect("atom-bearing variables are assigned")
        };
        let mut atoms = Vec::new();
        for (ci, def) in copies.iter().enumerate() {
            for atom in def.atoms() {
                atoms.push(atom.map_vars(&mut |v| match v {
                    Var::Free(o) => lookup(
                        PoolVar::Class(class_of_slot[slot_base[ci] + o]),
                        &var_of,
                    ),
                    Var::Exist(e) => lookup(PoolVar::TalonExist(ci, e), &var_of),
                }));
            }
        }
        for atom in sigma.atoms() {
            atoms.push(atom.map_vars(&mut |v| match v {
                Var::Free(s) => match self.wrist_targets[s] {
                    WristTarget::Class(c) => lookup(PoolVar::Class(c), &var_of),
                    WristTarget::Fresh => lookup(PoolVar::Wrist(s), &var_of),
                },
                Var::Exist(x) => Var::Exist(sigma_base + x),
            }));
        }

        // Compact away existential indices no atom uses (dead quantifiers
        // from unused definition or wrist variables).
        let mut used = vec![false; n_exists];
        for atom in &atoms {
            for v in atom.vars() {
                if let Var::Exist(j) = v {
                    used[j] = true;
                }
            }
        }
        let mut remap = vec![usize::MAX; n_exists];
        let mut live = 0usize;
        for (j, &u) in used.iter().enumerate() {
            if u {
                remap[j] = live;
                live += 1;
            }
        }
        let atoms: Vec<Atom> = atoms
            .iter()
            .map(|a| {
                a.map_vars(&mut |v| match v {
                    Var::Exist(j) => Var::Exist(remap[j]),
                    free => free,
                })
            })
            .collect();
        Ok(PpFormula::new(self.frees.len(), live, atoms)?.canonical())
    }
}

/// One enumerated claw: the canonical formula plus the construction shape it
/// was first produced from.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct ClawFormula {
    formula: PpFormula,
    talon: Vec<String>,
    wrist_members: usize,
}

impl ClawFormula {
    pub fn formula(&self) -> &PpFormula {
        &self.formula
    }

    pub fn talon(&self) -> &[String] {
        &self.talon
    }

    pub fn wrist_members(&self) -> usize {
        self.wrist_members
    }

    pub fn into_formula(self) -> PpFormula {
        self.formula
    }
}

// Bell numbers: how many partitions a talon of n open slots admits. Anything
// larger than the table is beyond desk scale and refused via the budget.
const BELL: [u64; 15] = [
    1, 1, 2, 5, 15, 52, 203, 877, 4140, 21147, 115975, 678570, 4213597, 27644437, 190899322,
];

/// All partitions of {0..n} as restricted growth strings: entry i is the
/// class of element i, and a new class index may only follow all smaller
/// ones.
fn restricted_growth_strings(n: usize) -> Vec<Vec<usize>> {
    fn rec(i: usize, classes: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if i == cur.len() {
            out.push(cur.clone());
            return;
        }
        for c in 0..=classes {
            cur[i] = c;
            rec(i + 1, classes.max(c + 1), cur, out);
        }
    }
    let mut out = Vec::new();
    let mut cur = vec![0usize; n];
    if n == 0 {
        out.push(cur);
    } else {
        rec(0, 0, &mut cur, &mut out);
    }
    out
}

/// Enumerates, up to canonical renaming, every claw of arity `k` and bound
/// `ell` over the given definitions and formula family. The budget caps both
/// the wrist-type expansion and the number of assembled candidates.
pub fn claw_formulas(
    defs: &BTreeMap<String, PpFormula>,
    formulas: &FormulaSet,
    k: usize,
    ell: usize,
    budget: Budget,
) -> Result<Vec<ClawFormula>> {
    let mut meter = budget.meter();
    let mut wrists = Vec::new();
    for sigma in all_types(formulas, ell, budget)? {
        let translated = translate_to_target(&sigma.as_formula()?, defs)?;
        let mut occurs = vec![false; ell];
        for atom in translated.atoms() {
            for v in atom.vars() {
                if let Var::Free(s) = v {
                    occurs[s] = true;
                }
            }
        }
        let occurring: Vec<usize> = (0..ell).filter(|&s| occurs[s]).collect();
        wrists.push((sigma, occurring));
    }

    let symbols: Vec<&String> = defs.keys().collect();
    let mut out: BTreeMap<PpFormula, ClawFormula> = BTreeMap::new();
    for k_prime in 0..=k {
        for talon in symbols.iter().combinations_with_replacement(k_prime) {
            let copies: Vec<&PpFormula> = talon.iter().map(|s| &defs[s.as_str()]).collect();
            // Slots whose definition variable some atom mentions take part in
            // identification; bare ones only ever serve as free padding.
            let mut bearing_slots = Vec::new();
            let mut bare_slots = Vec::new();
            let mut exist_vars = Vec::new();
            let mut slot_base = Vec::new();
            let mut total_slots = 0usize;
            for (ci, def) in copies.iter().enumerate() {
                slot_base.push(total_slots);
                let mut free_used = vec![false; def.free()];
                let mut exist_used = vec![false; def.exists()];
                for atom in def.atoms() {
                    for v in atom.vars() {
                        match v {
                            Var::Free(o) => free_used[o] = true,
                            Var::Exist(e) => exist_used[e] = true,
                        }
                    }
                }
                for (o, &u) in free_used.iter().enumerate() {
                    if u {
                        bearing_slots.push(total_slots + o);
                    } else {
                        bare_slots.push(total_slots + o);
                    }
                }
                for (e, &u) in exist_used.iter().enumerate() {
                    exist_vars.push((ci, e, u));
                }
                total_slots += def.free();
            }

            if bearing_slots.len() >= BELL.len() {
                return Err(Error::BudgetExceeded);
            }
            meter.charge(BELL[bearing_slots.len()])?;
            for rgs in restricted_growth_strings(bearing_slots.len()) {
                let n_classes = rgs.iter().copied().max().map_or(0, |m| m + 1);
                // Bearing classes first, then one singleton per bare slot.
                let mut open_classes: Vec<Vec<usize>> = vec![Vec::new(); n_classes];
                for (i, &c) in rgs.iter().enumerate() {
                    open_classes[c].push(bearing_slots[i]);
                }
                for &slot in &bare_slots {
                    open_classes.push(vec![slot]);
                }

                for (sigma, occurring) in &wrists {
                    // Each atom-bearing wrist slot lands on a bearing class
                    // or stays fresh; the odometer walks all such maps.
                    let base = n_classes + 1;
                    let mut digits = vec![0usize; occurring.len()];
                    loop {
                        meter.tick()?;
                        let mut targets = vec![WristTarget::Fresh; ell];
                        for (i, &slot) in occurring.iter().enumerate() {
                            if digits[i] < n_classes {
                                targets[slot] = WristTarget::Class(digits[i]);
                            }
                        }

                        let mut reals: Vec<FreeChoice> =
                            (0..n_classes).map(FreeChoice::Class).collect();
                        for &(ci, e, used) in &exist_vars {
                            if used {
                                reals.push(FreeChoice::TalonExist { copy: ci, var: e });
                            }
                        }
                        for (i, &slot) in occurring.iter().enumerate() {
                            if digits[i] == n_classes {
                                reals.push(FreeChoice::WristSlot(slot));
                            }
                        }
                        let mut padding: Vec<FreeChoice> = (0..ell)
                            .filter(|s| !occurring.contains(s))
                            .map(FreeChoice::WristSlot)
                            .collect();
                        for (c, _) in bare_slots.iter().enumerate() {
                            padding.push(FreeChoice::Class(n_classes + c));
                        }
                        for &(ci, e, used) in &exist_vars {
                            if !used {
                                padding.push(FreeChoice::TalonExist { copy: ci, var: e });
                            }
                        }

                        for pad_count in 0..=padding.len().min(k) {
                            for positions in util::k_subsets(k, pad_count) {
                                for perm in reals.iter().permutations(k - pad_count) {
                                    meter.tick()?;
                                    let mut frees = Vec::with_capacity(k);
                                    let mut next_pad = 0usize;
                                    let mut next_real = 0usize;
                                    for p in 0..k {
                                        if positions.contains(&p) {
                                            frees.push(padding[next_pad]);
                                            next_pad += 1;
                                        } else {
                                            frees.push(*perm[next_real]);
                                            next_real += 1;
                                        }
                                    }
                                    let spec = ClawSpec {
                                        talon: talon.iter().map(|s| s.to_string()).collect(),
                                        open_classes: open_classes.clone(),
                                        wrist: sigma.clone(),
                                        wrist_targets: targets.clone(),
                                        frees,
                                    };
                                    let formula = spec.assemble(defs)?;
                                    out.entry(formula.clone()).or_insert_with(|| ClawFormula {
                                        formula,
                                        talon: spec.talon.clone(),
                                        wrist_members: sigma.members.len(),
                                    });
                                }
                            }
                        }

                        // Advance the odometer.
                        let mut i = 0;
                        while i < digits.len() {
                            digits[i] += 1;
                            if digits[i] < base {
                                break;
                            }
                            digits[i] = 0;
                            i += 1;
                        }
                        if i == digits.len() {
                            break;
                        }
                    }
                }
            }
        }
    }
    Ok(out.into_values().collect())
}

// ---------------------------------------------------------------------------
// Membership
// ---------------------------------------------------------------------------

/// How a formula variable is already spoken for during decomposition.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Owner {
    Vacant,
    /// Image of open-form variables: talon opens and wrist slots; any number
    /// may share it.
    Shared,
    /// Image of exactly one existential-form variable.
    Private,
}

/// One side of the decomposition search: a definition body or a translated
/// wrist member, with its variables in their roles.
struct Pattern {
    atoms: Vec<Atom>,
    frees: usize,
    exists: usize,
    bare_frees: usize,
    bare_exists: usize,
}

impl Pattern {
    fn from_formula(f: &PpFormula) -> Pattern {
        let mut free_used = vec![false; f.free()];
        let mut exist_used = vec![false; f.exists()];
        for atom in f.atoms() {
            for v in atom.vars() {
                match v {
                    Var::Free(o) => free_used[o] = true,
                    Var::Exist(e) => exist_used[e] = true,
                }
            }
        }
        Pattern {
            atoms: f.atoms().to_vec(),
            frees: f.free(),
            exists: f.exists(),
            bare_frees: free_used.iter().filter(|&&u| !u).count(),
            bare_exists: exist_used.iter().filter(|&&u| !u).count(),
        }
    }
}

#[derive(Clone)]
struct MatchState {
    owner: Vec<Owner>,
    covered: u64,
    /// Formula variables serving as images of wrist slots; each occupies one
    /// of the `ell` wrist positions.
    wrist_image: Vec<bool>,
    wrist_slots: usize,
    copies: usize,
    min_symbol: usize,
    spare_opens: usize,
    spare_exists: usize,
    spare_wrist_exists: usize,
}

#[derive(Clone)]
struct Binding {
    free: Vec<Option<usize>>,
    exist: Vec<Option<usize>>,
}

struct Target<'a> {
    free: usize,
    atoms: &'a [Atom],
    /// Var key: frees first, then existentials.
    occurs: Vec<bool>,
}

impl Target<'_> {
    fn key(&self, v: Var) -> usize {
        match v {
            Var::Free(i) => i,
            Var::Exist(j) => self.free + j,
        }
    }
}

fn bind(
    st: &mut MatchState,
    binding: &mut Binding,
    target: &Target,
    ell: usize,
    is_wrist: bool,
    pattern_var: Var,
    key: usize,
) -> bool {
    match pattern_var {
        Var::Free(s) => {
            if let Some(prev) = binding.free[s] {
                return prev == key;
            }
            if st.owner[key] == Owner::Private {
                return false;
            }
            binding.free[s] = Some(key);
            st.owner[key] = Owner::Shared;
            if is_wrist && !st.wrist_image[key] {
                if st.wrist_slots == ell {
                    return false;
                }
                st.wrist_image[key] = true;
                st.wrist_slots += 1;
            }
            true
        }
        Var::Exist(e) => {
            if let Some(prev) = binding.exist[e] {
                return prev == key;
            }
            if st.owner[key] != Owner::Vacant {
                return false;
            }
            // Wrist-member existentials stay quantified, so their images
            // cannot be free variables of the claw.
            if is_wrist && key < target.free {
                return false;
            }
            binding.exist[e] = Some(key);
            st.owner[key] = Owner::Private;
            true
        }
    }
}

fn unify_atom(
    st: &mut MatchState,
    binding: &mut Binding,
    target: &Target,
    ell: usize,
    is_wrist: bool,
    pattern_atom: &Atom,
    target_atom: &Atom,
    flip_eq: bool,
) -> bool {
    match (pattern_atom, target_atom) {
        (
            Atom::Rel { symbol: ps, args: pa },
            Atom::Rel { symbol: ts, args: ta },
        ) => {
            if flip_eq || ps != ts || pa.len() != ta.len() {
                return false;
            }
            pa.iter()
                .zip(ta.iter())
                .all(|(&pv, &tv)| bind(st, binding, target, ell, is_wrist, pv, target.key(tv)))
        }
        (Atom::Eq(p1, p2), Atom::Eq(t1, t2)) => {
            let (t1, t2) = if flip_eq { (t2, t1) } else { (t1, t2) };
            bind(st, binding, target, ell, is_wrist, *p1, target.key(*t1))
                && bind(st, binding, target, ell, is_wrist, *p2, target.key(*t2))
        }
        _ => false,
    }
}

/// Matches every atom of `pattern` onto some atom of the target, collecting
/// each complete way into `out`. `pinned` forces one pattern atom onto one
/// target atom.
#[allow(clippy::too_many_arguments)]
fn match_atoms(
    pattern: &Pattern,
    index: usize,
    pinned: Option<(usize, usize)>,
    target: &Target,
    binding: &Binding,
    st: &MatchState,
    ell: usize,
    is_wrist: bool,
    meter: &mut Meter,
    out: &mut Vec<MatchState>,
) -> Result<()> {
    meter.tick()?;
    if index == pattern.atoms.len() {
        let mut done = st.clone();
        if is_wrist {
            done.spare_wrist_exists += pattern.bare_exists;
        } else {
            done.spare_opens += pattern.bare_frees;
            done.spare_exists += pattern.bare_exists;
        }
        out.push(done);
        return Ok(());
    }
    let candidates: Vec<usize> = match pinned {
        Some((pi, ti)) if pi == index => vec![ti],
        _ => (0..target.atoms.len()).collect(),
    };
    let pattern_symbol = match &pattern.atoms[index] {
        Atom::Rel { symbol, .. } => Some(symbol),
        Atom::Eq(_, _) => None,
    };
    for t in candidates {
        // Cheap shape check before any state is cloned.
        let compatible = match (&target.atoms[t], pattern_symbol) {
            (Atom::Rel { symbol, .. }, Some(ps)) => symbol == ps,
            (Atom::Eq(_, _), None) => true,
            _ => false,
        };
        if !compatible {
            continue;
        }
        for flip in [false, true] {
            if flip && !matches!(pattern.atoms[index], Atom::Eq(_, _)) {
                continue;
            }
            let mut st2 = st.clone();
            let mut b2 = binding.clone();
            if unify_atom(
                &mut st2,
                &mut b2,
                target,
                ell,
                is_wrist,
                &pattern.atoms[index],
                &target.atoms[t],
                flip,
            ) {
                st2.covered |= 1 << t;
                match_atoms(
                    pattern, index + 1, pinned, target, &b2, &st2, ell, is_wrist, meter, out,
                )?;
            }
        }
    }
    Ok(())
}

fn fresh_binding(pattern: &Pattern) -> Binding {
    Binding {
        free: vec![None; pattern.frees],
        exist: vec![None; pattern.exists],
    }
}

/// Unquantified-variable accounting once every atom is covered: variables of
/// the formula that no atom mentions must be justified by bare pattern
/// variables or unused wrist slots, and the wrist must fit in its bound.
fn finalize(target: &Target, st: &MatchState, ell: usize) -> bool {
    let mut unused_free = 0usize;
    let mut unused_exist = 0usize;
    for (key, &occ) in target.occurs.iter().enumerate() {
        if !occ {
            if key < target.free {
                unused_free += 1;
            } else {
                unused_exist += 1;
            }
        }
    }
    let wrist_padding = ell - st.wrist_slots;
    let any_kind = st.spare_opens + st.spare_exists + wrist_padding;
    unused_free <= any_kind && unused_free + unused_exist <= any_kind + st.spare_wrist_exists
}

fn wrist_search(
    target: &Target,
    members: &[Pattern],
    st: &MatchState,
    ell: usize,
    meter: &mut Meter,
) -> Result<bool> {
    let uncovered = (0..target.atoms.len()).find(|&t| st.covered & (1 << t) == 0);
    let Some(t) = uncovered else {
        return Ok(finalize(target, st, ell));
    };
    for member in members {
        for pi in 0..member.atoms.len() {
            let mut results = Vec::new();
            match_atoms(
                member,
                0,
                Some((pi, t)),
                target,
                &fresh_binding(member),
                st,
                ell,
                true,
                meter,
                &mut results,
            )?;
            for r in results {
                if wrist_search(target, members, &r, ell, meter)? {
                    return Ok(true);
                }
            }
        }
    }
    Ok(false)
}

#[allow(clippy::too_many_arguments)]
fn talon_search(
    target: &Target,
    bodies: &[Pattern],
    members: &[Pattern],
    st: &MatchState,
    k: usize,
    ell: usize,
    meter: &mut Meter,
) -> Result<bool> {
    if wrist_search(target, members, st, ell, meter)? {
        return Ok(true);
    }
    if st.copies < k {
        for s in st.min_symbol..bodies.len() {
            let mut results = Vec::new();
            match_atoms(
                &bodies[s],
                0,
                None,
                target,
                &fresh_binding(&bodies[s]),
                st,
                ell,
                false,
                meter,
                &mut results,
            )?;
            for mut r in results {
                r.copies = st.copies + 1;
                r.min_symbol = s;
                if talon_search(target, bodies, members, &r, k, ell, meter)? {
                    return Ok(true);
                }
            }
        }
    }
    Ok(false)
}

/// Decides whether `phi` is a claw of arity `k` and bound `ell` for the
/// given definitions and formula family by searching for a three-step
/// decomposition directly on the shape of `phi`; the claw family itself is
/// never enumerated.
pub fn is_claw_formula(
    phi: &PpFormula,
    defs: &BTreeMap<String, PpFormula>,
    formulas: &FormulaSet,
    k: usize,
    ell: usize,
    budget: Budget,
) -> Result<bool> {
    let phi = phi.canonical();
    if phi.free() != k {
        return Ok(false);
    }
    if phi.atoms().len() > 60 {
        return Err(Error::BudgetExceeded);
    }
    let n_keys = phi.free() + phi.exists();
    let mut occurs = vec![false; n_keys];
    let target = Target {
        free: phi.free(),
        atoms: phi.atoms(),
        occurs: Vec::new(),
    };
    for atom in phi.atoms() {
        for v in atom.vars() {
            occurs[target.key(v)] = true;
        }
    }
    let target = Target { occurs, ..target };

    let bodies: Vec<Pattern> = defs.values().map(Pattern::from_formula).collect();
    let mut members = Vec::new();
    for f in formulas.members() {
        let translated = translate_to_target(f, defs)?;
        if !translated.atoms().is_empty() {
            members.push(Pattern::from_formula(&translated));
        }
    }

    let mut meter = budget.meter();
    let initial = MatchState {
        owner: vec![Owner::Vacant; n_keys],
        covered: 0,
        wrist_image: vec![false; n_keys],
        wrist_slots: 0,
        copies: 0,
        min_symbol: 0,
        spare_opens: 0,
        spare_exists: 0,
        spare_wrist_exists: 0,
    };
    talon_search(&target, &bodies, &members, &initial, k, ell, &mut meter)
}

/// Filter for the triple-wrist claw subfamily used when robustness must
/// survive a width regrouping of component-tripled systems: the construction
/// is accepted exactly when its wrist is the component-triple expansion of a
/// type of some arity k' over the projection of `formulas` to k' variables
/// (projected from `type_arity`-ary types), and the 3k' wrist slots are
/// glued component-wise onto k' distinct open-class triples from `triples`.
/// Wrist slots 3i, 3i+1, 3i+2 are the components of expanded variable i and
/// must land on one triple in the order given.
pub fn is_triple_wrist_spec(
    spec: &ClawSpec,
    formulas: &FormulaSet,
    type_arity: usize,
    widen: &BTreeMap<String, String>,
    triples: &[[usize; 3]],
    budget: Budget,
) -> Result<bool> {
    use std::collections::BTreeSet;

    if spec.wrist.k % 3 != 0 || spec.wrist_targets.len() != spec.wrist.k {
        return Ok(false);
    }
    let k_prime = spec.wrist.k / 3;
    if k_prime > type_arity {
        return Ok(false);
    }

    // Gluing discipline: each expanded wrist variable lands component-wise
    // on a distinct designated triple.
    let mut used = vec![false; triples.len()];
    for i in 0..k_prime {
        let classes = match (
            spec.wrist_targets[3 * i],
            spec.wrist_targets[3 * i + 1],
            spec.wrist_targets[3 * i + 2],
        ) {
            (WristTarget::Class(a), WristTarget::Class(b), WristTarget::Class(c)) => [a, b, c],
            _ => return Ok(false),
        };
        match triples.iter().position(|t| *t == classes) {
            Some(ti) if !used[ti] => used[ti] = true,
            _ => return Ok(false),
        }
    }

    // The wrist must expand some type over the k'-variable projection.
    let small = crate::formula::project_types(formulas, type_arity, k_prime, budget)?;
    let wrist_members: BTreeSet<PpFormula> =
        spec.wrist.members.iter().map(|m| m.canonical()).collect();
    for sigma in all_types(&small, k_prime, budget)? {
        let expanded = crate::formula::triple_expand_type(&sigma, widen)?;
        let members: BTreeSet<PpFormula> =
            expanded.members.iter().map(|m| m.canonical()).collect();
        if members == wrist_members {
            return Ok(true);
        }
    }
    Ok(false)
}
