//! Primitive-positive formulae: existentially quantified conjunctions of
//! relation atoms and equalities. A formula has `free` variables x1..xk and
//! `exists` variables y1..ym; the empty conjunction is legal and true.
//!
//! Formulae are compared and deduplicated in canonical form: atoms sorted,
//! equalities oriented, existential variables renamed by a color-refinement
//! pass with exhaustive tie-breaking inside symmetric groups. Free variables
//! are never renamed; their order is the formula's interface.

use std::collections::BTreeMap;

use crate::budget::Budget;
use crate::error::{Error, Result};
use crate::solve;
use crate::structure::{PartialAssignment, Signature, Structure, UnionFind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Var {
    Free(usize),
    Exist(usize),
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Atom {
    Rel { symbol: String, args: Vec<Var> },
    Eq(Var, Var),
}

impl Atom {
    pub fn vars(&self) -> Vec<Var> {
        match self {
            Atom::Rel { args, .. } => args.clone(),
            Atom::Eq(a, b) => vec![*a, *b],
        }
    }

    pub(crate) fn map_vars(&self, f: &mut impl FnMut(Var) -> Var) -> Atom {
        match self {
            Atom::Rel { symbol, args } => Atom::Rel {
                symbol: symbol.clone(),
                args: args.iter().map(|&v| f(v)).collect(),
            },
            Atom::Eq(a, b) => Atom::Eq(f(*a), f(*b)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PpFormula {
    free: usize,
    exists: usize,
    atoms: Vec<Atom>,
}

// Tie groups larger than this would need too many permutations to break
// exhaustively; the toolkit's formulae stay far below it.
const CANON_PERMUTATION_CAP: usize = 40_320;

impl PpFormula {
    pub fn new(free: usize, exists: usize, atoms: Vec<Atom>) -> Result<PpFormula> {
        for atom in &atoms {
            for v in atom.vars() {
                let ok = match v {
                    Var::Free(i) => i < free,
                    Var::Exist(j) => j < exists,
                };
                if !ok {
                    return Err(Error::InvalidParameter(format!(
                        "atom references {v:?} outside the declared variables"
                    )));
                }
            }
            if let Atom::Rel { symbol, args } = atom {
                if args.is_empty() {
                    return Err(Error::ArityMismatch(format!(
                        "atom over {symbol:?} has no arguments"
                    )));
                }
            }
        }
        Ok(PpFormula {
            free,
            exists,
            atoms,
        }
        .canonical())
    }

    /// Fundamental atom formula r(x1..xn).
    pub fn fundamental(symbol: &str, arity: usize) -> PpFormula {
        PpFormula::new(
            arity,
            0,
            vec![Atom::Rel {
                symbol: symbol.to_string(),
                args: (0..arity).map(Var::Free).collect(),
            }],
        )
        .expect("fundamental atom is well-formed")
    }

    /// Empty conjunction on `free` variables; true everywhere.
    pub fn truth(free: usize) -> PpFormula {
        PpFormula {
            free,
            exists: 0,
            atoms: Vec::new(),
        }
    }

    pub fn free(&self) -> usize {
        self.free
    }

    pub fn exists(&self) -> usize {
        self.exists
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn is_empty_conjunction(&self) -> bool {
        self.atoms.is_empty()
    }

    /// Checks every atom's symbol and arity against a signature.
    pub fn validate_against(&self, sig: &Signature) -> Result<()> {
        for atom in &self.atoms {
            if let Atom::Rel { symbol, args } = atom {
                let arity = sig.arity_of(symbol)?;
                if args.len() != arity {
                    return Err(Error::ArityMismatch(format!(
                        "atom over {symbol:?} has {} arguments, signature says {arity}",
                        args.len()
                    )));
                }
            }
        }
        Ok(())
    }

    // ----- canonical form -----

    fn atom_sort_key(atom: &Atom, color: &[usize]) -> (u8, String, Vec<(u8, usize)>) {
        let var_key = |v: Var| match v {
            Var::Free(i) => (0u8, i),
            Var::Exist(j) => (1u8, color[j]),
        };
        match atom {
            Atom::Rel { symbol, args } => (
                0,
                symbol.clone(),
                args.iter().map(|&v| var_key(v)).collect(),
            ),
            Atom::Eq(a, b) => {
                let mut pair = [var_key(*a), var_key(*b)];
                pair.sort();
                (1, String::new(), pair.to_vec())
            }
        }
    }

    /// Canonical form: sorted deduplicated atoms with existential variables
    /// renamed to a normal numbering. Idempotent; formulae that differ only
    /// by renaming of existential variables and atom order become equal.
    pub fn canonical(&self) -> PpFormula {
        let m = self.exists;
        if m == 0 {
            let mut atoms: Vec<Atom> = self
                .atoms
                .iter()
                .map(|a| normalize_eq(a.clone()))
                .collect();
            atoms.sort();
            atoms.dedup();
            return PpFormula {
                free: self.free,
                exists: 0,
                atoms,
            };
        }

        // Color refinement over existential variables.
        let mut color = vec![0usize; m];
        loop {
            let mut sigs: Vec<(Vec<((u8, String, Vec<(u8, usize)>), usize)>, usize, usize)> =
                Vec::with_capacity(m);
            for v in 0..m {
                let mut occ = Vec::new();
                for atom in &self.atoms {
                    let key = Self::atom_sort_key(atom, &color);
                    for (pos, av) in atom.vars().into_iter().enumerate() {
                        if av == Var::Exist(v) {
                            occ.push((key.clone(), pos));
                        }
                    }
                }
                occ.sort();
                sigs.push((occ, color[v], v));
            }
            let mut ranked = sigs.clone();
            ranked.sort();
            let mut next = vec![0usize; m];
            let mut rank = 0usize;
            for i in 0..m {
                if i > 0 && (ranked[i].0 != ranked[i - 1].0 || ranked[i].1 != ranked[i - 1].1) {
                    rank += 1;
                }
                next[ranked[i].2] = rank;
            }
            if next == color {
                break;
            }
            color = next;
        }

        // Group variables by final color; exhaust permutations inside each
        // group, keeping the least relabeled atom vector.
        let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for v in 0..m {
            groups.entry(color[v]).or_default().push(v);
        }
        let groups: Vec<Vec<usize>> = groups.into_values().collect();
        let product: usize = groups
            .iter()
            .map(|g| (1..=g.len()).product::<usize>())
            .try_fold(1usize, |acc, f: usize| acc.checked_mul(f))
            .unwrap_or(usize::MAX);

        let order_for = |relabel: &[usize]| -> Vec<Atom> {
            let mut atoms: Vec<Atom> = self
                .atoms
                .iter()
                .map(|a| {
                    normalize_eq(a.map_vars(&mut |v| match v {
                        Var::Free(i) => Var::Free(i),
                        Var::Exist(j) => Var::Exist(relabel[j]),
                    }))
                })
                .collect();
            atoms.sort();
            atoms.dedup();
            atoms
        };

        let base: Vec<usize> = {
            // Positions assigned group-major so each group's labels are
            // contiguous.
            let mut relabel = vec![0usize; m];
            let mut next = 0usize;
            for g in &groups {
                for &v in g {
                    relabel[v] = next;
                    next += 1;
                }
            }
            relabel
        };

        let mut best = order_for(&base);
        let mut best_relabel = base.clone();
        if product > 1 && product <= CANON_PERMUTATION_CAP {
            let stack: Vec<Vec<Vec<usize>>> = groups
                .iter()
                .map(|g| permutations(g.len()))
                .collect::<Vec<_>>();
            // Iterate the cartesian product of group permutations.
            let mut idx = vec![0usize; groups.len()];
            loop {
                let mut relabel = vec![0usize; m];
                let mut offset = 0usize;
                for (gi, g) in groups.iter().enumerate() {
                    let perm = &stack[gi][idx[gi]];
                    for (slot, &v) in g.iter().enumerate() {
                        relabel[v] = offset + perm[slot];
                    }
                    offset += g.len();
                }
                let cand = order_for(&relabel);
                if cand < best {
                    best = cand;
                    best_relabel = relabel;
                }
                // advance
                let mut gi = 0;
                loop {
                    if gi == groups.len() {
                        idx.clear();
                        break;
                    }
                    idx[gi] += 1;
                    if idx[gi] < stack[gi].len() {
                        break;
                    }
                    idx[gi] = 0;
                    gi += 1;
                }
                if idx.is_empty() {
                    break;
                }
            }
        }
        let _ = best_relabel;

        PpFormula {
            free: self.free,
            exists: m,
            atoms: best,
        }
    }

    // ----- substitution and combination -----

    /// Substitution instance: free variable i is replaced by free variable
    /// `map[i]` of a formula on `new_free` variables. Existential variables
    /// are untouched.
    pub fn substitute_frees(&self, map: &[usize], new_free: usize) -> Result<PpFormula> {
        if map.len() != self.free {
            return Err(Error::BindingMismatch(format!(
                "substitution map covers {} of {} free variables",
                map.len(),
                self.free
            )));
        }
        for &t in map {
            if t >= new_free {
                return Err(Error::out_of_range("substitution target", t, new_free));
            }
        }
        let atoms = self
            .atoms
            .iter()
            .map(|a| {
                a.map_vars(&mut |v| match v {
                    Var::Free(i) => Var::Free(map[i]),
                    Var::Exist(j) => Var::Exist(j),
                })
            })
            .collect();
        Ok(PpFormula {
            free: new_free,
            exists: self.exists,
            atoms,
        }
        .canonical())
    }

    /// Existentially quantifies the tail x_{keep+1}..x_k, leaving `keep` free
    /// variables.
    pub fn quantify_tail(&self, keep: usize) -> Result<PpFormula> {
        if keep > self.free {
            return Err(Error::InvalidParameter(format!(
                "cannot keep {keep} free variables of {}",
                self.free
            )));
        }
        let dropped = self.free - keep;
        let old_exists = self.exists;
        let atoms = self
            .atoms
            .iter()
            .map(|a| {
                a.map_vars(&mut |v| match v {
                    Var::Free(i) if i >= keep => Var::Exist(old_exists + (i - keep)),
                    other => other,
                })
            })
            .collect();
        Ok(PpFormula {
            free: keep,
            exists: old_exists + dropped,
            atoms,
        }
        .canonical())
    }

    /// Conjunction of formulae sharing the same free variables. Existential
    /// variables are kept disjoint.
    pub fn conjoin(free: usize, parts: &[PpFormula]) -> Result<PpFormula> {
        let mut atoms = Vec::new();
        let mut offset = 0usize;
        for p in parts {
            if p.free != free {
                return Err(Error::BindingMismatch(format!(
                    "conjunct has {} free variables, expected {free}",
                    p.free
                )));
            }
            for a in &p.atoms {
                atoms.push(a.map_vars(&mut |v| match v {
                    Var::Free(i) => Var::Free(i),
                    Var::Exist(j) => Var::Exist(offset + j),
                }));
            }
            offset += p.exists;
        }
        PpFormula::new(free, offset, atoms)
    }

    // ----- evaluation -----

    /// Evaluates the formula on `structure` at `binding` (one value per free
    /// variable). Returns a witness for the existential variables when true,
    /// the least one under the engine's canonical order.
    pub fn eval(
        &self,
        structure: &Structure,
        binding: &[usize],
        budget: Budget,
    ) -> Result<Option<Vec<usize>>> {
        if binding.len() != self.free {
            return Err(Error::BindingMismatch(format!(
                "binding covers {} of {} free variables",
                binding.len(),
                self.free
            )));
        }
        for &v in binding {
            if v >= structure.universe() {
                return Err(Error::out_of_range("binding value", v, structure.universe()));
            }
        }
        self.validate_against(structure.signature())?;

        let n = self.free + self.exists;
        let var_id = |v: Var| match v {
            Var::Free(i) => i,
            Var::Exist(j) => self.free + j,
        };

        // Equalities become merged query variables.
        let mut uf = UnionFind::new(n);
        for atom in &self.atoms {
            if let Atom::Eq(a, b) = atom {
                uf.union(var_id(*a), var_id(*b));
            }
        }
        let classes = uf.classes();
        let mut class_of = vec![0usize; n];
        for (ci, class) in classes.iter().enumerate() {
            for &v in class {
                class_of[v] = ci;
            }
        }

        let mut query = Structure::new(structure.signature().clone(), classes.len());
        for atom in &self.atoms {
            if let Atom::Rel { symbol, args } = atom {
                let tuple: Vec<usize> = args.iter().map(|&v| class_of[var_id(v)]).collect();
                query.add(symbol, tuple)?;
            }
        }

        let mut seed = PartialAssignment::new();
        for (i, &val) in binding.iter().enumerate() {
            let c = class_of[i];
            if let Some(prev) = seed.get(c) {
                if prev != val {
                    // Two free variables forced equal but bound differently.
                    return Ok(None);
                }
            } else {
                seed.set(c, val);
            }
        }

        match solve::find_homomorphism(&query, structure, &seed, budget)? {
            None => Ok(None),
            Some(h) => {
                let witness = (0..self.exists)
                    .map(|j| h.map[class_of[self.free + j]])
                    .collect();
                Ok(Some(witness))
            }
        }
    }

    pub fn holds(&self, structure: &Structure, binding: &[usize], budget: Budget) -> Result<bool> {
        Ok(self.eval(structure, binding, budget)?.is_some())
    }
}

fn normalize_eq(atom: Atom) -> Atom {
    match atom {
        Atom::Eq(a, b) if b < a => Atom::Eq(b, a),
        other => other,
    }
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    let mut items: Vec<usize> = (0..n).collect();
    heap_permute(&mut items, n, &mut out);
    out.sort();
    out
}

fn heap_permute(items: &mut Vec<usize>, k: usize, out: &mut Vec<Vec<usize>>) {
    if k == 1 {
        out.push(items.clone());
        return;
    }
    for i in 0..k {
        heap_permute(items, k - 1, out);
        if k % 2 == 0 {
            items.swap(i, k - 1);
        } else {
            items.swap(0, k - 1);
        }
    }
}

impl std::fmt::Display for Var {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Var::Free(i) => write!(f, "x{}", i + 1),
            Var::Exist(j) => write!(f, "y{}", j + 1),
        }
    }
}

impl std::fmt::Display for Atom {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Atom::Rel { symbol, args } => {
                write!(f, "{symbol}(")?;
                for (j, a) in args.iter().enumerate() {
                    if j > 0 {
                        write!(f, ",")?;
                    }
                    write!(f, "{a}")?;
                }
                write!(f, ")")
            }
            Atom::Eq(a, b) => write!(f, "{a}={b}"),
        }
    }
}

impl std::fmt::Display for PpFormula {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.exists > 0 {
            write!(f, "exists ")?;
            for j in 0..self.exists {
                if j > 0 {
                    write!(f, ",")?;
                }
                write!(f, "y{}", j + 1)?;
            }
            write!(f, " . ")?;
        }
        if self.atoms.is_empty() {
            return write!(f, "true");
        }
        for (i, atom) in self.atoms.iter().enumerate() {
            if i > 0 {
                write!(f, " & ")?;
            }
            match atom {
                Atom::Rel { symbol, args } => {
                    write!(f, "{symbol}(")?;
                    for (j, a) in args.iter().enumerate() {
                        if j > 0 {
                            write!(f, ",")?;
                        }
                        write!(f, "{a}")?;
                    }
                    write!(f, ")")?;
                }
                Atom::Eq(a, b) => write!(f, "{a}={b}")?,
            }
        }
        Ok(())
    }
}

// ----- formula sets -----

/// Canonical sorted set of pp-formulae of a common arity.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct FormulaSet {
    arity: usize,
    members: Vec<PpFormula>,
}

impl FormulaSet {
    pub fn new(arity: usize, formulas: Vec<PpFormula>) -> Result<FormulaSet> {
        let mut members: Vec<PpFormula> = Vec::new();
        for f in formulas {
            if f.free() != arity {
                return Err(Error::ArityMismatch(format!(
                    "formula has {} free variables, set has arity {arity}",
                    f.free()
                )));
            }
            members.push(f.canonical());
        }
        members.sort();
        members.dedup();
        Ok(FormulaSet { arity, members })
    }

    /// Mixed-arity collection used as a compatibility side condition: each
    /// member keeps its own free-variable count.
    pub fn mixed(formulas: Vec<PpFormula>) -> FormulaSet {
        let mut members: Vec<PpFormula> = formulas.into_iter().map(|f| f.canonical()).collect();
        members.sort();
        members.dedup();
        let arity = members.iter().map(|f| f.free()).max().unwrap_or(0);
        FormulaSet { arity, members }
    }

    pub fn empty() -> FormulaSet {
        FormulaSet {
            arity: 0,
            members: Vec::new(),
        }
    }

    /// One fundamental atom formula per signature symbol.
    pub fn fundamental(sig: &Signature) -> FormulaSet {
        let members = sig
            .symbols()
            .map(|(name, arity)| PpFormula::fundamental(name, arity))
            .collect();
        FormulaSet::mixed(members)
    }

    pub fn members(&self) -> &[PpFormula] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    /// All substitution instances of the members on k variables, canonical
    /// and deduplicated: the working set for k-ary compatibility.
    pub fn instantiate(&self, k: usize) -> Result<FormulaSet> {
        let mut out = Vec::new();
        for f in &self.members {
            let n = f.free();
            if n == 0 {
                out.push(f.clone());
                continue;
            }
            if k == 0 {
                // No maps from a nonempty variable set into the empty one.
                continue;
            }
            let mut map = vec![0usize; n];
            loop {
                out.push(f.substitute_frees(&map, k)?);
                // advance odometer
                let mut pos = 0;
                loop {
                    if pos == n {
                        map.clear();
                        break;
                    }
                    map[pos] += 1;
                    if map[pos] < k {
                        break;
                    }
                    map[pos] = 0;
                    pos += 1;
                }
                if map.is_empty() {
                    break;
                }
            }
        }
        FormulaSet::new(k, out)
    }
}

/// Conjunction of distinct k-ary instantiated formulae: the type of a tuple.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TypeFormula {
    pub k: usize,
    pub members: Vec<PpFormula>,
}

impl TypeFormula {
    pub fn as_formula(&self) -> Result<PpFormula> {
        PpFormula::conjoin(self.k, &self.members)
    }

    pub fn holds(&self, structure: &Structure, binding: &[usize], budget: Budget) -> Result<bool> {
        for m in &self.members {
            if !m.holds(structure, binding, budget)? {
                return Ok(false);
            }
        }
        Ok(true)
    }
}

/// The (k,F)-type of a tuple in a structure: the set of k-ary substitution
/// instances of F that hold at the tuple. k is the tuple length.
pub fn type_of(
    structure: &Structure,
    tuple: &[usize],
    formulas: &FormulaSet,
    budget: Budget,
) -> Result<TypeFormula> {
    let k = tuple.len();
    for &e in tuple {
        if e >= structure.universe() {
            return Err(Error::out_of_range("type tuple", e, structure.universe()));
        }
    }
    let fk = formulas.instantiate(k)?;
    let mut members = Vec::new();
    for f in fk.members() {
        if f.holds(structure, tuple, budget)? {
            members.push(f.clone());
        }
    }
    Ok(TypeFormula { k, members })
}

/// All (k,F)-types as formulae: one conjunction per subset of the k-ary
/// instantiation set, including the empty conjunction. Budget-guarded; the
/// count is 2^|F_k|.
pub fn all_types(formulas: &FormulaSet, k: usize, budget: Budget) -> Result<Vec<TypeFormula>> {
    let fk = formulas.instantiate(k)?;
    let n = fk.len();
    let mut meter = budget.meter();
    if n >= 63 {
        return Err(Error::BudgetExceeded);
    }
    meter.charge(1u64 << n)?;
    let mut out = Vec::with_capacity(1 << n);
    for mask in 0..(1u64 << n) {
        let members: Vec<PpFormula> = (0..n)
            .filter(|i| mask & (1 << i) != 0)
            .map(|i| fk.members()[i].clone())
            .collect();
        out.push(TypeFormula { k, members });
    }
    Ok(out)
}

/// Projection F|_l: every (k,F)-type, existentially quantified down to its
/// first l variables, canonicalized and deduplicated.
pub fn project_types(
    formulas: &FormulaSet,
    k: usize,
    l: usize,
    budget: Budget,
) -> Result<FormulaSet> {
    if l > k {
        return Err(Error::InvalidParameter(format!(
            "cannot project {k}-types to {l} variables"
        )));
    }
    let types = all_types(formulas, k, budget)?;
    let mut out = Vec::with_capacity(types.len());
    for t in types {
        out.push(t.as_formula()?.quantify_tail(l)?);
    }
    FormulaSet::new(l, out)
}

/// The union of the projections F|_0, .., F|_k: a mixed-arity formula set
/// closed under projection, finite whenever F is.
pub fn closure_union(formulas: &FormulaSet, k: usize, budget: Budget) -> Result<FormulaSet> {
    let mut out = Vec::new();
    for l in 0..=k {
        out.extend(project_types(formulas, k, l, budget)?.members().to_vec());
    }
    Ok(FormulaSet::mixed(out))
}

fn triple_var(v: Var, c: usize) -> Var {
    match v {
        Var::Free(i) => Var::Free(3 * i + c),
        Var::Exist(j) => Var::Exist(3 * j + c),
    }
}

/// Replaces every variable of `phi` (free and quantified alike) by a triple
/// of component copies, in place: free i becomes frees 3i, 3i+1, 3i+2. Each
/// relational atom widens to the symbol `widen` maps it to, its argument
/// list expanded component-wise to three times the arity, and each equality
/// splits into three component equalities.
pub fn triple_expand(phi: &PpFormula, widen: &BTreeMap<String, String>) -> Result<PpFormula> {
    let mut atoms = Vec::new();
    for atom in phi.atoms() {
        match atom {
            Atom::Eq(a, b) => {
                for c in 0..3 {
                    atoms.push(Atom::Eq(triple_var(*a, c), triple_var(*b, c)));
                }
            }
            Atom::Rel { symbol, args } => {
                let wide = widen
                    .get(symbol)
                    .ok_or_else(|| Error::MissingDefinition(symbol.clone()))?;
                let mut wargs = Vec::with_capacity(3 * args.len());
                for &a in args {
                    for c in 0..3 {
                        wargs.push(triple_var(a, c));
                    }
                }
                atoms.push(Atom::Rel {
                    symbol: wide.clone(),
                    args: wargs,
                });
            }
        }
    }
    PpFormula::new(3 * phi.free(), 3 * phi.exists(), atoms)
}

/// Component-triples every member of a type; the expanded type has three
/// slots per original slot, component copies adjacent.
pub fn triple_expand_type(t: &TypeFormula, widen: &BTreeMap<String, String>) -> Result<TypeFormula> {
    let members = t
        .members
        .iter()
        .map(|m| triple_expand(m, widen))
        .collect::<Result<Vec<_>>>()?;
    Ok(TypeFormula {
        k: 3 * t.k,
        members,
    })
}

/// Rewrites a formula over a defined signature into the target signature by
/// inlining each atom's definition; every inlined copy gets fresh existential
/// variables.
pub fn translate_to_target(
    psi: &PpFormula,
    defs: &BTreeMap<String, PpFormula>,
) -> Result<PpFormula> {
    let mut atoms = Vec::new();
    let mut exists = psi.exists();
    for atom in psi.atoms() {
        match atom {
            Atom::Eq(a, b) => atoms.push(Atom::Eq(*a, *b)),
            Atom::Rel { symbol, args } => {
                let def = defs
                    .get(symbol)
                    .ok_or_else(|| Error::MissingDefinition(symbol.clone()))?;
                if def.free() != args.len() {
                    return Err(Error::ArityMismatch(format!(
                        "definition of {symbol:?} has {} free variables, atom has {}",
                        def.free(),
                        args.len()
                    )));
                }
                let base = exists;
                for datom in def.atoms() {
                    atoms.push(datom.map_vars(&mut |v| match v {
                        Var::Free(i) => args[i],
                        Var::Exist(j) => Var::Exist(base + j),
                    }));
                }
                exists += def.exists();
            }
        }
    }
    PpFormula::new(psi.free(), exists, atoms)
}
