//! Polymorphism search. An n-ary polymorphism of a template is a
//! homomorphism from the n-th power structure to the template, so existence
//! questions reduce to seeded homomorphism search on that indicator
//! structure. Identity systems (WNU, NU, their quasi variants, the linked
//! bounded-width pair) compile to element identifications and value seeds on
//! the indicator before the search starts.

use std::collections::BTreeMap;

use crate::budget::Budget;
use crate::error::{Error, Result};
use crate::solve;
use crate::structure::{PartialAssignment, Structure, UnionFind};
use crate::util::{k_tuples, tuple_rank};

/// A finite operation on \{0,..,domain-1\}, stored row-major: the value at
/// arguments (a_1,..,a_n) sits at index sum a_i * domain^(n-i).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OperationTable {
    arity: usize,
    domain: usize,
    table: Vec<usize>,
}

impl OperationTable {
    pub fn new(arity: usize, domain: usize, table: Vec<usize>) -> Result<OperationTable> {
        let expected = domain.pow(arity as u32);
        if table.len() != expected {
            return Err(Error::InvalidParameter(format!(
                "operation table has {} entries, expected {expected}",
                table.len()
            )));
        }
        for (i, &v) in table.iter().enumerate() {
            if v >= domain {
                return Err(Error::out_of_range(format!("table[{i}]"), v, domain));
            }
        }
        Ok(OperationTable {
            arity,
            domain,
            table,
        })
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn domain(&self) -> usize {
        self.domain
    }

    pub fn table(&self) -> &[usize] {
        &self.table
    }

    pub fn apply(&self, args: &[usize]) -> usize {
        debug_assert_eq!(args.len(), self.arity);
        self.table[tuple_rank(self.domain, args)]
    }

    /// True when applying the operation rowwise to any choice of tuples from
    /// each relation lands back in the relation.
    pub fn preserves(&self, template: &Structure, budget: Budget) -> Result<bool> {
        let mut meter = budget.meter();
        if template.universe() != self.domain {
            return Err(Error::InvalidParameter(format!(
                "operation domain {} does not match template universe {}",
                self.domain,
                template.universe()
            )));
        }
        for rel in 0..template.signature().len() {
            let arity = template.signature().arity(rel);
            let tuples: Vec<&Vec<usize>> = template.tuples(rel).collect();
            if tuples.is_empty() {
                continue;
            }
            // Odometer over one relation tuple per argument row.
            let mut choice = vec![0usize; self.arity];
            loop {
                meter.tick()?;
                let out: Vec<usize> = (0..arity)
                    .map(|pos| {
                        let args: Vec<usize> =
                            choice.iter().map(|&c| tuples[c][pos]).collect();
                        self.apply(&args)
                    })
                    .collect();
                if !template.contains(rel, &out) {
                    return Ok(false);
                }
                let mut i = self.arity;
                loop {
                    if i == 0 {
                        break;
                    }
                    i -= 1;
                    choice[i] += 1;
                    if choice[i] < tuples.len() {
                        break;
                    }
                    choice[i] = 0;
                }
                if choice.iter().all(|&c| c == 0) {
                    break;
                }
            }
        }
        Ok(true)
    }
}

/// One side of an identity: either a variable or a single application of an
/// operation symbol to variables.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Term {
    Var(char),
    App { op: usize, args: Vec<char> },
}

/// A finite system of identities over at most two variables x, y and a fixed
/// list of operation symbols. `idempotent` additionally demands
/// f(a,..,a) = a for every symbol and element.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IdentitySystem {
    arities: Vec<usize>,
    idempotent: bool,
    equations: Vec<(Term, Term)>,
}

impl IdentitySystem {
    pub fn new(
        arities: Vec<usize>,
        idempotent: bool,
        equations: Vec<(Term, Term)>,
    ) -> Result<IdentitySystem> {
        if arities.iter().any(|&n| n == 0) {
            return Err(Error::InvalidParameter(
                "operation arities must be positive".into(),
            ));
        }
        let check_term = |t: &Term| -> Result<()> {
            match t {
                Term::Var(v) if *v == 'x' || *v == 'y' => Ok(()),
                Term::Var(v) => Err(Error::InvalidParameter(format!(
                    "identity variable {v:?}, expected x or y"
                ))),
                Term::App { op, args } => {
                    let n = *arities.get(*op).ok_or_else(|| {
                        Error::InvalidParameter(format!("no operation symbol {op}"))
                    })?;
                    if args.len() != n {
                        return Err(Error::InvalidParameter(format!(
                            "operation {op} has arity {n}, applied to {} arguments",
                            args.len()
                        )));
                    }
                    for a in args {
                        if *a != 'x' && *a != 'y' {
                            return Err(Error::InvalidParameter(format!(
                                "identity variable {a:?}, expected x or y"
                            )));
                        }
                    }
                    Ok(())
                }
            }
        };
        for (lhs, rhs) in &equations {
            check_term(lhs)?;
            check_term(rhs)?;
            if matches!(lhs, Term::Var(_)) && matches!(rhs, Term::Var(_)) {
                return Err(Error::InvalidParameter(
                    "identity relates two bare variables".into(),
                ));
            }
        }
        Ok(IdentitySystem {
            arities,
            idempotent,
            equations,
        })
    }

    pub fn arities(&self) -> &[usize] {
        &self.arities
    }

    pub fn idempotent(&self) -> bool {
        self.idempotent
    }

    pub fn equations(&self) -> &[(Term, Term)] {
        &self.equations
    }

    /// No identities at all: any homomorphism from the n-th power qualifies.
    pub fn unconstrained(arity: usize) -> Result<IdentitySystem> {
        IdentitySystem::new(vec![arity], false, vec![])
    }

    /// Weak near-unanimity: idempotent w with
    /// w(y,x,..,x) = w(x,y,..,x) = .. = w(x,..,x,y).
    pub fn wnu(arity: usize) -> Result<IdentitySystem> {
        if arity < 2 {
            return Err(Error::InvalidParameter(
                "weak near-unanimity needs arity at least 2".into(),
            ));
        }
        IdentitySystem::new(vec![arity], true, wnu_equations(0, arity))
    }

    /// Quasi weak near-unanimity: the same equations without idempotence.
    pub fn quasi_wnu(arity: usize) -> Result<IdentitySystem> {
        if arity < 2 {
            return Err(Error::InvalidParameter(
                "weak near-unanimity needs arity at least 2".into(),
            ));
        }
        IdentitySystem::new(vec![arity], false, wnu_equations(0, arity))
    }

    /// Near-unanimity: w(y,x,..,x) = .. = w(x,..,x,y) = x.
    pub fn nu(arity: usize) -> Result<IdentitySystem> {
        if arity < 3 {
            return Err(Error::InvalidParameter(
                "near-unanimity needs arity at least 3".into(),
            ));
        }
        let equations = (0..arity)
            .map(|i| (one_y_app(0, arity, i), Term::Var('x')))
            .collect();
        IdentitySystem::new(vec![arity], true, equations)
    }

    /// The linked bounded-width pair: a 3-ary WNU w3 and a 4-ary WNU w4 with
    /// w3(y,x,x) = w4(y,x,x,x).
    pub fn bw_pair() -> IdentitySystem {
        let mut equations = wnu_equations(0, 3);
        equations.extend(wnu_equations(1, 4));
        equations.push((one_y_app(0, 3, 0), one_y_app(1, 4, 0)));
        IdentitySystem::new(vec![3, 4], true, equations).expect("fixed shape")
    }

    /// Named registry: `wnu:3`, `quasi-wnu:4`, `nu:3`, `none:2`, `bw-pair`.
    pub fn by_name(name: &str) -> Result<IdentitySystem> {
        let (kind, arity) = match name.split_once(':') {
            Some((kind, arity)) => {
                let arity = arity.parse::<usize>().map_err(|_| {
                    Error::InvalidParameter(format!("bad arity in identity system {name:?}"))
                })?;
                (kind, Some(arity))
            }
            None => (name, None),
        };
        match (kind, arity) {
            ("wnu", Some(n)) => IdentitySystem::wnu(n),
            ("quasi-wnu", Some(n)) => IdentitySystem::quasi_wnu(n),
            ("nu", Some(n)) => IdentitySystem::nu(n),
            ("none", Some(n)) => IdentitySystem::unconstrained(n),
            ("bw-pair", None) => Ok(IdentitySystem::bw_pair()),
            _ => Err(Error::InvalidParameter(format!(
                "unknown identity system {name:?} (try wnu:N, quasi-wnu:N, nu:N, none:N, bw-pair)"
            ))),
        }
    }
}

fn one_y_app(op: usize, arity: usize, y_at: usize) -> Term {
    Term::App {
        op,
        args: (0..arity).map(|i| if i == y_at { 'y' } else { 'x' }).collect(),
    }
}

fn wnu_equations(op: usize, arity: usize) -> Vec<(Term, Term)> {
    (1..arity)
        .map(|i| (one_y_app(op, arity, 0), one_y_app(op, arity, i)))
        .collect()
}

/// The n-th power structure: elements are n-tuples over the template
/// universe (row-major rank), and a relation holds on power elements exactly
/// when it holds coordinatewise.
pub fn indicator_instance(template: &Structure, n: usize, budget: Budget) -> Result<Structure> {
    if n == 0 {
        return Err(Error::InvalidParameter(
            "indicator power must be positive".into(),
        ));
    }
    let a = template.universe();
    let mut meter = budget.meter();
    let universe = a
        .checked_pow(n as u32)
        .ok_or(Error::BudgetExceeded)?;
    meter.charge(universe as u64)?;
    let labels: Vec<String> = k_tuples(a, n)
        .iter()
        .map(|t| {
            let parts: Vec<String> = t.iter().map(|&e| template.label(e)).collect();
            format!("({})", parts.join(","))
        })
        .collect();
    let mut power = Structure::new(template.signature().clone(), universe).with_labels(labels)?;
    for rel in 0..template.signature().len() {
        let arity = template.signature().arity(rel);
        let tuples: Vec<&Vec<usize>> = template.tuples(rel).collect();
        if tuples.is_empty() {
            continue;
        }
        // One template tuple per coordinate; coordinate i contributes the
        // i-th entry of every power element.
        let mut choice = vec![0usize; n];
        loop {
            meter.tick()?;
            let mut edge = Vec::with_capacity(arity);
            for pos in 0..arity {
                let coords: Vec<usize> = choice.iter().map(|&c| tuples[c][pos]).collect();
                edge.push(tuple_rank(a, &coords));
            }
            power.add_by_index(rel, edge)?;
            let mut i = n;
            loop {
                if i == 0 {
                    break;
                }
                i -= 1;
                choice[i] += 1;
                if choice[i] < tuples.len() {
                    break;
                }
                choice[i] = 0;
            }
            if choice.iter().all(|&c| c == 0) {
                break;
            }
        }
    }
    Ok(power)
}

/// Evaluates a term under values for x and y, reading applications from the
/// tables.
fn term_value(term: &Term, tables: &[OperationTable], x: usize, y: usize) -> usize {
    let val = |v: char| if v == 'x' { x } else { y };
    match term {
        Term::Var(v) => val(*v),
        Term::App { op, args } => {
            let args: Vec<usize> = args.iter().map(|&v| val(v)).collect();
            tables[*op].apply(&args)
        }
    }
}

/// Checks every identity of the system, including idempotence when declared,
/// against concrete tables.
pub fn check_identities(tables: &[OperationTable], system: &IdentitySystem) -> Result<bool> {
    if tables.len() != system.arities().len() {
        return Err(Error::InvalidParameter(format!(
            "{} tables given for {} operation symbols",
            tables.len(),
            system.arities().len()
        )));
    }
    let mut domain = None;
    for (t, &n) in tables.iter().zip(system.arities()) {
        if t.arity() != n {
            return Err(Error::InvalidParameter(format!(
                "table arity {} does not match symbol arity {n}",
                t.arity()
            )));
        }
        if *domain.get_or_insert(t.domain()) != t.domain() {
            return Err(Error::InvalidParameter("tables over mixed domains".into()));
        }
    }
    let domain = domain.unwrap_or(0);
    if system.idempotent() {
        for table in tables {
            for a in 0..domain {
                if table.apply(&vec![a; table.arity()]) != a {
                    return Ok(false);
                }
            }
        }
    }
    for (lhs, rhs) in system.equations() {
        for x in 0..domain {
            for y in 0..domain {
                if term_value(lhs, tables, x, y) != term_value(rhs, tables, x, y) {
                    return Ok(false);
                }
            }
        }
    }
    Ok(true)
}

pub fn check_preservation(
    table: &OperationTable,
    template: &Structure,
    budget: Budget,
) -> Result<bool> {
    table.preserves(template, budget)
}

/// Element-level view of a term application at concrete x, y: the indicator
/// element (block offset + rank) it denotes, or the fixed template value for
/// a bare variable.
enum CompiledSide {
    Element(usize),
    Value(usize),
}

fn compile_side(
    term: &Term,
    offsets: &[usize],
    a: usize,
    x: usize,
    y: usize,
) -> CompiledSide {
    let val = |v: char| if v == 'x' { x } else { y };
    match term {
        Term::Var(v) => CompiledSide::Value(val(*v)),
        Term::App { op, args } => {
            let coords: Vec<usize> = args.iter().map(|&v| val(v)).collect();
            CompiledSide::Element(offsets[*op] + tuple_rank(a, &coords))
        }
    }
}

/// Searches for operations satisfying the identity system that are
/// polymorphisms of the template. The joint indicator is the disjoint union
/// of one power per operation symbol; identities become element
/// identifications (quotiented away before the search) and value seeds, so
/// the search space is the genuinely free part of the tables. Returns the
/// lexicographically least solution tables, or None after exhaustion.
pub fn find_polymorphism(
    template: &Structure,
    system: &IdentitySystem,
    budget: Budget,
) -> Result<Option<Vec<OperationTable>>> {
    let a = template.universe();
    if a == 0 {
        return Err(Error::InvalidParameter(
            "polymorphism search needs a nonempty template".into(),
        ));
    }
    // Disjoint union of the power structures, one block per symbol.
    let mut offsets = Vec::with_capacity(system.arities().len());
    let mut total = 0usize;
    for &n in system.arities() {
        offsets.push(total);
        total += a
            .checked_pow(n as u32)
            .ok_or(Error::BudgetExceeded)?;
    }
    let mut joint = Structure::new(template.signature().clone(), total);
    for (i, &n) in system.arities().iter().enumerate() {
        let power = indicator_instance(template, n, budget)?;
        for (rel, tuple) in power.hyperedges() {
            let shifted: Vec<usize> = tuple.iter().map(|&e| offsets[i] + e).collect();
            joint.add_by_index(rel, shifted)?;
        }
    }

    // Compile identities: App = App merges elements, App = Var seeds values.
    let mut uf = UnionFind::new(total.max(1));
    let mut raw_seeds: Vec<(usize, usize)> = Vec::new();
    if system.idempotent() {
        for (i, &n) in system.arities().iter().enumerate() {
            for e in 0..a {
                raw_seeds.push((offsets[i] + tuple_rank(a, &vec![e; n]), e));
            }
        }
    }
    for (lhs, rhs) in system.equations() {
        for x in 0..a {
            for y in 0..a {
                let l = compile_side(lhs, &offsets, a, x, y);
                let r = compile_side(rhs, &offsets, a, x, y);
                match (l, r) {
                    (CompiledSide::Element(p), CompiledSide::Element(q)) => uf.union(p, q),
                    (CompiledSide::Element(p), CompiledSide::Value(v))
                    | (CompiledSide::Value(v), CompiledSide::Element(p)) => {
                        raw_seeds.push((p, v))
                    }
                    (CompiledSide::Value(_), CompiledSide::Value(_)) => unreachable!(),
                }
            }
        }
    }
    let classes = uf.classes();
    let (quotiented, class_map) = joint.quotient(&classes)?;
    let mut seed = PartialAssignment::new();
    for (element, value) in raw_seeds {
        let q = class_map[element];
        match seed.get(q) {
            Some(prior) if prior != value => return Ok(None),
            _ => seed.set(q, value),
        }
    }

    let hom = match solve::find_homomorphism(&quotiented, template, &seed, budget)? {
        Some(h) => h,
        None => return Ok(None),
    };
    let tables = system
        .arities()
        .iter()
        .enumerate()
        .map(|(i, &n)| {
            let size = a.pow(n as u32);
            let table: Vec<usize> = (0..size)
                .map(|r| hom.map[class_map[offsets[i] + r]])
                .collect();
            OperationTable::new(n, a, table)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Some(tables))
}

/// All unary polymorphisms, in lexicographic order of their value maps.
pub fn endomorphisms(template: &Structure, budget: Budget) -> Result<Vec<OperationTable>> {
    let homs = solve::all_homomorphisms(template, template, budget)?;
    homs.into_iter()
        .map(|h| OperationTable::new(1, template.universe(), h.map))
        .collect()
}

fn image_sorted(map: &[usize]) -> Vec<usize> {
    let mut image = map.to_vec();
    image.sort_unstable();
    image.dedup();
    image
}

/// A template is a core when every endomorphism is bijective.
pub fn is_core(template: &Structure, budget: Budget) -> Result<bool> {
    for endo in endomorphisms(template, budget)? {
        if image_sorted(endo.table()).len() != template.universe() {
            return Ok(false);
        }
    }
    Ok(true)
}

/// The induced substructure on a minimum-cardinality endomorphism image,
/// taken from the lexicographically least such endomorphism and iterated to
/// a genuine retraction. Elements are renumbered ascending.
pub fn core_retract(template: &Structure, budget: Budget) -> Result<Structure> {
    let endos = endomorphisms(template, budget)?;
    let least = endos
        .iter()
        .min_by_key(|e| (image_sorted(e.table()).len(), e.table().to_vec()))
        .ok_or_else(|| Error::InvalidParameter("template has no endomorphisms".into()))?;
    // A minimum-image endomorphism permutes its image, so some power of it
    // fixes the image pointwise and is a retraction onto it.
    let image = image_sorted(least.table());
    let mut order = 1usize;
    {
        // lcm of the cycle lengths of the restriction to the image.
        let mut seen = vec![false; template.universe()];
        for &start in &image {
            if seen[start] {
                continue;
            }
            let mut len = 0usize;
            let mut e = start;
            while !seen[e] {
                seen[e] = true;
                len += 1;
                e = least.table()[e];
            }
            order = order / gcd(order, len) * len;
        }
    }
    let mut retraction: Vec<usize> = (0..template.universe()).collect();
    for _ in 0..order {
        retraction = retraction.iter().map(|&e| least.table()[e]).collect();
    }
    debug_assert!(image.iter().all(|&e| retraction[e] == e));

    let mut renumber = BTreeMap::new();
    for (new, &old) in image.iter().enumerate() {
        renumber.insert(old, new);
    }
    let mut retract = Structure::new(template.signature().clone(), image.len());
    if let Some(labels) = template.labels() {
        retract = retract.with_labels(image.iter().map(|&e| labels[e].clone()).collect())?;
    }
    for (rel, tuple) in template.hyperedges() {
        if tuple.iter().all(|e| renumber.contains_key(e)) {
            retract.add_by_index(rel, tuple.iter().map(|e| renumber[e]).collect())?;
        }
    }
    Ok(retract)
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Searches for the linked bounded-width pair; both tables verify WNU
/// identities, preservation, and the link w3(y,x,x) = w4(y,x,x,x).
pub fn has_bw_pair(
    template: &Structure,
    budget: Budget,
) -> Result<Option<(OperationTable, OperationTable)>> {
    Ok(find_polymorphism(template, &IdentitySystem::bw_pair(), budget)?
        .map(|mut tables| {
            let w4 = tables.pop().expect("two tables");
            let w3 = tables.pop().expect("two tables");
            (w3, w4)
        }))
}
