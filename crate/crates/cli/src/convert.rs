//! JSON forms for values the library keeps as plain Rust types: operation
//! tables, strategies, clause instances, and decision witnesses.

use std::collections::BTreeSet;

use antcsp::error::{Error, Result};
use antcsp::poly::OperationTable;
use antcsp::reflect::{FrozenReport, ImpliedConstraints};
use antcsp::robust::{NoReason, RobustVerdict};
use antcsp::sat::{pattern_symbol, SignedClauseInstance};
use antcsp::strategy::Strategy;
use antcsp::{PartialAssignment, Structure};
use serde_json::{json, Value};

fn field<'a>(v: &'a Value, key: &str, what: &str) -> Result<&'a Value> {
    v.get(key)
        .ok_or_else(|| Error::parse(what, format!("missing field {key:?}")))
}

fn as_usize(v: &Value, what: &str) -> Result<usize> {
    v.as_u64()
        .map(|n| n as usize)
        .ok_or_else(|| Error::parse(what, "expected a nonnegative integer"))
}

// ----- operation tables -----

pub fn table_to_json(t: &OperationTable) -> Value {
    json!({"arity": t.arity(), "domain": t.domain(), "table": t.table()})
}

pub fn table_from_str(text: &str) -> Result<OperationTable> {
    let what = "operation table";
    let v: Value = serde_json::from_str(text).map_err(|e| Error::parse(what, e.to_string()))?;
    let arity = as_usize(field(&v, "arity", what)?, what)?;
    let domain = as_usize(field(&v, "domain", what)?, what)?;
    let entries = field(&v, "table", what)?
        .as_array()
        .ok_or_else(|| Error::parse(what, "field \"table\" must be an array"))?;
    let mut table = Vec::with_capacity(entries.len());
    for e in entries {
        table.push(as_usize(e, what)?);
    }
    OperationTable::new(arity, domain, table)
}

// ----- partial assignments and strategies -----

pub fn assignment_to_json(a: &PartialAssignment) -> Value {
    Value::Array(a.iter().map(|(e, v)| json!([e, v])).collect())
}

fn assignment_from_json(v: &Value, what: &str) -> Result<PartialAssignment> {
    let arr = v
        .as_array()
        .ok_or_else(|| Error::parse(what, "expected an array of [element, value] pairs"))?;
    let mut out = PartialAssignment::new();
    for pair in arr {
        let pair = pair
            .as_array()
            .filter(|p| p.len() == 2)
            .ok_or_else(|| Error::parse(what, "each entry must be an [element, value] pair"))?;
        out.set(as_usize(&pair[0], what)?, as_usize(&pair[1], what)?);
    }
    Ok(out)
}

pub fn strategy_to_json(s: &Strategy) -> Value {
    json!({
        "j": s.j(),
        "members": s.members().map(|m| assignment_to_json(&m)).collect::<Vec<_>>(),
    })
}

pub fn strategy_from_str(text: &str) -> Result<Strategy> {
    let what = "strategy";
    let v: Value = serde_json::from_str(text).map_err(|e| Error::parse(what, e.to_string()))?;
    let j = as_usize(field(&v, "j", what)?, what)?;
    let members = field(&v, "members", what)?
        .as_array()
        .ok_or_else(|| Error::parse(what, "field \"members\" must be an array"))?;
    let mut parsed = Vec::with_capacity(members.len());
    for m in members {
        parsed.push(assignment_from_json(m, what)?);
    }
    Strategy::new(j, parsed)
}

// ----- decision witnesses -----

/// Splits a robustness verdict into its truth and a details object carrying
/// the failure level and counterexample, if any.
pub fn verdict_details(v: &RobustVerdict) -> (bool, Value) {
    match v {
        RobustVerdict::Yes => (true, json!({})),
        RobustVerdict::No {
            reason,
            level,
            counterexample,
        } => {
            let mut d = serde_json::Map::new();
            d.insert(
                "reason".into(),
                json!(match reason {
                    NoReason::Unsatisfiable => "unsatisfiable",
                    NoReason::NonExtendable => "non-extendable",
                }),
            );
            d.insert("level".into(), json!(level));
            if let Some((subset, map)) = counterexample {
                d.insert(
                    "counterexample".into(),
                    json!({"subset": subset, "assignment": assignment_to_json(map)}),
                );
            }
            (false, Value::Object(d))
        }
    }
}

/// Per-relation tuple sets keyed by symbol name, in signature order.
fn tuples_by_symbol(s: &Structure, tuples: &[BTreeSet<Vec<usize>>]) -> Value {
    let mut out = serde_json::Map::new();
    for (idx, (name, _)) in s.signature().symbols().enumerate() {
        let list: Vec<Value> = tuples[idx].iter().map(|t| json!(t)).collect();
        out.insert(name.to_string(), Value::Array(list));
    }
    Value::Object(out)
}

pub fn frozen_to_json(instance: &Structure, r: &FrozenReport) -> Value {
    let pairs: Vec<Value> = r
        .equalities
        .iter()
        .filter(|(a, b)| a < b)
        .map(|&(a, b)| json!([a, b]))
        .collect();
    json!({
        "trivial": r.is_trivial(),
        "tuples": tuples_by_symbol(instance, &r.tuples),
        "merged_pairs": pairs,
        "classes": r.classes,
    })
}

pub fn implied_to_json(instance: &Structure, c: &ImpliedConstraints) -> Value {
    json!({
        "tuples": tuples_by_symbol(instance, &c.tuples),
        "pairs": c.pairs.iter().map(|&(a, b)| json!([a, b])).collect::<Vec<_>>(),
    })
}

// ----- clause instances -----

/// Inverse of the structure view of a clause instance. Every relation symbol
/// must be a width-uniform pattern name `R<width>_<bits>`; each hyperedge
/// becomes one clause with the pattern as its polarities.
pub fn structure_to_clauses(s: &Structure) -> Result<SignedClauseInstance> {
    let what = "clause structure";
    let mut width: Option<usize> = None;
    let mut patterns: Vec<Vec<bool>> = Vec::new();
    for (name, arity) in s.signature().symbols() {
        let bad = || Error::parse(what, format!("relation {name:?} is not a pattern symbol"));
        let rest = name.strip_prefix('R').ok_or_else(bad)?;
        let (w, bits) = rest.split_once('_').ok_or_else(bad)?;
        let w: usize = w.parse().map_err(|_| bad())?;
        let pattern: Vec<bool> = bits
            .chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                _ => Err(bad()),
            })
            .collect::<Result<_>>()?;
        if w != arity || pattern.len() != w || pattern_symbol(w, &pattern) != *name {
            return Err(bad());
        }
        if *width.get_or_insert(w) != w {
            return Err(Error::parse(what, "pattern relations have mixed widths"));
        }
        patterns.push(pattern);
    }
    let width = width.ok_or_else(|| Error::parse(what, "no pattern relations"))?;
    let mut clauses = Vec::new();
    for (idx, pattern) in patterns.iter().enumerate() {
        for tuple in s.tuples(idx) {
            clauses.push(tuple.iter().zip(pattern).map(|(&v, &n)| (v, n)).collect());
        }
    }
    SignedClauseInstance::new(s.universe(), width, clauses)
}
